// Copyright 2026 The srnas Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SRNAS_VARIATION_H_
#define SRNAS_VARIATION_H_

#include <cstddef>
#include <span>
#include <vector>

#include "srnas/cost_model.h"
#include "srnas/genome.h"
#include "srnas/random.h"

namespace srnas {

// Connection pattern of a freshly initialized model.
enum class ConnectionInit { kRandom, kDense, kNone };

// Piecewise rule on p in [0, 1): [0, p_r) random, [p_r, p_r + p_den) dense,
// otherwise none.
ConnectionInit ConnectionInitFor(double p, const SearchConfig& config);

// N models, each one operator repeated n times. Operators are drawn without
// replacement from a shuffled operator set, reshuffled once exhausted.
std::vector<Chromosome> Initialize(const SearchConfig& config, Rng& rng);

// Single-point crossover in both spaces: micro gene `micro_pos` and macro row
// `macro_row` (0-based, the whole c_{row+1}^{row+1..n} group) come from `b`.
Chromosome CrossoverAt(const Chromosome& a, const Chromosome& b,
                       std::size_t micro_pos, std::size_t macro_row);

// Same with both positions drawn uniformly and independently.
Chromosome Crossover(const Chromosome& a, const Chromosome& b, Rng& rng);

enum class MutationStrategy { kRandomMutation, kRwsFlops, kRwsParams };

// [0, p_mr) random, [p_mr, p_mf) RWS on FLOPS, [p_mf, 1) RWS on params.
MutationStrategy MutationStrategyFor(double p, const SearchConfig& config);

enum class RwsObjective { kFlops, kParams };

enum class RwsDirection { kTowardCheaper, kTowardCostlier };

struct RwsContext {
  // Width feeding the operator when it is costed in isolation.
  int input_width = 32;
  CostConventions conventions;
  RwsDirection direction = RwsDirection::kTowardCheaper;
};

// Roulette wheel over the operator set.
class RwsTable {
 public:
  RwsTable() = default;
  explicit RwsTable(std::vector<double> weights);

  const std::vector<double>& weights() const { return weights_; }
  std::size_t Sample(Rng& rng) const;

 private:
  std::vector<double> weights_;
  std::vector<double> cumulative_;
};

// Standalone cost of one operator (mult-adds at 1x1 spatial, or params).
double OperatorCost(const CellGene& gene, RwsObjective objective,
                    const RwsContext& context);

// Log-scaled weights anchored on the most expensive entry:
//   w_k ∝ log(max) - log(c_k) + eps,  eps = 1e-3 * (log(max) - log(min)).
// kTowardCostlier mirrors the anchor to the cheapest entry. Equal costs give
// uniform weights.
RwsTable RwsTableFromCosts(std::span<const double> costs, RwsDirection direction);

RwsTable MakeRwsTable(RwsObjective objective, const RwsContext& context = {});

// Applies the three-way mutation. Tables are built once per context.
class Mutator {
 public:
  explicit Mutator(const RwsContext& context = {});

  Chromosome Mutate(const Chromosome& m, const SearchConfig& config, Rng& rng,
                    MutationStrategy* chosen = nullptr) const;

  Chromosome Apply(const Chromosome& m, MutationStrategy strategy, Rng& rng) const;

  const RwsTable& flops_table() const { return flops_; }
  const RwsTable& params_table() const { return params_; }

 private:
  RwsTable flops_;
  RwsTable params_;
};

}  // namespace srnas

#endif  // SRNAS_VARIATION_H_
