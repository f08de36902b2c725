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

#include "srnas/variation.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace srnas {

ConnectionInit ConnectionInitFor(double p, const SearchConfig& config) {
  if (p < config.p_r) return ConnectionInit::kRandom;
  if (p < config.p_r + config.p_den) return ConnectionInit::kDense;
  return ConnectionInit::kNone;
}

std::vector<Chromosome> Initialize(const SearchConfig& config, Rng& rng) {
  config.Validate();
  const auto& ops = OperatorSet();
  const std::size_t n = static_cast<std::size_t>(config.n);

  std::vector<std::size_t> deck;
  std::size_t next = 0;
  auto draw_operator = [&]() {
    if (next == deck.size()) {
      deck.resize(ops.size());
      std::iota(deck.begin(), deck.end(), 0);
      // Fisher-Yates with our own uniform draw for portability.
      for (std::size_t k = deck.size() - 1; k > 0; --k) {
        std::swap(deck[k], deck[UniformIndex(rng, k + 1)]);
      }
      next = 0;
    }
    return deck[next++];
  };

  std::vector<Chromosome> out;
  out.reserve(static_cast<std::size_t>(config.population_size));
  for (int m = 0; m < config.population_size; ++m) {
    Chromosome c;
    c.micro.assign(n, ops[draw_operator()]);
    c.macro = MacroGenome(n);
    switch (ConnectionInitFor(Uniform01(rng), config)) {
      case ConnectionInit::kRandom:
        for (std::size_t b = 0; b < c.macro.size(); ++b) {
          c.macro.set_bit(b, Bernoulli(rng, 0.5));
        }
        break;
      case ConnectionInit::kDense:
        for (std::size_t b = 0; b < c.macro.size(); ++b) c.macro.set_bit(b, true);
        break;
      case ConnectionInit::kNone:
        break;
    }
    out.push_back(std::move(c));
  }
  return out;
}

Chromosome CrossoverAt(const Chromosome& a, const Chromosome& b,
                       std::size_t micro_pos, std::size_t macro_row) {
  if (a.n() != b.n()) throw std::invalid_argument("crossover of different n");
  const std::size_t n = a.n();
  if (micro_pos >= n || macro_row >= n) {
    throw std::out_of_range("crossover position out of range");
  }
  Chromosome child = a;
  child.micro[micro_pos] = b.micro[micro_pos];
  const std::size_t i = macro_row + 1;
  for (std::size_t j = i; j <= n; ++j) {
    child.macro.Set(i, j, b.macro.Get(i, j));
  }
  return child;
}

Chromosome Crossover(const Chromosome& a, const Chromosome& b, Rng& rng) {
  const std::size_t micro_pos = UniformIndex(rng, a.n());
  const std::size_t macro_row = UniformIndex(rng, a.n());
  return CrossoverAt(a, b, micro_pos, macro_row);
}

MutationStrategy MutationStrategyFor(double p, const SearchConfig& config) {
  if (p < config.p_mr) return MutationStrategy::kRandomMutation;
  if (p < config.p_mf) return MutationStrategy::kRwsFlops;
  return MutationStrategy::kRwsParams;
}

RwsTable::RwsTable(std::vector<double> weights) : weights_(std::move(weights)) {
  cumulative_.resize(weights_.size());
  std::partial_sum(weights_.begin(), weights_.end(), cumulative_.begin());
}

std::size_t RwsTable::Sample(Rng& rng) const {
  const double target = Uniform01(rng) * cumulative_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  const auto idx = static_cast<std::size_t>(it - cumulative_.begin());
  return std::min(idx, weights_.size() - 1);
}

double OperatorCost(const CellGene& gene, RwsObjective objective,
                    const RwsContext& context) {
  const Block block = MakeCellBlock(gene, context.input_width, context.conventions);
  return objective == RwsObjective::kFlops
             ? static_cast<double>(BlockMacsPerPixel(block))
             : static_cast<double>(BlockParams(block));
}

RwsTable RwsTableFromCosts(std::span<const double> costs, RwsDirection direction) {
  if (costs.empty()) throw std::invalid_argument("no costs");
  std::vector<double> logs;
  logs.reserve(costs.size());
  for (double c : costs) {
    if (!(c > 0.0) || !std::isfinite(c)) {
      throw std::invalid_argument("costs must be positive and finite");
    }
    logs.push_back(std::log(c));
  }
  const auto [lo_it, hi_it] = std::minmax_element(logs.begin(), logs.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  const double span = hi - lo;
  std::vector<double> weights(costs.size(), 1.0);
  if (span > 0.0) {
    const double eps = 1e-3 * span;
    for (std::size_t k = 0; k < logs.size(); ++k) {
      weights[k] = direction == RwsDirection::kTowardCheaper
                       ? hi - logs[k] + eps
                       : logs[k] - lo + eps;
    }
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  for (double& w : weights) w /= total;
  return RwsTable(std::move(weights));
}

RwsTable MakeRwsTable(RwsObjective objective, const RwsContext& context) {
  std::vector<double> costs;
  costs.reserve(kNumOperators);
  for (const auto& gene : OperatorSet()) {
    costs.push_back(OperatorCost(gene, objective, context));
  }
  return RwsTableFromCosts(costs, context.direction);
}

Mutator::Mutator(const RwsContext& context)
    : flops_(MakeRwsTable(RwsObjective::kFlops, context)),
      params_(MakeRwsTable(RwsObjective::kParams, context)) {}

Chromosome Mutator::Mutate(const Chromosome& m, const SearchConfig& config,
                           Rng& rng, MutationStrategy* chosen) const {
  const MutationStrategy strategy = MutationStrategyFor(Uniform01(rng), config);
  if (chosen) *chosen = strategy;
  return Apply(m, strategy, rng);
}

Chromosome Mutator::Apply(const Chromosome& m, MutationStrategy strategy,
                          Rng& rng) const {
  const auto& ops = OperatorSet();
  Chromosome child = m;
  if (strategy == MutationStrategy::kRandomMutation) {
    const std::size_t pos = UniformIndex(rng, child.n());
    const std::size_t current = OperatorIndex(child.micro[pos]);
    std::size_t pick = UniformIndex(rng, ops.size() - 1);
    if (pick >= current) ++pick;
    child.micro[pos] = ops[pick];
    child.macro.flip(UniformIndex(rng, child.macro.size()));
    return child;
  }
  const RwsTable& table =
      strategy == MutationStrategy::kRwsFlops ? flops_ : params_;
  for (auto& gene : child.micro) gene = ops[table.Sample(rng)];
  return child;
}

}  // namespace srnas
