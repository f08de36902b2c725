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

#ifndef SRNAS_PIPELINE_H_
#define SRNAS_PIPELINE_H_

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "srnas/controller.h"
#include "srnas/cost_model.h"
#include "srnas/evaluator.h"
#include "srnas/genome.h"
#include "srnas/nsga2.h"
#include "srnas/random.h"
#include "srnas/variation.h"

namespace srnas {

// Score given to individuals whose evaluation failed.
inline constexpr double kFailedScore = -1e9;

enum class EvaluatorKind { kSurrogate, kExternal };

struct RunConfig {
  SearchConfig search;
  // ceil(10000 / 64): roughly 10k models at population 64.
  int generations = 157;
  // Share of each generation's offspring sampled from the controller.
  double rl_fraction = 0.25;
  ControllerConfig controller;
  CostConventions conventions;
  RwsContext rws;

  EvaluatorKind evaluator = EvaluatorKind::kSurrogate;
  WorkerPoolConfig workers;
  TrainConfig train;

  // Written after every generation when non-empty.
  std::string checkpoint_path;

  void Validate() const;
};

nlohmann::json ToJson(const RunConfig& config);
// Missing keys keep their defaults.
RunConfig RunConfigFromJson(const nlohmann::json& j);

// Every evaluated individual exactly once, keyed by chromosome encoding, in
// first-evaluation order.
class Archive {
 public:
  bool Contains(const std::string& key) const { return index_.count(key) != 0; }
  const Individual* Find(const std::string& key) const;
  // Returns false when the key is already present.
  bool Insert(const Individual& ind);

  const std::vector<Individual>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<Individual> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct RunState {
  int generation = 0;
  Population population;
  Archive archive;
  std::unique_ptr<Controller> controller;
  Rng rng;
  RunConfig config;
  int failed_evaluations = 0;
};

nlohmann::json ToJson(const RunState& state);
RunState RunStateFromJson(const nlohmann::json& j);

void SaveCheckpoint(const RunState& state, const std::string& path);
RunState LoadCheckpoint(const std::string& path);

// Drives the generational loop. Generation 0 is the initial population;
// every later generation adds N offspring and truncates back to N.
class Search {
 public:
  Search(RunConfig config, std::unique_ptr<Evaluator> evaluator);
  Search(RunState resumed, std::unique_ptr<Evaluator> evaluator);

  // Evaluates the initial population if that has not happened yet.
  void Start();
  void Step();
  // Runs until config.generations have been completed.
  RunState& Run();

  RunState& state() { return state_; }
  const RunState& state() const { return state_; }

 private:
  std::vector<Individual> EvaluateAll(const std::vector<Chromosome>& batch,
                                      const std::string& id_prefix);
  void Checkpoint() const;

  RunState state_;
  std::unique_ptr<Evaluator> evaluator_;
  Mutator mutator_;
  bool started_ = false;
};

std::unique_ptr<Evaluator> MakeEvaluator(const RunConfig& config);

// Convenience wrapper: fresh search for `config` to completion.
RunState RunSearch(const RunConfig& config);

struct ParetoFront {
  std::vector<Individual> members;
  // True when no archive member is feasible and the front falls back to the
  // constrained-nondominated infeasible set.
  bool infeasible_fallback = false;
};

// Nondominated feasible members over (-score, mult_adds, params), ordered by
// mult_adds ascending; rank is 0 and crowding is set on every member.
ParetoFront ParetoFrontOf(std::span<const Individual> archive);

// The k members of `front` with the largest crowding distance on
// (score, mult_adds) alone; boundary members come first.
std::vector<Individual> SelectFinal(std::span<const Individual> front, std::size_t k);

// Worst value per objective: lowest score, highest mult_adds and params.
ObjectiveVector WorstPoint(std::span<const ObjectiveVector> points);

// Exact 3-objective hypervolume dominated by `points` and bounded by `ref`,
// with score maximized and the costs minimized.
double Hypervolume(std::span<const ObjectiveVector> points, const ObjectiveVector& ref);

std::string FrontCsv(const ParetoFront& front, const CostConventions& conventions);
nlohmann::json FrontJson(const ParetoFront& front, std::span<const Individual> archive,
                         const CostConventions& conventions);

}  // namespace srnas

#endif  // SRNAS_PIPELINE_H_
