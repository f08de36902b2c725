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

// Acceptance suite: one PASS/FAIL line per criterion, each with its own
// runtime budget. Exit status is non-zero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>

#include "oracles.h"
#include "srnas/controller.h"
#include "srnas/cost_model.h"
#include "srnas/evaluator.h"
#include "srnas/genome.h"
#include "srnas/nsga2.h"
#include "srnas/pipeline.h"
#include "srnas/variation.h"

namespace srnas {
namespace {

// Tolerances and budgets.
constexpr double kGradientRelTol = 1e-4;
constexpr int kGradientSeeds = 20;
constexpr double kSigmaBound = 5.0;
constexpr double kCostTolerance = 0.20;
constexpr int kNsgaPopulations = 1000;
constexpr int kVariationApplications = 100000;
constexpr int kEffectivenessSeeds = 20;
constexpr int kEffectivenessWins = 18;
constexpr int kEffectivenessPopulation = 64;
constexpr int kEffectivenessGenerations = 30;

constexpr double kBudgetSpace = 1.0;
constexpr double kBudgetOperators = 1.0;
constexpr double kBudgetNsga = 30.0;
constexpr double kBudgetGradient = 120.0;
constexpr double kBudgetVariation = 120.0;
constexpr double kBudgetCost = 1.0;
constexpr double kBudgetSearch = 300.0;
constexpr double kBudgetDeterminism = 120.0;

// Published costs of the reference models (params, mult-adds at 480x480).
constexpr double kFalsrAParams = 1021e3;
constexpr double kFalsrAMultAdds = 234.7e9;
constexpr double kFalsrBParams = 326e3;
constexpr double kFalsrBMultAdds = 74.7e9;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void Report(const std::string& name, double budget_s, const std::function<Outcome()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = check();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_budget = elapsed <= budget_s;
  const bool pass = out.pass && in_budget;
  if (!pass) ++failures;
  std::ostringstream line;
  line.setf(std::ios::fixed);
  line.precision(2);
  line << (pass ? "PASS " : "FAIL ") << name << " | " << out.detail << " | " << elapsed
       << "s of " << budget_s << "s budget";
  if (!in_budget) line << " (over budget)";
  std::cout << line.str() << std::endl;
}

std::string ReadData(const std::string& name) {
  std::ifstream in(std::string(SRNAS_TEST_DATA_DIR) + "/" + name);
  if (!in) throw std::runtime_error("missing test data " + name);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Outcome SpaceSizeCriterion() {
  using boost::multiprecision::cpp_int;
  for (unsigned n = 1; n <= 10; ++n) {
    cpp_int expected = 1;
    for (unsigned k = 0; k < n; ++k) expected *= 192;
    for (unsigned k = 0; k < n * (n + 1) / 2; ++k) expected *= 2;
    if (SpaceSize(n) != expected) return {false, "mismatch at n=" + std::to_string(n)};
  }
  for (int n = 1; n <= 2; ++n) {
    if (SpaceSize(static_cast<unsigned>(n)) != cpp_int(oracle::EnumerateSpace(n))) {
      return {false, "enumeration mismatch at n=" + std::to_string(n)};
    }
  }
  return {true, "n=1..10 exact; enumeration agrees for n<=2 (384, 294912)"};
}

Outcome OperatorSetCriterion() {
  const auto& ops = OperatorSet();
  const std::set<CellGene> unique(ops.begin(), ops.end());
  std::set<std::string> tokens;
  for (const auto& g : ops) tokens.insert(EncodeGene(g));
  const bool ok = ops.size() == 192 && unique.size() == 192 && tokens.size() == 192;
  return {ok, "size=" + std::to_string(ops.size()) + " distinct=" +
                  std::to_string(unique.size()) + " distinct tokens=" +
                  std::to_string(tokens.size())};
}

Outcome NsgaCriterion() {
  Rng rng(2024);
  int mismatches = 0;
  for (int trial = 0; trial < kNsgaPopulations; ++trial) {
    Population pop;
    const std::size_t size = 1 + UniformIndex(rng, 64);
    for (std::size_t k = 0; k < size; ++k) {
      Individual ind;
      ind.objectives = {20.0 + static_cast<double>(UniformIndex(rng, 10)),
                        1e9 * (1.0 + static_cast<double>(UniformIndex(rng, 10))),
                        1e5 * (1.0 + static_cast<double>(UniformIndex(rng, 10)))};
      ind.violation = UniformIndex(rng, 3) == 0 ? 0.1 * (1 + UniformIndex(rng, 4)) : 0.0;
      pop.push_back(ind);
    }
    const auto expected = oracle::PeelFronts(pop);
    const auto got = FastNondominatedSort(pop);
    bool same = expected.size() == got.size();
    for (std::size_t f = 0; same && f < got.size(); ++f) {
      same = std::set<std::size_t>(got[f].begin(), got[f].end()) ==
             std::set<std::size_t>(expected[f].begin(), expected[f].end());
      for (std::size_t i : got[f]) same = same && pop[i].rank == static_cast<int>(f);
    }
    mismatches += !same;
  }
  return {mismatches == 0, std::to_string(kNsgaPopulations - mismatches) + "/" +
                               std::to_string(kNsgaPopulations) +
                               " populations match the peeling oracle"};
}

Outcome GradientCriterion() {
  const ControllerShape shape{3, 8, 8, 128};
  double worst = 0.0;
  for (int seed = 1; seed <= kGradientSeeds; ++seed) {
    worst = std::max(worst, oracle::PolicyGradientRelError(static_cast<std::uint64_t>(seed), shape));
  }
  std::ostringstream d;
  d << "worst relative error " << worst << " over " << kGradientSeeds
    << " seeds (tolerance " << kGradientRelTol << ")";
  return {worst <= kGradientRelTol, d.str()};
}

bool WithinSigma(double count, double trials, double p) {
  return std::abs(count - trials * p) <= kSigmaBound * oracle::BinomialSigma(trials, p);
}

Outcome VariationCriterion() {
  SearchConfig cfg;
  const Mutator mutator;
  Rng rng(99);
  int invalid = 0;
  std::array<double, 3> strategy_counts{};
  for (int k = 0; k < kVariationApplications; ++k) {
    const std::size_t n = 1 + k % 8;
    const Chromosome a = SampleRandom(n, rng);
    const Chromosome b = SampleRandom(n, rng);
    MutationStrategy s;
    const Chromosome c = mutator.Mutate(Crossover(a, b, rng), cfg, rng, &s);
    strategy_counts[static_cast<int>(s)]++;
    try {
      if (!(Decode(Encode(c)) == c) || !IsValid(c)) ++invalid;
    } catch (const DecodeError&) {
      ++invalid;
    }
  }
  const double trials = kVariationApplications;
  const bool mutation_ok =
      WithinSigma(strategy_counts[0], trials, cfg.p_mr) &&
      WithinSigma(strategy_counts[1], trials, cfg.p_mf - cfg.p_mr) &&
      WithinSigma(strategy_counts[2], trials, 1.0 - cfg.p_mf);

  SearchConfig init_cfg;
  init_cfg.n = 12;
  init_cfg.population_size = 10000;
  const auto pop = Initialize(init_cfg, rng);
  double dense = 0, none = 0;
  for (const auto& c : pop) {
    dense += c.macro.PopCount() == c.macro.size();
    none += c.macro.PopCount() == 0;
  }
  const double models = init_cfg.population_size;
  const bool init_ok = WithinSigma(models - dense - none, models, init_cfg.p_r) &&
                       WithinSigma(dense, models, init_cfg.p_den) &&
                       WithinSigma(none, models, 1.0 - init_cfg.p_r - init_cfg.p_den);

  bool rws_ok = true;
  const Chromosome base = SampleRandom(10, rng);
  for (MutationStrategy s : {MutationStrategy::kRwsFlops, MutationStrategy::kRwsParams}) {
    const auto& w = s == MutationStrategy::kRwsFlops ? mutator.flops_table().weights()
                                                     : mutator.params_table().weights();
    std::vector<double> counts(kNumOperators, 0.0);
    for (int k = 0; k < kVariationApplications / 10; ++k) {
      for (const auto& g : mutator.Apply(base, s, rng).micro) counts[OperatorIndex(g)]++;
    }
    for (std::size_t k = 0; k < kNumOperators; ++k) {
      rws_ok = rws_ok && WithinSigma(counts[k], kVariationApplications, w[k]);
    }
  }
  std::ostringstream d;
  d << invalid << " invalid of " << kVariationApplications << "; mutation branches "
    << (mutation_ok ? "ok" : "off") << " (" << strategy_counts[0] << "/" << strategy_counts[1]
    << "/" << strategy_counts[2] << "); init branches " << (init_ok ? "ok" : "off")
    << "; RWS frequencies " << (rws_ok ? "ok" : "off") << " at 5 sigma";
  return {invalid == 0 && mutation_ok && init_ok && rws_ok, d.str()};
}

Outcome CostCriterion() {
  const bool units =
      LayerParams({LayerKind::kConv, 1, 32, 3, 1, 1, false}) == 320 &&
      LayerParams({LayerKind::kConv, 32, 64, 3, 1, 1, false}) == 18496 &&
      LayerMacsPerPixel({LayerKind::kConv, 32, 32, 3, 1, 1, false}) * 480 * 480 == 2123366400LL;
  const auto a = Cost(BuildGraph(Decode(ReadData("falsr_a.txt"))));
  const auto b = Cost(BuildGraph(Decode(ReadData("falsr_b.txt"))));
  auto within = [](double value, double target) {
    return std::abs(value / target - 1.0) <= kCostTolerance;
  };
  const double ra_p = static_cast<double>(a.params) / kFalsrAParams;
  const double ra_m = static_cast<double>(a.mult_adds) / kFalsrAMultAdds;
  const double rb_p = static_cast<double>(b.params) / kFalsrBParams;
  const double rb_m = static_cast<double>(b.mult_adds) / kFalsrBMultAdds;
  const bool ok = units && within(static_cast<double>(a.params), kFalsrAParams) &&
                  within(static_cast<double>(a.mult_adds), kFalsrAMultAdds) &&
                  within(static_cast<double>(b.params), kFalsrBParams) &&
                  within(static_cast<double>(b.mult_adds), kFalsrBMultAdds);
  std::ostringstream d;
  d.precision(4);
  d << "units " << (units ? "exact" : "WRONG") << "; FALSR-A params " << a.params << " (x"
    << ra_p << ") mult-adds " << a.mult_adds << " (x" << ra_m << "); FALSR-B params "
    << b.params << " (x" << rb_p << ") mult-adds " << b.mult_adds << " (x" << rb_m
    << "); FALSR-C NOT EVALUABLE (architecture not published), 2 of 3 models checked";
  return {ok, d.str()};
}

std::vector<ObjectiveVector> FeasibleObjectives(std::span<const Individual> archive) {
  std::vector<ObjectiveVector> out;
  for (const auto& m : archive)
    if (m.violation == 0.0) out.push_back(m.objectives);
  return out;
}

std::vector<ObjectiveVector> FrontObjectives(std::span<const Individual> archive) {
  std::vector<ObjectiveVector> out;
  const auto front = ParetoFrontOf(archive);
  if (front.infeasible_fallback) return out;
  for (const auto& m : front.members) out.push_back(m.objectives);
  return out;
}

Outcome SearchCriterion() {
  int wins = 0;
  std::ostringstream ratios;
  ratios.precision(3);
  for (int seed = 1; seed <= kEffectivenessSeeds; ++seed) {
    RunConfig cfg;
    cfg.search.population_size = kEffectivenessPopulation;
    cfg.search.rng_seed = static_cast<std::uint64_t>(seed);
    cfg.generations = kEffectivenessGenerations;
    const RunState run = RunSearch(cfg);

    // Equal budget: as many evaluations as the search performed.
    const std::size_t budget = run.archive.size();
    Rng rng = DerivedRng(static_cast<std::uint64_t>(seed), 0xBA5E, 0);
    std::vector<Individual> random;
    std::set<std::string> seen;
    while (random.size() < budget) {
      Individual ind;
      ind.chromosome = SampleRandom(static_cast<std::size_t>(cfg.search.n), rng);
      if (!seen.insert(EncodeKey(ind.chromosome)).second) continue;
      ind.objectives = SurrogateEvaluate(ind.chromosome);
      ind.violation = Violation(ind.objectives, cfg.search.constraints);
      random.push_back(std::move(ind));
    }

    const auto search_front = FrontObjectives(run.archive.entries());
    const auto random_front = FrontObjectives(random);
    auto observed = FeasibleObjectives(run.archive.entries());
    const auto random_feasible = FeasibleObjectives(random);
    observed.insert(observed.end(), random_feasible.begin(), random_feasible.end());
    if (observed.empty()) continue;
    const ObjectiveVector ref = WorstPoint(observed);
    const double hv_search = Hypervolume(search_front, ref);
    const double hv_random = Hypervolume(random_front, ref);
    wins += hv_search > hv_random;
    ratios << (seed > 1 ? " " : "") << (hv_random > 0 ? hv_search / hv_random : INFINITY);
  }
  std::ostringstream d;
  d << "search beats random on " << wins << "/" << kEffectivenessSeeds
    << " seeds (need " << kEffectivenessWins << "); HV ratios: " << ratios.str();
  return {wins >= kEffectivenessWins, d.str()};
}

Outcome DeterminismCriterion() {
  const auto path = std::filesystem::temp_directory_path() /
                    ("srnas_acceptance_" + std::to_string(::getpid()) + ".json");
  RunConfig cfg;
  cfg.search.rng_seed = 77;
  cfg.generations = 6;
  const std::string a = ToJson(RunSearch(cfg)).dump();
  const std::string b = ToJson(RunSearch(cfg)).dump();

  RunConfig part = cfg;
  part.generations = 3;
  part.checkpoint_path = path.string();
  RunSearch(part);
  RunState resumed = LoadCheckpoint(path.string());
  resumed.config.generations = cfg.generations;
  resumed.config.checkpoint_path.clear();
  Search search(std::move(resumed), std::make_unique<SurrogateEvaluator>());
  const std::string c = ToJson(search.Run()).dump();
  std::filesystem::remove(path);
  const bool repeat = a == b;
  const bool resume = a == c;
  return {repeat && resume, std::string("repeat run ") + (repeat ? "identical" : "DIFFERS") +
                                "; resume after generation 3 of 6 " +
                                (resume ? "identical" : "DIFFERS") + " (N=64, n=7)"};
}

}  // namespace
}  // namespace srnas

int main() {
  using namespace srnas;
  Report("space-size formula", kBudgetSpace, SpaceSizeCriterion);
  Report("operator set cardinality", kBudgetOperators, OperatorSetCriterion);
  Report("nondominated sort oracle equivalence", kBudgetNsga, NsgaCriterion);
  Report("controller gradient check", kBudgetGradient, GradientCriterion);
  Report("variation closure and distributions", kBudgetVariation, VariationCriterion);
  Report("cost model cross-checks", kBudgetCost, CostCriterion);
  Report("search effectiveness vs random", kBudgetSearch, SearchCriterion);
  Report("determinism and resume", kBudgetDeterminism, DeterminismCriterion);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
