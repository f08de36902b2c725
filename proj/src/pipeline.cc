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

#include "srnas/pipeline.h"

#include <algorithm>
#include <cfloat>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace srnas {

namespace {

constexpr int kCheckpointVersion = 1;

std::string DirectionName(RwsDirection d) {
  return d == RwsDirection::kTowardCheaper ? "cheaper" : "costlier";
}

RwsDirection DirectionFromName(const std::string& s) {
  if (s == "cheaper") return RwsDirection::kTowardCheaper;
  if (s == "costlier") return RwsDirection::kTowardCostlier;
  throw std::invalid_argument("unknown rws direction '" + s + "'");
}

nlohmann::json IndividualToJson(const Individual& ind) {
  return nlohmann::json{{"key", EncodeKey(ind.chromosome)},
                        {"objectives",
                         {ind.objectives.score, ind.objectives.mult_adds,
                          ind.objectives.params}},
                        {"violation", ind.violation}};
}

Individual IndividualFromJson(const nlohmann::json& j) {
  Individual ind;
  ind.chromosome = DecodeKey(j.at("key").get<std::string>());
  const auto& o = j.at("objectives");
  ind.objectives = ObjectiveVector{o.at(0).get<double>(), o.at(1).get<double>(),
                                   o.at(2).get<double>()};
  ind.violation = j.at("violation").get<double>();
  return ind;
}

// Survivors of parents + offspring: whole fronts by rank, the last one cut
// by crowding.
Population EnvironmentalSelection(Population combined, std::size_t keep) {
  RankAndCrowd(combined);
  std::vector<std::size_t> order(combined.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (combined[a].rank != combined[b].rank) return combined[a].rank < combined[b].rank;
    return combined[a].crowding > combined[b].crowding;
  });
  Population survivors;
  survivors.reserve(keep);
  for (std::size_t k = 0; k < keep && k < order.size(); ++k) {
    survivors.push_back(std::move(combined[order[k]]));
  }
  RankAndCrowd(survivors);
  return survivors;
}

}  // namespace

void RunConfig::Validate() const {
  search.Validate();
  if (generations < 0) throw std::invalid_argument("generations must be >= 0");
  if (!(rl_fraction >= 0.0 && rl_fraction <= 1.0)) {
    throw std::invalid_argument("rl_fraction must be in [0, 1]");
  }
  if (controller.shape.n != search.n) {
    throw std::invalid_argument("controller n must equal search n");
  }
  if (!(controller.lr > 0.0)) throw std::invalid_argument("controller lr must be > 0");
  if (evaluator == EvaluatorKind::kExternal && workers.command.empty()) {
    throw std::invalid_argument("external evaluator needs a worker command");
  }
}

nlohmann::json ToJson(const RunConfig& c) {
  return nlohmann::json{
      {"n", c.search.n},
      {"population_size", c.search.population_size},
      {"p_r", c.search.p_r},
      {"p_den", c.search.p_den},
      {"p_mr", c.search.p_mr},
      {"p_mf", c.search.p_mf},
      {"constraints",
       {{"min_score", c.search.constraints.min_score},
        {"max_mult_adds", c.search.constraints.max_mult_adds}}},
      {"rng_seed", c.search.rng_seed},
      {"generations", c.generations},
      {"rl_fraction", c.rl_fraction},
      {"controller",
       {{"embed_dim", c.controller.shape.embed_dim},
        {"hidden_dim", c.controller.shape.hidden_dim},
        {"fc_width", c.controller.shape.fc_width},
        {"lr", c.controller.lr},
        {"baseline_decay", c.controller.baseline_decay},
        {"gamma", c.controller.gamma}}},
      {"cost_conventions", ToJson(c.conventions)},
      {"rws", {{"direction", DirectionName(c.rws.direction)}, {"input_width", c.rws.input_width}}},
      {"evaluator",
       {{"kind", c.evaluator == EvaluatorKind::kSurrogate ? "surrogate" : "external"},
        {"worker_cmd", c.workers.command},
        {"workers", c.workers.workers},
        {"timeout_ms", c.workers.timeout.count()},
        {"train_config", ToJson(c.train)}}},
      {"checkpoint_path", c.checkpoint_path}};
}

RunConfig RunConfigFromJson(const nlohmann::json& j) {
  RunConfig c;
  c.search.n = j.value("n", c.search.n);
  c.search.population_size = j.value("population_size", c.search.population_size);
  c.search.p_r = j.value("p_r", c.search.p_r);
  c.search.p_den = j.value("p_den", c.search.p_den);
  c.search.p_mr = j.value("p_mr", c.search.p_mr);
  c.search.p_mf = j.value("p_mf", c.search.p_mf);
  if (j.contains("constraints")) {
    const auto& k = j.at("constraints");
    c.search.constraints.min_score = k.value("min_score", c.search.constraints.min_score);
    c.search.constraints.max_mult_adds =
        k.value("max_mult_adds", c.search.constraints.max_mult_adds);
  }
  c.search.rng_seed = j.value("rng_seed", c.search.rng_seed);
  c.generations = j.value("generations", c.generations);
  c.rl_fraction = j.value("rl_fraction", c.rl_fraction);
  if (j.contains("controller")) {
    const auto& k = j.at("controller");
    c.controller.shape.embed_dim = k.value("embed_dim", c.controller.shape.embed_dim);
    c.controller.shape.hidden_dim = k.value("hidden_dim", c.controller.shape.hidden_dim);
    c.controller.shape.fc_width = k.value("fc_width", c.controller.shape.fc_width);
    c.controller.lr = k.value("lr", c.controller.lr);
    c.controller.baseline_decay = k.value("baseline_decay", c.controller.baseline_decay);
    c.controller.gamma = k.value("gamma", c.controller.gamma);
  }
  c.controller.shape.n = c.search.n;
  if (j.contains("cost_conventions")) {
    c.conventions = ConventionsFromJson(j.at("cost_conventions"));
  }
  if (j.contains("rws")) {
    const auto& k = j.at("rws");
    if (k.contains("direction")) {
      c.rws.direction = DirectionFromName(k.at("direction").get<std::string>());
    }
    c.rws.input_width = k.value("input_width", c.rws.input_width);
  }
  c.rws.conventions = c.conventions;
  if (j.contains("evaluator")) {
    const auto& k = j.at("evaluator");
    const std::string kind = k.value("kind", std::string("surrogate"));
    if (kind == "surrogate") {
      c.evaluator = EvaluatorKind::kSurrogate;
    } else if (kind == "external") {
      c.evaluator = EvaluatorKind::kExternal;
    } else {
      throw std::invalid_argument("unknown evaluator '" + kind + "'");
    }
    c.workers.command = k.value("worker_cmd", c.workers.command);
    c.workers.workers = k.value("workers", c.workers.workers);
    c.workers.timeout =
        std::chrono::milliseconds(k.value("timeout_ms", c.workers.timeout.count()));
    if (k.contains("train_config")) c.train = TrainConfigFromJson(k.at("train_config"));
  }
  c.checkpoint_path = j.value("checkpoint_path", c.checkpoint_path);
  return c;
}

const Individual* Archive::Find(const std::string& key) const {
  const auto it = index_.find(key);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

bool Archive::Insert(const Individual& ind) {
  const std::string key = EncodeKey(ind.chromosome);
  if (index_.count(key)) return false;
  index_.emplace(key, entries_.size());
  entries_.push_back(ind);
  return true;
}

nlohmann::json ToJson(const RunState& state) {
  nlohmann::json population = nlohmann::json::array();
  for (const auto& ind : state.population) population.push_back(IndividualToJson(ind));
  nlohmann::json archive = nlohmann::json::array();
  for (const auto& ind : state.archive.entries()) archive.push_back(IndividualToJson(ind));
  return nlohmann::json{{"format", "srnas-run"},
                        {"version", kCheckpointVersion},
                        {"config", ToJson(state.config)},
                        {"generation", state.generation},
                        {"failed_evaluations", state.failed_evaluations},
                        {"rng", SerializeRng(state.rng)},
                        {"population", std::move(population)},
                        {"archive", std::move(archive)},
                        {"controller", state.controller ? state.controller->ToJson()
                                                        : nlohmann::json(nullptr)}};
}

RunState RunStateFromJson(const nlohmann::json& j) {
  if (j.value("format", std::string()) != "srnas-run" ||
      j.value("version", 0) != kCheckpointVersion) {
    throw std::invalid_argument("not a run checkpoint");
  }
  RunState s;
  s.config = RunConfigFromJson(j.at("config"));
  s.generation = j.at("generation").get<int>();
  s.failed_evaluations = j.value("failed_evaluations", 0);
  s.rng = DeserializeRng(j.at("rng").get<std::string>());
  for (const auto& e : j.at("population")) s.population.push_back(IndividualFromJson(e));
  for (const auto& e : j.at("archive")) s.archive.Insert(IndividualFromJson(e));
  if (!j.at("controller").is_null()) {
    s.controller = std::make_unique<Controller>(Controller::FromJson(j.at("controller")));
  }
  if (!s.population.empty()) RankAndCrowd(s.population);
  return s;
}

void SaveCheckpoint(const RunState& state, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp);
    out << ToJson(state).dump() << '\n';
    if (!out) throw std::runtime_error("failed writing checkpoint " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error("cannot move checkpoint into place at " + path);
  }
}

RunState LoadCheckpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path);
  return RunStateFromJson(nlohmann::json::parse(in));
}

std::unique_ptr<Evaluator> MakeEvaluator(const RunConfig& config) {
  if (config.evaluator == EvaluatorKind::kExternal) {
    return std::make_unique<ExternalEvaluator>(config.workers, config.train,
                                               config.conventions);
  }
  return std::make_unique<SurrogateEvaluator>(config.conventions);
}

Search::Search(RunConfig config, std::unique_ptr<Evaluator> evaluator)
    : evaluator_(std::move(evaluator)),
      mutator_([&] {
        config.controller.shape.n = config.search.n;
        config.rws.conventions = config.conventions;
        config.Validate();
        return config.rws;
      }()) {
  state_.config = std::move(config);
  state_.rng = Rng(state_.config.search.rng_seed);
}

Search::Search(RunState resumed, std::unique_ptr<Evaluator> evaluator)
    : state_(std::move(resumed)),
      evaluator_(std::move(evaluator)),
      mutator_(state_.config.rws),
      started_(!state_.population.empty()) {
  state_.config.Validate();
}

std::vector<Individual> Search::EvaluateAll(const std::vector<Chromosome>& batch,
                                            const std::string& id_prefix) {
  std::vector<Chromosome> fresh;
  std::vector<std::string> fresh_keys;
  for (const auto& c : batch) {
    std::string key = EncodeKey(c);
    if (state_.archive.Contains(key) ||
        std::find(fresh_keys.begin(), fresh_keys.end(), key) != fresh_keys.end()) {
      continue;
    }
    fresh.push_back(c);
    fresh_keys.push_back(std::move(key));
  }
  if (!fresh.empty()) {
    const auto results = evaluator_->Evaluate(fresh, id_prefix);
    for (std::size_t k = 0; k < fresh.size(); ++k) {
      Individual ind;
      ind.chromosome = fresh[k];
      ind.objectives = results[k].objectives;
      if (results[k].ok) {
        ind.violation = Violation(ind.objectives, state_.config.search.constraints);
      } else {
        ind.objectives.score = kFailedScore;
        ind.violation = DBL_MAX;
        ++state_.failed_evaluations;
      }
      state_.archive.Insert(ind);
    }
  }
  std::vector<Individual> out;
  out.reserve(batch.size());
  for (const auto& c : batch) out.push_back(*state_.archive.Find(EncodeKey(c)));
  return out;
}

void Search::Checkpoint() const {
  if (!state_.config.checkpoint_path.empty()) {
    SaveCheckpoint(state_, state_.config.checkpoint_path);
  }
}

void Search::Start() {
  if (started_) return;
  started_ = true;
  const auto initial = Initialize(state_.config.search, state_.rng);
  state_.controller = std::make_unique<Controller>(state_.config.controller, state_.rng);
  state_.population = EvaluateAll(initial, "g0-");
  RankAndCrowd(state_.population);
  state_.generation = 0;
  Checkpoint();
}

void Search::Step() {
  Start();
  RunState& s = state_;
  const int gen = s.generation + 1;
  const std::size_t n_offspring = s.population.size();
  const auto n_rl = static_cast<std::size_t>(
      std::lround(s.config.rl_fraction * static_cast<double>(n_offspring)));

  std::vector<Chromosome> offspring;
  offspring.reserve(n_offspring);
  std::vector<Trajectory> trajectories;
  for (std::size_t k = 0; k < n_rl; ++k) {
    trajectories.push_back(s.controller->Sample(s.rng));
    offspring.push_back(trajectories.back().chromosome);
  }
  for (std::size_t k = n_rl; k < n_offspring; ++k) {
    Rng local = DerivedRng(s.config.search.rng_seed, static_cast<std::uint64_t>(gen), k);
    const std::size_t a = TournamentSelect(s.population, local);
    const std::size_t b = TournamentSelect(s.population, local);
    Chromosome child =
        Crossover(s.population[a].chromosome, s.population[b].chromosome, local);
    offspring.push_back(mutator_.Mutate(child, s.config.search, local));
  }

  Population children = EvaluateAll(offspring, "g" + std::to_string(gen) + "-");

  std::vector<Trajectory> scored;
  std::vector<double> scores;
  for (std::size_t k = 0; k < n_rl; ++k) {
    if (children[k].violation == DBL_MAX) continue;
    scored.push_back(std::move(trajectories[k]));
    scores.push_back(children[k].objectives.score);
  }
  if (!scored.empty()) s.controller->Update(std::move(scored), scores);

  Population combined = std::move(s.population);
  for (auto& c : children) combined.push_back(std::move(c));
  s.population = EnvironmentalSelection(std::move(combined), n_offspring);
  s.generation = gen;
  Checkpoint();
}

RunState& Search::Run() {
  Start();
  while (state_.generation < state_.config.generations) Step();
  return state_;
}

RunState RunSearch(const RunConfig& config) {
  Search search(config, MakeEvaluator(config));
  search.Run();
  return std::move(search.state());
}

ParetoFront ParetoFrontOf(std::span<const Individual> archive) {
  if (archive.empty()) throw std::invalid_argument("empty archive");
  ParetoFront front;
  std::vector<std::size_t> feasible;
  for (std::size_t k = 0; k < archive.size(); ++k) {
    if (archive[k].violation == 0.0) feasible.push_back(k);
  }
  if (!feasible.empty()) {
    for (std::size_t a : feasible) {
      bool dominated = false;
      for (std::size_t b : feasible) {
        if (ParetoDominates(archive[b].objectives, archive[a].objectives)) {
          dominated = true;
          break;
        }
      }
      if (!dominated) front.members.push_back(archive[a]);
    }
  } else {
    front.infeasible_fallback = true;
    for (const auto& a : archive) {
      const bool dominated = std::any_of(archive.begin(), archive.end(),
                                         [&](const Individual& b) { return Dominates(b, a); });
      if (!dominated) front.members.push_back(a);
    }
  }
  std::stable_sort(front.members.begin(), front.members.end(),
                   [](const Individual& a, const Individual& b) {
                     if (a.objectives.mult_adds != b.objectives.mult_adds) {
                       return a.objectives.mult_adds < b.objectives.mult_adds;
                     }
                     if (a.objectives.params != b.objectives.params) {
                       return a.objectives.params < b.objectives.params;
                     }
                     return a.objectives.score > b.objectives.score;
                   });
  std::vector<ObjectiveVector> objs;
  for (const auto& m : front.members) objs.push_back(m.objectives);
  const auto crowding = CrowdingDistance(objs);
  for (std::size_t k = 0; k < front.members.size(); ++k) {
    front.members[k].rank = 0;
    front.members[k].crowding = crowding[k];
  }
  return front;
}

std::vector<Individual> SelectFinal(std::span<const Individual> front, std::size_t k) {
  if (k > front.size()) throw std::invalid_argument("k exceeds front size");
  if (k == 0) return {};
  std::vector<ObjectiveVector> objs;
  for (const auto& m : front) objs.push_back(m.objectives);
  static constexpr ObjectiveAxis kAxes[] = {ObjectiveAxis::kScore, ObjectiveAxis::kMultAdds};
  const auto crowding = CrowdingDistance(objs, kAxes);
  std::vector<std::size_t> order(front.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return crowding[a] > crowding[b]; });
  std::vector<Individual> out;
  for (std::size_t j = 0; j < k; ++j) {
    out.push_back(front[order[j]]);
    out.back().crowding = crowding[order[j]];
  }
  return out;
}

ObjectiveVector WorstPoint(std::span<const ObjectiveVector> points) {
  if (points.empty()) throw std::invalid_argument("no points");
  ObjectiveVector worst = points.front();
  for (const auto& p : points) {
    worst.score = std::min(worst.score, p.score);
    worst.mult_adds = std::max(worst.mult_adds, p.mult_adds);
    worst.params = std::max(worst.params, p.params);
  }
  return worst;
}

double Hypervolume(std::span<const ObjectiveVector> points, const ObjectiveVector& ref) {
  // Minimization coordinates (x, y, z) = (-score, mult_adds, params).
  struct P {
    double x, y, z;
  };
  std::vector<P> pts;
  for (const auto& p : points) {
    P q{-p.score, p.mult_adds, p.params};
    if (q.x < -ref.score && q.y < ref.mult_adds && q.z < ref.params) pts.push_back(q);
  }
  if (pts.empty()) return 0.0;
  std::sort(pts.begin(), pts.end(), [](const P& a, const P& b) { return a.z < b.z; });

  auto area = [&](std::size_t count) {
    std::vector<P> slice(pts.begin(), pts.begin() + static_cast<std::ptrdiff_t>(count));
    std::sort(slice.begin(), slice.end(), [](const P& a, const P& b) {
      return a.x != b.x ? a.x < b.x : a.y < b.y;
    });
    double total = 0.0;
    double best_y = ref.mult_adds;
    for (const auto& p : slice) {
      if (p.y < best_y) {
        total += (-ref.score - p.x) * (best_y - p.y);
        best_y = p.y;
      }
    }
    return total;
  };

  double volume = 0.0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double z_next = k + 1 < pts.size() ? pts[k + 1].z : ref.params;
    if (z_next > pts[k].z) volume += area(k + 1) * (z_next - pts[k].z);
  }
  return volume;
}

namespace {

std::string ConventionsHeader(const CostConventions& conventions) {
  const auto j = ToJson(conventions);
  std::ostringstream out;
  out << "# cost_conventions aggregation=" << j.at("aggregation").get<std::string>()
      << " bottleneck_middle=" << j.at("bottleneck_middle").get<std::string>()
      << " extractor_channels=" << conventions.extractor_channels
      << " mult_adds_input=" << kCostInputSize << "x" << kCostInputSize;
  return out.str();
}

}  // namespace

std::string FrontCsv(const ParetoFront& front, const CostConventions& conventions) {
  std::ostringstream out;
  out << ConventionsHeader(conventions) << '\n';
  if (front.infeasible_fallback) out << "# warning: no feasible individual; infeasible front\n";
  out << "encoding,score,mult_adds,params,rank,crowding\n";
  out << std::setprecision(17);
  for (const auto& m : front.members) {
    out << EncodeKey(m.chromosome) << ',' << m.objectives.score << ','
        << static_cast<std::int64_t>(m.objectives.mult_adds) << ','
        << static_cast<std::int64_t>(m.objectives.params) << ',' << m.rank << ','
        << (std::isinf(m.crowding) ? std::string("inf") : [&] {
             std::ostringstream c;
             c << std::setprecision(17) << m.crowding;
             return c.str();
           }())
        << '\n';
  }
  return out.str();
}

nlohmann::json FrontJson(const ParetoFront& front, std::span<const Individual> archive,
                         const CostConventions& conventions) {
  auto row = [](const Individual& m, bool with_rank) {
    nlohmann::json j{{"encoding", EncodeKey(m.chromosome)},
                     {"score", m.objectives.score},
                     {"mult_adds", m.objectives.mult_adds},
                     {"params", m.objectives.params},
                     {"violation", m.violation}};
    if (with_rank) {
      j["rank"] = m.rank;
      j["crowding"] = std::isinf(m.crowding) ? nlohmann::json("inf")
                                             : nlohmann::json(m.crowding);
    }
    return j;
  };
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : front.members) members.push_back(row(m, true));
  nlohmann::json all = nlohmann::json::array();
  for (const auto& m : archive) all.push_back(row(m, false));
  return nlohmann::json{{"cost_conventions", ToJson(conventions)},
                        {"mult_adds_input", {kCostInputSize, kCostInputSize}},
                        {"infeasible_fallback", front.infeasible_fallback},
                        {"front", std::move(members)},
                        {"archive", std::move(all)}};
}

}  // namespace srnas
