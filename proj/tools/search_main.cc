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

// Command-line front end: run a search, export a checkpoint's Pareto front,
// or cost a single chromosome file.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "srnas/cost_model.h"
#include "srnas/genome.h"
#include "srnas/pipeline.h"

namespace {

std::string ReadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

bool EndsWith(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

int RunCommand(const std::string& config_path, const std::string& resume,
               const std::optional<std::uint64_t>& seed,
               const std::optional<std::string>& evaluator,
               const std::optional<std::string>& worker_cmd,
               const std::optional<int>& workers,
               const std::optional<int>& generations,
               const std::optional<std::string>& checkpoint) {
  srnas::RunConfig config;
  if (!config_path.empty()) {
    config = srnas::RunConfigFromJson(nlohmann::json::parse(ReadFile(config_path)));
  }
  auto apply_evaluator = [&](srnas::RunConfig& c) {
    if (!evaluator) return;
    if (*evaluator == "surrogate") {
      c.evaluator = srnas::EvaluatorKind::kSurrogate;
    } else if (*evaluator == "external") {
      c.evaluator = srnas::EvaluatorKind::kExternal;
    } else {
      throw std::invalid_argument("--evaluator must be surrogate or external");
    }
  };
  auto apply_overrides = [&](srnas::RunConfig& c) {
    if (seed) c.search.rng_seed = *seed;
    apply_evaluator(c);
    if (worker_cmd) c.workers.command = *worker_cmd;
    if (workers) c.workers.workers = *workers;
    if (generations) c.generations = *generations;
    if (checkpoint) c.checkpoint_path = *checkpoint;
  };

  std::unique_ptr<srnas::Search> search;
  if (!resume.empty()) {
    srnas::RunState state = srnas::LoadCheckpoint(resume);
    // The seed is part of the resumed state; only run-length and I/O knobs
    // may change.
    if (seed && *seed != state.config.search.rng_seed) {
      throw std::invalid_argument("--seed cannot change on resume");
    }
    apply_evaluator(state.config);
    if (worker_cmd) state.config.workers.command = *worker_cmd;
    if (workers) state.config.workers.workers = *workers;
    if (generations) state.config.generations = *generations;
    state.config.checkpoint_path = checkpoint ? *checkpoint : resume;
    auto eval = srnas::MakeEvaluator(state.config);
    search = std::make_unique<srnas::Search>(std::move(state), std::move(eval));
  } else {
    apply_overrides(config);
    if (config.checkpoint_path.empty()) config.checkpoint_path = "search.ckpt.json";
    auto eval = srnas::MakeEvaluator(config);
    search = std::make_unique<srnas::Search>(config, std::move(eval));
  }

  search->Start();
  while (search->state().generation < search->state().config.generations) {
    search->Step();
    const auto& s = search->state();
    const auto front = srnas::ParetoFrontOf(s.archive.entries());
    std::cerr << "generation " << s.generation << "/" << s.config.generations
              << " archive=" << s.archive.size() << " front=" << front.members.size()
              << " failed=" << s.failed_evaluations << "\n";
  }
  std::cout << "checkpoint: " << search->state().config.checkpoint_path << "\n";
  return 0;
}

int FrontCommand(const std::string& ckpt, const std::string& out) {
  const srnas::RunState state = srnas::LoadCheckpoint(ckpt);
  const auto& archive = state.archive.entries();
  const auto front = srnas::ParetoFrontOf(archive);
  const bool json = out == "json" || EndsWith(out, ".json");
  const std::string body =
      json ? srnas::FrontJson(front, archive, state.config.conventions).dump(2) + "\n"
           : srnas::FrontCsv(front, state.config.conventions);
  if (out == "csv" || out == "json") {
    std::cout << body;
  } else {
    std::ofstream file(out);
    if (!file) throw std::runtime_error("cannot write " + out);
    file << body;
  }
  if (front.infeasible_fallback) {
    std::cerr << "warning: no feasible individual in archive\n";
  }
  return 0;
}

int CostCommand(const std::string& model_path, const std::string& conventions_json,
                int size) {
  const srnas::Chromosome c = srnas::Decode(ReadFile(model_path));
  srnas::CostConventions conventions;
  if (!conventions_json.empty()) {
    conventions = srnas::ConventionsFromJson(nlohmann::json::parse(conventions_json));
  }
  const auto graph = srnas::BuildGraph(c, 2, conventions);
  auto report = srnas::ToJson(srnas::Cost(graph, size, size));
  report["cost_conventions"] = srnas::ToJson(conventions);
  std::cout << report.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-objective architecture search for x2 super-resolution"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run or resume a search");
  std::string config_path;
  std::string resume;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> evaluator;
  std::optional<std::string> worker_cmd;
  std::optional<int> workers;
  std::optional<int> generations;
  std::optional<std::string> checkpoint;
  run->add_option("--config", config_path, "JSON run configuration");
  run->add_option("--resume", resume, "checkpoint to resume from");
  run->add_option("--seed", seed, "RNG seed");
  run->add_option("--evaluator", evaluator, "surrogate|external");
  run->add_option("--worker-cmd", worker_cmd, "external worker command");
  run->add_option("--workers", workers, "number of worker processes");
  run->add_option("--generations", generations, "generations to run");
  run->add_option("--checkpoint", checkpoint, "checkpoint output path");

  auto* front = app.add_subcommand("front", "export the Pareto front of a checkpoint");
  std::string ckpt;
  std::string out = "csv";
  front->add_option("--ckpt", ckpt, "checkpoint file")->required();
  front->add_option("--out", out, "csv, json, or an output path (.csv/.json)");

  auto* cost = app.add_subcommand("cost", "print params and mult-adds of a chromosome");
  std::string model;
  std::string conventions_json;
  int size = srnas::kCostInputSize;
  cost->add_option("--model", model, "chromosome text file")->required();
  cost->add_option("--conventions", conventions_json, "cost conventions as JSON");
  cost->add_option("--size", size, "low-resolution input side length");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) {
      return RunCommand(config_path, resume, seed, evaluator, worker_cmd, workers,
                        generations, checkpoint);
    }
    if (*front) return FrontCommand(ckpt, out);
    if (*cost) return CostCommand(model, conventions_json, size);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
