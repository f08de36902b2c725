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

#ifndef SRNAS_EVALUATOR_H_
#define SRNAS_EVALUATOR_H_

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "srnas/cost_model.h"
#include "srnas/genome.h"
#include "srnas/nsga2.h"

namespace srnas {

// Mult-adds are reported for a 480x480 low-resolution input.
inline constexpr int kCostInputSize = 480;

// Incomplete-training recipe forwarded to the external trainer.
struct TrainConfig {
  int epochs = 200;
  int batch_size = 16;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::string loss = "L1";
  double init_std = 0.02;
  std::string dataset_path;
};

nlohmann::json ToJson(const TrainConfig& config);
TrainConfig TrainConfigFromJson(const nlohmann::json& j);

struct EvaluationRequest {
  std::string id;
  Chromosome chromosome;
  ModelGraph graph;
  TrainConfig train_config;
};

EvaluationRequest MakeRequest(std::string id, const Chromosome& c,
                              const TrainConfig& train_config,
                              const CostConventions& conventions = {});

// One line of the wire protocol, without the trailing newline.
std::string RequestLine(const EvaluationRequest& request);

struct EvaluationResponse {
  std::string id;
  std::string status = "error";  // "ok" | "error"
  double score = 0.0;
  std::optional<double> mse;
  std::string message;

  bool ok() const { return status == "ok"; }
};

std::string ResponseLine(const EvaluationResponse& response);

// Parses one response line. Malformed input yields status "error" with the
// raw line in `message` and an empty id. A response carrying only `mse` is
// converted to PSNR = 10 log10(1 / mse).
EvaluationResponse ParseResponseLine(std::string_view line);

double PsnrFromMse(double mse);

// Deterministic stand-in for incomplete training:
//   30 - 40 / log(1 + params) - 2 * sparsity_penalty + 1 * cell_diversity.
double SurrogateScore(const Chromosome& c, const CostConventions& conventions = {});

// (score, mult-adds at 480x480, params) for a known score.
ObjectiveVector Objectives(const Chromosome& c, double score,
                           const CostConventions& conventions = {});

ObjectiveVector SurrogateEvaluate(const Chromosome& c,
                                  const CostConventions& conventions = {});

struct WorkerPoolConfig {
  // Run through /bin/sh -c.
  std::string command;
  int workers = 1;
  std::chrono::milliseconds timeout = std::chrono::hours(1);
};

// Long-lived worker subprocesses speaking line-delimited JSON over
// stdin/stdout, one request in flight per worker.
class WorkerPool {
 public:
  explicit WorkerPool(WorkerPoolConfig config);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  const WorkerPoolConfig& config() const { return config_; }

  // Exactly one response per request, in request order. A crashed worker's
  // request is retried once on a fresh worker before it becomes an error.
  std::vector<EvaluationResponse> Dispatch(std::span<const EvaluationRequest> requests);

  // Number of worker processes started so far, respawns included.
  int spawned() const { return spawned_; }

 private:
  struct Worker;
  void Spawn(Worker& w);
  void Kill(Worker& w);

  WorkerPoolConfig config_;
  std::vector<std::unique_ptr<Worker>> workers_;
  int spawned_ = 0;
};

std::vector<EvaluationResponse> ExternalEvaluate(
    std::span<const EvaluationRequest> requests, WorkerPool& pool);

struct Evaluation {
  ObjectiveVector objectives;
  bool ok = true;
  std::string message;
};

// Scores a batch of chromosomes. `id_prefix` keeps request ids unique per run.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual std::vector<Evaluation> Evaluate(std::span<const Chromosome> batch,
                                           std::string_view id_prefix) = 0;
};

class SurrogateEvaluator : public Evaluator {
 public:
  explicit SurrogateEvaluator(CostConventions conventions = {})
      : conventions_(conventions) {}
  std::vector<Evaluation> Evaluate(std::span<const Chromosome> batch,
                                   std::string_view id_prefix) override;

 private:
  CostConventions conventions_;
};

class ExternalEvaluator : public Evaluator {
 public:
  ExternalEvaluator(WorkerPoolConfig pool, TrainConfig train_config,
                    CostConventions conventions = {});
  std::vector<Evaluation> Evaluate(std::span<const Chromosome> batch,
                                   std::string_view id_prefix) override;

 private:
  WorkerPool pool_;
  TrainConfig train_config_;
  CostConventions conventions_;
};

}  // namespace srnas

#endif  // SRNAS_EVALUATOR_H_
