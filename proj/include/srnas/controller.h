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

#ifndef SRNAS_CONTROLLER_H_
#define SRNAS_CONTROLLER_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"
#include "srnas/genome.h"
#include "srnas/random.h"

namespace srnas {

struct ControllerShape {
  int n = 7;
  int embed_dim = 32;
  int hidden_dim = 64;
  int fc_width = 128;

  int num_connections() const { return n * (n + 1) / 2; }
  friend bool operator==(const ControllerShape&, const ControllerShape&) = default;
};

// Token id of the "zero cell" that starts the LSTM chain.
inline constexpr int kStartToken = static_cast<int>(kNumOperators);

// Embedding -> LSTM -> softmax chain over cells, and concatenated cell
// embeddings -> FC(tanh) -> FC(tanh) -> FC -> sigmoid over connections.
// LSTM gate rows are stacked as [input, forget, cell, output].
struct ControllerParams {
  ControllerShape shape;
  Eigen::MatrixXd embed;     // (192 + 1) x embed_dim, row = token id
  Eigen::MatrixXd lstm_wx;   // 4h x embed_dim
  Eigen::MatrixXd lstm_wh;   // 4h x h
  Eigen::VectorXd lstm_b;    // 4h
  Eigen::MatrixXd out_w;     // 192 x h
  Eigen::VectorXd out_b;     // 192
  Eigen::MatrixXd fc1_w;     // fc x (n * embed_dim)
  Eigen::VectorXd fc1_b;
  Eigen::MatrixXd fc2_w;     // fc x fc
  Eigen::VectorXd fc2_b;
  Eigen::MatrixXd fc3_w;     // n(n+1)/2 x fc
  Eigen::VectorXd fc3_b;

  static ControllerParams Zeros(const ControllerShape& shape);
  // Uniform(-0.1, 0.1) everywhere; forget-gate bias set to +1.
  static ControllerParams Random(const ControllerShape& shape, Rng& rng);

  // Visits every tensor in a fixed order as a column-major block.
  using TensorVisitor = std::function<void(const std::string& name, double* data,
                                           Eigen::Index rows, Eigen::Index cols)>;
  using ConstTensorVisitor =
      std::function<void(const std::string& name, const double* data,
                          Eigen::Index rows, Eigen::Index cols)>;
  void ForEachTensor(const TensorVisitor& fn);
  void ForEachTensor(const ConstTensorVisitor& fn) const;

  std::size_t Size() const;
  std::vector<double> Flatten() const;
  void Unflatten(std::span<const double> flat);
  bool AllFinite() const;
};

struct ControllerOutput {
  std::vector<Eigen::VectorXd> cell_probs;  // n softmax rows over 192
  Eigen::VectorXd macro_probs;              // O^mac, n(n+1)/2 sigmoids
};

// Teacher-forced forward pass: step 1 reads the start token with zero state,
// step t reads the embedding of cells[t-2]. cells.size() must equal shape.n.
ControllerOutput Forward(const ControllerParams& params,
                         std::span<const std::size_t> cells);

struct Trajectory {
  std::vector<std::size_t> cells;
  std::vector<Eigen::VectorXd> cell_probs;
  Eigen::VectorXd macro_probs;
  std::vector<std::uint8_t> bits;
  // Immediate reward per decision: n cell steps then n(n+1)/2 connections.
  std::vector<double> rewards;
  Chromosome chromosome;
};

Trajectory Sample(const ControllerParams& params, Rng& rng);

// Places `reward` on the final decision so that returns under gamma = 1 give
// every decision the same value.
void AssignTerminalReward(Trajectory& traj, double reward);

// Discounted suffix sums of the immediate rewards.
std::vector<double> Returns(std::span<const double> rewards, double gamma = 1.0);

inline constexpr double kProbabilityFloor = 1e-7;

// L = -[sum_i log p(cell_i) R_i + sum_j (c_j log O_j + (1-c_j) log(1-O_j)) R_j]
// with probabilities clamped to [1e-7, 1 - 1e-7] before the log.
double PolicyLoss(const ControllerParams& params, const Trajectory& traj,
                  double gamma = 1.0);

// dL/dtheta by backpropagation; same layout as `params`.
ControllerParams PolicyGradient(const ControllerParams& params,
                                const Trajectory& traj, double gamma = 1.0);

struct UpdateResult {
  bool applied = false;
  std::string message;
  double mean_reward = 0.0;
};

// params <- params - lr * mean gradient, with rewards already on the
// trajectories. Leaves params untouched on a non-finite gradient.
UpdateResult ReinforceUpdate(ControllerParams& params,
                             std::span<const Trajectory> batch, double lr,
                             double gamma = 1.0);

struct ControllerConfig {
  ControllerShape shape;
  double lr = 1e-3;
  double baseline_decay = 0.95;
  double gamma = 1.0;
};

// Owns the parameters and the exponential-moving-average reward baseline.
class Controller {
 public:
  Controller(const ControllerConfig& config, Rng& rng);
  Controller(const ControllerConfig& config, ControllerParams params);

  Trajectory Sample(Rng& rng) const { return srnas::Sample(params_, rng); }

  // One REINFORCE step on trajectories scored by the evaluator. The reward of
  // each trajectory is its score minus the baseline held before this call.
  UpdateResult Update(std::vector<Trajectory> batch, std::span<const double> scores);

  const ControllerParams& params() const { return params_; }
  const ControllerConfig& config() const { return config_; }
  double baseline() const { return baseline_; }
  bool has_baseline() const { return has_baseline_; }

  nlohmann::json ToJson() const;
  static Controller FromJson(const nlohmann::json& j);

 private:
  ControllerConfig config_;
  ControllerParams params_;
  double baseline_ = 0.0;
  bool has_baseline_ = false;
};

// Versioned tensor dump with shape headers; doubles round-trip exactly.
nlohmann::json ParamsToJson(const ControllerParams& params);
ControllerParams ParamsFromJson(const nlohmann::json& j);

}  // namespace srnas

#endif  // SRNAS_CONTROLLER_H_
