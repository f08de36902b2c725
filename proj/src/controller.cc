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

#include "srnas/controller.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace srnas {

namespace {

constexpr int kFormatVersion = 1;

Eigen::VectorXd Sigmoid(const Eigen::VectorXd& x) {
  return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Eigen::VectorXd Softmax(const Eigen::VectorXd& logits) {
  const double peak = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - peak).exp().matrix();
  return e / e.sum();
}

// Activations of one pass, kept for backpropagation.
struct ForwardCache {
  std::vector<int> tokens;              // LSTM input token per step
  std::vector<Eigen::VectorXd> i, f, g, o, c, h, tanh_c;
  std::vector<Eigen::VectorXd> probs;
  Eigen::VectorXd z, h1, h2, macro;
};

void LstmStep(const ControllerParams& p, int token, const Eigen::VectorXd& h_prev,
              const Eigen::VectorXd& c_prev, ForwardCache& cache) {
  const int hd = p.shape.hidden_dim;
  const Eigen::VectorXd x = p.embed.row(token).transpose();
  const Eigen::VectorXd a = p.lstm_wx * x + p.lstm_wh * h_prev + p.lstm_b;
  Eigen::VectorXd ig = Sigmoid(a.segment(0, hd));
  Eigen::VectorXd fg = Sigmoid(a.segment(hd, hd));
  Eigen::VectorXd gg = a.segment(2 * hd, hd).array().tanh().matrix();
  Eigen::VectorXd og = Sigmoid(a.segment(3 * hd, hd));
  Eigen::VectorXd c = fg.cwiseProduct(c_prev) + ig.cwiseProduct(gg);
  Eigen::VectorXd tc = c.array().tanh().matrix();
  Eigen::VectorXd h = og.cwiseProduct(tc);
  cache.tokens.push_back(token);
  cache.i.push_back(std::move(ig));
  cache.f.push_back(std::move(fg));
  cache.g.push_back(std::move(gg));
  cache.o.push_back(std::move(og));
  cache.c.push_back(std::move(c));
  cache.tanh_c.push_back(std::move(tc));
  cache.h.push_back(std::move(h));
  cache.probs.push_back(Softmax(p.out_w * cache.h.back() + p.out_b));
}

void MacroHead(const ControllerParams& p, std::span<const std::size_t> cells,
               ForwardCache& cache) {
  const int de = p.shape.embed_dim;
  cache.z.resize(static_cast<Eigen::Index>(cells.size()) * de);
  for (std::size_t t = 0; t < cells.size(); ++t) {
    cache.z.segment(static_cast<Eigen::Index>(t) * de, de) =
        p.embed.row(static_cast<Eigen::Index>(cells[t])).transpose();
  }
  cache.h1 = (p.fc1_w * cache.z + p.fc1_b).array().tanh().matrix();
  cache.h2 = (p.fc2_w * cache.h1 + p.fc2_b).array().tanh().matrix();
  cache.macro = Sigmoid(p.fc3_w * cache.h2 + p.fc3_b);
}

void CheckShape(const ControllerParams& p, std::size_t cells) {
  if (static_cast<int>(cells) != p.shape.n) {
    throw std::invalid_argument("trajectory length does not match controller n");
  }
}

ForwardCache RunForward(const ControllerParams& p, std::span<const std::size_t> cells) {
  CheckShape(p, cells.size());
  ForwardCache cache;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(p.shape.hidden_dim);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(p.shape.hidden_dim);
  for (std::size_t t = 0; t < cells.size(); ++t) {
    const int token = t == 0 ? kStartToken : static_cast<int>(cells[t - 1]);
    LstmStep(p, token, h, c, cache);
    h = cache.h.back();
    c = cache.c.back();
  }
  MacroHead(p, cells, cache);
  return cache;
}

double ClampProb(double p) {
  return std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor);
}

}  // namespace

ControllerParams ControllerParams::Zeros(const ControllerShape& shape) {
  if (shape.n < 1 || shape.embed_dim < 1 || shape.hidden_dim < 1 ||
      shape.fc_width < 1) {
    throw std::invalid_argument("controller dimensions must be positive");
  }
  const int ops = static_cast<int>(kNumOperators);
  const int h4 = 4 * shape.hidden_dim;
  ControllerParams p;
  p.shape = shape;
  p.embed = Eigen::MatrixXd::Zero(ops + 1, shape.embed_dim);
  p.lstm_wx = Eigen::MatrixXd::Zero(h4, shape.embed_dim);
  p.lstm_wh = Eigen::MatrixXd::Zero(h4, shape.hidden_dim);
  p.lstm_b = Eigen::VectorXd::Zero(h4);
  p.out_w = Eigen::MatrixXd::Zero(ops, shape.hidden_dim);
  p.out_b = Eigen::VectorXd::Zero(ops);
  p.fc1_w = Eigen::MatrixXd::Zero(shape.fc_width, shape.n * shape.embed_dim);
  p.fc1_b = Eigen::VectorXd::Zero(shape.fc_width);
  p.fc2_w = Eigen::MatrixXd::Zero(shape.fc_width, shape.fc_width);
  p.fc2_b = Eigen::VectorXd::Zero(shape.fc_width);
  p.fc3_w = Eigen::MatrixXd::Zero(shape.num_connections(), shape.fc_width);
  p.fc3_b = Eigen::VectorXd::Zero(shape.num_connections());
  return p;
}

ControllerParams ControllerParams::Random(const ControllerShape& shape, Rng& rng) {
  ControllerParams p = Zeros(shape);
  p.ForEachTensor(TensorVisitor(
      [&](const std::string&, double* data, Eigen::Index rows, Eigen::Index cols) {
        for (Eigen::Index k = 0; k < rows * cols; ++k) {
          data[k] = -0.1 + 0.2 * Uniform01(rng);
        }
      }));
  p.lstm_b.segment(shape.hidden_dim, shape.hidden_dim).setOnes();
  return p;
}

void ControllerParams::ForEachTensor(const TensorVisitor& fn) {
  auto visit = [&](const char* name, auto& m) {
    fn(name, m.data(), m.rows(), m.cols());
  };
  visit("embed", embed);
  visit("lstm_wx", lstm_wx);
  visit("lstm_wh", lstm_wh);
  visit("lstm_b", lstm_b);
  visit("out_w", out_w);
  visit("out_b", out_b);
  visit("fc1_w", fc1_w);
  visit("fc1_b", fc1_b);
  visit("fc2_w", fc2_w);
  visit("fc2_b", fc2_b);
  visit("fc3_w", fc3_w);
  visit("fc3_b", fc3_b);
}

void ControllerParams::ForEachTensor(const ConstTensorVisitor& fn) const {
  const_cast<ControllerParams*>(this)->ForEachTensor(TensorVisitor(
      [&](const std::string& name, double* data, Eigen::Index rows,
          Eigen::Index cols) { fn(name, data, rows, cols); }));
}

std::size_t ControllerParams::Size() const {
  std::size_t total = 0;
  ForEachTensor(ConstTensorVisitor(
      [&](const std::string&, const double*, Eigen::Index rows, Eigen::Index cols) {
        total += static_cast<std::size_t>(rows * cols);
      }));
  return total;
}

std::vector<double> ControllerParams::Flatten() const {
  std::vector<double> out;
  out.reserve(Size());
  ForEachTensor(ConstTensorVisitor(
      [&](const std::string&, const double* data, Eigen::Index rows,
          Eigen::Index cols) { out.insert(out.end(), data, data + rows * cols); }));
  return out;
}

void ControllerParams::Unflatten(std::span<const double> flat) {
  if (flat.size() != Size()) throw std::invalid_argument("flat size mismatch");
  std::size_t pos = 0;
  ForEachTensor(TensorVisitor(
      [&](const std::string&, double* data, Eigen::Index rows, Eigen::Index cols) {
        const auto count = static_cast<std::size_t>(rows * cols);
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(pos), count, data);
        pos += count;
      }));
}

bool ControllerParams::AllFinite() const {
  bool ok = true;
  ForEachTensor(ConstTensorVisitor(
      [&](const std::string&, const double* data, Eigen::Index rows,
          Eigen::Index cols) {
        for (Eigen::Index k = 0; k < rows * cols; ++k) {
          ok = ok && std::isfinite(data[k]);
        }
      }));
  return ok;
}

ControllerOutput Forward(const ControllerParams& params,
                         std::span<const std::size_t> cells) {
  ForwardCache cache = RunForward(params, cells);
  return ControllerOutput{std::move(cache.probs), std::move(cache.macro)};
}

Trajectory Sample(const ControllerParams& params, Rng& rng) {
  const int n = params.shape.n;
  const auto& ops = OperatorSet();
  Trajectory traj;
  ForwardCache cache;
  Eigen::VectorXd h = Eigen::VectorXd::Zero(params.shape.hidden_dim);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(params.shape.hidden_dim);
  int token = kStartToken;
  for (int t = 0; t < n; ++t) {
    LstmStep(params, token, h, c, cache);
    h = cache.h.back();
    c = cache.c.back();
    const Eigen::VectorXd& probs = cache.probs.back();
    const double u = Uniform01(rng);
    double acc = 0.0;
    std::size_t pick = kNumOperators - 1;
    for (std::size_t k = 0; k < kNumOperators; ++k) {
      acc += probs[static_cast<Eigen::Index>(k)];
      if (u < acc) {
        pick = k;
        break;
      }
    }
    traj.cells.push_back(pick);
    token = static_cast<int>(pick);
  }
  MacroHead(params, traj.cells, cache);
  traj.cell_probs = std::move(cache.probs);
  traj.macro_probs = std::move(cache.macro);

  const auto nn = static_cast<std::size_t>(n);
  traj.chromosome.macro = MacroGenome(nn);
  for (std::size_t t = 0; t < nn; ++t) traj.chromosome.micro.push_back(ops[traj.cells[t]]);
  traj.bits.resize(MacroBitCount(nn));
  for (std::size_t i = 1; i <= nn; ++i) {
    for (std::size_t j = i; j <= nn; ++j) {
      const std::size_t idx = MacroIndex(nn, i, j);
      const bool bit = Bernoulli(rng, traj.macro_probs[static_cast<Eigen::Index>(idx)]);
      traj.bits[idx] = bit ? 1 : 0;
      traj.chromosome.macro.set_bit(idx, bit);
    }
  }
  traj.rewards.assign(nn + traj.bits.size(), 0.0);
  return traj;
}

void AssignTerminalReward(Trajectory& traj, double reward) {
  traj.rewards.assign(traj.cells.size() + traj.bits.size(), 0.0);
  if (!traj.rewards.empty()) traj.rewards.back() = reward;
}

std::vector<double> Returns(std::span<const double> rewards, double gamma) {
  std::vector<double> out(rewards.size(), 0.0);
  double running = 0.0;
  for (std::size_t k = rewards.size(); k-- > 0;) {
    running = rewards[k] + gamma * running;
    out[k] = running;
  }
  return out;
}

double PolicyLoss(const ControllerParams& params, const Trajectory& traj,
                  double gamma) {
  const ForwardCache cache = RunForward(params, traj.cells);
  const auto returns = Returns(traj.rewards, gamma);
  const std::size_t n = traj.cells.size();
  double objective = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double p = cache.probs[t][static_cast<Eigen::Index>(traj.cells[t])];
    objective += std::log(ClampProb(p)) * returns[t];
  }
  for (std::size_t j = 0; j < traj.bits.size(); ++j) {
    const double o = ClampProb(cache.macro[static_cast<Eigen::Index>(j)]);
    const double ll = traj.bits[j] ? std::log(o) : std::log(1.0 - o);
    objective += ll * returns[n + j];
  }
  return -objective;
}

ControllerParams PolicyGradient(const ControllerParams& params,
                                const Trajectory& traj, double gamma) {
  const ForwardCache cache = RunForward(params, traj.cells);
  const auto returns = Returns(traj.rewards, gamma);
  const std::size_t n = traj.cells.size();
  const int hd = params.shape.hidden_dim;
  const int de = params.shape.embed_dim;
  ControllerParams grad = ControllerParams::Zeros(params.shape);

  // Connection head: d(-ll * R)/d(pre-sigmoid) = -R (c - O), zero where clamped.
  const auto m = static_cast<Eigen::Index>(traj.bits.size());
  Eigen::VectorXd d3 = Eigen::VectorXd::Zero(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    const double o = cache.macro[j];
    const bool bit = traj.bits[static_cast<std::size_t>(j)] != 0;
    const bool clamped = bit ? o < kProbabilityFloor : o > 1.0 - kProbabilityFloor;
    if (clamped) continue;
    d3[j] = -returns[n + static_cast<std::size_t>(j)] * ((bit ? 1.0 : 0.0) - o);
  }
  grad.fc3_w = d3 * cache.h2.transpose();
  grad.fc3_b = d3;
  const Eigen::VectorXd d2 =
      (params.fc3_w.transpose() * d3).cwiseProduct((1.0 - cache.h2.array().square()).matrix());
  grad.fc2_w = d2 * cache.h1.transpose();
  grad.fc2_b = d2;
  const Eigen::VectorXd d1 =
      (params.fc2_w.transpose() * d2).cwiseProduct((1.0 - cache.h1.array().square()).matrix());
  grad.fc1_w = d1 * cache.z.transpose();
  grad.fc1_b = d1;
  const Eigen::VectorXd dz = params.fc1_w.transpose() * d1;
  for (std::size_t t = 0; t < n; ++t) {
    grad.embed.row(static_cast<Eigen::Index>(traj.cells[t])) +=
        dz.segment(static_cast<Eigen::Index>(t) * de, de).transpose();
  }

  // Cell softmax heads into the LSTM hidden states.
  std::vector<Eigen::VectorXd> dh_out(n, Eigen::VectorXd::Zero(hd));
  for (std::size_t t = 0; t < n; ++t) {
    const auto chosen = static_cast<Eigen::Index>(traj.cells[t]);
    if (cache.probs[t][chosen] < kProbabilityFloor) continue;
    Eigen::VectorXd dlogits = cache.probs[t];
    dlogits[chosen] -= 1.0;
    dlogits *= returns[t];  // -R (onehot - p)
    grad.out_w += dlogits * cache.h[t].transpose();
    grad.out_b += dlogits;
    dh_out[t] = params.out_w.transpose() * dlogits;
  }

  // Backpropagation through time.
  Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(hd);
  Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(hd);
  for (std::size_t t = n; t-- > 0;) {
    const Eigen::VectorXd dh = dh_out[t] + dh_next;
    const Eigen::VectorXd& ig = cache.i[t];
    const Eigen::VectorXd& fg = cache.f[t];
    const Eigen::VectorXd& gg = cache.g[t];
    const Eigen::VectorXd& og = cache.o[t];
    const Eigen::VectorXd& tc = cache.tanh_c[t];
    const Eigen::VectorXd c_prev =
        t == 0 ? Eigen::VectorXd::Zero(hd) : cache.c[t - 1];
    const Eigen::VectorXd h_prev =
        t == 0 ? Eigen::VectorXd::Zero(hd) : cache.h[t - 1];

    const Eigen::VectorXd d_o = dh.cwiseProduct(tc);
    const Eigen::VectorXd dc =
        dh.cwiseProduct(og).cwiseProduct((1.0 - tc.array().square()).matrix()) + dc_next;
    Eigen::VectorXd da(4 * hd);
    da.segment(0, hd) = dc.cwiseProduct(gg).cwiseProduct(
        ig.cwiseProduct((1.0 - ig.array()).matrix()));
    da.segment(hd, hd) = dc.cwiseProduct(c_prev).cwiseProduct(
        fg.cwiseProduct((1.0 - fg.array()).matrix()));
    da.segment(2 * hd, hd) =
        dc.cwiseProduct(ig).cwiseProduct((1.0 - gg.array().square()).matrix());
    da.segment(3 * hd, hd) =
        d_o.cwiseProduct(og.cwiseProduct((1.0 - og.array()).matrix()));

    const Eigen::VectorXd x = params.embed.row(cache.tokens[t]).transpose();
    grad.lstm_wx += da * x.transpose();
    grad.lstm_wh += da * h_prev.transpose();
    grad.lstm_b += da;
    grad.embed.row(cache.tokens[t]) += (params.lstm_wx.transpose() * da).transpose();
    dh_next = params.lstm_wh.transpose() * da;
    dc_next = dc.cwiseProduct(fg);
  }
  return grad;
}

UpdateResult ReinforceUpdate(ControllerParams& params,
                             std::span<const Trajectory> batch, double lr,
                             double gamma) {
  UpdateResult result;
  if (batch.empty()) {
    result.message = "empty batch";
    return result;
  }
  std::vector<double> sum(params.Size(), 0.0);
  double reward_sum = 0.0;
  for (const auto& traj : batch) {
    const auto g = PolicyGradient(params, traj, gamma).Flatten();
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += g[k];
    reward_sum += std::accumulate(traj.rewards.begin(), traj.rewards.end(), 0.0);
  }
  result.mean_reward = reward_sum / static_cast<double>(batch.size());
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (double v : sum) {
    if (!std::isfinite(v)) {
      result.message = "non-finite gradient; update skipped";
      return result;
    }
  }
  auto flat = params.Flatten();
  for (std::size_t k = 0; k < flat.size(); ++k) flat[k] -= lr * scale * sum[k];
  params.Unflatten(flat);
  result.applied = true;
  return result;
}

Controller::Controller(const ControllerConfig& config, Rng& rng)
    : config_(config), params_(ControllerParams::Random(config.shape, rng)) {}

Controller::Controller(const ControllerConfig& config, ControllerParams params)
    : config_(config), params_(std::move(params)) {
  if (!(params_.shape == config_.shape)) {
    throw std::invalid_argument("controller params shape does not match config");
  }
}

UpdateResult Controller::Update(std::vector<Trajectory> batch,
                                std::span<const double> scores) {
  if (batch.size() != scores.size()) {
    throw std::invalid_argument("one score per trajectory required");
  }
  if (batch.empty()) return UpdateResult{false, "empty batch", 0.0};
  const double mean =
      std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
  if (!has_baseline_) {
    baseline_ = mean;
    has_baseline_ = true;
  }
  for (std::size_t k = 0; k < batch.size(); ++k) {
    AssignTerminalReward(batch[k], scores[k] - baseline_);
  }
  UpdateResult result = ReinforceUpdate(params_, batch, config_.lr, config_.gamma);
  baseline_ = config_.baseline_decay * baseline_ + (1.0 - config_.baseline_decay) * mean;
  return result;
}

nlohmann::json ParamsToJson(const ControllerParams& params) {
  nlohmann::json tensors = nlohmann::json::array();
  params.ForEachTensor(ControllerParams::ConstTensorVisitor(
      [&](const std::string& name, const double* data, Eigen::Index rows,
          Eigen::Index cols) {
        tensors.push_back({{"name", name},
                           {"shape", {rows, cols}},
                           {"data", std::vector<double>(data, data + rows * cols)}});
      }));
  return nlohmann::json{{"format", "srnas-controller"},
                        {"version", kFormatVersion},
                        {"shape",
                         {{"n", params.shape.n},
                          {"embed_dim", params.shape.embed_dim},
                          {"hidden_dim", params.shape.hidden_dim},
                          {"fc_width", params.shape.fc_width}}},
                        {"tensors", std::move(tensors)}};
}

ControllerParams ParamsFromJson(const nlohmann::json& j) {
  if (j.value("format", std::string()) != "srnas-controller" ||
      j.value("version", 0) != kFormatVersion) {
    throw std::invalid_argument("unsupported controller checkpoint format");
  }
  ControllerShape shape;
  const auto& s = j.at("shape");
  shape.n = s.at("n").get<int>();
  shape.embed_dim = s.at("embed_dim").get<int>();
  shape.hidden_dim = s.at("hidden_dim").get<int>();
  shape.fc_width = s.at("fc_width").get<int>();
  ControllerParams p = ControllerParams::Zeros(shape);
  const auto& tensors = j.at("tensors");
  std::size_t k = 0;
  p.ForEachTensor(ControllerParams::TensorVisitor(
      [&](const std::string& name, double* data, Eigen::Index rows, Eigen::Index cols) {
        const auto& t = tensors.at(k++);
        if (t.at("name").get<std::string>() != name ||
            t.at("shape").at(0).get<Eigen::Index>() != rows ||
            t.at("shape").at(1).get<Eigen::Index>() != cols) {
          throw std::invalid_argument("controller tensor '" + name + "' mismatch");
        }
        const auto values = t.at("data").get<std::vector<double>>();
        if (values.size() != static_cast<std::size_t>(rows * cols)) {
          throw std::invalid_argument("controller tensor '" + name + "' size");
        }
        std::copy(values.begin(), values.end(), data);
      }));
  return p;
}

nlohmann::json Controller::ToJson() const {
  return nlohmann::json{{"params", ParamsToJson(params_)},
                        {"lr", config_.lr},
                        {"baseline_decay", config_.baseline_decay},
                        {"gamma", config_.gamma},
                        {"baseline", baseline_},
                        {"has_baseline", has_baseline_}};
}

Controller Controller::FromJson(const nlohmann::json& j) {
  ControllerParams params = ParamsFromJson(j.at("params"));
  ControllerConfig config;
  config.shape = params.shape;
  config.lr = j.at("lr").get<double>();
  config.baseline_decay = j.at("baseline_decay").get<double>();
  config.gamma = j.at("gamma").get<double>();
  Controller c(config, std::move(params));
  c.baseline_ = j.at("baseline").get<double>();
  c.has_baseline_ = j.at("has_baseline").get<bool>();
  return c;
}

}  // namespace srnas
