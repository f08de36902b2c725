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

#include "srnas/evaluator.h"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <deque>
#include <set>
#include <stdexcept>

namespace srnas {

nlohmann::json ToJson(const TrainConfig& config) {
  return nlohmann::json{{"epochs", config.epochs},         {"batch_size", config.batch_size},
                        {"lr", config.lr},                 {"beta1", config.beta1},
                        {"beta2", config.beta2},           {"loss", config.loss},
                        {"init_std", config.init_std},     {"dataset_path", config.dataset_path}};
}

TrainConfig TrainConfigFromJson(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.loss = j.value("loss", c.loss);
  c.init_std = j.value("init_std", c.init_std);
  c.dataset_path = j.value("dataset_path", c.dataset_path);
  return c;
}

EvaluationRequest MakeRequest(std::string id, const Chromosome& c,
                              const TrainConfig& train_config,
                              const CostConventions& conventions) {
  return EvaluationRequest{std::move(id), c, BuildGraph(c, 2, conventions), train_config};
}

std::string RequestLine(const EvaluationRequest& request) {
  nlohmann::json j{{"id", request.id},
                   {"chromosome", ToJson(request.chromosome)},
                   {"graph", ToJson(request.graph)},
                   {"train_config", ToJson(request.train_config)}};
  return j.dump();
}

std::string ResponseLine(const EvaluationResponse& response) {
  nlohmann::json j{{"id", response.id}, {"status", response.status}};
  if (response.ok()) j["score"] = response.score;
  if (response.mse) j["mse"] = *response.mse;
  if (!response.message.empty()) j["message"] = response.message;
  return j.dump();
}

double PsnrFromMse(double mse) { return 10.0 * std::log10(1.0 / mse); }

EvaluationResponse ParseResponseLine(std::string_view line) {
  EvaluationResponse r;
  auto malformed = [&](const std::string& why) {
    r.status = "error";
    r.message = why + ": " + std::string(line);
    return r;
  };
  nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) return malformed("malformed response");
  if (!j.contains("id") || !j["id"].is_string()) return malformed("missing id");
  r.id = j["id"].get<std::string>();
  if (!j.contains("status") || !j["status"].is_string()) return malformed("missing status");
  const std::string status = j["status"].get<std::string>();
  if (j.contains("message") && j["message"].is_string()) {
    r.message = j["message"].get<std::string>();
  }
  if (j.contains("mse") && j["mse"].is_number()) r.mse = j["mse"].get<double>();
  if (status == "error") {
    r.status = "error";
    return r;
  }
  if (status != "ok") return malformed("unknown status");
  if (j.contains("score") && j["score"].is_number()) {
    r.score = j["score"].get<double>();
  } else if (r.mse && *r.mse > 0.0) {
    r.score = PsnrFromMse(*r.mse);
  } else {
    return malformed("ok response without score");
  }
  if (!std::isfinite(r.score)) return malformed("non-finite score");
  r.status = "ok";
  return r;
}

double SurrogateScore(const Chromosome& c, const CostConventions& conventions) {
  const double params =
      static_cast<double>(CountParams(BuildGraph(c, 2, conventions)));
  const double density = static_cast<double>(c.macro.PopCount()) /
                         static_cast<double>(c.macro.size());
  const double sparsity_penalty = 4.0 * (density - 0.5) * (density - 0.5);
  std::set<CellGene> distinct(c.micro.begin(), c.micro.end());
  const double diversity =
      c.n() > 1 ? static_cast<double>(distinct.size() - 1) / static_cast<double>(c.n() - 1)
                : 0.0;
  return 30.0 - 40.0 / std::log1p(params) - 2.0 * sparsity_penalty + 1.0 * diversity;
}

ObjectiveVector Objectives(const Chromosome& c, double score,
                           const CostConventions& conventions) {
  const ModelGraph g = BuildGraph(c, 2, conventions);
  return ObjectiveVector{
      score, static_cast<double>(CountMultAdds(g, kCostInputSize, kCostInputSize)),
      static_cast<double>(CountParams(g))};
}

ObjectiveVector SurrogateEvaluate(const Chromosome& c,
                                  const CostConventions& conventions) {
  return Objectives(c, SurrogateScore(c, conventions), conventions);
}

struct WorkerPool::Worker {
  pid_t pid = -1;
  int in_fd = -1;   // child's stdin
  int out_fd = -1;  // child's stdout
  std::string buffer;
  std::optional<std::size_t> request;
  std::chrono::steady_clock::time_point deadline;

  bool alive() const { return pid > 0; }
};

WorkerPool::WorkerPool(WorkerPoolConfig config) : config_(std::move(config)) {
  if (config_.workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (config_.command.empty()) throw std::invalid_argument("worker command is empty");
  // Writes to a dead worker must fail with EPIPE, not kill us.
  ::signal(SIGPIPE, SIG_IGN);
  for (int k = 0; k < config_.workers; ++k) workers_.push_back(std::make_unique<Worker>());
}

WorkerPool::~WorkerPool() {
  for (auto& w : workers_) {
    if (!w->alive()) continue;
    ::close(w->in_fd);
    w->in_fd = -1;
    // Give the worker a moment to exit on EOF before forcing it.
    for (int tries = 0; tries < 50; ++tries) {
      if (::waitpid(w->pid, nullptr, WNOHANG) == w->pid) {
        w->pid = -1;
        break;
      }
      ::usleep(2000);
    }
    Kill(*w);
  }
}

void WorkerPool::Spawn(Worker& w) {
  int to_child[2];
  int from_child[2];
  if (::pipe(to_child) != 0) throw std::runtime_error("pipe failed");
  if (::pipe(from_child) != 0) {
    ::close(to_child[0]);
    ::close(to_child[1]);
    throw std::runtime_error("pipe failed");
  }
  const pid_t pid = ::fork();
  if (pid < 0) throw std::runtime_error("fork failed");
  if (pid == 0) {
    ::dup2(to_child[0], STDIN_FILENO);
    ::dup2(from_child[1], STDOUT_FILENO);
    ::close(to_child[0]);
    ::close(to_child[1]);
    ::close(from_child[0]);
    ::close(from_child[1]);
    ::execl("/bin/sh", "sh", "-c", config_.command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(to_child[0]);
  ::close(from_child[1]);
  ::fcntl(to_child[1], F_SETFD, FD_CLOEXEC);
  ::fcntl(from_child[0], F_SETFD, FD_CLOEXEC);
  w.pid = pid;
  w.in_fd = to_child[1];
  w.out_fd = from_child[0];
  w.buffer.clear();
  w.request.reset();
  ++spawned_;
}

void WorkerPool::Kill(Worker& w) {
  if (w.pid > 0) {
    ::kill(w.pid, SIGKILL);
    ::waitpid(w.pid, nullptr, 0);
  }
  if (w.in_fd >= 0) ::close(w.in_fd);
  if (w.out_fd >= 0) ::close(w.out_fd);
  w.pid = -1;
  w.in_fd = -1;
  w.out_fd = -1;
  w.buffer.clear();
  w.request.reset();
}

std::vector<EvaluationResponse> WorkerPool::Dispatch(
    std::span<const EvaluationRequest> requests) {
  const std::size_t total = requests.size();
  std::vector<std::optional<EvaluationResponse>> done(total);
  std::vector<int> attempts(total, 0);
  std::deque<std::size_t> pending;
  for (std::size_t k = 0; k < total; ++k) pending.push_back(k);
  std::size_t resolved = 0;

  auto finish = [&](std::size_t k, EvaluationResponse r) {
    r.id = requests[k].id;
    done[k] = std::move(r);
    ++resolved;
  };
  auto fail = [&](std::size_t k, const std::string& message) {
    EvaluationResponse r;
    r.status = "error";
    r.message = message;
    finish(k, std::move(r));
  };
  auto crashed = [&](Worker& w, const std::string& why) {
    const std::size_t k = *w.request;
    Kill(w);
    if (attempts[k] < 2) {
      pending.push_front(k);
    } else {
      fail(k, "worker crashed: " + why);
    }
  };

  while (resolved < total) {
    for (auto& wp : workers_) {
      Worker& w = *wp;
      if (w.request || pending.empty()) continue;
      if (w.alive() && ::waitpid(w.pid, nullptr, WNOHANG) == w.pid) {
        w.pid = -1;
        Kill(w);
      }
      if (!w.alive()) Spawn(w);
      const std::size_t k = pending.front();
      pending.pop_front();
      ++attempts[k];
      w.request = k;
      w.deadline = std::chrono::steady_clock::now() + config_.timeout;
      const std::string line = RequestLine(requests[k]) + "\n";
      std::size_t off = 0;
      while (off < line.size()) {
        const ssize_t n = ::write(w.in_fd, line.data() + off, line.size() - off);
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) break;
        off += static_cast<std::size_t>(n);
      }
      if (off < line.size()) crashed(w, "write failed");
    }

    std::vector<pollfd> fds;
    std::vector<Worker*> owners;
    auto now = std::chrono::steady_clock::now();
    auto wait = std::chrono::milliseconds::max();
    for (auto& wp : workers_) {
      if (!wp->request) continue;
      fds.push_back(pollfd{wp->out_fd, POLLIN, 0});
      owners.push_back(wp.get());
      wait = std::min(wait, std::chrono::duration_cast<std::chrono::milliseconds>(
                                wp->deadline - now));
    }
    if (fds.empty()) continue;
    const int timeout_ms = static_cast<int>(
        std::clamp<std::int64_t>(wait.count() + 1, 0, 60'000));
    const int ready = ::poll(fds.data(), fds.size(), timeout_ms);
    if (ready < 0 && errno != EINTR) throw std::runtime_error("poll failed");

    now = std::chrono::steady_clock::now();
    for (std::size_t f = 0; f < fds.size(); ++f) {
      Worker& w = *owners[f];
      if (!w.request) continue;
      if (fds[f].revents & (POLLIN | POLLHUP | POLLERR)) {
        char buf[65536];
        const ssize_t n = ::read(w.out_fd, buf, sizeof(buf));
        if (n < 0 && errno == EINTR) continue;
        if (n <= 0) {
          crashed(w, "worker exited");
          continue;
        }
        w.buffer.append(buf, static_cast<std::size_t>(n));
        const std::size_t nl = w.buffer.find('\n');
        if (nl == std::string::npos) continue;
        std::string line = w.buffer.substr(0, nl);
        w.buffer.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::size_t k = *w.request;
        w.request.reset();
        EvaluationResponse r = ParseResponseLine(line);
        if (r.ok() && r.id != requests[k].id) {
          fail(k, "response id mismatch: " + line);
        } else {
          finish(k, std::move(r));
        }
      } else if (now >= w.deadline) {
        const std::size_t k = *w.request;
        Kill(w);
        fail(k, "timeout");
      }
    }
  }

  std::vector<EvaluationResponse> out;
  out.reserve(total);
  for (auto& r : done) out.push_back(std::move(*r));
  return out;
}

std::vector<EvaluationResponse> ExternalEvaluate(
    std::span<const EvaluationRequest> requests, WorkerPool& pool) {
  return pool.Dispatch(requests);
}

std::vector<Evaluation> SurrogateEvaluator::Evaluate(std::span<const Chromosome> batch,
                                                     std::string_view) {
  std::vector<Evaluation> out;
  out.reserve(batch.size());
  for (const auto& c : batch) {
    out.push_back(Evaluation{SurrogateEvaluate(c, conventions_), true, {}});
  }
  return out;
}

ExternalEvaluator::ExternalEvaluator(WorkerPoolConfig pool, TrainConfig train_config,
                                     CostConventions conventions)
    : pool_(std::move(pool)),
      train_config_(std::move(train_config)),
      conventions_(conventions) {}

std::vector<Evaluation> ExternalEvaluator::Evaluate(std::span<const Chromosome> batch,
                                                    std::string_view id_prefix) {
  std::vector<EvaluationRequest> requests;
  requests.reserve(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) {
    requests.push_back(MakeRequest(std::string(id_prefix) + std::to_string(k), batch[k],
                                   train_config_, conventions_));
  }
  const auto responses = ExternalEvaluate(requests, pool_);
  std::vector<Evaluation> out;
  out.reserve(batch.size());
  for (std::size_t k = 0; k < batch.size(); ++k) {
    const auto& r = responses[k];
    Evaluation e;
    e.ok = r.ok();
    e.message = r.message;
    e.objectives = Objectives(batch[k], r.ok() ? r.score : 0.0, conventions_);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace srnas
