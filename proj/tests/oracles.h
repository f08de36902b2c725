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

#ifndef SRNAS_TESTS_ORACLES_H_
#define SRNAS_TESTS_ORACLES_H_

// Independent reference computations used by the unit and acceptance suites.
// None of these call into the code paths they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <unordered_set>
#include <string>
#include <vector>

#include "srnas/controller.h"
#include "srnas/genome.h"
#include "srnas/nsga2.h"

namespace srnas::oracle {

// Counts distinct (micro, macro) pairs by walking every combination. Each
// operator is a tuple over the raw field domains, packed into one integer
// together with the macro mask.
inline std::uint64_t EnumerateSpace(int n) {
  const int bits = n * (n + 1) / 2;
  std::vector<std::uint64_t> ops;
  for (int kind = 0; kind < 4; ++kind)
    for (int ch : {16, 32, 48, 64})
      for (int k : {1, 3})
        for (int res = 0; res < 2; ++res)
          for (int rep : {1, 2, 4})
            ops.push_back(static_cast<std::uint64_t>(((kind * 100 + ch) * 10 + k) * 10 + res) * 10 +
                          static_cast<std::uint64_t>(rep));
  std::unordered_set<std::uint64_t> seen;
  std::function<void(int, std::uint64_t)> rec = [&](int pos, std::uint64_t prefix) {
    if (pos == n) {
      for (std::uint64_t mask = 0; mask < (1ULL << bits); ++mask) {
        seen.insert((prefix << bits) | mask);
      }
      return;
    }
    for (std::uint64_t op : ops) rec(pos + 1, prefix * 1000000 + op);
  };
  rec(0, 0);
  return seen.size();
}

// Constrained domination written out directly from its definition.
inline bool DominatesRef(double va, const ObjectiveVector& a, double vb,
                         const ObjectiveVector& b) {
  if (va < vb) return true;
  if (va > vb) return false;
  const bool no_worse =
      a.score >= b.score && a.mult_adds <= b.mult_adds && a.params <= b.params;
  const bool better =
      a.score > b.score || a.mult_adds < b.mult_adds || a.params < b.params;
  return no_worse && better;
}

// Repeatedly peels off the members nobody remaining dominates.
inline std::vector<std::vector<std::size_t>> PeelFronts(const Population& pop) {
  std::vector<std::size_t> left(pop.size());
  for (std::size_t k = 0; k < pop.size(); ++k) left[k] = k;
  std::vector<std::vector<std::size_t>> fronts;
  while (!left.empty()) {
    std::vector<std::size_t> front;
    std::vector<std::size_t> rest;
    for (std::size_t a : left) {
      bool dominated = false;
      for (std::size_t b : left) {
        if (DominatesRef(pop[b].violation, pop[b].objectives, pop[a].violation,
                         pop[a].objectives)) {
          dominated = true;
          break;
        }
      }
      (dominated ? rest : front).push_back(a);
    }
    fronts.push_back(front);
    left = rest;
  }
  return fronts;
}

// Hypervolume by coordinate compression: sums every grid cell covered by at
// least one point's box. O(F^4); only for small fronts.
inline double GridHypervolume(const std::vector<ObjectiveVector>& pts,
                              const ObjectiveVector& ref) {
  std::vector<double> xs{-ref.score}, ys{ref.mult_adds}, zs{ref.params};
  for (const auto& p : pts) {
    xs.push_back(-p.score);
    ys.push_back(p.mult_adds);
    zs.push_back(p.params);
  }
  for (auto* v : {&xs, &ys, &zs}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i)
    for (std::size_t j = 0; j + 1 < ys.size(); ++j)
      for (std::size_t k = 0; k + 1 < zs.size(); ++k) {
        if (xs[i + 1] > -ref.score || ys[j + 1] > ref.mult_adds || zs[k + 1] > ref.params)
          continue;
        const bool covered = std::any_of(pts.begin(), pts.end(), [&](const ObjectiveVector& p) {
          return -p.score <= xs[i] && p.mult_adds <= ys[j] && p.params <= zs[k];
        });
        if (covered) {
          total += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]) * (zs[k + 1] - zs[k]);
        }
      }
  return total;
}

// Nondominated filter over (-score, mult_adds, params).
inline std::vector<std::size_t> NondominatedIndices(const std::vector<ObjectiveVector>& pts) {
  std::vector<std::size_t> out;
  for (std::size_t a = 0; a < pts.size(); ++a) {
    bool dominated = false;
    for (std::size_t b = 0; b < pts.size() && !dominated; ++b) {
      dominated = DominatesRef(0.0, pts[b], 0.0, pts[a]);
    }
    if (!dominated) out.push_back(a);
  }
  return out;
}

// Central differences of `f` at `x`, one coordinate at a time.
inline std::vector<double> CentralDifferences(
    const std::function<double(const std::vector<double>&)>& f, std::vector<double> x,
    double h) {
  std::vector<double> grad(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double saved = x[k];
    x[k] = saved + h;
    const double up = f(x);
    x[k] = saved - h;
    const double down = f(x);
    x[k] = saved;
    grad[k] = (up - down) / (2.0 * h);
  }
  return grad;
}

// Standard deviation of a binomial count.
inline double BinomialSigma(double trials, double p) {
  return std::sqrt(trials * p * (1.0 - p));
}

// Relative error ||g - fd|| / max(||g||, ||fd||) between the analytic policy
// gradient and central differences of the policy loss, on a trajectory sampled
// from random parameters with random per-step rewards.
inline double PolicyGradientRelError(std::uint64_t seed, const ControllerShape& shape) {
  Rng rng(seed);
  ControllerParams params = ControllerParams::Random(shape, rng);
  Trajectory traj = Sample(params, rng);
  for (double& r : traj.rewards) r = 2.0 * Uniform01(rng) - 1.0;
  const std::vector<double> analytic = PolicyGradient(params, traj).Flatten();
  ControllerParams probe = params;
  const auto loss = [&](const std::vector<double>& x) {
    probe.Unflatten(x);
    return PolicyLoss(probe, traj);
  };
  const std::vector<double> numeric = CentralDifferences(loss, params.Flatten(), 1e-5);
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    diff += (analytic[k] - numeric[k]) * (analytic[k] - numeric[k]);
    na += analytic[k] * analytic[k];
    nn += numeric[k] * numeric[k];
  }
  const double denom = std::max(std::sqrt(na), std::sqrt(nn));
  return denom == 0.0 ? 0.0 : std::sqrt(diff) / denom;
}

}  // namespace srnas::oracle

#endif  // SRNAS_TESTS_ORACLES_H_
