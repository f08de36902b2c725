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

#include "srnas/nsga2.h"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace srnas {

double Violation(const ObjectiveVector& obj, const Constraints& constraints) {
  constexpr double kEps = 1e-12;
  const double score_gap = std::max(0.0, constraints.min_score - obj.score) /
                           std::max(constraints.min_score, kEps);
  const double cost_gap =
      std::max(0.0, obj.mult_adds - constraints.max_mult_adds) /
      constraints.max_mult_adds;
  return score_gap + cost_gap;
}

bool ParetoDominates(const ObjectiveVector& a, const ObjectiveVector& b) {
  if (a.score < b.score || a.mult_adds > b.mult_adds || a.params > b.params) {
    return false;
  }
  return a.score > b.score || a.mult_adds < b.mult_adds || a.params < b.params;
}

bool Dominates(const Individual& a, const Individual& b) {
  if (a.violation != b.violation) return a.violation < b.violation;
  return ParetoDominates(a.objectives, b.objectives);
}

std::vector<std::vector<std::size_t>> FastNondominatedSort(Population& pop) {
  const std::size_t n = pop.size();
  std::vector<std::vector<std::size_t>> dominated(n);
  std::vector<std::size_t> domination_count(n, 0);
  std::vector<std::vector<std::size_t>> fronts;
  if (n == 0) return fronts;

  std::vector<std::size_t> current;
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = p + 1; q < n; ++q) {
      if (Dominates(pop[p], pop[q])) {
        dominated[p].push_back(q);
        ++domination_count[q];
      } else if (Dominates(pop[q], pop[p])) {
        dominated[q].push_back(p);
        ++domination_count[p];
      }
    }
  }
  for (std::size_t p = 0; p < n; ++p) {
    if (domination_count[p] == 0) current.push_back(p);
  }

  int rank = 0;
  while (!current.empty()) {
    std::vector<std::size_t> next;
    for (std::size_t p : current) {
      pop[p].rank = rank;
      for (std::size_t q : dominated[p]) {
        if (--domination_count[q] == 0) next.push_back(q);
      }
    }
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(current));
    current = std::move(next);
    ++rank;
  }
  return fronts;
}

double AxisValue(const ObjectiveVector& obj, ObjectiveAxis axis) {
  switch (axis) {
    case ObjectiveAxis::kScore:
      return obj.score;
    case ObjectiveAxis::kMultAdds:
      return obj.mult_adds;
    case ObjectiveAxis::kParams:
      return obj.params;
  }
  return 0.0;
}

std::vector<double> CrowdingDistance(std::span<const ObjectiveVector> front,
                                     std::span<const ObjectiveAxis> axes) {
  const std::size_t n = front.size();
  if (n == 0) throw std::invalid_argument("crowding distance of empty front");
  std::vector<double> distance(n, 0.0);
  if (n <= 2) {
    std::fill(distance.begin(), distance.end(), kInfinity);
    return distance;
  }
  std::vector<std::size_t> order(n);
  for (ObjectiveAxis axis : axes) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return AxisValue(front[a], axis) < AxisValue(front[b], axis);
    });
    const double lo = AxisValue(front[order.front()], axis);
    const double hi = AxisValue(front[order.back()], axis);
    distance[order.front()] = kInfinity;
    distance[order.back()] = kInfinity;
    const double range = hi - lo;
    if (range <= 0.0) continue;
    for (std::size_t k = 1; k + 1 < n; ++k) {
      const double gap = AxisValue(front[order[k + 1]], axis) -
                         AxisValue(front[order[k - 1]], axis);
      distance[order[k]] += gap / range;
    }
  }
  return distance;
}

std::vector<std::vector<std::size_t>> RankAndCrowd(Population& pop) {
  auto fronts = FastNondominatedSort(pop);
  std::vector<ObjectiveVector> objs;
  for (const auto& front : fronts) {
    objs.clear();
    for (std::size_t idx : front) objs.push_back(pop[idx].objectives);
    const auto dist = CrowdingDistance(objs);
    for (std::size_t k = 0; k < front.size(); ++k) {
      pop[front[k]].crowding = dist[k];
    }
  }
  return fronts;
}

std::size_t TournamentSelect(std::span<const Individual> pop, Rng& rng) {
  if (pop.size() < 2) throw std::invalid_argument("tournament needs >= 2 members");
  const std::size_t a = UniformIndex(rng, pop.size());
  std::size_t b = UniformIndex(rng, pop.size() - 1);
  if (b >= a) ++b;
  if (pop[a].rank != pop[b].rank) return pop[a].rank < pop[b].rank ? a : b;
  if (pop[a].crowding != pop[b].crowding) {
    return pop[a].crowding > pop[b].crowding ? a : b;
  }
  return Bernoulli(rng, 0.5) ? a : b;
}

}  // namespace srnas
