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

#ifndef SRNAS_NSGA2_H_
#define SRNAS_NSGA2_H_

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "srnas/genome.h"
#include "srnas/random.h"

namespace srnas {

// score is maximized; mult_adds and params are minimized.
struct ObjectiveVector {
  double score = 0.0;
  double mult_adds = 1.0;
  double params = 1.0;

  friend bool operator==(const ObjectiveVector&, const ObjectiveVector&) = default;
};

struct Individual {
  Chromosome chromosome;
  ObjectiveVector objectives;
  double violation = 0.0;
  int rank = 0;
  double crowding = 0.0;
};

using Population = std::vector<Individual>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// Normalized sum of constraint overshoot; 0 iff both constraints hold.
double Violation(const ObjectiveVector& obj, const Constraints& constraints);

// Pareto domination on (-score, mult_adds, params), ignoring constraints.
bool ParetoDominates(const ObjectiveVector& a, const ObjectiveVector& b);

// Feasibility-first: lower violation wins outright, Pareto rule on ties.
bool Dominates(const Individual& a, const Individual& b);

// Deb's fast nondominated sort under constrained domination. Sets `rank` on
// every member and returns the fronts as index lists.
std::vector<std::vector<std::size_t>> FastNondominatedSort(Population& pop);

// Objectives are addressed by axis so callers can crowd on a subset.
enum class ObjectiveAxis { kScore, kMultAdds, kParams };

inline constexpr ObjectiveAxis kAllAxes[] = {
    ObjectiveAxis::kScore, ObjectiveAxis::kMultAdds, ObjectiveAxis::kParams};

double AxisValue(const ObjectiveVector& obj, ObjectiveAxis axis);

// NSGA-II crowding distance over the given axes. Boundary members get +inf;
// fronts of size <= 2 are entirely +inf.
std::vector<double> CrowdingDistance(
    std::span<const ObjectiveVector> front,
    std::span<const ObjectiveAxis> axes = kAllAxes);

// Sorts, then writes rank and crowding into every individual.
std::vector<std::vector<std::size_t>> RankAndCrowd(Population& pop);

// Binary tournament: lower rank, then larger crowding, then a coin flip.
// Returns the index of the winner. Requires pop.size() >= 2.
std::size_t TournamentSelect(std::span<const Individual> pop, Rng& rng);

}  // namespace srnas

#endif  // SRNAS_NSGA2_H_
