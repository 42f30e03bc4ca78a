// Copyright 2026 The Authors.
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

// Test difficulty from belief overlap, difficulty-tiered test suites,
// response grading and a simulated learner.

#ifndef CFTEACH_ASSESSMENT_HPP_
#define CFTEACH_ASSESSMENT_HPP_

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "cfteach/constraints.hpp"
#include "cfteach/mdp.hpp"
#include "cfteach/sphere.hpp"

namespace cfteach {

inline constexpr double kInfiniteDifficulty = std::numeric_limits<double>::infinity();
inline constexpr double kOptimalityTolerance = 1e-9;
inline constexpr int kDifficultyClusters = 5;

enum class Tier { kLow, kMedium, kHigh };
std::string_view tier_name(Tier t);
std::optional<Tier> parse_tier(std::string_view name);

struct TestItem {
  Demonstration demo;  // the optimal answer; never shipped to the learner
  double overlap = 0.0;
  double difficulty = kInfiniteDifficulty;
  Tier tier = Tier::kLow;
};

struct TestSuite {
  std::vector<TestItem> items;
  std::vector<double> centroids;  // descending overlap
};

struct ResponseScore {
  bool optimal = false;
  double reward_gap = 0.0;
  std::optional<int> confidence;
};

// Standard constraints of `demo` united with its counterfactual constraints
// against m weights sampled from `belief`.
ConstraintSet extended_bec(const Domain& domain, const Demonstration& demo,
                           const BeliefRegion& belief, int m, std::uint64_t seed);

struct Difficulty {
  AreaEstimate overlap;
  double difficulty = kInfiniteDifficulty;  // 1 / overlap
};

Difficulty test_difficulty(const Domain& domain, const Demonstration& demo,
                           const BeliefRegion& belief, int m, std::uint64_t seed);

// Knowing only the sign of every true weight.
ConstraintSet sign_orthant(const Domain& domain);

struct KMeans1D {
  std::vector<double> centroids;  // ascending
  std::vector<int> labels;        // per input value
  int iterations = 0;
};

// Lloyd's algorithm with centroids initialized at the (i + 0.5) / k
// quantiles of the distinct values. Throws DegenerateClusters with fewer than k distinct values.
KMeans1D kmeans_1d(std::span<const double> values, int k = kDifficultyClusters,
                   int max_iterations = 100);

// Clusters the overlaps of every candidate demo (overlap 0 excluded, along
// with any demo in `exclude`) and takes per_tier items nearest the 1st, 3rd
// and 5th centroid by descending overlap as low, medium and high difficulty.
// Throws PoolTooSmall with fewer than 5 usable candidates.
TestSuite build_test_suite(const Domain& domain, const BeliefRegion& post_belief,
                           int per_tier, int m, std::uint64_t seed,
                           std::span<const Demonstration> exclude = {},
                           int pool_cap = 200);

// Replays `response` from the test's start. Throws InvalidTrajectory on an
// illegal move or when the goal is not reached.
ResponseScore score_response(const Domain& domain, const TestItem& test,
                             std::span<const Action> response,
                             std::optional<int> confidence = std::nullopt);

// Per test, the fraction of m belief samples whose own optimal trajectory
// is optimal under the true weights.
std::vector<double> simulate_learner(const Domain& domain, const BeliefRegion& belief,
                                     const TestSuite& suite, int m, std::uint64_t seed);

}  // namespace cfteach

#endif  // CFTEACH_ASSESSMENT_HPP_
