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

#include "cfteach/assessment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <tuple>

#include "cfteach/curriculum.hpp"
#include "cfteach/errors.hpp"

namespace cfteach {

namespace {

double true_return(const Domain& domain, const Trajectory& t) {
  return domain.true_weights().dot(t.features);
}

bool same_demo(const Demonstration& a, const Demonstration& b) {
  return a.env_index == b.env_index && a.trajectory.same_path(b.trajectory);
}

}  // namespace

std::string_view tier_name(Tier t) {
  switch (t) {
    case Tier::kLow: return "low";
    case Tier::kMedium: return "medium";
    case Tier::kHigh: return "high";
  }
  return "?";
}

std::optional<Tier> parse_tier(std::string_view name) {
  for (Tier t : {Tier::kLow, Tier::kMedium, Tier::kHigh}) {
    if (tier_name(t) == name) return t;
  }
  return std::nullopt;
}

ConstraintSet extended_bec(const Domain& domain, const Demonstration& demo,
                           const BeliefRegion& belief, int m, std::uint64_t seed) {
  const GridMdp& mdp = domain.mdp(demo.env_index);
  ConstraintSet out =
      demo_constraints_standard(mdp, demo, domain.optimal_policy(demo.env_index));
  for (const WeightVector& w : sample_belief(belief, m, seed)) {
    out.merge(demo_constraints_counterfactual(mdp, demo, w));
  }
  return out;
}

Difficulty test_difficulty(const Domain& domain, const Demonstration& demo,
                           const BeliefRegion& belief, int m, std::uint64_t seed) {
  Difficulty d;
  d.overlap = estimate_overlap(belief, extended_bec(domain, demo, belief, m, seed));
  d.difficulty = d.overlap.fraction > 0.0 ? 1.0 / d.overlap.fraction : kInfiniteDifficulty;
  return d;
}

ConstraintSet sign_orthant(const Domain& domain) {
  const int k = domain.spec().size();
  ConstraintSet out(k);
  for (int i = 0; i < k; ++i) {
    const double w = domain.true_weights()[i];
    if (w == 0.0) continue;
    Eigen::VectorXd n = Eigen::VectorXd::Zero(k);
    n[i] = w > 0.0 ? 1.0 : -1.0;
    out.insert_direction(n);
  }
  return out;
}

KMeans1D kmeans_1d(std::span<const double> values, int k, int max_iterations) {
  if (k < 1) throw std::invalid_argument("k-means needs k >= 1");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const auto distinct = std::unique(sorted.begin(), sorted.end()) - sorted.begin();
  if (distinct < k) {
    throw DegenerateClusters(std::to_string(distinct) + " distinct values for " +
                             std::to_string(k) + " clusters");
  }
  // Quantiles of the distinct values, so repeated values cannot seed two
  // identical centroids.
  sorted.resize(static_cast<std::size_t>(distinct));
  const int n = static_cast<int>(sorted.size());

  KMeans1D out;
  out.centroids.resize(k);
  for (int i = 0; i < k; ++i) {
    const int at = std::min(n - 1, static_cast<int>(std::floor((i + 0.5) * n / k)));
    out.centroids[i] = sorted[at];
  }
  out.labels.assign(values.size(), -1);
  for (out.iterations = 0; out.iterations < max_iterations; ++out.iterations) {
    bool changed = false;
    for (std::size_t j = 0; j < values.size(); ++j) {
      int best = 0;
      for (int c = 1; c < k; ++c) {
        if (std::abs(values[j] - out.centroids[c]) < std::abs(values[j] - out.centroids[best])) {
          best = c;
        }
      }
      if (out.labels[j] != best) {
        out.labels[j] = best;
        changed = true;
      }
    }
    if (!changed) break;
    for (int c = 0; c < k; ++c) {
      double sum = 0.0;
      int count = 0;
      for (std::size_t j = 0; j < values.size(); ++j) {
        if (out.labels[j] == c) {
          sum += values[j];
          ++count;
        }
      }
      if (count > 0) out.centroids[c] = sum / count;
    }
  }
  // Lloyd steps keep 1-D centroids ordered, but make it explicit.
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return out.centroids[a] < out.centroids[b]; });
  std::vector<int> rank(k);
  std::vector<double> centroids(k);
  for (int r = 0; r < k; ++r) {
    rank[order[r]] = r;
    centroids[r] = out.centroids[order[r]];
  }
  out.centroids = std::move(centroids);
  for (int& l : out.labels) l = rank[l];
  return out;
}

TestSuite build_test_suite(const Domain& domain, const BeliefRegion& post_belief,
                           int per_tier, int m, std::uint64_t seed,
                           std::span<const Demonstration> exclude, int pool_cap) {
  if (per_tier < 1) throw std::invalid_argument("per_tier must be at least 1");
  std::vector<Demonstration> pool;
  for (Demonstration& d : candidate_pool(domain, pool_cap)) {
    const bool shown = std::any_of(exclude.begin(), exclude.end(),
                                   [&](const Demonstration& e) { return same_demo(d, e); });
    if (!shown) pool.push_back(std::move(d));
  }

  std::vector<TestItem> items;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const Difficulty d = test_difficulty(domain, pool[i], post_belief, m,
                                         derive_seed(seed, 2, i));
    if (d.overlap.fraction <= 0.0) continue;
    items.push_back(TestItem{pool[i], d.overlap.fraction, d.difficulty, Tier::kLow});
  }
  if (static_cast<int>(items.size()) < kDifficultyClusters) {
    throw PoolTooSmall(std::to_string(items.size()) +
                       " candidate tests with nonzero overlap; need at least " +
                       std::to_string(kDifficultyClusters));
  }
  if (static_cast<int>(items.size()) < 3 * per_tier) {
    throw PoolTooSmall(std::to_string(items.size()) + " candidate tests for " +
                       std::to_string(3 * per_tier) + " requested");
  }

  std::vector<double> overlaps;
  for (const TestItem& t : items) overlaps.push_back(t.overlap);
  const KMeans1D km = kmeans_1d(overlaps, kDifficultyClusters);

  TestSuite suite;
  suite.centroids.assign(km.centroids.rbegin(), km.centroids.rend());
  // Cluster rank r in descending order is label k-1-r.
  const std::array<std::pair<int, Tier>, 3> picks = {
      std::pair{0, Tier::kLow}, std::pair{2, Tier::kMedium}, std::pair{4, Tier::kHigh}};
  std::vector<bool> taken(items.size(), false);
  auto sort_key = [&](std::size_t j, double centroid) {
    return std::make_tuple(std::abs(items[j].overlap - centroid),
                           domain.environments()[items[j].demo.env_index].id, j);
  };
  for (auto [rank, tier] : picks) {
    const int label = kDifficultyClusters - 1 - rank;
    const double centroid = km.centroids[label];
    std::vector<std::size_t> members;
    std::vector<std::size_t> others;
    for (std::size_t j = 0; j < items.size(); ++j) {
      if (taken[j]) continue;
      (km.labels[j] == label ? members : others).push_back(j);
    }
    auto by_distance = [&](std::size_t a, std::size_t b) {
      return sort_key(a, centroid) < sort_key(b, centroid);
    };
    std::sort(members.begin(), members.end(), by_distance);
    // Short clusters borrow the nearest items from outside the picked tiers.
    std::sort(others.begin(), others.end(), by_distance);
    std::vector<std::size_t> chosen(members.begin(),
                                    members.begin() + std::min<std::size_t>(members.size(), per_tier));
    for (std::size_t j : others) {
      if (static_cast<int>(chosen.size()) >= per_tier) break;
      const int r = kDifficultyClusters - 1 - km.labels[j];
      if (r == 0 || r == 2 || r == 4) continue;
      chosen.push_back(j);
    }
    for (std::size_t j : chosen) {
      taken[j] = true;
      TestItem t = items[j];
      t.tier = tier;
      suite.items.push_back(std::move(t));
    }
  }
  return suite;
}

ResponseScore score_response(const Domain& domain, const TestItem& test,
                             std::span<const Action> response,
                             std::optional<int> confidence) {
  if (confidence && (*confidence < 1 || *confidence > 5)) {
    throw InvalidTrajectory("confidence must be an integer from 1 to 5");
  }
  const GridMdp& mdp = domain.mdp(test.demo.env_index);
  const Trajectory t = replay(mdp, test.demo.trajectory.start, response);
  const State end = t.steps.empty() ? t.start : t.steps.back().to;
  if (!mdp.is_goal(mdp.index(end))) {
    throw InvalidTrajectory("the response does not reach the goal");
  }
  ResponseScore s;
  s.reward_gap =
      std::max(0.0, true_return(domain, test.demo.trajectory) - true_return(domain, t));
  s.optimal = s.reward_gap <= kOptimalityTolerance;
  s.confidence = confidence;
  return s;
}

std::vector<double> simulate_learner(const Domain& domain, const BeliefRegion& belief,
                                     const TestSuite& suite, int m, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("simulate_learner needs m >= 1");
  const auto samples = sample_belief(belief, m, seed);
  std::vector<double> out;
  for (const TestItem& test : suite.items) {
    const GridMdp& mdp = domain.mdp(test.demo.env_index);
    const double best = true_return(domain, test.demo.trajectory);
    int correct = 0;
    for (const WeightVector& w : samples) {
      const State start = test.demo.trajectory.start;
      const BeliefPlan plan = plan_belief(mdp, w, std::span<const State>(&start, 1));
      if (!plan.policy) continue;
      try {
        const Trajectory t = rollout(mdp, *plan.policy, test.demo.trajectory.start);
        correct += true_return(domain, t) >= best - kOptimalityTolerance;
      } catch (const CycleDetected&) {
      }
    }
    out.push_back(static_cast<double>(correct) / m);
  }
  return out;
}

}  // namespace cfteach
