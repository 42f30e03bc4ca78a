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

// Turning demonstrations into half-space constraints on the reward weights:
// one-action deviations (standard IRL) and whole-trajectory counterfactuals
// produced by a learner holding some other weight vector.

#ifndef CFTEACH_CONSTRAINTS_HPP_
#define CFTEACH_CONSTRAINTS_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfteach/halfspace.hpp"
#include "cfteach/mdp.hpp"
#include "cfteach/sphere.hpp"

namespace cfteach {

// A constraint is redundant when the part of the sphere it alone cuts off
// is smaller than this fraction.
inline constexpr double kRedundancyArea = 1e-4;

enum class CounterfactualMode {
  // Demo suffix vs. the learner policy's whole rollout from the same state.
  kWholeTrajectory,
  // One-action deviations evaluated under the learner policy instead of the
  // optimal one.
  kOneStepUnderBelief,
};

// One constraint per (demo state, alternative legal action): the demo's
// successor features minus those of deviating once and then following
// `optimal`. Throws PolicyMismatch if the demo disagrees with `optimal`.
ConstraintSet demo_constraints_standard(const GridMdp& mdp,
                                        const Demonstration& demo,
                                        const Policy& optimal);

// The learner model for one sampled weight vector in one environment. When
// the weights admit a positive-value loop there is no policy; the loop is
// kept instead, since a finite demonstration rules it out.
struct BeliefPlan {
  WeightVector weights;
  std::optional<Policy> policy;
  std::optional<FeatureVector> loop_features;
  std::vector<int> loop_states;
};

BeliefPlan plan_belief(const GridMdp& mdp, const WeightVector& w);
// Planned over the states reachable from `from` only.
BeliefPlan plan_belief(const GridMdp& mdp, const WeightVector& w,
                       std::span<const State> from);

ConstraintSet counterfactual_constraints(
    const GridMdp& mdp, const Demonstration& demo, const BeliefPlan& plan,
    CounterfactualMode mode = CounterfactualMode::kWholeTrajectory);

// Convenience wrapper: plans under `w_h` and extracts the constraints.
ConstraintSet demo_constraints_counterfactual(
    const GridMdp& mdp, const Demonstration& demo, const WeightVector& w_h,
    CounterfactualMode mode = CounterfactualMode::kWholeTrajectory);

// A point strictly inside every half-space, if one can be found: the best
// cloud point refined by subgradient ascent on min_i n_i.w.
std::optional<Eigen::VectorXd> find_interior_point(const ConstraintSet& cs,
                                                   const SphereSample& cloud);

// Drops constraints whose exclusive cut is below kRedundancyArea, smallest
// cut first. Throws InfeasibleSet when no unit vector satisfies `cs`.
ConstraintSet minimal_constraint_set(const ConstraintSet& cs,
                                     int n_samples = kDefaultAreaSamples,
                                     std::uint64_t seed = 0);

struct ConflictResolution {
  ConstraintSet constraints;
  std::vector<HalfSpaceConstraint> dropped;
};

// Restores feasibility by repeatedly dropping the constraint whose removal
// frees the most area. A feasible input comes back unchanged.
ConflictResolution resolve_conflicts(const ConstraintSet& cs,
                                     const SphereSample& cloud);

// Minimal union of the standard constraints of every demonstration in the
// pool (the whole candidate pool when omitted).
ConstraintSet policy_bec(const Domain& domain,
                         std::span<const Demonstration> pool,
                         int n_samples = kDefaultAreaSamples,
                         std::uint64_t seed = 0);
ConstraintSet policy_bec(const Domain& domain);

}  // namespace cfteach

#endif  // CFTEACH_CONSTRAINTS_HPP_
