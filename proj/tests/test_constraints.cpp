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

#include <random>

#include <gtest/gtest.h>

#include "cfteach/constraints.hpp"
#include "cfteach/curriculum.hpp"
#include "cfteach/domain_io.hpp"
#include "cfteach/errors.hpp"
#include "cfteach/oracle.hpp"
#include "test_util.hpp"

namespace cfteach {
namespace {

using testing::parallel;
using testing::vec;

bool has_parallel(const ConstraintSet& cs, const Eigen::VectorXd& direction) {
  for (const HalfSpaceConstraint& c : cs) {
    if (parallel(c.normal(), direction)) return true;
  }
  return false;
}

Domain single_env_domain(const std::vector<std::string>& rows, State start,
                         const WeightVector& w, BuiltinDomain kind = BuiltinDomain::kDelivery) {
  return Domain("t", builtin_features(kind), w, 1.0,
                {GridEnvironment::from_rows("e", rows, {start})});
}

Demonstration first_demo(const Domain& d) { return enumerate_candidate_demos(d).front(); }

// Replanning under `w` reproduces every demo's return.
bool replanning_consistent(const GridMdp& mdp, const WeightVector& w,
                           std::span<const Demonstration> demos) {
  try {
    const Policy pi = solve_optimal_policy(mdp, w);
    for (const Demonstration& d : demos) {
      if (w.dot(d.trajectory.features) < pi.value(mdp.index(d.trajectory.start)) - 1e-9) {
        return false;
      }
    }
    return true;
  } catch (const NonTerminating&) {
    return false;
  }
}

TEST(StandardConstraints, SinglePatchConveysMudTradeoff) {
  const Domain d = builtin_domain(BuiltinDomain::kDelivery);
  const int e = d.find_environment("delivery-single-patch");
  ASSERT_GE(e, 0);
  const Demonstration demo{e, rollout(d.mdp(e), d.optimal_policy(e), {0, 1, 0})};
  const ConstraintSet cs = demo_constraints_standard(d.mdp(e), demo, d.optimal_policy(e));
  EXPECT_TRUE(has_parallel(cs, vec({-1, 0, 2})));
  EXPECT_TRUE(has_parallel(cs, vec({0, 0, -1})));
  EXPECT_TRUE(cs.contains(d.true_weights().values()));
  // Every member forces a negative action weight together with the rest.
  EXPECT_FALSE(cs.contains(vec({0, 0, 1})));
}

TEST(StandardConstraints, ForcedPathGivesNothing) {
  const Domain d = single_env_domain({".G"}, {0, 0, 0}, WeightVector::normalized({0, 0, -1}));
  const Demonstration demo = first_demo(d);
  EXPECT_TRUE(demo_constraints_standard(d.mdp(0), demo, d.optimal_policy(0)).empty());
}

TEST(StandardConstraints, MismatchedPolicyThrows) {
  const Domain d = single_env_domain({"...", "..G"}, {0, 0, 0},
                                     WeightVector::normalized({0, 0, -1}));
  const GridMdp& mdp = d.mdp(0);
  const Demonstration detour{0, replay(mdp, {0, 0, 0}, testing::actions({"right", "right", "down"}))};
  EXPECT_THROW(demo_constraints_standard(mdp, detour, d.optimal_policy(0)), PolicyMismatch);
}

TEST(StandardConstraints, MatchReplanningOnOpenGrid) {
  const Domain d = single_env_domain({"..G", ".m.", "..."}, {0, 0, 0},
                                     builtin_weights(BuiltinDomain::kDelivery));
  const Demonstration demo = first_demo(d);
  ASSERT_EQ(demo.trajectory.actions(), testing::actions({"right", "right"}));
  const ConstraintSet cs = demo_constraints_standard(d.mdp(0), demo, d.optimal_policy(0));
  const std::vector<Demonstration> demos{demo};
  int mismatches = 0;
  for (const WeightVector& w : sample_sphere(3, 10000, 17)) {
    mismatches += cs.contains(w.values(), 0.0) != replanning_consistent(d.mdp(0), w, demos);
  }
  EXPECT_EQ(mismatches, 0);
}

TEST(StandardConstraints, SoundOnEveryBuiltinDemo) {
  for (BuiltinDomain kind : kBuiltinDomains) {
    const Domain d = builtin_domain(kind);
    for (const Demonstration& demo : candidate_pool(d, 200)) {
      const ConstraintSet cs =
          demo_constraints_standard(d.mdp(demo.env_index), demo, d.optimal_policy(demo.env_index));
      EXPECT_TRUE(cs.contains(d.true_weights().values())) << builtin_name(kind);
    }
  }
}

TEST(Counterfactual, TrueWeightsGiveNothing) {
  const Domain d = builtin_domain(BuiltinDomain::kDelivery);
  for (const Demonstration& demo : candidate_pool(d, 200)) {
    EXPECT_TRUE(
        demo_constraints_counterfactual(d.mdp(demo.env_index), demo, d.true_weights()).empty());
  }
}

TEST(Counterfactual, MudAverseBeliefBoundsMudCostFromAbove) {
  const Domain d = builtin_domain(BuiltinDomain::kDelivery);
  const int e = d.find_environment("delivery-two-patch");
  const Demonstration demo{e, rollout(d.mdp(e), d.optimal_policy(e), {0, 4, 0})};
  const ConstraintSet cs =
      demo_constraints_counterfactual(d.mdp(e), demo, WeightVector::normalized({-10, 0.1, -1}));
  // The averse learner takes the 8-action detour over the top.
  EXPECT_TRUE(has_parallel(cs, vec({1, 0, -4})));
  EXPECT_TRUE(cs.contains(d.true_weights().values()));
  // mud >= 4 * action: muds may cost at most two actions each.
  EXPECT_TRUE(cs.contains(WeightVector::normalized({-3.9, 0, -1}).values()));
  EXPECT_FALSE(cs.contains(WeightVector::normalized({-4.1, 0, -1}).values()));
}

TEST(Counterfactual, DivergingOnlyAtStartGivesOneConstraint) {
  const Domain d = single_env_domain({".m", ".G"}, {0, 0, 0},
                                     builtin_weights(BuiltinDomain::kDelivery));
  const Demonstration demo = first_demo(d);
  ASSERT_EQ(demo.trajectory.actions(), testing::actions({"down", "right"}));
  const ConstraintSet cs =
      demo_constraints_counterfactual(d.mdp(0), demo, WeightVector::normalized({0.5, 0, -1}));
  ASSERT_EQ(cs.size(), 1);
  EXPECT_TRUE(parallel(cs[0].normal(), vec({-1, 0, 0})));
}

TEST(Counterfactual, LoopingBeliefIsRuledOut) {
  const Domain d = single_env_domain({".m..G"}, {0, 0, 0},
                                     builtin_weights(BuiltinDomain::kDelivery));
  const Demonstration demo = first_demo(d);
  const WeightVector loving = WeightVector::normalized({5, 0, -1});
  const BeliefPlan plan = plan_belief(d.mdp(0), loving);
  ASSERT_FALSE(plan.policy.has_value());
  const ConstraintSet cs = counterfactual_constraints(d.mdp(0), demo, plan);
  ASSERT_EQ(cs.size(), 1);
  EXPECT_TRUE(parallel(cs[0].normal(), -*plan.loop_features));
  EXPECT_FALSE(cs.contains(loving.values()));
  EXPECT_TRUE(cs.contains(d.true_weights().values()));
}

TEST(Counterfactual, SoundAndEmptyWhenLearnerAgrees) {
  std::mt19937_64 rng(5);
  for (BuiltinDomain kind : kBuiltinDomains) {
    const Domain d = builtin_domain(kind);
    const BeliefRegion prior = BeliefRegion::create(default_prior(d.spec()), 1000, 0);
    const auto samples = sample_belief(prior, 20, rng());
    for (const Demonstration& demo : candidate_pool(d, 200)) {
      const GridMdp& mdp = d.mdp(demo.env_index);
      for (const WeightVector& w : samples) {
        const BeliefPlan plan = plan_belief(mdp, w);
        const ConstraintSet cs = counterfactual_constraints(mdp, demo, plan);
        ASSERT_TRUE(cs.contains(d.true_weights().values(), 1e-12)) << builtin_name(kind);
        if (!plan.policy) continue;
        bool agrees = true;
        for (const Step& s : demo.trajectory.steps) {
          agrees = agrees && plan.policy->action(mdp.index(s.from)) == s.action;
        }
        if (agrees) {
          EXPECT_TRUE(cs.empty());
        }
      }
    }
  }
}

// The literal variant compares two continuations under the learner's
// policy, neither of which is the demo, so it can exclude w*.
TEST(Counterfactual, OneStepVariantIsNotSound) {
  const Domain d = builtin_domain(BuiltinDomain::kDelivery);
  const int e = d.find_environment("delivery-single-patch");
  const Demonstration demo{e, rollout(d.mdp(e), d.optimal_policy(e), {0, 1, 0})};
  const WeightVector w_h = WeightVector::normalized({0.122928, 0.649765, -0.750129});
  const ConstraintSet whole = demo_constraints_counterfactual(d.mdp(e), demo, w_h);
  const ConstraintSet one_step = demo_constraints_counterfactual(
      d.mdp(e), demo, w_h, CounterfactualMode::kOneStepUnderBelief);
  EXPECT_TRUE(whole.contains(d.true_weights().values()));
  EXPECT_FALSE(one_step.contains(d.true_weights().values()));
}

TEST(MinimalSet, KeepsIndependentConstraints) {
  ConstraintSet cs(3);
  cs.insert_direction(vec({0, 0, -1}));
  cs.insert_direction(vec({0, -1, -1}));
  EXPECT_EQ(minimal_constraint_set(cs, 20000).size(), 2);
}

TEST(MinimalSet, DropsImpliedConstraints) {
  ConstraintSet cs(3);
  cs.insert_direction(vec({1, 0, 0}));
  cs.insert_direction(vec({0, 1, 0}));
  cs.insert_direction(vec({1, 1, 0}));
  cs.insert_direction(vec({2, 1, 0}));
  const ConstraintSet m = minimal_constraint_set(cs, 20000);
  EXPECT_EQ(m.size(), 2);
  EXPECT_TRUE(m.has(*normalize_constraint(vec({1, 0, 0}))));
  EXPECT_TRUE(m.has(*normalize_constraint(vec({0, 1, 0}))));
}

TEST(MinimalSet, InfeasibleThrows) {
  ConstraintSet cs(3);
  cs.insert_direction(vec({1, 0, 0}));
  cs.insert_direction(vec({-1, 0.01, 0}));
  cs.insert_direction(vec({-1, -0.01, 0}));
  EXPECT_THROW(minimal_constraint_set(cs, 20000), InfeasibleSet);
}

TEST(MinimalSet, PreservesMembershipOfImpliedCones) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto probes = sample_sphere(3, 10000, 99);
  for (int trial = 0; trial < 20; ++trial) {
    // Three generators plus positive combinations of them, which they imply.
    ConstraintSet cs(3);
    std::vector<Eigen::VectorXd> base;
    const Eigen::Vector3d center(g(rng), g(rng), g(rng));
    for (int i = 0; i < 3; ++i) {
      base.push_back(center.normalized() + 0.6 * Eigen::Vector3d(g(rng), g(rng), g(rng)));
      cs.insert_direction(base.back());
    }
    for (int i = 0; i < 3; ++i) {
      cs.insert_direction(u(rng) * base[0] + u(rng) * base[1] + u(rng) * base[2]);
    }
    ConstraintSet m(3);
    try {
      m = minimal_constraint_set(cs, 20000, trial);
    } catch (const InfeasibleSet&) {
      continue;
    }
    for (const WeightVector& w : probes) {
      ASSERT_EQ(m.contains(w.values(), 0.0), cs.contains(w.values(), 0.0)) << "trial " << trial;
    }
  }
}

TEST(MinimalSet, AgreesWithLeaveOneOut) {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  int checked = 0;
  for (int trial = 0; trial < 40 && checked < 15; ++trial) {
    const Eigen::Vector3d center(g(rng), g(rng), g(rng));
    ConstraintSet cs(3);
    const int n = 2 + trial % 5;
    for (int i = 0; i < n; ++i) {
      cs.insert_direction(center.normalized() + 0.8 * Eigen::Vector3d(g(rng), g(rng), g(rng)));
    }
    if (!find_interior_point(cs, *SphereSample::draw(3, 20000, trial))) continue;
    const OracleReport r = check_redundancy(cs, "cone", 50000, trial);
    EXPECT_TRUE(r.pass()) << r.to_json().dump();
    ++checked;
  }
  EXPECT_GE(checked, 10);
}

TEST(ResolveConflicts, FeasibleInputUnchanged) {
  ConstraintSet cs(3);
  cs.insert_direction(vec({1, 0, 0}));
  cs.insert_direction(vec({0, 1, 0}));
  const auto cloud = SphereSample::draw(3, 20000, 1);
  const ConflictResolution r = resolve_conflicts(cs, *cloud);
  EXPECT_EQ(r.constraints.size(), 2);
  EXPECT_TRUE(r.dropped.empty());
}

TEST(ResolveConflicts, DropsTheBlockingConstraint) {
  ConstraintSet cs(3);
  cs.insert_direction(vec({1, 0, 0}));
  cs.insert_direction(vec({0, 1, 0}));
  cs.insert_direction(vec({-1, -1, -0.1}));
  cs.insert_direction(vec({-1, -1, 0.1}));
  const auto cloud = SphereSample::draw(3, 20000, 1);
  const ConflictResolution r = resolve_conflicts(cs, *cloud);
  EXPECT_FALSE(r.dropped.empty());
  EXPECT_TRUE(find_interior_point(r.constraints, *cloud).has_value());
}

TEST(PolicyBec, BuiltinsAreInformativeAndSound) {
  for (BuiltinDomain kind : kBuiltinDomains) {
    const Domain d = builtin_domain(kind);
    const ConstraintSet bec = policy_bec(d);
    EXPECT_TRUE(bec.contains(d.true_weights().values())) << builtin_name(kind);
    const AreaEstimate a = estimate_area(bec);
    EXPECT_GT(a.fraction, 0.0) << builtin_name(kind);
    EXPECT_LT(a.fraction, 0.1) << builtin_name(kind);
  }
}

TEST(PolicyBec, DeliveryMatchesReplanning) {
  const Domain d = builtin_domain(BuiltinDomain::kDelivery);
  const auto pool = enumerate_candidate_demos(d);
  std::vector<std::vector<Demonstration>> by_env(d.num_environments());
  for (const Demonstration& demo : pool) by_env[demo.env_index].push_back(demo);
  const int n = 10000;
  int consistent = 0;
  for (const WeightVector& w : sample_sphere(3, n, 31)) {
    bool ok = true;
    for (int e = 0; e < d.num_environments() && ok; ++e) {
      ok = replanning_consistent(d.mdp(e), w, by_env[e]);
    }
    consistent += ok;
  }
  const AreaEstimate replanned = AreaEstimate::from_count(consistent, n);
  const AreaEstimate area = estimate_area(policy_bec(d), kDefaultAreaSamples, 32);
  EXPECT_TRUE(testing::within_cis(replanned, area))
      << replanned.fraction << " vs " << area.fraction;
}

}  // namespace
}  // namespace cfteach
