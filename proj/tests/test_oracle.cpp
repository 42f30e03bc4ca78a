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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "cfteach/curriculum.hpp"
#include "cfteach/errors.hpp"
#include "cfteach/oracle.hpp"
#include "test_util.hpp"

namespace cfteach {
namespace {

// Plain DFS over simple paths, no pruning.
double naive_best(const GridMdp& mdp, const WeightVector& w, int s, std::vector<bool>& on_path) {
  if (mdp.is_goal(s)) return 0.0;
  double best = -std::numeric_limits<double>::infinity();
  on_path[s] = true;
  for (const Transition& t : mdp.transitions(s)) {
    if (on_path[t.next]) continue;
    best = std::max(best, w.dot(t.phi) + naive_best(mdp, w, t.next, on_path));
  }
  on_path[s] = false;
  return best;
}

WeightVector random_weights(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::Vector3d v(g(rng), g(rng), -std::abs(g(rng)) - 0.05);
  return WeightVector::normalized(Eigen::VectorXd(v));
}

TEST(BruteForce, MatchesUnprunedSearch) {
  std::mt19937_64 rng(3);
  for (BuiltinDomain kind : kBuiltinDomains) {
    for (const GridEnvironment& env : oracle_environments(kind, 6, 4, 11)) {
      const GridMdp mdp(builtin_features(kind), env, 1.0);
      for (int trial = 0; trial < 4; ++trial) {
        const WeightVector w = random_weights(rng);
        for (const State& s : env.starts) {
          std::vector<bool> on_path(mdp.num_states(), false);
          const double expected = naive_best(mdp, w, mdp.index(s), on_path);
          EXPECT_NEAR(brute_force_best_return(mdp, w, s), expected, 1e-12)
              << env.id << " " << w.values().transpose();
        }
      }
    }
  }
}

TEST(BruteForce, UnreachableGoal) {
  const GridEnvironment env = GridEnvironment::from_rows("e", {".#G"}, {{0, 0, 0}});
  const GridMdp mdp(builtin_features(BuiltinDomain::kDelivery), env, 1.0);
  EXPECT_THROW(brute_force_best_return(mdp, builtin_weights(BuiltinDomain::kDelivery), {0, 0, 0}),
               Unreachable);
}

TEST(OracleEnvironments, SizesAndIds) {
  const auto envs = oracle_environments(BuiltinDomain::kTiles, 10, 6, 1);
  ASSERT_EQ(envs.size(), 10u);
  for (const GridEnvironment& e : envs) {
    EXPECT_GE(std::min(e.width, e.height), 3);
    EXPECT_LE(std::max(e.width, e.height), 6);
    EXPECT_EQ(e.id.rfind("oracle-", 0), 0u);
  }
}

TEST(PlannerOracle, BuiltinWeightsPass) {
  for (BuiltinDomain kind : kBuiltinDomains) {
    const auto envs = oracle_environments(kind, 10, 5, 2);
    const OracleReport r = check_planner_optimality(builtin_features(kind), builtin_weights(kind), envs);
    EXPECT_TRUE(r.pass()) << r.to_json().dump();
    EXPECT_EQ(r.cases.size(), envs.size());
  }
}

TEST(PlannerOracle, RandomWeightsPass) {
  std::mt19937_64 rng(8);
  const auto envs = oracle_environments(BuiltinDomain::kDelivery, 5, 5, 4);
  for (int trial = 0; trial < 5; ++trial) {
    const WeightVector w = random_weights(rng);
    const OracleReport r = check_planner_optimality(builtin_features(BuiltinDomain::kDelivery), w, envs);
    EXPECT_TRUE(r.pass()) << r.to_json().dump();
  }
}

TEST(BecOracle, PassesAndCatchesAFlippedConstraint) {
  for (BuiltinDomain kind : kBuiltinDomains) {
    const auto envs = oracle_environments(kind, 3, 4, 5);
    BecMembershipOptions o;
    o.n_weights = 4000;
    const OracleReport ok = check_bec_membership(builtin_features(kind), builtin_weights(kind), envs, o);
    EXPECT_TRUE(ok.pass()) << ok.to_json().dump();
    o.inject_fault = true;
    const OracleReport bad = check_bec_membership(builtin_features(kind), builtin_weights(kind), envs, o);
    EXPECT_FALSE(bad.pass()) << builtin_name(kind);
  }
}

TEST(RedundancyOracle, PolicyBecUnionPasses) {
  const Domain d = builtin_domain(BuiltinDomain::kDelivery);
  ConstraintSet all(3);
  for (const Demonstration& demo : candidate_pool(d, 200)) {
    all.merge(demo_constraints_standard(d.mdp(demo.env_index), demo, d.optimal_policy(demo.env_index)));
  }
  const OracleReport r = check_redundancy(all, "delivery");
  EXPECT_TRUE(r.pass()) << r.to_json().dump();
}

TEST(RunOracle, EveryCheckOnEveryBuiltin) {
  for (BuiltinDomain kind : kBuiltinDomains) {
    for (OracleCheck c : {OracleCheck::kPlannerOptimality, OracleCheck::kBecMembership,
                          OracleCheck::kRedundancy}) {
      const OracleReport r = run_oracle(c, builtin_name(kind), 0);
      EXPECT_TRUE(r.pass()) << builtin_name(kind) << " " << oracle_check_name(c);
      EXPECT_FALSE(r.cases.empty());
    }
    EXPECT_FALSE(run_oracle(OracleCheck::kBecMembership, builtin_name(kind), 0, true).pass());
  }
}

TEST(RunOracle, LargeConfigGridsAreRefused) {
  const auto path = std::filesystem::temp_directory_path() / "cfteach_oracle_big.json";
  {
    std::ofstream out(path);
    out << R"({"name": "big", "features": [{"name": "mud", "trigger": "mud_exit"},
               {"name": "action", "trigger": "action"}], "weights": [-1, -1], "discount": 1,
               "environments": [{"grid": [")"
        << std::string(9, '.') << R"(", ")" << std::string(8, '.') << R"(G"], "start": [0, 0]}]})";
  }
  EXPECT_THROW(run_oracle(OracleCheck::kPlannerOptimality, path.string(), 0), SemanticError);
  std::filesystem::remove(path);
}

TEST(OracleReport, Json) {
  OracleReport r;
  r.check = OracleCheck::kRedundancy;
  r.cases = {{"a", true, ""}, {"b", false, "cut 0.2"}};
  EXPECT_FALSE(r.pass());
  const auto j = r.to_json();
  EXPECT_EQ(j.at("check"), "redundancy");
  EXPECT_EQ(j.at("pass"), false);
  EXPECT_EQ(j.at("cases").size(), 2u);
  for (OracleCheck c : {OracleCheck::kPlannerOptimality, OracleCheck::kBecMembership,
                        OracleCheck::kRedundancy}) {
    EXPECT_EQ(parse_oracle_check(oracle_check_name(c)), c);
  }
}

}  // namespace
}  // namespace cfteach
