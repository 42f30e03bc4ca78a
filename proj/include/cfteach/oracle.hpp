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

// Independent checks of the engine: exhaustive path search against the
// planner, replanning against constraint regions, leave-one-out against
// redundancy removal.

#ifndef CFTEACH_ORACLE_HPP_
#define CFTEACH_ORACLE_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cfteach/constraints.hpp"
#include "cfteach/domain_io.hpp"
#include "cfteach/mdp.hpp"

namespace cfteach {

enum class OracleCheck { kPlannerOptimality, kBecMembership, kRedundancy };

std::string_view oracle_check_name(OracleCheck c);
std::optional<OracleCheck> parse_oracle_check(std::string_view name);

inline constexpr int kOracleMaxSide = 8;

struct OracleCase {
  std::string label;
  bool pass = false;
  std::string detail;
};

struct OracleReport {
  OracleCheck check = OracleCheck::kPlannerOptimality;
  std::vector<OracleCase> cases;
  double seconds = 0.0;

  bool pass() const;
  nlohmann::json to_json() const;
};

// Small random layouts of a built-in kind, sides drawn from [3, max_side].
std::vector<GridEnvironment> oracle_environments(BuiltinDomain kind, int count,
                                                 int max_side, std::uint64_t seed);

// Best return over all simple state paths from `start` to the goal, by
// depth-first enumeration with an optimistic bound. Exact whenever every
// cycle has negative return. Throws Unreachable when no path exists.
double brute_force_best_return(const GridMdp& mdp, const WeightVector& w,
                               const State& start);

// Planner rollout return vs. brute force from every start, within 1e-9.
OracleReport check_planner_optimality(const FeatureSpec& spec, const WeightVector& w,
                                      std::span<const GridEnvironment> envs);

struct BecMembershipOptions {
  int n_weights = 10'000;
  int area_samples = kDefaultAreaSamples;
  std::uint64_t seed = 0;
  // Negative control: flips the sign of one constraint before comparing.
  bool inject_fault = false;
};

// Per environment, demos from every reachable non-goal state. The fraction
// of sampled weights under which replanning keeps all demos optimal must
// match the area of their standard constraints within 2 combined CIs.
OracleReport check_bec_membership(const FeatureSpec& spec, const WeightVector& w,
                                  std::span<const GridEnvironment> envs,
                                  const BecMembershipOptions& options = {});

// Every kept constraint of minimal_constraint_set(cs) must cut area on its
// own, and the dropped ones together must cut less than their allowance.
OracleReport check_redundancy(const ConstraintSet& cs, std::string label,
                              int n_samples = kDefaultAreaSamples, std::uint64_t seed = 0);

// The oracle run used by the CLI: built-ins get generated environments,
// config domains are checked on their own (each at most 8x8). The fault
// injection applies to bec-membership only.
OracleReport run_oracle(OracleCheck check, std::string_view domain_ref, std::uint64_t seed,
                        bool inject_fault = false);

}  // namespace cfteach

#endif  // CFTEACH_ORACLE_HPP_
