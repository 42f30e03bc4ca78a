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

#include "cfteach/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <random>

#include <fmt/format.h>

#include "cfteach/curriculum.hpp"
#include "cfteach/errors.hpp"
#include "cfteach/sphere.hpp"

namespace cfteach {

namespace {

constexpr double kReturnTolerance = 1e-9;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

class PathSearch {
 public:
  PathSearch(const GridMdp& mdp, const WeightVector& w) : mdp_(mdp), w_(w) {
    const auto goal = mdp.env().goal();
    gx_ = goal->first;
    gy_ = goal->second;
    // Optimistic per-step rewards: moves that keep the flags and steps that
    // set a flag (each flag at most once along any path).
    for (int s = 0; s < mdp.num_states(); ++s) {
      for (const Transition& t : mdp.transitions(s)) {
        const double r = w.dot(t.phi);
        if (mdp.state(t.next).flags == mdp.state(s).flags) {
          move_max_ = std::max(move_max_, r);
        } else {
          flag_max_ = std::max(flag_max_, r);
        }
      }
    }
    on_path_.assign(mdp.num_states(), false);
  }

  double best(const State& start) {
    best_ = -std::numeric_limits<double>::infinity();
    dfs(mdp_.index(start), 0.0);
    return best_;
  }

 private:
  double optimistic(int s) const {
    const State st = mdp_.state(s);
    const int unset = static_cast<int>(mdp_.spec().flags().size()) - std::popcount(st.flags);
    const int dist = std::abs(st.x - gx_) + std::abs(st.y - gy_);
    if (move_max_ >= 0.0) return std::numeric_limits<double>::infinity();
    return std::max(0, dist - unset) * move_max_ + unset * std::max(0.0, flag_max_);
  }

  void dfs(int s, double acc) {
    if (mdp_.is_goal(s)) {
      best_ = std::max(best_, acc);
      return;
    }
    if (acc + optimistic(s) <= best_) return;
    on_path_[s] = true;
    for (const Transition& t : mdp_.transitions(s)) {
      if (on_path_[t.next]) continue;
      dfs(t.next, acc + w_.dot(t.phi));
    }
    on_path_[s] = false;
  }

  const GridMdp& mdp_;
  const WeightVector& w_;
  int gx_ = 0;
  int gy_ = 0;
  double move_max_ = -std::numeric_limits<double>::infinity();
  double flag_max_ = -std::numeric_limits<double>::infinity();
  std::vector<bool> on_path_;
  double best_ = 0.0;
};

// Every reachable non-goal state of `env` as a start.
GridEnvironment with_all_starts(const GridEnvironment& env, const FeatureSpec& spec) {
  const GridMdp mdp(spec, env, 1.0);
  GridEnvironment out = env;
  out.starts.clear();
  for (int s : reachable_states(mdp, env.starts)) {
    if (!mdp.is_goal(s)) out.starts.push_back(mdp.state(s));
  }
  return out;
}

bool keeps_demos_optimal(const GridMdp& mdp, const WeightVector& w,
                         std::span<const Demonstration> demos) {
  std::optional<Policy> pi;
  try {
    pi = solve_optimal_policy(mdp, w);
  } catch (const NonTerminating&) {
    return false;
  }
  for (const Demonstration& d : demos) {
    const double demo_return = w.dot(d.trajectory.features);
    if (demo_return < pi->value(mdp.index(d.trajectory.start)) - kReturnTolerance) return false;
  }
  return true;
}

bool within_two_cis(const AreaEstimate& a, const AreaEstimate& b) {
  return std::abs(a.fraction - b.fraction) <= 2.0 * std::hypot(a.half_width, b.half_width);
}

}  // namespace

std::string_view oracle_check_name(OracleCheck c) {
  switch (c) {
    case OracleCheck::kPlannerOptimality: return "planner-optimality";
    case OracleCheck::kBecMembership: return "bec-membership";
    case OracleCheck::kRedundancy: return "redundancy";
  }
  return "?";
}

std::optional<OracleCheck> parse_oracle_check(std::string_view name) {
  for (OracleCheck c : {OracleCheck::kPlannerOptimality, OracleCheck::kBecMembership,
                        OracleCheck::kRedundancy}) {
    if (oracle_check_name(c) == name) return c;
  }
  return std::nullopt;
}

bool OracleReport::pass() const {
  return !cases.empty() &&
         std::all_of(cases.begin(), cases.end(), [](const OracleCase& c) { return c.pass; });
}

nlohmann::json OracleReport::to_json() const {
  nlohmann::json out;
  out["check"] = std::string(oracle_check_name(check));
  out["pass"] = pass();
  out["seconds"] = seconds;
  nlohmann::json list = nlohmann::json::array();
  for (const OracleCase& c : cases) {
    list.push_back({{"label", c.label}, {"pass", c.pass}, {"detail", c.detail}});
  }
  out["cases"] = std::move(list);
  return out;
}

std::vector<GridEnvironment> oracle_environments(BuiltinDomain kind, int count,
                                                 int max_side, std::uint64_t seed) {
  std::vector<GridEnvironment> out;
  for (int i = 0; i < count; ++i) {
    std::mt19937_64 rng(derive_seed(seed, 7, i));
    const int w = std::uniform_int_distribution<int>(3, max_side)(rng);
    const int h = std::uniform_int_distribution<int>(3, max_side)(rng);
    out.push_back(random_environment(kind, fmt::format("oracle-{:02d}", i), w, h, rng()));
  }
  return out;
}

double brute_force_best_return(const GridMdp& mdp, const WeightVector& w,
                               const State& start) {
  PathSearch search(mdp, w);
  const double best = search.best(start);
  if (!std::isfinite(best)) {
    throw Unreachable("no path to the goal from the given start in '" + mdp.env().id + "'");
  }
  return best;
}

OracleReport check_planner_optimality(const FeatureSpec& spec, const WeightVector& w,
                                      std::span<const GridEnvironment> envs) {
  const auto t0 = Clock::now();
  OracleReport report;
  report.check = OracleCheck::kPlannerOptimality;
  for (const GridEnvironment& env : envs) {
    const GridMdp mdp(spec, env, 1.0);
    const Policy pi = solve_optimal_policy(mdp, w);
    double worst = 0.0;
    for (const State& start : env.starts) {
      const double engine = w.dot(rollout(mdp, pi, start).features);
      const double brute = brute_force_best_return(mdp, w, start);
      worst = std::max(worst, std::abs(engine - brute));
    }
    report.cases.push_back({env.id, worst <= kReturnTolerance,
                            fmt::format("{}x{}, {} starts, max |planner - brute force| = {:.3g}",
                                        env.width, env.height, env.starts.size(), worst)});
  }
  report.seconds = seconds_since(t0);
  return report;
}

OracleReport check_bec_membership(const FeatureSpec& spec, const WeightVector& w,
                                  std::span<const GridEnvironment> envs,
                                  const BecMembershipOptions& options) {
  const auto t0 = Clock::now();
  OracleReport report;
  report.check = OracleCheck::kBecMembership;
  const auto weights = sample_sphere(spec.size(), options.n_weights, options.seed);
  for (std::size_t e = 0; e < envs.size(); ++e) {
    const GridEnvironment env = with_all_starts(envs[e], spec);
    const GridMdp mdp(spec, env, 1.0);
    const Policy pi = solve_optimal_policy(mdp, w);
    std::vector<Demonstration> demos;
    ConstraintSet cs(spec.size());
    for (const State& start : env.starts) {
      Demonstration d{0, rollout(mdp, pi, start)};
      cs.merge(demo_constraints_standard(mdp, d, pi));
      demos.push_back(std::move(d));
    }
    if (options.inject_fault && !cs.empty()) {
      ConstraintSet flipped(spec.size());
      flipped.insert_direction(-cs[0].normal());
      for (int i = 1; i < cs.size(); ++i) flipped.insert(cs[i]);
      cs = std::move(flipped);
    }
    int consistent = 0;
    for (const WeightVector& v : weights) consistent += keeps_demos_optimal(mdp, v, demos);
    const AreaEstimate replanned = AreaEstimate::from_count(consistent, options.n_weights);
    const AreaEstimate area =
        estimate_area(cs, options.area_samples, derive_seed(options.seed, 11, e));
    report.cases.push_back(
        {env.id, within_two_cis(replanned, area),
         fmt::format("{} demos, {} constraints: replanning {:.4f} +/- {:.4f}, "
                     "constraint area {:.4f} +/- {:.4f}",
                     demos.size(), cs.size(), replanned.fraction, replanned.half_width,
                     area.fraction, area.half_width)});
  }
  report.seconds = seconds_since(t0);
  return report;
}

OracleReport check_redundancy(const ConstraintSet& cs, std::string label, int n_samples,
                              std::uint64_t seed) {
  const auto t0 = Clock::now();
  OracleReport report;
  report.check = OracleCheck::kRedundancy;
  const ConstraintSet minimal = minimal_constraint_set(cs, n_samples, seed);
  // A cloud the engine never saw.
  const auto cloud = SphereSample::draw(cs.dim(), n_samples, derive_seed(seed, 13));
  const int kept_inside = static_cast<int>(cloud->inside(minimal).size());
  for (int i = 0; i < minimal.size(); ++i) {
    const int freed = static_cast<int>(cloud->inside(minimal.without(i)).size()) - kept_inside;
    report.cases.push_back({fmt::format("{} kept[{}]", label, i), freed > 0,
                            fmt::format("removing it frees {} of {} points", freed, n_samples)});
  }
  const int full_inside = static_cast<int>(cloud->inside(cs).size());
  const int dropped = cs.size() - minimal.size();
  const AreaEstimate gap = AreaEstimate::from_count(kept_inside - full_inside, n_samples);
  const double allowance = dropped * kRedundancyArea;
  report.cases.push_back(
      {label + " dropped", gap.fraction <= allowance + 2.0 * gap.half_width,
       fmt::format("{} dropped constraints cut {:.5f} together; allowance {:.5f}", dropped,
                   gap.fraction, allowance)});
  report.seconds = seconds_since(t0);
  return report;
}

OracleReport run_oracle(OracleCheck check, std::string_view domain_ref, std::uint64_t seed,
                        bool inject_fault) {
  const auto builtin = parse_builtin(domain_ref);
  const Domain domain = resolve_domain(domain_ref);
  std::vector<GridEnvironment> envs;
  if (builtin) {
    const bool bec = check == OracleCheck::kBecMembership;
    envs = oracle_environments(*builtin, bec ? 10 : 20, bec ? 4 : 6, seed);
  } else {
    for (const GridEnvironment& env : domain.environments()) {
      if (env.width > kOracleMaxSide || env.height > kOracleMaxSide) {
        throw SemanticError(fmt::format("environment '{}' is {}x{}; oracles take at most {}x{}",
                                        env.id, env.width, env.height, kOracleMaxSide,
                                        kOracleMaxSide));
      }
      envs.push_back(env);
    }
  }
  switch (check) {
    case OracleCheck::kPlannerOptimality:
      return check_planner_optimality(domain.spec(), domain.true_weights(), envs);
    case OracleCheck::kBecMembership: {
      BecMembershipOptions o;
      o.seed = seed;
      o.inject_fault = inject_fault;
      return check_bec_membership(domain.spec(), domain.true_weights(), envs, o);
    }
    case OracleCheck::kRedundancy: {
      ConstraintSet all(domain.spec().size());
      for (const Demonstration& d : candidate_pool(domain, 200)) {
        all.merge(demo_constraints_standard(domain.mdp(d.env_index), d,
                                            domain.optimal_policy(d.env_index)));
      }
      return check_redundancy(all, domain.name(), kDefaultAreaSamples, seed);
    }
  }
  throw std::logic_error("unknown oracle check");
}

}  // namespace cfteach
