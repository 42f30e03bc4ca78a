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

#include "cfteach/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "cfteach/errors.hpp"

namespace cfteach {

namespace {

std::string describe_step(const Demonstration& demo, std::size_t t) {
  const Step& st = demo.trajectory.steps[t];
  return "step " + std::to_string(t) + " at (" + std::to_string(st.from.x) + "," +
         std::to_string(st.from.y) + ") of '" + demo.env_id() + "'";
}

// suffix[t] = sum_{i >= t} discount^{i-t} phi_i; suffix[T] = 0.
std::vector<FeatureVector> suffix_features(const GridMdp& mdp,
                                           const Trajectory& traj) {
  const int k = mdp.num_features();
  const std::size_t len = traj.steps.size();
  std::vector<FeatureVector> out(len + 1, FeatureVector::Zero(k));
  for (std::size_t t = len; t-- > 0;) {
    const Step& st = traj.steps[t];
    const Transition* tr = mdp.find(mdp.index(st.from), st.action);
    if (tr == nullptr || tr->next != mdp.index(st.to)) {
      throw InvalidTrajectory(std::string("illegal action '") +
                              std::string(action_name(st.action)) + "' at step " +
                              std::to_string(t) + " of '" + traj.env_id + "'");
    }
    out[t] = tr->phi + mdp.discount() * out[t + 1];
  }
  return out;
}

}  // namespace

ConstraintSet demo_constraints_standard(const GridMdp& mdp,
                                        const Demonstration& demo,
                                        const Policy& optimal) {
  ConstraintSet out(mdp.num_features());
  const auto& steps = demo.trajectory.steps;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const int s = mdp.index(steps[t].from);
    const auto expected = optimal.action(s);
    if (!expected || *expected != steps[t].action) {
      throw PolicyMismatch("demonstration disagrees with the optimal policy at " +
                           describe_step(demo, t));
    }
    const FeatureVector mu = successor_features(mdp, optimal, steps[t].from, steps[t].action);
    for (const Transition& alt : mdp.transitions(s)) {
      if (alt.action == steps[t].action) continue;
      out.insert_direction(mu - successor_features(mdp, optimal, steps[t].from, alt.action));
    }
  }
  return out;
}

namespace {

template <typename Solve>
BeliefPlan plan_with(const WeightVector& w, Solve solve) {
  BeliefPlan plan{w, std::nullopt, std::nullopt, {}};
  try {
    plan.policy = solve();
  } catch (const NonTerminating& e) {
    plan.loop_features = e.cycle_features();
    plan.loop_states = e.cycle_states();
  }
  return plan;
}

}  // namespace

BeliefPlan plan_belief(const GridMdp& mdp, const WeightVector& w) {
  return plan_with(w, [&] { return solve_optimal_policy(mdp, w); });
}

BeliefPlan plan_belief(const GridMdp& mdp, const WeightVector& w,
                       std::span<const State> from) {
  return plan_with(w, [&] { return solve_optimal_policy(mdp, w, from); });
}

ConstraintSet counterfactual_constraints(const GridMdp& mdp,
                                         const Demonstration& demo,
                                         const BeliefPlan& plan,
                                         CounterfactualMode mode) {
  const int k = mdp.num_features();
  ConstraintSet out(k);
  const auto& steps = demo.trajectory.steps;

  if (!plan.policy) {
    // The learner would loop forever collecting reward; the demo shows the
    // loop is worth less than nothing, wherever it is reachable from the demo.
    if (!plan.loop_features || plan.loop_states.empty() || steps.empty()) return out;
    const std::vector<State> from{steps.front().from};
    const auto reach = reachable_states(mdp, from);
    const bool reachable = std::any_of(plan.loop_states.begin(), plan.loop_states.end(),
                                       [&](int s) {
                                         return std::binary_search(reach.begin(),
                                                                   reach.end(), s);
                                       });
    if (reachable) {
      out.insert_direction(-*plan.loop_features);
      return out;
    }
    // The loop is elsewhere; what the learner does from here is still defined.
    const BeliefPlan local = plan_belief(mdp, plan.weights, from);
    if (!local.policy && !local.loop_features) return out;
    return counterfactual_constraints(mdp, demo, local, mode);
  }

  const Policy& pi = *plan.policy;
  if (mode == CounterfactualMode::kWholeTrajectory) {
    const auto suffix = suffix_features(mdp, demo.trajectory);
    for (std::size_t t = 0; t < steps.size(); ++t) {
      FeatureVector mu_h;
      try {
        mu_h = rollout(mdp, pi, steps[t].from).features;
      } catch (const CycleDetected&) {
        continue;  // only possible when discounting hides a loop
      }
      out.insert_direction(suffix[t] - mu_h);
    }
    return out;
  }

  for (std::size_t t = 0; t < steps.size(); ++t) {
    const int s = mdp.index(steps[t].from);
    try {
      const FeatureVector mu = successor_features(mdp, pi, steps[t].from, steps[t].action);
      for (const Transition& alt : mdp.transitions(s)) {
        if (alt.action == steps[t].action) continue;
        out.insert_direction(mu - successor_features(mdp, pi, steps[t].from, alt.action));
      }
    } catch (const CycleDetected&) {
      continue;
    }
  }
  return out;
}

ConstraintSet demo_constraints_counterfactual(const GridMdp& mdp,
                                              const Demonstration& demo,
                                              const WeightVector& w_h,
                                              CounterfactualMode mode) {
  return counterfactual_constraints(mdp, demo, plan_belief(mdp, w_h), mode);
}

std::optional<Eigen::VectorXd> find_interior_point(const ConstraintSet& cs,
                                                   const SphereSample& cloud) {
  if (cs.empty()) return cloud.points().col(0);
  const Eigen::MatrixXd normals = cs.matrix();
  const Eigen::MatrixXd dots = normals * cloud.points();
  Eigen::Index best_j = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < dots.cols(); ++j) {
    const double m = dots.col(j).minCoeff();
    if (m > best) {
      best = m;
      best_j = j;
    }
  }
  Eigen::VectorXd w = cloud.points().col(best_j);
  if (best > 0.0) return w;

  // Projected subgradient ascent on the worst margin.
  Eigen::VectorXd best_w = w;
  for (int it = 0; it < 5000; ++it) {
    Eigen::Index worst = 0;
    const double margin = (normals * w).minCoeff(&worst);
    if (margin > best) {
      best = margin;
      best_w = w;
    }
    if (best > 1e-12) return best_w;
    const double step = 0.1 / std::sqrt(1.0 + it);
    w += step * normals.row(worst).transpose();
    w.normalize();
  }
  return std::nullopt;
}

ConstraintSet minimal_constraint_set(const ConstraintSet& cs, int n_samples,
                                     std::uint64_t seed) {
  if (cs.empty()) return cs;
  if (n_samples < kMinAreaSamples) {
    throw std::invalid_argument("minimal_constraint_set needs at least 1000 samples");
  }
  const auto cloud = SphereSample::draw(cs.dim(), n_samples, seed);
  if (!find_interior_point(cs, *cloud)) {
    throw InfeasibleSet("no unit weight vector satisfies all " +
                        std::to_string(cs.size()) + " constraints");
  }

  const int c = cs.size();
  const int n = cloud->size();
  // violates[i * n + j]: point j is on the wrong side of constraint i.
  std::vector<std::uint8_t> violates(static_cast<std::size_t>(c) * n);
  std::vector<int> count(n, 0);
  for (int i = 0; i < c; ++i) {
    const Eigen::RowVectorXd row = (cs[i].normal().transpose() * cloud->points());
    for (int j = 0; j < n; ++j) {
      if (row[j] < 0.0) {
        violates[static_cast<std::size_t>(i) * n + j] = 1;
        ++count[j];
      }
    }
  }
  std::vector<bool> alive(c, true);
  auto sole_violator = [&](int j) {
    for (int i = 0; i < c; ++i) {
      if (alive[i] && violates[static_cast<std::size_t>(i) * n + j]) return i;
    }
    return -1;
  };
  // exclusive[i]: points cut off by constraint i and no other live one.
  std::vector<int> exclusive(c, 0);
  for (int j = 0; j < n; ++j) {
    if (count[j] == 1) ++exclusive[sole_violator(j)];
  }

  const double threshold = kRedundancyArea * n;
  for (;;) {
    int pick = -1;
    for (int i = 0; i < c; ++i) {
      if (alive[i] && (pick < 0 || exclusive[i] < exclusive[pick])) pick = i;
    }
    if (pick < 0 || exclusive[pick] >= threshold) break;
    alive[pick] = false;
    for (int j = 0; j < n; ++j) {
      if (!violates[static_cast<std::size_t>(pick) * n + j]) continue;
      if (--count[j] == 1) ++exclusive[sole_violator(j)];
    }
  }

  ConstraintSet out(cs.dim());
  for (int i = 0; i < c; ++i) {
    if (alive[i]) out.insert(cs[i]);
  }
  return out;
}

ConflictResolution resolve_conflicts(const ConstraintSet& cs,
                                     const SphereSample& cloud) {
  ConflictResolution res{cs, {}};
  while (!res.constraints.empty() && !find_interior_point(res.constraints, cloud)) {
    int pick = 0;
    std::size_t freed = 0;
    for (int i = 0; i < res.constraints.size(); ++i) {
      const std::size_t inside = cloud.inside(res.constraints.without(i)).size();
      if (inside > freed) {
        freed = inside;
        pick = i;
      }
    }
    res.dropped.push_back(res.constraints[pick]);
    res.constraints = res.constraints.without(pick);
  }
  return res;
}

ConstraintSet policy_bec(const Domain& domain, std::span<const Demonstration> pool,
                         int n_samples, std::uint64_t seed) {
  ConstraintSet all(domain.spec().size());
  for (const Demonstration& demo : pool) {
    all.merge(demo_constraints_standard(domain.mdp(demo.env_index), demo,
                                        domain.optimal_policy(demo.env_index)));
  }
  return minimal_constraint_set(all, n_samples, seed);
}

ConstraintSet policy_bec(const Domain& domain) {
  const auto pool = enumerate_candidate_demos(domain);
  return policy_bec(domain, pool);
}

}  // namespace cfteach
