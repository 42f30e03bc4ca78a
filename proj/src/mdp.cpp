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

#include "cfteach/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "cfteach/errors.hpp"

namespace cfteach {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string describe(const State& s) {
  std::ostringstream os;
  os << "(" << s.x << "," << s.y << ")";
  if (s.flags != 0) os << "/flags=" << s.flags;
  return os.str();
}

bool is_move(Action a) { return a != Action::kPickup; }

std::pair<int, int> delta(Action a) {
  switch (a) {
    case Action::kUp:
      return {0, -1};
    case Action::kDown:
      return {0, 1};
    case Action::kLeft:
      return {-1, 0};
    case Action::kRight:
      return {1, 0};
    case Action::kPickup:
      break;
  }
  return {0, 0};
}

}  // namespace

std::optional<Annotation> parse_annotation(char c) {
  switch (c) {
    case '.':
    case '#':
    case 'm':
    case 'r':
    case 'G':
    case 'a':
    case 'b':
    case 'p':
    case 's':
      return static_cast<Annotation>(c);
    default:
      return std::nullopt;
  }
}

std::string_view action_name(Action a) {
  switch (a) {
    case Action::kUp:
      return "up";
    case Action::kDown:
      return "down";
    case Action::kLeft:
      return "left";
    case Action::kRight:
      return "right";
    case Action::kPickup:
      return "pickup";
  }
  return "?";
}

std::optional<Action> parse_action(std::string_view name) {
  for (Action a : kActionOrder) {
    if (action_name(a) == name) return a;
  }
  return std::nullopt;
}

std::string_view trigger_name(Trigger t) {
  switch (t) {
    case Trigger::kMudExit:
      return "mud_exit";
    case Trigger::kRecharge:
      return "recharge";
    case Trigger::kTileA:
      return "tile_a";
    case Trigger::kTileB:
      return "tile_b";
    case Trigger::kRide:
      return "ride";
    case Trigger::kPath:
      return "path";
    case Trigger::kAction:
      return "action";
  }
  return "?";
}

std::optional<Trigger> parse_trigger(std::string_view name) {
  for (Trigger t : {Trigger::kMudExit, Trigger::kRecharge, Trigger::kTileA,
                    Trigger::kTileB, Trigger::kRide, Trigger::kPath,
                    Trigger::kAction}) {
    if (trigger_name(t) == name) return t;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// FeatureSpec

FeatureSpec::FeatureSpec(std::vector<Feature> features)
    : features_(std::move(features)) {
  if (features_.size() < 2) {
    throw SemanticError("a domain needs at least two reward features");
  }
  bool recharge = false;
  bool ride = false;
  for (int i = 0; i < size(); ++i) {
    switch (features_[i].trigger) {
      case Trigger::kAction:
        if (action_index_ >= 0) {
          throw SemanticError("more than one action feature declared");
        }
        action_index_ = i;
        break;
      case Trigger::kRecharge:
        recharge = true;
        break;
      case Trigger::kRide:
        ride = true;
        break;
      default:
        break;
    }
  }
  if (action_index_ < 0) {
    throw SemanticError("exactly one feature must use the 'action' trigger");
  }
  if (recharge) flags_.emplace_back(kRechargedFlag);
  if (ride) flags_.emplace_back(kSkateboardFlag);
}

std::vector<std::string> FeatureSpec::names() const {
  std::vector<std::string> out;
  out.reserve(features_.size());
  for (const Feature& f : features_) out.push_back(f.name);
  return out;
}

int FeatureSpec::index_of(Trigger t) const {
  for (int i = 0; i < size(); ++i) {
    if (features_[i].trigger == t) return i;
  }
  return -1;
}

int FeatureSpec::flag_index(std::string_view name) const {
  for (int i = 0; i < static_cast<int>(flags_.size()); ++i) {
    if (flags_[i] == name) return i;
  }
  return -1;
}

// ---------------------------------------------------------------------------
// GridEnvironment

GridEnvironment GridEnvironment::from_rows(std::string id,
                                           const std::vector<std::string>& rows,
                                           std::vector<State> starts) {
  GridEnvironment env;
  env.id = std::move(id);
  env.height = static_cast<int>(rows.size());
  env.width = rows.empty() ? 0 : static_cast<int>(rows.front().size());
  if (env.width == 0 || env.height == 0) {
    throw SchemaError("environment '" + env.id + "' has an empty grid");
  }
  env.cells.reserve(static_cast<std::size_t>(env.width * env.height));
  for (int y = 0; y < env.height; ++y) {
    if (static_cast<int>(rows[y].size()) != env.width) {
      throw SchemaError("environment '" + env.id + "' row " +
                        std::to_string(y) + " has length " +
                        std::to_string(rows[y].size()) + ", expected " +
                        std::to_string(env.width));
    }
    for (int x = 0; x < env.width; ++x) {
      auto a = parse_annotation(rows[y][x]);
      if (!a) {
        throw SchemaError("environment '" + env.id + "' has unknown cell '" +
                          std::string(1, rows[y][x]) + "' at (" +
                          std::to_string(x) + "," + std::to_string(y) + ")");
      }
      env.cells.push_back(*a);
    }
  }
  env.starts = std::move(starts);
  return env;
}

std::optional<std::pair<int, int>> GridEnvironment::goal() const {
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      if (at(x, y) == Annotation::kGoal) return std::make_pair(x, y);
    }
  }
  return std::nullopt;
}

std::vector<std::string> GridEnvironment::rows() const {
  std::vector<std::string> out(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) out[y].push_back(static_cast<char>(at(x, y)));
  }
  return out;
}

int GridEnvironment::annotated_cell_count() const {
  return static_cast<int>(std::count_if(cells.begin(), cells.end(), [](Annotation a) {
    return a != Annotation::kEmpty;
  }));
}

void validate_environment(const GridEnvironment& env, const FeatureSpec& spec) {
  const std::string where = "environment '" + env.id + "': ";
  if (env.width <= 0 || env.height <= 0 ||
      static_cast<int>(env.cells.size()) != env.width * env.height) {
    throw SemanticError(where + "grid dimensions do not match cell count");
  }
  int goals = static_cast<int>(
      std::count(env.cells.begin(), env.cells.end(), Annotation::kGoal));
  if (goals != 1) {
    throw SemanticError(where + "expected exactly one goal, found " +
                        std::to_string(goals));
  }
  if (env.starts.empty()) throw SemanticError(where + "no start state");
  const std::uint32_t flag_mask = (1u << spec.flags().size()) - 1u;
  for (const State& s : env.starts) {
    if (!env.in_bounds(s.x, s.y) || env.at(s.x, s.y) == Annotation::kWall) {
      throw SemanticError(where + "start " + describe(s) +
                          " is out of bounds or a wall");
    }
    if ((s.flags & ~flag_mask) != 0) {
      throw SemanticError(where + "start uses undeclared flags");
    }
  }
  // Every open cell must reach the goal; moves are symmetric so one flood
  // fill from the goal suffices.
  auto [gx, gy] = *env.goal();
  std::vector<bool> seen(env.cells.size(), false);
  std::deque<std::pair<int, int>> queue{{gx, gy}};
  seen[gy * env.width + gx] = true;
  while (!queue.empty()) {
    auto [x, y] = queue.front();
    queue.pop_front();
    for (Action a : {Action::kUp, Action::kDown, Action::kLeft, Action::kRight}) {
      auto [dx, dy] = delta(a);
      int nx = x + dx, ny = y + dy;
      if (!env.in_bounds(nx, ny) || env.at(nx, ny) == Annotation::kWall) continue;
      if (seen[ny * env.width + nx]) continue;
      seen[ny * env.width + nx] = true;
      queue.emplace_back(nx, ny);
    }
  }
  for (int y = 0; y < env.height; ++y) {
    for (int x = 0; x < env.width; ++x) {
      if (env.at(x, y) != Annotation::kWall && !seen[y * env.width + x]) {
        throw SemanticError(where + "cell (" + std::to_string(x) + "," +
                            std::to_string(y) + ") cannot reach the goal");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// GridMdp

GridMdp::GridMdp(FeatureSpec spec, GridEnvironment env, double discount)
    : spec_(std::move(spec)), env_(std::move(env)), discount_(discount) {
  num_flag_sets_ = 1 << spec_.flags().size();
  num_states_ = env_.width * env_.height * num_flag_sets_;
  goal_.assign(num_states_, false);
  wall_.assign(num_states_, false);
  transitions_.resize(num_states_);

  const int recharged_bit = spec_.flag_index(kRechargedFlag);
  const int skate_bit = spec_.flag_index(kSkateboardFlag);
  const int k = spec_.size();

  for (int s = 0; s < num_states_; ++s) {
    const State st = state(s);
    const Annotation here = env_.at(st.x, st.y);
    if (here == Annotation::kWall) {
      wall_[s] = true;
      continue;
    }
    if (here == Annotation::kGoal) {
      goal_[s] = true;
      continue;
    }
    for (Action a : kActionOrder) {
      State to = st;
      if (is_move(a)) {
        auto [dx, dy] = delta(a);
        to.x += dx;
        to.y += dy;
        if (!env_.in_bounds(to.x, to.y) ||
            env_.at(to.x, to.y) == Annotation::kWall) {
          continue;
        }
      } else {
        if (skate_bit < 0 || here != Annotation::kSkateboard ||
            (st.flags >> skate_bit) & 1u) {
          continue;
        }
        to.flags |= 1u << skate_bit;
      }
      const Annotation there = env_.at(to.x, to.y);
      FeatureVector phi = FeatureVector::Zero(k);
      for (int f = 0; f < k; ++f) {
        bool fires = false;
        switch (spec_[f].trigger) {
          case Trigger::kAction:
            fires = true;
            break;
          case Trigger::kMudExit:
            fires = is_move(a) && here == Annotation::kMud;
            break;
          case Trigger::kRecharge:
            fires = is_move(a) && there == Annotation::kRecharge &&
                    !((st.flags >> recharged_bit) & 1u);
            break;
          case Trigger::kTileA:
            fires = is_move(a) && there == Annotation::kTileA;
            break;
          case Trigger::kTileB:
            fires = is_move(a) && there == Annotation::kTileB;
            break;
          case Trigger::kRide:
            fires = is_move(a) && ((st.flags >> skate_bit) & 1u);
            break;
          case Trigger::kPath:
            fires = is_move(a) && there == Annotation::kPath;
            break;
        }
        if (fires) phi[f] = 1.0;
      }
      if (recharged_bit >= 0 && is_move(a) && there == Annotation::kRecharge) {
        to.flags |= 1u << recharged_bit;
      }
      transitions_[s].push_back(Transition{a, index(to), std::move(phi)});
    }
  }
}

int GridMdp::index(const State& s) const {
  return ((s.y * env_.width + s.x) * num_flag_sets_) + static_cast<int>(s.flags);
}

State GridMdp::state(int index) const {
  State s;
  s.flags = static_cast<std::uint32_t>(index % num_flag_sets_);
  const int cell = index / num_flag_sets_;
  s.x = cell % env_.width;
  s.y = cell / env_.width;
  return s;
}

bool GridMdp::valid(const State& s) const {
  return env_.in_bounds(s.x, s.y) && env_.at(s.x, s.y) != Annotation::kWall &&
         s.flags < static_cast<std::uint32_t>(num_flag_sets_);
}

const Transition* GridMdp::find(int index, Action a) const {
  for (const Transition& t : transitions_[index]) {
    if (t.action == a) return &t;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Planning

std::optional<Action> Policy::action(int state) const {
  if (actions_[state] < 0) return std::nullopt;
  return static_cast<Action>(actions_[state]);
}

namespace {

bool improves(double candidate, double current) {
  if (current == kNegInf) return candidate > kNegInf;
  return candidate > current + 1e-12 * (1.0 + std::abs(current));
}

// After Bellman-Ford keeps improving past |S| sweeps, walk the successor
// pointers from a recently improved state into the loop responsible.
[[noreturn]] void throw_positive_cycle(const GridMdp& mdp,
                                       const std::vector<int>& succ_action,
                                       int improved_state) {
  const int n = mdp.num_states();
  int s = improved_state;
  for (int i = 0; i < n && s >= 0; ++i) {
    const int a = succ_action[s];
    if (a < 0) break;
    s = mdp.transitions(s)[a].next;
  }
  FeatureVector total = FeatureVector::Zero(mdp.num_features());
  std::vector<int> members;
  if (s >= 0 && succ_action[s] >= 0) {
    const int anchor = s;
    do {
      members.push_back(s);
      const Transition& t = mdp.transitions(s)[succ_action[s]];
      total += t.phi;
      s = t.next;
    } while (s != anchor && static_cast<int>(members.size()) <= n &&
             succ_action[s] >= 0);
    if (s == anchor) {
      throw NonTerminating("reward admits a positive-value loop in '" +
                               mdp.env().id + "'",
                           std::move(total), std::move(members));
    }
  }
  throw NonTerminating("value iteration diverged in '" + mdp.env().id + "'");
}

}  // namespace

namespace {

Policy solve(const GridMdp& mdp, const WeightVector& w, double tol,
             const std::vector<bool>& active, std::span<const State> starts) {
  const FeatureSpec& spec = mdp.spec();
  if (w.size() != spec.size()) {
    throw std::invalid_argument("weight dimension does not match features");
  }
  const double gamma = mdp.discount();
  const bool undiscounted = gamma >= 1.0;
  if (undiscounted && w[spec.action_index()] >= 0.0) {
    throw NonTerminating("action weight must be negative at discount 1");
  }

  const int n = mdp.num_states();
  // Rewards per transition, computed once.
  std::vector<std::vector<double>> reward(n);
  for (int s = 0; s < n; ++s) {
    for (const Transition& t : mdp.transitions(s)) reward[s].push_back(w.dot(t.phi));
  }

  std::vector<double> v(n, kNegInf);
  std::vector<int> succ(n, -1);
  for (int s = 0; s < n; ++s) {
    if (mdp.is_goal(s)) v[s] = 0.0;
  }

  const int max_sweeps = undiscounted ? n + 2 : 1'000'000;
  int sweep = 0;
  for (;; ++sweep) {
    bool changed = false;
    double residual = 0.0;
    int last_improved = -1;
    for (int s = 0; s < n; ++s) {
      if (!active[s] || mdp.is_goal(s) || mdp.is_wall(s)) continue;
      auto ts = mdp.transitions(s);
      double best = kNegInf;
      int best_a = -1;
      for (int i = 0; i < static_cast<int>(ts.size()); ++i) {
        const double next = v[ts[i].next];
        if (next == kNegInf) continue;
        const double q = reward[s][i] + gamma * next;
        if (q > best) {
          best = q;
          best_a = i;
        }
      }
      if (best == kNegInf) continue;
      if (undiscounted) {
        if (improves(best, v[s])) {
          v[s] = best;
          succ[s] = best_a;
          changed = true;
          last_improved = s;
        }
      } else {
        if (v[s] == kNegInf) {
          changed = true;
        } else {
          residual = std::max(residual, std::abs(best - v[s]));
        }
        v[s] = best;
        succ[s] = best_a;
      }
    }
    if (undiscounted ? !changed : (!changed && residual < tol)) break;
    if (sweep >= max_sweeps) {
      if (undiscounted) throw_positive_cycle(mdp, succ, last_improved);
      throw NonTerminating("value iteration did not converge in '" +
                           mdp.env().id + "'");
    }
  }

  std::vector<std::int8_t> actions(n, -1);
  for (int s = 0; s < n; ++s) {
    if (!active[s] || mdp.is_goal(s) || mdp.is_wall(s) || v[s] == kNegInf) continue;
    auto ts = mdp.transitions(s);
    double best = kNegInf;
    for (int i = 0; i < static_cast<int>(ts.size()); ++i) {
      if (v[ts[i].next] == kNegInf) continue;
      best = std::max(best, reward[s][i] + gamma * v[ts[i].next]);
    }
    const double slack = 1e-10 * (1.0 + std::abs(best));
    for (int i = 0; i < static_cast<int>(ts.size()); ++i) {
      if (v[ts[i].next] == kNegInf) continue;
      if (reward[s][i] + gamma * v[ts[i].next] >= best - slack) {
        actions[s] = static_cast<std::int8_t>(ts[i].action);
        break;
      }
    }
  }

  for (const State& start : starts) {
    if (mdp.valid(start) && v[mdp.index(start)] == kNegInf) {
      throw Unreachable("start " + describe(start) + " of '" + mdp.env().id +
                        "' cannot reach the goal");
    }
  }
  return Policy(w, std::move(actions), std::move(v));
}

}  // namespace

Policy solve_optimal_policy(const GridMdp& mdp, const WeightVector& w,
                            double tol) {
  return solve(mdp, w, tol, std::vector<bool>(mdp.num_states(), true), mdp.env().starts);
}

Policy solve_optimal_policy(const GridMdp& mdp, const WeightVector& w,
                            std::span<const State> from, double tol) {
  std::vector<bool> active(mdp.num_states(), false);
  for (int s : reachable_states(mdp, from)) active[s] = true;
  return solve(mdp, w, tol, active, from);
}

// ---------------------------------------------------------------------------
// Trajectories

std::vector<Action> Trajectory::actions() const {
  std::vector<Action> out;
  out.reserve(steps.size());
  for (const Step& s : steps) out.push_back(s.action);
  return out;
}

Trajectory rollout(const GridMdp& mdp, const Policy& policy,
                   const State& start) {
  if (!mdp.valid(start)) {
    throw std::invalid_argument("rollout start " + describe(start) +
                                " is not a state of '" + mdp.env().id + "'");
  }
  Trajectory traj;
  traj.env_id = mdp.env().id;
  traj.start = start;
  traj.features = FeatureVector::Zero(mdp.num_features());
  int s = mdp.index(start);
  double discount = 1.0;
  const int limit = mdp.num_states();
  while (!mdp.is_goal(s)) {
    if (static_cast<int>(traj.steps.size()) > limit) {
      throw CycleDetected("rollout in '" + mdp.env().id + "' from " +
                          describe(start) + " exceeded " +
                          std::to_string(limit) + " steps");
    }
    auto a = policy.action(s);
    if (!a) {
      throw Unreachable("no action from " + describe(mdp.state(s)) + " in '" +
                        mdp.env().id + "'");
    }
    const Transition* t = mdp.find(s, *a);
    traj.steps.push_back(Step{mdp.state(s), *a, mdp.state(t->next)});
    traj.features += discount * t->phi;
    discount *= mdp.discount();
    s = t->next;
  }
  return traj;
}

Trajectory replay(const GridMdp& mdp, const State& start,
                  std::span<const Action> actions) {
  if (!mdp.valid(start)) {
    throw InvalidTrajectory("start " + describe(start) + " is not valid");
  }
  Trajectory traj;
  traj.env_id = mdp.env().id;
  traj.start = start;
  traj.features = FeatureVector::Zero(mdp.num_features());
  int s = mdp.index(start);
  double discount = 1.0;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (mdp.is_goal(s)) {
      throw InvalidTrajectory("action " + std::to_string(i) +
                              " continues past the goal");
    }
    const Transition* t = mdp.find(s, actions[i]);
    if (t == nullptr) {
      throw InvalidTrajectory("illegal action '" +
                              std::string(action_name(actions[i])) + "' at " +
                              describe(mdp.state(s)) + " (step " +
                              std::to_string(i) + ")");
    }
    traj.steps.push_back(Step{mdp.state(s), actions[i], mdp.state(t->next)});
    traj.features += discount * t->phi;
    discount *= mdp.discount();
    s = t->next;
  }
  return traj;
}

FeatureVector trajectory_features(const GridMdp& mdp, const Trajectory& traj) {
  FeatureVector total = FeatureVector::Zero(mdp.num_features());
  double discount = 1.0;
  for (const Step& step : traj.steps) {
    const Transition* t = mdp.find(mdp.index(step.from), step.action);
    if (t == nullptr || mdp.state(t->next) != step.to) {
      throw InvalidTrajectory("step from " + describe(step.from) +
                              " does not match the environment");
    }
    total += discount * t->phi;
    discount *= mdp.discount();
  }
  return total;
}

FeatureVector successor_features(const GridMdp& mdp, const Policy& policy,
                                 const State& s, Action a) {
  const Transition* t = mdp.find(mdp.index(s), a);
  if (t == nullptr) {
    throw std::invalid_argument("action '" + std::string(action_name(a)) +
                                "' is not legal at " + describe(s));
  }
  FeatureVector total = t->phi;
  if (!mdp.is_goal(t->next)) {
    total += mdp.discount() * rollout(mdp, policy, mdp.state(t->next)).features;
  }
  return total;
}

std::vector<int> reachable_states(const GridMdp& mdp,
                                  std::span<const State> starts) {
  std::vector<bool> seen(mdp.num_states(), false);
  std::deque<int> queue;
  for (const State& s : starts) {
    const int i = mdp.index(s);
    if (!seen[i]) {
      seen[i] = true;
      queue.push_back(i);
    }
  }
  std::vector<int> out;
  while (!queue.empty()) {
    const int s = queue.front();
    queue.pop_front();
    out.push_back(s);
    for (const Transition& t : mdp.transitions(s)) {
      if (!seen[t.next]) {
        seen[t.next] = true;
        queue.push_back(t.next);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Domain

Domain::Domain(std::string name, FeatureSpec spec, WeightVector true_weights,
               double discount, std::vector<GridEnvironment> environments)
    : name_(std::move(name)),
      spec_(std::move(spec)),
      true_weights_(std::move(true_weights)),
      discount_(discount),
      envs_(std::move(environments)) {
  if (true_weights_.size() != spec_.size()) {
    throw SemanticError("domain '" + name_ + "' has " +
                        std::to_string(true_weights_.size()) + " weights for " +
                        std::to_string(spec_.size()) + " features");
  }
  if (!(discount_ > 0.0 && discount_ <= 1.0)) {
    throw SemanticError("discount must lie in (0, 1]");
  }
  if (true_weights_[spec_.action_index()] >= 0.0) {
    throw SemanticError("the action weight must be negative (got " +
                        std::to_string(true_weights_[spec_.action_index()]) +
                        "); otherwise optimal trajectories need not end");
  }
  if (envs_.empty()) throw SemanticError("domain '" + name_ + "' has no environments");
  mdps_.reserve(envs_.size());
  for (const GridEnvironment& env : envs_) {
    validate_environment(env, spec_);
    mdps_.emplace_back(spec_, env, discount_);
    try {
      policies_.push_back(solve_optimal_policy(mdps_.back(), true_weights_));
    } catch (const Error& e) {
      throw SemanticError("environment '" + env.id +
                          "' is not solvable under the true weights: " + e.what());
    }
  }
}

int Domain::find_environment(std::string_view id) const {
  for (int i = 0; i < num_environments(); ++i) {
    if (envs_[i].id == id) return i;
  }
  return -1;
}

std::vector<Demonstration> enumerate_candidate_demos(const Domain& domain) {
  std::vector<Demonstration> out;
  for (int e = 0; e < domain.num_environments(); ++e) {
    const GridMdp& mdp = domain.mdp(e);
    const Policy& policy = domain.optimal_policy(e);
    for (const State& start : mdp.env().starts) {
      Demonstration demo{e, rollout(mdp, policy, start)};
      const bool duplicate = std::any_of(out.begin(), out.end(), [&](const Demonstration& d) {
        return domain.environments()[d.env_index].same_layout(mdp.env()) &&
               d.trajectory.same_path(demo.trajectory);
      });
      if (!duplicate) out.push_back(std::move(demo));
    }
  }
  return out;
}

}  // namespace cfteach
