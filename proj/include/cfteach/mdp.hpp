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

// Deterministic gridworld MDPs with linear, transition-triggered reward
// features; value-iteration planning, rollouts and discounted feature counts.

#ifndef CFTEACH_MDP_HPP_
#define CFTEACH_MDP_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfteach/weights.hpp"

namespace cfteach {

enum class Annotation : char {
  kEmpty = '.',
  kWall = '#',
  kMud = 'm',
  kRecharge = 'r',
  kGoal = 'G',
  kTileA = 'a',
  kTileB = 'b',
  kPath = 'p',
  kSkateboard = 's',
};

std::optional<Annotation> parse_annotation(char c);

enum class Action : std::uint8_t { kUp, kDown, kLeft, kRight, kPickup };

// Greedy policy extraction breaks value ties in this order.
inline constexpr std::array<Action, 5> kActionOrder = {
    Action::kUp, Action::kDown, Action::kLeft, Action::kRight, Action::kPickup};

std::string_view action_name(Action a);
std::optional<Action> parse_action(std::string_view name);

// What makes a feature fire on a transition (s, a, s').
enum class Trigger {
  kMudExit,   // the move starts on a mud cell
  kRecharge,  // first entry into a recharge cell; sets the "recharged" flag
  kTileA,     // the move ends on an A tile
  kTileB,     // the move ends on a B tile
  kRide,      // a move made while holding the skateboard
  kPath,      // the move ends on a path cell
  kAction,    // every action; constant 1
};

std::string_view trigger_name(Trigger t);
std::optional<Trigger> parse_trigger(std::string_view name);

inline constexpr std::string_view kRechargedFlag = "recharged";
inline constexpr std::string_view kSkateboardFlag = "has_skateboard";

struct Feature {
  std::string name;
  Trigger trigger;

  bool operator==(const Feature&) const = default;
};

// The reward-feature vocabulary shared by every environment of a domain, plus
// the boolean state flags those features need.
class FeatureSpec {
 public:
  FeatureSpec() = default;
  // Throws SemanticError unless exactly one feature is the action feature
  // and at least two features are declared.
  explicit FeatureSpec(std::vector<Feature> features);

  int size() const { return static_cast<int>(features_.size()); }
  const Feature& operator[](int i) const { return features_[i]; }
  const std::vector<Feature>& features() const { return features_; }
  std::vector<std::string> names() const;
  int action_index() const { return action_index_; }
  int index_of(Trigger t) const;

  const std::vector<std::string>& flags() const { return flags_; }
  int flag_index(std::string_view name) const;  // -1 when absent
  bool has_pickup() const { return flag_index(kSkateboardFlag) >= 0; }

  bool operator==(const FeatureSpec& o) const { return features_ == o.features_; }

 private:
  std::vector<Feature> features_;
  std::vector<std::string> flags_;
  int action_index_ = -1;
};

// A grid position plus a bitmask over FeatureSpec::flags().
struct State {
  int x = 0;
  int y = 0;
  std::uint32_t flags = 0;

  bool operator==(const State&) const = default;
};

// One MDP instance: layout and start states. Row 0 is the top row; "up"
// decreases y.
struct GridEnvironment {
  std::string id;
  int width = 0;
  int height = 0;
  std::vector<Annotation> cells;  // row-major, width * height
  std::vector<State> starts;

  // Builds from one string per row using the annotation legend. Throws
  // SchemaError on ragged rows or unknown characters.
  static GridEnvironment from_rows(std::string id,
                                   const std::vector<std::string>& rows,
                                   std::vector<State> starts);

  bool in_bounds(int x, int y) const {
    return x >= 0 && y >= 0 && x < width && y < height;
  }
  Annotation at(int x, int y) const { return cells[y * width + x]; }
  std::optional<std::pair<int, int>> goal() const;
  std::vector<std::string> rows() const;
  // Cells that are not empty; the visual-clutter measure.
  int annotated_cell_count() const;
  bool same_layout(const GridEnvironment& o) const {
    return width == o.width && height == o.height && cells == o.cells;
  }
};

struct Transition {
  Action action;
  int next;           // state index
  FeatureVector phi;  // features fired by this transition
};

// A GridEnvironment compiled against a FeatureSpec: dense state indexing and
// the legal transitions of every state. Moves into walls or off the grid are
// not legal actions. Goal states are terminal.
class GridMdp {
 public:
  GridMdp(FeatureSpec spec, GridEnvironment env, double discount);

  int num_states() const { return num_states_; }
  int num_features() const { return spec_.size(); }
  double discount() const { return discount_; }
  const FeatureSpec& spec() const { return spec_; }
  const GridEnvironment& env() const { return env_; }

  int index(const State& s) const;
  State state(int index) const;
  bool is_goal(int index) const { return goal_[index]; }
  bool is_wall(int index) const { return wall_[index]; }
  bool valid(const State& s) const;

  std::span<const Transition> transitions(int index) const {
    return transitions_[index];
  }
  const Transition* find(int index, Action a) const;

 private:
  FeatureSpec spec_;
  GridEnvironment env_;
  double discount_;
  int num_flag_sets_;
  int num_states_;
  std::vector<bool> goal_;
  std::vector<bool> wall_;
  std::vector<std::vector<Transition>> transitions_;
};

// A deterministic policy over every state of one environment, with the value
// function it is greedy against.
class Policy {
 public:
  Policy(WeightVector weights, std::vector<std::int8_t> actions,
         std::vector<double> values)
      : weights_(std::move(weights)),
        actions_(std::move(actions)),
        values_(std::move(values)) {}

  const WeightVector& weights() const { return weights_; }
  // Empty for goal states and states that cannot reach the goal.
  std::optional<Action> action(int state) const;
  double value(int state) const { return values_[state]; }
  const std::vector<std::int8_t>& raw_actions() const { return actions_; }

 private:
  WeightVector weights_;
  std::vector<std::int8_t> actions_;
  std::vector<double> values_;
};

struct Step {
  State from;
  Action action;
  State to;

  bool operator==(const Step&) const = default;
};

struct Trajectory {
  std::string env_id;
  State start;
  std::vector<Step> steps;
  FeatureVector features;  // discounted sum over steps

  std::vector<Action> actions() const;
  bool same_path(const Trajectory& o) const {
    return start == o.start && steps == o.steps;
  }
};

// An optimal trajectory of the true policy in one environment of a domain.
struct Demonstration {
  int env_index = 0;
  Trajectory trajectory;

  const std::string& env_id() const { return trajectory.env_id; }
};

// Value iteration followed by greedy extraction. At discount 1 this is
// Bellman-Ford on the reward-maximization problem and terminates exactly.
// Throws NonTerminating (with the offending loop when one exists) and
// Unreachable when some start cannot reach the goal.
Policy solve_optimal_policy(const GridMdp& mdp, const WeightVector& w,
                            double tol = 1e-10);
// Same, over only the states reachable from `from`; a loop elsewhere in the
// grid does not matter. Other states get no action.
Policy solve_optimal_policy(const GridMdp& mdp, const WeightVector& w,
                            std::span<const State> from, double tol = 1e-10);

// Throws CycleDetected if the goal is not reached within
// num_states() steps.
Trajectory rollout(const GridMdp& mdp, const Policy& policy,
                   const State& start);

// Rebuilds a trajectory from an action list. Throws InvalidTrajectory on an
// illegal action.
Trajectory replay(const GridMdp& mdp, const State& start,
                  std::span<const Action> actions);

// sum_t discount^t phi(s_t, a_t, s_t'), recomputed from the step tuples.
FeatureVector trajectory_features(const GridMdp& mdp, const Trajectory& traj);

// Features of taking `a` in `s` once and following `policy` afterwards.
FeatureVector successor_features(const GridMdp& mdp, const Policy& policy,
                                 const State& s, Action a);

// A named group of environments sharing features, true weights and discount.
class Domain {
 public:
  // Validates environments and that every start can reach the goal under
  // the true weights; throws SemanticError otherwise.
  Domain(std::string name, FeatureSpec spec, WeightVector true_weights,
         double discount, std::vector<GridEnvironment> environments);

  const std::string& name() const { return name_; }
  const FeatureSpec& spec() const { return spec_; }
  const WeightVector& true_weights() const { return true_weights_; }
  double discount() const { return discount_; }
  const std::vector<GridEnvironment>& environments() const { return envs_; }
  const GridMdp& mdp(int env_index) const { return mdps_[env_index]; }
  // The optimal policy under the true weights, solved at construction.
  const Policy& optimal_policy(int env_index) const { return policies_[env_index]; }
  int num_environments() const { return static_cast<int>(envs_.size()); }
  // Index of the environment with this id, or -1.
  int find_environment(std::string_view id) const;

 private:
  std::string name_;
  FeatureSpec spec_;
  WeightVector true_weights_;
  double discount_;
  std::vector<GridEnvironment> envs_;
  std::vector<GridMdp> mdps_;
  std::vector<Policy> policies_;
};

// Checks the structural invariants of one environment: in-bounds non-wall
// starts, exactly one goal, every open cell connected to the goal.
void validate_environment(const GridEnvironment& env, const FeatureSpec& spec);

// One optimal demonstration per (environment, start) under the true
// weights, deduplicated by identical layout and trajectory.
std::vector<Demonstration> enumerate_candidate_demos(const Domain& domain);

// Every state reachable from `starts` (goal states included).
std::vector<int> reachable_states(const GridMdp& mdp,
                                  std::span<const State> starts);

}  // namespace cfteach

#endif  // CFTEACH_MDP_HPP_
