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

// Teaching curricula: ordered demonstrations chosen to shrink a modeled
// learner belief, by human counterfactuals or by one-action-deviation BEC
// area, optionally phased by feature masking.

#ifndef CFTEACH_CURRICULUM_HPP_
#define CFTEACH_CURRICULUM_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cfteach/constraints.hpp"
#include "cfteach/mdp.hpp"
#include "cfteach/sphere.hpp"

namespace cfteach {

enum class TeachingStrategy { kCounterfactual, kBaseline };

struct StrategyConfig {
  TeachingStrategy inner = TeachingStrategy::kCounterfactual;
  bool feature_scaffolded = false;

  bool operator==(const StrategyConfig&) const = default;
};

std::string_view strategy_name(TeachingStrategy s);
std::optional<TeachingStrategy> parse_strategy(std::string_view name);

// Features to hide, first-masked first; k-2 entries.
struct MaskOrder {
  std::vector<int> features;
};

// Nonzero-entry counts (|entry| > 1e-9) per feature over `constraints`,
// ascending, ties by lower index, truncated to k-2.
MaskOrder mask_order_from(const ConstraintSet& constraints);
// Same over the standard constraints of every demo in the pool.
MaskOrder feature_mask_order(const Domain& domain, std::span<const Demonstration> pool);

struct CurriculumOptions {
  int m = kDefaultBeliefSamples;    // belief samples per iteration
  double epsilon = 1e-3;            // zero-gain threshold, sphere fraction
  int max_demos = 0;                // 0: no cap
  double gain_ratio = 1.0;          // < 1 selects the partial-gain variant
  int pool_cap = 200;
  int area_samples = kDefaultAreaSamples;
  std::uint64_t seed = 0;
  CounterfactualMode mode = CounterfactualMode::kWholeTrajectory;
};

struct CurriculumStep {
  Demonstration demo;
  ConstraintSet conveyed;
  double info_gain = 0.0;
  AreaEstimate area_after;
  int phase = 0;                         // number of features still masked
  std::optional<double> target_ratio;    // set by the partial-gain variant
};

struct Curriculum {
  StrategyConfig strategy;
  MaskOrder mask;
  AreaEstimate prior_area;
  std::vector<CurriculumStep> steps;
  BeliefRegion final_belief;
  std::vector<std::string> notes;  // skipped phases, dropped conflicts
};

// {w : w_action <= 0}, the learner's starting belief.
ConstraintSet default_prior(const FeatureSpec& spec);

// The candidate pool, capped by taking demos round-robin over environments.
std::vector<Demonstration> candidate_pool(const Domain& domain, int cap);

// Among tied candidates pick the minimal (dissimilarity to `previous`,
// annotated-cell count, env id, position). Returns an index into `candidates`.
int tie_break(const Domain& domain, std::span<const Demonstration> candidates,
              const Demonstration* previous);

// Smallest gain >= ratio * max(gains); the first such index.
int partial_gain_target(std::span<const double> gains, double ratio);

Curriculum select_counterfactual_curriculum(const Domain& domain,
                                            const ConstraintSet& prior,
                                            const CurriculumOptions& options);
Curriculum select_baseline_curriculum(const Domain& domain,
                                      const ConstraintSet& prior,
                                      const CurriculumOptions& options);
Curriculum select_feature_scaffolded(const Domain& domain, TeachingStrategy inner,
                                     const ConstraintSet& prior,
                                     const CurriculumOptions& options);

Curriculum build_curriculum(const Domain& domain, StrategyConfig strategy,
                            const ConstraintSet& prior,
                            const CurriculumOptions& options);

}  // namespace cfteach

#endif  // CFTEACH_CURRICULUM_HPP_
