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

#include "cfteach/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "cfteach/errors.hpp"

namespace cfteach {

namespace {

constexpr double kNonzeroEntry = 1e-9;

bool touches(const ConstraintSet& cs, const std::vector<bool>& masked) {
  for (const HalfSpaceConstraint& c : cs) {
    for (int f = 0; f < c.dim(); ++f) {
      if (masked[f] && std::abs(c.normal()[f]) > kNonzeroEntry) return true;
    }
  }
  return false;
}

int dissimilarity(const GridEnvironment& a, const GridEnvironment* prev) {
  if (prev == nullptr || prev->width != a.width || prev->height != a.height) {
    return std::numeric_limits<int>::max();
  }
  int d = 0;
  for (std::size_t i = 0; i < a.cells.size(); ++i) d += a.cells[i] != prev->cells[i];
  return d;
}

// Shared state of one curriculum run.
class Teacher {
 public:
  Teacher(const Domain& domain, const ConstraintSet& prior, const CurriculumOptions& opt,
          StrategyConfig strategy)
      : domain_(domain),
        opt_(opt),
        pool_(candidate_pool(domain, opt.pool_cap)),
        belief_(BeliefRegion::create(prior, opt.area_samples, derive_seed(opt.seed, 0))) {
    if (pool_.empty()) throw EmptyPool("domain '" + domain.name() + "' has no candidate demos");
    if (!prior.contains(domain.true_weights().values())) {
      throw std::invalid_argument("the prior must contain the true weights");
    }
    standard_.reserve(pool_.size());
    for (const Demonstration& d : pool_) {
      standard_.push_back(demo_constraints_standard(domain.mdp(d.env_index), d,
                                                    domain.optimal_policy(d.env_index)));
    }
    shown_.assign(pool_.size(), false);
    out_.strategy = strategy;
    out_.prior_area = belief_.area();
  }

  int pool_size() const { return static_cast<int>(pool_.size()); }
  const std::vector<Demonstration>& pool() const { return pool_; }
  const std::vector<ConstraintSet>& standard() const { return standard_; }

  std::vector<int> admissible(const std::vector<bool>& masked) const {
    std::vector<int> out;
    for (int i = 0; i < pool_size(); ++i) {
      if (!touches(standard_[i], masked)) out.push_back(i);
    }
    return out;
  }

  void counterfactual_phase(const std::vector<int>& candidates,
                            const std::vector<bool>& masked, int phase);
  void baseline_phase(const std::vector<int>& candidates, int phase);

  void note(std::string s) { out_.notes.push_back(std::move(s)); }

  Curriculum finish(MaskOrder mask) && {
    out_.mask = std::move(mask);
    out_.final_belief = std::move(belief_);
    return std::move(out_);
  }

 private:
  bool capped() const {
    return opt_.max_demos > 0 && static_cast<int>(out_.steps.size()) >= opt_.max_demos;
  }
  const Demonstration* previous() const {
    return out_.steps.empty() ? nullptr : &out_.steps.back().demo;
  }
  int pick(const std::vector<int>& tied) const {
    std::vector<Demonstration> demos;
    for (int i : tied) demos.push_back(pool_[i]);
    return tied[tie_break(domain_, demos, previous())];
  }
  void apply(int i, const ConstraintSet& conveyed, int phase, std::optional<double> ratio);

  const Domain& domain_;
  const CurriculumOptions& opt_;
  std::vector<Demonstration> pool_;
  std::vector<ConstraintSet> standard_;
  BeliefRegion belief_;
  Curriculum out_{{}, {}, {}, {}, BeliefRegion::create(ConstraintSet(2), kMinAreaSamples), {}};
  std::vector<bool> shown_;
  std::uint64_t iteration_ = 0;
};

void Teacher::apply(int i, const ConstraintSet& conveyed, int phase,
                    std::optional<double> ratio) {
  const int before = static_cast<int>(belief_.inside().size());
  BeliefRegion next = belief_.refined(conveyed);
  if (!next.feasible() && !find_interior_point(next.constraints(), *next.cloud())) {
    ConflictResolution r = resolve_conflicts(next.constraints(), *next.cloud());
    for (const HalfSpaceConstraint& c : r.dropped) {
      std::string n = "dropped conflicting constraint [";
      for (int f = 0; f < c.dim(); ++f) n += (f ? ", " : "") + std::to_string(c.normal()[f]);
      note(n + "] after step " + std::to_string(out_.steps.size() + 1));
    }
    next = BeliefRegion::create(std::move(r.constraints), belief_.cloud());
  }
  CurriculumStep step{pool_[i], conveyed, 0.0, next.area(), phase, ratio};
  step.info_gain =
      static_cast<double>(before - static_cast<int>(next.inside().size())) / next.sample_budget();
  belief_ = std::move(next);
  shown_[i] = true;
  out_.steps.push_back(std::move(step));
}

void Teacher::counterfactual_phase(const std::vector<int>& candidates,
                                   const std::vector<bool>& masked, int phase) {
  const int n = belief_.sample_budget();
  while (!capped() && belief_.feasible()) {
    const auto samples =
        sample_belief(belief_, opt_.m, derive_seed(opt_.seed, 1, iteration_++));
    // Plans per environment for this iteration's samples, built on demand.
    std::vector<std::vector<BeliefPlan>> plans(domain_.num_environments());
    std::vector<int> ids;
    std::vector<int> counts;
    std::vector<ConstraintSet> sets;
    for (int i : candidates) {
      if (shown_[i]) continue;
      const Demonstration& demo = pool_[i];
      const GridMdp& mdp = domain_.mdp(demo.env_index);
      auto& env_plans = plans[demo.env_index];
      if (env_plans.empty()) {
        for (const WeightVector& w : samples) env_plans.push_back(plan_belief(mdp, w));
      }
      ConstraintSet cs(domain_.spec().size());
      for (const BeliefPlan& p : env_plans) {
        cs.merge(counterfactual_constraints(mdp, demo, p, opt_.mode));
      }
      if (touches(cs, masked)) continue;
      ids.push_back(i);
      counts.push_back(belief_.cloud()->count_violating(belief_.inside(), cs));
      sets.push_back(std::move(cs));
    }
    if (ids.empty()) break;
    const int best = *std::max_element(counts.begin(), counts.end());
    if (static_cast<double>(best) / n <= opt_.epsilon) break;

    int chosen_count = best;
    if (opt_.gain_ratio < 1.0) {
      std::vector<double> gains(counts.begin(), counts.end());
      chosen_count = counts[partial_gain_target(gains, opt_.gain_ratio)];
    }
    std::vector<int> tied;
    for (std::size_t j = 0; j < ids.size(); ++j) {
      if (counts[j] == chosen_count) tied.push_back(ids[j]);
    }
    const int winner = pick(tied);
    const auto pos = std::find(ids.begin(), ids.end(), winner) - ids.begin();
    apply(winner, sets[pos], phase,
          opt_.gain_ratio < 1.0 ? std::optional<double>(opt_.gain_ratio) : std::nullopt);
  }
}

void Teacher::baseline_phase(const std::vector<int>& candidates, int phase) {
  if (capped()) return;
  const SphereSample& cloud = *belief_.cloud();
  ConstraintSet all = belief_.constraints();
  for (int i : candidates) all.merge(standard_[i]);
  const ConstraintSet minimal = minimal_constraint_set(all, belief_.sample_budget(), belief_.seed());
  std::vector<HalfSpaceConstraint> targets;
  for (const HalfSpaceConstraint& c : minimal) {
    if (!belief_.constraints().has(c)) targets.push_back(c);
  }
  if (targets.empty()) return;

  std::vector<std::vector<int>> covers(candidates.size());
  std::vector<int> area(candidates.size());
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    const ConstraintSet& s = standard_[candidates[j]];
    for (int t = 0; t < static_cast<int>(targets.size()); ++t) {
      if (s.has(targets[t])) covers[j].push_back(t);
    }
    area[j] = static_cast<int>(cloud.inside(s).size());
  }

  // Greedy set cover: most uncovered targets, then smaller BEC area.
  std::vector<bool> covered(targets.size(), false);
  std::vector<std::size_t> chosen;
  auto uncovered_by = [&](std::size_t j) {
    return static_cast<int>(std::count_if(covers[j].begin(), covers[j].end(),
                                          [&](int t) { return !covered[t]; }));
  };
  while (std::find(covered.begin(), covered.end(), false) != covered.end()) {
    int best = 0;
    for (std::size_t j = 0; j < candidates.size(); ++j) best = std::max(best, uncovered_by(j));
    if (best == 0) {
      throw CoverageFailure("no demonstration conveys the remaining " +
                            std::to_string(std::count(covered.begin(), covered.end(), false)) +
                            " constraints");
    }
    int best_area = std::numeric_limits<int>::max();
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      if (uncovered_by(j) == best) best_area = std::min(best_area, area[j]);
    }
    std::vector<int> tied;
    std::vector<std::size_t> tied_pos;
    for (std::size_t j = 0; j < candidates.size(); ++j) {
      if (uncovered_by(j) == best && area[j] == best_area) {
        tied.push_back(candidates[j]);
        tied_pos.push_back(j);
      }
    }
    const int winner = pick(tied);
    const std::size_t j = tied_pos[std::find(tied.begin(), tied.end(), winner) - tied.begin()];
    chosen.push_back(j);
    for (int t : covers[j]) covered[t] = true;
  }

  // Drop picks made redundant by later ones, latest first.
  for (std::size_t r = chosen.size(); r-- > 0;) {
    std::vector<bool> still(targets.size(), false);
    for (std::size_t q = 0; q < chosen.size(); ++q) {
      if (q == r) continue;
      for (int t : covers[chosen[q]]) still[t] = true;
    }
    if (std::find(still.begin(), still.end(), false) == still.end()) {
      chosen.erase(chosen.begin() + static_cast<long>(r));
    }
  }

  // Least informative (largest BEC area) first.
  std::stable_sort(chosen.begin(), chosen.end(),
                   [&](std::size_t a, std::size_t b) { return area[a] > area[b]; });
  for (std::size_t j : chosen) {
    if (capped()) break;
    apply(candidates[j], standard_[candidates[j]], phase, std::nullopt);
  }
}

std::vector<bool> mask_of(int k, const MaskOrder& order, int count) {
  std::vector<bool> masked(k, false);
  for (int i = 0; i < count; ++i) masked[order.features[i]] = true;
  return masked;
}

}  // namespace

std::string_view strategy_name(TeachingStrategy s) {
  return s == TeachingStrategy::kCounterfactual ? "counterfactual" : "baseline";
}

std::optional<TeachingStrategy> parse_strategy(std::string_view name) {
  if (name == "counterfactual") return TeachingStrategy::kCounterfactual;
  if (name == "baseline") return TeachingStrategy::kBaseline;
  return std::nullopt;
}

MaskOrder mask_order_from(const ConstraintSet& constraints) {
  const int k = constraints.dim();
  std::vector<int> counts(k, 0);
  for (const HalfSpaceConstraint& c : constraints) {
    for (int f = 0; f < k; ++f) counts[f] += std::abs(c.normal()[f]) > kNonzeroEntry;
  }
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return counts[a] < counts[b]; });
  order.resize(static_cast<std::size_t>(std::max(0, k - 2)));
  return MaskOrder{order};
}

MaskOrder feature_mask_order(const Domain& domain, std::span<const Demonstration> pool) {
  ConstraintSet all(domain.spec().size());
  for (const Demonstration& d : pool) {
    all.merge(demo_constraints_standard(domain.mdp(d.env_index), d,
                                        domain.optimal_policy(d.env_index)));
  }
  return mask_order_from(all);
}

ConstraintSet default_prior(const FeatureSpec& spec) {
  ConstraintSet prior(spec.size());
  Eigen::VectorXd n = Eigen::VectorXd::Zero(spec.size());
  n[spec.action_index()] = -1.0;
  prior.insert_direction(n);
  return prior;
}

std::vector<Demonstration> candidate_pool(const Domain& domain, int cap) {
  std::vector<Demonstration> all = enumerate_candidate_demos(domain);
  // A start on the goal shows nothing.
  std::erase_if(all, [](const Demonstration& d) { return d.trajectory.steps.empty(); });
  if (cap <= 0 || static_cast<int>(all.size()) <= cap) return all;
  std::vector<std::vector<Demonstration>> by_env(domain.num_environments());
  for (Demonstration& d : all) by_env[d.env_index].push_back(std::move(d));
  std::vector<Demonstration> out;
  for (std::size_t round = 0; static_cast<int>(out.size()) < cap; ++round) {
    for (auto& env : by_env) {
      if (round < env.size() && static_cast<int>(out.size()) < cap) out.push_back(env[round]);
    }
  }
  return out;
}

int tie_break(const Domain& domain, std::span<const Demonstration> candidates,
              const Demonstration* previous) {
  if (candidates.empty()) throw std::invalid_argument("tie_break needs candidates");
  const GridEnvironment* prev =
      previous ? &domain.environments()[previous->env_index] : nullptr;
  int best = 0;
  auto key = [&](int i) {
    const GridEnvironment& env = domain.environments()[candidates[i].env_index];
    return std::make_tuple(dissimilarity(env, prev), env.annotated_cell_count(),
                           std::string_view(env.id), i);
  };
  for (int i = 1; i < static_cast<int>(candidates.size()); ++i) {
    if (key(i) < key(best)) best = i;
  }
  return best;
}

int partial_gain_target(std::span<const double> gains, double ratio) {
  if (gains.empty()) throw std::invalid_argument("partial_gain_target needs gains");
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw std::invalid_argument("gain ratio must lie in (0, 1]");
  }
  const double target = ratio * *std::max_element(gains.begin(), gains.end());
  int best = -1;
  for (int i = 0; i < static_cast<int>(gains.size()); ++i) {
    if (gains[i] >= target && (best < 0 || gains[i] < gains[best])) best = i;
  }
  return best;
}

Curriculum select_counterfactual_curriculum(const Domain& domain, const ConstraintSet& prior,
                                            const CurriculumOptions& options) {
  Teacher t(domain, prior, options, {TeachingStrategy::kCounterfactual, false});
  std::vector<int> all(t.pool_size());
  std::iota(all.begin(), all.end(), 0);
  t.counterfactual_phase(all, std::vector<bool>(domain.spec().size(), false), 0);
  return std::move(t).finish({});
}

Curriculum select_baseline_curriculum(const Domain& domain, const ConstraintSet& prior,
                                      const CurriculumOptions& options) {
  Teacher t(domain, prior, options, {TeachingStrategy::kBaseline, false});
  std::vector<int> all(t.pool_size());
  std::iota(all.begin(), all.end(), 0);
  t.baseline_phase(all, 0);
  return std::move(t).finish({});
}

Curriculum select_feature_scaffolded(const Domain& domain, TeachingStrategy inner,
                                     const ConstraintSet& prior,
                                     const CurriculumOptions& options) {
  const int k = domain.spec().size();
  if (k < 3) throw std::invalid_argument("feature scaffolding needs at least 3 features");
  Teacher t(domain, prior, options, {inner, true});
  ConstraintSet all(k);
  for (const ConstraintSet& s : t.standard()) all.merge(s);
  const MaskOrder order = mask_order_from(all);
  for (int hidden = k - 2; hidden >= 0; --hidden) {
    const auto masked = mask_of(k, order, hidden);
    const auto admissible = t.admissible(masked);
    if (admissible.empty()) {
      t.note("phase with " + std::to_string(hidden) +
             " masked features skipped: no admissible demonstrations");
      continue;
    }
    if (inner == TeachingStrategy::kCounterfactual) {
      t.counterfactual_phase(admissible, masked, hidden);
    } else {
      t.baseline_phase(admissible, hidden);
    }
  }
  return std::move(t).finish(order);
}

Curriculum build_curriculum(const Domain& domain, StrategyConfig strategy,
                            const ConstraintSet& prior, const CurriculumOptions& options) {
  if (strategy.feature_scaffolded) {
    return select_feature_scaffolded(domain, strategy.inner, prior, options);
  }
  return strategy.inner == TeachingStrategy::kCounterfactual
             ? select_counterfactual_curriculum(domain, prior, options)
             : select_baseline_curriculum(domain, prior, options);
}

}  // namespace cfteach
