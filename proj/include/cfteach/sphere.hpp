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

// Beliefs over reward weights as constrained regions of the unit sphere,
// measured by Monte Carlo. Every area comparison that must be exact (gain of a
// redundant constraint is zero, adding constraints never grows a region) runs
// on one shared sample cloud.

#ifndef CFTEACH_SPHERE_HPP_
#define CFTEACH_SPHERE_HPP_

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "cfteach/halfspace.hpp"
#include "cfteach/weights.hpp"

namespace cfteach {

inline constexpr int kDefaultAreaSamples = 100'000;
inline constexpr int kDefaultBeliefSamples = 10;
inline constexpr int kMinAreaSamples = 1'000;
inline constexpr long kMaxRejectionAttempts = 10'000'000;

// n independent uniform points on S^{k-1} (normalized isotropic Gaussians).
std::vector<WeightVector> sample_sphere(int k, int n, std::uint64_t seed);

// A frozen cloud of uniform sphere points, column-major (k x n).
class SphereSample {
 public:
  static std::shared_ptr<const SphereSample> draw(int k, int n,
                                                  std::uint64_t seed);

  int dim() const { return static_cast<int>(points_.rows()); }
  int size() const { return static_cast<int>(points_.cols()); }
  std::uint64_t seed() const { return seed_; }
  const Eigen::MatrixXd& points() const { return points_; }

  // Indices of the points satisfying every member of `cs`.
  std::vector<int> inside(const ConstraintSet& cs) const;
  // The subset of `among` satisfying every member of `cs`.
  std::vector<int> filter(std::span<const int> among,
                          const ConstraintSet& cs) const;
  // How many of `among` violate at least one member of `cs`.
  int count_violating(std::span<const int> among, const ConstraintSet& cs) const;

 private:
  SphereSample(Eigen::MatrixXd points, std::uint64_t seed)
      : points_(std::move(points)), seed_(seed) {}
  Eigen::MatrixXd points_;
  std::uint64_t seed_;
};

// A sphere fraction with its binomial 95% confidence half-width.
struct AreaEstimate {
  double fraction = 1.0;
  double half_width = 0.0;
  int samples = 0;

  static AreaEstimate from_count(int inside, int n);
};

// Throws std::invalid_argument when n_samples < 1000.
AreaEstimate estimate_area(const ConstraintSet& cs,
                           int n_samples = kDefaultAreaSamples,
                           std::uint64_t seed = 0);

// The modeled learner belief: constraints plus the cached area measured on a
// sample cloud that refinements keep sharing.
class BeliefRegion {
 public:
  static BeliefRegion create(ConstraintSet constraints,
                             int sample_budget = kDefaultAreaSamples,
                             std::uint64_t seed = 0);
  static BeliefRegion create(ConstraintSet constraints,
                             std::shared_ptr<const SphereSample> cloud);

  // The region with `added` intersected in, on the same cloud.
  BeliefRegion refined(const ConstraintSet& added) const;

  const ConstraintSet& constraints() const { return constraints_; }
  const AreaEstimate& area() const { return area_; }
  int dim() const { return constraints_.dim(); }
  int sample_budget() const { return cloud_->size(); }
  std::uint64_t seed() const { return cloud_->seed(); }
  const std::shared_ptr<const SphereSample>& cloud() const { return cloud_; }
  // Cloud indices inside the region.
  const std::vector<int>& inside() const { return inside_; }

  bool contains(const Eigen::VectorXd& w, double tol = 1e-12) const {
    return constraints_.contains(w, tol);
  }
  // True when at least one cloud point lies in the region.
  bool feasible() const { return !inside_.empty(); }

 private:
  BeliefRegion(ConstraintSet cs, std::shared_ptr<const SphereSample> cloud,
               std::vector<int> inside);
  ConstraintSet constraints_;
  std::shared_ptr<const SphereSample> cloud_;
  std::vector<int> inside_;
  AreaEstimate area_;
};

// m uniform points of the region by rejection from the sphere. Throws
// DegenerateRegion when fewer than m are accepted within 10^7 attempts.
std::vector<WeightVector> sample_belief(const BeliefRegion& b, int m,
                                        std::uint64_t seed);

// Sphere fraction of the intersection of `a` and `cs`.
AreaEstimate estimate_overlap(const BeliefRegion& a, const ConstraintSet& cs,
                              int n_samples, std::uint64_t seed);
// Same, on a's own cloud.
AreaEstimate estimate_overlap(const BeliefRegion& a, const ConstraintSet& cs);

// area(b) - area(b with `added`), on b's cloud; exactly 0 when `added` is
// redundant.
double information_gain(const BeliefRegion& b, const ConstraintSet& added);

}  // namespace cfteach

#endif  // CFTEACH_SPHERE_HPP_
