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

#include "cfteach/sphere.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "cfteach/errors.hpp"

namespace cfteach {

namespace {

void fill_unit_gaussian(std::mt19937_64& rng, std::normal_distribution<double>& normal,
                        double* out, int k) {
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (int i = 0; i < k; ++i) {
      out[i] = normal(rng);
      norm2 += out[i] * out[i];
    }
  } while (norm2 == 0.0);
  const double inv = 1.0 / std::sqrt(norm2);
  for (int i = 0; i < k; ++i) out[i] *= inv;
}

bool satisfies_all(const Eigen::MatrixXd& normals, const double* w) {
  const int k = static_cast<int>(normals.cols());
  for (Eigen::Index r = 0; r < normals.rows(); ++r) {
    double dot = 0.0;
    for (int i = 0; i < k; ++i) dot += normals(r, i) * w[i];
    if (dot < 0.0) return false;
  }
  return true;
}

void check_dims(int k, int n) {
  if (k < 2) throw std::invalid_argument("sphere dimension k must be >= 2");
  if (n < 0) throw std::invalid_argument("sample count must be nonnegative");
}

}  // namespace

std::vector<WeightVector> sample_sphere(int k, int n, std::uint64_t seed) {
  check_dims(k, n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<WeightVector> out;
  out.reserve(static_cast<std::size_t>(n));
  Eigen::VectorXd w(k);
  for (int j = 0; j < n; ++j) {
    fill_unit_gaussian(rng, normal, w.data(), k);
    out.push_back(WeightVector::normalized(w));
  }
  return out;
}

std::shared_ptr<const SphereSample> SphereSample::draw(int k, int n,
                                                       std::uint64_t seed) {
  check_dims(k, n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd points(k, n);
  for (int j = 0; j < n; ++j) fill_unit_gaussian(rng, normal, points.col(j).data(), k);
  return std::shared_ptr<const SphereSample>(new SphereSample(std::move(points), seed));
}

std::vector<int> SphereSample::inside(const ConstraintSet& cs) const {
  std::vector<int> out;
  if (cs.empty()) {
    out.resize(static_cast<std::size_t>(size()));
    for (int j = 0; j < size(); ++j) out[j] = j;
    return out;
  }
  const Eigen::MatrixXd dots = cs.matrix() * points_;
  for (int j = 0; j < size(); ++j) {
    if (dots.col(j).minCoeff() >= 0.0) out.push_back(j);
  }
  return out;
}

std::vector<int> SphereSample::filter(std::span<const int> among,
                                      const ConstraintSet& cs) const {
  if (cs.empty()) return {among.begin(), among.end()};
  const Eigen::MatrixXd normals = cs.matrix();
  std::vector<int> out;
  out.reserve(among.size());
  for (int j : among) {
    if (satisfies_all(normals, points_.col(j).data())) out.push_back(j);
  }
  return out;
}

int SphereSample::count_violating(std::span<const int> among,
                                  const ConstraintSet& cs) const {
  if (cs.empty()) return 0;
  const Eigen::MatrixXd normals = cs.matrix();
  int count = 0;
  for (int j : among) {
    if (!satisfies_all(normals, points_.col(j).data())) ++count;
  }
  return count;
}

AreaEstimate AreaEstimate::from_count(int inside, int n) {
  AreaEstimate e;
  e.samples = n;
  e.fraction = n > 0 ? static_cast<double>(inside) / n : 0.0;
  e.half_width = n > 0 ? 1.96 * std::sqrt(e.fraction * (1.0 - e.fraction) / n) : 1.0;
  return e;
}

AreaEstimate estimate_area(const ConstraintSet& cs, int n_samples,
                           std::uint64_t seed) {
  if (n_samples < kMinAreaSamples) {
    throw std::invalid_argument("estimate_area needs at least 1000 samples");
  }
  if (cs.empty()) return AreaEstimate::from_count(n_samples, n_samples);
  auto cloud = SphereSample::draw(cs.dim(), n_samples, seed);
  return AreaEstimate::from_count(static_cast<int>(cloud->inside(cs).size()), n_samples);
}

// ---------------------------------------------------------------------------
// BeliefRegion

BeliefRegion::BeliefRegion(ConstraintSet cs, std::shared_ptr<const SphereSample> cloud,
                           std::vector<int> inside)
    : constraints_(std::move(cs)), cloud_(std::move(cloud)), inside_(std::move(inside)) {
  area_ = AreaEstimate::from_count(static_cast<int>(inside_.size()), cloud_->size());
}

BeliefRegion BeliefRegion::create(ConstraintSet constraints, int sample_budget,
                                  std::uint64_t seed) {
  if (sample_budget < kMinAreaSamples) {
    throw std::invalid_argument("belief sample budget must be at least 1000");
  }
  auto cloud = SphereSample::draw(constraints.dim(), sample_budget, seed);
  return create(std::move(constraints), std::move(cloud));
}

BeliefRegion BeliefRegion::create(ConstraintSet constraints,
                                  std::shared_ptr<const SphereSample> cloud) {
  if (cloud->dim() != constraints.dim()) {
    throw std::invalid_argument("cloud and constraint dimensions differ");
  }
  auto inside = cloud->inside(constraints);
  return BeliefRegion(std::move(constraints), std::move(cloud), std::move(inside));
}

BeliefRegion BeliefRegion::refined(const ConstraintSet& added) const {
  ConstraintSet merged = constraints_;
  merged.merge(added);
  auto inside = cloud_->filter(inside_, added);
  return BeliefRegion(std::move(merged), cloud_, std::move(inside));
}

// ---------------------------------------------------------------------------

std::vector<WeightVector> sample_belief(const BeliefRegion& b, int m,
                                        std::uint64_t seed) {
  if (m < 0) throw std::invalid_argument("belief sample count must be >= 0");
  std::vector<WeightVector> out;
  if (m == 0) return out;
  out.reserve(static_cast<std::size_t>(m));
  const int k = b.dim();
  const Eigen::MatrixXd normals = b.constraints().matrix();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd w(k);
  long attempts = 0;
  while (static_cast<int>(out.size()) < m) {
    if (attempts >= kMaxRejectionAttempts) {
      throw DegenerateRegion("accepted " + std::to_string(out.size()) + " of " +
                             std::to_string(m) + " belief samples in " +
                             std::to_string(attempts) + " attempts");
    }
    ++attempts;
    fill_unit_gaussian(rng, normal, w.data(), k);
    if (normals.rows() == 0 || satisfies_all(normals, w.data())) {
      out.push_back(WeightVector::normalized(w));
    }
  }
  return out;
}

AreaEstimate estimate_overlap(const BeliefRegion& a, const ConstraintSet& cs,
                              int n_samples, std::uint64_t seed) {
  if (n_samples == a.sample_budget() && seed == a.seed()) return estimate_overlap(a, cs);
  ConstraintSet both = a.constraints();
  both.merge(cs);
  return estimate_area(both, n_samples, seed);
}

AreaEstimate estimate_overlap(const BeliefRegion& a, const ConstraintSet& cs) {
  const int removed = a.cloud()->count_violating(a.inside(), cs);
  return AreaEstimate::from_count(static_cast<int>(a.inside().size()) - removed,
                                  a.sample_budget());
}

double information_gain(const BeliefRegion& b, const ConstraintSet& added) {
  const int removed = b.cloud()->count_violating(b.inside(), added);
  return static_cast<double>(removed) / b.sample_budget();
}

}  // namespace cfteach
