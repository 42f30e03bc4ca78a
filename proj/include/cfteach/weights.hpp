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

#ifndef CFTEACH_WEIGHTS_HPP_
#define CFTEACH_WEIGHTS_HPP_

#include <cstdint>
#include <initializer_list>
#include <vector>

#include <Eigen/Dense>

namespace cfteach {

// Discounted accumulated feature counts, one entry per domain feature.
using FeatureVector = Eigen::VectorXd;

// A reward weighting on the unit sphere. Construction always yields
// ||w||_2 = 1 to within 1e-12.
class WeightVector {
 public:
  // Scales `raw` onto the sphere. Throws std::invalid_argument on a zero or
  // non-finite input.
  static WeightVector normalized(const Eigen::VectorXd& raw);
  static WeightVector normalized(std::initializer_list<double> raw);

  // Wraps an already unit-norm vector; throws std::invalid_argument if the
  // norm is off by more than 1e-12.
  static WeightVector from_unit(const Eigen::VectorXd& unit);

  const Eigen::VectorXd& values() const { return values_; }
  int size() const { return static_cast<int>(values_.size()); }
  double operator[](int i) const { return values_[i]; }
  double dot(const FeatureVector& phi) const { return values_.dot(phi); }

  bool operator==(const WeightVector& other) const {
    return values_ == other.values_;
  }

 private:
  explicit WeightVector(Eigen::VectorXd v) : values_(std::move(v)) {}
  Eigen::VectorXd values_;
};

// Deterministic seed derivation (splitmix64 over the mixed inputs), so
// sub-computations get independent streams regardless of evaluation order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                          std::uint64_t b = 0);

}  // namespace cfteach

#endif  // CFTEACH_WEIGHTS_HPP_
