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

#include "cfteach/weights.hpp"

#include <cmath>
#include <stdexcept>

namespace cfteach {

WeightVector WeightVector::normalized(const Eigen::VectorXd& raw) {
  if (!raw.allFinite()) {
    throw std::invalid_argument("weight vector has non-finite entries");
  }
  const double norm = raw.norm();
  if (norm == 0.0) {
    throw std::invalid_argument("weight vector is zero");
  }
  // Leave already-unit vectors untouched so serialization round-trips bit
  // for bit.
  if (std::abs(norm - 1.0) <= 1e-15) return WeightVector(raw);
  return WeightVector(raw / norm);
}

WeightVector WeightVector::normalized(std::initializer_list<double> raw) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(raw.size()));
  Eigen::Index i = 0;
  for (double x : raw) v[i++] = x;
  return normalized(v);
}

WeightVector WeightVector::from_unit(const Eigen::VectorXd& unit) {
  if (!unit.allFinite() || std::abs(unit.norm() - 1.0) > 1e-12) {
    throw std::invalid_argument("weight vector is not unit norm");
  }
  return WeightVector(unit);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a,
                          std::uint64_t b) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

}  // namespace cfteach
