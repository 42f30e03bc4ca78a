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

#include "cfteach/halfspace.hpp"

#include <algorithm>
#include <stdexcept>

namespace cfteach {

std::optional<HalfSpaceConstraint> normalize_constraint(
    const Eigen::VectorXd& direction) {
  if (!direction.allFinite()) {
    throw std::invalid_argument("constraint direction is not finite");
  }
  const double norm = direction.norm();
  if (norm < kMinDirectionNorm) return std::nullopt;
  return HalfSpaceConstraint(direction / norm);
}

bool ConstraintSet::insert(const HalfSpaceConstraint& c) {
  if (c.dim() != dim_) {
    throw std::invalid_argument("constraint dimension mismatch");
  }
  if (has(c)) return false;
  items_.push_back(c);
  return true;
}

bool ConstraintSet::insert_direction(const Eigen::VectorXd& direction) {
  auto c = normalize_constraint(direction);
  return c && insert(*c);
}

void ConstraintSet::merge(const ConstraintSet& other) {
  for (const HalfSpaceConstraint& c : other) insert(c);
}

bool ConstraintSet::has(const HalfSpaceConstraint& c) const {
  return std::any_of(items_.begin(), items_.end(),
                     [&](const HalfSpaceConstraint& m) { return m.duplicates(c); });
}

bool ConstraintSet::contains(const Eigen::VectorXd& w, double tol) const {
  return std::all_of(items_.begin(), items_.end(),
                     [&](const HalfSpaceConstraint& c) { return c.satisfied_by(w, tol); });
}

Eigen::MatrixXd ConstraintSet::matrix() const {
  Eigen::MatrixXd m(size(), dim_);
  for (int i = 0; i < size(); ++i) m.row(i) = items_[i].normal().transpose();
  return m;
}

ConstraintSet ConstraintSet::without(int i) const {
  ConstraintSet out(dim_);
  for (int j = 0; j < size(); ++j) {
    if (j != i) out.items_.push_back(items_[j]);
  }
  return out;
}

}  // namespace cfteach
