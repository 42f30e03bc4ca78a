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

#ifndef CFTEACH_HALFSPACE_HPP_
#define CFTEACH_HALFSPACE_HPP_

#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace cfteach {

// Directions shorter than this carry no information and are dropped.
inline constexpr double kMinDirectionNorm = 1e-9;
// Two normals with cosine above 1 - kDuplicateCosine are the same constraint.
inline constexpr double kDuplicateCosine = 1e-9;

// The predicate w . normal >= 0 with a unit normal.
class HalfSpaceConstraint {
 public:
  const Eigen::VectorXd& normal() const { return normal_; }
  int dim() const { return static_cast<int>(normal_.size()); }
  bool satisfied_by(const Eigen::VectorXd& w, double tol = 0.0) const {
    return normal_.dot(w) >= -tol;
  }
  bool duplicates(const HalfSpaceConstraint& o) const {
    return normal_.dot(o.normal_) > 1.0 - kDuplicateCosine;
  }

 private:
  friend std::optional<HalfSpaceConstraint> normalize_constraint(
      const Eigen::VectorXd& direction);
  explicit HalfSpaceConstraint(Eigen::VectorXd n) : normal_(std::move(n)) {}
  Eigen::VectorXd normal_;
};

// Nothing when ||direction|| < 1e-9, otherwise direction / ||direction||.
std::optional<HalfSpaceConstraint> normalize_constraint(
    const Eigen::VectorXd& direction);

// An unordered, duplicate-free collection of half-space constraints over a
// fixed dimension. Insertion order is kept so iteration is deterministic.
class ConstraintSet {
 public:
  explicit ConstraintSet(int dim) : dim_(dim) {}

  // Returns false (and keeps the set unchanged) for a duplicate.
  bool insert(const HalfSpaceConstraint& c);
  // Normalizes and inserts; zero directions are ignored.
  bool insert_direction(const Eigen::VectorXd& direction);
  void merge(const ConstraintSet& other);

  bool has(const HalfSpaceConstraint& c) const;
  // Every member satisfied at `w` (up to tol).
  bool contains(const Eigen::VectorXd& w, double tol = 1e-12) const;

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(items_.size()); }
  bool empty() const { return items_.empty(); }
  const HalfSpaceConstraint& operator[](int i) const { return items_[i]; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  // Rows are the normals.
  Eigen::MatrixXd matrix() const;
  // A copy without member `i`.
  ConstraintSet without(int i) const;

 private:
  int dim_;
  std::vector<HalfSpaceConstraint> items_;
};

}  // namespace cfteach

#endif  // CFTEACH_HALFSPACE_HPP_
