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

#ifndef CFTEACH_ERRORS_HPP_
#define CFTEACH_ERRORS_HPP_

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cfteach {

// Coarse error classes; the CLI maps these onto its exit codes.
enum class ErrorCategory {
  kConfig,      // bad input files, flags, schemas (exit 2)
  kInfeasible,  // the math has no answer for these inputs (exit 3)
  kInternal,    // broken invariant inside the engine (exit 4)
  kInput,       // a learner-submitted response was malformed (HTTP 400)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

#define CFTEACH_DEFINE_ERROR(Name, Category)               \
  class Name : public Error {                              \
   public:                                                 \
    explicit Name(const std::string& what)                 \
        : Error(ErrorCategory::Category, #Name ": " + what) {} \
  }

CFTEACH_DEFINE_ERROR(Unreachable, kInfeasible);
CFTEACH_DEFINE_ERROR(CycleDetected, kInternal);
CFTEACH_DEFINE_ERROR(PolicyMismatch, kInternal);
CFTEACH_DEFINE_ERROR(InfeasibleSet, kInfeasible);
CFTEACH_DEFINE_ERROR(DegenerateRegion, kInfeasible);
CFTEACH_DEFINE_ERROR(EmptyPool, kInfeasible);
CFTEACH_DEFINE_ERROR(CoverageFailure, kInfeasible);
CFTEACH_DEFINE_ERROR(PoolTooSmall, kInfeasible);
CFTEACH_DEFINE_ERROR(DegenerateClusters, kInfeasible);
CFTEACH_DEFINE_ERROR(InvalidTrajectory, kInput);
CFTEACH_DEFINE_ERROR(SchemaError, kConfig);
CFTEACH_DEFINE_ERROR(SemanticError, kConfig);
CFTEACH_DEFINE_ERROR(DomainMismatch, kConfig);
CFTEACH_DEFINE_ERROR(ChecksumError, kConfig);

#undef CFTEACH_DEFINE_ERROR

// Planning under a weight vector whose reward admits a positive-value loop
// (or a nonnegative action weight at discount 1). When the planner found a
// concrete loop, its undiscounted feature sum and member states are attached.
class NonTerminating : public Error {
 public:
  explicit NonTerminating(const std::string& what)
      : Error(ErrorCategory::kInfeasible, "NonTerminating: " + what) {}
  NonTerminating(const std::string& what, Eigen::VectorXd cycle_features,
                 std::vector<int> cycle_states)
      : Error(ErrorCategory::kInfeasible, "NonTerminating: " + what),
        cycle_features_(std::move(cycle_features)),
        cycle_states_(std::move(cycle_states)) {}

  const std::optional<Eigen::VectorXd>& cycle_features() const {
    return cycle_features_;
  }
  const std::vector<int>& cycle_states() const { return cycle_states_; }

 private:
  std::optional<Eigen::VectorXd> cycle_features_;
  std::vector<int> cycle_states_;
};

}  // namespace cfteach

#endif  // CFTEACH_ERRORS_HPP_
