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

#include <random>

#include <gtest/gtest.h>

#include "cfteach/errors.hpp"
#include "cfteach/halfspace.hpp"
#include "cfteach/sphere.hpp"
#include "test_util.hpp"

namespace cfteach {
namespace {

using testing::vec;

ConstraintSet orthant(int k, int count) {
  ConstraintSet cs(k);
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd n = Eigen::VectorXd::Zero(k);
    n[i] = 1.0;
    cs.insert_direction(n);
  }
  return cs;
}

TEST(Normalize, ZeroDirectionIsDropped) {
  EXPECT_FALSE(normalize_constraint(vec({0, 0, 0})).has_value());
  EXPECT_FALSE(normalize_constraint(vec({1e-10, 0, 0})).has_value());
}

TEST(Normalize, ScalesToUnitNormal) {
  EXPECT_TRUE(normalize_constraint(vec({-1, 0, 2}))->normal().isApprox(vec({-1, 0, 2}) / std::sqrt(5.0)));
  EXPECT_TRUE(normalize_constraint(vec({2, 0, -4}))->normal().isApprox(vec({1, 0, -2}) / std::sqrt(5.0)));
}

TEST(Normalize, RejectsNonFinite) {
  EXPECT_THROW(normalize_constraint(vec({NAN, 0, 1})), std::invalid_argument);
}

TEST(ConstraintSet, DropsDuplicates) {
  ConstraintSet cs(3);
  EXPECT_TRUE(cs.insert_direction(vec({0, 0, -1})));
  EXPECT_FALSE(cs.insert_direction(vec({0, 0, -3})));
  EXPECT_FALSE(cs.insert_direction(vec({1e-12, 0, -1})));
  EXPECT_TRUE(cs.insert_direction(vec({0, -1, -1})));
  EXPECT_EQ(cs.size(), 2);
}

TEST(ConstraintSet, RejectsDimensionMismatch) {
  ConstraintSet cs(3);
  EXPECT_THROW(cs.insert_direction(vec({1, 0})), std::invalid_argument);
}

TEST(SampleSphere, PointsAreUnitAndCentered) {
  const auto pts = sample_sphere(4, 100000, 1);
  for (const WeightVector& w : pts) ASSERT_NEAR(w.values().norm(), 1.0, 1e-12);
  const auto pts3 = sample_sphere(3, 100000, 2);
  for (int i = 0; i < 3; ++i) {
    double mean = 0.0;
    for (const WeightVector& w : pts3) mean += w[i];
    mean /= static_cast<double>(pts3.size());
    // Each coordinate has variance 1/3.
    EXPECT_LT(std::abs(mean), 3.0 * std::sqrt(1.0 / 3.0 / pts3.size()));
  }
}

TEST(SampleSphere, RejectsBadArguments) {
  EXPECT_THROW(sample_sphere(1, 10, 0), std::invalid_argument);
  EXPECT_THROW(sample_sphere(3, -1, 0), std::invalid_argument);
}

TEST(EstimateArea, AnalyticOrthants) {
  const double expected[] = {1.0, 0.5, 0.25, 0.125};
  for (int c = 0; c <= 3; ++c) {
    const AreaEstimate a = estimate_area(orthant(3, c), 100000, 5);
    EXPECT_NEAR(a.fraction, expected[c], 0.01) << c << " constraints";
    if (c > 0) {
      EXPECT_NEAR(a.fraction, expected[c], 3.0 * a.half_width);
    }
  }
}

TEST(EstimateArea, RequiresEnoughSamples) {
  EXPECT_THROW(estimate_area(orthant(3, 1), 999, 0), std::invalid_argument);
}

TEST(EstimateArea, DeterministicGivenSeed) {
  const ConstraintSet cs = orthant(3, 2);
  EXPECT_EQ(estimate_area(cs, 20000, 9).fraction, estimate_area(cs, 20000, 9).fraction);
}

TEST(BeliefRegion, RefiningNeverGrows) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g;
  BeliefRegion b = BeliefRegion::create(ConstraintSet(3), 20000, 1);
  double area = b.area().fraction;
  for (int i = 0; i < 8; ++i) {
    ConstraintSet add(3);
    add.insert_direction(vec({g(rng), g(rng), g(rng)}));
    b = b.refined(add);
    EXPECT_LE(b.area().fraction, area);
    area = b.area().fraction;
  }
}

TEST(BeliefRegion, RefinedMatchesFreshCount) {
  ConstraintSet cs(3);
  cs.insert_direction(vec({1, 0, 0}));
  cs.insert_direction(vec({1, 1, -1}));
  const BeliefRegion a = BeliefRegion::create(ConstraintSet(3), 20000, 3).refined(cs);
  const BeliefRegion b = BeliefRegion::create(cs, 20000, 3);
  EXPECT_EQ(a.inside(), b.inside());
}

TEST(Overlap, EmptySetGivesRegionArea) {
  const BeliefRegion a = BeliefRegion::create(orthant(3, 1), 20000, 2);
  EXPECT_EQ(estimate_overlap(a, ConstraintSet(3)).fraction, a.area().fraction);
  EXPECT_EQ(estimate_overlap(a, a.constraints()).fraction, a.area().fraction);
}

TEST(Overlap, OrthogonalHemispheres) {
  ConstraintSet z(3);
  z.insert_direction(vec({0, 0, -1}));
  ConstraintSet x(3);
  x.insert_direction(vec({-1, 0, 0}));
  const AreaEstimate o = estimate_overlap(BeliefRegion::create(z, 100000, 6), x);
  EXPECT_NEAR(o.fraction, 0.25, 3.0 * o.half_width);
}

TEST(Overlap, BoundedByBothAreas) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    ConstraintSet a(3);
    ConstraintSet b(3);
    a.insert_direction(vec({g(rng), g(rng), g(rng)}));
    b.insert_direction(vec({g(rng), g(rng), g(rng)}));
    b.insert_direction(vec({g(rng), g(rng), g(rng)}));
    const BeliefRegion region = BeliefRegion::create(a, 20000, 10);
    const AreaEstimate o = estimate_overlap(region, b);
    const AreaEstimate bb = AreaEstimate::from_count(
        static_cast<int>(region.cloud()->inside(b).size()), 20000);
    EXPECT_LE(o.fraction, std::min(region.area().fraction, bb.fraction));
  }
}

TEST(InformationGain, RedundantConstraintsGainNothing) {
  const BeliefRegion b = BeliefRegion::create(orthant(3, 2), 20000, 1);
  EXPECT_EQ(information_gain(b, orthant(3, 1)), 0.0);
  EXPECT_EQ(information_gain(b, b.constraints()), 0.0);
}

TEST(InformationGain, HalvesTheSphere) {
  const BeliefRegion b = BeliefRegion::create(ConstraintSet(3), 100000, 1);
  const double gain = information_gain(b, orthant(3, 1));
  EXPECT_NEAR(gain, 0.5, 0.01);
  EXPECT_NEAR(b.area().fraction - gain, b.refined(orthant(3, 1)).area().fraction, 1e-15);
}

TEST(SampleBelief, EmptyConstraintsGiveSpherePoints) {
  const auto w = sample_belief(BeliefRegion::create(ConstraintSet(3), 1000, 0), 5, 3);
  EXPECT_EQ(w.size(), 5u);
  for (const WeightVector& v : w) EXPECT_NEAR(v.values().norm(), 1.0, 1e-12);
}

TEST(SampleBelief, RespectsNegativeAction) {
  ConstraintSet prior(3);
  prior.insert_direction(vec({0, 0, -1}));
  for (const WeightVector& w : sample_belief(BeliefRegion::create(prior, 1000, 0), 200, 4)) {
    EXPECT_LE(w[2], 0.0);
  }
}

TEST(SampleBelief, DegenerateRegionThrows) {
  ConstraintSet cs(3);
  cs.insert_direction(vec({1, 0, 0}));
  cs.insert_direction(vec({-1, 1e-7, 0}));
  cs.insert_direction(vec({0, 1, 0}));
  cs.insert_direction(vec({0, -1, 1e-7}));
  EXPECT_THROW(sample_belief(BeliefRegion::create(cs, 1000, 0), 1, 0), DegenerateRegion);
}

}  // namespace
}  // namespace cfteach
