#include "obstacle/quadrature.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace obstacle;

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
  for (int order : {2, 5, 12, 48}) {
    const GaussLegendre gl = gauss_legendre(order);
    ASSERT_EQ(gl.nodes.size(), static_cast<std::size_t>(order));
    for (int k = 0; k <= 2 * order - 1; ++k) {
      double s = 0.0;
      for (int i = 0; i < order; ++i) s += gl.weights[i] * std::pow(gl.nodes[i], k);
      const double exact = k % 2 == 0 ? 2.0 / (k + 1) : 0.0;
      EXPECT_NEAR(s, exact, 1e-13) << "order " << order << " degree " << k;
    }
  }
}

TEST(SphereRule, TotalWeightIsTheSurfaceArea) {
  EXPECT_NEAR(sphere_rule(1, 1).total_weight(), 2.0, 1e-14);
  EXPECT_NEAR(sphere_rule(2, 64).total_weight(), oracle::unit_sphere_area(2), 1e-12);
  EXPECT_NEAR(sphere_rule(3, 64).total_weight(), oracle::unit_sphere_area(3), 1e-10);
  for (const Vec& p : sphere_rule(3, 16, 0.3).points) EXPECT_NEAR(p.norm(), 1.0, 1e-14);
}

TEST(SphereRule, SecondMoments) {
  for (int n : {2, 3}) {
    const QuadratureRule r = sphere_rule(n, 48, 0.17);
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * r.points[i][0] * r.points[i][0];
    // int_S y_1^2 = |S| / n.
    EXPECT_NEAR(s, oracle::unit_sphere_area(n) / n, 1e-10);
  }
}

TEST(BallRule, VolumeAndSecondMoment) {
  for (int n : {1, 2, 3}) {
    const QuadratureRule r = ball_rule(n, 4, 48);
    EXPECT_NEAR(r.total_weight(), oracle::unit_ball_volume(n), 1e-10);
    double s = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) s += r.weights[i] * r.points[i][0] * r.points[i][0];
    EXPECT_NEAR(s, oracle::second_moment(n), 1e-10) << n;
  }
}

TEST(Phase, SeedZeroIsZeroAndOthersInRange) {
  EXPECT_EQ(phase_from_seed(0), 0.0);
  for (std::uint64_t s : {1ull, 42ull, 123456789ull}) {
    const double p = phase_from_seed(s);
    EXPECT_GE(p, 0.0);
    EXPECT_LT(p, 1.0);
    EXPECT_EQ(p, phase_from_seed(s));
  }
}

TEST(FrameWithAxis, IsOrthonormalWithGivenLastColumn) {
  Vec a(3);
  a << 1.0, -2.0, 0.5;
  a.normalize();
  const Mat q = frame_with_axis(a);
  EXPECT_LT((q.transpose() * q - Mat::Identity(3, 3)).norm(), 1e-13);
  EXPECT_LT((q.col(2) - a).norm(), 1e-14);
}

TEST(RuleSize, GrowsWithRadiusOverSpacing) {
  const RuleSize small = rule_size_for(2, 0.05, 1.0 / 128);
  const RuleSize large = rule_size_for(2, 0.5, 1.0 / 128);
  EXPECT_GE(large.sphere, small.sphere);
  EXPECT_GE(large.panels, small.panels);
}
