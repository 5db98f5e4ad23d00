#include "obstacle/blowup.hpp"
#include "obstacle/parallel.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace obstacle;

namespace {

struct Sampled {
  CoefficientField cf;
  ObstacleSolution sol;
};

Sampled sampled(int res, const ScalarFn& v) {
  const Domain d = Domain::centered(2, 1.0);
  CoefficientField cf = make_coefficient_preset("identity", d);
  cf.g = v;
  const Grid g = Grid::with_resolution(d, res);
  std::vector<double> u(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) u[i] = v(g.point(i));
  return {cf, make_solution(assemble(cf, g), u, 1e-12)};
}

ClassifyOptions no_decay() {
  ClassifyOptions o;
  o.decay = false;
  return o;
}

}  // namespace

TEST(Rescale, QuadraticFieldIsInvariant) {
  const Sampled s = sampled(64, [](const Vec& x) { return x.squaredNorm() / 4.0; });
  const RescaledField r = rescale(s.sol, s.cf, Vec::Zero(2), 0.25);
  Vec y(2);
  y << 0.6, -0.3;
  EXPECT_NEAR(r.value(y), y.squaredNorm() / 4.0, 1e-12);
  EXPECT_NEAR(r.origin_value(), 0.0, 1e-14);
}

TEST(Ladder, StopsAtSixEffectiveSpacings) {
  const Sampled s = sampled(64, [](const Vec& x) { return x.squaredNorm() / 4.0; });
  const FrameField ff(s.sol, s.cf, Vec::Zero(2));
  const std::vector<double> l = default_ladder(ff);
  ASSERT_GE(l.size(), 6u);
  EXPECT_GE(l.front(), 6.0 * ff.h_eff() - 1e-15);
  EXPECT_LE(l.back(), 0.5 + 1e-12);
}

TEST(Classify, HalfSpaceIsRegular) {
  const Sampled s = sampled(128, [](const Vec& x) { return oracle::halfspace_1d(x[1], 0.0); });
  const BlowupReport b = classify_point(s.sol, s.cf, Vec::Zero(2), no_decay());
  EXPECT_EQ(b.label, PointLabel::Regular);
  EXPECT_NEAR(b.phi0, oracle::theta(2), 0.01 * oracle::theta(2));
  ASSERT_TRUE(b.profile);
  EXPECT_EQ(b.profile->kind(), HomogeneousProfile::Kind::HalfSpace);
  EXPECT_NEAR(b.profile->direction()[1], 1.0, 1e-6);
  EXPECT_EQ(b.stratum, -1);
}

TEST(Classify, RadialIsSingularStratumZero) {
  const Sampled s = sampled(128, [](const Vec& x) { return x.squaredNorm() / 4.0; });
  const BlowupReport b = classify_point(s.sol, s.cf, Vec::Zero(2), no_decay());
  EXPECT_EQ(b.label, PointLabel::Singular);
  EXPECT_NEAR(b.phi0, 2.0 * oracle::theta(2), 1e-6);
  EXPECT_LT((b.profile->matrix() - 0.25 * Mat::Identity(2, 2)).norm(), 1e-9);
  EXPECT_EQ(b.stratum, 0);
}

TEST(Classify, DegeneratePolynomialIsStratumOne) {
  const Sampled s = sampled(128, [](const Vec& x) { return 0.5 * x[0] * x[0]; });
  const BlowupReport b = classify_point(s.sol, s.cf, Vec::Zero(2), no_decay());
  EXPECT_EQ(b.label, PointLabel::Singular);
  EXPECT_EQ(b.stratum, 1);
}

TEST(StratumIndex, CountsNegligibleEigenvalues) {
  Mat b = Mat::Zero(3, 3);
  b(0, 0) = 0.5;
  EXPECT_EQ(stratum_index(b, 0.01), 2);
  b(0, 0) = 0.25;
  b(1, 1) = 0.25;
  EXPECT_EQ(stratum_index(b, 0.01), 1);
  b(0, 0) = b(1, 1) = b(2, 2) = 1.0 / 6.0;
  EXPECT_EQ(stratum_index(b, 0.01), 0);
}

TEST(Decay, ExactProfileIsAtTheFloor) {
  const Sampled s = sampled(128, [](const Vec& x) { return x.squaredNorm() / 4.0; });
  const FrameField ff(s.sol, s.cf, Vec::Zero(2));
  const HomogeneousProfile v = HomogeneousProfile::polynomial(0.25 * Mat::Identity(2, 2));
  const DecayEstimate d = estimate_decay_rate(ff, v, default_ladder(ff), PointLabel::Singular);
  EXPECT_TRUE(d.exact);
}

TEST(Stratify, CircleBoundaryIsAllRegularAndHoelder) {
  const Sampled s = sampled(128, [](const Vec& x) {
    const double d = x.norm() - 0.3;
    return d > 0 ? 0.5 * d * d : 0.0;
  });
  const FreeBoundarySet f = extract(s.sol);
  StratifyOptions o;
  o.stride = 6;
  o.classify.decay = false;
  const StratificationReport r = stratify(s.sol, s.cf, f, o);
  EXPECT_GT(r.regular, 0u);
  EXPECT_EQ(r.singular, 0u);
  EXPECT_EQ(r.ambiguous, 0u);
  EXPECT_EQ(r.openness_violations, 0u);
  EXPECT_TRUE(std::isfinite(r.holder_quotient));
}

TEST(Stratify, ThreadCountDoesNotChangeTheResult) {
  const Sampled s = sampled(96, [](const Vec& x) {
    const double d = x.norm() - 0.3;
    return d > 0 ? 0.5 * d * d : 0.0;
  });
  const FreeBoundarySet f = extract(s.sol);
  StratifyOptions o;
  o.stride = 8;
  o.classify.decay = false;
  set_thread_count(1);
  const StratificationReport a = stratify(s.sol, s.cf, f, o);
  set_thread_count(4);
  const StratificationReport b = stratify(s.sol, s.cf, f, o);
  set_thread_count(1);
  ASSERT_EQ(a.entries.size(), b.entries.size());
  for (std::size_t k = 0; k < a.entries.size(); ++k) {
    EXPECT_EQ(a.entries[k].status, b.entries[k].status);
    EXPECT_EQ(a.entries[k].phi0, b.entries[k].phi0);
  }
}
