#include "obstacle/field_model.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace obstacle;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const LabError& e) {
    return e.code();
  }
  ADD_FAILURE() << "no LabError thrown";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Domain, CenteredBoxAndDistances) {
  const Domain d = Domain::centered(2, 1.0);
  EXPECT_EQ(d.dim(), 2);
  EXPECT_DOUBLE_EQ(d.lower(0), -1.0);
  EXPECT_DOUBLE_EQ(d.upper(1), 1.0);
  EXPECT_TRUE(d.contains(Vec::Zero(2)));
  Vec x(2);
  x << 0.5, -0.25;
  EXPECT_NEAR(d.distance_to_boundary(x), 0.5, 1e-15);
  x << 1.5, 0.0;
  EXPECT_FALSE(d.contains(x));
}

TEST(Domain, RejectsBadDimension) {
  EXPECT_EQ(code_of([] { Domain::centered(4, 1.0); }), ErrorCode::InvalidArgument);
}

TEST(Grid, IndexRoundTripAndSpacing) {
  const Grid g = Grid::with_resolution(Domain::centered(3, 1.0), 8);
  EXPECT_EQ(g.nodes(0), 17);
  EXPECT_NEAR(g.spacing(2), 0.125, 1e-15);
  EXPECT_EQ(g.size(), 17u * 17u * 17u);
  for (std::size_t i = 0; i < g.size(); i += 37) EXPECT_EQ(g.linear_index(g.multi_index(i)), i);
  EXPECT_TRUE(g.is_boundary(std::size_t{0}));
  EXPECT_FALSE(g.is_boundary(std::array<int, 3>{8, 8, 8}));
  EXPECT_NEAR(g.point(std::array<int, 3>{8, 8, 8}).norm(), 0.0, 1e-15);
}

TEST(Grid, NodeWeightsIntegrateTheVolume) {
  const Grid g = Grid::with_resolution(Domain::centered(2, 1.0), 16);
  double total = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) total += g.node_weight(i);
  EXPECT_NEAR(total, 4.0, 1e-12);
}

TEST(Grid, TooCoarseThrows) {
  EXPECT_EQ(code_of([] { Grid(Domain::centered(1, 1.0), {2, 1, 1}); }), ErrorCode::GridTooCoarse);
}

TEST(SpdSqrt, SquaresBack) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int k = 0; k < 20; ++k) {
    Mat m(3, 3);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) m(i, j) = n(rng);
    const Mat a = m * m.transpose() + Mat::Identity(3, 3);
    const Mat s = spd_sqrt(a);
    EXPECT_LT((s * s - a).norm(), 1e-10 * a.norm());
    EXPECT_LT((s - s.transpose()).norm(), 1e-12);
  }
}

TEST(SpdSqrt, RejectsIndefinite) {
  Mat a = Mat::Identity(2, 2);
  a(1, 1) = -1.0;
  EXPECT_EQ(code_of([&] { spd_sqrt(a); }), ErrorCode::SquareRootFailure);
}

TEST(Frame, NormalizesCoefficientsAtTheBase) {
  const Domain d = Domain::centered(2, 1.0);
  const CoefficientField cf = make_coefficient_preset("anisotropic:0.3", d);
  Vec x0(2);
  x0 << 0.2, -0.1;
  const Frame fr = make_frame(cf, x0);
  EXPECT_LT((fr.coefficient(Vec::Zero(2)) - Mat::Identity(2, 2)).norm(), 1e-12);
  EXPECT_NEAR(fr.forcing(Vec::Zero(2)), 1.0, 1e-14);
  // L L^T = A(x0) / f(x0).
  EXPECT_LT((fr.L() * fr.L().transpose() - cf.A(x0) / cf.f(x0)).norm(), 1e-12);
  Vec y(2);
  y << 0.3, 0.7;
  EXPECT_LT((fr.to_frame(fr.to_world(y)) - y).norm(), 1e-14);
  EXPECT_TRUE(fr.mu(Vec::Zero(2)).at_base_point);
}

TEST(Frame, ScaledPresetGivesIdentityFrame) {
  const Domain d = Domain::centered(2, 1.0);
  const Frame fr = make_frame(make_coefficient_preset("scaled:4", d), Vec::Zero(2));
  EXPECT_LT((fr.L() - Mat::Identity(2, 2)).norm(), 1e-14);
}

TEST(Presets, UnknownNamesAreConfigErrors) {
  const Domain d = Domain::centered(2, 1.0);
  EXPECT_EQ(code_of([&] { make_coefficient_preset("nonsense", d); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([&] { make_field_preset("nonsense", 2); }), ErrorCode::ConfigError);
  EXPECT_EQ(code_of([&] { make_coefficient_preset("scaled:-1", d); }), ErrorCode::ConfigError);
}

TEST(Presets, ExactFieldsMatchClosedForms) {
  const ScalarFn hs = make_field_preset("halfspace:0.25", 1);
  for (double x : {-0.5, 0.0, 0.25, 0.6, 1.0}) {
    Vec p(1);
    p << x;
    EXPECT_NEAR(hs(p), oracle::halfspace_1d(x, 0.25), 1e-15);
  }
  const ScalarFn rad = make_field_preset("radial", 2);
  Vec p(2);
  p << 0.3, -0.4;
  EXPECT_NEAR(rad(p), 0.25 * 0.25, 1e-15);
}

TEST(Presets, GradientMatchesFiniteDifferences) {
  for (const char* name : {"halfspace", "radial", "polynomial:0.4,0.1", "radial-lipschitz-exact:0.3"}) {
    const ScalarFn f = make_field_preset(name, 2);
    const auto grad = make_field_gradient_preset(name, 2);
    Vec x(2);
    x << 0.31, 0.27;
    const double e = 1e-6;
    for (int k = 0; k < 2; ++k) {
      Vec xp = x, xm = x;
      xp[k] += e;
      xm[k] -= e;
      EXPECT_NEAR(grad(x)[k], (f(xp) - f(xm)) / (2 * e), 1e-7) << name;
    }
  }
}

TEST(Validate, DetectsEllipticityAndForcingViolations) {
  const Domain d = Domain::centered(2, 1.0);
  const Grid g = Grid::with_resolution(d, 8);
  CoefficientField cf = make_coefficient_preset("identity", d);
  cf.g = make_field_preset("zero", 2);
  EXPECT_TRUE(validate_field(cf, g).valid());

  CoefficientField bad = cf;
  bad.A = [](const Vec&) { return Mat(10.0 * Mat::Identity(2, 2)); };
  EXPECT_EQ(code_of([&] { validate_field(bad, g); }), ErrorCode::EllipticityViolation);
  EXPECT_FALSE(validate_field(bad, g, false).valid());

  CoefficientField low = cf;
  low.f = [](const Vec&) { return 0.5; };
  EXPECT_EQ(code_of([&] { validate_field(low, g); }), ErrorCode::ForcingBelowC0);

  CoefficientField asym = cf;
  asym.A = [](const Vec&) {
    Mat m = Mat::Identity(2, 2);
    m(0, 1) = 0.2;
    return m;
  };
  EXPECT_EQ(code_of([&] { validate_field(asym, g); }), ErrorCode::NonSymmetric);
}
