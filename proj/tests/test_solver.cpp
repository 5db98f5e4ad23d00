#include "obstacle/obstacle_solver.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace obstacle;

namespace {

struct Problem {
  CoefficientField cf;
  Grid grid;
  DiscreteEnergy de;
};

Problem make(int dim, int res, const std::string& coeff, const std::string& boundary) {
  const Domain d = Domain::centered(dim, 1.0);
  CoefficientField cf = make_coefficient_preset(coeff, d);
  cf.g = make_field_preset(boundary, dim);
  Grid g = Grid::with_resolution(d, res);
  DiscreteEnergy de = assemble(cf, g);
  return {cf, g, std::move(de)};
}

SolverOptions auto_omega() {
  SolverOptions o;
  o.omega_auto = true;
  return o;
}

}  // namespace

TEST(Assemble, ReproducesTheLaplacianOfQuadratics) {
  const Problem p = make(2, 16, "identity", "zero");
  std::vector<double> u(p.grid.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = p.grid.point(i).squaredNorm();
  for (std::size_t i = 0; i < u.size(); ++i)
    if (!p.grid.is_boundary(i)) EXPECT_NEAR(p.de.divergence(i, u), 4.0, 1e-10);
}

TEST(Solve, OneDimensionalHalfSpaceIsExactAtNodes) {
  const Problem p = make(1, 64, "identity", "halfspace:0.5");
  const ObstacleSolution s = solve(p.de, p.cf.g, 1e-12, 100000, auto_omega());
  ASSERT_TRUE(s.converged);
  double err = 0.0;
  for (std::size_t i = 0; i < s.u.size(); ++i)
    err = std::max(err, std::abs(s.u[i] - oracle::halfspace_1d(s.grid.point(i)[0], 0.5)));
  EXPECT_LT(err, 1e-9);
}

TEST(Solve, ComplementarityAndNonnegativity) {
  const Problem p = make(2, 32, "radial-lipschitz:0.3", "halfspace");
  const ObstacleSolution s = solve(p.de, p.cf.g, 1e-9, 100000, auto_omega());
  ASSERT_TRUE(s.converged);
  EXPECT_LE(s.projected_residual, 1e-9);
  for (double v : s.u) EXPECT_GE(v, 0.0);
  // Supersolution: f - div(A grad u) >= 0 up to the tolerance on interior nodes.
  for (std::size_t i = 0; i < s.u.size(); ++i)
    if (!s.grid.is_boundary(i)) EXPECT_GE(s.pde_residual[i], -1e-8);
}

TEST(Solve, EnergyDecreasesMonotonically) {
  const Problem p = make(2, 24, "identity", "radial");
  SolverOptions o = auto_omega();
  o.record_energy = true;
  o.initial = InitialIterate::Zero;
  const ObstacleSolution s = solve(p.de, p.cf.g, 1e-10, 100000, o);
  ASSERT_GE(s.energy_history.size(), 2u);
  for (std::size_t k = 1; k < s.energy_history.size(); ++k)
    EXPECT_LE(s.energy_history[k], s.energy_history[k - 1] + 1e-12 * std::abs(s.energy_history[k - 1]));
}

TEST(Solve, InitialIterateDoesNotChangeTheSolution) {
  const Problem p = make(2, 24, "identity", "radial");
  SolverOptions a = auto_omega(), b = auto_omega();
  b.initial = InitialIterate::Zero;
  const ObstacleSolution sa = solve(p.de, p.cf.g, 1e-11, 100000, a);
  const ObstacleSolution sb = solve(p.de, p.cf.g, 1e-11, 100000, b);
  for (std::size_t i = 0; i < sa.u.size(); ++i) EXPECT_NEAR(sa.u[i], sb.u[i], 1e-8);
}

TEST(Solve, MaxIterReturnsUnconvergedIterate) {
  const Problem p = make(2, 32, "identity", "radial");
  SolverOptions o = auto_omega();
  o.initial = InitialIterate::Zero;
  const ObstacleSolution s = solve(p.de, p.cf.g, 1e-14, 3, o);
  EXPECT_FALSE(s.converged);
  EXPECT_EQ(s.iterations, 3);
}

TEST(Solve, NegativeBoundaryIsInfeasible) {
  Problem p = make(2, 8, "identity", "zero");
  const ScalarFn g = [](const Vec&) { return -1.0; };
  try {
    solve(p.de, g, 1e-8, 100);
    FAIL() << "expected InfeasibleBoundary";
  } catch (const LabError& e) {
    EXPECT_EQ(e.code(), ErrorCode::InfeasibleBoundary);
  }
}

TEST(Solve, ScaledProblemHasTheSameSolution) {
  // c A and c f leave the solution unchanged.
  const Problem p = make(2, 24, "identity", "radial");
  const Problem q = make(2, 24, "scaled:3", "radial");
  const ObstacleSolution a = solve(p.de, p.cf.g, 1e-11, 100000, auto_omega());
  const ObstacleSolution b = solve(q.de, q.cf.g, 1e-11, 100000, auto_omega());
  for (std::size_t i = 0; i < a.u.size(); ++i) EXPECT_NEAR(a.u[i], b.u[i], 1e-8);
}

TEST(Threshold, IsTheLargerOfTolAndHSquaredTimesMaxF) {
  EXPECT_DOUBLE_EQ(positivity_threshold(1e-8, 0.01, 2.0), 2e-4);
  EXPECT_DOUBLE_EQ(positivity_threshold(1e-3, 0.01, 2.0), 2e-3);
}

TEST(OptimalOmega, InOpenInterval) {
  const double w = optimal_omega(Grid::with_resolution(Domain::centered(2, 1.0), 64));
  EXPECT_GT(w, 1.0);
  EXPECT_LT(w, 2.0);
}

TEST(MakeSolution, ExactRadialFieldHasTinyResidual) {
  const Problem p = make(2, 32, "identity", "radial");
  std::vector<double> u(p.grid.size());
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = p.grid.point(i).squaredNorm() / 4.0;
  const ObstacleSolution s = make_solution(p.de, u, 1e-10);
  EXPECT_LT(s.projected_residual, 1e-10);
  const ResidualReport r = pde_residual(s, p.cf);
  EXPECT_LT(r.pde_residual, 1e-10);
}
