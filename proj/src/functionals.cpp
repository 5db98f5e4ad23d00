#include "obstacle/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace obstacle {

// ---------------------------------------------------------------------------
// FrameField

FrameField::FrameField(std::shared_ptr<const FieldSampler> sampler, const CoefficientField& cf,
                       const Vec& x0)
    : sampler_(std::move(sampler)), frame_(make_frame(cf, x0)) {
  const Grid& grid = sampler_->grid();
  if (!grid.domain().contains(x0)) {
    throw LabError(ErrorCode::InvalidArgument, "base point lies outside the domain");
  }
  h_eff_ = grid.max_spacing() * frame_.norm_L_inv();
  max_radius_ = grid.domain().distance_to_boundary(x0) / frame_.norm_L();
}

FrameField::FrameField(const ObstacleSolution& sol, const CoefficientField& cf, const Vec& x0,
                       Interpolation interp)
    : FrameField(std::make_shared<const FieldSampler>(sol.grid, sol.u, interp), cf, x0) {}

double FrameField::value(const Vec& y) const {
  return std::max(0.0, sampler_->value(frame_.to_world(y)));
}

void FrameField::sample(const Vec& y, double& u, Vec& grad) const {
  Vec gx;
  sampler_->sample(frame_.to_world(y), u, gx);
  u = std::max(0.0, u);
  grad = frame_.L().transpose() * gx;
}

// ---------------------------------------------------------------------------
// Radial functionals

namespace {

void check_radius(const FrameField& ff, double r) {
  if (!(r > 0.0)) throw LabError(ErrorCode::InvalidArgument, "radius must be positive");
  if (r > ff.max_radius() * (1.0 + 1e-12)) {
    throw LabError(ErrorCode::BallOutOfDomain, "ball of radius " + std::to_string(r) +
                                                   " leaves the domain");
  }
}

QuadratureRule unit_ball_for(const FrameField& ff, double r, const QuadratureOptions& q) {
  const RuleSize rs = rule_size_for(ff.dim(), r, ff.h_eff(), q.oversample);
  return ball_rule(ff.dim(), rs.panels, rs.sphere, q.phase);
}

QuadratureRule unit_sphere_for(const FrameField& ff, double r, const QuadratureOptions& q) {
  const RuleSize rs = rule_size_for(ff.dim(), r, ff.h_eff(), q.oversample);
  return sphere_rule(ff.dim(), rs.sphere, q.phase);
}

double energy_with(const FrameField& ff, double r, const QuadratureRule& unit) {
  const Frame& fr = ff.frame();
  double sum = 0.0;
  double u = 0.0;
  Vec g;
  for (std::size_t k = 0; k < unit.size(); ++k) {
    const Vec y = r * unit.points[k];
    ff.sample(y, u, g);
    const Mat c = fr.coefficient(y);
    sum += unit.weights[k] * (g.dot(c * g) + 2.0 * fr.forcing(y) * u);
  }
  return sum * std::pow(r, ff.dim());
}

double mass_with(const FrameField& ff, double r, const QuadratureRule& unit) {
  const Frame& fr = ff.frame();
  double sum = 0.0;
  for (std::size_t k = 0; k < unit.size(); ++k) {
    const Vec y = r * unit.points[k];
    const double u = ff.value(y);
    sum += unit.weights[k] * fr.mu(y).value * u * u;
  }
  return sum * std::pow(r, ff.dim() - 1);
}

}  // namespace

double ball_energy(const FrameField& ff, double r, const QuadratureOptions& q) {
  check_radius(ff, r);
  return energy_with(ff, r, unit_ball_for(ff, r, q));
}

double sphere_weighted_mass(const FrameField& ff, double r, const QuadratureOptions& q) {
  check_radius(ff, r);
  return mass_with(ff, r, unit_sphere_for(ff, r, q));
}

double weiss_phi(const FrameField& ff, double r, const QuadratureOptions& q) {
  const int n = ff.dim();
  const double e = ball_energy(ff, r, q);
  const double h = sphere_weighted_mass(ff, r, q);
  return std::pow(r, -n - 2) * e - 2.0 * std::pow(r, -n - 3) * h;
}

double ball_energy(const ObstacleSolution& sol, const CoefficientField& cf, const Vec& x0, double r) {
  return ball_energy(FrameField(sol, cf, x0), r);
}

double sphere_weighted_mass(const ObstacleSolution& sol, const CoefficientField& cf, const Vec& x0,
                            double r) {
  return sphere_weighted_mass(FrameField(sol, cf, x0), r);
}

double weiss_phi(const ObstacleSolution& sol, const CoefficientField& cf, const Vec& x0, double r) {
  return weiss_phi(FrameField(sol, cf, x0), r);
}

double unit_ball_volume(int dim) {
  switch (dim) {
    case 1: return 2.0;
    case 2: return std::numbers::pi;
    case 3: return 4.0 * std::numbers::pi / 3.0;
    default: throw LabError(ErrorCode::InvalidArgument, "dimension must be 1, 2 or 3");
  }
}

double theta(int dim) { return unit_ball_volume(dim) / (4.0 * (dim + 2)); }

// ---------------------------------------------------------------------------
// Profiles

HomogeneousProfile HomogeneousProfile::half_space(const Vec& nu, double tol) {
  const int n = static_cast<int>(nu.size());
  if (n < 1 || n > kMaxDim) throw LabError(ErrorCode::InvalidArgument, "bad profile dimension");
  if (std::abs(nu.norm() - 1.0) > tol) {
    throw LabError(ErrorCode::InvalidArgument, "half-space direction must be a unit vector");
  }
  return HomogeneousProfile(Kind::HalfSpace, nu.normalized(), Mat::Zero(n, n));
}

HomogeneousProfile HomogeneousProfile::polynomial(const Mat& b, double tol) {
  const int n = static_cast<int>(b.rows());
  if (n < 1 || n > kMaxDim || b.cols() != n) {
    throw LabError(ErrorCode::InvalidArgument, "profile matrix must be square of size 1..3");
  }
  if ((b - b.transpose()).cwiseAbs().maxCoeff() > tol) {
    throw LabError(ErrorCode::InvalidArgument, "profile matrix must be symmetric");
  }
  const Mat sym = 0.5 * (b + b.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(sym);
  if (es.eigenvalues().minCoeff() < -tol) {
    throw LabError(ErrorCode::InvalidArgument, "profile matrix must be positive semidefinite");
  }
  if (std::abs(sym.trace() - 0.5) > tol) {
    throw LabError(ErrorCode::InvalidArgument, "profile matrix must have trace 1/2");
  }
  return HomogeneousProfile(Kind::Polynomial, Vec::Zero(n), sym);
}

double HomogeneousProfile::value(const Vec& y) const {
  if (kind_ == Kind::HalfSpace) {
    const double t = std::max(0.0, y.dot(nu_));
    return 0.5 * t * t;
  }
  return y.dot(b_ * y);
}

Vec HomogeneousProfile::gradient(const Vec& y) const {
  if (kind_ == Kind::HalfSpace) return std::max(0.0, y.dot(nu_)) * nu_;
  return 2.0 * b_ * y;
}

double HomogeneousProfile::psi_one() const {
  const int n = dim();
  // int_{B1} y_k^2 = |B1| / (n + 2)
  const double second_moment = unit_ball_volume(n) / (n + 2);
  if (kind_ == Kind::HalfSpace) return 0.25 * second_moment;
  return b_.trace() * second_moment;
}

double PsiResult::difference() const { return std::abs(defining - mass); }

namespace {

// Rule on the unit ball (and sphere) in coordinates whose last axis is the
// profile direction, split so that the half-space kink is a panel edge.
struct AlignedRule {
  QuadratureRule ball;
  QuadratureRule sphere;
};

AlignedRule aligned_rule(int n, const Mat& basis, int order) {
  AlignedRule out;
  out.ball.dim = out.sphere.dim = n;
  const GaussLegendre gl = gauss_legendre(order);
  auto split = [&](double a, double b, std::vector<double>& x, std::vector<double>& w) {
    for (int i = 0; i < order; ++i) {
      x.push_back(0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[i]);
      w.push_back(0.5 * (b - a) * gl.weights[i]);
    }
  };
  std::vector<double> sx, sw;  // sphere parameter and weight
  std::vector<Vec> dirs;
  if (n == 1) {
    Vec a(1), b(1);
    a << -1.0;
    b << 1.0;
    dirs = {a, b};
    sw = {1.0, 1.0};
  } else if (n == 2) {
    split(0.0, std::numbers::pi, sx, sw);
    split(std::numbers::pi, 2.0 * std::numbers::pi, sx, sw);
    for (double t : sx) {
      Vec d(2);
      d << std::cos(t), std::sin(t);
      dirs.push_back(d);
    }
  } else {
    std::vector<double> zx, zw;
    split(-1.0, 0.0, zx, zw);
    split(0.0, 1.0, zx, zw);
    const int m = 2 * order;
    const double dphi = 2.0 * std::numbers::pi / m;
    for (std::size_t a = 0; a < zx.size(); ++a) {
      const double s = std::sqrt(std::max(0.0, 1.0 - zx[a] * zx[a]));
      for (int i = 0; i < m; ++i) {
        Vec d(3);
        d << s * std::cos(i * dphi), s * std::sin(i * dphi), zx[a];
        dirs.push_back(d);
        sw.push_back(zw[a] * dphi);
      }
    }
  }
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    out.sphere.points.push_back(basis * dirs[k]);
    out.sphere.weights.push_back(sw[k]);
  }
  std::vector<double> rx, rw;
  split(0.0, 1.0, rx, rw);
  for (std::size_t a = 0; a < rx.size(); ++a) {
    const double jac = std::pow(rx[a], n - 1) * rw[a];
    for (std::size_t k = 0; k < out.sphere.size(); ++k) {
      out.ball.points.push_back(rx[a] * out.sphere.points[k]);
      out.ball.weights.push_back(jac * out.sphere.weights[k]);
    }
  }
  return out;
}

}  // namespace

PsiResult psi(const HomogeneousProfile& profile, int order) {
  const int n = profile.dim();
  const Mat basis = profile.kind() == HomogeneousProfile::Kind::HalfSpace
                        ? frame_with_axis(profile.direction())
                        : Mat(Mat::Identity(n, n));
  const AlignedRule rule = aligned_rule(n, basis, order);
  PsiResult res;
  double bulk = 0.0;
  double mass = 0.0;
  for (std::size_t k = 0; k < rule.ball.size(); ++k) {
    const Vec& y = rule.ball.points[k];
    const double v = profile.value(y);
    bulk += rule.ball.weights[k] * (profile.gradient(y).squaredNorm() + 2.0 * v);
    mass += rule.ball.weights[k] * v;
  }
  double boundary = 0.0;
  for (std::size_t k = 0; k < rule.sphere.size(); ++k) {
    const double v = profile.value(rule.sphere.points[k]);
    boundary += rule.sphere.weights[k] * v * v;
  }
  res.defining = bulk - 2.0 * boundary;
  res.mass = mass;
  res.closed_form = profile.psi_one();
  return res;
}

// ---------------------------------------------------------------------------
// Traces and drift fits

std::vector<double> radius_ladder(double r_max, double r_min) {
  if (!(r_max > 0.0) || !(r_min > 0.0)) {
    throw LabError(ErrorCode::InvalidArgument, "ladder radii must be positive");
  }
  std::vector<double> out;
  for (int k = 0;; ++k) {
    const double r = r_max * std::exp2(-k / 4.0);
    if (r < r_min * (1.0 - 1e-12)) break;
    out.push_back(r);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

MonotonicityTrace weiss_trace(const FrameField& ff, const std::vector<double>& radii,
                              const QuadratureOptions& q) {
  for (std::size_t k = 1; k < radii.size(); ++k) {
    if (!(radii[k] > radii[k - 1])) {
      throw LabError(ErrorCode::InvalidArgument, "radii must be strictly increasing");
    }
  }
  MonotonicityTrace t;
  t.base = ff.base();
  t.L = ff.frame().L();
  t.dim = ff.dim();
  t.h_eff = ff.h_eff();
  t.radii = radii;
  const int n = ff.dim();
  for (double r : radii) {
    const double e = ball_energy(ff, r, q);
    const double h = sphere_weighted_mass(ff, r, q);
    t.energy.push_back(e);
    t.mass.push_back(h);
    t.phi.push_back(std::pow(r, -n - 2) * e - 2.0 * std::pow(r, -n - 3) * h);
  }
  return t;
}

namespace {

// int_a^b e^{c t} t^{p} dt, smooth on [a, b] for a > 0.
double weighted_integral(double a, double b, double c, double p) {
  static const GaussLegendre gl = gauss_legendre(16);
  double s = 0.0;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    const double t = 0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[i];
    s += gl.weights[i] * std::exp(c * t) * std::pow(t, p);
  }
  return 0.5 * (b - a) * s;
}

double min_c4(const std::vector<double>& r, const std::vector<double>& phi,
              const std::vector<double>& tol, double alpha, double c3) {
  double c4 = 0.0;
  for (std::size_t k = 0; k + 1 < r.size(); ++k) {
    const double dg = std::exp(c3 * r[k + 1]) * phi[k + 1] - std::exp(c3 * r[k]) * phi[k];
    const double di = weighted_integral(r[k], r[k + 1], c3, alpha - 1.0);
    c4 = std::max(c4, (-dg - std::exp(c3 * r[k]) * tol[k]) / di);
  }
  return c4;
}

}  // namespace

DriftVerdict fit_weiss_constants(const std::vector<double>& radii, const std::vector<double>& phi,
                                 const std::vector<double>& tolerance, double alpha) {
  if (radii.size() != phi.size() || radii.size() != tolerance.size() || radii.size() < 2) {
    throw LabError(ErrorCode::InvalidArgument, "trace arrays must match and hold two radii");
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw LabError(ErrorCode::InvalidArgument, "alpha must lie in (0, 1]");
  }
  // C3 candidates: zero, then log-spaced on [1e-3, 1e3].
  std::vector<double> grid{0.0};
  for (int i = 0; i <= 120; ++i) grid.push_back(std::pow(10.0, -3.0 + 6.0 * i / 120.0));
  auto objective = [&](double c3) { return c3 + min_c4(radii, phi, tolerance, alpha, c3); };

  std::size_t best = 0;
  double best_obj = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double c4 = min_c4(radii, phi, tolerance, alpha, grid[i]);
    if (c4 > kDriftCap) continue;
    if (grid[i] + c4 < best_obj) {
      best_obj = grid[i] + c4;
      best = i;
    }
  }
  DriftVerdict v;
  if (!std::isfinite(best_obj)) return v;

  double c3 = grid[best];
  if (best_obj > 0.0) {
    // Golden-section refinement between the neighbouring grid values.
    double a = best == 0 ? 0.0 : grid[best - 1];
    double b = best + 1 < grid.size() ? grid[best + 1] : grid[best];
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - g * (b - a);
    double x2 = a + g * (b - a);
    double f1 = objective(x1);
    double f2 = objective(x2);
    for (int it = 0; it < 60 && b - a > 1e-12 * (1.0 + b); ++it) {
      if (f1 <= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - g * (b - a);
        f1 = objective(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + g * (b - a);
        f2 = objective(x2);
      }
    }
    const double xm = f1 <= f2 ? x1 : x2;
    const double fm = std::min(f1, f2);
    if (fm < best_obj && min_c4(radii, phi, tolerance, alpha, xm) <= kDriftCap) c3 = xm;
  }
  v.finite = true;
  v.c3 = c3;
  v.c4 = min_c4(radii, phi, tolerance, alpha, c3);

  double integral = weighted_integral(1e-300, radii[0], c3, alpha - 1.0);
  if (!std::isfinite(integral)) integral = 0.0;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (k > 0) integral += weighted_integral(radii[k - 1], radii[k], c3, alpha - 1.0);
    v.compensated.push_back(std::exp(c3 * radii[k]) * phi[k] + v.c4 * integral);
  }
  for (std::size_t k = 0; k + 1 < radii.size(); ++k) {
    const double d = v.compensated[k + 1] - v.compensated[k];
    if (d < 0.0) {
      const double rounding = 1e-12 * (std::abs(v.compensated[k]) + std::abs(v.compensated[k + 1]));
      const double excess = -d - std::exp(c3 * radii[k]) * tolerance[k] - rounding;
      if (excess > 0.0) {
        v.residual_violation = std::max(v.residual_violation, excess);
      } else {
        ++v.ignored_violations;
      }
    }
  }
  return v;
}

DriftVerdict weiss_drift_test(const MonotonicityTrace& trace, double alpha) {
  if (trace.radii.size() < 8) {
    throw LabError(ErrorCode::InvalidArgument, "Weiss drift test needs at least 8 radii");
  }
  std::vector<double> tol(trace.radii.size());
  for (std::size_t k = 0; k < tol.size(); ++k) {
    const double q = trace.h_eff / trace.radii[k];
    tol[k] = q * q * std::abs(trace.phi[k]);
  }
  DriftVerdict v = fit_weiss_constants(trace.radii, trace.phi, tol, alpha);
  if (!v.finite) {
    throw LabError(ErrorCode::NoFiniteConstants,
                   "Weiss energy is not monotone with drift constants below the cap");
  }
  return v;
}

double monneau_value(const FrameField& ff, const HomogeneousProfile& profile, double r,
                     const QuadratureOptions& q) {
  check_radius(ff, r);
  const QuadratureRule s = unit_sphere_for(ff, r, q);
  const double inv = 1.0 / (r * r);
  double sum = 0.0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double d = ff.value(r * s.points[k]) * inv - profile.value(s.points[k]);
    sum += s.weights[k] * d * d;
  }
  return sum;
}

DriftVerdict monneau_test(const FrameField& ff, const HomogeneousProfile& profile,
                          MonotonicityTrace& trace, double alpha, const MonneauOptions& opts) {
  if (profile.kind() != HomogeneousProfile::Kind::Polynomial) {
    throw LabError(ErrorCode::NotSingularPoint, "Monneau test needs a polynomial blow-up");
  }
  if (trace.radii.size() < 2) {
    throw LabError(ErrorCode::InvalidArgument, "Monneau test needs at least two radii");
  }
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw LabError(ErrorCode::InvalidArgument, "alpha must lie in (0, 1]");
  }
  const auto& r = trace.radii;
  const std::size_t m = r.size();
  trace.monneau.assign(m, 0.0);
  for (std::size_t k = 0; k < m; ++k) trace.monneau[k] = monneau_value(ff, profile, r[k], opts.quadrature);

  std::vector<double> val(m);
  for (std::size_t k = 0; k < m; ++k) {
    val[k] = opts.exponential_variant ? std::exp(r[k]) * trace.monneau[k] : trace.monneau[k];
  }
  std::vector<double> inc(m - 1), tol(m - 1);
  for (std::size_t k = 0; k + 1 < m; ++k) {
    if (opts.exponential_variant) {
      inc[k] = weighted_integral(r[k], r[k + 1], 1.0, alpha - 1.0) +
               weighted_integral(r[k], r[k + 1], 1.0, 0.0);
    } else {
      inc[k] = (r[k + 1] - r[k]) + (std::pow(r[k + 1], alpha) - std::pow(r[k], alpha));
    }
    const double q = trace.h_eff / r[k];
    tol[k] = q * q * std::max(std::abs(val[k]), std::abs(val[k + 1]));
  }
  DriftVerdict v;
  double c5 = 0.0;
  for (std::size_t k = 0; k + 1 < m; ++k) c5 = std::max(c5, (val[k] - val[k + 1] - tol[k]) / inc[k]);
  v.finite = c5 <= kDriftCap;
  v.c5 = c5;
  double acc = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    if (k > 0) acc += inc[k - 1];
    v.compensated.push_back(val[k] + c5 * acc);
  }
  for (std::size_t k = 0; k + 1 < m; ++k) {
    const double d = v.compensated[k + 1] - v.compensated[k];
    if (d < 0.0) {
      const double rounding = 1e-12 * (std::abs(v.compensated[k]) + std::abs(v.compensated[k + 1]));
      if (-d > tol[k] + rounding) {
        v.residual_violation = std::max(v.residual_violation, -d - tol[k] - rounding);
      } else {
        ++v.ignored_violations;
      }
    }
  }
  // dM/dr >= 2 (Phi - Psi_v(1)) / r - C5 alpha r^{alpha-1}, checked between rungs.
  if (trace.phi.size() == m) {
    const double psi1 = profile.psi_one();
    for (std::size_t k = 0; k + 1 < m; ++k) {
      const double rm = std::sqrt(r[k] * r[k + 1]);
      const double dm = (trace.monneau[k + 1] - trace.monneau[k]) / (r[k + 1] - r[k]);
      const double phim = 0.5 * (trace.phi[k] + trace.phi[k + 1]);
      const double rhs = 2.0 * (phim - psi1) / rm - c5 * alpha * std::pow(rm, alpha - 1.0);
      v.derivative_violation = std::max(v.derivative_violation, rm * std::max(0.0, rhs - dm));
    }
  }
  return v;
}

// ---------------------------------------------------------------------------
// Payne-Weinberger identity

double PwResult::residual() const { return std::abs(lhs - rhs); }

namespace {

Vec fd_gradient(const ScalarFn& w, const Vec& x, double h) {
  const int n = static_cast<int>(x.size());
  Vec g(n);
  for (int k = 0; k < n; ++k) {
    Vec a = x, b = x;
    a[k] += h;
    b[k] -= h;
    g[k] = (w(a) - w(b)) / (2.0 * h);
  }
  return g;
}

}  // namespace

PwResult payne_weinberger_check(int dim, const MatrixFn& a, const ScalarFn& w, const VectorFn& f,
                                double r, double h) {
  if (!(r > 0.0) || !(h > 0.0)) {
    throw LabError(ErrorCode::InvalidArgument, "radius and step must be positive");
  }
  const int n = dim;
  const int sphere_res = n == 2 ? 512 : 64;
  const QuadratureRule sphere = sphere_rule(n, sphere_res);
  const QuadratureRule ball = ball_rule(n, 96, sphere_res);
  PwResult res;
  for (std::size_t k = 0; k < sphere.size(); ++k) {
    const Vec nu = sphere.points[k];
    const Vec x = r * nu;
    const Vec gw = fd_gradient(w, x, h);
    const Mat ax = a(x);
    const Vec fx = f(x);
    const double term = gw.dot(ax * gw) * fx.dot(nu) - 2.0 * (ax * nu).dot(gw) * fx.dot(gw);
    res.lhs += sphere.weights[k] * term;
  }
  res.lhs *= std::pow(r, n - 1);

  for (std::size_t k = 0; k < ball.size(); ++k) {
    const Vec x = r * ball.points[k];
    const Vec gw = fd_gradient(w, x, h);
    const Mat ax = a(x);
    const Vec fx = f(x);
    double div_flux = 0.0;
    double div_f = 0.0;
    Mat df(n, n);  // df(i, k) = d_i F_k
    std::array<Mat, 3> da;
    for (int i = 0; i < n; ++i) {
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const Mat ap = a(xp);
      const Mat am = a(xm);
      div_flux += ((ap * fd_gradient(w, xp, h))[i] - (am * fd_gradient(w, xm, h))[i]) / (2.0 * h);
      const Vec fp = f(xp);
      const Vec fm = f(xm);
      df.row(i) = ((fp - fm) / (2.0 * h)).transpose();
      div_f += (fp[i] - fm[i]) / (2.0 * h);
      da[i] = (ap - am) / (2.0 * h);
    }
    double grad_a = 0.0;  // d_k a_ij F_k w_i w_j
    for (int kk = 0; kk < n; ++kk) grad_a += fx[kk] * gw.dot(da[kk] * gw);
    const Vec flux = ax * gw;
    const double term = gw.dot(flux) * div_f - 2.0 * fx.dot(gw) * div_flux + grad_a -
                        2.0 * flux.dot(df * gw);
    res.rhs += ball.weights[k] * term;
  }
  res.rhs *= std::pow(r, n);
  return res;
}

// ---------------------------------------------------------------------------
// Derivative identities

DerivativeReport derivative_identities_check(const MonotonicityTrace& trace, const FrameField& ff,
                                             const QuadratureOptions& q) {
  if (trace.radii.size() < 16) {
    throw LabError(ErrorCode::InvalidArgument, "derivative check needs at least 16 radii");
  }
  const int n = ff.dim();
  const Frame& fr = ff.frame();
  const double delta = 1e-2;
  // G(y) = C(y) y / mu(y); the explicit terms use G / r.
  auto field_g = [&](const Vec& y) -> Vec {
    const MuSample mu = fr.mu(y);
    return fr.coefficient(y) * y / mu.value;
  };
  DerivativeReport rep;
  rep.radii = trace.radii;
  for (double r : trace.radii) {
    check_radius(ff, r * (1.0 + delta));
    const QuadratureRule ball = unit_ball_for(ff, r, q);
    const QuadratureRule sphere = unit_sphere_for(ff, r, q);
    const double e0 = energy_with(ff, r, ball);
    const double h0 = mass_with(ff, r, sphere);
    const double de = (energy_with(ff, r * (1 + delta), ball) - energy_with(ff, r * (1 - delta), ball)) /
                      (2.0 * r * delta);
    const double dh = (mass_with(ff, r * (1 + delta), sphere) - mass_with(ff, r * (1 - delta), sphere)) /
                      (2.0 * r * delta);

    double t1 = 0.0, t5 = 0.0, hflux = 0.0;
    double u = 0.0;
    Vec g;
    for (std::size_t k = 0; k < sphere.size(); ++k) {
      const Vec nu = sphere.points[k];
      const Vec y = r * nu;
      ff.sample(y, u, g);
      const Mat c = fr.coefficient(y);
      const double cn = (c * nu).dot(g);
      t1 += sphere.weights[k] * cn * cn / fr.mu(y).value;
      t5 += sphere.weights[k] * fr.forcing(y) * u;
      hflux += sphere.weights[k] * u * cn;
    }
    const double sr = std::pow(r, n - 1);
    t1 *= 2.0 * sr;
    t5 *= 2.0 * sr;
    hflux *= 2.0 * sr;

    double t2 = 0.0, t3 = 0.0, t4 = 0.0;
    const double step = 1e-5 * r;
    for (std::size_t k = 0; k < ball.size(); ++k) {
      const Vec y = r * ball.points[k];
      ff.sample(y, u, g);
      const Mat c = fr.coefficient(y);
      const Vec flux = c * g;
      Mat dg(n, n);  // dg(i, k) = d_i G_k
      double div_g = 0.0;
      for (int i = 0; i < n; ++i) {
        Vec yp = y, ym = y;
        yp[i] += step;
        ym[i] -= step;
        const Vec d = (field_g(yp) - field_g(ym)) / (2.0 * step);
        dg.row(i) = d.transpose();
        div_g += d[i];
      }
      const double w = ball.weights[k];
      t2 += w * g.dot(flux) * div_g;
      t3 += w * fr.forcing(y) * field_g(y).dot(g);
      t4 += w * flux.dot(dg * g);
    }
    const double br = std::pow(r, n);
    t2 *= br / r;
    t3 *= -2.0 * br / r;
    t4 *= -2.0 * br / r;

    const double e_def = de - (t1 + t2 + t3 + t4 + t5);
    const double h_def = dh - (n - 1) * h0 / r - hflux;
    rep.energy_defect.push_back(e_def);
    rep.mass_defect.push_back(h_def);
    if (e0 > 0.0) rep.c1 = std::max(rep.c1, std::abs(e_def) / e0);
    if (h0 > 0.0) rep.c2 = std::max(rep.c2, std::abs(h_def) / h0);
  }
  return rep;
}

}  // namespace obstacle
