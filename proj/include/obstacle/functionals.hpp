#pragma once

#include "obstacle/field_model.hpp"
#include "obstacle/grid_field.hpp"
#include "obstacle/obstacle_solver.hpp"
#include "obstacle/quadrature.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace obstacle {

using VectorFn = std::function<Vec(const Vec&)>;

/// A solution seen from the normalized frame of a base point:
/// u_L(y) = u(x0 + L y), with derivatives taken in y.
class FrameField {
 public:
  FrameField(std::shared_ptr<const FieldSampler> sampler, const CoefficientField& cf,
             const Vec& x0);
  FrameField(const ObstacleSolution& sol, const CoefficientField& cf, const Vec& x0,
             Interpolation interp = Interpolation::Quadratic);

  int dim() const { return frame_.dim(); }
  const Frame& frame() const { return frame_; }
  const FieldSampler& sampler() const { return *sampler_; }
  std::shared_ptr<const FieldSampler> sampler_ptr() const { return sampler_; }
  const Vec& base() const { return frame_.base(); }

  /// Grid spacing measured in frame coordinates.
  double h_eff() const { return h_eff_; }
  /// Largest frame radius whose ball stays inside the domain.
  double max_radius() const { return max_radius_; }

  /// u_L(y), clamped at zero.
  double value(const Vec& y) const;
  /// u_L(y) and its frame gradient.
  void sample(const Vec& y, double& u, Vec& grad) const;

 private:
  std::shared_ptr<const FieldSampler> sampler_;
  Frame frame_;
  double h_eff_ = 0.0;
  double max_radius_ = 0.0;
};

/// Quadrature controls shared by the radial functionals.
struct QuadratureOptions {
  double oversample = 1.0;
  double phase = 0.0;  // azimuthal phase in units of one node spacing
};

/// E(r): energy of u_L over the frame ball B_r with the frame coefficients.
double ball_energy(const FrameField& ff, double r, const QuadratureOptions& q = {});
/// H(r): integral of mu u_L^2 over the frame sphere of radius r.
double sphere_weighted_mass(const FrameField& ff, double r, const QuadratureOptions& q = {});
/// Weiss energy r^{-n-2} E(r) - 2 r^{-n-3} H(r).
double weiss_phi(const FrameField& ff, double r, const QuadratureOptions& q = {});

double ball_energy(const ObstacleSolution& sol, const CoefficientField& cf, const Vec& x0, double r);
double sphere_weighted_mass(const ObstacleSolution& sol, const CoefficientField& cf, const Vec& x0,
                            double r);
double weiss_phi(const ObstacleSolution& sol, const CoefficientField& cf, const Vec& x0, double r);

/// Energy of the half-space solution in dimension n: |B_1| / (4 (n + 2)).
double theta(int dim);
double unit_ball_volume(int dim);

/// 2-homogeneous global solution: half-space 1/2 (<y,nu>^+)^2 or
/// polynomial <B y, y> with B symmetric, positive semidefinite, trace 1/2.
class HomogeneousProfile {
 public:
  enum class Kind { HalfSpace, Polynomial };

  static HomogeneousProfile half_space(const Vec& nu, double tol = 1e-9);
  static HomogeneousProfile polynomial(const Mat& b, double tol = 1e-9);

  Kind kind() const { return kind_; }
  int dim() const { return static_cast<int>(nu_.size()); }
  const Vec& direction() const { return nu_; }
  const Mat& matrix() const { return b_; }

  double value(const Vec& y) const;
  Vec gradient(const Vec& y) const;
  /// Psi_v(1) = integral of v over the unit ball, in closed form.
  double psi_one() const;

 private:
  HomogeneousProfile(Kind kind, Vec nu, Mat b) : kind_(kind), nu_(std::move(nu)), b_(std::move(b)) {}
  Kind kind_;
  Vec nu_;  // zero for polynomials
  Mat b_;   // zero for half-space profiles
};

struct PsiResult {
  double defining = 0.0;  // int_B1 |grad v|^2 + 2 v - 2 int_dB1 v^2
  double mass = 0.0;      // int_B1 v by quadrature
  double closed_form = 0.0;
  double difference() const;
};

/// Psi evaluated with a rule aligned to the profile (no kink inside a cell).
PsiResult psi(const HomogeneousProfile& profile, int order = 48);

/// Sampled radial functionals at one base point.
struct MonotonicityTrace {
  Vec base;
  Mat L;
  int dim = 0;
  double h_eff = 0.0;
  std::vector<double> radii;  // strictly increasing
  std::vector<double> energy;
  std::vector<double> mass;
  std::vector<double> phi;
  std::vector<double> monneau;  // empty unless computed
};

/// Geometric ladder r_k = r_max 2^{-k/4} reaching down to r_min, returned in
/// increasing order.
std::vector<double> radius_ladder(double r_max, double r_min);

MonotonicityTrace weiss_trace(const FrameField& ff, const std::vector<double>& radii,
                              const QuadratureOptions& q = {});

struct DriftVerdict {
  bool finite = false;
  double c3 = 0.0;
  double c4 = 0.0;
  double c5 = 0.0;
  double residual_violation = 0.0;  // largest violation left after compensation, net of tolerance
  int ignored_violations = 0;       // raw decreases absorbed by the quadrature tolerance
  std::vector<double> compensated;  // compensated quantity per radius
  // Monneau only: largest r-weighted violation of the derivative inequality.
  double derivative_violation = 0.0;
};

inline constexpr double kDriftCap = 1e3;

/// Smallest C3 + C4 (C3, C4 >= 0) making e^{C3 r} Phi(r) + C4 int_0^r e^{C3 t} t^{alpha-1} dt
/// nondecreasing over the sampled radii, violations below (h/r)^2 |Phi(r)| ignored.
DriftVerdict weiss_drift_test(const MonotonicityTrace& trace, double alpha);

/// Raw fitter behind weiss_drift_test for an arbitrary sampled function.
DriftVerdict fit_weiss_constants(const std::vector<double>& radii, const std::vector<double>& phi,
                                 const std::vector<double>& tolerance, double alpha);

struct MonneauOptions {
  bool exponential_variant = false;  // e^r M(r) + zeta(r), zeta' = C5 e^r (r^{alpha-1} + 1)
  QuadratureOptions quadrature;
};

/// M(r) = int_{dB1} (u_{L,r} - v)^2 and the minimal C5 making
/// M(r) + C5 (r + r^alpha) nondecreasing. Throws NotSingularPoint for
/// half-space profiles.
DriftVerdict monneau_test(const FrameField& ff, const HomogeneousProfile& profile,
                          MonotonicityTrace& trace, double alpha, const MonneauOptions& opts = {});

double monneau_value(const FrameField& ff, const HomogeneousProfile& profile, double r,
                     const QuadratureOptions& q = {});

struct PwResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double residual() const;
};

/// Both sides of the Rellich-type identity
///   int_dBr <A grad w, grad w> <F, nu> - 2 <A nu, grad w> <F, grad w>
///   = int_Br <A grad w, grad w> div F - 2 <F, grad w> div(A grad w)
///          + d_k a_ij F_k w_i w_j - 2 (A grad w)_i d_i F_k w_k
/// on the ball of radius r about the origin. Derivatives are central
/// differences with step h; the quadratures are fixed and fine.
PwResult payne_weinberger_check(int dim, const MatrixFn& a, const ScalarFn& w, const VectorFn& f,
                                double r, double h);

struct DerivativeReport {
  std::vector<double> radii;
  std::vector<double> energy_defect;  // E'(r) - explicit terms
  std::vector<double> mass_defect;    // H'(r) - (n-1) H / r - 2 int u <C nu, grad u>
  double c1 = 0.0;                    // max |energy_defect| / E
  double c2 = 0.0;                    // max |mass_defect| / H
};

/// Finite-difference check of the radial derivative formulas for E and H.
DerivativeReport derivative_identities_check(const MonotonicityTrace& trace, const FrameField& ff,
                                             const QuadratureOptions& q = {});

}  // namespace obstacle
