#include "obstacle/field_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace obstacle {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonSymmetric: return "NonSymmetric";
    case ErrorCode::EllipticityViolation: return "EllipticityViolation";
    case ErrorCode::ForcingBelowC0: return "ForcingBelowC0";
    case ErrorCode::OriginEvaluation: return "OriginEvaluation";
    case ErrorCode::SquareRootFailure: return "SquareRootFailure";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::MaxIterExceeded: return "MaxIterExceeded";
    case ErrorCode::InfeasibleBoundary: return "InfeasibleBoundary";
    case ErrorCode::EmptyInterior: return "EmptyInterior";
    case ErrorCode::RadiusOutOfDomain: return "RadiusOutOfDomain";
    case ErrorCode::BallOutOfDomain: return "BallOutOfDomain";
    case ErrorCode::NoFiniteConstants: return "NoFiniteConstants";
    case ErrorCode::NotSingularPoint: return "NotSingularPoint";
    case ErrorCode::FrameOverflow: return "FrameOverflow";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::AmbiguousProfile: return "AmbiguousProfile";
    case ErrorCode::InsufficientDecay: return "InsufficientDecay";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// Domain

Domain::Domain(int dim, const std::array<double, 3>& lower, const std::array<double, 3>& upper,
               std::string tag)
    : dim_(dim), lower_(lower), upper_(upper), tag_(std::move(tag)) {
  if (dim < 1 || dim > kMaxDim) {
    throw LabError(ErrorCode::InvalidArgument, "domain dimension must be 1, 2 or 3");
  }
  for (int k = 0; k < dim; ++k) {
    if (!(upper_[k] > lower_[k])) {
      throw LabError(ErrorCode::InvalidArgument, "domain interval has non-positive length");
    }
  }
  for (int k = dim; k < kMaxDim; ++k) {
    lower_[k] = 0.0;
    upper_[k] = 0.0;
  }
}

Domain Domain::centered(int dim, double half_width, std::string tag) {
  std::array<double, 3> lo{-half_width, -half_width, -half_width};
  std::array<double, 3> hi{half_width, half_width, half_width};
  return Domain(dim, lo, hi, std::move(tag));
}

bool Domain::contains(const Vec& x, double slack) const {
  for (int k = 0; k < dim_; ++k) {
    if (x[k] < lower_[k] - slack || x[k] > upper_[k] + slack) return false;
  }
  return true;
}

double Domain::distance_to_boundary(const Vec& x) const {
  double d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < dim_; ++k) {
    d = std::min({d, x[k] - lower_[k], upper_[k] - x[k]});
  }
  return d;
}

double Domain::max_radius() const {
  double s = 0.0;
  for (int k = 0; k < dim_; ++k) {
    const double m = std::max(std::abs(lower_[k]), std::abs(upper_[k]));
    s += m * m;
  }
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Grid

Grid::Grid(Domain domain, const std::array<int, 3>& nodes) : domain_(std::move(domain)) {
  const int n = domain_.dim();
  size_ = 1;
  for (int k = 0; k < kMaxDim; ++k) {
    if (k < n) {
      if (nodes[k] < 3) {
        throw LabError(ErrorCode::GridTooCoarse, "a grid needs at least 3 nodes per axis");
      }
      nodes_[k] = nodes[k];
      spacing_[k] = (domain_.upper(k) - domain_.lower(k)) / (nodes[k] - 1);
    } else {
      nodes_[k] = 1;
      spacing_[k] = 1.0;
    }
    stride_[k] = size_;
    size_ *= static_cast<std::size_t>(nodes_[k]);
  }
}

Grid Grid::with_resolution(const Domain& domain, int resolution) {
  if (resolution <= 0) {
    throw LabError(ErrorCode::InvalidArgument, "resolution must be positive");
  }
  std::array<int, 3> nodes{1, 1, 1};
  for (int k = 0; k < domain.dim(); ++k) {
    const double cells = (domain.upper(k) - domain.lower(k)) * resolution;
    const double rounded = std::round(cells);
    if (std::abs(cells - rounded) > 1e-9 * std::max(1.0, cells)) {
      throw LabError(ErrorCode::InvalidArgument,
                     "box length is not a multiple of the requested spacing");
    }
    nodes[k] = static_cast<int>(rounded) + 1;
  }
  return Grid(domain, nodes);
}

double Grid::max_spacing() const {
  double h = 0.0;
  for (int k = 0; k < dim(); ++k) h = std::max(h, spacing_[k]);
  return h;
}

double Grid::min_spacing() const {
  double h = std::numeric_limits<double>::infinity();
  for (int k = 0; k < dim(); ++k) h = std::min(h, spacing_[k]);
  return h;
}

std::array<int, 3> Grid::multi_index(std::size_t linear) const {
  std::array<int, 3> idx{0, 0, 0};
  for (int k = 0; k < dim(); ++k) {
    idx[k] = static_cast<int>(linear % nodes_[k]);
    linear /= nodes_[k];
  }
  return idx;
}

std::size_t Grid::linear_index(const std::array<int, 3>& idx) const {
  std::size_t lin = 0;
  for (int k = 0; k < dim(); ++k) lin += static_cast<std::size_t>(idx[k]) * stride_[k];
  return lin;
}

Vec Grid::point(std::size_t linear) const { return point(multi_index(linear)); }

Vec Grid::point(const std::array<int, 3>& idx) const {
  Vec x(dim());
  for (int k = 0; k < dim(); ++k) x[k] = coordinate(k, idx[k]);
  return x;
}

bool Grid::is_boundary(std::size_t linear) const { return is_boundary(multi_index(linear)); }

bool Grid::is_boundary(const std::array<int, 3>& idx) const {
  for (int k = 0; k < dim(); ++k) {
    if (idx[k] == 0 || idx[k] == nodes_[k] - 1) return true;
  }
  return false;
}

double Grid::cell_volume() const {
  double v = 1.0;
  for (int k = 0; k < dim(); ++k) v *= spacing_[k];
  return v;
}

double Grid::node_weight(std::size_t linear) const {
  const auto idx = multi_index(linear);
  double w = cell_volume();
  for (int k = 0; k < dim(); ++k) {
    if (idx[k] == 0 || idx[k] == nodes_[k] - 1) w *= 0.5;
  }
  return w;
}

// ---------------------------------------------------------------------------
// Validation

ValidationReport validate_field(const CoefficientField& cf, const Grid& grid, bool strict) {
  if (cf.dim != grid.dim()) {
    throw LabError(ErrorCode::InvalidArgument, "coefficient field and grid dimensions differ");
  }
  const int n = grid.dim();
  const std::size_t size = grid.size();
  ValidationReport rep;
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  rep.max_eigenvalue = -std::numeric_limits<double>::infinity();
  rep.min_f = std::numeric_limits<double>::infinity();
  rep.min_g = std::numeric_limits<double>::infinity();

  std::vector<Mat> a_nodes(size);
  std::vector<double> f_nodes(size);
  for (std::size_t i = 0; i < size; ++i) {
    const Vec x = grid.point(i);
    const Mat a = cf.A(x);
    a_nodes[i] = a;
    f_nodes[i] = cf.f(x);
    const double scale = 1.0 + a.cwiseAbs().maxCoeff();
    rep.symmetry_defect = std::max(rep.symmetry_defect, (a - a.transpose()).cwiseAbs().maxCoeff() / scale);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
    rep.min_eigenvalue = std::min(rep.min_eigenvalue, es.eigenvalues().minCoeff());
    rep.max_eigenvalue = std::max(rep.max_eigenvalue, es.eigenvalues().maxCoeff());
    rep.min_f = std::min(rep.min_f, f_nodes[i]);
    if (grid.is_boundary(i) && cf.g) rep.min_g = std::min(rep.min_g, cf.g(x));
  }
  if (!std::isfinite(rep.min_g)) rep.min_g = 0.0;

  // Difference quotients over stencil-adjacent node pairs.
  for (std::size_t i = 0; i < size; ++i) {
    const auto idx = grid.multi_index(i);
    for (int k = 0; k < n; ++k) {
      if (idx[k] + 1 >= grid.nodes(k)) continue;
      const std::size_t j = i + grid.stride(k);
      const double h = grid.spacing(k);
      rep.lip_a = std::max(rep.lip_a, (a_nodes[j] - a_nodes[i]).norm() / h);
      rep.holder_f = std::max(rep.holder_f, std::abs(f_nodes[j] - f_nodes[i]) / std::pow(h, cf.alpha));
    }
  }

  rep.ellipticity = std::max(rep.max_eigenvalue, rep.min_eigenvalue > 0.0
                                                     ? 1.0 / rep.min_eigenvalue
                                                     : std::numeric_limits<double>::infinity());
  const double tol = 1e-10;
  auto flag = [&](ErrorCode code, const std::string& what) {
    rep.violations.push_back(code);
    if (strict) throw LabError(code, what);
  };
  if (rep.symmetry_defect > tol) {
    flag(ErrorCode::NonSymmetric, "A(x) is not symmetric at some node");
  }
  if (rep.min_eigenvalue < 1.0 / cf.lambda - tol || rep.max_eigenvalue > cf.lambda + tol) {
    std::ostringstream os;
    os << "eigenvalues of A range over [" << rep.min_eigenvalue << ", " << rep.max_eigenvalue
       << "], outside [1/lambda, lambda] with lambda = " << cf.lambda;
    flag(ErrorCode::EllipticityViolation, os.str());
  }
  if (rep.min_f < cf.c0 - tol) {
    std::ostringstream os;
    os << "min f = " << rep.min_f << " below c0 = " << cf.c0;
    flag(ErrorCode::ForcingBelowC0, os.str());
  }
  if (rep.min_g < 0.0) {
    flag(ErrorCode::InfeasibleBoundary, "boundary data g is negative somewhere");
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Frame

Mat spd_sqrt(const Mat& m, double floor) {
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + m.cwiseAbs().maxCoeff())) {
    throw LabError(ErrorCode::SquareRootFailure, "matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (m + m.transpose()));
  const Vec ev = es.eigenvalues();
  if (ev.minCoeff() <= floor) {
    throw LabError(ErrorCode::SquareRootFailure, "matrix is not positive definite");
  }
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

Frame::Frame(const CoefficientField& cf, const Vec& base, const Mat& a0_inv_sqrt, const Mat& l,
             double f0)
    : a_(cf.A), f_(cf.f), base_(base), a0_inv_sqrt_(a0_inv_sqrt), l_(l), f0_(f0) {
  l_inv_ = l_.inverse();
  Eigen::SelfAdjointEigenSolver<Mat> es(l_, Eigen::EigenvaluesOnly);
  norm_l_ = es.eigenvalues().maxCoeff();
  norm_l_inv_ = 1.0 / es.eigenvalues().minCoeff();
}

Mat Frame::coefficient(const Vec& y) const {
  return a0_inv_sqrt_ * a_(to_world(y)) * a0_inv_sqrt_;
}

double Frame::forcing(const Vec& y) const { return f_(to_world(y)) / f0_; }

MuSample Frame::mu(const Vec& y) const {
  const double r = y.norm();
  if (r < 1e-14) return {1.0, true};
  const Vec nu = y / r;
  return {nu.dot(coefficient(y) * nu), false};
}

Frame make_frame(const CoefficientField& cf, const Vec& x0) {
  if (x0.size() != cf.dim) {
    throw LabError(ErrorCode::InvalidArgument, "base point dimension mismatch");
  }
  const Mat a0 = cf.A(x0);
  const double f0 = cf.f(x0);
  if (!(f0 > 0.0)) {
    throw LabError(ErrorCode::SquareRootFailure, "f(x0) must be positive");
  }
  const Mat root = spd_sqrt(a0);
  const Mat inv_root = root.inverse();
  const Mat l = root / std::sqrt(f0);
  return Frame(cf, x0, inv_root, l, f0);
}

// ---------------------------------------------------------------------------
// Presets

namespace {

struct PresetSpec {
  std::string name;
  std::vector<double> params;
};

PresetSpec parse_spec(std::string_view spec) {
  PresetSpec out;
  const auto colon = spec.find(':');
  out.name = std::string(spec.substr(0, colon));
  if (colon == std::string_view::npos) return out;
  std::string_view rest = spec.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view tok = rest.substr(0, comma);
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size()) {
      throw LabError(ErrorCode::ConfigError, "bad preset parameter '" + std::string(tok) + "'");
    }
    out.params.push_back(v);
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

double param_or(const PresetSpec& s, std::size_t i, double fallback) {
  return i < s.params.size() ? s.params[i] : fallback;
}

Mat polynomial_matrix(const PresetSpec& s, int dim) {
  Mat b = Mat::Zero(dim, dim);
  if (static_cast<int>(s.params.size()) == dim) {
    for (int k = 0; k < dim; ++k) b(k, k) = s.params[k];
  } else if (static_cast<int>(s.params.size()) == dim * dim) {
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) b(i, j) = s.params[i * dim + j];
    b = 0.5 * (b + b.transpose());
  } else {
    throw LabError(ErrorCode::ConfigError,
                   "polynomial preset needs n diagonal entries or n*n matrix entries");
  }
  return b;
}

}  // namespace

CoefficientField make_coefficient_preset(std::string_view spec, const Domain& domain) {
  const PresetSpec s = parse_spec(spec);
  const int n = domain.dim();
  CoefficientField cf;
  cf.dim = n;
  cf.g = [](const Vec&) { return 0.0; };
  cf.description = std::string(spec);
  if (s.name == "identity") {
    cf.A = [n](const Vec&) { return Mat(Mat::Identity(n, n)); };
    cf.f = [](const Vec&) { return 1.0; };
  } else if (s.name == "radial-lipschitz") {
    const double eps = param_or(s, 0, 0.3);
    if (eps < 0.0) throw LabError(ErrorCode::ConfigError, "radial-lipschitz needs eps >= 0");
    cf.A = [n, eps](const Vec& x) { return Mat((1.0 + eps * x.norm()) * Mat::Identity(n, n)); };
    cf.f = [](const Vec&) { return 1.0; };
    cf.lambda = 1.0 + eps * domain.max_radius();
    cf.lip_a = eps * std::sqrt(static_cast<double>(n));
  } else if (s.name == "anisotropic") {
    if (n != 2) throw LabError(ErrorCode::ConfigError, "anisotropic preset is two-dimensional");
    const double theta = param_or(s, 0, 0.0);
    Mat rot(2, 2);
    rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
    Mat d = Mat::Zero(2, 2);
    d(0, 0) = 2.0;
    d(1, 1) = 0.5;
    const Mat a = rot * d * rot.transpose();
    cf.A = [a](const Vec&) { return a; };
    cf.f = [](const Vec&) { return 1.0; };
    cf.lambda = 2.0;
  } else if (s.name == "scaled") {
    const double c = param_or(s, 0, 1.0);
    if (!(c > 0.0)) throw LabError(ErrorCode::ConfigError, "scaled preset needs c > 0");
    cf.A = [n, c](const Vec&) { return Mat(c * Mat::Identity(n, n)); };
    cf.f = [c](const Vec&) { return c; };
    cf.lambda = std::max(c, 1.0 / c);
    cf.c0 = c;
  } else if (s.name == "holder-forcing") {
    const double alpha = param_or(s, 0, 0.5);
    if (!(alpha > 0.0 && alpha <= 1.0)) {
      throw LabError(ErrorCode::ConfigError, "holder-forcing needs alpha in (0, 1]");
    }
    cf.A = [n](const Vec&) { return Mat(Mat::Identity(n, n)); };
    cf.f = [alpha](const Vec& x) { return 1.0 + 0.25 * std::pow(x.norm(), alpha); };
    cf.alpha = alpha;
    cf.holder_f = 0.25;
  } else {
    throw LabError(ErrorCode::ConfigError, "unknown coefficient preset '" + s.name + "'");
  }
  return cf;
}

ScalarFn make_field_preset(std::string_view spec, int dim) {
  const PresetSpec s = parse_spec(spec);
  const int last = dim - 1;
  if (s.name == "zero") return [](const Vec&) { return 0.0; };
  if (s.name == "halfspace") {
    const double offset = param_or(s, 0, 0.0);
    return [last, offset](const Vec& x) {
      const double t = std::max(0.0, x[last] - offset);
      return 0.5 * t * t;
    };
  }
  if (s.name == "radial") {
    return [dim](const Vec& x) { return x.squaredNorm() / (2.0 * dim); };
  }
  if (s.name == "polynomial") {
    const Mat b = polynomial_matrix(s, dim);
    return [b](const Vec& x) { return x.dot(b * x); };
  }
  if (s.name == "radial-lipschitz-exact") {
    const double c = param_or(s, 0, 0.3);
    return [dim, c](const Vec& x) {
      const double rho = x.norm();
      if (c == 0.0) return rho * rho / (2.0 * dim);
      return (rho - std::log1p(c * rho) / c) / (dim * c);
    };
  }
  throw LabError(ErrorCode::ConfigError, "unknown field preset '" + s.name + "'");
}

std::function<Vec(const Vec&)> make_field_gradient_preset(std::string_view spec, int dim) {
  const PresetSpec s = parse_spec(spec);
  const int last = dim - 1;
  if (s.name == "zero") return [dim](const Vec&) { return Vec(Vec::Zero(dim)); };
  if (s.name == "halfspace") {
    const double offset = param_or(s, 0, 0.0);
    return [dim, last, offset](const Vec& x) {
      Vec g = Vec::Zero(dim);
      g[last] = std::max(0.0, x[last] - offset);
      return g;
    };
  }
  if (s.name == "radial") {
    return [dim](const Vec& x) { return Vec(x / dim); };
  }
  if (s.name == "polynomial") {
    const Mat b = polynomial_matrix(s, dim);
    return [b](const Vec& x) { return Vec(2.0 * b * x); };
  }
  if (s.name == "radial-lipschitz-exact") {
    const double c = param_or(s, 0, 0.3);
    return [dim, c](const Vec& x) { return Vec(x / (dim * (1.0 + c * x.norm()))); };
  }
  throw LabError(ErrorCode::ConfigError, "unknown field preset '" + s.name + "'");
}

std::vector<std::string> coefficient_preset_names() {
  return {"anisotropic", "holder-forcing", "identity", "radial-lipschitz", "scaled"};
}

std::vector<std::string> field_preset_names() {
  return {"halfspace", "polynomial", "radial", "radial-lipschitz-exact", "zero"};
}

}  // namespace obstacle
