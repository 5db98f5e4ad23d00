#include "obstacle/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace obstacle {

namespace {

// Legendre polynomial P_n(x) and its derivative.
void legendre(int n, double x, double& p, double& dp) {
  double p0 = 1.0;
  double p1 = x;
  for (int k = 2; k <= n; ++k) {
    const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  p = n == 0 ? 1.0 : p1;
  dp = n * (x * p - p0) / (x * x - 1.0);
}

}  // namespace

GaussLegendre gauss_legendre(int order) {
  if (order < 1) throw LabError(ErrorCode::InvalidArgument, "Gauss-Legendre order must be >= 1");
  GaussLegendre gl;
  gl.nodes.assign(order, 0.0);
  gl.weights.assign(order, 0.0);
  if (order == 1) {
    gl.weights[0] = 2.0;
    return gl;
  }
  for (int i = 0; i < (order + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
    double p = 0.0;
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      legendre(order, x, p, dp);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    legendre(order, x, p, dp);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    gl.nodes[i] = -x;
    gl.nodes[order - 1 - i] = x;
    gl.weights[i] = w;
    gl.weights[order - 1 - i] = w;
  }
  if (order % 2 == 1) gl.nodes[order / 2] = 0.0;
  return gl;
}

double QuadratureRule::total_weight() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

QuadratureRule sphere_rule(int dim, int resolution, double phase) {
  QuadratureRule q;
  q.dim = dim;
  if (dim == 1) {
    Vec a(1), b(1);
    a << -1.0;
    b << 1.0;
    q.points = {a, b};
    q.weights = {1.0, 1.0};
    return q;
  }
  const int m = std::max(resolution, 4);
  const double dphi = 2.0 * std::numbers::pi / m;
  if (dim == 2) {
    q.points.reserve(m);
    for (int i = 0; i < m; ++i) {
      const double t = (i + phase) * dphi;
      Vec p(2);
      p << std::cos(t), std::sin(t);
      q.points.push_back(p);
      q.weights.push_back(dphi);
    }
    return q;
  }
  if (dim == 3) {
    // Gauss-Legendre in z times trapezoid in the azimuth.
    const int nz = std::max(2, m / 2);
    const GaussLegendre gl = gauss_legendre(nz);
    for (int a = 0; a < nz; ++a) {
      const double z = gl.nodes[a];
      const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
      for (int i = 0; i < m; ++i) {
        const double t = (i + phase) * dphi;
        Vec p(3);
        p << s * std::cos(t), s * std::sin(t), z;
        q.points.push_back(p);
        q.weights.push_back(gl.weights[a] * dphi);
      }
    }
    return q;
  }
  throw LabError(ErrorCode::InvalidArgument, "dimension must be 1, 2 or 3");
}

QuadratureRule ball_rule(int dim, int panels, int outer_resolution, double phase) {
  if (panels < 1) throw LabError(ErrorCode::InvalidArgument, "ball rule needs a panel");
  const GaussLegendre gl = gauss_legendre(3);
  QuadratureRule q;
  q.dim = dim;
  const double width = 1.0 / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * width;
    int res = outer_resolution;
    if (dim >= 2) {
      const int floor_res = dim == 2 ? 16 : 8;
      res = std::max(floor_res, static_cast<int>(std::ceil(outer_resolution * (p + 1.0) / panels)));
    }
    const QuadratureRule s = sphere_rule(dim, res, phase);
    for (int a = 0; a < 3; ++a) {
      const double rho = mid + 0.5 * width * gl.nodes[a];
      const double wr = 0.5 * width * gl.weights[a] * std::pow(rho, dim - 1);
      for (std::size_t k = 0; k < s.size(); ++k) {
        q.points.push_back(rho * s.points[k]);
        q.weights.push_back(wr * s.weights[k]);
      }
    }
  }
  return q;
}

RuleSize rule_size_for(int dim, double r, double h, double oversample) {
  RuleSize rs;
  const double ratio = std::max(1.0, r / h) * oversample;
  rs.panels = std::max(4, static_cast<int>(std::ceil(ratio)));
  if (dim == 2) {
    rs.sphere = std::max(64, static_cast<int>(std::ceil(2.0 * std::numbers::pi * ratio)));
  } else if (dim == 3) {
    rs.sphere = std::max(32, static_cast<int>(std::ceil(2.0 * std::numbers::pi * ratio)));
  } else {
    rs.sphere = 2;
  }
  return rs;
}

double phase_from_seed(std::uint64_t seed) {
  if (seed == 0) return 0.0;
  std::mt19937_64 rng(seed);
  // Top 53 bits mapped to [0, 1); independent of the library's distributions.
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

Mat frame_with_axis(const Vec& axis) {
  const int n = static_cast<int>(axis.size());
  Mat q = Mat::Identity(n, n);
  if (n == 1) {
    q(0, 0) = axis[0] >= 0.0 ? 1.0 : -1.0;
    return q;
  }
  Mat m = Mat::Identity(n, n);
  m.col(0) = axis.normalized();
  // Gram-Schmidt, starting from the axis and the most orthogonal unit vectors.
  int col = 1;
  for (int e = 0; e < n && col < n; ++e) {
    Vec v = Vec::Zero(n);
    v[e] = 1.0;
    for (int c = 0; c < col; ++c) v -= v.dot(m.col(c)) * m.col(c);
    if (v.norm() < 1e-6) continue;
    m.col(col++) = v.normalized();
  }
  for (int c = 0; c < n - 1; ++c) q.col(c) = m.col(c + 1);
  q.col(n - 1) = m.col(0);
  return q;
}

}  // namespace obstacle
