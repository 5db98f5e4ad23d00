#include "obstacle/blowup.hpp"
#include "obstacle/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <numbers>

namespace obstacle {

RescaledField::RescaledField(FrameField field, double r, int nodes_per_unit)
    : field_(std::move(field)),
      r_(r),
      grid_([&] {
        const int n = field_.dim();
        const int m = 4 * std::max(1, nodes_per_unit) + 1;
        return Grid(Domain::centered(n, 2.0, "reference"), {m, n > 1 ? m : 1, n > 2 ? m : 1});
      }()) {
  values_.resize(grid_.size());
  for (std::size_t i = 0; i < grid_.size(); ++i) values_[i] = value(grid_.point(i));
  const Vec origin = Vec::Zero(field_.dim());
  origin_value_ = value(origin);
  origin_gradient_ = gradient(origin).norm();
}

Vec RescaledField::gradient(const Vec& y) const {
  double u = 0.0;
  Vec g;
  field_.sample(r_ * y, u, g);
  return g / r_;
}

double RescaledField::max_abs() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

RescaledField rescale(const FrameField& ff, double r, int nodes_per_unit) {
  if (!(r > 0.0)) throw LabError(ErrorCode::InvalidArgument, "radius must be positive");
  if (2.0 * r > ff.max_radius() * (1.0 + 1e-12)) {
    throw LabError(ErrorCode::FrameOverflow, "rescaled ball B_2 leaves the domain");
  }
  return RescaledField(ff, r, ff.dim() == 3 ? std::min(nodes_per_unit, 8) : nodes_per_unit);
}

RescaledField rescale(const ObstacleSolution& sol, const CoefficientField& cf, const Vec& x0,
                      double r) {
  return rescale(FrameField(sol, cf, x0), r);
}

std::vector<double> default_ladder(const FrameField& ff, double cap) {
  const double r_max = std::min({0.5 * ff.max_radius(), 1.0, cap});
  const double r_min = 6.0 * ff.h_eff();
  if (r_max < r_min) return {};
  return radius_ladder(r_max, r_min);
}

std::string to_string(PointLabel label) {
  return label == PointLabel::Regular ? "Regular" : "Singular";
}

namespace {

QuadratureRule fit_ball(int n) {
  if (n == 1) return ball_rule(1, 32, 2);
  if (n == 2) return ball_rule(2, 8, 64);
  return ball_rule(3, 6, 24);
}

QuadratureRule fit_sphere(int n) {
  if (n == 1) return sphere_rule(1, 2);
  if (n == 2) return sphere_rule(2, 256);
  return sphere_rule(3, 48);
}

double weighted_l2(const QuadratureRule& q, const std::vector<double>& a,
                   const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < q.size(); ++k) s += q.weights[k] * (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

Vec best_direction(const QuadratureRule& s, const std::vector<double>& us) {
  const int n = s.dim;
  auto score = [&](const Vec& nu) {
    double j = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
      const double t = std::max(0.0, s.points[k].dot(nu));
      j += s.weights[k] * us[k] * t * t;
    }
    return j;
  };
  if (n == 1) {
    Vec p(1), m(1);
    p << 1.0;
    m << -1.0;
    return score(p) >= score(m) ? p : m;
  }
  if (n == 2) {
    auto dir = [](double t) {
      Vec v(2);
      v << std::cos(t), std::sin(t);
      return v;
    };
    const int scan = 720;
    double best_t = 0.0;
    double best = -1.0;
    for (int i = 0; i < scan; ++i) {
      const double t = 2.0 * std::numbers::pi * i / scan;
      const double j = score(dir(t));
      if (j > best) {
        best = j;
        best_t = t;
      }
    }
    const double step = 2.0 * std::numbers::pi / scan;
    double a = best_t - step;
    double b = best_t + step;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - g * (b - a), x2 = a + g * (b - a);
    double f1 = score(dir(x1)), f2 = score(dir(x2));
    for (int it = 0; it < 80; ++it) {
      if (f1 >= f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - g * (b - a);
        f1 = score(dir(x1));
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + g * (b - a);
        f2 = score(dir(x2));
      }
    }
    // The maximum is flat, so finish on the derivative, which has a simple root.
    auto slope = [&](double t) {
      const Vec nu = dir(t);
      Vec dnu(2);
      dnu << -std::sin(t), std::cos(t);
      double d = 0.0;
      for (std::size_t k = 0; k < s.size(); ++k) {
        const double p = std::max(0.0, s.points[k].dot(nu));
        d += s.weights[k] * us[k] * 2.0 * p * s.points[k].dot(dnu);
      }
      return d;
    };
    double lo = 0.5 * (a + b) - step;
    double hi = 0.5 * (a + b) + step;
    double flo = slope(lo);
    if (flo > 0.0 && slope(hi) < 0.0) {
      for (int it = 0; it < 200 && hi - lo > 1e-16; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = slope(mid);
        if (fm > 0.0) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      return dir(0.5 * (lo + hi));
    }
    return dir(0.5 * (a + b));
  }
  // Fibonacci sphere scan, then a shrinking pattern search in angles.
  const int scan = 4000;
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  Vec best_v(3);
  double best = -1.0;
  for (int i = 0; i < scan; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / scan;
    const double rr = std::sqrt(1.0 - z * z);
    Vec v(3);
    v << rr * std::cos(golden * i), rr * std::sin(golden * i), z;
    const double j = score(v);
    if (j > best) {
      best = j;
      best_v = v;
    }
  }
  double th = std::acos(std::clamp(best_v[2], -1.0, 1.0));
  double ph = std::atan2(best_v[1], best_v[0]);
  auto dir3 = [](double t, double p) {
    Vec v(3);
    v << std::sin(t) * std::cos(p), std::sin(t) * std::sin(p), std::cos(t);
    return v;
  };
  double step = 0.05;
  while (step > 1e-12) {
    bool moved = false;
    for (const auto& d : {std::pair{1, 0}, std::pair{-1, 0}, std::pair{0, 1}, std::pair{0, -1}}) {
      const double t = th + d.first * step;
      const double p = ph + d.second * step;
      const double j = score(dir3(t, p));
      if (j > best) {
        best = j;
        th = t;
        ph = p;
        moved = true;
      }
    }
    if (!moved) step *= 0.5;
  }
  return dir3(th, ph);
}

Mat fit_matrix(const QuadratureRule& q, const std::vector<double>& u) {
  const int n = q.dim;
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) pairs.emplace_back(i, j);
  const int m = static_cast<int>(pairs.size());
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 1, m + 1);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m + 1);
  Eigen::VectorXd phi(m);
  for (std::size_t k = 0; k < q.size(); ++k) {
    const Vec& y = q.points[k];
    for (int a = 0; a < m; ++a) {
      const auto [i, j] = pairs[a];
      phi[a] = (i == j ? 1.0 : 2.0) * y[i] * y[j];
    }
    kkt.topLeftCorner(m, m) += q.weights[k] * phi * phi.transpose();
    rhs.head(m) += q.weights[k] * u[k] * phi;
  }
  for (int a = 0; a < m; ++a) {
    if (pairs[a].first == pairs[a].second) kkt(a, m) = kkt(m, a) = 1.0;
  }
  rhs[m] = 0.5;
  const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
  Mat b = Mat::Zero(n, n);
  for (int a = 0; a < m; ++a) {
    const auto [i, j] = pairs[a];
    b(i, j) = b(j, i) = sol[a];
  }
  // Nearest admissible matrix: clip negative eigenvalues, restore the trace.
  Eigen::SelfAdjointEigenSolver<Mat> es(b);
  Vec ev = es.eigenvalues().cwiseMax(0.0);
  const double tr = ev.sum();
  if (!(tr > 0.0)) return Mat(Mat::Identity(n, n) / (2.0 * n));
  ev *= 0.5 / tr;
  Mat out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  out = 0.5 * (out + out.transpose());
  return out;
}

}  // namespace

BlowupFit extract_blowup(const FrameField& ff, const std::vector<double>& ladder_in) {
  std::vector<double> ladder = ladder_in;
  std::sort(ladder.begin(), ladder.end());
  if (ladder.size() < 6) {
    throw LabError(ErrorCode::InvalidArgument, "blow-up extraction needs at least 6 rungs");
  }
  if (2.0 * ladder.back() > ff.max_radius() * (1.0 + 1e-12)) {
    throw LabError(ErrorCode::FrameOverflow, "largest rung leaves the domain");
  }
  const int n = ff.dim();
  const QuadratureRule ball = fit_ball(n);
  const QuadratureRule sphere = fit_sphere(n);
  auto sample = [&](double r, const QuadratureRule& q) {
    std::vector<double> v(q.size());
    const double inv = 1.0 / (r * r);
    for (std::size_t k = 0; k < q.size(); ++k) v[k] = ff.value(r * q.points[k]) * inv;
    return v;
  };
  std::vector<std::vector<double>> rungs;
  for (double r : ladder) rungs.push_back(sample(r, ball));

  BlowupFit fit{.profile = HomogeneousProfile::polynomial(Mat::Identity(n, n) / (2.0 * n))};
  for (std::size_t k = 0; k + 1 < rungs.size(); ++k) {
    double d = 0.0;
    for (std::size_t p = 0; p < ball.size(); ++p) d = std::max(d, std::abs(rungs[k][p] - rungs[k + 1][p]));
    fit.cauchy.push_back(d);
  }
  double umax = 0.0;
  for (double v : rungs[0]) umax = std::max(umax, std::abs(v));
  const double q = ff.h_eff() / ladder[0];
  fit.cauchy_floor = 0.5 * q * q * umax + 1e-9;
  if (fit.cauchy.front() > std::max(fit.cauchy.back(), fit.cauchy_floor)) {
    throw LabError(ErrorCode::NoConvergence,
                   "rescalings do not settle as r decreases (Cauchy differences grow)");
  }
  {
    const std::vector<double> half = sample(0.5 * ladder[0], ball);
    for (std::size_t p = 0; p < ball.size(); ++p)
      fit.homogeneity_defect = std::max(fit.homogeneity_defect, std::abs(rungs[0][p] - half[p]));
  }

  std::vector<double> u(ball.size());
  for (std::size_t p = 0; p < ball.size(); ++p) u[p] = 0.5 * (rungs[0][p] + rungs[1][p]);
  const std::vector<double> s0 = sample(ladder[0], sphere);
  const std::vector<double> s1 = sample(ladder[1], sphere);
  std::vector<double> us(sphere.size());
  for (std::size_t p = 0; p < sphere.size(); ++p) us[p] = 0.5 * (s0[p] + s1[p]);

  const HomogeneousProfile half = HomogeneousProfile::half_space(best_direction(sphere, us));
  const HomogeneousProfile poly = HomogeneousProfile::polynomial(fit_matrix(ball, u));
  std::vector<double> va(ball.size()), vb(ball.size());
  for (std::size_t p = 0; p < ball.size(); ++p) {
    va[p] = half.value(ball.points[p]);
    vb[p] = poly.value(ball.points[p]);
  }
  fit.residual_half_space = weighted_l2(ball, u, va);
  fit.residual_polynomial = weighted_l2(ball, u, vb);
  const double lo = std::min(fit.residual_half_space, fit.residual_polynomial);
  const double hi = std::max(fit.residual_half_space, fit.residual_polynomial);
  if (hi <= 0.0 || lo / hi > 0.9) {
    throw LabError(ErrorCode::AmbiguousProfile,
                   "half-space and polynomial residuals are within 10% (" + std::to_string(lo) +
                       ", " + std::to_string(hi) + ")");
  }
  fit.profile = fit.residual_half_space < fit.residual_polynomial ? half : poly;
  return fit;
}

int stratum_index(const Mat& b, double h) {
  const int n = static_cast<int>(b.rows());
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (b + b.transpose()));
  const double tol = 10.0 * h * h * b.trace();
  int rank = 0;
  for (int k = 0; k < n; ++k) rank += es.eigenvalues()[k] > tol ? 1 : 0;
  return n - rank;
}

DecayEstimate estimate_decay_rate(const FrameField& ff, const HomogeneousProfile& profile,
                                  const std::vector<double>& ladder_in, PointLabel label) {
  std::vector<double> ladder = ladder_in;
  std::sort(ladder.begin(), ladder.end());
  const int n = ff.dim();
  const QuadratureRule sphere = fit_sphere(n);
  const double area = sphere.total_weight();
  DecayEstimate est;
  est.radii = ladder;
  for (double r : ladder) {
    double dev = 0.0;
    double umax = 0.0;
    for (std::size_t k = 0; k < sphere.size(); ++k) {
      const double ur = ff.value(r * sphere.points[k]) / (r * r);
      umax = std::max(umax, ur);
      dev += sphere.weights[k] * std::abs(ur - profile.value(sphere.points[k]));
    }
    const double q = ff.h_eff() / r;
    est.deviation.push_back(dev);
    est.floor.push_back(std::max(1e-8, 0.02 * area * q * q * umax));
  }
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < ladder.size(); ++k) {
    if (est.deviation[k] > est.floor[k]) {
      lx.push_back(std::log(ladder[k]));
      ly.push_back(std::log(est.deviation[k]));
    }
  }
  if (lx.size() < 3) {
    est.exact = true;
  } else {
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / lx.size();
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / ly.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
      sxy += (lx[k] - mx) * (ly[k] - my);
      sxx += (lx[k] - mx) * (lx[k] - mx);
    }
    est.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  }
  for (std::size_t k = 0; k + 1 < ladder.size(); ++k) {
    if (est.deviation[k] > est.deviation[k + 1] + est.floor[k] + est.floor[k + 1]) {
      ++est.monotone_violations;
    }
  }
  est.monotone = est.monotone_violations == 0;
  if (label == PointLabel::Regular && !est.exact && !(est.slope > 0.0)) {
    throw LabError(ErrorCode::InsufficientDecay,
                   "deviation from the half-space blow-up does not decay (slope " +
                       std::to_string(est.slope) + ")");
  }
  return est;
}

BlowupReport classify_point(const FrameField& ff, const ClassifyOptions& opts) {
  BlowupReport rep;
  rep.x0 = ff.base();
  rep.ladder = default_ladder(ff, opts.ladder_cap);
  if (rep.ladder.size() < 6) {
    throw LabError(ErrorCode::InvalidArgument,
                   "point too close to the boundary for a 6-rung radius ladder");
  }
  rep.fit = extract_blowup(ff, rep.ladder);
  rep.profile = rep.fit->profile;

  // Phi(0+) as the intercept of a least-squares line through the smallest rungs.
  const std::size_t m = std::min<std::size_t>(4, rep.ladder.size());
  double sr = 0.0, sp = 0.0, srr = 0.0, srp = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double r = rep.ladder[k];
    const double p = weiss_phi(ff, r, opts.quadrature);
    rep.phi.push_back(p);
    sr += r;
    sp += p;
    srr += r * r;
    srp += r * p;
  }
  const double det = m * srr - sr * sr;
  rep.phi0 = (srr * sp - sr * srp) / det;

  const int n = ff.dim();
  rep.label = rep.phi0 < 1.5 * theta(n) ? PointLabel::Regular : PointLabel::Singular;
  const bool poly = rep.profile->kind() == HomogeneousProfile::Kind::Polynomial;
  if (poly != (rep.label == PointLabel::Singular)) {
    throw LabError(ErrorCode::AmbiguousProfile,
                   "energy label " + to_string(rep.label) + " disagrees with the profile kind (Phi(0+) = " +
                       std::to_string(rep.phi0) + ")");
  }
  if (poly) rep.stratum = stratum_index(rep.profile->matrix(), ff.h_eff());
  if (opts.decay) rep.decay = estimate_decay_rate(ff, *rep.profile, rep.ladder, rep.label);
  return rep;
}

BlowupReport classify_point(const ObstacleSolution& sol, const CoefficientField& cf, const Vec& x0,
                            const ClassifyOptions& opts) {
  return classify_point(FrameField(sol, cf, x0), opts);
}

std::string to_string(StrataEntry::Status status) {
  switch (status) {
    case StrataEntry::Status::Regular: return "Regular";
    case StrataEntry::Status::Singular: return "Singular";
    case StrataEntry::Status::Ambiguous: return "Ambiguous";
    case StrataEntry::Status::Skipped: return "Skipped";
    case StrataEntry::Status::Failed: return "Failed";
  }
  return "Unknown";
}

StratificationReport stratify(const ObstacleSolution& sol, const CoefficientField& cf,
                              const FreeBoundarySet& fbs, const StratifyOptions& opts) {
  if (fbs.gamma.empty()) throw LabError(ErrorCode::InvalidArgument, "free boundary is empty");
  const int n = sol.grid.dim();
  const int stride = std::max(1, opts.stride);
  auto sampler = std::make_shared<const FieldSampler>(sol.grid, sol.u);
  ClassifyOptions copts = opts.classify;
  copts.decay = false;

  StratificationReport rep;
  rep.strata_counts.assign(n + 1, 0);
  std::vector<StrataEntry> entries((fbs.gamma.size() + stride - 1) / stride);
  parallel_for(entries.size(), [&](std::size_t k) {
    const std::size_t i = k * stride;
    StrataEntry& e = entries[k];
    e.gamma_index = i;
    e.x = fbs.gamma[i].x;
    try {
      const FrameField ff(sampler, cf, e.x);
      if (default_ladder(ff, copts.ladder_cap).size() < 6) {
        e.status = StrataEntry::Status::Skipped;
        e.note = "too close to the boundary";
      } else {
        const BlowupReport br = classify_point(ff, copts);
        e.phi0 = br.phi0;
        if (br.label == PointLabel::Regular) {
          e.status = StrataEntry::Status::Regular;
          e.normal = br.profile->direction();
          e.scaled_normal = ff.frame().L_inv() * e.normal;
        } else {
          e.status = StrataEntry::Status::Singular;
          e.matrix = br.profile->matrix();
          e.stratum = br.stratum;
        }
      }
    } catch (const LabError& err) {
      e.status = err.code() == ErrorCode::AmbiguousProfile ? StrataEntry::Status::Ambiguous
                                                            : StrataEntry::Status::Failed;
      e.note = err.what();
    }
  });
  for (StrataEntry& e : entries) {
    switch (e.status) {
      case StrataEntry::Status::Regular: ++rep.regular; break;
      case StrataEntry::Status::Singular:
        ++rep.singular;
        ++rep.strata_counts[e.stratum];
        break;
      case StrataEntry::Status::Ambiguous: ++rep.ambiguous; break;
      case StrataEntry::Status::Skipped: ++rep.skipped; break;
      case StrataEntry::Status::Failed: ++rep.failed; break;
    }
    rep.entries.push_back(std::move(e));
  }

  rep.eta = opts.eta > 0.0 ? opts.eta : 3.0 * stride * sol.grid.max_spacing();
  for (std::size_t a = 0; a < rep.entries.size(); ++a) {
    const StrataEntry& ea = rep.entries[a];
    if (ea.status != StrataEntry::Status::Regular) continue;
    bool violated = false;
    for (std::size_t b = 0; b < rep.entries.size(); ++b) {
      if (a == b) continue;
      const StrataEntry& eb = rep.entries[b];
      const double d = (ea.x - eb.x).norm();
      if (d > rep.eta || d == 0.0) continue;
      if (eb.status == StrataEntry::Status::Singular) violated = true;
      if (eb.status == StrataEntry::Status::Regular && b > a) {
        const double qv = (ea.scaled_normal - eb.scaled_normal).norm() / std::pow(d, opts.beta);
        rep.holder_quotient = std::max(rep.holder_quotient, qv);
      }
    }
    if (violated) ++rep.openness_violations;
  }
  return rep;
}

}  // namespace obstacle
