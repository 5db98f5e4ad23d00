#pragma once

#include "obstacle/free_boundary.hpp"
#include "obstacle/functionals.hpp"

#include <optional>
#include <string>
#include <vector>

namespace obstacle {

/// u_{L,r}(y) = u(x0 + r L y) / r^2, tabulated on a reference grid over
/// [-2, 2]^n and evaluable anywhere in B_2.
class RescaledField {
 public:
  RescaledField(FrameField field, double r, int nodes_per_unit);

  double radius() const { return r_; }
  const FrameField& field() const { return field_; }
  const Grid& reference_grid() const { return grid_; }
  const std::vector<double>& values() const { return values_; }

  double value(const Vec& y) const { return field_.value(r_ * y) / (r_ * r_); }
  Vec gradient(const Vec& y) const;

  double origin_value() const { return origin_value_; }
  double origin_gradient() const { return origin_gradient_; }
  double max_abs() const;

 private:
  FrameField field_;
  double r_;
  Grid grid_;
  std::vector<double> values_;
  double origin_value_ = 0.0;
  double origin_gradient_ = 0.0;
};

/// Throws FrameOverflow when x0 + r L B_2 leaves the domain.
RescaledField rescale(const FrameField& ff, double r, int nodes_per_unit = 16);
RescaledField rescale(const ObstacleSolution& sol, const CoefficientField& cf, const Vec& x0, double r);

/// Default ladder for a base point: r_max = min(dist / (2 |L|), 1, cap)
/// down to 6 h |L^{-1}|.
std::vector<double> default_ladder(const FrameField& ff, double cap = 1.0);

struct BlowupFit {
  HomogeneousProfile profile;
  double residual_half_space = 0.0;  // L2(B1) distance to the best half-space profile
  double residual_polynomial = 0.0;  // L2(B1) distance to the best polynomial profile
  std::vector<double> cauchy{};        // sup_B1 |u_{r_k} - u_{r_{k+1}}|, smallest r first
  double cauchy_floor = 0.0;
  double homogeneity_defect = 0.0;   // sup_B1 |u_r(y) - u_r(y/2) 4| at the smallest rung
};

/// Blow-up profile from the two smallest rungs of a geometric ladder (at
/// least 6 rungs). Throws NoConvergence when the Cauchy differences do not
/// decrease and AmbiguousProfile when both candidate residuals are within 10%.
BlowupFit extract_blowup(const FrameField& ff, const std::vector<double>& ladder);

enum class PointLabel { Regular, Singular };
std::string to_string(PointLabel label);

struct DecayEstimate {
  std::vector<double> radii;
  std::vector<double> deviation;  // int_dB1 |u_{L,r} - v|
  std::vector<double> floor;      // interpolation floor per radius
  bool exact = false;             // every deviation at or below its floor
  double slope = 0.0;             // log-log slope over resolved radii
  bool monotone = true;           // deviation nonincreasing as r decreases (singular points)
  int monotone_violations = 0;
};

struct BlowupReport {
  Vec x0;
  PointLabel label = PointLabel::Regular;
  std::optional<HomogeneousProfile> profile;
  double phi0 = 0.0;  // extrapolated Phi(0+)
  std::vector<double> ladder;
  std::vector<double> phi;  // Phi at the rungs used for the extrapolation
  int stratum = -1;         // n - rank(B) for singular points
  std::optional<BlowupFit> fit;
  std::optional<DecayEstimate> decay;
};

struct ClassifyOptions {
  double ladder_cap = 1.0;
  bool decay = true;
  QuadratureOptions quadrature;
};

/// Regular iff Phi(0+) < 1.5 theta; the label must agree with the profile kind.
BlowupReport classify_point(const FrameField& ff, const ClassifyOptions& opts = {});
BlowupReport classify_point(const ObstacleSolution& sol, const CoefficientField& cf, const Vec& x0,
                            const ClassifyOptions& opts = {});

/// Stratum index n - rank(B), eigenvalues below 10 h^2 Tr B counted as zero.
int stratum_index(const Mat& b, double h);

/// Log-log slope of r -> int_dB1 |u_{L,r} - v|. Throws InsufficientDecay for a
/// regular point whose resolved deviations do not decay.
DecayEstimate estimate_decay_rate(const FrameField& ff, const HomogeneousProfile& profile,
                                  const std::vector<double>& ladder, PointLabel label);

struct StratifyOptions {
  int stride = 1;
  double beta = 0.5;
  double eta = 0.0;  // neighbourhood radius; 0 picks 3 stride h
  ClassifyOptions classify;
};

struct StrataEntry {
  std::size_t gamma_index = 0;
  Vec x;
  enum class Status { Regular, Singular, Ambiguous, Skipped, Failed } status = Status::Skipped;
  double phi0 = 0.0;
  Vec normal;         // frame direction for regular points
  Vec scaled_normal;  // L^{-1} normal, the quantity whose Hoelder quotient is reported
  Mat matrix;  // B for singular points
  int stratum = -1;
  std::string note;
};

std::string to_string(StrataEntry::Status status);

struct StratificationReport {
  std::vector<StrataEntry> entries;
  std::size_t regular = 0;
  std::size_t singular = 0;
  std::size_t ambiguous = 0;
  std::size_t skipped = 0;
  std::size_t failed = 0;
  std::vector<std::size_t> strata_counts;  // indexed by d = 0..n
  double holder_quotient = 0.0;            // sup |L^-1 n (x) - L^-1 n (z)| / |x - z|^beta
  double eta = 0.0;
  std::size_t openness_violations = 0;     // regular points with a singular neighbour within eta
};

StratificationReport stratify(const ObstacleSolution& sol, const CoefficientField& cf,
                              const FreeBoundarySet& fbs, const StratifyOptions& opts = {});

}  // namespace obstacle
