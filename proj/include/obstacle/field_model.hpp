#pragma once

#include "obstacle/types.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace obstacle {

/// Axis-aligned box in dimension 1, 2 or 3.
class Domain {
 public:
  Domain(int dim, const std::array<double, 3>& lower, const std::array<double, 3>& upper,
         std::string tag = {});

  /// Symmetric box [-half_width, half_width]^dim.
  static Domain centered(int dim, double half_width, std::string tag = {});

  int dim() const { return dim_; }
  double lower(int axis) const { return lower_[axis]; }
  double upper(int axis) const { return upper_[axis]; }
  const std::string& tag() const { return tag_; }

  bool contains(const Vec& x, double slack = 0.0) const;
  /// Euclidean distance from an interior point to the box boundary.
  double distance_to_boundary(const Vec& x) const;
  /// Largest |x| over the box (used for coefficient bounds).
  double max_radius() const;

 private:
  int dim_;
  std::array<double, 3> lower_{};
  std::array<double, 3> upper_{};
  std::string tag_;
};

/// Uniform tensor grid of nodes covering a Domain, axis 0 varying fastest.
class Grid {
 public:
  Grid(Domain domain, const std::array<int, 3>& nodes);

  /// Grid with spacing 1/resolution along every axis; box lengths must be
  /// integer multiples of the spacing.
  static Grid with_resolution(const Domain& domain, int resolution);

  const Domain& domain() const { return domain_; }
  int dim() const { return domain_.dim(); }
  int nodes(int axis) const { return nodes_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  double max_spacing() const;
  double min_spacing() const;
  std::size_t size() const { return size_; }
  std::size_t stride(int axis) const { return stride_[axis]; }

  std::array<int, 3> multi_index(std::size_t linear) const;
  std::size_t linear_index(const std::array<int, 3>& idx) const;
  double coordinate(int axis, int i) const { return domain_.lower(axis) + i * spacing_[axis]; }
  Vec point(std::size_t linear) const;
  Vec point(const std::array<int, 3>& idx) const;
  bool is_boundary(std::size_t linear) const;
  bool is_boundary(const std::array<int, 3>& idx) const;

  /// Nodal trapezoid weight (cell volume with halves at boundary faces).
  double node_weight(std::size_t linear) const;
  double cell_volume() const;

 private:
  Domain domain_;
  std::array<int, 3> nodes_{1, 1, 1};
  std::array<double, 3> spacing_{1.0, 1.0, 1.0};
  std::array<std::size_t, 3> stride_{1, 1, 1};
  std::size_t size_ = 0;
};

using MatrixFn = std::function<Mat(const Vec&)>;
using ScalarFn = std::function<double(const Vec&)>;

/// Coefficient data of the obstacle problem: the matrix field A, forcing f,
/// boundary trace g, together with the structural constants they satisfy.
struct CoefficientField {
  int dim = 2;
  MatrixFn A;
  ScalarFn f;
  ScalarFn g;
  double lambda = 1.0;    // ellipticity: |xi|^2/lambda <= <A xi, xi> <= lambda |xi|^2
  double lip_a = 0.0;     // Lipschitz constant of A (Frobenius norm)
  double alpha = 1.0;     // Hoelder exponent of f
  double holder_f = 0.0;  // Hoelder seminorm of f
  double c0 = 1.0;        // lower bound of f
  std::string description;
};

struct ValidationReport {
  double min_eigenvalue = 0.0;
  double max_eigenvalue = 0.0;
  double ellipticity = 1.0;  // max(max_eig, 1/min_eig)
  double lip_a = 0.0;        // empirical, stencil-adjacent pairs only (a lower bound)
  double holder_f = 0.0;     // empirical, same pairs
  double min_f = 0.0;
  double min_g = 0.0;
  double symmetry_defect = 0.0;
  std::vector<ErrorCode> violations;
  bool valid() const { return violations.empty(); }
};

/// Samples the field on every grid node and checks the structural hypotheses.
/// With strict == true the first violation is thrown as a LabError.
ValidationReport validate_field(const CoefficientField& cf, const Grid& grid, bool strict = true);

struct MuSample {
  double value = 1.0;
  bool at_base_point = false;
};

/// Normalizing affine frame y -> x0 + L y with L = f(x0)^{-1/2} A(x0)^{1/2}.
/// In frame coordinates the coefficients freeze to the identity at y = 0 and
/// the forcing to one.
class Frame {
 public:
  Frame(const CoefficientField& cf, const Vec& base, const Mat& a0_inv_sqrt, const Mat& l,
        double f0);

  const Vec& base() const { return base_; }
  const Mat& L() const { return l_; }
  const Mat& L_inv() const { return l_inv_; }
  double f0() const { return f0_; }
  int dim() const { return static_cast<int>(base_.size()); }
  double norm_L() const { return norm_l_; }
  double norm_L_inv() const { return norm_l_inv_; }

  Vec to_world(const Vec& y) const { return base_ + l_ * y; }
  Vec to_frame(const Vec& x) const { return l_inv_ * (x - base_); }

  /// Transformed coefficients A(x0)^{-1/2} A(x0 + L y) A(x0)^{-1/2}.
  Mat coefficient(const Vec& y) const;
  /// Transformed forcing f(x0 + L y) / f(x0).
  double forcing(const Vec& y) const;
  /// mu(y) = <C(y) y/|y|, y/|y|>; the base point itself is flagged and
  /// reports 1.
  MuSample mu(const Vec& y) const;

 private:
  MatrixFn a_;
  ScalarFn f_;
  Vec base_;
  Mat a0_inv_sqrt_;
  Mat l_;
  Mat l_inv_;
  double f0_ = 1.0;
  double norm_l_ = 1.0;
  double norm_l_inv_ = 1.0;
};

Frame make_frame(const CoefficientField& cf, const Vec& x0);

/// Principal square root of a symmetric positive definite matrix via
/// eigendecomposition; throws SquareRootFailure below the eigenvalue floor.
Mat spd_sqrt(const Mat& m, double floor = 1e-10);

// Presets are addressed as "name" or "name:p1,p2,...".
//
// Coefficient presets (A and f):
//   identity                A = I, f = 1
//   radial-lipschitz:eps    A = (1 + eps |x|) I, f = 1
//   anisotropic:theta       A = R(theta) diag(2, 1/2) R(theta)^T, f = 1 (2D)
//   scaled:c                A = c I, f = c
//   holder-forcing:alpha    A = I, f = 1 + |x|^alpha / 4
//
// Boundary/exact-field presets (g):
//   zero, halfspace[:offset], radial, polynomial:b11,b22[,b33],
//   radial-lipschitz-exact:eps
CoefficientField make_coefficient_preset(std::string_view spec, const Domain& domain);
ScalarFn make_field_preset(std::string_view spec, int dim);
/// Gradient of a field preset (used for exact-solution diagnostics).
std::function<Vec(const Vec&)> make_field_gradient_preset(std::string_view spec, int dim);

std::vector<std::string> coefficient_preset_names();
std::vector<std::string> field_preset_names();

}  // namespace obstacle
