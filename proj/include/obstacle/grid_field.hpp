#pragma once

#include "obstacle/field_model.hpp"

#include <span>
#include <vector>

namespace obstacle {

enum class Interpolation {
  Multilinear,
  // Tensor three-point Lagrange: reproduces quadratics exactly, which is the
  // natural class of blow-up profiles.
  Quadratic,
};

/// Point evaluation of a nodal field and its finite-difference gradient.
class FieldSampler {
 public:
  FieldSampler(const Grid& grid, std::span<const double> values,
               Interpolation interp = Interpolation::Quadratic);

  const Grid& grid() const { return grid_; }
  Interpolation interpolation() const { return interp_; }

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  /// Value and gradient from one stencil lookup.
  void sample(const Vec& x, double& value, Vec& gradient) const;

  /// Nodal gradient (central differences inside, second-order one-sided on
  /// the boundary).
  Vec node_gradient(std::size_t linear) const;

 private:
  struct Stencil {
    int count = 0;
    std::array<std::size_t, 27> index{};
    std::array<double, 27> weight{};
  };
  Stencil stencil(const Vec& x) const;

  Grid grid_;
  std::vector<double> values_;
  std::vector<double> gradient_;  // interleaved, dim entries per node
  Interpolation interp_;
};

}  // namespace obstacle
