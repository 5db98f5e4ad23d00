#pragma once

#include "obstacle/types.hpp"

#include <cstdint>
#include <vector>

namespace obstacle {

/// Nodes and weights on the reference interval [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};

GaussLegendre gauss_legendre(int order);

/// Point set with weights; either on the unit sphere or in the unit ball.
struct QuadratureRule {
  int dim = 0;
  std::vector<Vec> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
  double total_weight() const;
};

/// Rule on the unit sphere S^{n-1} (counting measure in 1D). `resolution`
/// is the number of azimuthal nodes in 2D and 3D; `phase` rotates the
/// azimuthal nodes by a fraction of one spacing.
QuadratureRule sphere_rule(int dim, int resolution, double phase = 0.0);

/// Polar rule on the unit ball: composite three-point Gauss-Legendre panels
/// in the radius times a sphere rule whose size grows with the radius.
QuadratureRule ball_rule(int dim, int panels, int outer_resolution, double phase = 0.0);

/// Rule sizes for a ball of radius r sampled from a field with spacing h.
struct RuleSize {
  int panels = 4;
  int sphere = 64;
};

RuleSize rule_size_for(int dim, double r, double h, double oversample = 1.0);

/// Deterministic azimuthal phase in [0, 1) from a seed; seed 0 gives 0.
double phase_from_seed(std::uint64_t seed);

/// Orthonormal basis whose last column is the given unit vector.
Mat frame_with_axis(const Vec& axis);

}  // namespace obstacle
