#pragma once

#include "obstacle/grid_field.hpp"
#include "obstacle/obstacle_solver.hpp"

#include <cstdint>
#include <vector>

namespace obstacle {

struct GammaPoint {
  Vec x;
  Vec normal;             // grad u / |grad u| one node into N_u; zero for isolated contacts
  std::size_t node = 0;   // adjacent positivity node
  int merged = 1;         // crossings collapsed into this point
  bool isolated = false;  // a contact cluster smaller than the grid scale
};

/// Coincidence set, positivity set and free-boundary points of a solution.
struct FreeBoundarySet {
  Grid grid;
  double threshold = 0.0;
  std::vector<std::uint8_t> coincidence;  // interior nodes with u <= threshold
  std::vector<std::uint8_t> positive;     // interior nodes with u > threshold
  std::vector<GammaPoint> gamma;

  std::size_t coincidence_count() const;
  std::size_t positive_count() const;
};

/// Γ points sit on grid edges joining a coincidence node to a positivity
/// node. Near a nondegenerate free boundary u grows quadratically, so the
/// crossing is found by extrapolating sqrt(u) from the two nodes on the
/// positive side; linear interpolation of u is the fallback. Crossings
/// closer than h/4 are merged. A coincidence component whose exact zeros span
/// at most two cells per axis is an isolated contact and yields one point, at
/// the vertex of the local parabola through its minimum node.
FreeBoundarySet extract(const ObstacleSolution& sol);

struct GrowthOptions {
  std::vector<double> radii;  // empty: geometric ladder on [4h, 0.2]
  int stride = 1;             // test every stride-th Γ point
  double min_ratio = 0.05;
  double phase = 0.0;
};

struct GrowthReport {
  std::vector<double> radii;
  std::vector<std::size_t> points;      // indices into fbs.gamma
  std::vector<double> point_ratio;      // min over radii, per tested point
  std::vector<double> radius_ratio;     // min over points, per radius
  double theta_hat = 0.0;               // min over all tested pairs
  double spread = 0.0;                  // max over points of (max - min) / max across radii
  bool pass = false;
};

/// sup_{dB_r(x0)} u / r^2 for every eligible Γ point x0 (dist(x0, dΩ) >
/// 2 max r) and radius. Throws RadiusOutOfDomain when no point is eligible.
GrowthReport quadratic_growth_check(const ObstacleSolution& sol, const FreeBoundarySet& fbs,
                                    const GrowthOptions& opts = {});

/// Sup of u over a sphere, sampled at max(64, ceil(2 pi r / h)) points in 2D.
double sphere_sup(const FieldSampler& u, const Vec& x0, double r, double phase = 0.0);

}  // namespace obstacle
