#pragma once

#include "obstacle/field_model.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace obstacle {

/// Discrete energy  u^T K u + 2 sum_i w_i f_i u_i  approximating
/// int <A grad u, grad u> + 2 f u.
///
/// K is assembled cell by cell: every cell corner contributes <M g, g> with g
/// the one-sided edge differences leaving that corner, M_kk = a_kk at the edge
/// midpoint and M_kl = a_kl at the cell center. For diagonal A this is the
/// conservative flux-form stencil with face-midpoint coefficients; cross terms
/// enter symmetrically, so K is symmetric and positive definite on zero-trace
/// fields whenever A is uniformly elliptic.
class DiscreteEnergy {
 public:
  DiscreteEnergy(Grid grid, std::vector<double> coeff, std::vector<double> weight,
                 std::vector<double> forcing);

  const Grid& grid() const { return grid_; }
  int stencil_size() const { return stencil_size_; }
  bool has_cross_terms() const { return cross_terms_; }

  /// (K u)_i, valid for every node (boundary rows skip missing neighbours).
  double apply_row(std::size_t i, std::span<const double> u) const;
  /// (K u)_i for a node known to be interior.
  double apply_interior(std::size_t i, std::span<const double> u) const {
    const double* c = packed_.data() + i * active_.size();
    const double* ui = u.data() + i;
    double acc = 0.0;
    for (std::size_t a = 0; a < active_offsets_.size(); ++a) acc += c[a] * ui[active_offsets_[a]];
    return acc;
  }
  /// Discrete energy of a full nodal vector.
  double energy(std::span<const double> u) const;
  /// Stencil coefficient of node i towards offset s (s indexes {-1,0,1}^n,
  /// axis 0 fastest).
  double coefficient(std::size_t i, int s) const;
  double diagonal(std::size_t i) const { return diagonal_[i]; }
  double weight(std::size_t i) const { return weight_[i]; }
  double forcing(std::size_t i) const { return forcing_[i]; }
  double max_forcing() const;

  /// Discrete div(A grad u) at an interior node: -(K u)_i / w_i.
  double divergence(std::size_t i, std::span<const double> u) const;

  const std::vector<int>& active_stencil() const { return active_; }
  std::ptrdiff_t offset(int s) const { return offsets_[s]; }

 private:
  Grid grid_;
  int stencil_size_ = 1;
  int center_ = 0;
  bool cross_terms_ = false;
  std::vector<double> packed_;  // active stencil entries only, per node
  std::vector<double> diagonal_;
  std::vector<double> weight_;
  std::vector<double> forcing_;
  std::vector<std::ptrdiff_t> offsets_;
  std::vector<std::array<int, 3>> shifts_;
  std::vector<int> active_;  // stencil entries that are non-zero somewhere
  std::vector<int> slot_to_active_;
  std::vector<std::ptrdiff_t> active_offsets_;
};

/// Throws GridTooCoarse when an axis has fewer than 3 interior nodes.
DiscreteEnergy assemble(const CoefficientField& cf, const Grid& grid);

enum class InitialIterate {
  Unconstrained,  // linear solve of div(A grad u) = f, clamped at 0
  Zero,
  Given,
};

struct SolverOptions {
  double omega = 1.5;
  bool omega_auto = false;  // Laplacian-optimal relaxation for the grid
  InitialIterate initial = InitialIterate::Unconstrained;
  std::vector<double> initial_values;  // used with InitialIterate::Given
  bool record_energy = false;
  double cg_relative_tol = 1e-13;
};

struct ObstacleSolution {
  Grid grid;
  std::vector<double> u{};
  int iterations = 0;
  bool converged = false;
  double energy = 0.0;
  double tol = 0.0;
  double omega = 0.0;
  double projected_residual = 0.0;  // max |min(u, f - div(A grad u))| over interior nodes
  double positivity_threshold = 0.0;
  std::vector<double> pde_residual{};     // f - div(A grad u), zero on the boundary
  std::vector<double> complementarity{};  // min(u, f - div(A grad u)), zero on the boundary
  std::vector<std::uint8_t> positive{};   // u > positivity_threshold
  std::vector<double> energy_history{};   // per sweep when requested

  double max_spacing() const { return grid.max_spacing(); }
};

/// Projected SOR on the discrete energy with red-black (or 2^n-colour when
/// mixed derivatives are present) ordering. Boundary nodes take g. On
/// MaxIterExceeded the last iterate is returned with converged == false.
ObstacleSolution solve(const DiscreteEnergy& de, const ScalarFn& g, double tol, int max_iter,
                       const SolverOptions& options = {});

/// Wraps a nodal field that did not come from the solver (closed-form
/// samples, synthetic data) with the same diagnostics.
ObstacleSolution make_solution(const DiscreteEnergy& de, std::vector<double> u, double tol);

/// Laplacian-optimal SOR parameter for the grid.
double optimal_omega(const Grid& grid);

double positivity_threshold(double tol, double h, double max_f);

struct ResidualReport {
  double pde_residual = 0.0;       // over N_u nodes at distance > 2h from the free boundary
  double coincidence_norm = 0.0;   // max u over the flagged coincidence set
  std::size_t nodes_checked = 0;
  std::size_t coincidence_nodes = 0;
};

ResidualReport pde_residual(const ObstacleSolution& sol, const CoefficientField& cf);

}  // namespace obstacle
