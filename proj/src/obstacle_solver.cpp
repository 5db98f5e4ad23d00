#include "obstacle/obstacle_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace obstacle {

namespace {

int ipow3(int n) { return n == 1 ? 3 : (n == 2 ? 9 : 27); }

// Stencil slot of a shift in {-1,0,1}^n, axis 0 fastest.
int slot(const std::array<int, 3>& shift, int n) {
  int s = 0;
  int mul = 1;
  for (int k = 0; k < n; ++k) {
    s += (shift[k] + 1) * mul;
    mul *= 3;
  }
  return s;
}

}  // namespace

DiscreteEnergy::DiscreteEnergy(Grid grid, std::vector<double> coeff, std::vector<double> weight,
                               std::vector<double> forcing)
    : grid_(std::move(grid)),
      weight_(std::move(weight)),
      forcing_(std::move(forcing)) {
  const int n = grid_.dim();
  stencil_size_ = ipow3(n);
  center_ = slot({0, 0, 0}, n);
  offsets_.resize(stencil_size_);
  shifts_.resize(stencil_size_);
  for (int s = 0; s < stencil_size_; ++s) {
    std::array<int, 3> shift{0, 0, 0};
    int rest = s;
    std::ptrdiff_t off = 0;
    for (int k = 0; k < n; ++k) {
      shift[k] = rest % 3 - 1;
      rest /= 3;
      off += shift[k] * static_cast<std::ptrdiff_t>(grid_.stride(k));
    }
    shifts_[s] = shift;
    offsets_[s] = off;
  }
  std::vector<bool> used(stencil_size_, false);
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    for (int s = 0; s < stencil_size_; ++s) {
      if (coeff[i * stencil_size_ + s] != 0.0) used[s] = true;
    }
  }
  for (int s = 0; s < stencil_size_; ++s) {
    if (!used[s]) continue;
    active_.push_back(s);
    int nonzero = 0;
    for (int k = 0; k < n; ++k) nonzero += shifts_[s][k] != 0;
    if (nonzero > 1) cross_terms_ = true;
  }
  slot_to_active_.assign(stencil_size_, -1);
  for (std::size_t a = 0; a < active_.size(); ++a) {
    slot_to_active_[active_[a]] = static_cast<int>(a);
    active_offsets_.push_back(offsets_[active_[a]]);
  }
  const std::size_t na = active_.size();
  packed_.resize(grid_.size() * na);
  diagonal_.resize(grid_.size());
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    for (std::size_t a = 0; a < na; ++a) packed_[i * na + a] = coeff[i * stencil_size_ + active_[a]];
    diagonal_[i] = coeff[i * stencil_size_ + center_];
  }
}

double DiscreteEnergy::coefficient(std::size_t i, int s) const {
  const int a = slot_to_active_[s];
  return a < 0 ? 0.0 : packed_[i * active_.size() + a];
}

double DiscreteEnergy::apply_row(std::size_t i, std::span<const double> u) const {
  if (!grid_.is_boundary(i)) return apply_interior(i, u);
  const auto idx = grid_.multi_index(i);
  const int n = grid_.dim();
  double acc = 0.0;
  const std::size_t na = active_.size();
  for (std::size_t a = 0; a < na; ++a) {
    const int s = active_[a];
    bool inside = true;
    for (int k = 0; k < n; ++k) {
      const int j = idx[k] + shifts_[s][k];
      if (j < 0 || j >= grid_.nodes(k)) inside = false;
    }
    if (inside) acc += packed_[i * na + a] * u[i + offsets_[s]];
  }
  return acc;
}

double DiscreteEnergy::energy(std::span<const double> u) const {
  double quad = 0.0;
  double lin = 0.0;
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    quad += u[i] * apply_row(i, u);
    lin += weight_[i] * forcing_[i] * u[i];
  }
  return quad + 2.0 * lin;
}

double DiscreteEnergy::divergence(std::size_t i, std::span<const double> u) const {
  return -apply_row(i, u) / weight_[i];
}

double DiscreteEnergy::max_forcing() const {
  double m = 0.0;
  for (double f : forcing_) m = std::max(m, std::abs(f));
  return m;
}

DiscreteEnergy assemble(const CoefficientField& cf, const Grid& grid) {
  const int n = grid.dim();
  if (cf.dim != n) throw LabError(ErrorCode::InvalidArgument, "dimension mismatch");
  for (int k = 0; k < n; ++k) {
    if (grid.nodes(k) < 5) {
      throw LabError(ErrorCode::GridTooCoarse, "need at least 3 interior nodes per axis");
    }
  }
  const int ssize = ipow3(n);
  const int corners = 1 << n;
  const double corner_volume = grid.cell_volume() / corners;
  std::vector<double> coeff(grid.size() * ssize, 0.0);

  std::array<int, 3> cells{1, 1, 1};
  for (int k = 0; k < n; ++k) cells[k] = grid.nodes(k) - 1;

  std::array<int, 3> base{0, 0, 0};
  for (base[2] = 0; base[2] < cells[2]; ++base[2]) {
    for (base[1] = 0; base[1] < cells[1]; ++base[1]) {
      for (base[0] = 0; base[0] < cells[0]; ++base[0]) {
        Vec center(n);
        for (int k = 0; k < n; ++k) center[k] = grid.coordinate(k, base[k]) + 0.5 * grid.spacing(k);
        const Mat a_center = cf.A(center);
        for (int c = 0; c < corners; ++c) {
          std::array<int, 3> p = base;
          for (int k = 0; k < n; ++k) p[k] += (c >> k) & 1;
          const Vec xp = grid.point(p);
          // Corner form <M g, g>, g_k = sign_k (u[q_k] - u[p]) / h_k.
          Mat m = a_center;
          std::array<std::array<int, 3>, 3> q{};
          std::array<double, 3> scale{};
          for (int k = 0; k < n; ++k) {
            q[k] = p;
            const bool upper = (c >> k) & 1;
            q[k][k] += upper ? -1 : 1;
            scale[k] = (upper ? -1.0 : 1.0) / grid.spacing(k);
            Vec mid = xp;
            mid[k] += 0.5 * (upper ? -grid.spacing(k) : grid.spacing(k));
            m(k, k) = cf.A(mid)(k, k);
          }
          // Local node set: p and q_0..q_{n-1}; g = D u_local with
          // D(k, 0) = -scale_k, D(k, k+1) = scale_k.
          std::array<std::array<int, 3>, 4> nodes{};
          nodes[0] = p;
          for (int k = 0; k < n; ++k) nodes[k + 1] = q[k];
          Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 4> dm(n, n + 1);
          dm.setZero();
          for (int k = 0; k < n; ++k) {
            dm(k, 0) = -scale[k];
            dm(k, k + 1) = scale[k];
          }
          const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 4, 4> local =
              corner_volume * dm.transpose() * m * dm;
          for (int a = 0; a <= n; ++a) {
            const std::size_t ia = grid.linear_index(nodes[a]);
            for (int b = 0; b <= n; ++b) {
              std::array<int, 3> shift{0, 0, 0};
              for (int k = 0; k < n; ++k) shift[k] = nodes[b][k] - nodes[a][k];
              coeff[ia * ssize + slot(shift, n)] += local(a, b);
            }
          }
        }
      }
    }
  }

  std::vector<double> weight(grid.size());
  std::vector<double> forcing(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    weight[i] = grid.node_weight(i);
    forcing[i] = cf.f(grid.point(i));
  }
  return DiscreteEnergy(grid, std::move(coeff), std::move(weight), std::move(forcing));
}

double optimal_omega(const Grid& grid) {
  double num = 0.0;
  double den = 0.0;
  for (int k = 0; k < grid.dim(); ++k) {
    const double h2 = 1.0 / (grid.spacing(k) * grid.spacing(k));
    num += std::cos(std::numbers::pi / (grid.nodes(k) - 1)) * h2;
    den += h2;
  }
  const double rho = num / den;
  return 2.0 / (1.0 + std::sqrt(1.0 - rho * rho));
}

double positivity_threshold(double tol, double h, double max_f) {
  return std::max(tol, h * h) * max_f;
}

namespace {

// Iterates over interior nodes of one colour. With two colours the colour is
// the parity of the index sum; with 2^n colours bit k is the parity of axis k.
template <typename Fn>
void for_colour(const Grid& grid, int colour, bool two_colour, Fn&& fn) {
  const int n = grid.dim();
  const int n0 = grid.nodes(0);
  const int n1 = n > 1 ? grid.nodes(1) : 3;
  const int n2 = n > 2 ? grid.nodes(2) : 3;
  const int k_lo = n > 2 ? 1 : 0;
  const int k_hi = n > 2 ? n2 - 2 : 0;
  const int j_lo = n > 1 ? 1 : 0;
  const int j_hi = n > 1 ? n1 - 2 : 0;
  for (int k = k_lo; k <= k_hi; ++k) {
    if (!two_colour && n > 2 && (k & 1) != ((colour >> 2) & 1)) continue;
    for (int j = j_lo; j <= j_hi; ++j) {
      if (!two_colour && n > 1 && (j & 1) != ((colour >> 1) & 1)) continue;
      const int parity = two_colour ? ((colour + j + k) & 1) : (colour & 1);
      const int i_start = parity == 1 ? 1 : 2;
      std::size_t row = 0;
      if (n > 1) row += static_cast<std::size_t>(j) * grid.stride(1);
      if (n > 2) row += static_cast<std::size_t>(k) * grid.stride(2);
      for (int i = i_start; i <= n0 - 2; i += 2) fn(row + static_cast<std::size_t>(i));
    }
  }
}

struct Residuals {
  double projected = 0.0;
};

Residuals fill_residuals(const DiscreteEnergy& de, std::span<const double> u,
                         std::vector<double>& pde, std::vector<double>& comp) {
  const Grid& grid = de.grid();
  pde.assign(grid.size(), 0.0);
  comp.assign(grid.size(), 0.0);
  Residuals r;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.is_boundary(i)) continue;
    const double res = de.forcing(i) - de.divergence(i, u);
    pde[i] = res;
    comp[i] = std::min(u[i], res);
    r.projected = std::max(r.projected, std::abs(comp[i]));
  }
  return r;
}

void unconstrained_solve(const DiscreteEnergy& de, std::vector<double>& u, double rel_tol) {
  const Grid& grid = de.grid();
  const std::size_t size = grid.size();
  std::vector<std::size_t> interior;
  interior.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    if (!grid.is_boundary(i)) interior.push_back(i);
  }
  std::vector<double> r(size, 0.0), z(size, 0.0), p(size, 0.0), q(size, 0.0);
  for (std::size_t i : interior) u[i] = 0.0;
  double rz = 0.0;
  double r0 = 0.0;
  for (std::size_t i : interior) {
    r[i] = -de.weight(i) * de.forcing(i) - de.apply_interior(i, u);
    z[i] = r[i] / de.diagonal(i);
    p[i] = z[i];
    rz += r[i] * z[i];
    r0 += r[i] * r[i];
  }
  r0 = std::sqrt(r0);
  if (r0 == 0.0) return;
  int max_n = 0;
  for (int k = 0; k < grid.dim(); ++k) max_n = std::max(max_n, grid.nodes(k));
  const int max_iter = 20 * max_n + 1000;
  for (int it = 0; it < max_iter; ++it) {
    double pq = 0.0;
    for (std::size_t i : interior) {
      q[i] = de.apply_interior(i, p);
      pq += p[i] * q[i];
    }
    const double step = rz / pq;
    double rr = 0.0;
    double rz_new = 0.0;
    for (std::size_t i : interior) {
      u[i] += step * p[i];
      r[i] -= step * q[i];
      z[i] = r[i] / de.diagonal(i);
      rr += r[i] * r[i];
      rz_new += r[i] * z[i];
    }
    if (std::sqrt(rr) <= rel_tol * r0) break;
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i : interior) p[i] = z[i] + beta * p[i];
  }
}

}  // namespace

ObstacleSolution solve(const DiscreteEnergy& de, const ScalarFn& g, double tol, int max_iter,
                       const SolverOptions& options) {
  if (!(tol > 0.0)) throw LabError(ErrorCode::InvalidArgument, "tolerance must be positive");
  const Grid& grid = de.grid();
  const std::size_t size = grid.size();
  std::vector<double> u(size, 0.0);
  for (std::size_t i = 0; i < size; ++i) {
    if (!grid.is_boundary(i)) continue;
    u[i] = g(grid.point(i));
    if (u[i] < 0.0) {
      throw LabError(ErrorCode::InfeasibleBoundary, "boundary data is negative at a node");
    }
  }

  switch (options.initial) {
    case InitialIterate::Unconstrained:
      unconstrained_solve(de, u, options.cg_relative_tol);
      break;
    case InitialIterate::Zero:
      break;
    case InitialIterate::Given:
      if (options.initial_values.size() != size) {
        throw LabError(ErrorCode::InvalidArgument, "initial iterate has the wrong size");
      }
      for (std::size_t i = 0; i < size; ++i) {
        if (!grid.is_boundary(i)) u[i] = options.initial_values[i];
      }
      break;
  }
  for (std::size_t i = 0; i < size; ++i) {
    if (!grid.is_boundary(i)) u[i] = std::max(0.0, u[i]);
  }

  const double omega = options.omega_auto ? optimal_omega(grid) : options.omega;
  if (!(omega > 0.0 && omega < 2.0)) {
    throw LabError(ErrorCode::InvalidArgument, "relaxation parameter must lie in (0, 2)");
  }
  const bool two_colour = !de.has_cross_terms();
  const int colours = two_colour ? 2 : (1 << grid.dim());

  ObstacleSolution sol{.grid = grid, .tol = tol, .omega = omega};
  if (options.record_energy) sol.energy_history.push_back(de.energy(u));

  std::vector<double> inv_diag(size, 0.0), inv_weight(size, 0.0), load(size, 0.0);
  for (std::size_t i = 0; i < size; ++i) {
    inv_diag[i] = 1.0 / de.diagonal(i);
    inv_weight[i] = 1.0 / de.weight(i);
    load[i] = de.weight(i) * de.forcing(i);
  }

  std::vector<double> pde, comp;
  int it = 0;
  bool converged = false;
  // The starting iterate may already be the solution.
  if (fill_residuals(de, u, pde, comp).projected <= tol) converged = true;
  while (!converged && it < max_iter) {
    double sweep_residual = 0.0;
    for (int c = 0; c < colours; ++c) {
      for_colour(grid, c, two_colour, [&](std::size_t i) {
        const double rho = -de.apply_interior(i, u) - load[i];
        const double natural = std::min(u[i], -rho * inv_weight[i]);
        sweep_residual = std::max(sweep_residual, std::abs(natural));
        u[i] = std::max(0.0, u[i] + omega * rho * inv_diag[i]);
      });
    }
    ++it;
    if (options.record_energy) sol.energy_history.push_back(de.energy(u));
    if (sweep_residual <= tol) {
      converged = fill_residuals(de, u, pde, comp).projected <= tol;
    }
  }

  const Residuals final_res = fill_residuals(de, u, pde, comp);
  sol.u = std::move(u);
  sol.iterations = it;
  sol.converged = final_res.projected <= tol;
  sol.projected_residual = final_res.projected;
  sol.pde_residual = std::move(pde);
  sol.complementarity = std::move(comp);
  sol.energy = de.energy(sol.u);
  sol.positivity_threshold = positivity_threshold(tol, grid.max_spacing(), de.max_forcing());
  sol.positive.resize(size);
  for (std::size_t i = 0; i < size; ++i) {
    sol.positive[i] = sol.u[i] > sol.positivity_threshold ? 1 : 0;
  }
  return sol;
}

ObstacleSolution make_solution(const DiscreteEnergy& de, std::vector<double> u, double tol) {
  const Grid& grid = de.grid();
  if (u.size() != grid.size()) {
    throw LabError(ErrorCode::InvalidArgument, "nodal field size does not match the grid");
  }
  ObstacleSolution sol{.grid = grid, .converged = true, .tol = tol};
  std::vector<double> pde, comp;
  const Residuals res = fill_residuals(de, u, pde, comp);
  sol.u = std::move(u);
  sol.projected_residual = res.projected;
  sol.pde_residual = std::move(pde);
  sol.complementarity = std::move(comp);
  sol.energy = de.energy(sol.u);
  sol.positivity_threshold = positivity_threshold(tol, grid.max_spacing(), de.max_forcing());
  sol.positive.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    sol.positive[i] = sol.u[i] > sol.positivity_threshold ? 1 : 0;
  }
  return sol;
}

ResidualReport pde_residual(const ObstacleSolution& sol, const CoefficientField& cf) {
  (void)cf;
  const Grid& grid = sol.grid;
  const int n = grid.dim();
  ResidualReport rep;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.is_boundary(i)) continue;
    if (!sol.positive[i]) {
      rep.coincidence_norm = std::max(rep.coincidence_norm, std::abs(sol.u[i]));
      ++rep.coincidence_nodes;
      continue;
    }
    // Skip nodes with a coincidence node within two grid steps per axis.
    const auto idx = grid.multi_index(i);
    bool near = false;
    std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int k = 0; k < n; ++k) {
      lo[k] = std::max(0, idx[k] - 2);
      hi[k] = std::min(grid.nodes(k) - 1, idx[k] + 2);
    }
    for (int c = lo[2]; c <= hi[2] && !near; ++c) {
      for (int b = lo[1]; b <= hi[1] && !near; ++b) {
        for (int a = lo[0]; a <= hi[0] && !near; ++a) {
          const std::size_t j = grid.linear_index({a, b, c});
          if (!grid.is_boundary(j) && !sol.positive[j]) near = true;
        }
      }
    }
    if (near) continue;
    rep.pde_residual = std::max(rep.pde_residual, std::abs(sol.pde_residual[i]));
    ++rep.nodes_checked;
  }
  return rep;
}

}  // namespace obstacle
