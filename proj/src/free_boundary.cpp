#include "obstacle/free_boundary.hpp"

#include "obstacle/functionals.hpp"
#include "obstacle/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace obstacle {

std::size_t FreeBoundarySet::coincidence_count() const {
  return static_cast<std::size_t>(std::count(coincidence.begin(), coincidence.end(), 1));
}

std::size_t FreeBoundarySet::positive_count() const {
  return static_cast<std::size_t>(std::count(positive.begin(), positive.end(), 1));
}

namespace {

// Uniform hash of points into cubes of side `cell`.
class PointHash {
 public:
  PointHash(double cell, int dim) : cell_(cell), dim_(dim) {}

  void insert(const Vec& x, std::size_t id) { cells_[key(cell_of(x))].push_back(id); }

  template <typename Fn>
  void for_neighbours(const Vec& x, Fn&& fn) const {
    const auto c = cell_of(x);
    const int rz = dim_ > 2 ? 1 : 0;
    const int ry = dim_ > 1 ? 1 : 0;
    for (int dz = -rz; dz <= rz; ++dz)
      for (int dy = -ry; dy <= ry; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const auto it = cells_.find(key({c[0] + dx, c[1] + dy, c[2] + dz}));
          if (it == cells_.end()) continue;
          for (std::size_t id : it->second) fn(id);
        }
  }

 private:
  std::array<long long, 3> cell_of(const Vec& x) const {
    std::array<long long, 3> c{0, 0, 0};
    for (int k = 0; k < dim_; ++k) c[k] = static_cast<long long>(std::floor(x[k] / cell_));
    return c;
  }
  static unsigned long long key(const std::array<long long, 3>& c) {
    return (static_cast<unsigned long long>(c[0] & 0x1FFFFF)) |
           (static_cast<unsigned long long>(c[1] & 0x1FFFFF) << 21) |
           (static_cast<unsigned long long>(c[2] & 0x1FFFFF) << 42);
  }
  double cell_;
  int dim_;
  std::unordered_map<unsigned long long, std::vector<std::size_t>> cells_;
};

struct UnionFind {
  std::vector<std::size_t> parent;
  explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

// Groups points whose link distance is at most `link`; groups are returned in
// order of their smallest member.
std::vector<std::vector<std::size_t>> clusters(const std::vector<GammaPoint>& pts, double link,
                                               int dim) {
  PointHash hash(link, dim);
  for (std::size_t i = 0; i < pts.size(); ++i) hash.insert(pts[i].x, i);
  UnionFind uf(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    hash.for_neighbours(pts[i].x, [&](std::size_t j) {
      if (j > i && (pts[i].x - pts[j].x).norm() <= link) uf.unite(i, j);
    });
  }
  std::vector<std::vector<std::size_t>> out;
  std::unordered_map<std::size_t, std::size_t> slot;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const std::size_t root = uf.find(i);
    auto it = slot.find(root);
    if (it == slot.end()) {
      slot.emplace(root, out.size());
      out.push_back({i});
    } else {
      out[it->second].push_back(i);
    }
  }
  return out;
}

GammaPoint merge(const std::vector<GammaPoint>& pts, const std::vector<std::size_t>& ids) {
  GammaPoint g = pts[ids.front()];
  if (ids.size() == 1) return g;
  Vec x = Vec::Zero(g.x.size());
  Vec nrm = Vec::Zero(g.x.size());
  int merged = 0;
  for (std::size_t id : ids) {
    x += pts[id].x;
    nrm += pts[id].normal;
    merged += pts[id].merged;
  }
  g.x = x / static_cast<double>(ids.size());
  const double len = nrm.norm();
  g.normal = len > 0.5 * static_cast<double>(ids.size()) ? Vec(nrm / len) : Vec(Vec::Zero(x.size()));
  g.merged = merged;
  return g;
}

// Vertex of the per-axis parabola through the minimum node and its two
// neighbours, kept within half a cell.
Vec contact_location(const Grid& grid, const std::vector<double>& u, std::size_t node) {
  const auto idx = grid.multi_index(node);
  Vec x = grid.point(node);
  for (int k = 0; k < grid.dim(); ++k) {
    if (idx[k] == 0 || idx[k] + 1 >= grid.nodes(k)) continue;
    const double um = u[node - grid.stride(k)], u0 = u[node], up = u[node + grid.stride(k)];
    const double curv = um - 2.0 * u0 + up;
    if (curv <= 0.0) continue;
    x[k] += grid.spacing(k) * std::clamp(0.5 * (um - up) / curv, -0.5, 0.5);
  }
  return x;
}

}  // namespace

FreeBoundarySet extract(const ObstacleSolution& sol) {
  const Grid& grid = sol.grid;
  const int n = grid.dim();
  FreeBoundarySet fbs{grid, sol.positivity_threshold, {}, {}, {}};
  fbs.coincidence.assign(grid.size(), 0);
  fbs.positive.assign(grid.size(), 0);
  std::size_t interior = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid.is_boundary(i)) continue;
    ++interior;
    if (sol.u[i] > fbs.threshold) {
      fbs.positive[i] = 1;
    } else {
      fbs.coincidence[i] = 1;
    }
  }
  if (interior == 0) throw LabError(ErrorCode::EmptyInterior, "grid has no interior nodes");

  const FieldSampler sampler(grid, sol.u);
  const double thr = fbs.threshold;
  const double h = grid.max_spacing();

  // Connected components of the coincidence set (face neighbours). A
  // component whose exact zeros (projected nodes) span at most two cells is an
  // isolated contact: the nodes around it are merely below the threshold.
  UnionFind uf(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!fbs.coincidence[i]) continue;
    const auto idx = grid.multi_index(i);
    for (int k = 0; k < n; ++k) {
      if (idx[k] + 1 < grid.nodes(k) && fbs.coincidence[i + grid.stride(k)]) uf.unite(i, i + grid.stride(k));
    }
  }
  struct Component {
    std::array<int, 3> lo{}, hi{};
    bool has_zero = false;
    std::size_t argmin = 0;
  };
  std::unordered_map<std::size_t, Component> comps;
  const double zero = 1e-3 * thr;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!fbs.coincidence[i]) continue;
    const std::size_t root = uf.find(i);
    auto [it, fresh] = comps.try_emplace(root);
    Component& c = it->second;
    if (fresh || sol.u[i] < sol.u[c.argmin]) c.argmin = i;
    if (sol.u[i] > zero) continue;
    const auto idx = grid.multi_index(i);
    if (!c.has_zero) {
      c.lo = c.hi = idx;
      c.has_zero = true;
    }
    for (int k = 0; k < n; ++k) {
      c.lo[k] = std::min(c.lo[k], idx[k]);
      c.hi[k] = std::max(c.hi[k], idx[k]);
    }
  }
  auto isolated_component = [&](const Component& c) {
    if (!c.has_zero) return true;
    for (int k = 0; k < n; ++k)
      if (c.hi[k] - c.lo[k] > 2) return false;
    return true;
  };
  std::unordered_map<std::size_t, std::size_t> isolated_slot;  // component root -> index in fbs.gamma

  std::vector<GammaPoint> raw;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!fbs.coincidence[i]) continue;
    const auto idx = grid.multi_index(i);
    for (int k = 0; k < n; ++k) {
      for (int dir = -1; dir <= 1; dir += 2) {
        const int j1 = idx[k] + dir;
        if (j1 < 0 || j1 >= grid.nodes(k)) continue;
        const std::size_t n1 = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) +
                                                         dir * static_cast<std::ptrdiff_t>(grid.stride(k)));
        if (sol.u[n1] <= thr) continue;
        const std::size_t root = uf.find(i);
        const Component& comp = comps.at(root);
        if (isolated_component(comp)) {
          auto [slot, fresh] = isolated_slot.try_emplace(root, fbs.gamma.size());
          if (fresh) {
            GammaPoint g;
            g.x = contact_location(grid, sol.u, comp.argmin);
            g.normal = Vec::Zero(n);
            g.node = n1;
            g.merged = 0;
            g.isolated = true;
            fbs.gamma.push_back(g);
          }
          ++fbs.gamma[slot->second].merged;
          continue;
        }
        const double h = grid.spacing(k);
        // Distance from the coincidence node towards n1.
        double t = h * std::clamp((thr - sol.u[i]) / (sol.u[n1] - sol.u[i]), 0.0, 1.0);
        const int j2 = idx[k] + 2 * dir;
        if (j2 >= 0 && j2 < grid.nodes(k)) {
          const std::size_t n2 = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(n1) +
                                                           dir * static_cast<std::ptrdiff_t>(grid.stride(k)));
          const double s1 = std::sqrt(sol.u[n1]);
          const double s2 = std::sqrt(std::max(0.0, sol.u[n2]));
          if (s2 > s1) {
            const double t0 = h - s1 * h / (s2 - s1);
            if (t0 >= -2.0 * h && t0 <= h) t = t0;
          }
        }
        GammaPoint g;
        g.x = grid.point(idx);
        g.x[k] += dir * t;
        g.node = n1;
        const Vec grad = sampler.node_gradient(n1);
        const double len = grad.norm();
        g.normal = len > 0.0 ? Vec(grad / len) : Vec(Vec::Zero(n));
        raw.push_back(g);
      }
    }
  }
  // Duplicate crossings of the same interface point.
  for (const auto& ids : clusters(raw, 0.25 * h, n)) fbs.gamma.push_back(merge(raw, ids));
  return fbs;
}

double sphere_sup(const FieldSampler& u, const Vec& x0, double r, double phase) {
  const Grid& grid = u.grid();
  const int n = grid.dim();
  const int res = std::max(64, static_cast<int>(std::ceil(2.0 * 3.141592653589793 * r / grid.max_spacing())));
  const QuadratureRule s = sphere_rule(n, res, phase);
  double best = -std::numeric_limits<double>::infinity();
  for (const Vec& p : s.points) best = std::max(best, u.value(x0 + r * p));
  return best;
}

GrowthReport quadratic_growth_check(const ObstacleSolution& sol, const FreeBoundarySet& fbs,
                                    const GrowthOptions& opts) {
  const Grid& grid = sol.grid;
  const double h = grid.max_spacing();
  GrowthReport rep;
  rep.radii = opts.radii.empty() ? radius_ladder(0.2, 4.0 * h) : opts.radii;
  std::sort(rep.radii.begin(), rep.radii.end());
  const double r_max = rep.radii.back();
  const FieldSampler sampler(grid, sol.u);
  const int stride = std::max(1, opts.stride);
  for (std::size_t i = 0; i < fbs.gamma.size(); i += stride) {
    if (grid.domain().distance_to_boundary(fbs.gamma[i].x) > 2.0 * r_max) rep.points.push_back(i);
  }
  if (rep.points.empty()) {
    throw LabError(ErrorCode::RadiusOutOfDomain,
                   "no free-boundary point is farther than 2 max(r) from the boundary");
  }
  rep.radius_ratio.assign(rep.radii.size(), std::numeric_limits<double>::infinity());
  rep.theta_hat = std::numeric_limits<double>::infinity();
  for (std::size_t id : rep.points) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (std::size_t k = 0; k < rep.radii.size(); ++k) {
      const double r = rep.radii[k];
      const double ratio = sphere_sup(sampler, fbs.gamma[id].x, r, opts.phase) / (r * r);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
      rep.radius_ratio[k] = std::min(rep.radius_ratio[k], ratio);
    }
    rep.point_ratio.push_back(lo);
    rep.theta_hat = std::min(rep.theta_hat, lo);
    if (hi > 0.0) rep.spread = std::max(rep.spread, (hi - lo) / hi);
  }
  rep.pass = rep.theta_hat >= opts.min_ratio;
  return rep;
}

}  // namespace obstacle
