#include "obstacle/grid_field.hpp"

#include <algorithm>
#include <cmath>

namespace obstacle {

FieldSampler::FieldSampler(const Grid& grid, std::span<const double> values, Interpolation interp)
    : grid_(grid), values_(values.begin(), values.end()), interp_(interp) {
  if (values_.size() != grid_.size()) {
    throw LabError(ErrorCode::InvalidArgument, "nodal field size does not match the grid");
  }
  const int n = grid_.dim();
  gradient_.assign(grid_.size() * n, 0.0);
  for (std::size_t i = 0; i < grid_.size(); ++i) {
    const auto idx = grid_.multi_index(i);
    for (int k = 0; k < n; ++k) {
      const std::size_t s = grid_.stride(k);
      const double h = grid_.spacing(k);
      const int last = grid_.nodes(k) - 1;
      double d;
      if (idx[k] == 0) {
        d = (-3.0 * values_[i] + 4.0 * values_[i + s] - values_[i + 2 * s]) / (2.0 * h);
      } else if (idx[k] == last) {
        d = (3.0 * values_[i] - 4.0 * values_[i - s] + values_[i - 2 * s]) / (2.0 * h);
      } else {
        d = (values_[i + s] - values_[i - s]) / (2.0 * h);
      }
      gradient_[i * n + k] = d;
    }
  }
}

FieldSampler::Stencil FieldSampler::stencil(const Vec& x) const {
  const int n = grid_.dim();
  std::array<std::array<std::size_t, 3>, 3> axis_index{};
  std::array<std::array<double, 3>, 3> axis_weight{};
  std::array<int, 3> axis_count{1, 1, 1};
  for (int k = 0; k < n; ++k) {
    const double t = (x[k] - grid_.domain().lower(k)) / grid_.spacing(k);
    const int last = grid_.nodes(k) - 1;
    if (interp_ == Interpolation::Quadratic) {
      const int c = std::clamp(static_cast<int>(std::lround(t)), 1, last - 1);
      const double s = t - c;
      axis_count[k] = 3;
      axis_index[k] = {static_cast<std::size_t>(c - 1), static_cast<std::size_t>(c),
                       static_cast<std::size_t>(c + 1)};
      axis_weight[k] = {0.5 * s * (s - 1.0), 1.0 - s * s, 0.5 * s * (s + 1.0)};
    } else {
      const int i0 = std::clamp(static_cast<int>(std::floor(t)), 0, last - 1);
      const double s = t - i0;
      axis_count[k] = 2;
      axis_index[k] = {static_cast<std::size_t>(i0), static_cast<std::size_t>(i0 + 1), 0};
      axis_weight[k] = {1.0 - s, s, 0.0};
    }
  }
  Stencil st;
  for (int c = 0; c < axis_count[2]; ++c) {
    for (int b = 0; b < axis_count[1]; ++b) {
      for (int a = 0; a < axis_count[0]; ++a) {
        std::size_t lin = axis_index[0][a] * grid_.stride(0);
        double w = axis_weight[0][a];
        if (n > 1) {
          lin += axis_index[1][b] * grid_.stride(1);
          w *= axis_weight[1][b];
        }
        if (n > 2) {
          lin += axis_index[2][c] * grid_.stride(2);
          w *= axis_weight[2][c];
        }
        st.index[st.count] = lin;
        st.weight[st.count] = w;
        ++st.count;
      }
    }
  }
  return st;
}

double FieldSampler::value(const Vec& x) const {
  const Stencil st = stencil(x);
  double v = 0.0;
  for (int s = 0; s < st.count; ++s) v += st.weight[s] * values_[st.index[s]];
  return v;
}

Vec FieldSampler::gradient(const Vec& x) const {
  double v;
  Vec g;
  sample(x, v, g);
  return g;
}

void FieldSampler::sample(const Vec& x, double& value, Vec& gradient) const {
  const int n = grid_.dim();
  const Stencil st = stencil(x);
  value = 0.0;
  gradient = Vec::Zero(n);
  for (int s = 0; s < st.count; ++s) {
    const double w = st.weight[s];
    const std::size_t i = st.index[s];
    value += w * values_[i];
    for (int k = 0; k < n; ++k) gradient[k] += w * gradient_[i * n + k];
  }
}

Vec FieldSampler::node_gradient(std::size_t linear) const {
  const int n = grid_.dim();
  Vec g(n);
  for (int k = 0; k < n; ++k) g[k] = gradient_[linear * n + k];
  return g;
}

}  // namespace obstacle
