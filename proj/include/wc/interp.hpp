#pragma once

#include <array>
#include <cmath>
#include <span>

#include "wc/configspace.hpp"

namespace wc {

enum class Interpolation { Linear, Cubic };

/// Interpolation stencil on the periodic cell-centred lattice: bilinear (two
/// points per axis) or 4-point Lagrange cubic per axis.
struct Stencil {
  std::array<std::size_t, 16> index;
  std::array<double, 16> weight;
  int count = 0;
};

inline Stencil stencil_at(const Grid& grid, const Point& q, Interpolation order = Interpolation::Linear) {
  const int width = order == Interpolation::Linear ? 2 : 4;
  std::array<std::array<std::size_t, 4>, 2> idx{};
  std::array<std::array<double, 4>, 2> w{};
  for (int a = 0; a < grid.dim(); ++a) {
    const auto& ax = grid.axis(a);
    double u = (q[a] - ax.lo) / ax.spacing() - 0.5;
    double f = std::floor(u);
    double t = u - f;
    long i0 = static_cast<long>(f) - (width == 4 ? 1 : 0);
    long n = static_cast<long>(ax.n);
    for (int p = 0; p < width; ++p) idx[a][p] = static_cast<std::size_t>((((i0 + p) % n) + n) % n);
    if (width == 2) {
      w[a] = {1.0 - t, t, 0.0, 0.0};
    } else {
      w[a] = {-t * (t - 1.0) * (t - 2.0) / 6.0, (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
              -(t + 1.0) * t * (t - 2.0) / 2.0, (t + 1.0) * t * (t - 1.0) / 6.0};
    }
  }
  Stencil s;
  if (grid.dim() == 1) {
    for (int p = 0; p < width; ++p) {
      s.index[p] = idx[0][p];
      s.weight[p] = w[0][p];
    }
    s.count = width;
  } else {
    for (int p = 0; p < width; ++p)
      for (int r = 0; r < width; ++r) {
        s.index[s.count] = grid.index(idx[0][p], idx[1][r]);
        s.weight[s.count] = w[0][p] * w[1][r];
        ++s.count;
      }
  }
  return s;
}

template <class T>
T interpolate(const Stencil& s, std::span<const T> field) {
  T v{};
  for (int i = 0; i < s.count; ++i) v += s.weight[i] * field[s.index[i]];
  return v;
}

template <class T>
T interpolate(const Grid& grid, std::span<const T> field, const Point& q) {
  return interpolate(stencil_at(grid, q), field);
}

}  // namespace wc
