#pragma once

#include <cmath>
#include <numbers>

#include "wc/configspace.hpp"
#include "wc/state.hpp"

namespace wc::test {

inline constexpr double pi = std::numbers::pi;

/// Width of a free Gaussian (std. dev. of |psi|^2) after time t.
inline double free_sigma(double sigma0, double t, double hbar = 1.0, double m = 1.0) {
  const double s = hbar * t / (2.0 * m * sigma0 * sigma0);
  return sigma0 * std::sqrt(1.0 + s * s);
}

/// Normalised Gaussian density with mean mu and std. dev. s.
inline double gauss_pdf(double x, double mu, double s) {
  return std::exp(-(x - mu) * (x - mu) / (2.0 * s * s)) / (s * std::sqrt(2.0 * pi));
}

inline WaveField gaussian_1d(const Grid& g, double c = 0.0, double sigma = 1.0, double k = 0.0) {
  return make_state(g, StateRecipe::gaussian({c}, {sigma}, {k}));
}

inline double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace wc::test
