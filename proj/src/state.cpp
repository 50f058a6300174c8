#include "wc/state.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace wc {

namespace {

constexpr double kMarginSigmas = 4.0;

double hermite(int n, double x) {
  double h0 = 1.0;
  if (n == 0) return h0;
  double h1 = 2.0 * x;
  for (int k = 1; k < n; ++k) {
    double h2 = 2.0 * x * h1 - 2.0 * k * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

std::vector<double> padded(std::vector<double> v, std::size_t n, double fill) {
  if (v.empty()) v.assign(n, fill);
  if (v.size() != n) throw Error("state recipe: parameter vectors differ in length");
  return v;
}

}  // namespace

StateRecipe StateRecipe::gaussian(std::vector<double> center, std::vector<double> sigma,
                                  std::vector<double> momentum) {
  const std::size_t d = center.size();
  if (d < 1 || d > 2) throw Error("gaussian: dimension must be 1 or 2");
  sigma = padded(std::move(sigma), d, 1.0);
  momentum = padded(std::move(momentum), d, 0.0);
  Box box;
  for (std::size_t a = 0; a < d; ++a) {
    if (!(sigma[a] > 0.0)) throw Error("gaussian: sigma must be > 0");
    box.emplace_back(center[a] - kMarginSigmas * sigma[a], center[a] + kMarginSigmas * sigma[a]);
  }
  auto eval = [center, sigma, momentum](const Point& q) {
    cplx v = 1.0;
    for (std::size_t a = 0; a < center.size(); ++a) {
      double s2 = sigma[a] * sigma[a];
      double u = q[a] - center[a];
      double pref = std::pow(2.0 * std::numbers::pi * s2, -0.25);
      v *= pref * std::exp(cplx(-u * u / (4.0 * s2), momentum[a] * q[a]));
    }
    return v;
  };
  return StateRecipe(static_cast<int>(d), eval, box);
}

StateRecipe StateRecipe::harmonic_eigenstate(std::vector<int> n, double omega,
                                             std::vector<double> center, std::vector<double> masses,
                                             double hbar) {
  const std::size_t d = n.size();
  if (d < 1 || d > 2) throw Error("harmonic_eigenstate: dimension must be 1 or 2");
  if (!(omega > 0.0) || !(hbar > 0.0)) throw Error("harmonic_eigenstate: omega and hbar must be > 0");
  center = padded(std::move(center), d, 0.0);
  masses = padded(std::move(masses), d, 1.0);
  Box box;
  std::vector<double> alpha(d), pref(d);
  for (std::size_t a = 0; a < d; ++a) {
    if (n[a] < 0) throw Error("harmonic_eigenstate: quantum number must be >= 0");
    alpha[a] = std::sqrt(masses[a] * omega / hbar);
    double sigma = std::sqrt(hbar / (2.0 * masses[a] * omega));
    double reach = kMarginSigmas * sigma * std::sqrt(2.0 * n[a] + 1.0);
    box.emplace_back(center[a] - reach, center[a] + reach);
    pref[a] = std::pow(masses[a] * omega / (std::numbers::pi * hbar), 0.25) /
              std::sqrt(std::pow(2.0, n[a]) * std::tgamma(n[a] + 1.0));
  }
  auto eval = [n, center, alpha, pref](const Point& q) {
    double v = 1.0;
    for (std::size_t a = 0; a < n.size(); ++a) {
      double xi = alpha[a] * (q[a] - center[a]);
      v *= pref[a] * std::exp(-0.5 * xi * xi) * hermite(n[a], xi);
    }
    return cplx(v, 0.0);
  };
  return StateRecipe(static_cast<int>(d), eval, box);
}

StateRecipe StateRecipe::plane_wave(std::vector<double> k, cplx amplitude) {
  const std::size_t d = k.size();
  if (d < 1 || d > 2) throw Error("plane_wave: dimension must be 1 or 2");
  auto eval = [k, amplitude](const Point& q) {
    double phase = 0.0;
    for (std::size_t a = 0; a < k.size(); ++a) phase += k[a] * q[a];
    return amplitude * std::exp(cplx(0.0, phase));
  };
  StateRecipe r(static_cast<int>(d), eval, std::nullopt);
  r.wavevector_ = k;
  r.extended_ = true;
  return r;
}

StateRecipe StateRecipe::vortex(Point center, double sigma, int winding) {
  if (!(sigma > 0.0)) throw Error("vortex: sigma must be > 0");
  if (winding < 0) throw Error("vortex: winding must be >= 0");
  double s2 = sigma * sigma;
  double norm2 = std::numbers::pi * std::pow(2.0 * s2, winding + 1) * std::tgamma(winding + 1.0);
  double pref = 1.0 / std::sqrt(norm2);
  double reach = (kMarginSigmas + std::sqrt(static_cast<double>(winding))) * sigma;
  Box box{{center[0] - reach, center[0] + reach}, {center[1] - reach, center[1] + reach}};
  auto eval = [center, s2, winding, pref](const Point& q) {
    cplx w(q[0] - center[0], q[1] - center[1]);
    double r2 = std::norm(w);
    cplx pw = 1.0;
    for (int i = 0; i < winding; ++i) pw *= w;
    return pref * pw * std::exp(-r2 / (4.0 * s2));
  };
  return StateRecipe(2, eval, box);
}

StateRecipe StateRecipe::superposition(std::vector<std::pair<cplx, StateRecipe>> terms) {
  if (terms.empty()) throw Error("superposition: no terms");
  const int d = terms.front().second.dim();
  std::optional<Box> box = Box{};
  bool extended = false;
  for (const auto& [w, r] : terms) {
    if (r.dim() != d) throw Error("superposition: terms have different dimensions");
    if (r.extended_ || !r.support_) {
      extended = true;
      continue;
    }
    if (box->empty()) {
      box = r.support_;
    } else {
      for (std::size_t a = 0; a < box->size(); ++a) {
        (*box)[a].first = std::min((*box)[a].first, (*r.support_)[a].first);
        (*box)[a].second = std::max((*box)[a].second, (*r.support_)[a].second);
      }
    }
  }
  auto eval = [terms](const Point& q) {
    cplx v = 0.0;
    for (const auto& [w, r] : terms) v += w * r(q);
    return v;
  };
  StateRecipe out(d, eval, extended ? std::nullopt : box);
  out.extended_ = extended;
  if (extended) {
    // Periodicity check covers every plane-wave term.
    for (const auto& [w, r] : terms)
      if (r.extended_) out.wavevector_.insert(out.wavevector_.end(), r.wavevector_.begin(),
                                              r.wavevector_.end());
  }
  return out;
}

StateRecipe StateRecipe::product(const StateRecipe& first, const StateRecipe& second) {
  if (first.dim() != 1 || second.dim() != 1) throw Error("product: both factors must be 1D");
  auto eval = [first, second](const Point& q) { return first({q[0], 0.0}) * second({q[1], 0.0}); };
  std::optional<Box> box;
  if (first.support_ && second.support_ && !first.extended_ && !second.extended_)
    box = Box{first.support_->front(), second.support_->front()};
  StateRecipe out(2, eval, box);
  out.extended_ = !box.has_value();
  return out;
}

WaveField make_state(const Grid& grid, const StateRecipe& recipe, double time) {
  if (recipe.dim() != grid.dim())
    throw Error("make_state: recipe is " + std::to_string(recipe.dim()) + "D but grid is " +
                std::to_string(grid.dim()) + "D");
  if (recipe.support_) {
    for (int a = 0; a < grid.dim(); ++a) {
      const auto& ax = grid.axis(a);
      auto [lo, hi] = (*recipe.support_)[static_cast<std::size_t>(a)];
      if (lo < ax.lo || hi > ax.hi)
        throw Error("make_state: state support [" + std::to_string(lo) + ", " +
                    std::to_string(hi) + ") leaks outside the 4-sigma margin of axis " +
                    std::to_string(a) + " [" + std::to_string(ax.lo) + ", " +
                    std::to_string(ax.hi) + ")");
    }
  }
  if (recipe.extended_ && !recipe.wavevector_.empty()) {
    const std::size_t d = static_cast<std::size_t>(grid.dim());
    for (std::size_t i = 0; i < recipe.wavevector_.size(); ++i) {
      const auto& ax = grid.axis(static_cast<int>(i % d));
      double cycles = recipe.wavevector_[i] * ax.length() / (2.0 * std::numbers::pi);
      if (std::abs(cycles - std::round(cycles)) > 1e-9)
        throw Error("make_state: plane wave k=" + std::to_string(recipe.wavevector_[i]) +
                    " is not periodic on axis " + std::to_string(i % d));
    }
  }
  WaveField psi(grid, time);
  for (std::size_t i = 0; i < psi.amp.size(); ++i) psi.amp[i] = recipe(grid.point(i));
  return psi;
}

}  // namespace wc
