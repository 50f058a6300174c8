#include "wc/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <numbers>

namespace wc {

namespace {

// The FFTW planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

fftw_complex* as_fftw(std::span<cplx> d) { return reinterpret_cast<fftw_complex*>(d.data()); }

}  // namespace

struct Fft::Plans {
  fftw_plan full_fwd = nullptr;
  fftw_plan full_bwd = nullptr;
  fftw_plan axis_fwd[2] = {nullptr, nullptr};
  fftw_plan axis_bwd[2] = {nullptr, nullptr};

  ~Plans() {
    std::lock_guard lock(planner_mutex());
    for (fftw_plan p : {full_fwd, full_bwd, axis_fwd[0], axis_fwd[1], axis_bwd[0], axis_bwd[1]})
      if (p) fftw_destroy_plan(p);
  }
};

Fft::Fft(const Grid& grid) : grid_(grid), plans_(std::make_unique<Plans>()) {
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  std::vector<cplx> scratch(grid.size());
  auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
  std::lock_guard lock(planner_mutex());
  if (grid.dim() == 1) {
    int n = static_cast<int>(grid.npoints(0));
    plans_->full_fwd = fftw_plan_dft_1d(n, buf, buf, FFTW_FORWARD, flags);
    plans_->full_bwd = fftw_plan_dft_1d(n, buf, buf, FFTW_BACKWARD, flags);
  } else {
    int n0 = static_cast<int>(grid.npoints(0));
    int n1 = static_cast<int>(grid.npoints(1));
    plans_->full_fwd = fftw_plan_dft_2d(n0, n1, buf, buf, FFTW_FORWARD, flags);
    plans_->full_bwd = fftw_plan_dft_2d(n0, n1, buf, buf, FFTW_BACKWARD, flags);
    // axis 0: n1 interleaved transforms of length n0
    plans_->axis_fwd[0] = fftw_plan_many_dft(1, &n0, n1, buf, nullptr, n1, 1, buf, nullptr, n1, 1,
                                             FFTW_FORWARD, flags);
    plans_->axis_bwd[0] = fftw_plan_many_dft(1, &n0, n1, buf, nullptr, n1, 1, buf, nullptr, n1, 1,
                                             FFTW_BACKWARD, flags);
    // axis 1: n0 contiguous transforms of length n1
    plans_->axis_fwd[1] = fftw_plan_many_dft(1, &n1, n0, buf, nullptr, 1, n1, buf, nullptr, 1, n1,
                                             FFTW_FORWARD, flags);
    plans_->axis_bwd[1] = fftw_plan_many_dft(1, &n1, n0, buf, nullptr, 1, n1, buf, nullptr, 1, n1,
                                             FFTW_BACKWARD, flags);
  }
  for (int a = 0; a < grid.dim(); ++a) {
    const auto& ax = grid.axis(a);
    std::vector<double> k(ax.n);
    const double base = 2.0 * std::numbers::pi / ax.length();
    const long n = static_cast<long>(ax.n);
    for (long j = 0; j < n; ++j) k[static_cast<std::size_t>(j)] = base * static_cast<double>(j < n / 2 ? j : j - n);
    k_.push_back(std::move(k));
  }
}

Fft::~Fft() = default;
Fft::Fft(Fft&&) noexcept = default;
Fft& Fft::operator=(Fft&&) noexcept = default;

void Fft::forward(std::span<cplx> data) const {
  if (data.size() != grid_.size()) throw Error("Fft: buffer size mismatch");
  fftw_execute_dft(plans_->full_fwd, as_fftw(data), as_fftw(data));
}

void Fft::backward(std::span<cplx> data) const {
  if (data.size() != grid_.size()) throw Error("Fft: buffer size mismatch");
  fftw_execute_dft(plans_->full_bwd, as_fftw(data), as_fftw(data));
  const double s = 1.0 / static_cast<double>(data.size());
  for (auto& z : data) z *= s;
}

void Fft::forward_axis(int axis, std::span<cplx> data) const {
  if (grid_.dim() == 1) return forward(data);
  if (data.size() != grid_.size()) throw Error("Fft: buffer size mismatch");
  fftw_execute_dft(plans_->axis_fwd[axis], as_fftw(data), as_fftw(data));
}

void Fft::backward_axis(int axis, std::span<cplx> data) const {
  if (grid_.dim() == 1) return backward(data);
  if (data.size() != grid_.size()) throw Error("Fft: buffer size mismatch");
  fftw_execute_dft(plans_->axis_bwd[axis], as_fftw(data), as_fftw(data));
  const double s = 1.0 / static_cast<double>(grid_.npoints(axis));
  for (auto& z : data) z *= s;
}

std::vector<cplx> spectral_derivative(const Fft& fft, std::span<const cplx> field, int axis) {
  const Grid& g = fft.grid();
  std::vector<cplx> buf(field.begin(), field.end());
  fft.forward(buf);
  const auto& k = fft.wavenumbers(axis);
  const std::size_t nyq = g.npoints(axis) / 2;
  for (std::size_t i = 0; i < buf.size(); ++i) {
    std::size_t j = g.unravel(i)[static_cast<std::size_t>(axis)];
    buf[i] *= (j == nyq) ? cplx(0.0) : cplx(0.0, k[j]);
  }
  fft.backward(buf);
  return buf;
}

std::vector<cplx> spectral_laplacian(const Fft& fft, std::span<const cplx> field) {
  const Grid& g = fft.grid();
  std::vector<cplx> buf(field.begin(), field.end());
  fft.forward(buf);
  for (std::size_t i = 0; i < buf.size(); ++i) {
    auto idx = g.unravel(i);
    double k2 = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      double kk = fft.wavenumbers(a)[idx[static_cast<std::size_t>(a)]];
      k2 += kk * kk;
    }
    buf[i] *= -k2;
  }
  fft.backward(buf);
  return buf;
}

}  // namespace wc
