#pragma once

#include <memory>
#include <span>
#include <vector>

#include "wc/configspace.hpp"

namespace wc {

/// FFTW-backed transforms over a Grid, in place on caller-owned buffers.
///
/// Plans are created once per instance; executing them is thread-safe, so one
/// Fft can serve concurrent readers working on distinct buffers.
class Fft {
 public:
  explicit Fft(const Grid& grid);
  ~Fft();
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;
  Fft(Fft&&) noexcept;
  Fft& operator=(Fft&&) noexcept;

  const Grid& grid() const { return grid_; }

  /// Unnormalised forward transform over all axes.
  void forward(std::span<cplx> data) const;
  /// Inverse transform over all axes, scaled by 1/N.
  void backward(std::span<cplx> data) const;
  /// 1D transforms along one axis of a 2D array (same conventions).
  void forward_axis(int axis, std::span<cplx> data) const;
  void backward_axis(int axis, std::span<cplx> data) const;

  /// Angular wavenumbers in FFT order for one axis.
  const std::vector<double>& wavenumbers(int axis) const { return k_.at(static_cast<std::size_t>(axis)); }

 private:
  struct Plans;
  Grid grid_;
  std::vector<std::vector<double>> k_;
  std::unique_ptr<Plans> plans_;
};

/// d/dq_axis of a periodic complex field; the Nyquist mode is dropped.
std::vector<cplx> spectral_derivative(const Fft& fft, std::span<const cplx> field, int axis);
/// Sum of second derivatives over all axes.
std::vector<cplx> spectral_laplacian(const Fft& fft, std::span<const cplx> field);

}  // namespace wc
