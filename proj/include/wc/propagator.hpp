#pragma once

#include <cstddef>
#include <memory>
#include <vector>

#include "wc/configspace.hpp"
#include "wc/fft.hpp"

namespace wc {

/// Stored samples of a unitary evolution at a uniform frame interval.
struct FrameStore {
  std::vector<WaveField> frames;
  double dt_frame = 0.0;
  double dt_step = 0.0;
  std::size_t frame_stride = 1;
  PhysicsParams params;

  const Grid& grid() const { return frames.at(0).grid; }
  std::size_t size() const { return frames.size(); }
  double t0() const { return frames.at(0).time; }
  double t_end() const { return frames.back().time; }
  /// max_k | ||psi_k|| - ||psi_0|| | / ||psi_0||
  double norm_drift() const;
};

/// Symmetric (Strang) split-operator stepper for a fixed Hamiltonian.
///
/// One step is V/2, T/2, W, T/2, V/2 where V is the multiplicative potential,
/// T the kinetic term applied spectrally and W an optional pointer coupling
/// applied in the mixed (x, k_z) representation. Each factor is an exact
/// unitary phase, so the norm is preserved to roundoff.
class SplitOperator {
 public:
  SplitOperator(const Grid& grid, const PhysicsParams& params);

  const Grid& grid() const { return grid_; }
  const PhysicsParams& params() const { return params_; }
  const Fft& fft() const { return fft_; }

  /// Advances psi by n steps of size dt (dt may be negative).
  /// Throws NumericalError on NaN or a per-step relative norm change above
  /// step_norm_tolerance.
  void advance(WaveField& psi, double dt, std::size_t n_steps) const;

  double step_norm_tolerance = 1e-12;

 private:
  void prepare(double dt) const;

  Grid grid_;
  PhysicsParams params_;
  Fft fft_;
  std::vector<double> potential_;
  std::vector<double> kinetic_;    // hbar k^2 / 2m summed over axes, in FFT order
  std::vector<double> coupling_;   // g a(x) k_z in mixed representation, or empty
  mutable double prepared_dt_ = 0.0;
  mutable std::vector<cplx> half_v_, half_t_, full_w_;
};

/// Evolves psi0 for n_steps and stores every frame_stride-th state (the
/// initial state is frame 0). Requires dt_step > 0.
FrameStore evolve(const WaveField& psi0, const PhysicsParams& params, double dt_step,
                  std::size_t n_steps, std::size_t frame_stride);

/// Keeps every `every`-th frame of a store (the first frame always).
FrameStore subsample(const FrameStore& store, std::size_t every);

/// A constant Hamiltonian held for n_steps steps of dt.
struct EvolutionSegment {
  PhysicsParams params;
  double dt = 0.0;
  std::size_t n_steps = 0;
};

/// Piecewise-constant-in-time evolution; returns the final state.
WaveField evolve_piecewise(const WaveField& psi0, const std::vector<EvolutionSegment>& segments);

/// <psi|H|psi> / <psi|psi>. Includes kinetic, potential and coupling terms.
double expected_energy(const WaveField& psi, const PhysicsParams& params);

}  // namespace wc
