#pragma once

#include <cstdint>
#include <vector>

#include "wc/configspace.hpp"
#include "wc/fft.hpp"
#include "wc/propagator.hpp"

namespace wc {

/// Node threshold relative to max(rho); cells below it are masked.
inline constexpr double kDefaultNodeFraction = 1e-12;

using Mask = std::vector<std::uint8_t>;
/// One real field per axis.
using VectorField = std::vector<std::vector<double>>;

struct FlowFrame {
  Grid grid;
  double time = 0.0;
  std::vector<double> rho;
  VectorField current;
  VectorField velocity;
  Mask node_mask;  // 1 where rho < eps_node
};

std::vector<double> density(const WaveField& psi);

/// j_a = (hbar / m_a) Im(psi* d_a psi), spectral derivative.
VectorField current(const WaveField& psi, const PhysicsParams& params);
VectorField current(const WaveField& psi, const PhysicsParams& params, const Fft& fft);

struct VelocityResult {
  VectorField velocity;
  Mask node_mask;
};

/// v = j / rho where rho >= eps_node; masked cells carry v = 0.
VelocityResult velocity(const Grid& grid, const std::vector<double>& rho, const VectorField& j,
                        double eps_node);

/// Absolute node threshold for a density field.
double node_threshold(const std::vector<double>& rho, double node_fraction = kDefaultNodeFraction);

FlowFrame flow_frame(const WaveField& psi, const PhysicsParams& params,
                     double node_fraction = kDefaultNodeFraction);
FlowFrame flow_frame(const WaveField& psi, const PhysicsParams& params, const Fft& fft,
                     double node_fraction = kDefaultNodeFraction);

struct PolarFields {
  std::vector<double> amplitude;  // R = sqrt(rho)
  std::vector<double> phase;      // S, unwrapped where possible
  Mask node_mask;
  /// Cells whose unwrapped phase is not path-independent (sits across a
  /// vortex branch cut or a nodal line).
  Mask unwrap_failed;
  std::size_t failed_count = 0;
};

/// Polar decomposition psi = R exp(iS). S is unwrapped cumulatively along
/// axis 0 on the first column, then along axis 1 for each row; in 2D the
/// orthogonal path order is used as a consistency check.
PolarFields polar_fields(const WaveField& psi, double node_fraction = kDefaultNodeFraction);

/// Phase winding (in units of 2 pi) of psi around a closed polyline, from
/// wrapped phase increments of the bilinearly interpolated field.
double phase_winding(const WaveField& psi, const std::vector<Point>& loop);

enum class Laplacian { Spectral, FiniteDifference4 };

struct QuantumPotential {
  std::vector<double> values;
  Mask node_mask;  // values are 0 on masked cells
};

/// Q = sum_a -(hbar^2 / 2 m_a) (d_a^2 sqrt(rho)) / sqrt(rho), masked on nodes.
/// The finite-difference route also masks cells whose 5-point stencil touches a node.
QuantumPotential quantum_potential(const Grid& grid, const std::vector<double>& rho,
                                   const PhysicsParams& params,
                                   double node_fraction = kDefaultNodeFraction,
                                   Laplacian method = Laplacian::Spectral);

struct ContinuityResidual {
  std::vector<double> field;
  double l2 = 0.0;
};

/// r = (rho_{k+1} - rho_{k-1}) / (2 dt_frame) + div j_k, for 1 <= k <= M-1.
ContinuityResidual continuity_residual(const FrameStore& store, std::size_t k);

/// Spectral divergence of a real vector field.
std::vector<double> divergence(const Fft& fft, const VectorField& field);

/// Fourth-order central difference along an axis on the periodic grid.
std::vector<double> fd4_derivative(const Grid& grid, const std::vector<double>& f, int axis);

}  // namespace wc
