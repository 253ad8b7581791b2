#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "avgerr/errors.hpp"
#include "avgerr/series.hpp"

namespace avgerr {

/// Kuramoto-Sivashinsky run parameters on the periodic domain [0, L).
///
/// Grid x_j = j L / n_modes, wavenumbers k_n = 2 pi n / L.
struct KsConfig {
  double domain_length = 200.0;
  std::size_t n_modes = 512;
  double dt = 0.2;
  std::size_t n_steps = 20000;
  std::uint64_t seed = 1;
  std::size_t sample_stride = 1;
  /// Amplitude of the white-noise term in the initial field.
  double noise_amplitude = 0.2;
};

void validate(const KsConfig& cfg);

/// Spectral state of u. Only wavenumbers n = 0..n_modes/2 are stored; the
/// negative half is the complex conjugate, so u is real by construction.
/// Coefficients are normalised so that u(x_j) = sum_n u_n exp(i k_n x_j).
struct KsState {
  std::vector<std::complex<double>> half_spectrum;
  double time = 0.0;
  std::size_t step = 0;

  /// All n_modes coefficients in FFT order (0, 1, ..., N/2, -N/2+1, ..., -1).
  [[nodiscard]] std::vector<std::complex<double>> full_spectrum() const;
};

/// The integrator hit a non-finite state.
class KsBlowUp : public NumericalFailure {
 public:
  KsBlowUp(const std::string& what, std::size_t step) : NumericalFailure(what), step_(step) {}
  [[nodiscard]] std::size_t step() const noexcept { return step_; }

 private:
  std::size_t step_;
};

/// Highest wavenumber index kept by the 2/3 dealiasing rule.
[[nodiscard]] std::size_t ks_dealias_cutoff(std::size_t n_modes);

/// Pseudospectral KS integrator holding FFT plans and scratch buffers.
///
/// Time stepping is the ARS(3,4,3) implicit-explicit Runge-Kutta scheme
/// (Ascher, Ruuth & Spiteri 1997): the diagonal linear operator k^2 - k^4 is
/// treated by the L-stable, stiffly accurate SDIRK part and the dealiased
/// nonlinear term -(1/2) d/dx (u^2) explicitly. Third order overall.
///
/// The mean mode receives neither linear growth nor nonlinear forcing and so
/// stays at its initial value.
class KsIntegrator {
 public:
  explicit KsIntegrator(const KsConfig& cfg);
  ~KsIntegrator();
  KsIntegrator(const KsIntegrator&) = delete;
  KsIntegrator& operator=(const KsIntegrator&) = delete;
  KsIntegrator(KsIntegrator&&) noexcept;
  KsIntegrator& operator=(KsIntegrator&&) noexcept;

  /// Evaluates sin(0.5 pi x) + sin(0.85 pi x) + noise_amplitude * v on the grid, v ~ N(0, 1).
  [[nodiscard]] KsState initial_state() const;

  /// Grid values to spectral state (no dealiasing applied).
  [[nodiscard]] KsState from_physical(const std::vector<double>& u) const;
  [[nodiscard]] std::vector<double> to_physical(const KsState& state) const;

  /// Advances one dt; throws KsBlowUp when the new state is not finite.
  void step(KsState& state) const;

  /// (1/L) integral of u^2 by Parseval.
  [[nodiscard]] double energy(const KsState& state) const;

  [[nodiscard]] const KsConfig& config() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

[[nodiscard]] KsState ks_initial_field(const KsConfig& cfg);
/// Convenience single step; builds a fresh integrator per call.
[[nodiscard]] KsState ks_step(const KsState& state, const KsConfig& cfg);
[[nodiscard]] double ks_energy(const KsState& state, const KsConfig& cfg);

/// Records e(t) at step 0 and every sample_stride steps thereafter; the transient is kept.
[[nodiscard]] TimeSeries ks_run(const KsConfig& cfg);

}  // namespace avgerr
