#include "avgerr/ks.hpp"

#include <array>
#include <cmath>
#include <mutex>
#include <numbers>
#include <string>

#include <fftw3.h>

#include "avgerr/rng.hpp"
#include "avgerr/summation.hpp"

namespace avgerr {

namespace {

// FFTW's planner is not thread-safe; execution of distinct plans is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

// ARS(3,4,3). Stage 0 is the explicit first stage; implicit diagonal gamma.
constexpr double kGamma = 0.4358665215084590;
constexpr double kB1 = -1.5 * kGamma * kGamma + 4.0 * kGamma - 0.25;
constexpr double kB2 = 1.5 * kGamma * kGamma - 5.0 * kGamma + 1.25;

constexpr std::array<std::array<double, 3>, 4> kExplicit{{
    {0.0, 0.0, 0.0},
    {kGamma, 0.0, 0.0},
    {0.3212788860286278, 0.3966543747256017, 0.0},
    {-0.1058582960718797, 0.5529291480359398, 0.5529291480359398},
}};
// Implicit coefficients a_ij for j = 1..i-1 (column 0 is zero throughout).
constexpr std::array<std::array<double, 3>, 4> kImplicit{{
    {0.0, 0.0, 0.0},
    {0.0, 0.0, 0.0},
    {0.0, (1.0 - kGamma) / 2.0, 0.0},
    {0.0, kB1, kB2},
}};
constexpr std::array<double, 4> kWeights{0.0, kB1, kB2, kGamma};

}  // namespace

void validate(const KsConfig& cfg) {
  const std::size_t n = cfg.n_modes;
  if (n < 16 || (n & (n - 1)) != 0) throw InvalidInput("n_modes must be a power of two >= 16");
  if (!(cfg.dt > 0.0) || !std::isfinite(cfg.dt)) throw InvalidInput("dt must be positive");
  if (!(cfg.domain_length > 0.0) || !std::isfinite(cfg.domain_length)) {
    throw InvalidInput("domain_length must be positive");
  }
  if (cfg.sample_stride == 0) throw InvalidInput("sample_stride must be positive");
  if (!std::isfinite(cfg.noise_amplitude)) throw InvalidInput("noise_amplitude must be finite");
}

std::size_t ks_dealias_cutoff(std::size_t n_modes) {
  // Keep n <= (2/3)(N/2), i.e. n <= floor(N/3).
  return n_modes / 3;
}

std::vector<std::complex<double>> KsState::full_spectrum() const {
  if (half_spectrum.size() < 2) return {};
  const std::size_t n = 2 * (half_spectrum.size() - 1);
  std::vector<std::complex<double>> full(n);
  for (std::size_t i = 0; i <= n / 2; ++i) full[i] = half_spectrum[i];
  for (std::size_t i = n / 2 + 1; i < n; ++i) full[i] = std::conj(half_spectrum[n - i]);
  return full;
}

struct KsIntegrator::Impl {
  KsConfig cfg;
  std::size_t n = 0;
  std::size_t half = 0;
  std::size_t cutoff = 0;
  std::vector<double> wavenumber;
  std::vector<double> linear;  // k^2 - k^4
  std::vector<double> implicit_denominator;  // 1 - dt gamma L

  double* grid = nullptr;
  fftw_complex* spec = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;

  explicit Impl(const KsConfig& c) : cfg(c) {
    validate(cfg);
    n = cfg.n_modes;
    half = n / 2 + 1;
    cutoff = ks_dealias_cutoff(n);
    wavenumber.resize(half);
    linear.resize(half);
    implicit_denominator.resize(half);
    for (std::size_t i = 0; i < half; ++i) {
      const double k = 2.0 * std::numbers::pi * static_cast<double>(i) / cfg.domain_length;
      wavenumber[i] = k;
      linear[i] = k * k - k * k * k * k;
      implicit_denominator[i] = 1.0 - cfg.dt * kGamma * linear[i];
    }
    grid = fftw_alloc_real(n);
    spec = fftw_alloc_complex(half);
    std::lock_guard lock(planner_mutex());
    forward = fftw_plan_dft_r2c_1d(static_cast<int>(n), grid, spec, FFTW_ESTIMATE);
    backward = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec, grid, FFTW_ESTIMATE);
  }

  ~Impl() {
    std::lock_guard lock(planner_mutex());
    if (forward) fftw_destroy_plan(forward);
    if (backward) fftw_destroy_plan(backward);
    fftw_free(grid);
    fftw_free(spec);
  }

  Impl(const Impl&) = delete;
  Impl& operator=(const Impl&) = delete;

  void load_spectrum(const std::vector<std::complex<double>>& coeffs) const {
    for (std::size_t i = 0; i < half; ++i) {
      spec[i][0] = coeffs[i].real();
      spec[i][1] = coeffs[i].imag();
    }
  }

  std::vector<double> physical(const std::vector<std::complex<double>>& coeffs) const {
    load_spectrum(coeffs);
    fftw_execute(backward);
    return {grid, grid + n};
  }

  std::vector<std::complex<double>> spectral(const std::vector<double>& values) const {
    std::copy(values.begin(), values.end(), grid);
    fftw_execute(forward);
    std::vector<std::complex<double>> out(half);
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < half; ++i) out[i] = {spec[i][0] * inv_n, spec[i][1] * inv_n};
    return out;
  }

  // -(1/2) d/dx (u^2) with 2/3-rule truncation on input and output.
  void nonlinear(const std::vector<std::complex<double>>& u, std::vector<std::complex<double>>& out) const {
    for (std::size_t i = 0; i < half; ++i) {
      if (i <= cutoff) {
        spec[i][0] = u[i].real();
        spec[i][1] = u[i].imag();
      } else {
        spec[i][0] = 0.0;
        spec[i][1] = 0.0;
      }
    }
    fftw_execute(backward);
    for (std::size_t j = 0; j < n; ++j) grid[j] *= grid[j];
    fftw_execute(forward);
    const double inv_n = 1.0 / static_cast<double>(n);
    out.resize(half);
    for (std::size_t i = 0; i < half; ++i) {
      if (i > cutoff) {
        out[i] = 0.0;
        continue;
      }
      const std::complex<double> w{spec[i][0] * inv_n, spec[i][1] * inv_n};
      out[i] = std::complex<double>(0.0, -0.5 * wavenumber[i]) * w;
    }
  }
};

KsIntegrator::KsIntegrator(const KsConfig& cfg) : impl_(std::make_unique<Impl>(cfg)) {}
KsIntegrator::~KsIntegrator() = default;
KsIntegrator::KsIntegrator(KsIntegrator&&) noexcept = default;
KsIntegrator& KsIntegrator::operator=(KsIntegrator&&) noexcept = default;

const KsConfig& KsIntegrator::config() const noexcept { return impl_->cfg; }

KsState KsIntegrator::initial_state() const {
  const auto& cfg = impl_->cfg;
  const std::size_t n = impl_->n;
  NormalGenerator normal(cfg.seed);
  std::vector<double> u(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double x = static_cast<double>(j) * cfg.domain_length / static_cast<double>(n);
    u[j] = std::sin(0.5 * std::numbers::pi * x) + std::sin(0.85 * std::numbers::pi * x) +
           cfg.noise_amplitude * normal();
  }
  return from_physical(u);
}

KsState KsIntegrator::from_physical(const std::vector<double>& u) const {
  if (u.size() != impl_->n) throw InvalidInput("grid size does not match n_modes");
  KsState state;
  state.half_spectrum = impl_->spectral(u);
  // r2c output is exactly real at n = 0 and N/2 up to rounding; pin it.
  state.half_spectrum.front().imag(0.0);
  state.half_spectrum.back().imag(0.0);
  return state;
}

std::vector<double> KsIntegrator::to_physical(const KsState& state) const {
  if (state.half_spectrum.size() != impl_->half) throw InvalidInput("state size does not match n_modes");
  return impl_->physical(state.half_spectrum);
}

void KsIntegrator::step(KsState& state) const {
  const Impl& im = *impl_;
  if (state.half_spectrum.size() != im.half) throw InvalidInput("state size does not match n_modes");
  const double dt = im.cfg.dt;
  const auto& u0 = state.half_spectrum;

  std::array<std::vector<std::complex<double>>, 4> explicit_terms;
  std::array<std::vector<std::complex<double>>, 4> implicit_terms;
  std::vector<std::complex<double>> stage = u0;

  im.nonlinear(stage, explicit_terms[0]);
  implicit_terms[0].assign(im.half, 0.0);
  for (std::size_t i = 1; i < 4; ++i) {
    for (std::size_t m = 0; m < im.half; ++m) {
      std::complex<double> rhs = u0[m];
      for (std::size_t j = 0; j < i; ++j) {
        rhs += dt * (kExplicit[i][j] * explicit_terms[j][m] + kImplicit[i][j] * implicit_terms[j][m]);
      }
      stage[m] = rhs / im.implicit_denominator[m];
    }
    im.nonlinear(stage, explicit_terms[i]);
    implicit_terms[i].resize(im.half);
    for (std::size_t m = 0; m < im.half; ++m) implicit_terms[i][m] = im.linear[m] * stage[m];
  }

  std::vector<std::complex<double>> next(im.half);
  double largest = 0.0;
  for (std::size_t m = 0; m < im.half; ++m) {
    std::complex<double> v = u0[m];
    for (std::size_t j = 1; j < 4; ++j) v += dt * kWeights[j] * (explicit_terms[j][m] + implicit_terms[j][m]);
    if (m > im.cutoff) v = 0.0;
    next[m] = v;
    largest = std::max(largest, std::abs(v));
  }
  next.front().imag(0.0);
  if (!std::isfinite(largest)) {
    throw KsBlowUp("Kuramoto-Sivashinsky state became non-finite at step " + std::to_string(state.step + 1),
                   state.step + 1);
  }
  state.half_spectrum = std::move(next);
  state.step += 1;
  state.time = static_cast<double>(state.step) * dt;
}

double KsIntegrator::energy(const KsState& state) const {
  const auto& c = state.half_spectrum;
  if (c.size() != impl_->half) throw InvalidInput("state size does not match n_modes");
  CompensatedSum acc;
  acc.add(std::norm(c.front()));
  for (std::size_t i = 1; i + 1 < c.size(); ++i) acc.add(2.0 * std::norm(c[i]));
  acc.add(std::norm(c.back()));
  return acc.value();
}

KsState ks_initial_field(const KsConfig& cfg) { return KsIntegrator(cfg).initial_state(); }

KsState ks_step(const KsState& state, const KsConfig& cfg) {
  KsState next = state;
  KsIntegrator(cfg).step(next);
  return next;
}

double ks_energy(const KsState& state, const KsConfig& cfg) { return KsIntegrator(cfg).energy(state); }

TimeSeries ks_run(const KsConfig& cfg) {
  KsIntegrator integrator(cfg);
  KsState state = integrator.initial_state();
  std::vector<double> energy;
  energy.reserve(cfg.n_steps / cfg.sample_stride + 1);
  energy.push_back(integrator.energy(state));
  for (std::size_t s = 1; s <= cfg.n_steps; ++s) {
    integrator.step(state);
    if (s % cfg.sample_stride == 0) energy.push_back(integrator.energy(state));
  }
  return TimeSeries(std::move(energy), cfg.dt * static_cast<double>(cfg.sample_stride), "ks-energy");
}

}  // namespace avgerr
