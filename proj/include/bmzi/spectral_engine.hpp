#pragma once

// Brute-force spectral oracle.  Every observable is an integral over the photon
// detuning nu of a per-frequency probability built from mode_algebra
// amplitudes.  Pair observables use the CW-pump constraint w_s + w_i = w0p,
// resolved analytically: w_s = w0 + nu, w_i = w0 - nu.

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "bmzi/analytic_rates.hpp"
#include "bmzi/mode_algebra.hpp"
#include "bmzi/quadrature.hpp"
#include "bmzi/spectrum.hpp"

namespace bmzi {

/// A photon spectrum truncated to a finite support.  The mass cut off by the
/// truncation is spread uniformly over the support: far out in the tail only
/// the non-oscillating part of an integrand survives, which a flat pedestal
/// reproduces to first order.
class SpectralDensity {
 public:
  explicit SpectralDensity(PhotonSpectrum spectrum, const QuadratureSettings& settings = {})
      : spectrum_(std::move(spectrum)) {
    validate_spectrum(spectrum_);
    settings.validate();
    if (const auto* g = std::get_if<GaussianSpectrum>(&spectrum_)) {
      const int pieces = 2 * static_cast<int>(std::ceil(settings.gaussian_support_widths));
      const double half = settings.gaussian_support_widths * g->sigma_rad_s;
      for (int k = 0; k <= pieces; ++k) breaks_.push_back(-half + 2.0 * half * k / pieces);
    } else if (const auto* c = std::get_if<Sinc2Spectrum>(&spectrum_)) {
      const int lobes = settings.sinc2_support_lobes;
      const double zero = units::pi / c->gamma_s();
      for (int k = -lobes; k <= lobes; ++k) breaks_.push_back(k * zero);
    }
    if (!is_point_mass()) {
      auto raw = [this](double nu) { return spectral_density(spectrum_, nu); };
      mass_ = integrate_adaptive(raw, std::span<const double>(breaks_), settings).value;
      pedestal_ = (1.0 - mass_) / (breaks_.back() - breaks_.front());
    }
  }

  bool is_point_mass() const { return std::holds_alternative<Monochromatic>(spectrum_); }
  const PhotonSpectrum& spectrum() const { return spectrum_; }
  std::span<const double> breakpoints() const { return breaks_; }

  /// Mass of the untruncated density inside the support.
  double truncated_mass() const { return mass_; }

  double operator()(double nu) const {
    if (nu < breaks_.front() || nu > breaks_.back()) return 0.0;
    return spectral_density(spectrum_, nu) + pedestal_;
  }

  /// Integral of density(nu) * g(nu); a point mass evaluates g(0).
  template <class G>
  double integrate(G&& g, const QuadratureSettings& settings = {}) const {
    if (is_point_mass()) return g(0.0);
    auto integrand = [&](double nu) { return (*this)(nu) * g(nu); };
    return integrate_adaptive(integrand, breakpoints(), settings).value;
  }

 private:
  PhotonSpectrum spectrum_;
  std::vector<double> breaks_;
  double mass_ = 1.0;
  double pedestal_ = 0.0;
};

struct SinglePhotonRates {
  double R4 = 0.0;
  double R5 = 0.0;
};

/// Port-4 detection probability of a photon entering port 1 at one frequency:
/// (|T + alpha|^2 + |beta|^2) / 4.
inline double port4_probability(const OutputAmplitudes& a) {
  return std::norm(a.F1.port1) + std::norm(a.G1.port1);
}

/// Coincidence kernel Gamma(w_s, w_i) for a signal in port 0 at w_s and an idler
/// in port 1 at w_i, summed over the output polarizations.  Both time orderings
/// of a symmetric joint amplitude contribute coherently.
inline double two_photon_kernel(const OutputAmplitudes& s, const OutputAmplitudes& i) {
  const std::array<const PortAmplitudes*, 2> port4_s = {&s.F1, &s.G1};
  const std::array<const PortAmplitudes*, 2> port5_i = {&i.F2, &i.G2};
  double total = 0.0;
  for (int p = 0; p < 2; ++p) {
    for (int q = 0; q < 2; ++q) {
      // photon at w_s leaves port 4, photon at w_i leaves port 5
      const Complex amp = port4_s[p]->port0 * port5_i[q]->port1 +
                          port4_s[p]->port1 * port5_i[q]->port0;
      total += std::norm(amp);
    }
  }
  return total;
}

/// The kernel written out in trigonometric form for a reference arm that follows
/// the y axis at T0.  Arguments are y_j, z_j (crystal phases at T) and y_j0
/// (y phases at T0, equal to the reference-arm phase), j = s, i.
inline double two_photon_kernel_trig(double delta, double ys, double yi, double zs, double zi,
                                     double ys0, double yi0) {
  const double c2 = std::cos(delta) * std::cos(delta);
  const double s2 = std::sin(delta) * std::sin(delta);
  const double cross = 2.0 * c2 * s2;
  return 0.5 * (1.0 + c2 * c2 * std::cos(ys + yi - ys0 - yi0) +
                s2 * s2 * std::cos(zs + zi - ys0 - yi0) +
                cross * std::cos(0.5 * (zs - zi - ys + yi)) *
                    std::cos(0.5 * (zs + zi + ys + yi - 2.0 * ys0 - 2.0 * yi0)) +
                cross * std::sin(0.5 * (zi - yi)) * std::sin(0.5 * (zs - ys)) *
                    (std::cos(0.5 * (zs - zi - ys + yi)) -
                     std::cos(0.5 * (zs - zi + ys - yi - 2.0 * ys0 + 2.0 * yi0))));
}

inline SinglePhotonRates integrate_single(const InterferometerConfig& config,
                                          const SpectralDensity& density, double temperature_K,
                                          const QuadratureSettings& settings = {}) {
  const double w0 = config.photon_center_rad_s();
  const double r4 = density.integrate(
      [&](double nu) { return port4_probability(output_amplitudes(config, w0 + nu, temperature_K)); },
      settings);
  return {r4, 1.0 - r4};
}

inline double integrate_coincidence(const InterferometerConfig& config,
                                    const SpectralDensity& marginal, double temperature_K,
                                    const QuadratureSettings& settings = {}) {
  const double w0 = config.photon_center_rad_s();
  return marginal.integrate(
      [&](double nu) {
        return two_photon_kernel(output_amplitudes(config, w0 + nu, temperature_K),
                                 output_amplitudes(config, w0 - nu, temperature_K));
      },
      settings);
}

inline CountRates oracle_rates(const InterferometerConfig& config, const SpectralDensity& density,
                               double temperature_K, const QuadratureSettings& settings = {}) {
  const SinglePhotonRates s = integrate_single(config, density, temperature_K, settings);
  return {s.R4, s.R5, integrate_coincidence(config, density, temperature_K, settings)};
}

/// Two-photon coincidence behind a single 50/50 beam splitter with relative delay
/// tau:  (1 - integral f^2(nu) cos(2 nu tau) dnu) / 2.  This is the textbook
/// Hong-Ou-Mandel expression for a symmetric CW-pumped pair.
inline double hom_dip(const SpectralDensity& marginal, double delay_ps,
                      const QuadratureSettings& settings = {}) {
  const double tau = units::ps_to_s(delay_ps);
  const double overlap =
      marginal.integrate([&](double nu) { return std::cos(2.0 * nu * tau); }, settings);
  return 0.5 * (1.0 - overlap);
}

/// Trigonometric polynomial of degree <= 3 in a phase theta.
struct PhaseFringe {
  double a0 = 0.0;
  std::array<double, 3> a{};  // cos(k theta), k = 1..3
  std::array<double, 3> b{};  // sin(k theta)

  double operator()(double theta) const {
    double v = a0;
    for (int k = 0; k < 3; ++k) v += a[k] * std::cos((k + 1) * theta) + b[k] * std::sin((k + 1) * theta);
    return v;
  }
};

/// Exact Fourier coefficients from 8 equispaced samples (valid for degree <= 3).
template <class F>
PhaseFringe sample_phase_fringe(F&& fringe) {
  constexpr int n = 8;
  std::array<double, n> v{};
  for (int j = 0; j < n; ++j) v[j] = fringe(units::two_pi * j / n);
  PhaseFringe p;
  for (int j = 0; j < n; ++j) p.a0 += v[j] / n;
  for (int k = 1; k <= 3; ++k) {
    for (int j = 0; j < n; ++j) {
      const double t = units::two_pi * j / n;
      p.a[k - 1] += 2.0 / n * v[j] * std::cos(k * t);
      p.b[k - 1] += 2.0 / n * v[j] * std::sin(k * t);
    }
  }
  return p;
}

/// Global extremes of a phase fringe over one period (dense scan + golden refinement).
inline std::pair<double, double> fringe_extremes(const PhaseFringe& p) {
  constexpr int n = 2048;
  const double h = units::two_pi / n;
  int imax = 0, imin = 0;
  double vmax = p(0.0), vmin = vmax;
  for (int j = 1; j < n; ++j) {
    const double v = p(j * h);
    if (v > vmax) vmax = v, imax = j;
    if (v < vmin) vmin = v, imin = j;
  }
  auto refine = [&](int j, double sign) {
    double lo = (j - 1) * h, hi = (j + 1) * h;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = sign * p(x1), f2 = sign * p(x2);
    for (int it = 0; it < 80; ++it) {
      if (f1 > f2) {
        hi = x2, x2 = x1, f2 = f1;
        x1 = hi - g * (hi - lo), f1 = sign * p(x1);
      } else {
        lo = x1, x1 = x2, f1 = f2;
        x2 = lo + g * (hi - lo), f2 = sign * p(x2);
      }
    }
    return sign * std::max(f1, f2);
  };
  return {std::min(vmin, refine(imin, -1.0)), std::max(vmax, refine(imax, 1.0))};
}

/// Fringe visibility (max - min)/(max + min) obtained by sweeping the reference
/// arm phase at the configured geometry (including compensator.extra_path_mm).
inline double imbalance_visibility(const InterferometerConfig& config,
                                   const SpectralDensity& density, PhotonOrder order,
                                   double temperature_K,
                                   const QuadratureSettings& settings = {}) {
  if (!(config.compensator.extra_path_mm >= 0.0))
    throw std::invalid_argument("path imbalance must be >= 0");
  auto fringe = sample_phase_fringe([&](double theta) {
    InterferometerConfig shifted = config;
    shifted.compensator.phase_offset_rad = config.compensator.phase_offset_rad + theta;
    if (order == PhotonOrder::single)
      return integrate_single(shifted, density, temperature_K, settings).R4;
    return integrate_coincidence(shifted, density, temperature_K, settings);
  });
  const auto [lo, hi] = fringe_extremes(fringe);
  if (hi + lo <= 0.0) return 0.0;
  return (hi - lo) / (hi + lo);
}

}  // namespace bmzi
