#pragma once

// Single-photon spectral densities f^2(nu) as functions of the detuning
// nu = w - w0 (rad/s).  All densities integrate to one over the real line.
//
//   Gaussian:  f^2 = exp(-nu^2 / sigma^2) / (sqrt(pi) sigma)
//   sinc^2:    f^2 = (gamma / pi) sinc^2(gamma nu),  sinc x = sin x / x
//
// For type-II down-conversion gamma = D L_spdc / 2.

#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>

#include "bmzi/units.hpp"

namespace bmzi {

struct Monochromatic {};

struct GaussianSpectrum {
  double sigma_rad_s = 0.0;
};

struct Sinc2Spectrum {
  double gamma_ps = 0.0;

  double gamma_s() const { return units::ps_to_s(gamma_ps); }
};

using PhotonSpectrum = std::variant<Monochromatic, GaussianSpectrum, Sinc2Spectrum>;

/// sinc^2(x) = 1/2 at x = 1.39155737825...
inline constexpr double sinc2_half_maximum_argument = 1.3915573782515102;

inline GaussianSpectrum gaussian_from_fwhm(double center_nm, double fwhm_nm) {
  return {units::angular_bandwidth(center_nm, fwhm_nm) / (2.0 * std::sqrt(std::log(2.0)))};
}

inline Sinc2Spectrum sinc2_from_crystal(double group_delay_mismatch_ps_per_mm,
                                        double spdc_length_mm) {
  return {0.5 * group_delay_mismatch_ps_per_mm * spdc_length_mm};
}

inline Sinc2Spectrum sinc2_from_fwhm(double center_nm, double fwhm_nm) {
  const double fwhm = units::angular_bandwidth(center_nm, fwhm_nm);
  return {units::s_to_ps(2.0 * sinc2_half_maximum_argument / fwhm)};
}

inline double sinc(double x) {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

inline const char* spectrum_kind(const PhotonSpectrum& s) {
  if (std::holds_alternative<GaussianSpectrum>(s)) return "gaussian";
  if (std::holds_alternative<Sinc2Spectrum>(s)) return "sinc2";
  return "monochromatic";
}

inline void validate_spectrum(const PhotonSpectrum& s) {
  if (const auto* g = std::get_if<GaussianSpectrum>(&s)) {
    if (!(g->sigma_rad_s > 0.0) || !std::isfinite(g->sigma_rad_s))
      throw std::invalid_argument("gaussian width sigma must be positive");
  } else if (const auto* c = std::get_if<Sinc2Spectrum>(&s)) {
    if (!(c->gamma_ps > 0.0) || !std::isfinite(c->gamma_ps))
      throw std::invalid_argument("sinc2 parameter gamma must be positive");
  }
}

/// Normalized density on the whole real line.  Monochromatic light has no
/// density; callers treat it as a point mass at nu = 0.
inline double spectral_density(const PhotonSpectrum& s, double nu) {
  if (const auto* g = std::get_if<GaussianSpectrum>(&s)) {
    const double x = nu / g->sigma_rad_s;
    return std::exp(-x * x) / (std::sqrt(units::pi) * g->sigma_rad_s);
  }
  if (const auto* c = std::get_if<Sinc2Spectrum>(&s)) {
    const double gamma = c->gamma_s();
    const double v = sinc(gamma * nu);
    return gamma / units::pi * v * v;
  }
  throw std::invalid_argument("monochromatic light has no spectral density");
}

/// Closed-form  integral f^2(nu) cos(nu tau) dnu  (the spectral characteristic
/// function), tau in seconds.
inline double coherence_factor(const PhotonSpectrum& s, double tau_s) {
  if (const auto* g = std::get_if<GaussianSpectrum>(&s)) {
    const double x = g->sigma_rad_s * tau_s;
    return std::exp(-0.25 * x * x);
  }
  if (const auto* c = std::get_if<Sinc2Spectrum>(&s)) {
    const double r = std::abs(tau_s) / (2.0 * c->gamma_s());
    return r < 1.0 ? 1.0 - r : 0.0;
  }
  return 1.0;
}

}  // namespace bmzi
