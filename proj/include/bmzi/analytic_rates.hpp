#pragma once

// Closed-form count rates of the birefringent interferometer.
//
// Rates are probabilities per input photon (R4, R5) or per input pair (R45).
// The coincidence formula carries prefactor 1/2 and cross term
// 2 sin^2 d cos^2 d, which is the only form that reduces to
// R45 = (1 + cos(2 phi_y - 2 phi_c)) / 2 at d = 0.
//
// Broadband families differ only through the coherence factor that multiplies
// the terms carrying the walk-off delay D L:
//   gaussian:  exp(-D^2 L^2 sigma^2 / 4)
//   sinc^2:    (L_spdc - L) / L_spdc  for L_spdc > L, else 0

#include <cmath>
#include <stdexcept>

#include "bmzi/crystal_optics.hpp"
#include "bmzi/spectrum.hpp"

namespace bmzi {

struct CountRates {
  double R4 = 0.0;
  double R5 = 0.0;
  double R45 = 0.0;
};

inline CountRates rates_monochromatic(double delta, double phi_y, double phi_z, double phi_c) {
  const double c2 = std::cos(delta) * std::cos(delta);
  const double s2 = std::sin(delta) * std::sin(delta);
  const double single = c2 * std::cos(phi_y - phi_c) + s2 * std::cos(phi_z - phi_c);
  CountRates r;
  r.R4 = 0.5 * (1.0 + single);
  r.R5 = 0.5 * (1.0 - single);
  r.R45 = 0.5 * (1.0 + c2 * c2 * std::cos(2.0 * phi_y - 2.0 * phi_c) +
                 s2 * s2 * std::cos(2.0 * phi_z - 2.0 * phi_c) +
                 2.0 * s2 * c2 * std::cos(phi_y + phi_z - 2.0 * phi_c));
  return r;
}

/// Shared broadband shape.  y_phase = (dk_y/dT) L dT, z_phase = dphi + (dk_z/dT) L dT,
/// both relative to an ideal compensator; `coherence` multiplies the single-photon
/// z term and the two-photon cross term.
inline CountRates rates_with_coherence(double delta, double y_phase, double z_phase,
                                       double coherence) {
  const double c2 = std::cos(delta) * std::cos(delta);
  const double s2 = std::sin(delta) * std::sin(delta);
  const double single = c2 * std::cos(y_phase) + s2 * coherence * std::cos(z_phase);
  CountRates r;
  r.R4 = 0.5 * (1.0 + single);
  r.R5 = 0.5 * (1.0 - single);
  r.R45 = 0.5 * (1.0 + c2 * c2 * std::cos(2.0 * y_phase) + s2 * s2 * std::cos(2.0 * z_phase) +
                 2.0 * c2 * s2 * std::cos(y_phase + z_phase) * coherence);
  return r;
}

/// exp(-D^2 L^2 sigma^2 / 4).
inline double decoherence_factor(const BirefringentCrystal& crystal,
                                 const GaussianSpectrum& spectrum) {
  const double x = crystal.walkoff_delay_s() * spectrum.sigma_rad_s;
  return std::exp(-0.25 * x * x);
}

/// Visibility factor of the walk-off terms for a sinc^2 photon from an
/// L_spdc-long source made of the same material as the crystal.
inline double sinc2_visibility_factor(double crystal_length_mm, double spdc_length_mm) {
  if (!(spdc_length_mm > 0.0)) throw std::invalid_argument("L_spdc must be positive");
  if (spdc_length_mm > crystal_length_mm)
    return (spdc_length_mm - crystal_length_mm) / spdc_length_mm;
  return 0.0;
}

namespace detail {
inline double y_phase(const BirefringentCrystal& c, double dT) { return c.thermal_phase_rate(Axis::y) * dT; }
inline double z_phase(const BirefringentCrystal& c, double dT) {
  return c.static_phase_offset_rad + c.thermal_phase_rate(Axis::z) * dT;
}
}  // namespace detail

inline CountRates rates_gaussian(double delta, const BirefringentCrystal& crystal,
                                 const GaussianSpectrum& spectrum, double dT) {
  if (!(spectrum.sigma_rad_s >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  return rates_with_coherence(delta, detail::y_phase(crystal, dT), detail::z_phase(crystal, dT),
                              decoherence_factor(crystal, spectrum));
}

inline CountRates rates_sinc2(double delta, const BirefringentCrystal& crystal,
                              double spdc_length_mm, double dT) {
  return rates_with_coherence(delta, detail::y_phase(crystal, dT), detail::z_phase(crystal, dT),
                              sinc2_visibility_factor(crystal.length_mm, spdc_length_mm));
}

/// Dispatch on the spectrum kind using the closed-form coherence factor at delay D L.
inline CountRates rates_analytic(double delta, const BirefringentCrystal& crystal,
                                 const PhotonSpectrum& spectrum, double dT) {
  return rates_with_coherence(delta, detail::y_phase(crystal, dT), detail::z_phase(crystal, dT),
                              coherence_factor(spectrum, crystal.walkoff_delay_s()));
}

}  // namespace bmzi
