#pragma once

// Unit conventions used throughout bmzi:
//   lengths            mm
//   temperatures       K (absolute); offsets are plain K differences
//   angular frequency  rad/s
//   wavelengths        nm
//   delays             ps at the API surface, seconds internally
//   group delay D      ps/mm

#include <numbers>

namespace bmzi::units {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline constexpr double speed_of_light_mm_per_s = 2.99792458e11;

inline constexpr double seconds_per_ps = 1e-12;
inline constexpr double mm_per_nm = 1e-6;

constexpr double ps_to_s(double ps) { return ps * seconds_per_ps; }
constexpr double s_to_ps(double s) { return s / seconds_per_ps; }
constexpr double nm_to_mm(double nm) { return nm * mm_per_nm; }

constexpr double celsius_to_kelvin(double c) { return c + 273.15; }

/// Vacuum wavenumber 2*pi/lambda in rad/mm.
constexpr double wavenumber_rad_per_mm(double wavelength_nm) {
  return two_pi / nm_to_mm(wavelength_nm);
}

/// Angular frequency 2*pi*c/lambda in rad/s.
constexpr double angular_frequency(double wavelength_nm) {
  return two_pi * speed_of_light_mm_per_s / nm_to_mm(wavelength_nm);
}

/// Angular-frequency FWHM corresponding to a wavelength FWHM at the given center.
constexpr double angular_bandwidth(double center_nm, double fwhm_nm) {
  return two_pi * speed_of_light_mm_per_s * nm_to_mm(fwhm_nm) /
         (nm_to_mm(center_nm) * nm_to_mm(center_nm));
}

}  // namespace bmzi::units
