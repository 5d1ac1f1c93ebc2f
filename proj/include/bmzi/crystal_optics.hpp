#pragma once

// Linearized dispersion/temperature phase model of a birefringent crystal.
//
// Phases are measured relative to a reference wave that follows the crystal's
// y axis at the center frequency w0 and reference temperature T0:
//
//   phase_y(nu, dT) = (dk_y/dT) L dT
//   phase_z(nu, dT) = dphi + D L nu + (dk_z/dT) L dT
//
// with nu = w - w0 and dT = T - T0.  Absolute indices never enter; only the
// static z-y offset dphi = [k_z - k_y](w0, T0) L does.  D = 1/v_gz - 1/v_gy.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>

#include "bmzi/units.hpp"

namespace bmzi {

enum class Axis { y, z };

enum class PhotonOrder : int { single = 1, pair = 2 };

inline const char* to_string(Axis axis) { return axis == Axis::y ? "y" : "z"; }

/// dk/dT = (2 pi / lambda) dn/dT, in rad/(mm K).
inline double dk_from_dn(double dn_dT, double wavelength_nm) {
  return units::wavenumber_rad_per_mm(wavelength_nm) * dn_dT;
}

inline double dn_from_dk(double dk_dT, double wavelength_nm) {
  return dk_dT / units::wavenumber_rad_per_mm(wavelength_nm);
}

struct BirefringentCrystal {
  double length_mm = 0.0;
  double dky_dT = 0.0;                           // rad/(mm K)
  double dkz_dT = 0.0;                           // rad/(mm K)
  double group_delay_mismatch_ps_per_mm = 0.0;   // D >= 0 by convention
  double static_phase_offset_rad = 0.0;          // dphi
  double reference_temperature_K = 0.0;          // T0
  double wavelength_nm = 1550.0;                 // conversion wavelength

  static BirefringentCrystal from_index_slopes(double length_mm, double dny_dT, double dnz_dT,
                                               double wavelength_nm,
                                               double group_delay_mismatch_ps_per_mm,
                                               double static_phase_offset_rad,
                                               double reference_temperature_K) {
    BirefringentCrystal c;
    c.length_mm = length_mm;
    c.wavelength_nm = wavelength_nm;
    c.dky_dT = dk_from_dn(dny_dT, wavelength_nm);
    c.dkz_dT = dk_from_dn(dnz_dT, wavelength_nm);
    c.group_delay_mismatch_ps_per_mm = group_delay_mismatch_ps_per_mm;
    c.static_phase_offset_rad = static_phase_offset_rad;
    c.reference_temperature_K = reference_temperature_K;
    c.validate();
    return c;
  }

  void validate() const {
    if (!(length_mm > 0.0) || !std::isfinite(length_mm))
      throw std::invalid_argument("crystal length must be positive");
    if (!(wavelength_nm > 0.0) || !std::isfinite(wavelength_nm))
      throw std::invalid_argument("crystal wavelength must be positive");
    if (!(group_delay_mismatch_ps_per_mm >= 0.0) || !std::isfinite(group_delay_mismatch_ps_per_mm))
      throw std::invalid_argument("group delay mismatch D must be finite and >= 0");
    if (!std::isfinite(dky_dT) || !std::isfinite(dkz_dT) ||
        !std::isfinite(static_phase_offset_rad) || !std::isfinite(reference_temperature_K))
      throw std::invalid_argument("crystal parameters must be finite");
  }

  double dk_dT(Axis axis) const { return axis == Axis::y ? dky_dT : dkz_dT; }
  double dn_dT(Axis axis) const { return dn_from_dk(dk_dT(axis), wavelength_nm); }

  /// Thermal phase rate of one axis, (dk/dT) L, in rad/K.
  double thermal_phase_rate(Axis axis) const { return dk_dT(axis) * length_mm; }

  /// Walk-off delay D L between the two axes, in seconds.
  double walkoff_delay_s() const {
    return units::ps_to_s(group_delay_mismatch_ps_per_mm * length_mm);
  }
};

/// First-order phase of one crystal axis at detuning nu (rad/s) and temperature offset dT (K).
inline double phase_at(const BirefringentCrystal& crystal, Axis axis, double detuning_rad_s,
                       double dT) {
  if (axis == Axis::y) return crystal.dky_dT * crystal.length_mm * dT;
  return crystal.static_phase_offset_rad + crystal.walkoff_delay_s() * detuning_rad_s +
         crystal.dkz_dT * crystal.length_mm * dT;
}

/// Temperature period lambda / (L dn/dT N) of the N-photon fringe carried by one axis.
inline double thermal_fringe_period(const BirefringentCrystal& crystal, Axis axis,
                                    PhotonOrder order) {
  const double rate = crystal.thermal_phase_rate(axis);
  if (rate == 0.0) throw std::domain_error("degenerate axis: infinite period");
  return units::two_pi / (std::abs(rate) * static_cast<int>(order));
}

enum class CompensatorAlignment { y_aligned, z_aligned, removed };

inline const char* to_string(CompensatorAlignment a) {
  switch (a) {
    case CompensatorAlignment::y_aligned: return "y";
    case CompensatorAlignment::z_aligned: return "z";
    case CompensatorAlignment::removed: return "removed";
  }
  return "?";
}

/// Reference-arm element.  The compensator is a copy of the measurement crystal
/// held at a fixed temperature; extra_path_mm is a geometric imbalance that adds
/// w*dL/c to the reference arm.  phase_offset_rad is a static reference phase
/// (used to sweep fringes at fixed geometry).
struct CompensatorState {
  CompensatorAlignment alignment = CompensatorAlignment::y_aligned;
  std::optional<double> fixed_temperature_K;  // defaults to the crystal's T0
  double extra_path_mm = 0.0;
  double phase_offset_rad = 0.0;

  void validate() const {
    if (!(extra_path_mm >= 0.0) || !std::isfinite(extra_path_mm))
      throw std::invalid_argument("compensator extra path must be finite and >= 0");
    if (fixed_temperature_K && !std::isfinite(*fixed_temperature_K))
      throw std::invalid_argument("compensator temperature must be finite");
    if (!std::isfinite(phase_offset_rad))
      throw std::invalid_argument("compensator phase offset must be finite");
  }

  /// True when the reference arm exactly tracks the crystal's y axis at T0.
  bool is_ideal_for(const BirefringentCrystal& crystal) const {
    return alignment == CompensatorAlignment::y_aligned && extra_path_mm == 0.0 &&
           phase_offset_rad == 0.0 &&
           (!fixed_temperature_K || *fixed_temperature_K == crystal.reference_temperature_K);
  }
};

/// Phase of the reference-arm transfer T(w) = exp(i phase) at absolute angular
/// frequency omega (detuning = omega - w0).  A "removed" compensator keeps only
/// the geometric term; in that case dL is the net imbalance seen by the y wave.
inline double reference_arm_phase(const BirefringentCrystal& crystal,
                                  const CompensatorState& comp, double detuning_rad_s,
                                  double omega_rad_s) {
  const double dT_c =
      comp.fixed_temperature_K.value_or(crystal.reference_temperature_K) -
      crystal.reference_temperature_K;
  double phase = comp.phase_offset_rad;
  if (comp.extra_path_mm != 0.0)
    phase += omega_rad_s * comp.extra_path_mm / units::speed_of_light_mm_per_s;
  switch (comp.alignment) {
    case CompensatorAlignment::y_aligned:
      phase += phase_at(crystal, Axis::y, detuning_rad_s, dT_c);
      break;
    case CompensatorAlignment::z_aligned:
      phase += phase_at(crystal, Axis::z, detuning_rad_s, dT_c);
      break;
    case CompensatorAlignment::removed:
      break;
  }
  return phase;
}

/// Phase the compensator imposes on the polarization orthogonal to its alignment axis.
inline double reference_arm_phase_orthogonal(const BirefringentCrystal& crystal,
                                             const CompensatorState& comp,
                                             double detuning_rad_s, double omega_rad_s) {
  CompensatorState swapped = comp;
  if (comp.alignment == CompensatorAlignment::y_aligned)
    swapped.alignment = CompensatorAlignment::z_aligned;
  else if (comp.alignment == CompensatorAlignment::z_aligned)
    swapped.alignment = CompensatorAlignment::y_aligned;
  return reference_arm_phase(crystal, swapped, detuning_rad_s, omega_rad_s);
}

}  // namespace bmzi
