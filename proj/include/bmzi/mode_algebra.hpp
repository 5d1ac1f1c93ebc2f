#pragma once

// Frequency-resolved transfer algebra of the birefringent Mach-Zehnder:
// BS1 -> (measurement crystal | reference arm) -> BS2.
//
// Beam splitters use the symmetric convention
//   out0 = (in0 + i in1)/sqrt2,  out1 = (i in0 + in1)/sqrt2.
// The measurement crystal sits in arm 2 and acts on (H, V) with the Jones
// matrix of a wave plate rotated by delta:
//   [[alpha, beta], [beta, alpha']],
//   alpha  = cos^2 d e^{i phi_y} + sin^2 d e^{i phi_z}
//   beta   = cos d sin d (e^{i phi_y} - e^{i phi_z})
//   alpha' = sin^2 d e^{i phi_y} + cos^2 d e^{i phi_z}
// The reference arm (arm 3) multiplies H by T(w) = e^{i phi_c}.
// Inputs are H polarized; F and G are the H and V output coefficients.

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

#include <Eigen/Dense>

#include "bmzi/crystal_optics.hpp"
#include "bmzi/units.hpp"

namespace bmzi {

using Complex = std::complex<double>;

inline constexpr Complex I{0.0, 1.0};

/// Complex amplitudes on the two ports of a beam splitter (or the coefficients
/// of the input operators A0, A1).
struct PortAmplitudes {
  Complex port0{};
  Complex port1{};
};

inline PortAmplitudes bs_transform(PortAmplitudes a) {
  const double r = 1.0 / std::numbers::sqrt2;
  return {r * (a.port0 + I * a.port1), r * (I * a.port0 + a.port1)};
}

struct PolarizationCoefficients {
  Complex alpha{};
  Complex beta{};
};

inline PolarizationCoefficients polarization_coefficients(double delta, double phi_y,
                                                          double phi_z) {
  const double c = std::cos(delta);
  const double s = std::sin(delta);
  const Complex ey = std::polar(1.0, phi_y);
  const Complex ez = std::polar(1.0, phi_z);
  return {c * c * ey + s * s * ez, c * s * (ey - ez)};
}

/// Output operators A4 = F1 e_H + G1 e_V and A5 = F2 e_H + G2 e_V, each stored
/// as the coefficients multiplying (A0, A1).
struct OutputAmplitudes {
  PortAmplitudes F1, G1, F2, G2;
};

inline OutputAmplitudes compose_outputs(Complex T, PolarizationCoefficients pc) {
  const Complex a = pc.alpha;
  const Complex b = pc.beta;
  OutputAmplitudes out;
  out.F1 = {-0.5 * (T - a), 0.5 * I * (T + a)};
  out.G1 = {0.5 * b, 0.5 * I * b};
  out.F2 = {0.5 * I * (T + a), 0.5 * (T - a)};
  out.G2 = {0.5 * I * b, -0.5 * b};
  return out;
}

struct InterferometerConfig {
  double rotation_angle_rad = 0.0;  // delta, in [0, 2 pi)
  BirefringentCrystal crystal;
  CompensatorState compensator;
  double pump_center_rad_s = 0.0;  // w0p; degenerate photons sit at w0p/2

  void validate() const {
    if (!(rotation_angle_rad >= 0.0 && rotation_angle_rad < units::two_pi))
      throw std::invalid_argument("rotation angle must lie in [0, 2 pi)");
    if (!(pump_center_rad_s > 0.0) || !std::isfinite(pump_center_rad_s))
      throw std::invalid_argument("pump center frequency must be positive");
    crystal.validate();
    compensator.validate();
  }

  double photon_center_rad_s() const { return 0.5 * pump_center_rad_s; }
};

/// Wraps an arbitrary angle into [0, 2 pi).
inline double normalize_angle(double a) {
  double r = std::fmod(a, units::two_pi);
  if (r < 0.0) r += units::two_pi;
  if (r >= units::two_pi) r = 0.0;
  return r;
}

/// Phases seen by one photon at absolute frequency omega with the crystal at temperature T.
struct ArmPhases {
  double phi_y;
  double phi_z;
  double phi_c;
};

inline ArmPhases arm_phases(const InterferometerConfig& config, double omega_rad_s,
                            double temperature_K) {
  const double nu = omega_rad_s - config.photon_center_rad_s();
  const double dT = temperature_K - config.crystal.reference_temperature_K;
  return {phase_at(config.crystal, Axis::y, nu, dT), phase_at(config.crystal, Axis::z, nu, dT),
          reference_arm_phase(config.crystal, config.compensator, nu, omega_rad_s)};
}

inline OutputAmplitudes output_amplitudes(const InterferometerConfig& config, double omega_rad_s,
                                          double temperature_K) {
  const ArmPhases p = arm_phases(config, omega_rad_s, temperature_K);
  return compose_outputs(std::polar(1.0, p.phi_c),
                         polarization_coefficients(config.rotation_angle_rad, p.phi_y, p.phi_z));
}

/// Mode index helpers for the 4x4 map: index = 2*port + polarization (H=0, V=1).
/// Columns are inputs (0H, 0V, 1H, 1V); rows are outputs (4H, 4V, 5H, 5V).
inline constexpr int mode_index(int port, int polarization) { return 2 * port + polarization; }

/// Full two-port, two-polarization transfer matrix, composed step by step from
/// the individual optical elements.
inline Eigen::Matrix4cd transfer_matrix(const InterferometerConfig& config, double omega_rad_s,
                                        double temperature_K) {
  const double nu = omega_rad_s - config.photon_center_rad_s();
  const ArmPhases p = arm_phases(config, omega_rad_s, temperature_K);

  const double r = 1.0 / std::numbers::sqrt2;
  Eigen::Matrix4cd bs = Eigen::Matrix4cd::Zero();
  for (int pol = 0; pol < 2; ++pol) {
    bs(mode_index(0, pol), mode_index(0, pol)) = r;
    bs(mode_index(0, pol), mode_index(1, pol)) = r * I;
    bs(mode_index(1, pol), mode_index(0, pol)) = r * I;
    bs(mode_index(1, pol), mode_index(1, pol)) = r;
  }

  // Rotated wave plate R(-d) diag(e^{i phi_y}, e^{i phi_z}) R(d).
  const double c = std::cos(config.rotation_angle_rad);
  const double s = std::sin(config.rotation_angle_rad);
  Eigen::Matrix2cd rot;
  rot << c, s, -s, c;
  Eigen::Matrix2cd retarder = Eigen::Matrix2cd::Zero();
  retarder(0, 0) = std::polar(1.0, p.phi_y);
  retarder(1, 1) = std::polar(1.0, p.phi_z);
  const Eigen::Matrix2cd jones = rot.transpose() * retarder * rot;

  Eigen::Matrix2cd reference = Eigen::Matrix2cd::Zero();
  reference(0, 0) = std::polar(1.0, p.phi_c);
  reference(1, 1) = std::polar(
      1.0, reference_arm_phase_orthogonal(config.crystal, config.compensator, nu, omega_rad_s));

  Eigen::Matrix4cd arms = Eigen::Matrix4cd::Zero();
  arms.block<2, 2>(0, 0) = jones;      // arm 2
  arms.block<2, 2>(2, 2) = reference;  // arm 3
  return bs * arms * bs;
}

}  // namespace bmzi
