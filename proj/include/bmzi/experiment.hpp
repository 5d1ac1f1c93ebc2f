#pragma once

// Experiment description (JSON), schema validation, and the rate / HOM /
// imbalance evaluators driven by it.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "bmzi/analytic_rates.hpp"
#include "bmzi/crystal_optics.hpp"
#include "bmzi/fringe_fit.hpp"
#include "bmzi/mode_algebra.hpp"
#include "bmzi/spectral_engine.hpp"
#include "bmzi/spectrum.hpp"

namespace bmzi {

/// Invalid configuration or input data.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SweepSpec {
  double T_start_K = 0.0;
  double T_stop_K = 0.0;
  int points = 0;
  std::vector<double> temperatures() const { return linear_sweep(T_start_K, T_stop_K, points); }
};

/// How the spectrum was specified, kept so configs round-trip unchanged.
struct SpectrumSpec {
  std::string kind = "monochromatic";  // monochromatic | gaussian | sinc2
  std::string parameter;                // sigma_rad_s | fwhm_nm | gamma_ps | L_spdc_mm
  double value = 0.0;
};

struct ExperimentConfig {
  InterferometerConfig interferometer;
  double pump_center_nm = 775.0;
  SpectrumSpec spectrum_spec;
  PhotonSpectrum spectrum = Monochromatic{};
  std::optional<SweepSpec> sweep;
  std::optional<NoiseModel> noise;

  const BirefringentCrystal& crystal() const { return interferometer.crystal; }
  double rotation_angle_rad() const { return interferometer.rotation_angle_rad; }
};

namespace detail {

using nlohmann::json;

inline void require_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
}

inline void reject_unknown(const json& j, const std::string& path,
                           std::initializer_list<std::string_view> allowed) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError((path.empty() ? key : path + "." + key) + ": unknown key");
  }
}

inline double number_field(const json& j, const std::string& path, const char* key) {
  const std::string where = path + "." + key;
  if (!j.contains(key)) throw ConfigError(where + ": missing required field");
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(where + ": expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(where + ": must be finite");
  return x;
}

inline std::optional<double> optional_number(const json& j, const std::string& path, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  return number_field(j, path, key);
}

inline std::string string_field(const json& j, const std::string& path, const char* key) {
  const std::string where = path + "." + key;
  if (!j.contains(key)) throw ConfigError(where + ": missing required field");
  if (!j.at(key).is_string()) throw ConfigError(where + ": expected a string");
  return j.at(key).get<std::string>();
}

inline void check(bool ok, const std::string& where, const std::string& what) {
  if (!ok) throw ConfigError(where + ": " + what);
}

// Line and column (1-based) of a byte offset.
inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& root) {
  using detail::check;
  using detail::number_field;
  detail::require_object(root, "config");
  detail::reject_unknown(root, "", {"crystal", "compensator", "spectrum", "interferometer", "sweep", "noise"});
  for (const char* s : {"crystal", "spectrum", "interferometer"})
    if (!root.contains(s)) throw ConfigError(std::string(s) + ": missing required section");

  ExperimentConfig cfg;

  const auto& in = root.at("interferometer");
  detail::require_object(in, "interferometer");
  detail::reject_unknown(in, "interferometer", {"delta_rad", "pump_center_nm"});
  const double delta = number_field(in, "interferometer", "delta_rad");
  check(delta >= 0.0 && delta < units::two_pi, "interferometer.delta_rad", "must lie in [0, 2 pi)");
  cfg.pump_center_nm = number_field(in, "interferometer", "pump_center_nm");
  check(cfg.pump_center_nm > 0.0, "interferometer.pump_center_nm", "must be > 0");

  const auto& cr = root.at("crystal");
  detail::require_object(cr, "crystal");
  detail::reject_unknown(cr, "crystal",
                         {"L_mm", "dny_dT", "dnz_dT", "D_ps_per_mm", "T0_K", "dphi_rad", "wavelength_nm"});
  const double L = number_field(cr, "crystal", "L_mm");
  check(L > 0.0, "crystal.L_mm", "must be > 0");
  const double D = number_field(cr, "crystal", "D_ps_per_mm");
  check(D >= 0.0, "crystal.D_ps_per_mm", "must be >= 0");
  const double T0 = number_field(cr, "crystal", "T0_K");
  check(T0 > 0.0, "crystal.T0_K", "must be > 0");
  const double photon_nm = detail::optional_number(cr, "crystal", "wavelength_nm").value_or(2.0 * cfg.pump_center_nm);
  check(photon_nm > 0.0, "crystal.wavelength_nm", "must be > 0");
  cfg.interferometer.crystal = BirefringentCrystal::from_index_slopes(
      L, number_field(cr, "crystal", "dny_dT"), number_field(cr, "crystal", "dnz_dT"), photon_nm, D,
      number_field(cr, "crystal", "dphi_rad"), T0);
  cfg.interferometer.rotation_angle_rad = delta;
  cfg.interferometer.pump_center_rad_s = units::angular_frequency(cfg.pump_center_nm);

  if (root.contains("compensator")) {
    const auto& cp = root.at("compensator");
    detail::require_object(cp, "compensator");
    detail::reject_unknown(cp, "compensator", {"alignment", "dL_mm", "temperature_K", "phase_offset_rad"});
    const std::string a = detail::string_field(cp, "compensator", "alignment");
    auto& comp = cfg.interferometer.compensator;
    if (a == "y")
      comp.alignment = CompensatorAlignment::y_aligned;
    else if (a == "z")
      comp.alignment = CompensatorAlignment::z_aligned;
    else if (a == "removed")
      comp.alignment = CompensatorAlignment::removed;
    else
      throw ConfigError("compensator.alignment: expected \"y\", \"z\" or \"removed\"");
    comp.extra_path_mm = detail::optional_number(cp, "compensator", "dL_mm").value_or(0.0);
    check(comp.extra_path_mm >= 0.0, "compensator.dL_mm", "must be >= 0");
    comp.fixed_temperature_K = detail::optional_number(cp, "compensator", "temperature_K");
    if (comp.fixed_temperature_K) check(*comp.fixed_temperature_K > 0.0, "compensator.temperature_K", "must be > 0");
    comp.phase_offset_rad = detail::optional_number(cp, "compensator", "phase_offset_rad").value_or(0.0);
  }

  const auto& sp = root.at("spectrum");
  detail::require_object(sp, "spectrum");
  detail::reject_unknown(sp, "spectrum", {"kind", "sigma_rad_s", "gamma_ps", "L_spdc_mm", "fwhm_nm"});
  auto& spec = cfg.spectrum_spec;
  spec.kind = detail::string_field(sp, "spectrum", "kind");
  std::vector<std::string> given;
  for (const char* k : {"sigma_rad_s", "gamma_ps", "L_spdc_mm", "fwhm_nm"})
    if (sp.contains(k)) given.emplace_back(k);
  if (spec.kind == "monochromatic") {
    check(given.empty(), "spectrum", "monochromatic spectrum takes no width parameter");
    cfg.spectrum = Monochromatic{};
  } else if (spec.kind == "gaussian" || spec.kind == "sinc2") {
    const bool gauss = spec.kind == "gaussian";
    check(given.size() == 1, "spectrum",
          gauss ? "gaussian needs exactly one of sigma_rad_s, fwhm_nm"
                : "sinc2 needs exactly one of gamma_ps, L_spdc_mm, fwhm_nm");
    spec.parameter = given.front();
    spec.value = number_field(sp, "spectrum", spec.parameter.c_str());
    const std::string where = "spectrum." + spec.parameter;
    check(spec.value > 0.0, where, "must be > 0");
    if (gauss) {
      if (spec.parameter == "sigma_rad_s")
        cfg.spectrum = GaussianSpectrum{spec.value};
      else if (spec.parameter == "fwhm_nm")
        cfg.spectrum = gaussian_from_fwhm(photon_nm, spec.value);
      else
        throw ConfigError(where + ": not a gaussian parameter");
    } else {
      if (spec.parameter == "gamma_ps")
        cfg.spectrum = Sinc2Spectrum{spec.value};
      else if (spec.parameter == "L_spdc_mm") {
        check(D > 0.0, where, "needs crystal.D_ps_per_mm > 0");
        cfg.spectrum = sinc2_from_crystal(D, spec.value);
      } else if (spec.parameter == "fwhm_nm")
        cfg.spectrum = sinc2_from_fwhm(photon_nm, spec.value);
      else
        throw ConfigError(where + ": not a sinc2 parameter");
    }
  } else {
    throw ConfigError("spectrum.kind: expected \"monochromatic\", \"gaussian\" or \"sinc2\"");
  }

  if (root.contains("sweep")) {
    const auto& sw = root.at("sweep");
    detail::require_object(sw, "sweep");
    detail::reject_unknown(sw, "sweep", {"T_start", "T_stop", "points"});
    SweepSpec s;
    s.T_start_K = number_field(sw, "sweep", "T_start");
    s.T_stop_K = number_field(sw, "sweep", "T_stop");
    check(sw.at("points").is_number_integer(), "sweep.points", "expected an integer");
    s.points = sw.at("points").get<int>();
    check(s.T_stop_K > s.T_start_K, "sweep.T_stop", "must exceed T_start");
    check(s.points >= 2, "sweep.points", "must be >= 2");
    cfg.sweep = s;
  }

  if (root.contains("noise")) {
    const auto& nz = root.at("noise");
    detail::require_object(nz, "noise");
    detail::reject_unknown(nz, "noise", {"mean_counts", "background", "seed", "poisson"});
    NoiseModel n;
    n.mean_counts = number_field(nz, "noise", "mean_counts");
    check(n.mean_counts > 0.0, "noise.mean_counts", "must be > 0");
    n.background = detail::optional_number(nz, "noise", "background").value_or(0.0);
    check(n.background >= 0.0, "noise.background", "must be >= 0");
    if (nz.contains("seed")) {
      check(nz.at("seed").is_number_unsigned(), "noise.seed", "expected a non-negative integer");
      n.seed = nz.at("seed").get<std::uint64_t>();
    }
    if (nz.contains("poisson")) {
      check(nz.at("poisson").is_boolean(), "noise.poisson", "expected true or false");
      n.poisson = nz.at("poisson").get<bool>();
    }
    cfg.noise = n;
  }

  try {
    cfg.interferometer.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return cfg;
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  const auto& c = cfg.crystal();
  j["crystal"] = {{"L_mm", c.length_mm},
                  {"dny_dT", c.dn_dT(Axis::y)},
                  {"dnz_dT", c.dn_dT(Axis::z)},
                  {"D_ps_per_mm", c.group_delay_mismatch_ps_per_mm},
                  {"T0_K", c.reference_temperature_K},
                  {"dphi_rad", c.static_phase_offset_rad},
                  {"wavelength_nm", c.wavelength_nm}};
  const auto& comp = cfg.interferometer.compensator;
  j["compensator"] = {{"alignment", comp.alignment == CompensatorAlignment::y_aligned   ? "y"
                                    : comp.alignment == CompensatorAlignment::z_aligned ? "z"
                                                                                        : "removed"},
                      {"dL_mm", comp.extra_path_mm},
                      {"phase_offset_rad", comp.phase_offset_rad}};
  if (comp.fixed_temperature_K) j["compensator"]["temperature_K"] = *comp.fixed_temperature_K;
  j["spectrum"] = {{"kind", cfg.spectrum_spec.kind}};
  if (!cfg.spectrum_spec.parameter.empty()) j["spectrum"][cfg.spectrum_spec.parameter] = cfg.spectrum_spec.value;
  j["interferometer"] = {{"delta_rad", cfg.rotation_angle_rad()}, {"pump_center_nm", cfg.pump_center_nm}};
  if (cfg.sweep)
    j["sweep"] = {{"T_start", cfg.sweep->T_start_K}, {"T_stop", cfg.sweep->T_stop_K}, {"points", cfg.sweep->points}};
  if (cfg.noise)
    j["noise"] = {{"mean_counts", cfg.noise->mean_counts},
                  {"background", cfg.noise->background},
                  {"seed", cfg.noise->seed},
                  {"poisson", cfg.noise->poisson}};
  return j;
}

/// Parses JSON text; syntax errors report line and column.
inline ExperimentConfig parse_config(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    const auto [line, col] = detail::line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    std::string what = e.what();
    if (const auto pos = what.find("column "); pos != std::string::npos)
      if (const auto colon = what.find(": ", pos); colon != std::string::npos) what = what.substr(colon + 2);
    throw ConfigError("config parse error at line " + std::to_string(line) + ", column " +
                      std::to_string(col) + ": " + what);
  }
  return config_from_json(j);
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

enum class RateRoute { analytic, oracle };

struct RateRow {
  double temperature_K = 0.0;
  CountRates rates;
};

/// Count rates at one temperature by closed form or by spectral quadrature.
/// The closed forms assume a y-aligned compensator at T0 with no extra path.
inline CountRates experiment_rates(const ExperimentConfig& cfg, RateRoute route, double temperature_K,
                                   const SpectralDensity* density = nullptr,
                                   const QuadratureSettings& settings = {}) {
  if (route == RateRoute::analytic) {
    if (!cfg.interferometer.compensator.is_ideal_for(cfg.crystal()))
      throw ConfigError("analytic model requires a y-aligned compensator at T0 with dL_mm = 0 and no phase offset");
    return rates_analytic(cfg.rotation_angle_rad(), cfg.crystal(), cfg.spectrum,
                          temperature_K - cfg.crystal().reference_temperature_K);
  }
  if (density) return oracle_rates(cfg.interferometer, *density, temperature_K, settings);
  const SpectralDensity local(cfg.spectrum, settings);
  return oracle_rates(cfg.interferometer, local, temperature_K, settings);
}

inline std::vector<RateRow> evaluate_rates(const ExperimentConfig& cfg, RateRoute route,
                                           const std::vector<double>& temperatures_K,
                                           const QuadratureSettings& settings = {}) {
  std::optional<SpectralDensity> density;
  if (route == RateRoute::oracle) density.emplace(cfg.spectrum, settings);
  std::vector<RateRow> rows;
  rows.reserve(temperatures_K.size());
  for (double T : temperatures_K)
    rows.push_back({T, experiment_rates(cfg, route, T, density ? &*density : nullptr, settings)});
  return rows;
}

inline std::vector<double> sweep_temperatures(const ExperimentConfig& cfg) {
  if (!cfg.sweep) throw ConfigError("sweep: section required for this command");
  return cfg.sweep->temperatures();
}

/// Noisy (or exact, with poisson = false) counts at the configured sweep.
inline FringeDataset simulate_dataset(const ExperimentConfig& cfg, RateRoute route,
                                      const QuadratureSettings& settings = {}) {
  if (!cfg.noise) throw ConfigError("noise: section required to synthesize counts");
  const auto T = sweep_temperatures(cfg);
  std::optional<SpectralDensity> density;
  if (route == RateRoute::oracle) density.emplace(cfg.spectrum, settings);
  return synthesize(
      T, [&](double t) { return experiment_rates(cfg, route, t, density ? &*density : nullptr, settings); },
      *cfg.noise);
}

struct HomRow {
  double delay_ps = 0.0;
  double coincidence = 0.0;
};

inline std::vector<HomRow> hom_curve(const ExperimentConfig& cfg, const std::vector<double>& delays_ps,
                                     const QuadratureSettings& settings = {}) {
  if (std::holds_alternative<Monochromatic>(cfg.spectrum))
    throw ConfigError("spectrum.kind: HOM needs a gaussian or sinc2 spectrum");
  const SpectralDensity density(cfg.spectrum, settings);
  std::vector<HomRow> rows;
  for (double tau : delays_ps) rows.push_back({tau, hom_dip(density, tau, settings)});
  return rows;
}

struct ImbalanceRow {
  double path_difference_mm = 0.0;
  double visibility_single = 0.0;
  double visibility_pair = 0.0;
};

/// Fringe visibilities versus extra path in the reference arm, at the crystal
/// reference temperature.
inline std::vector<ImbalanceRow> imbalance_table(const ExperimentConfig& cfg, const std::vector<double>& dL_mm,
                                                 const QuadratureSettings& settings = {}) {
  const SpectralDensity density(cfg.spectrum, settings);
  std::vector<ImbalanceRow> rows;
  for (double dl : dL_mm) {
    if (!(dl >= 0.0)) throw ConfigError("dL values must be >= 0");
    InterferometerConfig ic = cfg.interferometer;
    ic.compensator.extra_path_mm = dl;
    const double T = cfg.crystal().reference_temperature_K;
    rows.push_back({dl, imbalance_visibility(ic, density, PhotonOrder::single, T, settings),
                    imbalance_visibility(ic, density, PhotonOrder::pair, T, settings)});
  }
  return rows;
}

/// Fit model matching a configuration.
inline FitModel fit_model_for(const ExperimentConfig& cfg, FitKind kind, AxisSelection axes) {
  FitModel m;
  m.kind = kind;
  m.axes = axes;
  m.rotation_angle_rad = cfg.rotation_angle_rad();
  m.crystal_length_mm = cfg.crystal().length_mm;
  m.wavelength_nm = cfg.crystal().wavelength_nm;
  m.fixed_background = cfg.noise ? cfg.noise->background : 0.0;
  return m;
}

}  // namespace bmzi
