#pragma once

// Canned configurations and output bundles for the four figure reproductions.

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "bmzi/experiment.hpp"
#include "bmzi/fringe_io.hpp"

namespace bmzi::recipes {

inline constexpr double kT0 = 295.45;
inline constexpr double kDnY = 1.027e-5;
inline constexpr double kDnZ = 1.680e-5;
inline constexpr double kD = 0.947;

inline nlohmann::json base_config(double delta, double dny, double dnz) {
  return {{"crystal",
           {{"L_mm", 8.0},
            {"dny_dT", dny},
            {"dnz_dT", dnz},
            {"D_ps_per_mm", kD},
            {"T0_K", kT0},
            {"dphi_rad", 0.0},
            {"wavelength_nm", 1550.0}}},
          {"compensator", {{"alignment", "y"}, {"dL_mm", 0.0}}},
          {"spectrum", {{"kind", "sinc2"}, {"L_spdc_mm", 20.0}}},
          {"interferometer", {{"delta_rad", delta}, {"pump_center_nm", 775.0}}}};
}

/// Unfiltered sinc2 photons (gamma = D L_spdc / 2) and a 0.5 nm Gaussian filter.
inline std::array<nlohmann::json, 2> fig2_configs() {
  auto unfiltered = base_config(0.0, kDnY, kDnZ);
  unfiltered["spectrum"] = {{"kind", "sinc2"}, {"gamma_ps", 9.47}};
  auto filtered = base_config(0.0, kDnY, kDnZ);
  filtered["spectrum"] = {{"kind", "gaussian"}, {"fwhm_nm", 0.5}};
  return {unfiltered, filtered};
}

inline constexpr std::array<double, 5> kFig3Angles = {0.0, std::numbers::pi / 6, std::numbers::pi / 4,
                                                      std::numbers::pi / 3, std::numbers::pi / 2};
inline constexpr std::array<const char*, 5> kFig3Labels = {"0", "pi6", "pi4", "pi3", "pi2"};

inline nlohmann::json fig3_config(double delta, std::uint64_t seed) {
  auto j = base_config(delta, kDnY, kDnZ);
  j["sweep"] = {{"T_start", 290.96}, {"T_stop", 318.82}, {"points", 201}};
  j["noise"] = {{"mean_counts", 2000.0}, {"background", 0.0}, {"seed", seed}, {"poisson", true}};
  return j;
}

inline constexpr std::array<double, 3> kFig4PathDifferences = {0.0, 0.66, 5.87};

inline nlohmann::json fig4_config() {
  auto j = base_config(0.0, kDnY, kDnZ);
  j["spectrum"] = {{"kind", "sinc2"}, {"fwhm_nm", 1.3}};
  j["sweep"] = {{"T_start", 290.0}, {"T_stop", 310.0}, {"points", 81}};
  return j;
}

/// sigma = (pi / sqrt(ln 2)) x 50 GHz.
inline double fig5_sigma_rad_s() { return std::numbers::pi / std::sqrt(std::log(2.0)) * 50e9; }

inline nlohmann::json fig5_config() {
  auto j = base_config(std::numbers::pi / 4, 1.03e-5, 1.62e-5);
  j["spectrum"] = {{"kind", "gaussian"}, {"sigma_rad_s", fig5_sigma_rad_s()}};
  j["sweep"] = {{"T_start", 275.45}, {"T_stop", 315.45}, {"points", 401}};
  return j;
}

inline std::vector<double> delay_grid(double start_ps, double stop_ps, double step_ps) {
  std::vector<double> t;
  const auto n = static_cast<long>(std::floor((stop_ps - start_ps) / step_ps + 1e-9));
  for (long k = 0; k <= n; ++k) t.push_back(start_ps + step_ps * static_cast<double>(k));
  return t;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

inline void write_hom_csv(std::ostream& out, const std::vector<HomRow>& rows) {
  out << "tau_ps,coincidence\n";
  for (const auto& r : rows) write_csv_row(out, {r.delay_ps, r.coincidence});
}

inline void write_imbalance_csv(std::ostream& out, const std::vector<ImbalanceRow>& rows) {
  out << "dL_mm,visibility_single,visibility_two_photon\n";
  for (const auto& r : rows) write_csv_row(out, {r.path_difference_mm, r.visibility_single, r.visibility_pair});
}

/// Writes the outputs of one figure into dir; returns the file names written.
inline std::vector<std::string> reproduce(const std::string& figure, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> written;
  auto emit = [&](const std::string& name, const std::string& text) {
    write_text(dir / name, text);
    written.push_back(name);
  };
  auto csv = [](auto&& writer) {
    std::ostringstream s;
    writer(s);
    return s.str();
  };

  if (figure == "fig2") {
    const auto cfgs = fig2_configs();
    const auto tau = delay_grid(-40.0, 40.0, 0.25);
    const std::array<const char*, 2> names = {"unfiltered_sinc2", "filtered_gaussian"};
    for (int k = 0; k < 2; ++k) {
      emit(std::string("config_") + names[k] + ".json", cfgs[k].dump(2) + "\n");
      const auto rows = hom_curve(config_from_json(cfgs[k]), tau);
      emit(std::string("hom_") + names[k] + ".csv", csv([&](std::ostream& o) { write_hom_csv(o, rows); }));
    }
  } else if (figure == "fig3") {
    for (std::size_t k = 0; k < kFig3Angles.size(); ++k) {
      const auto j = fig3_config(kFig3Angles[k], 1000 + k);
      const std::string tag = std::string("delta_") + kFig3Labels[k];
      emit("config_" + tag + ".json", j.dump(2) + "\n");
      const auto cfg = config_from_json(j);
      const auto rows = evaluate_rates(cfg, RateRoute::analytic, sweep_temperatures(cfg));
      emit("rates_" + tag + ".csv", csv([&](std::ostream& o) { write_rates_csv(o, rows); }));
      const auto data = simulate_dataset(cfg, RateRoute::analytic);
      emit("counts_" + tag + ".csv", csv([&](std::ostream& o) { write_counts_csv(o, data); }));
      for (FitKind kind : {FitKind::two_photon, FitKind::single_photon}) {
        const auto res = fit(data, fit_model_for(cfg, kind, AxisSelection::both));
        emit(std::string("fit_") + to_string(kind) + "_" + tag + ".json", fit_result_text(res));
      }
    }
  } else if (figure == "fig4") {
    const auto j = fig4_config();
    emit("config.json", j.dump(2) + "\n");
    const auto cfg = config_from_json(j);
    const std::vector<double> dl(kFig4PathDifferences.begin(), kFig4PathDifferences.end());
    const auto table = imbalance_table(cfg, dl);
    emit("imbalance.csv", csv([&](std::ostream& o) { write_imbalance_csv(o, table); }));
    for (double d : dl) {
      ExperimentConfig c = cfg;
      c.interferometer.compensator.extra_path_mm = d;
      const auto rows = evaluate_rates(c, RateRoute::oracle, sweep_temperatures(c));
      emit("rates_dL_" + format_number(d) + "mm.csv", csv([&](std::ostream& o) { write_rates_csv(o, rows); }));
    }
  } else if (figure == "fig5") {
    const auto j = fig5_config();
    emit("config.json", j.dump(2) + "\n");
    const auto cfg = config_from_json(j);
    const auto T = sweep_temperatures(cfg);
    const auto analytic = evaluate_rates(cfg, RateRoute::analytic, T);
    const auto oracle = evaluate_rates(cfg, RateRoute::oracle, T);
    emit("rates_analytic.csv", csv([&](std::ostream& o) { write_rates_csv(o, analytic); }));
    emit("rates_oracle.csv", csv([&](std::ostream& o) { write_rates_csv(o, oracle); }));
    double max_diff = 0.0;
    for (std::size_t k = 0; k < T.size(); ++k)
      for (auto [a, b] : {std::pair{analytic[k].rates.R4, oracle[k].rates.R4},
                          std::pair{analytic[k].rates.R5, oracle[k].rates.R5},
                          std::pair{analytic[k].rates.R45, oracle[k].rates.R45}})
        max_diff = std::max(max_diff, std::abs(a - b));
    const nlohmann::json summary = {
        {"sigma_rad_s", fig5_sigma_rad_s()},
        {"decoherence_factor", coherence_factor(cfg.spectrum, cfg.crystal().walkoff_delay_s())},
        {"max_abs_difference_analytic_vs_oracle", max_diff}};
    emit("summary.json", summary.dump(2) + "\n");
  } else {
    throw ConfigError("unknown figure '" + figure + "' (expected fig2, fig3, fig4 or fig5)");
  }
  return written;
}

}  // namespace bmzi::recipes
