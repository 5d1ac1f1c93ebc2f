// bmzi: simulate, fit and reproduce birefringent Mach-Zehnder interferometer fringes.
//
// Exit codes: 0 success, 2 invalid config / data / usage, 3 quadrature did not
// converge, 4 fit model unidentifiable, 5 fit did not converge, 1 other errors.

#include <CLI11.hpp>

#include <charconv>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "bmzi/bmzi.hpp"

namespace {

enum ExitCode { kOk = 0, kFailure = 1, kBadInput = 2, kQuadrature = 3, kUnidentifiable = 4, kNotConverged = 5 };

void write_output(const std::string& path, const std::string& text) {
  if (path == "-") {
    std::cout << text;
    std::cout.flush();
    return;
  }
  bmzi::recipes::write_text(path, text);
}

template <class Writer>
std::string render(Writer&& w) {
  std::ostringstream s;
  w(s);
  return s.str();
}

double parse_double(const std::string& s, const std::string& what) {
  double x = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw bmzi::ConfigError(what + ": not a number: '" + s + "'");
  return x;
}

std::vector<double> parse_tau_range(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() != 3) throw bmzi::ConfigError("--tau-range: expected start:stop:step");
  const double a = parse_double(parts[0], "--tau-range"), b = parse_double(parts[1], "--tau-range"),
               step = parse_double(parts[2], "--tau-range");
  if (!(step > 0.0) || !(b >= a)) throw bmzi::ConfigError("--tau-range: need stop >= start and step > 0");
  if ((b - a) / step > 1e6) throw bmzi::ConfigError("--tau-range: too many points");
  return bmzi::recipes::delay_grid(a, b, step);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Birefringent Mach-Zehnder interferometer simulator and fringe fitter"};
  app.require_subcommand(1);

  std::string config_path, out_path = "-", data_out, model_name = "analytic";
  auto* simulate = app.add_subcommand("simulate", "Evaluate count rates over the configured temperature sweep");
  simulate->add_option("config", config_path, "Experiment config (JSON)")->required();
  simulate->add_option("--model", model_name, "Rate model")->check(CLI::IsMember({"analytic", "oracle"}));
  simulate->add_option("--out", out_path, "Rates CSV path, '-' for stdout");
  simulate->add_option("--data-out", data_out, "Counts CSV path (needs a noise section)");

  std::string data_path, fit_kind = "two_photon", axes = "both", fit_config;
  std::optional<double> fit_delta, fit_length, fit_wavelength, fit_background, fit_tref;
  bool free_background = false;
  auto* fitcmd = app.add_subcommand("fit", "Fit a counts CSV and write the result as JSON");
  fitcmd->add_option("data", data_path, "Counts CSV")->required();
  fitcmd->add_option("--config", fit_config, "Experiment config supplying delta, L, wavelength, background");
  fitcmd->add_option("--model", fit_kind, "Fringe model")->check(CLI::IsMember({"two_photon", "single_photon"}));
  fitcmd->add_option("--axes", axes, "Axes to model")->check(CLI::IsMember({"both", "y", "z"}));
  fitcmd->add_option("--delta", fit_delta, "Rotation angle (rad), overrides the config");
  fitcmd->add_option("--length-mm", fit_length, "Crystal length (mm), overrides the config");
  fitcmd->add_option("--wavelength-nm", fit_wavelength, "Photon wavelength (nm), overrides the config");
  fitcmd->add_option("--background", fit_background, "Fixed background counts");
  fitcmd->add_flag("--free-background", free_background, "Fit the background");
  fitcmd->add_option("--reference-temperature", fit_tref, "Phase reference temperature (K)");
  fitcmd->add_option("--out", out_path, "Result JSON path, '-' for stdout");

  std::string tau_range = "-40:40:0.5";
  auto* hom = app.add_subcommand("hom", "Hong-Ou-Mandel coincidence versus delay");
  hom->add_option("config", config_path, "Experiment config (JSON)")->required();
  hom->add_option("--tau-range", tau_range, "Delays in ps as start:stop:step");
  hom->add_option("--out", out_path, "CSV path, '-' for stdout");

  std::vector<double> path_differences = {0.0, 0.66, 5.87};
  auto* imbalance = app.add_subcommand("imbalance", "Fringe visibilities versus reference-arm path difference");
  imbalance->add_option("config", config_path, "Experiment config (JSON)")->required();
  imbalance->add_option("--dL", path_differences, "Path differences in mm")->delimiter(',');
  imbalance->add_option("--out", out_path, "CSV path, '-' for stdout");

  std::string figure, out_dir = "figures";
  auto* reproduce = app.add_subcommand("reproduce", "Write the data bundle for one figure");
  reproduce->add_option("figure", figure, "fig2, fig3, fig4 or fig5")
      ->required()
      ->check(CLI::IsMember({"fig2", "fig3", "fig4", "fig5"}));
  reproduce->add_option("--out-dir", out_dir, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kBadInput;
  }

  try {
    if (*simulate) {
      const auto cfg = bmzi::load_config(config_path);
      const auto route = model_name == "oracle" ? bmzi::RateRoute::oracle : bmzi::RateRoute::analytic;
      const auto rows = bmzi::evaluate_rates(cfg, route, bmzi::sweep_temperatures(cfg));
      if (!data_out.empty()) {
        const auto data = bmzi::simulate_dataset(cfg, route);
        write_output(data_out, render([&](std::ostream& o) { bmzi::write_counts_csv(o, data); }));
      }
      write_output(out_path, render([&](std::ostream& o) { bmzi::write_rates_csv(o, rows); }));
      return kOk;
    }
    if (*fitcmd) {
      const auto data = bmzi::read_counts_csv_file(data_path);
      const auto kind = fit_kind == "single_photon" ? bmzi::FitKind::single_photon : bmzi::FitKind::two_photon;
      const auto sel = axes == "y" ? bmzi::AxisSelection::y
                       : axes == "z" ? bmzi::AxisSelection::z
                                     : bmzi::AxisSelection::both;
      bmzi::FitModel model;
      if (!fit_config.empty()) {
        model = bmzi::fit_model_for(bmzi::load_config(fit_config), kind, sel);
      } else {
        if (!fit_delta) throw bmzi::ConfigError("fit: give --config or --delta");
        model.kind = kind;
        model.axes = sel;
      }
      if (fit_delta) model.rotation_angle_rad = *fit_delta;
      if (fit_length) model.crystal_length_mm = *fit_length;
      if (fit_wavelength) model.wavelength_nm = *fit_wavelength;
      if (fit_background) model.fixed_background = *fit_background;
      if (free_background) model.fixed_background.reset();
      if (fit_tref) model.reference_temperature_K = *fit_tref;
      const auto result = bmzi::fit(data, model);
      write_output(out_path, bmzi::fit_result_text(result));
      for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
      const auto unid = result.unidentifiable();
      if (!unid.empty()) {
        std::cerr << "error: model is unidentifiable from this data; parameters without information:";
        for (const auto& n : unid) std::cerr << ' ' << n;
        std::cerr << "\n(at delta = 0 or pi/2 only one axis is visible; use --axes y or --axes z)\n";
        return kUnidentifiable;
      }
      if (!result.converged) {
        std::cerr << "error: fit did not converge: " << result.stop_reason << '\n';
        return kNotConverged;
      }
      return kOk;
    }
    if (*hom) {
      const auto cfg = bmzi::load_config(config_path);
      const auto rows = bmzi::hom_curve(cfg, parse_tau_range(tau_range));
      write_output(out_path, render([&](std::ostream& o) { bmzi::recipes::write_hom_csv(o, rows); }));
      return kOk;
    }
    if (*imbalance) {
      const auto cfg = bmzi::load_config(config_path);
      const auto rows = bmzi::imbalance_table(cfg, path_differences);
      write_output(out_path, render([&](std::ostream& o) { bmzi::recipes::write_imbalance_csv(o, rows); }));
      return kOk;
    }
    if (*reproduce) {
      for (const auto& name : bmzi::recipes::reproduce(figure, out_dir))
        std::cerr << "wrote " << (std::filesystem::path(out_dir) / name).string() << '\n';
      return kOk;
    }
  } catch (const bmzi::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const bmzi::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const bmzi::QuadratureError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kQuadrature;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}
