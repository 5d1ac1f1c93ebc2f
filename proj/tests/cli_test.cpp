// Drives the bmzi executable end to end.

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "bmzi/bmzi.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("bmzi_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name), std::ios::binary) << text;
    return path(name);
  }

  // Runs the CLI; returns its exit status and captures stdout / stderr.
  int run(const std::string& args) {
    const std::string cmd = std::string(BMZI_CLI_PATH) + " " + args + " >" + path("stdout.txt") + " 2>" +
                            path("stderr.txt");
    const int status = std::system(cmd.c_str());
    out_ = read(path("stdout.txt"));
    err_ = read(path("stderr.txt"));
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  static std::string read(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }

  static std::vector<std::vector<double>> csv_rows(const std::string& text, std::string* header = nullptr) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (header) *header = line;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::vector<double> r;
      std::stringstream ls(line);
      for (std::string cell; std::getline(ls, cell, ',');) r.push_back(std::stod(cell));
      rows.push_back(r);
    }
    return rows;
  }

  fs::path dir_;
  std::string out_, err_;
};

json base_config(double delta) {
  json j = bmzi::recipes::base_config(delta, 1.027e-5, 1.680e-5);
  j["sweep"] = {{"T_start", 280.0}, {"T_stop", 320.0}, {"points", 120}};
  return j;
}

}  // namespace

TEST_F(CliTest, SimulateIsByteIdenticalAcrossRuns) {
  auto j = base_config(std::numbers::pi / 3);
  j["noise"] = {{"mean_counts", 2000}, {"background", 0}, {"seed", 5}};
  const auto cfg = write("cfg.json", j.dump());
  ASSERT_EQ(run("simulate " + cfg + " --out " + path("a.csv") + " --data-out " + path("da.csv")), 0) << err_;
  ASSERT_EQ(run("simulate " + cfg + " --out " + path("b.csv") + " --data-out " + path("db.csv")), 0) << err_;
  EXPECT_EQ(read(path("a.csv")), read(path("b.csv")));
  EXPECT_EQ(read(path("da.csv")), read(path("db.csv")));
  ASSERT_EQ(run("fit " + path("da.csv") + " --config " + cfg + " --out " + path("fa.json")), 0) << err_;
  ASSERT_EQ(run("fit " + path("db.csv") + " --config " + cfg + " --out " + path("fb.json")), 0) << err_;
  EXPECT_EQ(read(path("fa.json")), read(path("fb.json")));

  ASSERT_EQ(run("simulate " + cfg + " --out -"), 0);
  EXPECT_EQ(out_, read(path("a.csv")));
  std::string header;
  EXPECT_EQ(csv_rows(out_, &header).size(), 120u);
  EXPECT_EQ(header, "temperature_K,R4,R5,R45");
  std::string data_header;
  csv_rows(read(path("da.csv")), &data_header);
  EXPECT_EQ(data_header, "temperature_K,singles4,singles5,coincidences");
}

TEST_F(CliTest, NoiselessSimulateThenFitIsExact) {
  auto j = base_config(std::numbers::pi / 4);
  j["spectrum"] = {{"kind", "gaussian"}, {"sigma_rad_s", bmzi::recipes::fig5_sigma_rad_s()}};
  j["noise"] = {{"mean_counts", 5000}, {"background", 0}, {"seed", 1}, {"poisson", false}};
  const auto cfg = write("cfg.json", j.dump());
  ASSERT_EQ(run("simulate " + cfg + " --out " + path("r.csv") + " --data-out " + path("d.csv")), 0) << err_;
  ASSERT_EQ(run("fit " + path("d.csv") + " --config " + cfg + " --out -"), 0) << err_;
  const auto res = json::parse(out_);
  EXPECT_LT(res["residual_norm"].get<double>(), 1e-9);
  EXPECT_EQ(res["status"], "ok");
  EXPECT_NEAR(res["derived"]["dny_dT_per_K"]["value"].get<double>(), 1.027e-5, 1e-14);
  EXPECT_NEAR(res["derived"]["dnz_dT_per_K"]["value"].get<double>(), 1.680e-5, 1e-14);
  const auto& params = res["parameters"];
  EXPECT_EQ(params.size(), static_cast<std::size_t>(bmzi::kNumFitParams));
  EXPECT_EQ(params[bmzi::kVisCross]["name"], "visibility_cross");
  EXPECT_NEAR(params[bmzi::kVisCross]["estimate"].get<double>(), 0.6000271279581425, 1e-8);

  // Single-photon fit of the same file.
  ASSERT_EQ(run("fit " + path("d.csv") + " --config " + cfg + " --model single_photon --out -"), 0) << err_;
  EXPECT_LT(json::parse(out_)["residual_norm"].get<double>(), 1e-9);
}

TEST_F(CliTest, NoisyRoundTripWithinThreeSigma) {
  auto j = base_config(std::numbers::pi / 3);
  j["noise"] = {{"mean_counts", 2000}, {"background", 0}, {"seed", 21}};
  const auto cfg = write("cfg.json", j.dump());
  ASSERT_EQ(run("simulate " + cfg + " --out " + path("r.csv") + " --data-out " + path("d.csv")), 0) << err_;
  ASSERT_EQ(run("fit " + path("d.csv") + " --config " + cfg + " --out -"), 0) << err_;
  const auto res = json::parse(out_);
  for (auto [key, truth] : {std::pair{"dny_dT_per_K", 1.027e-5}, std::pair{"dnz_dT_per_K", 1.680e-5}}) {
    const double v = res["derived"][key]["value"].get<double>();
    const double se = res["derived"][key]["std_error"].get<double>();
    EXPECT_GT(se, 0.0);
    EXPECT_LT(std::abs(v - truth), 3.0 * se) << key;
  }
}

TEST_F(CliTest, UnidentifiableFitExitsFour) {
  auto j = base_config(0.0);
  j["noise"] = {{"mean_counts", 2000}, {"background", 0}, {"seed", 3}};
  const auto cfg = write("cfg.json", j.dump());
  ASSERT_EQ(run("simulate " + cfg + " --out " + path("r.csv") + " --data-out " + path("d.csv")), 0) << err_;
  EXPECT_EQ(run("fit " + path("d.csv") + " --config " + cfg + " --out " + path("f.json")), 4);
  EXPECT_NE(err_.find("unidentifiable"), std::string::npos);
  EXPECT_NE(err_.find("phase_rate_z_rad_per_K"), std::string::npos);
  EXPECT_EQ(json::parse(read(path("f.json")))["status"], "unidentifiable");
  EXPECT_EQ(run("fit " + path("d.csv") + " --config " + cfg + " --axes y --out -"), 0) << err_;
}

TEST_F(CliTest, BadInputExitsTwo) {
  const auto syntax = write("syntax.json", "{\n  \"crystal\": {\n    \"L_mm\": 8.0,,\n  }\n}\n");
  EXPECT_EQ(run("simulate " + syntax), 2);
  EXPECT_NE(err_.find("line 3, column 17"), std::string::npos) << err_;

  auto j = base_config(0.0);
  j["crystal"]["L_cm"] = 0.8;
  EXPECT_EQ(run("simulate " + write("unknown.json", j.dump())), 2);
  EXPECT_NE(err_.find("crystal.L_cm: unknown key"), std::string::npos) << err_;

  EXPECT_EQ(run("simulate " + path("missing.json")), 2);

  const auto csv = write("bad.csv", "temperature_K,singles4,singles5,coincidences\n290,1,2,3\n291,1,oops,3\n");
  const auto cfg = write("cfg.json", base_config(1.0).dump());
  EXPECT_EQ(run("fit " + csv + " --config " + cfg), 2);
  EXPECT_NE(err_.find("line 3"), std::string::npos) << err_;

  EXPECT_EQ(run("simulate " + cfg + " --model exact"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(CliTest, AnalyticModelRejectsDetunedCompensator) {
  auto j = base_config(std::numbers::pi / 3);
  j["compensator"]["dL_mm"] = 0.2;
  const auto cfg = write("cfg.json", j.dump());
  EXPECT_EQ(run("simulate " + cfg + " --model analytic"), 2);
  EXPECT_EQ(run("simulate " + cfg + " --model oracle --out -"), 0) << err_;
}

TEST_F(CliTest, OracleNonConvergenceExitsThree) {
  // A 1 fs sinc2 spectrum with a large walk-off exhausts the subdivision budget.
  auto j = base_config(std::numbers::pi / 4);
  j["spectrum"] = {{"kind", "sinc2"}, {"gamma_ps", 1e-3}};
  j["crystal"]["D_ps_per_mm"] = 50.0;
  j["sweep"]["points"] = 2;
  EXPECT_EQ(run("simulate " + write("cfg.json", j.dump()) + " --model oracle"), 3) << err_;
}

TEST_F(CliTest, AnalyticAndOracleAgree) {
  for (const auto& spectrum : {json{{"kind", "gaussian"}, {"sigma_rad_s", bmzi::recipes::fig5_sigma_rad_s()}},
                               json{{"kind", "sinc2"}, {"L_spdc_mm", 20.0}}, json{{"kind", "monochromatic"}}}) {
    auto j = base_config(std::numbers::pi / 4);
    j["spectrum"] = spectrum;
    j["sweep"]["points"] = 40;
    const auto cfg = write("cfg.json", j.dump());
    ASSERT_EQ(run("simulate " + cfg + " --model analytic --out " + path("a.csv")), 0) << err_;
    ASSERT_EQ(run("simulate " + cfg + " --model oracle --out " + path("o.csv")), 0) << err_;
    const auto a = csv_rows(read(path("a.csv")));
    const auto o = csv_rows(read(path("o.csv")));
    ASSERT_EQ(a.size(), o.size());
    double worst = 0.0;
    for (std::size_t r = 0; r < a.size(); ++r) {
      EXPECT_EQ(a[r][0], o[r][0]);
      for (int c = 1; c < 4; ++c) worst = std::max(worst, std::abs(a[r][c] - o[r][c]));
    }
    EXPECT_LT(worst, 1e-6) << spectrum;
  }
}

TEST_F(CliTest, HomCurve) {
  auto j = base_config(0.0);
  j["spectrum"] = {{"kind", "sinc2"}, {"gamma_ps", 9.47}};
  ASSERT_EQ(run("hom " + write("cfg.json", j.dump()) + " --tau-range -37.88:37.88:9.47 --out -"), 0) << err_;
  std::string header;
  const auto rows = csv_rows(out_, &header);
  EXPECT_EQ(header, "tau_ps,coincidence");
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_NEAR(rows[4][0], 0.0, 1e-12);
  EXPECT_NEAR(rows[4][1], 0.0, 1e-9);
  EXPECT_NEAR(rows[3][1], 0.5, 1e-3);  // |tau| = gamma
  EXPECT_NEAR(rows[0][1], 0.5, 1e-3);
  EXPECT_EQ(run("hom " + path("cfg.json") + " --tau-range 5:1:1"), 2);
}

TEST_F(CliTest, ImbalanceTable) {
  auto j = base_config(0.0);
  j["spectrum"] = {{"kind", "sinc2"}, {"fwhm_nm", 1.3}};
  ASSERT_EQ(run("imbalance " + write("cfg.json", j.dump()) + " --dL 0,0.66,5.87 --out -"), 0) << err_;
  std::string header;
  const auto rows = csv_rows(out_, &header);
  EXPECT_EQ(header, "dL_mm,visibility_single,visibility_two_photon");
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NEAR(rows[0][1], 1.0, 1e-6);
  EXPECT_NEAR(rows[0][2], 1.0, 1e-6);
  EXPECT_GT(rows[1][1], 0.4);
  EXPECT_LT(rows[1][1], 0.7);
  EXPECT_GT(rows[1][2], 0.9);
  EXPECT_LT(rows[2][1], 0.02);
  EXPECT_GT(rows[2][2], 0.97);
}

TEST_F(CliTest, ReproduceWritesFigureBundles) {
  for (const char* fig : {"fig2", "fig4", "fig5"}) {
    const auto out = path(fig);
    ASSERT_EQ(run(std::string("reproduce ") + fig + " --out-dir " + out), 0) << err_;
    EXPECT_FALSE(fs::is_empty(out)) << fig;
  }
  EXPECT_TRUE(fs::exists(path("fig2") + "/hom_unfiltered_sinc2.csv"));
  EXPECT_TRUE(fs::exists(path("fig4") + "/imbalance.csv"));
  const auto summary = json::parse(read(path("fig5") + "/summary.json"));
  EXPECT_NEAR(summary["decoherence_factor"].get<double>(), 0.6000271279581425, 1e-12);
  EXPECT_LT(summary["max_abs_difference_analytic_vs_oracle"].get<double>(), 1e-6);

  ASSERT_EQ(run("reproduce fig3 --out-dir " + path("fig3")), 0) << err_;
  const auto fit = json::parse(read(path("fig3") + "/fit_two_photon_delta_pi3.json"));
  EXPECT_EQ(fit["status"], "ok");
  EXPECT_EQ(json::parse(read(path("fig3") + "/fit_two_photon_delta_0.json"))["status"], "unidentifiable");
  // The counts file feeds straight back into the fitter.
  EXPECT_EQ(run("fit " + path("fig3") + "/counts_delta_pi3.csv --config " + path("fig3") +
                "/config_delta_pi3.json --out -"),
            0)
      << err_;
  EXPECT_EQ(json::parse(out_)["parameters"], fit["parameters"]);
}
