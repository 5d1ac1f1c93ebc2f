#include "bmzi/analytic_rates.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "bmzi/mode_algebra.hpp"
#include "bmzi/periodogram.hpp"
#include "bmzi/spectral_engine.hpp"

using namespace bmzi;

namespace {

const double kFig5Sigma = M_PI / std::sqrt(std::log(2.0)) * 50e9;

BirefringentCrystal fig5_crystal(double dphi = 0.0) {
  return BirefringentCrystal::from_index_slopes(8.0, 1.03e-5, 1.62e-5, 1550.0, 0.947, dphi, 295.45);
}

}  // namespace

TEST(AnalyticRates, MonochromaticCompensated) {
  const auto r = rates_monochromatic(0.0, 0.4, 1.3, 0.4);
  EXPECT_NEAR(r.R4, 1.0, 1e-15);
  EXPECT_NEAR(r.R5, 0.0, 1e-15);
  EXPECT_NEAR(r.R45, 1.0, 1e-15);
}

TEST(AnalyticRates, MonochromaticQuarterTurn) {
  const auto r = rates_monochromatic(0.0, M_PI / 2, 0.0, 0.0);
  EXPECT_NEAR(r.R4, 0.5, 1e-15);
  EXPECT_NEAR(r.R5, 0.5, 1e-15);
  EXPECT_NEAR(r.R45, 0.0, 1e-15);
}

TEST(AnalyticRates, MonochromaticHalfWaveAt45MatchesAmplitudeOracle) {
  // Independent route: per-frequency amplitudes and the two-photon kernel.
  const auto a = compose_outputs(1.0, polarization_coefficients(M_PI / 4, 0.0, M_PI));
  const double r4_oracle = port4_probability(a);
  const double r45_oracle = two_photon_kernel(a, a);
  EXPECT_NEAR(r4_oracle, 0.5, 1e-15);
  EXPECT_NEAR(r45_oracle, 0.5, 1e-15);

  const auto r = rates_monochromatic(M_PI / 4, 0.0, M_PI, 0.0);
  EXPECT_NEAR(r.R4, r4_oracle, 1e-15);
  EXPECT_NEAR(r.R45, r45_oracle, 1e-15);
}

TEST(AnalyticRates, GaussianAtZeroWidthIsMonochromatic) {
  const auto c = fig5_crystal(0.8);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(0.0, 2 * M_PI), t(-20.0, 20.0);
  for (int k = 0; k < 200; ++k) {
    const double delta = d(rng), dT = t(rng);
    const auto g = rates_gaussian(delta, c, {0.0}, dT);
    const auto m = rates_monochromatic(delta, c.thermal_phase_rate(Axis::y) * dT,
                                       c.static_phase_offset_rad + c.thermal_phase_rate(Axis::z) * dT,
                                       0.0);
    EXPECT_DOUBLE_EQ(g.R4, m.R4);
    EXPECT_DOUBLE_EQ(g.R5, m.R5);
    EXPECT_DOUBLE_EQ(g.R45, m.R45);
  }
}

TEST(AnalyticRates, Fig5DecoherenceFactor) {
  // (D L sigma / 2)^2 = 0.51078...; frozen from an independent evaluation.
  EXPECT_NEAR(decoherence_factor(fig5_crystal(), {kFig5Sigma}), 0.6000271279581425, 1e-13);
}

TEST(AnalyticRates, ZeroRotationHasFullSingleVisibilityForAnyBandwidth) {
  const auto c = fig5_crystal();
  for (double sigma : {0.0, kFig5Sigma, 10 * kFig5Sigma}) {
    const double half_period = 0.5 * thermal_fringe_period(c, Axis::y, PhotonOrder::single);
    const auto hi = rates_gaussian(0.0, c, {sigma}, 0.0);
    const auto lo = rates_gaussian(0.0, c, {sigma}, half_period);
    EXPECT_NEAR((hi.R4 - lo.R4) / (hi.R4 + lo.R4), 1.0, 1e-12);
  }
}

TEST(AnalyticRates, Sinc2VisibilityFactorBranches) {
  EXPECT_NEAR(sinc2_visibility_factor(8.0, 20.0), 0.6, 1e-15);
  EXPECT_EQ(sinc2_visibility_factor(8.0, 8.0), 0.0);
  EXPECT_NEAR(sinc2_visibility_factor(8.0, 8.0 + 1e-12), 0.0, 1e-12);
  EXPECT_EQ(sinc2_visibility_factor(8.0, 4.0), 0.0);
  EXPECT_THROW(sinc2_visibility_factor(8.0, 0.0), std::invalid_argument);
}

TEST(AnalyticRates, Sinc2ShortSourceDropsWalkoffTerms) {
  const auto c = fig5_crystal(0.4);
  for (double delta : {0.3, M_PI / 4, 1.2}) {
    for (double dT : {-3.0, 0.0, 7.5}) {
      const auto r = rates_sinc2(delta, c, 4.0, dT);
      const double c2 = std::cos(delta) * std::cos(delta), s2 = 1.0 - c2;
      const double wy = c.thermal_phase_rate(Axis::y), wz = c.thermal_phase_rate(Axis::z);
      EXPECT_NEAR(r.R4, 0.5 * (1.0 + c2 * std::cos(wy * dT)), 1e-14);
      EXPECT_NEAR(r.R5, 0.5 * (1.0 - c2 * std::cos(wy * dT)), 1e-14);
      EXPECT_NEAR(r.R45,
                  0.5 * (1.0 + c2 * c2 * std::cos(2 * wy * dT) +
                         s2 * s2 * std::cos(2 * wz * dT + 2 * c.static_phase_offset_rad)),
                  1e-14);
    }
  }
}

TEST(AnalyticRates, Sinc2MatchesCoherenceDispatch) {
  const auto c = fig5_crystal(0.4);
  const auto spec = sinc2_from_crystal(c.group_delay_mismatch_ps_per_mm, 20.0);
  for (double dT : {-5.0, 1.0, 12.0}) {
    const auto a = rates_sinc2(M_PI / 3, c, 20.0, dT);
    const auto b = rates_analytic(M_PI / 3, c, spec, dT);
    EXPECT_NEAR(a.R4, b.R4, 1e-14);
    EXPECT_NEAR(a.R45, b.R45, 1e-14);
  }
}

TEST(AnalyticRates, SinglesSumToOneAndAllRatesBounded) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ang(0.0, 2 * M_PI), dT(-50.0, 50.0), sig(0.0, 5e12),
      lsp(0.1, 40.0), dn(-3e-5, 3e-5), len(0.5, 30.0), D(0.0, 2.0);
  for (int k = 0; k < 100000; ++k) {
    const auto c = BirefringentCrystal::from_index_slopes(len(rng), dn(rng), dn(rng), 1550.0, D(rng),
                                                          ang(rng), 300.0);
    const double delta = ang(rng), t = dT(rng);
    const CountRates all[] = {
        rates_monochromatic(delta, ang(rng), ang(rng), ang(rng)),
        rates_gaussian(delta, c, {sig(rng)}, t),
        rates_sinc2(delta, c, lsp(rng), t),
    };
    for (const auto& r : all) {
      if (k < 10000) {
        EXPECT_NEAR(r.R4 + r.R5, 1.0, 1e-12);
      }
      ASSERT_GE(r.R4, -1e-15);
      ASSERT_LE(r.R4, 1.0 + 1e-15);
      ASSERT_GE(r.R5, -1e-15);
      ASSERT_LE(r.R5, 1.0 + 1e-15);
      ASSERT_GE(r.R45, -1e-15);
      ASSERT_LE(r.R45, 1.0 + 1e-15);
    }
  }
}

TEST(AnalyticRates, PairFringeIsTwiceAsFastAtPrincipalAngles) {
  const auto c = fig5_crystal(0.6);
  const int n = 4096;
  const double span = 400.0;
  for (double delta : {0.0, M_PI / 2}) {
    std::vector<double> t(n), r4(n), r45(n);
    for (int k = 0; k < n; ++k) {
      t[k] = span * k / (n - 1);
      const auto r = rates_gaussian(delta, c, {kFig5Sigma}, t[k]);
      r4[k] = r.R4;
      r45[k] = r.R45;
    }
    const double f1 = dominant_frequency(t, r4).angular_frequency;
    const double f2 = dominant_frequency(t, r45).angular_frequency;
    EXPECT_NEAR(f2 / f1, 2.0, 1e-3) << "delta = " << delta;
  }
}

TEST(AnalyticRates, GaussianConvergesToMonochromaticQuadratically) {
  // The gap is (D L sigma)^2 / 8 * sin^2(delta) to leading order, so it falls by
  // 100x per decade of sigma: ~2.6e-7 at 1e-3 x nominal, ~2.6e-9 at 1e-4 x nominal.
  const auto c = fig5_crystal(0.3);
  auto gap = [&](double sigma) {
    double worst = 0.0;
    for (int i = 0; i <= 40; ++i) {
      const double delta = M_PI * i / 40.0;
      for (int j = 0; j <= 50; ++j) {
        const double dT = -25.0 + j;
        const auto g = rates_gaussian(delta, c, {sigma}, dT);
        const auto m = rates_gaussian(delta, c, {0.0}, dT);
        worst = std::max({worst, std::abs(g.R4 - m.R4), std::abs(g.R5 - m.R5), std::abs(g.R45 - m.R45)});
      }
    }
    return worst;
  };
  const double g3 = gap(1e-3 * kFig5Sigma);
  const double g4 = gap(1e-4 * kFig5Sigma);
  const double x = c.walkoff_delay_s() * 1e-3 * kFig5Sigma;
  EXPECT_LE(g3, 0.125 * x * x * 1.0001);
  EXPECT_LT(g4, 1e-8);
  EXPECT_NEAR(g3 / g4, 100.0, 1.0);
}

TEST(AnalyticRates, DecoherenceFactorMonotone) {
  double prev = 2.0;
  for (double D = 0.0; D < 3.0; D += 0.1) {
    const auto c = BirefringentCrystal::from_index_slopes(8.0, 1e-5, 1.6e-5, 1550.0, D, 0.0, 300.0);
    const double f = decoherence_factor(c, {kFig5Sigma});
    EXPECT_LT(f, prev);
    prev = f;
  }
  prev = 2.0;
  for (double L = 0.5; L < 30.0; L += 0.5) {
    const auto c = BirefringentCrystal::from_index_slopes(L, 1e-5, 1.6e-5, 1550.0, 0.947, 0.0, 300.0);
    const double f = decoherence_factor(c, {kFig5Sigma});
    EXPECT_LT(f, prev);
    prev = f;
  }
  prev = 2.0;
  for (double s = 0.0; s < 6.0; s += 0.2) {
    const double f = decoherence_factor(fig5_crystal(), {s * kFig5Sigma});
    EXPECT_LT(f, prev);
    prev = f;
  }
}
