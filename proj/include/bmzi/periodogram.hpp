#pragma once

// Discrete-time Fourier amplitude of irregularly or regularly sampled data,
// evaluated on an arbitrary frequency grid, plus peak refinement.

#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include "bmzi/units.hpp"

namespace bmzi {

struct SpectralPeak {
  double angular_frequency = 0.0;  // rad per unit of the sample coordinate
  double amplitude = 0.0;          // |sum w_k y_k e^{-i w t_k}| / sum w_k
};

/// Amplitude spectrum with a Hann taper over the sample span.  The mean is
/// removed before transforming.
class Periodogram {
 public:
  Periodogram(std::span<const double> t, std::span<const double> y) : t_(t.begin(), t.end()) {
    if (t.size() != y.size() || t.size() < 4)
      throw std::invalid_argument("periodogram needs at least 4 paired samples");
    const double t0 = t.front(), span = t.back() - t.front();
    if (!(span > 0.0)) throw std::invalid_argument("sample coordinates must span a positive range");
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    weighted_.resize(y.size());
    double wsum = 0.0;
    for (std::size_t k = 0; k < y.size(); ++k) {
      const double x = (t[k] - t0) / span;
      const double w = 0.5 * (1.0 - std::cos(units::two_pi * x));
      weighted_[k] = w * (y[k] - mean);
      wsum += w;
    }
    norm_ = wsum > 0.0 ? 1.0 / wsum : 0.0;
    span_ = span;
  }

  double span() const { return span_; }

  /// Fourier resolution 2 pi / span.
  double resolution() const { return units::two_pi / span_; }

  double amplitude(double omega) const {
    std::complex<double> acc{};
    for (std::size_t k = 0; k < t_.size(); ++k)
      acc += weighted_[k] * std::polar(1.0, -omega * (t_[k] - t_.front()));
    return 2.0 * std::abs(acc) * norm_;
  }

  /// Local maxima on a grid of `oversample` points per resolution element,
  /// refined by golden-section search; sorted by decreasing amplitude.
  std::vector<SpectralPeak> peaks(double omega_min, double omega_max, int oversample = 8) const {
    const double step = resolution() / oversample;
    const int n = std::max(3, static_cast<int>(std::ceil((omega_max - omega_min) / step)) + 1);
    std::vector<double> grid(n), amp(n);
    for (int j = 0; j < n; ++j) {
      grid[j] = omega_min + j * step;
      amp[j] = amplitude(grid[j]);
    }
    std::vector<SpectralPeak> out;
    for (int j = 1; j + 1 < n; ++j) {
      if (amp[j] >= amp[j - 1] && amp[j] > amp[j + 1]) out.push_back(refine(grid[j], step));
    }
    std::sort(out.begin(), out.end(),
              [](const SpectralPeak& a, const SpectralPeak& b) { return a.amplitude > b.amplitude; });
    return out;
  }

  SpectralPeak refine(double omega, double half_width) const {
    double lo = omega - half_width, hi = omega + half_width;
    const double g = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
    double f1 = amplitude(x1), f2 = amplitude(x2);
    for (int it = 0; it < 100 && hi - lo > 1e-14 * std::abs(omega); ++it) {
      if (f1 < f2) {
        lo = x1, x1 = x2, f1 = f2;
        x2 = lo + g * (hi - lo), f2 = amplitude(x2);
      } else {
        hi = x2, x2 = x1, f2 = f1;
        x1 = hi - g * (hi - lo), f1 = amplitude(x1);
      }
    }
    const double x = 0.5 * (lo + hi);
    return {x, amplitude(x)};
  }

 private:
  std::vector<double> t_;
  std::vector<double> weighted_;
  double norm_ = 0.0;
  double span_ = 0.0;
};

/// Strongest spectral component between one resolution element and Nyquist.
inline SpectralPeak dominant_frequency(std::span<const double> t, std::span<const double> y) {
  const Periodogram p(t, y);
  const double nyquist = units::pi * static_cast<double>(t.size() - 1) / p.span();
  const auto peaks = p.peaks(0.5 * p.resolution(), nyquist);
  if (peaks.empty()) return {0.0, 0.0};
  return peaks.front();
}

}  // namespace bmzi
