#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature.
//
// The interval with the largest error estimate is bisected until the summed
// error estimate meets max(abs_tol, rel_tol * |I|).  The final sum is taken
// over intervals sorted by position with compensated summation, so the result
// does not depend on the order in which intervals were refined.

#include <algorithm>
#include <cmath>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace bmzi {

struct QuadratureSettings {
  double relative_tolerance = 1e-9;
  double absolute_tolerance = 1e-13;
  int max_subdivisions = 50000;
  double gaussian_support_widths = 8.0;  // +- this many sigma
  int sinc2_support_lobes = 400;         // +- this many sinc zeros

  void validate() const {
    if (!(relative_tolerance > 0.0) || !(absolute_tolerance >= 0.0))
      throw std::invalid_argument("quadrature tolerance must be positive");
    if (max_subdivisions < 1) throw std::invalid_argument("max_subdivisions must be >= 1");
    if (!(gaussian_support_widths > 0.0) || sinc2_support_lobes < 1)
      throw std::invalid_argument("spectral support truncation must be positive");
  }
};

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(double achieved_relative_error, double estimate)
      : std::runtime_error("quadrature did not converge: achieved relative error " +
                           std::to_string(achieved_relative_error)),
        achieved_relative_error_(achieved_relative_error),
        estimate_(estimate) {}

  double achieved_relative_error() const { return achieved_relative_error_; }
  double estimate() const { return estimate_; }

 private:
  double achieved_relative_error_;
  double estimate_;
};

struct QuadratureResult {
  double value = 0.0;
  double error_estimate = 0.0;
  int intervals = 0;
  long evaluations = 0;
};

namespace detail {

struct GkInterval {
  double a, b;
  double value;
  double error;
};

struct GkByError {
  bool operator()(const GkInterval& x, const GkInterval& y) const {
    if (x.error != y.error) return x.error < y.error;
    return x.a > y.a;
  }
};

// Kronrod abscissae and weights on [-1, 1]; Gauss weights for the embedded 7-point rule.
inline constexpr double gk_x[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double gk_wk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double gk_wg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
GkInterval gauss_kronrod_15(F& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * gk_wk[7];
  double gauss = fc * gk_wg[3];
  double fv1[7], fv2[7];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * gk_x[j];
    fv1[j] = f(center - dx);
    fv2[j] = f(center + dx);
    const double pair = fv1[j] + fv2[j];
    kronrod += gk_wk[j] * pair;
    if (j % 2 == 1) gauss += gk_wg[j / 2] * pair;
  }
  // QUADPACK-style error heuristic.
  const double mean = 0.5 * kronrod;
  double asc = gk_wk[7] * std::abs(fc - mean);
  for (int j = 0; j < 7; ++j) asc += gk_wk[j] * (std::abs(fv1[j] - mean) + std::abs(fv2[j] - mean));
  asc *= std::abs(half);
  double err = std::abs((kronrod - gauss) * half);
  if (asc != 0.0 && err != 0.0) err = asc * std::min(1.0, std::pow(200.0 * err / asc, 1.5));
  return {a, b, kronrod * half, err};
}

}  // namespace detail

/// Integrates f over [breaks.front(), breaks.back()], starting from the
/// partition given by `breaks` (sorted, at least two points).
template <class F>
QuadratureResult integrate_adaptive(F&& f, std::span<const double> breaks,
                                    const QuadratureSettings& settings = {}) {
  if (breaks.size() < 2) throw std::invalid_argument("need at least two breakpoints");
  std::priority_queue<detail::GkInterval, std::vector<detail::GkInterval>, detail::GkByError> heap;
  double total_error = 0.0;
  double total_value = 0.0;
  for (std::size_t k = 0; k + 1 < breaks.size(); ++k) {
    if (!(breaks[k] < breaks[k + 1])) throw std::invalid_argument("breakpoints must increase");
    auto iv = detail::gauss_kronrod_15(f, breaks[k], breaks[k + 1]);
    total_error += iv.error;
    total_value += iv.value;
    heap.push(iv);
  }
  long evaluations = 15L * static_cast<long>(heap.size());
  int splits = 0;
  auto tolerance = [&] {
    return std::max(settings.absolute_tolerance, settings.relative_tolerance * std::abs(total_value));
  };
  while (total_error > tolerance()) {
    if (splits >= settings.max_subdivisions) {
      const double scale = std::max(std::abs(total_value), settings.absolute_tolerance);
      throw QuadratureError(total_error / scale, total_value);
    }
    const detail::GkInterval worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(worst.a < mid && mid < worst.b)) {
      // Interval cannot be split further in floating point; accept its estimate.
      heap.push({worst.a, worst.b, worst.value, 0.0});
      total_error -= worst.error;
      continue;
    }
    auto left = detail::gauss_kronrod_15(f, worst.a, mid);
    auto right = detail::gauss_kronrod_15(f, mid, worst.b);
    evaluations += 30;
    ++splits;
    total_error += left.error + right.error - worst.error;
    total_value += left.value + right.value - worst.value;
    heap.push(left);
    heap.push(right);
    // Running sums drift; refresh them occasionally.
    if (splits % 256 == 0) {
      auto copy = heap;
      total_error = 0.0;
      total_value = 0.0;
      while (!copy.empty()) {
        total_error += copy.top().error;
        total_value += copy.top().value;
        copy.pop();
      }
    }
  }

  std::vector<detail::GkInterval> pieces;
  pieces.reserve(heap.size());
  while (!heap.empty()) {
    pieces.push_back(heap.top());
    heap.pop();
  }
  std::sort(pieces.begin(), pieces.end(),
            [](const auto& x, const auto& y) { return x.a < y.a; });
  // Neumaier summation.
  double sum = 0.0, comp = 0.0, err = 0.0;
  for (const auto& p : pieces) {
    const double t = sum + p.value;
    if (std::abs(sum) >= std::abs(p.value))
      comp += (sum - t) + p.value;
    else
      comp += (p.value - t) + sum;
    sum = t;
    err += p.error;
  }
  return {sum + comp, err, static_cast<int>(pieces.size()), evaluations};
}

template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b,
                                    const QuadratureSettings& settings = {}) {
  const double breaks[2] = {a, b};
  return integrate_adaptive(std::forward<F>(f), std::span<const double>(breaks, 2), settings);
}

}  // namespace bmzi
