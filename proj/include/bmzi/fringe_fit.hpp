#pragma once

// Synthetic temperature-sweep fringes with counting noise, and nonlinear
// least-squares recovery of the per-axis thermal phase rates.
//
// Fitted shapes, with t = T - T_ref, psi_y = w_y t + phi_y, psi_z = w_z t + phi_y + dphi:
//   single photon:  N4,5 = A/2 (1 +- (V_y c^2 cos psi_y + V_z s^2 cos psi_z)) + B
//   two photon:     N45  = A/2 (1 + V_y c^4 cos 2psi_y + V_z s^4 cos 2psi_z
//                               + V_x 2 c^2 s^2 cos(psi_y + psi_z)) + B
// where c = cos(delta), s = sin(delta).  w_j = (dk_j/dT) L.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bmzi/analytic_rates.hpp"
#include "bmzi/crystal_optics.hpp"
#include "bmzi/least_squares.hpp"
#include "bmzi/periodogram.hpp"
#include "bmzi/units.hpp"

namespace bmzi {

struct FringePoint {
  double temperature_K = 0.0;
  double singles4 = 0.0;
  double singles5 = 0.0;
  double coincidences = 0.0;
};

struct FringeDataset {
  std::vector<FringePoint> points;
  double integration_time_s = 10.0;
  double mean_rate_scale = 0.0;  // expected counts per window at unit rate
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (points.empty()) throw std::invalid_argument("dataset is empty");
    for (std::size_t k = 0; k < points.size(); ++k) {
      const auto& p = points[k];
      if (!std::isfinite(p.temperature_K)) throw std::invalid_argument("temperature must be finite");
      for (double c : {p.singles4, p.singles5, p.coincidences})
        if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("counts must be finite and >= 0");
      if (k > 0 && !(p.temperature_K > points[k - 1].temperature_K))
        throw std::invalid_argument("temperatures must be strictly increasing");
    }
  }

  std::vector<double> temperatures() const {
    std::vector<double> t;
    t.reserve(points.size());
    for (const auto& p : points) t.push_back(p.temperature_K);
    return t;
  }
};

struct NoiseModel {
  double mean_counts = 1000.0;  // expected counts at unit rate
  double background = 0.0;      // flat counts added to every channel
  std::uint64_t seed = 0;
  bool poisson = true;          // false: exact expected counts

  void validate() const {
    if (!(mean_counts > 0.0) || !std::isfinite(mean_counts))
      throw std::invalid_argument("mean_counts must be > 0");
    if (!(background >= 0.0) || !std::isfinite(background))
      throw std::invalid_argument("background must be >= 0");
  }
};

/// Expected counts mean_counts * rate + background per channel, optionally
/// Poisson-sampled.  `rates` maps a temperature to CountRates.
template <class RateFn>
FringeDataset synthesize(std::span<const double> temperatures_K, RateFn&& rates,
                         const NoiseModel& noise) {
  if (temperatures_K.empty()) throw std::invalid_argument("temperature sweep is empty");
  noise.validate();
  FringeDataset d;
  d.mean_rate_scale = noise.mean_counts;
  d.rng_seed = noise.seed;
  std::mt19937_64 rng(noise.seed);
  auto draw = [&](double expected) {
    if (!noise.poisson) return expected;
    std::poisson_distribution<long long> pd(expected);
    return expected > 0.0 ? static_cast<double>(pd(rng)) : 0.0;
  };
  for (double T : temperatures_K) {
    const CountRates r = rates(T);
    FringePoint p;
    p.temperature_K = T;
    p.singles4 = draw(noise.mean_counts * r.R4 + noise.background);
    p.singles5 = draw(noise.mean_counts * r.R5 + noise.background);
    p.coincidences = draw(noise.mean_counts * r.R45 + noise.background);
    d.points.push_back(p);
  }
  d.validate();
  return d;
}

/// Evenly spaced sweep including both end points.
inline std::vector<double> linear_sweep(double start, double stop, int points) {
  if (points < 2 || !(stop > start)) throw std::invalid_argument("sweep needs points >= 2 and stop > start");
  std::vector<double> t(points);
  for (int k = 0; k < points; ++k) t[k] = start + (stop - start) * k / (points - 1);
  return t;
}

enum class FitKind { single_photon, two_photon };
enum class AxisSelection { both, y, z };

inline const char* to_string(FitKind k) { return k == FitKind::two_photon ? "two_photon" : "single_photon"; }
inline const char* to_string(AxisSelection a) {
  switch (a) {
    case AxisSelection::both: return "both";
    case AxisSelection::y: return "y";
    case AxisSelection::z: return "z";
  }
  return "both";
}

struct FitModel {
  FitKind kind = FitKind::two_photon;
  double rotation_angle_rad = 0.0;
  double crystal_length_mm = 8.0;
  double wavelength_nm = 1550.0;
  AxisSelection axes = AxisSelection::both;
  // Fixed background counts.  When empty the background is fitted and the
  // first identifiable visibility is pinned to 1 (A, B and the visibilities are
  // otherwise degenerate).
  std::optional<double> fixed_background = 0.0;
  std::optional<double> reference_temperature_K;  // default: middle of the sweep
  double identifiability_threshold = 1e-3;
  LeastSquaresSettings solver{};

  void validate() const {
    if (!(crystal_length_mm > 0.0)) throw std::invalid_argument("crystal length must be > 0");
    if (!(wavelength_nm > 0.0)) throw std::invalid_argument("wavelength must be > 0");
    if (!std::isfinite(rotation_angle_rad)) throw std::invalid_argument("rotation angle must be finite");
    if (fixed_background && !(*fixed_background >= 0.0)) throw std::invalid_argument("background must be >= 0");
  }
};

enum FitParam : int { kAmplitude, kBackground, kRateY, kRateZ, kPhaseY, kDphi, kVisY, kVisZ, kVisCross, kNumFitParams };

inline constexpr std::array<const char*, kNumFitParams> fit_parameter_names = {
    "amplitude",  "background",   "phase_rate_y_rad_per_K", "phase_rate_z_rad_per_K", "phase_y_rad",
    "dphi_rad",   "visibility_y", "visibility_z",           "visibility_cross"};

enum class ParameterStatus { free, at_bound, fixed, unidentifiable, excluded };

inline const char* to_string(ParameterStatus s) {
  switch (s) {
    case ParameterStatus::free: return "free";
    case ParameterStatus::at_bound: return "at_bound";
    case ParameterStatus::fixed: return "fixed";
    case ParameterStatus::unidentifiable: return "unidentifiable";
    case ParameterStatus::excluded: return "excluded";
  }
  return "free";
}

struct FitParameter {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  ParameterStatus status = ParameterStatus::free;
};

enum class Channel { singles4, singles5, coincidences };

/// Parameter vector plus the fixed context needed to evaluate the model.
struct FringeModel {
  FitKind kind = FitKind::two_photon;
  double rotation_angle_rad = 0.0;
  double reference_temperature_K = 0.0;
  std::array<double, kNumFitParams> p{};

  struct Coefficients {
    double c2, s2, c4, s4, cross;
  };
  Coefficients coefficients() const {
    const double c2 = std::cos(rotation_angle_rad) * std::cos(rotation_angle_rad);
    const double s2 = std::sin(rotation_angle_rad) * std::sin(rotation_angle_rad);
    return {c2, s2, c2 * c2, s2 * s2, 2.0 * c2 * s2};
  }

  double operator()(double T, Channel ch) const {
    const auto k = coefficients();
    const double t = T - reference_temperature_K;
    const double py = p[kRateY] * t + p[kPhaseY];
    const double pz = p[kRateZ] * t + p[kPhaseY] + p[kDphi];
    if (ch == Channel::coincidences) {
      const double S = 1.0 + p[kVisY] * k.c4 * std::cos(2.0 * py) + p[kVisZ] * k.s4 * std::cos(2.0 * pz) +
                       p[kVisCross] * k.cross * std::cos(py + pz);
      return 0.5 * p[kAmplitude] * S + p[kBackground];
    }
    const double s = p[kVisY] * k.c2 * std::cos(py) + p[kVisZ] * k.s2 * std::cos(pz);
    const double sign = ch == Channel::singles4 ? 1.0 : -1.0;
    return 0.5 * p[kAmplitude] * (1.0 + sign * s) + p[kBackground];
  }
};

struct DerivedCoefficient {
  double value = 0.0;
  double std_error = 0.0;
  bool identifiable = false;
};

struct FitResult {
  FitKind kind = FitKind::two_photon;
  AxisSelection axes = AxisSelection::both;
  double crystal_length_mm = 0.0;
  double wavelength_nm = 0.0;
  FringeModel model;
  std::vector<FitParameter> parameters;
  Eigen::MatrixXd covariance;  // all parameters; zero rows for non-free ones
  double residual_norm = 0.0;  // weighted
  double reduced_chi2 = 0.0;
  int degrees_of_freedom = 0;
  bool converged = false;
  int iterations = 0;
  std::string stop_reason;
  std::vector<std::string> warnings;

  const FitParameter& parameter(FitParam idx) const { return parameters.at(idx); }

  std::vector<std::string> unidentifiable() const {
    std::vector<std::string> out;
    for (const auto& p : parameters)
      if (p.status == ParameterStatus::unidentifiable) out.push_back(p.name);
    return out;
  }

  std::string status() const {
    if (!unidentifiable().empty()) return "unidentifiable";
    return converged ? "ok" : "not_converged";
  }

  /// dk/dT in rad/(mm K).
  DerivedCoefficient dk_dT(Axis axis) const {
    const auto& w = parameter(axis == Axis::y ? kRateY : kRateZ);
    const bool ok = w.status == ParameterStatus::free || w.status == ParameterStatus::at_bound;
    return {w.estimate / crystal_length_mm, w.std_error / crystal_length_mm, ok};
  }

  DerivedCoefficient dn_dT(Axis axis) const {
    const auto k = dk_dT(axis);
    return {dn_from_dk(k.value, wavelength_nm), dn_from_dk(k.std_error, wavelength_nm), k.identifiable};
  }
};

struct VisibilityEstimate {
  double value = 0.0;
  bool flat = false;  // degenerate: no modulation
};

/// (max - min) / (max + min) of a sampled curve.
inline VisibilityEstimate visibility(std::span<const double> samples) {
  if (samples.empty()) throw std::invalid_argument("visibility needs samples");
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  const double scale = std::max(std::abs(*hi), std::abs(*lo));
  if (!(*hi - *lo > 1e-12 * scale) || !(*hi + *lo > 0.0)) return {0.0, true};
  return {(*hi - *lo) / (*hi + *lo), false};
}

/// Visibility of the fitted model curve over [T_start, T_stop].
inline VisibilityEstimate fitted_visibility(const FringeModel& model, Channel ch, double T_start,
                                            double T_stop, int samples = 20001) {
  std::vector<double> v(samples);
  for (int k = 0; k < samples; ++k)
    v[k] = model(T_start + (T_stop - T_start) * k / (samples - 1), ch);
  return visibility(v);
}

namespace detail {

inline double wrap_phase(double x) {
  x = std::remainder(x, units::two_pi);
  return x <= -units::pi ? x + units::two_pi : x;
}

struct TermLayout {
  bool y = false, z = false, x = false;  // which fringe terms are modelled
  bool axis_y() const { return y || x; }
  bool axis_z() const { return z || x; }
};

// Data prepared for fitting: time offsets, observations and weights.
struct FitData {
  std::vector<double> t;
  std::vector<double> y4, y5, y45;
  std::vector<double> w4, w5, w45;
  double span = 0.0;
};

// Linear least squares for fixed frequencies.  Returns the weighted RSS and the
// coefficients [const, (cos, sin) per term] in term order y, z, x (two-photon)
// or y, z (single photon, fitted to N4 - N5).
struct Projection {
  double rss = std::numeric_limits<double>::infinity();
  Eigen::VectorXd beta;
};

class FrequencySearch {
 public:
  FrequencySearch(const FitData& data, FitKind kind, TermLayout terms)
      : data_(data), kind_(kind), terms_(terms) {
    const std::size_t n = data.t.size();
    signal_.resize(static_cast<Eigen::Index>(n));
    weight_.resize(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
      if (kind == FitKind::two_photon) {
        signal_[i] = data.y45[i];
        weight_[i] = data.w45[i];
      } else {
        signal_[i] = data.y4[i] - data.y5[i];
        weight_[i] = 1.0 / std::sqrt(data.y4[i] + data.y5[i] + 1.0);
      }
    }
  }

  std::vector<double> term_frequencies(double wy, double wz) const {
    std::vector<double> f;
    const double m = kind_ == FitKind::two_photon ? 2.0 : 1.0;
    if (terms_.y) f.push_back(m * wy);
    if (terms_.z) f.push_back(m * wz);
    if (terms_.x && kind_ == FitKind::two_photon) f.push_back(wy + wz);
    return f;
  }

  Projection project(double wy, double wz) const {
    const auto freqs = term_frequencies(wy, wz);
    const auto n = signal_.size();
    const Eigen::Index k = 1 + 2 * static_cast<Eigen::Index>(freqs.size());
    Eigen::MatrixXd X(n, k);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double t = data_.t[static_cast<std::size_t>(i)];
      X(i, 0) = weight_[i];
      for (std::size_t j = 0; j < freqs.size(); ++j) {
        X(i, 1 + 2 * j) = weight_[i] * std::cos(freqs[j] * t);
        X(i, 2 + 2 * j) = weight_[i] * std::sin(freqs[j] * t);
      }
    }
    const Eigen::VectorXd rhs = weight_.cwiseProduct(signal_);
    Projection out;
    out.beta = X.colPivHouseholderQr().solve(rhs);
    out.rss = (X * out.beta - rhs).squaredNorm();
    return out;
  }

  /// Detrended signal for the periodogram.
  std::vector<double> detrended() const {
    const auto n = signal_.size();
    Eigen::MatrixXd X(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) X(i, 0) = 1.0, X(i, 1) = data_.t[static_cast<std::size_t>(i)];
    const Eigen::VectorXd c = X.colPivHouseholderQr().solve(signal_);
    const Eigen::VectorXd r = signal_ - X * c;
    return {r.data(), r.data() + r.size()};
  }

 private:
  const FitData& data_;
  FitKind kind_;
  TermLayout terms_;
  Eigen::VectorXd signal_, weight_;
};

struct Seed {
  double wy = 0.0, wz = 0.0, rss = std::numeric_limits<double>::infinity();
};

}  // namespace detail

namespace detail {

class FringeFitter {
 public:
  FringeFitter(const FringeDataset& data, const FitModel& model) : model_(model) {
    data.validate();
    model.validate();
    if (data.points.size() < 4) throw std::invalid_argument("fit needs at least 4 points");
    const double T_first = data.points.front().temperature_K;
    const double T_last = data.points.back().temperature_K;
    t_ref_ = model.reference_temperature_K.value_or(0.5 * (T_first + T_last));
    for (const auto& p : data.points) {
      d_.t.push_back(p.temperature_K - t_ref_);
      d_.y4.push_back(p.singles4);
      d_.y5.push_back(p.singles5);
      d_.y45.push_back(p.coincidences);
      d_.w4.push_back(1.0 / std::sqrt(p.singles4 + 1.0));
      d_.w5.push_back(1.0 / std::sqrt(p.singles5 + 1.0));
      d_.w45.push_back(1.0 / std::sqrt(p.coincidences + 1.0));
    }
    d_.span = T_last - T_first;
    if (!(d_.span > 0.0)) throw std::invalid_argument("temperature sweep has zero span");
    t_first_ = T_first;
    t_last_ = T_last;
    layout();
  }

  FitResult run() {
    if (!layout_.axis_y() && !layout_.axis_z())
      return finish_without_fringe();

    std::vector<Seed> seeds = search();
    FitResult best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (const auto& s : seeds) {
      for (int order = 0; order < 2; ++order) {
        if (order == 1 && !(layout_.axis_y() && layout_.axis_z())) break;
        const double wy = order == 0 ? s.wy : s.wz;
        const double wz = order == 0 ? s.wz : s.wy;
        auto x0 = initial_parameters(wy, wz);
        auto res = levenberg_marquardt(residual_function(), x0, lower_, upper_, model_.solver);
        FitResult fr = assemble(res);
        const double cost = res.cost;
        const double floor = 0.5 * model_.solver.residual_floor * model_.solver.residual_floor;
        const double slack = best.parameters.empty() ? 0.0 : 1e-9 * best_cost + floor;
        const bool better = cost < best_cost - slack;
        const bool tie = !better && cost <= best_cost + slack;
        if (best.parameters.empty() || better || (tie && fr.parameter(kRateY).estimate < best.parameter(kRateY).estimate)) {
          best = std::move(fr);
          best_cost = cost;
        }
      }
    }
    return best;
  }

 private:
  const FitModel& model_;
  detail::FitData d_;
  double t_ref_ = 0.0, t_first_ = 0.0, t_last_ = 0.0;
  detail::TermLayout layout_;
  std::array<ParameterStatus, kNumFitParams> status_{};
  std::array<double, kNumFitParams> frozen_{};
  Eigen::VectorXd lower_, upper_;

  FringeModel::Coefficients coefficients() const {
    FringeModel m;
    m.rotation_angle_rad = model_.rotation_angle_rad;
    return m.coefficients();
  }

  void layout() {
    const auto k = coefficients();
    const double thr = model_.identifiability_threshold;
    const bool sel_y = model_.axes != AxisSelection::z;
    const bool sel_z = model_.axes != AxisSelection::y;
    const bool pair = model_.kind == FitKind::two_photon;
    const double cy = pair ? k.c4 : k.c2, cz = pair ? k.s4 : k.s2;
    layout_.y = sel_y && cy >= thr;
    layout_.z = sel_z && cz >= thr;
    layout_.x = pair && sel_y && sel_z && k.cross >= thr;

    auto missing = [](bool selected) {
      return selected ? ParameterStatus::unidentifiable : ParameterStatus::excluded;
    };
    status_.fill(ParameterStatus::free);
    frozen_.fill(std::numeric_limits<double>::quiet_NaN());
    auto freeze = [&](FitParam p, ParameterStatus s, double v) {
      status_[p] = s;
      frozen_[p] = v;
    };
    if (model_.fixed_background) freeze(kBackground, ParameterStatus::fixed, *model_.fixed_background);
    if (!layout_.axis_y()) freeze(kRateY, missing(sel_y), 0.0);
    if (!layout_.axis_z()) freeze(kRateZ, missing(sel_z), 0.0);
    if (!layout_.y) freeze(kVisY, missing(sel_y), 0.0);
    if (!layout_.z) freeze(kVisZ, missing(sel_z), 0.0);
    if (!pair)
      freeze(kVisCross, ParameterStatus::excluded, 0.0);
    else if (!layout_.x)
      freeze(kVisCross, missing(sel_y && sel_z), 0.0);
    if (!layout_.axis_z()) freeze(kDphi, missing(sel_z), 0.0);
    // Without a y-axis term only phi_y + dphi is observable; fix the gauge.
    if (!layout_.axis_y()) freeze(kPhaseY, ParameterStatus::fixed, 0.0);
    if (!model_.fixed_background) {
      for (FitParam v : {kVisY, kVisZ, kVisCross}) {
        if (status_[v] == ParameterStatus::free) {
          freeze(v, ParameterStatus::fixed, 1.0);
          break;
        }
      }
    }

    const double inf = std::numeric_limits<double>::infinity();
    lower_.resize(kNumFitParams);
    upper_.resize(kNumFitParams);
    const std::array<double, kNumFitParams> lo = {0.0, 0.0, 0.0, 0.0, -inf, -inf, 0.0, 0.0, 0.0};
    const std::array<double, kNumFitParams> hi = {inf, inf, inf, inf, inf, inf, 1.0, 1.0, 1.0};
    for (int j = 0; j < kNumFitParams; ++j) {
      if (status_[j] == ParameterStatus::free) {
        lower_[j] = lo[j];
        upper_[j] = hi[j];
      } else {
        lower_[j] = upper_[j] = frozen_[j];
      }
    }
  }

  int residual_count() const {
    const int n = static_cast<int>(d_.t.size());
    return model_.kind == FitKind::two_photon ? n : 2 * n;
  }

  ResidualFunction residual_function() const {
    return [this](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
      const auto k = coefficients();
      const int n = static_cast<int>(d_.t.size());
      r.resize(residual_count());
      if (J) J->setZero(residual_count(), kNumFitParams);
      const double A = x[kAmplitude], B = x[kBackground];
      for (int i = 0; i < n; ++i) {
        const double t = d_.t[i];
        const double py = x[kRateY] * t + x[kPhaseY];
        const double pz = x[kRateZ] * t + x[kPhaseY] + x[kDphi];
        if (model_.kind == FitKind::two_photon) {
          const double cy = std::cos(2.0 * py), sy = std::sin(2.0 * py);
          const double cz = std::cos(2.0 * pz), sz = std::sin(2.0 * pz);
          const double cx = std::cos(py + pz), sx = std::sin(py + pz);
          const double ty = x[kVisY] * k.c4, tz = x[kVisZ] * k.s4, tx = x[kVisCross] * k.cross;
          const double S = 1.0 + ty * cy + tz * cz + tx * cx;
          const double w = d_.w45[i];
          r[i] = w * (0.5 * A * S + B - d_.y45[i]);
          if (J) {
            const double h = 0.5 * A * w;
            auto row = J->row(i);
            row[kAmplitude] = 0.5 * S * w;
            row[kBackground] = w;
            row[kRateY] = h * (-2.0 * ty * sy - tx * sx) * t;
            row[kRateZ] = h * (-2.0 * tz * sz - tx * sx) * t;
            row[kPhaseY] = h * (-2.0 * ty * sy - 2.0 * tz * sz - 2.0 * tx * sx);
            row[kDphi] = h * (-2.0 * tz * sz - tx * sx);
            row[kVisY] = h * k.c4 * cy;
            row[kVisZ] = h * k.s4 * cz;
            row[kVisCross] = h * k.cross * cx;
          }
        } else {
          const double ty = x[kVisY] * k.c2, tz = x[kVisZ] * k.s2;
          const double s = ty * std::cos(py) + tz * std::cos(pz);
          const double dwy = -ty * std::sin(py), dwz = -tz * std::sin(pz);
          for (int side = 0; side < 2; ++side) {
            const double sign = side == 0 ? 1.0 : -1.0;
            const double w = side == 0 ? d_.w4[i] : d_.w5[i];
            const double y = side == 0 ? d_.y4[i] : d_.y5[i];
            const int row_index = i + side * n;
            r[row_index] = w * (0.5 * A * (1.0 + sign * s) + B - y);
            if (J) {
              const double h = 0.5 * A * w * sign;
              auto row = J->row(row_index);
              row[kAmplitude] = 0.5 * (1.0 + sign * s) * w;
              row[kBackground] = w;
              row[kRateY] = h * dwy * t;
              row[kRateZ] = h * dwz * t;
              row[kPhaseY] = h * (dwy + dwz);
              row[kDphi] = h * dwz;
              row[kVisY] = h * k.c2 * std::cos(py);
              row[kVisZ] = h * k.s2 * std::cos(pz);
            }
          }
        }
      }
    };
  }

  // Frequency seeds from periodogram peaks refined by variable projection.
  std::vector<Seed> search() const {
    const detail::FrequencySearch vp(d_, model_.kind, layout_);
    const auto signal = vp.detrended();
    const Periodogram pg(d_.t, signal);
    const double res = pg.resolution();
    const double dt_min = [&] {
      double m = std::numeric_limits<double>::infinity();
      for (std::size_t i = 1; i < d_.t.size(); ++i) m = std::min(m, d_.t[i] - d_.t[i - 1]);
      return m;
    }();
    const double nyquist = units::pi / std::max(dt_min, d_.span / (static_cast<double>(d_.t.size()) - 1.0));
    const bool pair = model_.kind == FitKind::two_photon;
    const double w_max = pair ? 0.5 * nyquist : nyquist;
    const double step = res / 16.0;
    const double w_min = 0.25 * res / (pair ? 2.0 : 1.0);

    auto peaks = pg.peaks(0.5 * res, nyquist);
    std::vector<double> p;
    for (std::size_t k = 0; k < peaks.size() && k < 2; ++k) p.push_back(peaks[k].angular_frequency);
    if (p.empty())
      for (double f = res; f <= nyquist; f += res) p.push_back(f);

    std::vector<double> grid;
    for (double w = w_min; w <= w_max; w += step) grid.push_back(w);

    auto eval = [&](double wy, double wz) {
      Seed s{wy, wz, vp.project(wy, wz).rss};
      return s;
    };

    std::vector<Seed> cands;
    const bool two_axes = layout_.axis_y() && layout_.axis_z();
    if (two_axes) {
      for (double f : p) {
        std::vector<std::pair<bool, double>> lines;  // (cross?, fixed frequency)
        if (pair) {
          if (layout_.y || layout_.z) lines.push_back({false, 0.5 * f});
          if (layout_.x) lines.push_back({true, f});
        } else {
          lines.push_back({false, f});
        }
        for (auto [cross, value] : lines) {
          Seed best;
          for (double w : grid) {
            if (cross && !(w < value)) break;
            const Seed s = cross ? eval(w, value - w) : eval(value, w);
            if (s.rss < best.rss) best = s;
          }
          if (std::isfinite(best.rss)) cands.push_back(best);
        }
      }
      for (auto& c : cands) {
        Seed best = c;
        for (int a = -16; a <= 16; ++a)
          for (int b = -16; b <= 16; ++b) {
            const double wy = c.wy + a * step * 2.0, wz = c.wz + b * step * 2.0;
            if (wy <= 0.0 || wz <= 0.0) continue;
            const Seed s = eval(wy, wz);
            if (s.rss < best.rss) best = s;
          }
        c = best;
        if (c.wy > c.wz) std::swap(c.wy, c.wz);
      }
    } else {
      const bool on_y = layout_.axis_y();
      for (double f : p) {
        const double w0 = pair ? 0.5 * f : f;
        Seed best;
        for (int a = -64; a <= 64; ++a) {
          const double w = w0 + a * step * 0.5;
          if (w <= 0.0) continue;
          const Seed s = on_y ? eval(w, 0.0) : eval(0.0, w);
          if (s.rss < best.rss) best = s;
        }
        if (std::isfinite(best.rss)) cands.push_back(best);
      }
    }
    std::sort(cands.begin(), cands.end(), [](const Seed& a, const Seed& b) {
      if (a.rss != b.rss) return a.rss < b.rss;
      return a.wy < b.wy;
    });
    std::vector<Seed> out;
    for (const auto& c : cands) {
      bool dup = false;
      for (const auto& o : out)
        if (std::abs(o.wy - c.wy) < 0.25 * res && std::abs(o.wz - c.wz) < 0.25 * res) dup = true;
      if (!dup) out.push_back(c);
      if (out.size() == 3) break;
    }
    if (out.empty()) throw std::runtime_error("no fringe frequency candidates found");
    return out;
  }

  Eigen::VectorXd initial_parameters(double wy, double wz) const {
    const auto k = coefficients();
    const bool pair = model_.kind == FitKind::two_photon;
    const detail::FrequencySearch vp(d_, model_.kind, layout_);
    const auto proj = vp.project(layout_.axis_y() ? wy : 0.0, layout_.axis_z() ? wz : 0.0);
    const double B = model_.fixed_background.value_or(0.0);

    Eigen::VectorXd x(kNumFitParams);
    for (int j = 0; j < kNumFitParams; ++j) x[j] = frozen_[j];
    double A;
    if (pair) {
      A = 2.0 * (proj.beta[0] - B);
    } else {
      double mean = 0.0;
      for (std::size_t i = 0; i < d_.t.size(); ++i) mean += d_.y4[i] + d_.y5[i];
      A = mean / static_cast<double>(d_.t.size()) - 2.0 * B;
    }
    double scale = 0.0;
    for (double v : pair ? d_.y45 : d_.y4) scale = std::max(scale, v);
    A = std::max(A, 1e-6 * std::max(scale, 1.0));

    // Amplitude and phase of each modelled term.
    int col = 1;
    auto take = [&](bool present, double& amp, double& theta) {
      if (!present) return;
      const double a = proj.beta[col], b = proj.beta[col + 1];
      amp = std::hypot(a, b);
      theta = std::atan2(b, a);
      col += 2;
    };
    double ry = 0, ty = 0, rz = 0, tz = 0, rx = 0, tx = 0;
    take(layout_.y, ry, ty);
    take(layout_.z, rz, tz);
    if (pair) take(layout_.x, rx, tx);

    double u = 0.0, v = 0.0;  // u = phi_y, v = phi_y + dphi
    if (pair) {
      const std::array<double, 2> us = {-0.5 * ty, -0.5 * ty + units::pi};
      const std::array<double, 2> vs = {-0.5 * tz, -0.5 * tz + units::pi};
      if (layout_.x && layout_.y && layout_.z) {
        double best = std::numeric_limits<double>::infinity();
        for (double uu : us)
          for (double vv : vs) {
            const double m = std::abs(wrap_phase(uu + vv + tx));
            if (m < best) best = m, u = uu, v = vv;
          }
      } else if (layout_.x && layout_.z) {
        v = vs[0];
        u = -tx - v;
      } else if (layout_.x && layout_.y) {
        u = us[0];
        v = -tx - u;
      } else if (layout_.x) {
        u = 0.0;
        v = -tx;
      } else {
        u = us[0];
        v = vs[0];
      }
      x[kAmplitude] = A;
      auto vis = [&](double r, double coeff) { return std::clamp(r / (0.5 * A * coeff), 0.0, 1.0); };
      if (status_[kVisY] == ParameterStatus::free) x[kVisY] = vis(ry, k.c4);
      if (status_[kVisZ] == ParameterStatus::free) x[kVisZ] = vis(rz, k.s4);
      if (status_[kVisCross] == ParameterStatus::free) x[kVisCross] = vis(rx, k.cross);
    } else {
      u = -ty;
      v = -tz;
      x[kAmplitude] = A;
      auto vis = [&](double r, double coeff) { return std::clamp(r / (A * coeff), 0.0, 1.0); };
      if (status_[kVisY] == ParameterStatus::free) x[kVisY] = vis(ry, k.c2);
      if (status_[kVisZ] == ParameterStatus::free) x[kVisZ] = vis(rz, k.s2);
    }
    if (!layout_.axis_y()) u = 0.0;
    if (status_[kBackground] == ParameterStatus::free) x[kBackground] = 0.0;
    if (status_[kRateY] == ParameterStatus::free) x[kRateY] = wy;
    if (status_[kRateZ] == ParameterStatus::free) x[kRateZ] = wz;
    if (status_[kPhaseY] == ParameterStatus::free) x[kPhaseY] = wrap_phase(u);
    if (status_[kDphi] == ParameterStatus::free) x[kDphi] = wrap_phase(v - u);
    // Keep the start strictly inside the visibility box so no term starts switched off.
    for (FitParam p : {kVisY, kVisZ, kVisCross})
      if (status_[p] == ParameterStatus::free) x[p] = std::clamp(x[p], 0.05, 0.999);
    return x;
  }

  FitResult base_result() const {
    FitResult fr;
    fr.kind = model_.kind;
    fr.axes = model_.axes;
    fr.crystal_length_mm = model_.crystal_length_mm;
    fr.wavelength_nm = model_.wavelength_nm;
    fr.model.kind = model_.kind;
    fr.model.rotation_angle_rad = model_.rotation_angle_rad;
    fr.model.reference_temperature_K = t_ref_;
    return fr;
  }

  FitResult assemble(const LeastSquaresResult& res) const {
    FitResult fr = base_result();
    Eigen::VectorXd x = res.x;
    // Phase offsets are reported in (-pi, pi], phi_y of a two-photon fit in [-pi/2, pi/2].
    // The two-photon shape is invariant under phi_y -> phi_y + pi.
    x[kPhaseY] = model_.kind == FitKind::two_photon ? std::remainder(x[kPhaseY], units::pi)
                                                     : wrap_phase(x[kPhaseY]);
    x[kDphi] = wrap_phase(x[kDphi]);

    std::vector<bool> use(kNumFitParams);
    for (int j = 0; j < kNumFitParams; ++j)
      use[j] = status_[j] == ParameterStatus::free && !res.at_bound[j];
    fr.covariance = jacobian_covariance(res.jacobian, use);
    for (int j = 0; j < kNumFitParams; ++j) {
      FitParameter p;
      p.name = fit_parameter_names[j];
      p.estimate = x[j];
      p.status = status_[j];
      if (status_[j] == ParameterStatus::free && res.at_bound[j]) p.status = ParameterStatus::at_bound;
      p.std_error = use[j] ? std::sqrt(std::max(fr.covariance(j, j), 0.0)) : 0.0;
      fr.parameters.push_back(p);
      fr.model.p[j] = x[j];
    }
    int free_count = 0;
    for (bool u : use) free_count += u ? 1 : 0;
    fr.degrees_of_freedom = residual_count() - free_count;
    fr.residual_norm = res.residual.norm();
    fr.reduced_chi2 = fr.degrees_of_freedom > 0 ? res.residual.squaredNorm() / fr.degrees_of_freedom : 0.0;
    fr.converged = res.converged;
    fr.iterations = res.iterations;
    fr.stop_reason = res.stop_reason;

    if (!res.converged) fr.warnings.push_back("solver did not converge: " + res.stop_reason);
    double slowest = std::numeric_limits<double>::infinity();
    const double m = model_.kind == FitKind::two_photon ? 2.0 : 1.0;
    if (layout_.y) slowest = std::min(slowest, m * x[kRateY]);
    if (layout_.z) slowest = std::min(slowest, m * x[kRateZ]);
    if (layout_.x) slowest = std::min(slowest, x[kRateY] + x[kRateZ]);
    if (std::isfinite(slowest) && slowest * d_.span < 2.0 * units::two_pi)
      fr.warnings.push_back("sweep spans fewer than two periods of the slowest fringe component");
    for (const auto& p : fr.parameters)
      if (p.status == ParameterStatus::unidentifiable)
        fr.warnings.push_back(p.name + " is unidentifiable at this rotation angle");
    return fr;
  }

  FitResult finish_without_fringe() const {
    // Nothing but A (and B) can be estimated.
    FitResult fr = base_result();
    Eigen::VectorXd x(kNumFitParams);
    for (int j = 0; j < kNumFitParams; ++j) x[j] = frozen_[j];
    x[kAmplitude] = 1.0;
    auto res = levenberg_marquardt(residual_function(), x, lower_, upper_, model_.solver);
    return assemble(res);
  }
};

}  // namespace detail

/// Weighted least-squares fit of a temperature-sweep dataset.
inline FitResult fit(const FringeDataset& data, const FitModel& model) {
  return detail::FringeFitter(data, model).run();
}

}  // namespace bmzi
