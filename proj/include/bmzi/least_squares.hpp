#pragma once

// Box-constrained Levenberg-Marquardt with Marquardt diagonal scaling and
// Nielsen damping updates.  Variables sitting on a bound whose gradient points
// outward are held fixed for the step; the remaining subproblem is solved by
// QR on the augmented system [J; sqrt(lambda D)].

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace bmzi {

struct LeastSquaresSettings {
  int max_iterations = 500;
  double gradient_tolerance = 1e-6;   // converged when max |cos(J_j, r)| over free columns is below
  double stop_gradient_tolerance = 1e-12;  // iteration stops early below this
  double step_tolerance = 1e-13;      // relative step, per parameter
  double cost_tolerance = 1e-15;      // relative cost decrease
  double initial_damping = 1e-3;
  double residual_floor = 1e-9;       // ||r|| below this counts as an exact fit
};

/// Residual callback: fill r (size m) and, when J is non-null, the m x n Jacobian.
using ResidualFunction =
    std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd* J)>;

struct LeastSquaresResult {
  Eigen::VectorXd x;
  Eigen::VectorXd residual;
  Eigen::MatrixXd jacobian;
  double cost = 0.0;  // 0.5 ||r||^2
  double gradient_cosine = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string stop_reason;
  std::vector<bool> at_bound;
};

namespace detail {

inline bool pinned(double x, double g, double lo, double hi) {
  // g is the gradient of the cost; descent moves along -g.
  return (x <= lo && g > 0.0) || (x >= hi && g < 0.0);
}

inline double gradient_cosine(const Eigen::MatrixXd& J, const Eigen::VectorXd& r,
                              const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                              const Eigen::VectorXd& hi) {
  const double rn = r.norm();
  if (rn == 0.0) return 0.0;
  const Eigen::VectorXd g = J.transpose() * r;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (pinned(x[j], g[j], lo[j], hi[j])) continue;
    const double cn = J.col(j).norm();
    if (cn > 0.0) worst = std::max(worst, std::abs(g[j]) / (cn * rn));
  }
  return worst;
}

}  // namespace detail

inline LeastSquaresResult levenberg_marquardt(const ResidualFunction& f, Eigen::VectorXd x0,
                                              const Eigen::VectorXd& lower,
                                              const Eigen::VectorXd& upper,
                                              const LeastSquaresSettings& settings = {}) {
  const Eigen::Index n = x0.size();
  if (lower.size() != n || upper.size() != n)
    throw std::invalid_argument("bound vectors must match the parameter count");
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(lower[j] <= upper[j])) throw std::invalid_argument("lower bound exceeds upper bound");
    x0[j] = std::clamp(x0[j], lower[j], upper[j]);
  }

  LeastSquaresResult out;
  Eigen::VectorXd x = x0, r, r_new;
  Eigen::MatrixXd J;
  f(x, r, &J);
  double cost = 0.5 * r.squaredNorm();
  double lambda = settings.initial_damping;
  double nu = 2.0;
  Eigen::VectorXd scale = J.colwise().squaredNorm().transpose();

  int it = 0;
  for (; it < settings.max_iterations; ++it) {
    if (std::sqrt(2.0 * cost) <= settings.residual_floor) {
      out.stop_reason = "residual below floor";
      break;
    }
    const Eigen::VectorXd g = J.transpose() * r;
    if (detail::gradient_cosine(J, r, x, lower, upper) <= settings.stop_gradient_tolerance) {
      out.stop_reason = "gradient tolerance";
      break;
    }
    std::vector<Eigen::Index> free;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!detail::pinned(x[j], g[j], lower[j], upper[j]) && lower[j] < upper[j]) free.push_back(j);
    if (free.empty()) {
      out.stop_reason = "all parameters pinned at bounds";
      break;
    }
    const auto nf = static_cast<Eigen::Index>(free.size());
    for (Eigen::Index k = 0; k < nf; ++k)
      scale[free[k]] = std::max(scale[free[k]], J.col(free[k]).squaredNorm());

    bool accepted = false;
    bool small_step = false;
    while (!accepted) {
      Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(J.rows() + nf, nf);
      Eigen::VectorXd rhs = Eigen::VectorXd::Zero(J.rows() + nf);
      for (Eigen::Index k = 0; k < nf; ++k) {
        aug.col(k).head(J.rows()) = J.col(free[k]);
        aug(J.rows() + k, k) = std::sqrt(lambda * std::max(scale[free[k]], 1e-300));
      }
      rhs.head(J.rows()) = -r;
      const Eigen::VectorXd step_free = aug.colPivHouseholderQr().solve(rhs);

      Eigen::VectorXd x_new = x;
      for (Eigen::Index k = 0; k < nf; ++k) {
        const Eigen::Index j = free[k];
        x_new[j] = std::clamp(x[j] + step_free[k], lower[j], upper[j]);
      }
      const Eigen::VectorXd dx = x_new - x;
      bool tiny = true;
      for (Eigen::Index j = 0; j < n && tiny; ++j)
        tiny = std::abs(dx[j]) <= settings.step_tolerance * (std::abs(x[j]) + settings.step_tolerance);
      if (tiny) {
        small_step = true;
        break;
      }
      f(x_new, r_new, nullptr);
      const double cost_new = 0.5 * r_new.squaredNorm();
      const Eigen::VectorXd Jdx = J * dx;
      const double predicted = -(g.dot(dx) + 0.5 * Jdx.squaredNorm());
      const double actual = cost - cost_new;
      const double rho = predicted > 0.0 ? actual / predicted : -1.0;
      if (std::isfinite(cost_new) && actual > 0.0 && rho > 0.0) {
        const double rel = actual / std::max(cost, std::numeric_limits<double>::min());
        x = x_new;
        f(x, r, &J);
        cost = 0.5 * r.squaredNorm();
        lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
        nu = 2.0;
        accepted = true;
        if (rel <= settings.cost_tolerance) small_step = true;
      } else {
        lambda *= nu;
        nu *= 2.0;
        if (!std::isfinite(lambda) || lambda > 1e30) {
          small_step = true;
          break;
        }
      }
    }
    if (small_step) {
      out.stop_reason = "step or cost change below tolerance";
      ++it;
      break;
    }
  }
  if (out.stop_reason.empty()) out.stop_reason = "iteration limit";

  out.gradient_cosine = detail::gradient_cosine(J, r, x, lower, upper);
  out.converged = std::sqrt(2.0 * cost) <= settings.residual_floor ||
                  out.gradient_cosine <= settings.gradient_tolerance;
  out.x = x;
  out.residual = r;
  out.jacobian = J;
  out.cost = cost;
  out.iterations = it;
  out.at_bound.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) out.at_bound[j] = x[j] <= lower[j] || x[j] >= upper[j];
  return out;
}

/// (J^T J)^-1 restricted to the selected columns; other rows/columns are zero.
inline Eigen::MatrixXd jacobian_covariance(const Eigen::MatrixXd& J, const std::vector<bool>& use) {
  const Eigen::Index n = J.cols();
  std::vector<Eigen::Index> idx;
  for (Eigen::Index j = 0; j < n; ++j)
    if (use[j]) idx.push_back(j);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(n, n);
  if (idx.empty()) return cov;
  const auto k = static_cast<Eigen::Index>(idx.size());
  Eigen::MatrixXd Js(J.rows(), k);
  for (Eigen::Index a = 0; a < k; ++a) Js.col(a) = J.col(idx[a]);
  // Pseudo-inverse through the SVD keeps the result PSD when J^T J is near singular.
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(Js, Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  const double cutoff = s.size() ? s[0] * 1e-12 * static_cast<double>(std::max(J.rows(), k)) : 0.0;
  Eigen::VectorXd inv2 = Eigen::VectorXd::Zero(s.size());
  for (Eigen::Index a = 0; a < s.size(); ++a)
    if (s[a] > cutoff) inv2[a] = 1.0 / (s[a] * s[a]);
  const Eigen::MatrixXd V = svd.matrixV();
  const Eigen::MatrixXd small = V * inv2.asDiagonal() * V.transpose();
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b) cov(idx[a], idx[b]) = 0.5 * (small(a, b) + small(b, a));
  return cov;
}

}  // namespace bmzi
