#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "mirror/core/error.hpp"

namespace mirror::reduce {

/// Low-dimensional similarity kernel 1 / (1 + a * d^(2b)).
struct CurveParams {
  double a = 1.0;
  double b = 1.0;

  double operator()(double d) const { return 1.0 / (1.0 + a * std::pow(d, 2.0 * b)); }
};

/// Least-squares fit of (a, b) to the offset exponential that is 1 below
/// `min_dist` and exp(-(d - min_dist) / spread) beyond, sampled at 300
/// points on [0, 3 * spread]. Levenberg-Marquardt from (1, 1).
inline CurveParams fit_curve(double min_dist, double spread) {
  if (!(spread > 0.0) || min_dist < 0.0 || min_dist > spread)
    throw Error(ErrorCode::InvalidArgument, "curve fit needs spread > 0 and 0 <= min_dist <= spread");

  constexpr int samples = 300;
  Eigen::ArrayXd x = Eigen::ArrayXd::LinSpaced(samples, 0.0, 3.0 * spread);
  Eigen::ArrayXd y(samples);
  for (int i = 0; i < samples; ++i) y[i] = x[i] < min_dist ? 1.0 : std::exp(-(x[i] - min_dist) / spread);

  Eigen::Vector2d p(1.0, 1.0);
  auto residuals = [&](const Eigen::Vector2d& q) {
    Eigen::ArrayXd f(samples);
    for (int i = 0; i < samples; ++i) f[i] = 1.0 / (1.0 + q[0] * std::pow(x[i], 2.0 * q[1]));
    return Eigen::VectorXd(f - y);
  };

  Eigen::VectorXd r = residuals(p);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  for (int iter = 0; iter < 200; ++iter) {
    Eigen::MatrixXd J(samples, 2);
    for (int i = 0; i < samples; ++i) {
      const double u = x[i] > 0.0 ? std::pow(x[i], 2.0 * p[1]) : 0.0;
      const double denom = (1.0 + p[0] * u) * (1.0 + p[0] * u);
      J(i, 0) = -u / denom;
      J(i, 1) = x[i] > 0.0 ? -p[0] * u * 2.0 * std::log(x[i]) / denom : 0.0;
    }
    const Eigen::Matrix2d JtJ = J.transpose() * J;
    const Eigen::Vector2d g = J.transpose() * r;

    bool improved = false;
    for (int inner = 0; inner < 30 && !improved; ++inner) {
      Eigen::Matrix2d A = JtJ;
      A.diagonal() *= (1.0 + lambda);
      const Eigen::Vector2d step = A.ldlt().solve(-g);
      const Eigen::Vector2d candidate = p + step;
      if (!(candidate[0] > 0.0) || !(candidate[1] > 0.0)) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd rc = residuals(candidate);
      const double cc = rc.squaredNorm();
      if (cc < cost) {
        const double rel = (cost - cc) / std::max(cost, 1e-300);
        p = candidate;
        r = rc;
        cost = cc;
        lambda = std::max(lambda * 0.1, 1e-12);
        improved = true;
        if (rel < 1e-15 || step.norm() < 1e-12) return {p[0], p[1]};
      } else {
        lambda *= 10.0;
      }
    }
    if (!improved) break;
  }
  return {p[0], p[1]};
}

}  // namespace mirror::reduce
