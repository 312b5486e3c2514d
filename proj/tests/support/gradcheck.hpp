#pragma once

#include <algorithm>
#include <cstdint>

#include <Eigen/Core>

#include "vceval/rng.hpp"

namespace gradcheck {

/// `base` with every entry shifted by U(-0.2, 0.2), so biases and gains are not at their init values.
inline Eigen::VectorXd random_point(const Eigen::VectorXd& base, std::uint64_t seed) {
  vceval::Rng rng(seed);
  Eigen::VectorXd out = base;
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += rng.uniform(-0.2, 0.2);
  return out;
}

/// ||analytic - central difference|| / max(||analytic||, ||central difference||) over all coordinates.
template <typename Loss>
double relative_error(Eigen::VectorXd theta, Loss&& loss, double h = 1e-5) {
  Eigen::VectorXd analytic = Eigen::VectorXd::Zero(theta.size());
  loss(theta, &analytic);
  Eigen::VectorXd numeric(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double keep = theta[i];
    theta[i] = keep + h;
    const double up = loss(theta, nullptr);
    theta[i] = keep - h;
    const double down = loss(theta, nullptr);
    theta[i] = keep;
    numeric[i] = (up - down) / (2.0 * h);
  }
  const double scale = std::max({analytic.norm(), numeric.norm(), 1e-12});
  return (analytic - numeric).norm() / scale;
}

}  // namespace gradcheck
