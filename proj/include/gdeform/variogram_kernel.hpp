#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "common.hpp"
#include "core.hpp"

//! Kernel estimator of the non-stationary variogram
//!
//!   gamma(x, y) = sum_{k,l} K(x,s_k) K(y,s_l) (Z_k - Z_l)^2
//!                 / (2 sum_{k,l} K(x,s_k) K(y,s_l)),   gamma(x, x) = 0,
//!
//! with an unnormalized Epanechnikov kernel K of bandwidth lambda. The
//! double sum factorizes through three kernel moments per point, so one
//! evaluation costs O(n) instead of O(n^2).
namespace gdeform {

//! Unnormalized Epanechnikov kernel between two points:
//! (1 - (d/lambda)^2) for d <= lambda, 0 beyond, value 1 at d = 0.
inline double epanechnikov(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& s,
                           double lambda) {
  if (!(lambda > 0.0)) throw data_error("epanechnikov: bandwidth must be positive");
  double u = (x - s).norm() / lambda;
  return u <= 1.0 ? 1.0 - u * u : 0.0;
}

//! Raw half squared increments of all ordered data pairs,
//! cloud(i, j) = (Z_i - Z_j)^2 / 2. Symmetric with zero diagonal.
inline Matrix variogram_cloud(const Dataset& data) {
  const Eigen::Index n = data.n();
  Matrix cloud = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double dz = data.values()(i) - data.values()(j);
      cloud(i, j) = 0.5 * dz * dz;
      cloud(j, i) = cloud(i, j);
    }
  return cloud;
}

class NsVariogram {
 public:
  //! Kernel moments of one evaluation point: total mass r = sum_k w_k,
  //! s1 = sum_k w_k Zc_k and s2 = sum_k w_k Zc_k^2 over centered values Zc,
  //! plus the number of data points with positive weight.
  struct Moments {
    double r = 0.0;
    double s1 = 0.0;
    double s2 = 0.0;
    Eigen::Index support = 0;
  };

  NsVariogram(const Dataset& data, double lambda)
      : locations_(data.locations()), lambda_(lambda) {
    if (!std::isfinite(lambda) || lambda <= 0.0)
      throw data_error("NsVariogram: bandwidth must be positive");
    // Centering the values leaves every (Z_k - Z_l)^2 unchanged but keeps the
    // factorized numerator free of catastrophic cancellation when the mean
    // dominates the fluctuations.
    mean_ = data.values().mean();
    zc_ = data.values().array() - mean_;
    zc2_ = zc_.array().square();
  }

  double lambda() const { return lambda_; }
  Eigen::Index n() const { return locations_.rows(); }
  Eigen::Index dim() const { return locations_.cols(); }
  const Matrix& locations() const { return locations_; }

  //! Epanechnikov weight for a distance: (1 - (d/lambda)^2) on d <= lambda,
  //! zero beyond. Unnormalized, so the weight at distance zero is 1.
  double kernel_weight(double dist) const {
    if (dist > lambda_) return 0.0;
    double u = dist / lambda_;
    return 1.0 - u * u;
  }

  //! Kernel moments of an arbitrary point, O(n).
  Moments moments(const Eigen::RowVectorXd& x) const {
    Moments m;
    for (Eigen::Index k = 0; k < locations_.rows(); ++k) {
      double w = kernel_weight((locations_.row(k) - x).norm());
      if (w <= 0.0) continue;
      m.r += w;
      m.s1 += w * zc_(k);
      m.s2 += w * zc2_(k);
      ++m.support;
    }
    return m;
  }

  //! Combines the moments of two distinct points into the estimate. Throws
  //! numeric_error when either point has no data inside its bandwidth.
  static double combine(const Moments& mx, const Moments& my) {
    if (!(mx.r > 0.0) || !(my.r > 0.0))
      throw numeric_error("NsVariogram: empty kernel support, increase the bandwidth");
    double num = mx.s2 * my.r - 2.0 * mx.s1 * my.s1 + mx.r * my.s2;
    return std::max(0.0, num / (2.0 * mx.r * my.r));
  }

  //! As combine, but reports empty support through the ok flag instead of
  //! throwing. Used by cross-validation loops that skip such pairs.
  static double combine_checked(const Moments& mx, const Moments& my, bool& ok) {
    if (!(mx.r > 0.0) || !(my.r > 0.0)) {
      ok = false;
      return 0.0;
    }
    ok = true;
    double num = mx.s2 * my.r - 2.0 * mx.s1 * my.s1 + mx.r * my.s2;
    return std::max(0.0, num / (2.0 * mx.r * my.r));
  }

  //! Estimate at a pair of points; identical points give exactly zero.
  double operator()(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& y) const {
    if (x == y) return 0.0;
    return combine(moments(x), moments(y));
  }

  //! Moments of every row of points, parallelized across rows.
  std::vector<Moments> anchor_moments(const Matrix& points) const {
    std::vector<Moments> out(static_cast<std::size_t>(points.rows()));
    parallel_for(out.size(),
                 [&](std::size_t i) { out[i] = moments(points.row(static_cast<Eigen::Index>(i))); });
    return out;
  }

  //! Symmetric estimate matrix over precomputed moments, zero diagonal.
  Matrix gamma_matrix(const std::vector<Moments>& moments_list) const {
    const Eigen::Index m = static_cast<Eigen::Index>(moments_list.size());
    Matrix g = Matrix::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = i + 1; j < m; ++j) {
        double v = combine(moments_list[static_cast<std::size_t>(i)],
                           moments_list[static_cast<std::size_t>(j)]);
        g(i, j) = v;
        g(j, i) = v;
      }
    return g;
  }

  Matrix gamma_matrix(const Matrix& points) const {
    return gamma_matrix(anchor_moments(points));
  }

  //! Direct O(n^2) evaluation of the double sum. Reference implementation
  //! kept for verifying the factorized path.
  double brute_force(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& y) const {
    if (x == y) return 0.0;
    double num = 0.0;
    double den = 0.0;
    for (Eigen::Index k = 0; k < locations_.rows(); ++k) {
      double wx = kernel_weight((locations_.row(k) - x).norm());
      if (wx <= 0.0) continue;
      for (Eigen::Index l = 0; l < locations_.rows(); ++l) {
        double wy = kernel_weight((locations_.row(l) - y).norm());
        if (wy <= 0.0) continue;
        double dz = zc_(k) - zc_(l);
        num += wx * wy * dz * dz;
        den += wx * wy;
      }
    }
    if (!(den > 0.0))
      throw numeric_error("NsVariogram: empty kernel support, increase the bandwidth");
    return num / (2.0 * den);
  }

 private:
  Matrix locations_;
  double lambda_;
  double mean_ = 0.0;
  Vector zc_;
  Vector zc2_;
};

}  // namespace gdeform
