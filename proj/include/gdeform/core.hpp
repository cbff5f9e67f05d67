#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "common.hpp"

//! Spatial primitives: datasets, anchor grids, distances, and gauge
//! transforms on coordinates. Locations live in dimension p, one row per
//! point, and only p = 1 and p = 2 are supported.
namespace gdeform {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

//! Euclidean distance between two points given as equal-length rows.
inline double distance(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& y) {
  return (x - y).norm();
}

//! Dense symmetric matrix of pairwise Euclidean distances between rows.
inline Matrix pairwise_distances(const Matrix& points) {
  const Eigen::Index n = points.rows();
  Matrix d = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double v = (points.row(i) - points.row(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  return d;
}

//! Rectangular matrix of distances between rows of a and rows of b.
inline Matrix cross_distances(const Matrix& a, const Matrix& b) {
  Matrix d(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j)
      d(i, j) = (a.row(i) - b.row(j)).norm();
  return d;
}

//! Affinely rescales values onto [0, 1], mapping the minimum to 0 and the
//! maximum to 1. Throws numeric_error when all entries coincide, since the
//! scale is undefined there.
inline Vector minmax_scale(const Vector& values) {
  if (values.size() == 0) throw numeric_error("minmax_scale: empty input");
  double lo = values.minCoeff();
  double hi = values.maxCoeff();
  if (!(hi > lo))
    throw numeric_error("minmax_scale: degenerate scale, all values equal");
  return (values.array() - lo) / (hi - lo);
}

namespace detail {

inline void check_points(const Matrix& points, const char* what) {
  if (points.rows() < 1) throw data_error(std::string(what) + ": no points");
  if (points.cols() != 1 && points.cols() != 2)
    throw data_error(std::string(what) + ": dimension must be 1 or 2, got " +
                     std::to_string(points.cols()));
  if (!points.allFinite())
    throw data_error(std::string(what) + ": non-finite coordinate");
}

//! Detects exact duplicate rows via a lexicographic sort, O(n log n).
inline bool has_duplicate_rows(const Matrix& points) {
  const Eigen::Index n = points.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    for (Eigen::Index c = 0; c < points.cols(); ++c) {
      if (points(a, c) != points(b, c)) return points(a, c) < points(b, c);
    }
    return false;
  });
  for (std::size_t k = 1; k < order.size(); ++k)
    if (points.row(order[k - 1]) == points.row(order[k])) return true;
  return false;
}

}  // namespace detail

//! Spatial sample: n locations in dimension p with one observed value each.
//!
//! Construction validates the invariants every estimator in this library
//! relies on: at least two points, finite entries, and pairwise distinct
//! locations.
class Dataset {
 public:
  Dataset(Matrix locations, Vector values)
      : locations_(std::move(locations)), values_(std::move(values)) {
    detail::check_points(locations_, "Dataset");
    if (locations_.rows() < 2) throw data_error("Dataset: need at least 2 points");
    if (values_.size() != locations_.rows())
      throw data_error("Dataset: values/locations size mismatch");
    if (!values_.allFinite()) throw data_error("Dataset: non-finite value");
    if (detail::has_duplicate_rows(locations_))
      throw data_error("Dataset: duplicate locations");
  }

  const Matrix& locations() const { return locations_; }
  const Vector& values() const { return values_; }
  Eigen::Index n() const { return locations_.rows(); }
  Eigen::Index dim() const { return locations_.cols(); }

 private:
  Matrix locations_;
  Vector values_;
};

//! Anchor points at which the deformation is estimated before being
//! interpolated everywhere else.
//!
//! Requires m >= p + 2 distinct finite points, and in dimension 2 rejects
//! collinear configurations because the interpolant's affine part would be
//! unidentifiable.
class AnchorSet {
 public:
  explicit AnchorSet(Matrix points) : points_(std::move(points)) {
    detail::check_points(points_, "AnchorSet");
    const Eigen::Index p = points_.cols();
    if (points_.rows() < p + 2)
      throw data_error("AnchorSet: need at least dim + 2 anchor points");
    if (detail::has_duplicate_rows(points_))
      throw data_error("AnchorSet: duplicate anchor points");
    if (p == 2) {
      Matrix centered = points_.rowwise() - points_.colwise().mean();
      Eigen::JacobiSVD<Matrix> svd(centered);
      if (svd.singularValues()(1) <= 1e-10 * svd.singularValues()(0))
        throw data_error("AnchorSet: anchor points are collinear");
    }
  }

  const Matrix& points() const { return points_; }
  Eigen::Index m() const { return points_.rows(); }
  Eigen::Index dim() const { return points_.cols(); }

 private:
  Matrix points_;
};

//! Builds a regular anchor grid over the bounding box of the given
//! locations: a linspace in dimension 1, a g x g lattice in dimension 2
//! with g chosen so the count is close to target_count.
inline AnchorSet make_anchor_grid(const Matrix& locations, Eigen::Index target_count) {
  detail::check_points(locations, "make_anchor_grid");
  if (target_count < locations.cols() + 2)
    throw data_error("make_anchor_grid: target_count too small");
  Eigen::RowVectorXd lo = locations.colwise().minCoeff();
  Eigen::RowVectorXd hi = locations.colwise().maxCoeff();
  for (Eigen::Index c = 0; c < locations.cols(); ++c)
    if (!(hi(c) > lo(c)))
      throw data_error("make_anchor_grid: degenerate bounding box");
  if (locations.cols() == 1) {
    Matrix pts(target_count, 1);
    pts.col(0) = Vector::LinSpaced(target_count, lo(0), hi(0));
    return AnchorSet(std::move(pts));
  }
  Eigen::Index g = std::max<Eigen::Index>(
      2, static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(target_count)))));
  Vector xs = Vector::LinSpaced(g, lo(0), hi(0));
  Vector ys = Vector::LinSpaced(g, lo(1), hi(1));
  Matrix pts(g * g, 2);
  for (Eigen::Index i = 0; i < g; ++i)
    for (Eigen::Index j = 0; j < g; ++j) {
      pts(i * g + j, 0) = xs(i);
      pts(i * g + j, 1) = ys(j);
    }
  return AnchorSet(std::move(pts));
}

//! Similarity transform x -> a R x + b with a > 0 and R orthogonal.
//!
//! Composing the estimated deformation with such a transform changes nothing
//! observable, so these are the natural "gauge" moves used to test
//! identifiability up to rotation, reflection, scaling, and translation.
class GaugeTransform {
 public:
  GaugeTransform(double a, Matrix R, Vector b)
      : a_(a), R_(std::move(R)), b_(std::move(b)) {
    if (!(a_ > 0.0)) throw data_error("GaugeTransform: scale must be positive");
    if (R_.rows() != R_.cols() || (R_.rows() != 1 && R_.rows() != 2))
      throw data_error("GaugeTransform: R must be 1x1 or 2x2");
    if (b_.size() != R_.rows()) throw data_error("GaugeTransform: b size mismatch");
    Matrix gram = R_.transpose() * R_;
    if ((gram - Matrix::Identity(R_.rows(), R_.cols())).cwiseAbs().maxCoeff() > 1e-10)
      throw data_error("GaugeTransform: R is not orthogonal");
  }

  double a() const { return a_; }
  const Matrix& R() const { return R_; }
  const Vector& b() const { return b_; }
  Eigen::Index dim() const { return R_.rows(); }

  //! Applies the transform to each row of points.
  Matrix apply(const Matrix& points) const {
    if (points.cols() != dim())
      throw data_error("GaugeTransform: dimension mismatch");
    return ((a_ * (points * R_.transpose())).rowwise() + b_.transpose());
  }

  //! Draws a random gauge: scale in [0.5, 2], a rotation (optionally
  //! composed with a reflection), and a translation in [-1, 1]^p.
  static GaugeTransform random(Eigen::Index p, rng_type& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double a = 0.5 + 1.5 * unit(rng);
    Matrix R;
    if (p == 1) {
      R = Matrix::Constant(1, 1, unit(rng) < 0.5 ? -1.0 : 1.0);
    } else if (p == 2) {
      double theta = 2.0 * M_PI * unit(rng);
      R.resize(2, 2);
      R << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
      if (unit(rng) < 0.5) R.col(1) = -R.col(1);
    } else {
      throw data_error("GaugeTransform: dimension must be 1 or 2");
    }
    Vector b(p);
    for (Eigen::Index c = 0; c < p; ++c) b(c) = 2.0 * unit(rng) - 1.0;
    return GaugeTransform(a, std::move(R), std::move(b));
  }

 private:
  double a_;
  Matrix R_;
  Vector b_;
};

}  // namespace gdeform
