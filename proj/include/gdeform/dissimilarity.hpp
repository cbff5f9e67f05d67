#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "common.hpp"
#include "core.hpp"
#include "variogram_kernel.hpp"

//! Composite dissimilarity between anchor points: a convex blend of the
//! min-max rescaled kernel variogram matrix and the min-max rescaled
//! geographic distance matrix,
//!
//!   delta_ij = omega * scale(gamma)_ij + (1 - omega) * scale(d)_ij.
//!
//! The geographic term anchors the embedding to the original layout; omega
//! controls how much of the deformation is driven by the data.
namespace gdeform {

//! Rescales the off-diagonal entries of a symmetric matrix onto [0, 1],
//! leaving the diagonal at exactly zero. Throws numeric_error when every
//! off-diagonal entry is identical.
inline Matrix minmax_offdiag(const Matrix& m) {
  const Eigen::Index n = m.rows();
  if (n != m.cols() || n < 2) throw data_error("minmax_offdiag: need a square matrix, order >= 2");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      lo = std::min(lo, m(i, j));
      hi = std::max(hi, m(i, j));
    }
  if (!std::isfinite(lo) || !std::isfinite(hi))
    throw data_error("minmax_offdiag: non-finite entry");
  if (!(hi > lo))
    throw numeric_error("minmax_offdiag: degenerate scale, all off-diagonal entries equal");
  Matrix out = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double v = (m(i, j) - lo) / (hi - lo);
      out(i, j) = v;
      out(j, i) = v;
    }
  return out;
}

//! Blends two symmetric zero-diagonal matrices after rescaling each onto
//! [0, 1] over its off-diagonal entries.
inline Matrix composite_dissimilarity(const Matrix& gamma, const Matrix& dist, double omega) {
  if (gamma.rows() != dist.rows() || gamma.cols() != dist.cols())
    throw data_error("composite_dissimilarity: size mismatch");
  if (!(omega >= 0.0 && omega <= 1.0))
    throw data_error("composite_dissimilarity: omega must lie in [0, 1]");
  return omega * minmax_offdiag(gamma) + (1.0 - omega) * minmax_offdiag(dist);
}

//! Embedding weights p_ij = (total kernel mass over all data pairs for the
//! anchor pair) / anchor distance. The mass factorizes as the product of the
//! per-anchor kernel masses; dividing by distance emphasizes dissimilarities
//! between nearby anchors. Zero mass gives weight 0, which simply
//! downweights that pair.
inline Matrix nmds_weight_matrix(const Vector& mass, const Matrix& dist) {
  const Eigen::Index m = mass.size();
  if (dist.rows() != m || dist.cols() != m)
    throw data_error("nmds_weight_matrix: size mismatch");
  Matrix w = Matrix::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j) {
      if (!(dist(i, j) > 0.0)) throw data_error("nmds_weight_matrix: coincident anchors");
      double v = mass(i) * mass(j) / dist(i, j);
      w(i, j) = v;
      w(j, i) = v;
    }
  return w;
}

inline Matrix nmds_weights(const NsVariogram& vario, const AnchorSet& anchors) {
  auto moments = vario.anchor_moments(anchors.points());
  Vector mass(static_cast<Eigen::Index>(moments.size()));
  for (std::size_t i = 0; i < moments.size(); ++i)
    mass(static_cast<Eigen::Index>(i)) = moments[i].r;
  return nmds_weight_matrix(mass, pairwise_distances(anchors.points()));
}

//! Everything the embedding stage needs about one anchor set.
struct AnchorDissimilarity {
  Matrix delta;  //!< composite dissimilarity, m x m
  Matrix gamma;  //!< raw kernel variogram estimates between anchors
  Matrix dist;   //!< geographic anchor distances
  Vector mass;   //!< kernel mass at each anchor, used as embedding weights
};

//! Evaluates the kernel variogram between all anchor pairs and blends it
//! with geographic distance. Throws numeric_error, naming the anchor, when
//! some anchor has no data point within the bandwidth.
inline AnchorDissimilarity anchor_dissimilarity(const NsVariogram& vario,
                                                const AnchorSet& anchors, double omega) {
  auto moments = vario.anchor_moments(anchors.points());
  for (std::size_t i = 0; i < moments.size(); ++i)
    if (!(moments[i].r > 0.0))
      throw numeric_error("anchor_dissimilarity: anchor " + std::to_string(i) +
                          " has no data within bandwidth " + std::to_string(vario.lambda()) +
                          ", increase the bandwidth or move the anchor");
  AnchorDissimilarity out;
  out.gamma = vario.gamma_matrix(moments);
  out.dist = pairwise_distances(anchors.points());
  out.delta = composite_dissimilarity(out.gamma, out.dist, omega);
  out.mass.resize(static_cast<Eigen::Index>(moments.size()));
  for (std::size_t i = 0; i < moments.size(); ++i)
    out.mass(static_cast<Eigen::Index>(i)) = moments[i].r;
  return out;
}

}  // namespace gdeform
