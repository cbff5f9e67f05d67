#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "common.hpp"
#include "core.hpp"
#include "isotonic.hpp"

//! Weighted non-metric multidimensional scaling.
//!
//! Finds a configuration U whose pairwise distances h_ij reproduce the rank
//! order of a dissimilarity delta_ij, by minimizing Kruskal's Stress-1
//!
//!   S(U) = sqrt( sum_ij w_ij (dhat_ij - h_ij)^2 / sum_ij w_ij h_ij^2 )
//!
//! where the disparities dhat are the isotonic regression of the h onto the
//! order of delta. Updates use the weighted Guttman majorization step with a
//! step-halving line search, so the stress trace is strictly decreasing up
//! to the stopping point.
namespace gdeform {

struct NmdsOptions {
  int max_iter = 500;
  double tol = 1e-6;  //!< stop when the relative stress decrease falls below
};

struct NmdsResult {
  Matrix config;              //!< embedded points, one row per input point
  double stress = 0.0;        //!< final Stress-1
  int iterations = 0;         //!< accepted majorization steps
  bool converged = false;
  std::vector<double> trace;  //!< stress after 0, 1, ... iterations
  Matrix disparities;         //!< fitted disparities at the final config
};

namespace detail {

//! Pair bookkeeping shared by every stress evaluation: upper-triangle pairs,
//! their dissimilarities and weights, and the fixed isotonic order (sorted
//! by dissimilarity, ties kept in pair-enumeration order).
struct NmdsPairs {
  std::vector<Eigen::Index> pi, pj;
  Vector delta, w;
  std::vector<std::size_t> order;
  double wsum = 0.0;

  NmdsPairs(const Matrix& d, const Matrix& weights) {
    const Eigen::Index m = d.rows();
    if (d.cols() != m || m < 2) throw data_error("nmds: dissimilarity must be square, order >= 2");
    if (weights.rows() != m || weights.cols() != m)
      throw data_error("nmds: weight matrix size mismatch");
    const std::size_t np = static_cast<std::size_t>(m) * (m - 1) / 2;
    pi.reserve(np);
    pj.reserve(np);
    delta.resize(static_cast<Eigen::Index>(np));
    w.resize(static_cast<Eigen::Index>(np));
    std::size_t k = 0;
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = i + 1; j < m; ++j, ++k) {
        if (!std::isfinite(d(i, j)) || d(i, j) < 0.0)
          throw data_error("nmds: dissimilarities must be finite and nonnegative");
        if (!std::isfinite(weights(i, j)) || weights(i, j) < 0.0)
          throw data_error("nmds: weights must be finite and nonnegative");
        pi.push_back(i);
        pj.push_back(j);
        delta(static_cast<Eigen::Index>(k)) = d(i, j);
        w(static_cast<Eigen::Index>(k)) = weights(i, j);
      }
    wsum = w.sum();
    if (!(wsum > 0.0)) throw data_error("nmds: all pair weights are zero");
    order.resize(np);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return delta(static_cast<Eigen::Index>(a)) < delta(static_cast<Eigen::Index>(b));
    });
  }

  Vector distances(const Matrix& u) const {
    Vector h(delta.size());
    for (std::size_t k = 0; k < pi.size(); ++k)
      h(static_cast<Eigen::Index>(k)) = (u.row(pi[k]) - u.row(pj[k])).norm();
    return h;
  }

  //! Isotonic disparities of the given distances, in pair order.
  Vector disparities(const Vector& h) const {
    const Eigen::Index np = h.size();
    Vector hs(np), ws(np);
    for (Eigen::Index k = 0; k < np; ++k) {
      hs(k) = h(static_cast<Eigen::Index>(order[static_cast<std::size_t>(k)]));
      ws(k) = w(static_cast<Eigen::Index>(order[static_cast<std::size_t>(k)]));
    }
    Vector fs = isotonic_fit(hs, ws);
    Vector fit(np);
    for (Eigen::Index k = 0; k < np; ++k)
      fit(static_cast<Eigen::Index>(order[static_cast<std::size_t>(k)])) = fs(k);
    return fit;
  }

  double stress(const Vector& h, const Vector& dhat) const {
    double raw = (w.array() * (dhat - h).array().square()).sum();
    double denom = (w.array() * h.array().square()).sum();
    if (!(denom > 0.0)) throw numeric_error("nmds: configuration collapsed to a point");
    return std::sqrt(raw / denom);
  }
};

}  // namespace detail

//! Stress-1 of a configuration against a dissimilarity, with disparities
//! refitted by isotonic regression. Matches the objective nmds() minimizes.
inline double nmds_stress(const Matrix& delta, const Matrix& weights, const Matrix& config) {
  detail::NmdsPairs pairs(delta, weights);
  Vector h = pairs.distances(config);
  return pairs.stress(h, pairs.disparities(h));
}

inline NmdsResult nmds(const Matrix& delta, const Matrix& weights, const Matrix& start,
                       const NmdsOptions& opt = {}) {
  detail::NmdsPairs pairs(delta, weights);
  const Eigen::Index m = delta.rows();
  if (start.rows() != m || (start.cols() != 1 && start.cols() != 2))
    throw data_error("nmds: start configuration size mismatch");
  if (!start.allFinite()) throw data_error("nmds: start configuration not finite");
  if (opt.max_iter < 0 || !(opt.tol > 0.0)) throw data_error("nmds: bad options");

  // V depends only on the weights; its pseudo-inverse is computed once.
  Matrix v = Matrix::Zero(m, m);
  for (std::size_t k = 0; k < pairs.pi.size(); ++k) {
    double wk = pairs.w(static_cast<Eigen::Index>(k));
    Eigen::Index i = pairs.pi[k], j = pairs.pj[k];
    v(i, i) += wk;
    v(j, j) += wk;
    v(i, j) -= wk;
    v(j, i) -= wk;
  }
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(v);
  Matrix vpinv = cod.pseudoInverse();

  NmdsResult res;
  res.config = start;
  Vector h = pairs.distances(res.config);
  Vector dhat = pairs.disparities(h);
  res.stress = pairs.stress(h, dhat);
  res.trace.push_back(res.stress);

  for (int it = 0; it < opt.max_iter; ++it) {
    // Guttman target for the current disparities.
    Matrix b = Matrix::Zero(m, m);
    for (std::size_t k = 0; k < pairs.pi.size(); ++k) {
      double hk = h(static_cast<Eigen::Index>(k));
      if (hk <= 0.0) continue;
      double bk = pairs.w(static_cast<Eigen::Index>(k)) * dhat(static_cast<Eigen::Index>(k)) / hk;
      Eigen::Index i = pairs.pi[k], j = pairs.pj[k];
      b(i, i) += bk;
      b(j, j) += bk;
      b(i, j) -= bk;
      b(j, i) -= bk;
    }
    Matrix target = vpinv * (b * res.config);

    // Step-halving keeps the true (re-fitted) stress strictly decreasing;
    // if no step length helps the iteration has stalled and we stop.
    bool accepted = false;
    for (double t = 1.0; t >= 0x1p-20; t *= 0.5) {
      Matrix candidate = (1.0 - t) * res.config + t * target;
      Vector hc = pairs.distances(candidate);
      Vector dc = pairs.disparities(hc);
      double sc = pairs.stress(hc, dc);
      if (sc < res.stress) {
        res.config = std::move(candidate);
        h = std::move(hc);
        dhat = std::move(dc);
        double prev = res.stress;
        res.stress = sc;
        res.trace.push_back(sc);
        ++res.iterations;
        accepted = true;
        if (prev - sc < opt.tol * prev) res.converged = true;
        break;
      }
    }
    if (!accepted) {
      res.converged = true;
      break;
    }
    if (res.converged) break;
  }

  res.disparities = Matrix::Zero(m, m);
  for (std::size_t k = 0; k < pairs.pi.size(); ++k) {
    double dk = dhat(static_cast<Eigen::Index>(k));
    res.disparities(pairs.pi[k], pairs.pj[k]) = dk;
    res.disparities(pairs.pj[k], pairs.pi[k]) = dk;
  }
  return res;
}

}  // namespace gdeform
