#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "common.hpp"
#include "core.hpp"
#include "variogram_model.hpp"

//! Kriging and Gaussian simulation in the deformed space, where the field is
//! stationary and isotropic with variogram gamma0. All point arguments here
//! are deformed coordinates; callers map through the fitted deformation
//! first.
namespace gdeform {

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

namespace detail {

//! Lists index pairs closer than tol, for the duplicate-location diagnostic.
inline std::string near_duplicate_report(const Matrix& points, double tol) {
  std::string msg;
  int listed = 0;
  for (Eigen::Index i = 0; i < points.rows() && listed < 5; ++i)
    for (Eigen::Index j = i + 1; j < points.rows() && listed < 5; ++j)
      if ((points.row(i) - points.row(j)).norm() <= tol) {
        msg += " (" + std::to_string(i) + "," + std::to_string(j) + ")";
        ++listed;
      }
  return msg.empty() ? std::string(" none within tolerance") : msg;
}

}  // namespace detail

//! Ordinary kriging, solved in variogram form
//!
//!   [ Gamma  1 ] [alpha]   [gamma(x)]
//!   [ 1^T    0 ] [ mu  ] = [   1    ]
//!
//! with predictor alpha^T Z and variance alpha^T gamma(x) + mu. The bordered
//! matrix is factored once; each target costs one back-substitution.
class OrdinaryKriging {
 public:
  OrdinaryKriging(Matrix points, Vector values, VariogramModel model)
      : points_(std::move(points)), values_(std::move(values)), model_(std::move(model)) {
    const Eigen::Index n = points_.rows();
    if (n < 1) throw data_error("OrdinaryKriging: need at least one point");
    if (values_.size() != n) throw data_error("OrdinaryKriging: values size mismatch");
    if (!points_.allFinite() || !values_.allFinite())
      throw data_error("OrdinaryKriging: non-finite input");

    k_.resize(n + 1, n + 1);
    k_.setZero();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        double g = model_((points_.row(i) - points_.row(j)).norm());
        k_(i, j) = g;
        k_(j, i) = g;
      }
    k_.col(n).head(n).setOnes();
    k_.row(n).head(n).setOnes();

    lu_.compute(k_);
    if (pivot_ratio() < 1e-14) {
      // Coincident deformed points make rows identical; a tiny diagonal
      // jitter often restores solvability without visibly moving the fit.
      k_.diagonal().head(n).array() += 1e-10;
      lu_.compute(k_);
      if (pivot_ratio() < 1e-14) {
        double scale = (points_.colwise().maxCoeff() - points_.colwise().minCoeff()).norm();
        throw numeric_error(
            "OrdinaryKriging: singular system, near-duplicate deformed points:" +
            detail::near_duplicate_report(points_, 1e-9 * std::max(scale, 1e-300)));
      }
    }
  }

  Eigen::Index n() const { return points_.rows(); }
  const VariogramModel& model() const { return model_; }

  //! Full solution at one target: weights, Lagrange multiplier, estimate
  //! and variance. The weights sum to 1 by the unbiasedness constraint.
  struct FullPrediction {
    Vector weights;
    double lagrange = 0.0;
    double mean = 0.0;
    double variance = 0.0;
  };

  FullPrediction predict_full(const Eigen::RowVectorXd& x) const {
    const Eigen::Index n = points_.rows();
    Vector rhs(n + 1);
    for (Eigen::Index i = 0; i < n; ++i) rhs(i) = model_((points_.row(i) - x).norm());
    rhs(n) = 1.0;
    Vector sol = lu_.solve(rhs);
    FullPrediction p;
    p.weights = sol.head(n);
    p.lagrange = sol(n);
    p.mean = p.weights.dot(values_);
    p.variance = clamp_variance(sol.dot(rhs) /* alpha.gamma + mu*1 */);
    return p;
  }

  Prediction predict(const Eigen::RowVectorXd& x) const {
    FullPrediction f = predict_full(x);
    return Prediction{f.mean, f.variance};
  }

  //! Predictions at every row of targets, parallelized across targets.
  std::vector<Prediction> predict(const Matrix& targets) const {
    std::vector<Prediction> out(static_cast<std::size_t>(targets.rows()));
    parallel_for(out.size(), [&](std::size_t t) {
      out[t] = predict(Eigen::RowVectorXd(targets.row(static_cast<Eigen::Index>(t))));
    });
    return out;
  }

  struct LooResult {
    Vector mean;
    Vector variance;
  };

  //! Leave-one-out predictions for all points from one inverse of the
  //! bordered matrix B = K^-1: with the augmented data vector Zt = (Z, 0),
  //!
  //!   mean_i = Z_i - [B Zt]_i / B_ii,  variance_i = -1 / B_ii,
  //!
  //! the variogram-form analog of the classical shortcut (B_ii < 0 on the
  //! data block there, so the variance is positive).
  LooResult leave_one_out() const {
    const Eigen::Index n = points_.rows();
    if (n < 2) throw data_error("OrdinaryKriging: leave-one-out needs at least 2 points");
    Matrix b = lu_.inverse();
    Vector zt(n + 1);
    zt.head(n) = values_;
    zt(n) = 0.0;
    Vector bz = b * zt;
    LooResult res;
    res.mean.resize(n);
    res.variance.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!(b(i, i) < 0.0))
        throw numeric_error("OrdinaryKriging: leave-one-out degenerate at point " +
                            std::to_string(i));
      res.mean(i) = values_(i) - bz(i) / b(i, i);
      res.variance(i) = clamp_variance(-1.0 / b(i, i));
    }
    return res;
  }

 private:
  double pivot_ratio() const {
    Vector piv = lu_.matrixLU().diagonal().cwiseAbs();
    double hi = piv.maxCoeff();
    return hi > 0.0 ? piv.minCoeff() / hi : 0.0;
  }

  double clamp_variance(double v) const {
    if (v < -1e-6 * model_.total_sill())
      throw numeric_error("OrdinaryKriging: negative kriging variance " + format_g17(v));
    return std::max(0.0, v);
  }

  Matrix points_;
  Vector values_;
  VariogramModel model_;
  Matrix k_;
  Eigen::PartialPivLU<Matrix> lu_;
};

//! Simple kriging with a known mean, in covariance form: C alpha = c(x),
//! predictor m + alpha^T (Z - m), variance C(0) - alpha^T c(x). Conditional
//! simulation needs the raw weights, so they are exposed.
class SimpleKriging {
 public:
  SimpleKriging(Matrix points, Vector values, VariogramModel model, double mean)
      : points_(std::move(points)), values_(std::move(values)), model_(std::move(model)),
        mean_(mean) {
    const Eigen::Index n = points_.rows();
    if (n < 1) throw data_error("SimpleKriging: need at least one point");
    if (values_.size() != n) throw data_error("SimpleKriging: values size mismatch");
    if (!std::isfinite(mean_)) throw data_error("SimpleKriging: non-finite mean");
    Matrix c(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      c(i, i) = model_.covariance(0.0);
      for (Eigen::Index j = i + 1; j < n; ++j) {
        double v = model_.covariance((points_.row(i) - points_.row(j)).norm());
        c(i, j) = v;
        c(j, i) = v;
      }
    }
    double jitter = 0.0;
    for (;;) {
      Matrix cj = c;
      if (jitter > 0.0) cj.diagonal().array() += jitter;
      ldlt_.compute(cj);
      if (ldlt_.info() == Eigen::Success && ldlt_.isPositive()) break;
      jitter = jitter == 0.0 ? 1e-10 : jitter * 10.0;
      if (jitter > 1e-6)
        throw numeric_error("SimpleKriging: covariance matrix is not positive definite");
    }
  }

  double mean() const { return mean_; }
  Eigen::Index n() const { return points_.rows(); }

  Vector weights(const Eigen::RowVectorXd& x) const {
    const Eigen::Index n = points_.rows();
    Vector c(n);
    for (Eigen::Index i = 0; i < n; ++i) c(i) = model_.covariance((points_.row(i) - x).norm());
    return ldlt_.solve(c);
  }

  Prediction predict(const Eigen::RowVectorXd& x) const {
    const Eigen::Index n = points_.rows();
    Vector c(n);
    for (Eigen::Index i = 0; i < n; ++i) c(i) = model_.covariance((points_.row(i) - x).norm());
    Vector alpha = ldlt_.solve(c);
    Prediction p;
    p.mean = mean_ + alpha.dot(values_ - Vector::Constant(n, mean_));
    double v = model_.covariance(0.0) - alpha.dot(c);
    p.variance = std::max(0.0, v);
    return p;
  }

 private:
  Matrix points_;
  Vector values_;
  VariogramModel model_;
  double mean_;
  Eigen::LDLT<Matrix> ldlt_;
};

namespace detail {

//! Cholesky factor of the model covariance over the given points, with a
//! diagonal jitter escalating from 1e-10 to 1e-6 when the plain matrix is
//! numerically indefinite.
inline Matrix covariance_cholesky(const Matrix& points, const VariogramModel& model) {
  const Eigen::Index n = points.rows();
  Matrix c(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    c(i, i) = model.covariance(0.0);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double v = model.covariance((points.row(i) - points.row(j)).norm());
      c(i, j) = v;
      c(j, i) = v;
    }
  }
  double jitter = 0.0;
  for (;;) {
    Matrix cj = c;
    if (jitter > 0.0) cj.diagonal().array() += jitter;
    Eigen::LLT<Matrix> llt(cj);
    if (llt.info() == Eigen::Success) return llt.matrixL();
    jitter = jitter == 0.0 ? 1e-10 : jitter * 10.0;
    if (jitter > 1e-6)
      throw numeric_error("simulation: covariance matrix is not positive definite");
  }
}

}  // namespace detail

//! Gaussian draws with the given constant mean and covariance
//! C(h) = total_sill - gamma0(h) over the given points. Returns
//! points.rows() x n_real; realization r is a deterministic function of
//! (seed, r) alone, independent of n_real and thread count.
inline Matrix simulate_unconditional(const Matrix& points, const VariogramModel& model,
                                     double mean, int n_real, std::uint64_t seed,
                                     Eigen::Index max_points = 4000) {
  if (points.rows() < 1) throw data_error("simulate_unconditional: no points");
  if (!points.allFinite()) throw data_error("simulate_unconditional: non-finite point");
  if (n_real < 1) throw data_error("simulate_unconditional: need at least one realization");
  if (!std::isfinite(mean)) throw data_error("simulate_unconditional: non-finite mean");
  if (points.rows() > max_points)
    throw data_error("simulate_unconditional: " + std::to_string(points.rows()) +
                     " locations exceed the dense-factorization cap of " +
                     std::to_string(max_points));
  Matrix l = detail::covariance_cholesky(points, model);
  Matrix out(points.rows(), n_real);
  parallel_for(static_cast<std::size_t>(n_real), [&](std::size_t r) {
    rng_type rng(derive_seed(seed, r));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector z(points.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = gauss(rng);
    out.col(static_cast<Eigen::Index>(r)) =
        (l.template triangularView<Eigen::Lower>() * z).array() + mean;
  });
  return out;
}

struct ConditionalSimulation {
  Matrix realizations;  //!< targets x n_real
  Vector sk_mean;       //!< simple kriging surface at the targets
  double mean = 0.0;    //!< data mean used by the simple kriging steps
};

//! Conditional Gaussian simulation by residual substitution: with y* the
//! simple kriging surface of the data and w an unconditional draw,
//!
//!   z(u) = y*(u) + w(u) - w*(u),
//!
//! where w* kriges the draw's values at the data points with the same
//! weights. The joint draw covers data points and targets together, and a
//! target within 1e-9 of a data point (relative to the set diameter) shares
//! that data point's draw slot, so without a nugget the data values are
//! reproduced exactly up to solver roundoff.
inline ConditionalSimulation simulate_conditional(const Matrix& data_points,
                                                  const Vector& values,
                                                  const VariogramModel& model,
                                                  const Matrix& targets, int n_real,
                                                  std::uint64_t seed,
                                                  Eigen::Index max_points = 4000) {
  const Eigen::Index n = data_points.rows();
  const Eigen::Index t = targets.rows();
  if (n < 1) throw data_error("simulate_conditional: no data points");
  if (values.size() != n) throw data_error("simulate_conditional: values size mismatch");
  if (t < 1) throw data_error("simulate_conditional: no targets");
  if (targets.cols() != data_points.cols())
    throw data_error("simulate_conditional: dimension mismatch");
  if (n_real < 1) throw data_error("simulate_conditional: need at least one realization");

  double scale = 0.0;
  Eigen::RowVectorXd lo = data_points.colwise().minCoeff().cwiseMin(targets.colwise().minCoeff());
  Eigen::RowVectorXd hi = data_points.colwise().maxCoeff().cwiseMax(targets.colwise().maxCoeff());
  scale = (hi - lo).norm();
  const double snap = 1e-9 * std::max(scale, 1e-300);

  // Joint draw slots: all data points first, then targets that do not
  // coincide with a data point.
  std::vector<Eigen::Index> slot(static_cast<std::size_t>(t));
  std::vector<Eigen::Index> fresh;
  for (Eigen::Index u = 0; u < t; ++u) {
    Eigen::Index hit = -1;
    for (Eigen::Index i = 0; i < n; ++i)
      if ((data_points.row(i) - targets.row(u)).norm() <= snap) {
        hit = i;
        break;
      }
    if (hit >= 0) {
      slot[static_cast<std::size_t>(u)] = hit;
    } else {
      slot[static_cast<std::size_t>(u)] = n + static_cast<Eigen::Index>(fresh.size());
      fresh.push_back(u);
    }
  }
  Matrix joint(n + static_cast<Eigen::Index>(fresh.size()), data_points.cols());
  joint.topRows(n) = data_points;
  for (std::size_t k = 0; k < fresh.size(); ++k)
    joint.row(n + static_cast<Eigen::Index>(k)) = targets.row(fresh[k]);
  if (joint.rows() > max_points)
    throw data_error("simulate_conditional: " + std::to_string(joint.rows()) +
                     " joint locations exceed the dense-factorization cap of " +
                     std::to_string(max_points));

  const double mean = values.mean();
  SimpleKriging sk(data_points, values, model, mean);

  // Per-target simple kriging weights, reused by every realization.
  Matrix alpha(n, t);
  Vector ystar(t);
  parallel_for(static_cast<std::size_t>(t), [&](std::size_t u) {
    auto ui = static_cast<Eigen::Index>(u);
    Vector a = sk.weights(targets.row(ui));
    alpha.col(ui) = a;
    ystar(ui) = mean + a.dot(values - Vector::Constant(n, mean));
  });

  Matrix l = detail::covariance_cholesky(joint, model);
  ConditionalSimulation out;
  out.realizations.resize(t, n_real);
  out.sk_mean = ystar;
  out.mean = mean;
  parallel_for(static_cast<std::size_t>(n_real), [&](std::size_t r) {
    rng_type rng(derive_seed(seed, r));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Vector z(joint.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = gauss(rng);
    Vector w = l.template triangularView<Eigen::Lower>() * z;
    Vector wdata = w.head(n);
    for (Eigen::Index u = 0; u < t; ++u) {
      double wu = w(slot[static_cast<std::size_t>(u)]);
      out.realizations(u, static_cast<Eigen::Index>(r)) =
          ystar(u) + wu - alpha.col(u).dot(wdata);
    }
  });
  return out;
}

//! Standard normal density and distribution function.
inline double norm_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI); }
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

//! Closed-form CRPS of a Gaussian predictive distribution against an
//! observed value: sigma * (u (2 Phi(u) - 1) + 2 phi(u) - 1/sqrt(pi)),
//! u = (obs - mean)/sigma.
inline double crps_gaussian(double obs, double mean, double sd) {
  if (!(sd > 0.0)) throw data_error("crps_gaussian: sd must be positive");
  double u = (obs - mean) / sd;
  return sd * (u * (2.0 * norm_cdf(u) - 1.0) + 2.0 * norm_pdf(u) - 1.0 / std::sqrt(M_PI));
}

//! Accuracy and calibration summary of probabilistic point predictions.
//!
//! MAE and RMSE are computed over all points. The sigma-based scores (NMSE,
//! the log-score sum, mean CRPS) skip points whose predictive sd is zero
//! while the error is within 1e-9; a zero sd with a larger error is
//! rejected, since the prediction claimed certainty and was wrong.
struct ScoreReport {
  double mae = 0.0;
  double rmse = 0.0;
  double nmse = 0.0;       //!< mean squared standardized error, 1 when calibrated
  double log_score = 0.0;  //!< sum of Gaussian negative log densities
  double crps = 0.0;       //!< mean Gaussian CRPS
  Eigen::Index n = 0;
  Eigen::Index n_degenerate = 0;
};

inline ScoreReport score(const Vector& truth, const Vector& mean, const Vector& sd) {
  const Eigen::Index n = truth.size();
  if (mean.size() != n || sd.size() != n) throw data_error("score: size mismatch");
  if (n < 1) throw data_error("score: empty input");
  ScoreReport rep;
  rep.n = n;
  double se = 0.0, ae = 0.0, nmse = 0.0;
  Eigen::Index scored = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double e = mean(i) - truth(i);
    ae += std::abs(e);
    se += e * e;
    if (!(sd(i) > 0.0)) {
      if (std::abs(e) > 1e-9)
        throw data_error("score: zero predictive sd with nonzero error at point " +
                         std::to_string(i));
      ++rep.n_degenerate;
      continue;
    }
    double u = e / sd(i);
    nmse += u * u;
    rep.log_score += 0.5 * std::log(2.0 * M_PI * sd(i) * sd(i)) + 0.5 * u * u;
    rep.crps += crps_gaussian(truth(i), mean(i), sd(i));
    ++scored;
  }
  rep.mae = ae / static_cast<double>(n);
  rep.rmse = std::sqrt(se / static_cast<double>(n));
  if (scored > 0) {
    rep.nmse = nmse / static_cast<double>(scored);
    rep.crps /= static_cast<double>(scored);
  }
  return rep;
}

}  // namespace gdeform
