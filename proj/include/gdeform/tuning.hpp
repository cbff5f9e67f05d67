#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "common.hpp"
#include "core.hpp"
#include "pipeline.hpp"
#include "prediction.hpp"
#include "variogram_kernel.hpp"

//! Two-stage hyper-parameter selection. Stage one scores the bandwidth
//! lambda alone by comparing the leave-two-out kernel variogram against the
//! variogram cloud. Stage two scores (lambda, omega) pairs by leave-one-out
//! kriging error through the fully fitted pipeline, on a shortlist of the
//! best stage-one bandwidths.
namespace gdeform {

struct HyperParams {
  double lambda = 0.0;
  double omega = 0.0;
};

//! One grid evaluation. omega is NaN for stage-one rows. status is "ok",
//! "partial" (stage one: some pairs skipped for empty support), "empty"
//! (stage one: every pair skipped), or "failed" (stage two: pipeline error).
struct CvRow {
  double lambda = 0.0;
  double omega = std::numeric_limits<double>::quiet_NaN();
  double score = std::numeric_limits<double>::quiet_NaN();
  std::string status;
};

//! Stage-one score at one bandwidth:
//!
//!   (1/n^2) sum_{i != j} ( gamma_hat_{-(i,j)}(s_i, s_j) - gamma*_ij )^2,
//!
//! where gamma_hat_{-(i,j)} re-estimates the pair after removing both
//! observations from the kernel sums (by subtracting their contributions
//! from precomputed moments, O(n^2) total) and gamma*_ij is the raw half
//! squared increment. Pairs whose reduced kernel support is empty are
//! skipped and counted.
inline double cv1_score(const Dataset& data, double lambda, Eigen::Index* skipped_out = nullptr,
                        Eigen::Index* pairs_out = nullptr) {
  NsVariogram vario(data, lambda);
  const Matrix& loc = data.locations();
  const Eigen::Index n = data.n();
  Vector zc = data.values().array() - data.values().mean();
  auto moments = vario.anchor_moments(loc);

  double sum = 0.0;
  Eigen::Index skipped = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double wij = vario.kernel_weight((loc.row(i) - loc.row(j)).norm());
      const auto& mi = moments[static_cast<std::size_t>(i)];
      const auto& mj = moments[static_cast<std::size_t>(j)];
      // Remove observations i and j from both moment sets. The self weight
      // is exactly 1 (kernel at distance zero).
      NsVariogram::Moments ri, rj;
      ri.r = mi.r - 1.0 - wij;
      ri.s1 = mi.s1 - zc(i) - wij * zc(j);
      ri.s2 = mi.s2 - zc(i) * zc(i) - wij * zc(j) * zc(j);
      ri.support = mi.support - 1 - (wij > 0.0 ? 1 : 0);
      rj.r = mj.r - 1.0 - wij;
      rj.s1 = mj.s1 - zc(j) - wij * zc(i);
      rj.s2 = mj.s2 - zc(j) * zc(j) - wij * zc(i) * zc(i);
      rj.support = mj.support - 1 - (wij > 0.0 ? 1 : 0);
      if (ri.support <= 0 || rj.support <= 0 || !(ri.r > 0.0) || !(rj.r > 0.0)) {
        ++skipped;
        continue;
      }
      double est = NsVariogram::combine(ri, rj);
      double dz = zc(i) - zc(j);
      double resid = est - 0.5 * dz * dz;
      sum += 2.0 * resid * resid;  // ordered pairs (i,j) and (j,i)
    }
  }
  if (skipped_out) *skipped_out = skipped;
  if (pairs_out) *pairs_out = n * (n - 1) / 2;
  if (skipped == n * (n - 1) / 2) return std::numeric_limits<double>::quiet_NaN();
  return sum / (static_cast<double>(n) * static_cast<double>(n));
}

inline std::vector<CvRow> cv1(const Dataset& data, const std::vector<double>& lambda_grid) {
  if (lambda_grid.empty()) throw data_error("cv1: empty bandwidth grid");
  std::vector<CvRow> rows;
  for (double lambda : lambda_grid) {
    CvRow row;
    row.lambda = lambda;
    Eigen::Index skipped = 0, pairs = 0;
    row.score = cv1_score(data, lambda, &skipped, &pairs);
    row.status = skipped == 0 ? "ok" : (skipped == pairs ? "empty" : "partial");
    rows.push_back(std::move(row));
  }
  return rows;
}

//! Stage-two score: fit the pipeline once at (lambda, omega) on all data,
//! then the mean squared leave-one-out ordinary kriging error with the
//! fitted deformation and model held fixed.
inline double cv2_score(const Dataset& data, const AnchorSet& anchors, const HyperParams& hp,
                        const FitSettings& settings = {}) {
  DeformationFit fit = fit_deformation(data, anchors, hp.lambda, hp.omega, settings);
  Matrix deformed = fit.spline(data.locations());
  OrdinaryKriging ok(std::move(deformed), data.values(), fit.model);
  OrdinaryKriging::LooResult loo = ok.leave_one_out();
  return (loo.mean - data.values()).squaredNorm() / static_cast<double>(data.n());
}

struct SelectionResult {
  HyperParams best;
  std::vector<CvRow> cv1_rows;
  std::vector<CvRow> cv2_rows;
};

//! Two-stage grid selection: shortlist the bandwidths with the lowest
//! stage-one scores, evaluate stage two on shortlist x omega_grid, return
//! the argmin. Ties break toward the smallest lambda, then the smallest
//! omega, so the result does not depend on grid ordering.
inline SelectionResult select_hyperparams(const Dataset& data, const AnchorSet& anchors,
                                          std::vector<double> lambda_grid,
                                          std::vector<double> omega_grid,
                                          std::size_t shortlist_size,
                                          const FitSettings& settings = {}) {
  if (lambda_grid.empty() || omega_grid.empty())
    throw data_error("select_hyperparams: empty grid");
  if (shortlist_size < 1) throw data_error("select_hyperparams: shortlist must be >= 1");
  for (double l : lambda_grid)
    if (!(l > 0.0)) throw data_error("select_hyperparams: bandwidths must be positive");
  for (double w : omega_grid)
    if (!(w >= 0.0 && w <= 1.0))
      throw data_error("select_hyperparams: omega values must lie in [0, 1]");
  std::sort(lambda_grid.begin(), lambda_grid.end());
  lambda_grid.erase(std::unique(lambda_grid.begin(), lambda_grid.end()), lambda_grid.end());
  std::sort(omega_grid.begin(), omega_grid.end());
  omega_grid.erase(std::unique(omega_grid.begin(), omega_grid.end()), omega_grid.end());

  SelectionResult res;
  res.cv1_rows = cv1(data, lambda_grid);

  std::vector<std::size_t> order;
  for (std::size_t k = 0; k < res.cv1_rows.size(); ++k)
    if (std::isfinite(res.cv1_rows[k].score)) order.push_back(k);
  if (order.empty())
    throw numeric_error("select_hyperparams: no bandwidth has a defined stage-one score");
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const CvRow& ra = res.cv1_rows[a];
    const CvRow& rb = res.cv1_rows[b];
    if (ra.score != rb.score) return ra.score < rb.score;
    return ra.lambda < rb.lambda;
  });
  order.resize(std::min(shortlist_size, order.size()));
  std::vector<double> shortlist;
  for (std::size_t k : order) shortlist.push_back(res.cv1_rows[k].lambda);
  std::sort(shortlist.begin(), shortlist.end());

  bool found = false;
  HyperParams best;
  double best_score = std::numeric_limits<double>::infinity();
  for (double lambda : shortlist) {
    for (double omega : omega_grid) {
      CvRow row;
      row.lambda = lambda;
      row.omega = omega;
      try {
        row.score = cv2_score(data, anchors, HyperParams{lambda, omega}, settings);
        row.status = "ok";
      } catch (const std::exception& e) {
        row.status = std::string("failed: ") + e.what();
      }
      if (std::isfinite(row.score)) {
        bool better = row.score < best_score ||
                      (row.score == best_score &&
                       (lambda < best.lambda ||
                        (lambda == best.lambda && omega < best.omega)));
        if (!found || better) {
          best = HyperParams{lambda, omega};
          best_score = row.score;
          found = true;
        }
      }
      res.cv2_rows.push_back(std::move(row));
    }
  }
  if (!found)
    throw numeric_error("select_hyperparams: every stage-two evaluation failed");
  res.best = best;
  return res;
}

}  // namespace gdeform
