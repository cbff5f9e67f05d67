#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "common.hpp"
#include "core.hpp"
#include "dissimilarity.hpp"
#include "nmds.hpp"
#include "prediction.hpp"
#include "tps.hpp"
#include "variogram_kernel.hpp"
#include "variogram_model.hpp"

//! End-to-end estimation: kernel variogram on anchors, composite
//! dissimilarity, weighted NMDS embedding, thin-plate interpolation of the
//! deformation, and the stationary variogram fit in the deformed space.
//! Plus the prediction entry points that take geographic coordinates and
//! push them through a fitted deformation.
namespace gdeform {

struct FitSettings {
  NmdsOptions nmds_options;
  //! Lag count for the deformed-space experimental variogram. Thirty bins
  //! keep the first lag inside the correlated zone for fields whose range is
  //! a few percent of the domain diameter; coarser binning folds the
  //! near-origin rise into one lag and manifests as a spurious nugget.
  int variogram_bins = 30;
  MixtureFitOptions mixture;
};

namespace detail {

//! Reruns a pipeline stage so failures carry the stage name, preserving the
//! error category.
template <class F>
auto run_stage(const char* stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const data_error& e) {
    throw data_error(std::string(stage) + ": " + e.what());
  } catch (const numeric_error& e) {
    throw numeric_error(std::string(stage) + ": " + e.what());
  }
}

}  // namespace detail

struct DeformationFit {
  TpsSpline spline;
  VariogramModel model;
  double lambda = 0.0;
  double omega = 0.0;
  NmdsResult embedding;              //!< stress trace and final configuration
  TpsFitReport spline_report;
  FoldReport fold;                   //!< Jacobian sign check at the anchors
  ExperimentalVariogram experimental;  //!< deformed-space lags behind the model fit
};

//! Runs the full deformation estimation at fixed hyper-parameters.
inline DeformationFit fit_deformation(const Dataset& data, const AnchorSet& anchors,
                                      double lambda, double omega,
                                      const FitSettings& settings = {}) {
  if (anchors.dim() != data.dim())
    throw data_error("fit_deformation: anchor/data dimension mismatch");
  NsVariogram vario(data, lambda);
  AnchorDissimilarity diss = detail::run_stage(
      "dissimilarity", [&] { return anchor_dissimilarity(vario, anchors, omega); });
  Matrix weights = nmds_weight_matrix(diss.mass, diss.dist);
  NmdsResult embedding = detail::run_stage("nmds", [&] {
    return nmds(diss.delta, weights, anchors.points(), settings.nmds_options);
  });

  TpsFitReport report;
  TpsSpline spline = detail::run_stage("thin-plate fit", [&] {
    return TpsSpline::fit(anchors.points(), embedding.config, &report);
  });
  FoldReport fold = fold_check(spline, anchors.points());

  Matrix deformed = spline(data.locations());
  ExperimentalVariogram ev = detail::run_stage("variogram fit", [&] {
    return experimental_variogram(deformed, data.values(), settings.variogram_bins);
  });
  VariogramModel model =
      detail::run_stage("variogram fit", [&] { return fit_mixture(ev, settings.mixture); });

  return DeformationFit{std::move(spline), std::move(model), lambda,  omega,
                        std::move(embedding), report,        fold,    std::move(ev)};
}

struct StationaryFit {
  VariogramModel model;
  ExperimentalVariogram experimental;
};

//! Baseline without any deformation: the variogram model is fitted to the
//! experimental variogram of the raw coordinates.
inline StationaryFit fit_stationary(const Dataset& data, int variogram_bins = 30,
                                    const MixtureFitOptions& mixture = {}) {
  ExperimentalVariogram ev =
      experimental_variogram(data.locations(), data.values(), variogram_bins);
  VariogramModel model = fit_mixture(ev, mixture);
  return StationaryFit{std::move(model), std::move(ev)};
}

//! Ordinary kriging of geographic targets. A null spline means the
//! stationary baseline: raw coordinates are used on both sides.
inline std::vector<Prediction> krige(const Dataset& data, const TpsSpline* spline,
                                     const VariogramModel& model, const Matrix& targets) {
  if (targets.cols() != data.dim()) throw data_error("krige: target dimension mismatch");
  Matrix dpoints = spline ? (*spline)(data.locations()) : data.locations();
  Matrix dtargets = spline ? (*spline)(targets) : targets;
  OrdinaryKriging ok(std::move(dpoints), data.values(), model);
  return ok.predict(dtargets);
}

//! Conditional simulation at geographic targets through the deformation.
inline ConditionalSimulation simulate(const Dataset& data, const TpsSpline* spline,
                                      const VariogramModel& model, const Matrix& targets,
                                      int n_real, std::uint64_t seed,
                                      Eigen::Index max_points = 4000) {
  if (targets.cols() != data.dim()) throw data_error("simulate: target dimension mismatch");
  Matrix dpoints = spline ? (*spline)(data.locations()) : data.locations();
  Matrix dtargets = spline ? (*spline)(targets) : targets;
  return simulate_conditional(dpoints, data.values(), model, dtargets, n_real, seed,
                              max_points);
}

}  // namespace gdeform
