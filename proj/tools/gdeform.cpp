//! Command-line front end: synthetic data generation, deformation fitting,
//! kriging, conditional simulation, hyper-parameter cross-validation, and
//! plot-ready diagnostics. Exit codes: 0 success, 1 usage, 2 bad data,
//! 3 numerical failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <gdeform/gdeform.hpp>

namespace {

using gdeform::Matrix;
using gdeform::Vector;

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw gdeform::data_error("cannot create output directory '" + dir + "'");
}

gdeform::Dataset load_dataset(const std::string& path) {
  gdeform::PointTable t = gdeform::read_point_csv(path);
  if (!t.has_values)
    throw gdeform::data_error(path + ": expected a data file with a z column");
  return gdeform::Dataset(std::move(t.locations), std::move(t.values));
}

Matrix load_targets(const std::string& path, Eigen::Index dim) {
  gdeform::PointTable t = gdeform::read_point_csv(path);
  if (t.has_values)
    throw gdeform::data_error(path + ": target files must not carry a z column");
  if (t.locations.cols() != dim)
    throw gdeform::data_error(path + ": target dimension does not match the data");
  return std::move(t.locations);
}

//! Regular grid over the data bounding box: `side` points in 1D, side x side
//! points in 2D.
Matrix grid_targets(const Matrix& locations, Eigen::Index side) {
  if (side < 2) throw gdeform::data_error("--grid must be at least 2");
  Eigen::RowVectorXd lo = locations.colwise().minCoeff();
  Eigen::RowVectorXd hi = locations.colwise().maxCoeff();
  const Eigen::Index p = locations.cols();
  for (Eigen::Index c = 0; c < p; ++c)
    if (!(hi(c) > lo(c))) throw gdeform::data_error("degenerate bounding box for --grid");
  if (p == 1) {
    Matrix t(side, 1);
    for (Eigen::Index i = 0; i < side; ++i)
      t(i, 0) = lo(0) + (hi(0) - lo(0)) * static_cast<double>(i) / static_cast<double>(side - 1);
    return t;
  }
  Matrix t(side * side, 2);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < side; ++i)
    for (Eigen::Index j = 0; j < side; ++j, ++r) {
      t(r, 0) = lo(0) + (hi(0) - lo(0)) * static_cast<double>(i) / static_cast<double>(side - 1);
      t(r, 1) = lo(1) + (hi(1) - lo(1)) * static_cast<double>(j) / static_cast<double>(side - 1);
    }
  return t;
}

gdeform::AnchorSet resolve_anchors(const gdeform::Dataset& data, const std::string& anchor_file,
                                   Eigen::Index anchor_count) {
  if (!anchor_file.empty()) {
    gdeform::PointTable t = gdeform::read_point_csv(anchor_file);
    if (t.has_values)
      throw gdeform::data_error(anchor_file + ": anchor files must not carry a z column");
    if (t.locations.cols() != data.dim())
      throw gdeform::data_error(anchor_file + ": anchor dimension does not match the data");
    return gdeform::AnchorSet(std::move(t.locations));
  }
  Eigen::Index count = anchor_count;
  if (count <= 0)
    count = std::max<Eigen::Index>(data.dim() + 2,
                                   std::min<Eigen::Index>(125, data.n() / 4));
  return gdeform::make_anchor_grid(data.locations(), count);
}

void write_cv_csv(const std::string& path, const std::vector<gdeform::CvRow>& rows) {
  std::ostringstream os;
  os << "lambda,omega,score,status\n";
  for (const auto& row : rows) {
    std::string status = row.status;
    std::replace(status.begin(), status.end(), ',', ';');
    os << gdeform::format_g17(row.lambda) << ',' << gdeform::format_g17(row.omega) << ','
       << gdeform::format_g17(row.score) << ',' << status << '\n';
  }
  gdeform::atomic_write_file(path, os.str());
}

void write_selected_json(const std::string& path, const gdeform::SelectionResult& sel) {
  nlohmann::json j;
  j["lambda"] = sel.best.lambda;
  j["omega"] = sel.best.omega;
  for (const auto& row : sel.cv2_rows)
    if (row.status == "ok" && row.lambda == sel.best.lambda && row.omega == sel.best.omega)
      j["cv2_score"] = row.score;
  gdeform::atomic_write_file(path, j.dump(2) + "\n");
}

void write_variogram_table(const std::string& path, const gdeform::ExperimentalVariogram& ev,
                           const gdeform::VariogramModel& model) {
  Matrix table(ev.h.size(), 4);
  table.col(0) = ev.h;
  table.col(1) = ev.count;
  table.col(2) = ev.gamma;
  for (Eigen::Index i = 0; i < ev.h.size(); ++i) table(i, 3) = model(ev.h(i));
  gdeform::write_csv(path, {"h", "count", "gamma_experimental", "gamma_model"}, table);
}

void write_deformed_scatter(const std::string& path, const Matrix& locations,
                            const Matrix& deformed) {
  Matrix table(locations.rows(), locations.cols() + deformed.cols());
  table.leftCols(locations.cols()) = locations;
  table.rightCols(deformed.cols()) = deformed;
  std::vector<std::string> header =
      locations.cols() == 1 ? std::vector<std::string>{"x", "u"}
                            : std::vector<std::string>{"x", "y", "u", "v"};
  gdeform::write_csv(path, header, table);
}

gdeform::FitBundle make_bundle(const gdeform::Dataset& data) {
  gdeform::FitBundle b;
  b.mean = data.values().mean();
  b.data_hash = gdeform::dataset_hash(data.locations(), data.values());
  b.created = gdeform::timestamp_utc();
  b.version = gdeform::version();
  return b;
}

const gdeform::TpsSpline* bundle_spline(const gdeform::FitBundle& bundle,
                                        Eigen::Index data_dim) {
  if (bundle.kind != "deformed") return nullptr;
  if (bundle.spline->input_dim() != data_dim)
    throw gdeform::data_error("bundle was fitted on dimension " +
                              std::to_string(bundle.spline->input_dim()) +
                              " data, got dimension " + std::to_string(data_dim));
  return &*bundle.spline;
}

struct CommonFitArgs {
  std::string data_path;
  std::string anchor_file;
  Eigen::Index anchor_count = 0;
  int bins = 30;
  double nmds_tol = 1e-6;
  int nmds_max_iter = 500;
  std::string out_dir = ".";

  gdeform::FitSettings settings() const {
    gdeform::FitSettings s;
    s.nmds_options.tol = nmds_tol;
    s.nmds_options.max_iter = nmds_max_iter;
    s.variogram_bins = bins;
    return s;
  }
};

void add_common_fit_flags(CLI::App* sub, CommonFitArgs& a) {
  sub->add_option("--data", a.data_path, "input CSV with header x[,y],z")->required();
  sub->add_option("--anchor-file", a.anchor_file, "CSV of anchor locations (header x[,y])");
  sub->add_option("--anchor-count", a.anchor_count,
                  "anchor grid size target (default min(125, n/4))");
  sub->add_option("--bins", a.bins, "experimental variogram lag count")->capture_default_str();
  sub->add_option("--nmds-tol", a.nmds_tol, "relative stress decrease tolerance")->capture_default_str();
  sub->add_option("--nmds-max-iter", a.nmds_max_iter, "majorization iteration cap")->capture_default_str();
  sub->add_option("--out-dir", a.out_dir, "output directory")->capture_default_str();
}

int run_gen(const std::string& example, Eigen::Index n, Eigen::Index grid, std::uint64_t seed,
            const std::string& out_dir) {
  gdeform::SyntheticField field = [&] {
    if (example == "1d") return gdeform::gen_1d(n, seed);
    if (example == "2d") return gdeform::gen_2d(grid, seed);
    throw gdeform::data_error("--example must be 1d or 2d");
  }();
  ensure_out_dir(out_dir);
  gdeform::write_dataset_csv(join_path(out_dir, "data.csv"), field.data.locations(),
                             field.data.values());
  write_deformed_scatter(join_path(out_dir, "truth.csv"), field.data.locations(),
                         field.true_deformed);
  std::cout << "wrote " << field.data.n() << " points to " << join_path(out_dir, "data.csv")
            << " and ground-truth coordinates to " << join_path(out_dir, "truth.csv") << '\n';
  return 0;
}

int run_fit(const CommonFitArgs& common, bool stationary, double lambda, double omega,
            std::vector<double> lambda_grid, std::vector<double> omega_grid,
            std::size_t shortlist) {
  gdeform::Dataset data = load_dataset(common.data_path);
  ensure_out_dir(common.out_dir);
  gdeform::FitBundle bundle = make_bundle(data);

  if (stationary) {
    gdeform::StationaryFit fit =
        gdeform::fit_stationary(data, common.bins, common.settings().mixture);
    bundle.kind = "stationary";
    bundle.model = fit.model;
    gdeform::save_bundle(join_path(common.out_dir, "bundle.json"), bundle);
    write_variogram_table(join_path(common.out_dir, "variogram_fit.csv"), fit.experimental,
                          fit.model);
    std::cout << "stationary model:\n" << fit.model.to_text();
    return 0;
  }

  gdeform::AnchorSet anchors = resolve_anchors(data, common.anchor_file, common.anchor_count);
  const bool fixed = !std::isnan(lambda) && !std::isnan(omega);
  if (!fixed) {
    if (lambda_grid.empty() || omega_grid.empty())
      throw gdeform::data_error(
          "fit needs either --lambda and --omega or both selection grids");
    gdeform::SelectionResult sel = gdeform::select_hyperparams(
        data, anchors, lambda_grid, omega_grid, shortlist, common.settings());
    write_cv_csv(join_path(common.out_dir, "cv1.csv"), sel.cv1_rows);
    write_cv_csv(join_path(common.out_dir, "cv2.csv"), sel.cv2_rows);
    write_selected_json(join_path(common.out_dir, "selected.json"), sel);
    lambda = sel.best.lambda;
    omega = sel.best.omega;
    std::cout << "selected lambda=" << lambda << " omega=" << omega << '\n';
  } else if (std::isnan(lambda) || std::isnan(omega)) {
    throw gdeform::data_error("--lambda and --omega must be given together");
  }

  gdeform::DeformationFit fit =
      gdeform::fit_deformation(data, anchors, lambda, omega, common.settings());

  bundle.kind = "deformed";
  bundle.lambda = lambda;
  bundle.omega = omega;
  bundle.spline = fit.spline;
  bundle.model = fit.model;
  gdeform::save_bundle(join_path(common.out_dir, "bundle.json"), bundle);

  write_deformed_scatter(join_path(common.out_dir, "deformed.csv"), data.locations(),
                         fit.spline(data.locations()));

  Matrix trace(static_cast<Eigen::Index>(fit.embedding.trace.size()), 2);
  for (Eigen::Index i = 0; i < trace.rows(); ++i) {
    trace(i, 0) = static_cast<double>(i);
    trace(i, 1) = fit.embedding.trace[static_cast<std::size_t>(i)];
  }
  gdeform::write_csv(join_path(common.out_dir, "stress_trace.csv"), {"iteration", "stress"},
                     trace);

  {
    std::ostringstream os;
    os << "probes " << fit.fold.probes << '\n'
       << "folded " << fit.fold.folded << '\n'
       << "fold_fraction " << gdeform::format_g17(fit.fold.fold_fraction) << '\n'
       << "majority_sign " << fit.fold.majority_sign << '\n';
    gdeform::atomic_write_file(join_path(common.out_dir, "fold_check.txt"), os.str());
  }

  write_variogram_table(join_path(common.out_dir, "variogram_fit.csv"), fit.experimental,
                        fit.model);

  std::cout << "fit: stress=" << fit.embedding.stress << " after " << fit.embedding.iterations
            << " iterations (" << (fit.embedding.converged ? "converged" : "iteration cap")
            << "), fold fraction " << fit.fold.fold_fraction << "\nmodel:\n"
            << fit.model.to_text();
  return 0;
}

int run_krige(const std::string& bundle_path, const std::string& data_path,
              const std::string& targets_path, Eigen::Index grid,
              const std::string& truth_path, const std::string& out_dir) {
  gdeform::FitBundle bundle = gdeform::load_bundle(bundle_path);
  gdeform::Dataset data = load_dataset(data_path);
  const gdeform::TpsSpline* spline = bundle_spline(bundle, data.dim());
  Matrix targets = targets_path.empty() ? grid_targets(data.locations(), grid)
                                        : load_targets(targets_path, data.dim());

  std::vector<gdeform::Prediction> preds =
      gdeform::krige(data, spline, *bundle.model, targets);

  ensure_out_dir(out_dir);
  Matrix table(targets.rows(), targets.cols() + 2);
  table.leftCols(targets.cols()) = targets;
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    table(i, targets.cols()) = preds[static_cast<std::size_t>(i)].mean;
    table(i, targets.cols() + 1) = std::sqrt(preds[static_cast<std::size_t>(i)].variance);
  }
  std::vector<std::string> header =
      targets.cols() == 1 ? std::vector<std::string>{"x", "estimate", "sd"}
                          : std::vector<std::string>{"x", "y", "estimate", "sd"};
  gdeform::write_csv(join_path(out_dir, "predictions.csv"), header, table);
  std::cout << "wrote " << targets.rows() << " predictions to "
            << join_path(out_dir, "predictions.csv") << '\n';

  if (!truth_path.empty()) {
    gdeform::PointTable truth = gdeform::read_point_csv(truth_path);
    if (!truth.has_values) throw gdeform::data_error(truth_path + ": needs a z column");
    if (truth.locations.rows() != targets.rows() || truth.locations.cols() != targets.cols())
      throw gdeform::data_error(truth_path + ": truth rows do not match the targets");
    for (Eigen::Index i = 0; i < targets.rows(); ++i)
      if (truth.locations.row(i) != targets.row(i))
        throw gdeform::data_error(truth_path + ": row " + std::to_string(i + 2) +
                                  " coordinates do not match the target");
    Vector mean(targets.rows()), sd(targets.rows());
    for (Eigen::Index i = 0; i < targets.rows(); ++i) {
      mean(i) = preds[static_cast<std::size_t>(i)].mean;
      sd(i) = std::sqrt(preds[static_cast<std::size_t>(i)].variance);
    }
    gdeform::ScoreReport rep = gdeform::score(truth.values, mean, sd);
    nlohmann::json j;
    j["mae"] = rep.mae;
    j["rmse"] = rep.rmse;
    j["nmse"] = rep.nmse;
    j["log_score"] = rep.log_score;
    j["crps"] = rep.crps;
    j["n"] = rep.n;
    j["n_degenerate"] = rep.n_degenerate;
    gdeform::atomic_write_file(join_path(out_dir, "scores.json"), j.dump(2) + "\n");
    std::cout << "scores: mae=" << rep.mae << " rmse=" << rep.rmse << " nmse=" << rep.nmse
              << " crps=" << rep.crps << " log_score=" << rep.log_score << '\n';
  }
  return 0;
}

int run_simulate(const std::string& bundle_path, const std::string& data_path,
                 const std::string& targets_path, Eigen::Index grid, int n_real,
                 std::uint64_t seed, bool check, const std::string& out_dir) {
  gdeform::FitBundle bundle = gdeform::load_bundle(bundle_path);
  gdeform::Dataset data = load_dataset(data_path);
  const gdeform::TpsSpline* spline = bundle_spline(bundle, data.dim());
  Matrix targets = targets_path.empty() ? grid_targets(data.locations(), grid)
                                        : load_targets(targets_path, data.dim());

  gdeform::ConditionalSimulation sim =
      gdeform::simulate(data, spline, *bundle.model, targets, n_real, seed);

  ensure_out_dir(out_dir);
  Matrix table(targets.rows(), targets.cols() + n_real);
  table.leftCols(targets.cols()) = targets;
  table.rightCols(n_real) = sim.realizations;
  std::vector<std::string> header(targets.cols() == 1 ? std::vector<std::string>{"x"}
                                                      : std::vector<std::string>{"x", "y"});
  for (int r = 1; r <= n_real; ++r) header.push_back("r" + std::to_string(r));
  gdeform::write_csv(join_path(out_dir, "realizations.csv"), header, table);
  std::cout << "wrote " << n_real << " realizations at " << targets.rows() << " targets to "
            << join_path(out_dir, "realizations.csv") << '\n';

  if (check) {
    // Conditioning reproduction: with a nugget-free model, targets that
    // coincide with data points must return the datum in every realization.
    Eigen::Index reproduced = 0;
    if (bundle.model->nugget() == 0.0) {
      Matrix dpoints = spline ? (*spline)(data.locations()) : data.locations();
      Matrix dtargets = spline ? (*spline)(targets) : targets;
      for (Eigen::Index t = 0; t < dtargets.rows(); ++t)
        for (Eigen::Index i = 0; i < dpoints.rows(); ++i) {
          if ((dtargets.row(t) - dpoints.row(i)).norm() > 0.0) continue;
          ++reproduced;
          double worst =
              (sim.realizations.row(t).array() - data.values()(i)).abs().maxCoeff();
          if (worst > 1e-8)
            throw gdeform::numeric_error(
                "conditioning violated at target " + std::to_string(t) +
                ": max deviation " + gdeform::format_g17(worst));
        }
    }
    // Ensemble mean against the kriging surface the simulation is built on,
    // within 3 Monte-Carlo standard errors.
    const Eigen::Index probes = std::min<Eigen::Index>(20, targets.rows());
    Eigen::Index checked = 0;
    for (Eigen::Index k = 0; k < probes; ++k) {
      Eigen::Index t = k * targets.rows() / probes;
      double m = sim.realizations.row(t).mean();
      double sd = std::sqrt((sim.realizations.row(t).array() - m).square().sum() /
                            std::max(1, n_real - 1));
      double se = sd / std::sqrt(static_cast<double>(n_real));
      double err = std::abs(m - sim.sk_mean(t));
      if (err > 3.0 * se + 1e-8)
        throw gdeform::numeric_error("ensemble mean off at target " + std::to_string(t) +
                                     ": |mean - kriging| = " + gdeform::format_g17(err) +
                                     " vs 3*SE = " + gdeform::format_g17(3.0 * se));
      ++checked;
    }
    std::cout << "check passed: " << reproduced << " conditioning targets reproduced, "
              << checked << " ensemble means within 3 standard errors\n";
  }
  return 0;
}

int run_cv(const CommonFitArgs& common, std::vector<double> lambda_grid,
           std::vector<double> omega_grid, std::size_t shortlist) {
  gdeform::Dataset data = load_dataset(common.data_path);
  gdeform::AnchorSet anchors = resolve_anchors(data, common.anchor_file, common.anchor_count);
  gdeform::SelectionResult sel = gdeform::select_hyperparams(
      data, anchors, std::move(lambda_grid), std::move(omega_grid), shortlist,
      common.settings());
  ensure_out_dir(common.out_dir);
  write_cv_csv(join_path(common.out_dir, "cv1.csv"), sel.cv1_rows);
  write_cv_csv(join_path(common.out_dir, "cv2.csv"), sel.cv2_rows);
  write_selected_json(join_path(common.out_dir, "selected.json"), sel);
  std::cout << "selected lambda=" << sel.best.lambda << " omega=" << sel.best.omega << '\n';
  return 0;
}

int run_diag(const std::string& bundle_path, const std::string& data_path,
             const std::vector<std::string>& probe_args, double radius, Eigen::Index side,
             const std::string& out_dir) {
  gdeform::FitBundle bundle = gdeform::load_bundle(bundle_path);
  std::optional<gdeform::Dataset> data;
  if (!data_path.empty()) data = load_dataset(data_path);

  Eigen::Index dim = 0;
  if (bundle.kind == "deformed") dim = bundle.spline->input_dim();
  else if (data) dim = data->dim();

  if (probe_args.empty()) throw gdeform::data_error("diag needs at least one --probe");
  std::vector<Eigen::RowVectorXd> probes;
  for (const std::string& arg : probe_args) {
    std::vector<std::string> parts = gdeform::detail::split_fields(arg);
    if (dim == 0) dim = static_cast<Eigen::Index>(parts.size());
    if (static_cast<Eigen::Index>(parts.size()) != dim)
      throw gdeform::data_error("--probe '" + arg + "' must have " + std::to_string(dim) +
                                " coordinates");
    Eigen::RowVectorXd p(dim);
    for (Eigen::Index c = 0; c < dim; ++c)
      p(c) = gdeform::parse_double(parts[static_cast<std::size_t>(c)]);
    probes.push_back(std::move(p));
  }
  if (dim != 1 && dim != 2) throw gdeform::data_error("diag: dimension must be 1 or 2");

  if (!(radius > 0.0)) {
    if (!data) throw gdeform::data_error("--radius is required when no --data is given");
    Eigen::RowVectorXd lo = data->locations().colwise().minCoeff();
    Eigen::RowVectorXd hi = data->locations().colwise().maxCoeff();
    radius = 0.1 * (hi - lo).norm();
    if (!(radius > 0.0)) throw gdeform::data_error("degenerate bounding box for --radius");
  }
  if (side < 2) throw gdeform::data_error("--grid-side must be at least 2");

  const gdeform::TpsSpline* spline =
      bundle.kind == "deformed" ? &*bundle.spline : nullptr;
  if (spline && data && spline->input_dim() != data->dim())
    throw gdeform::data_error("bundle dimension does not match the data");

  ensure_out_dir(out_dir);
  const Eigen::Index per_probe = dim == 1 ? side : side * side;
  Matrix table(static_cast<Eigen::Index>(probes.size()) * per_probe, 2 + dim);
  Eigen::Index r = 0;
  for (std::size_t pi = 0; pi < probes.size(); ++pi) {
    for (Eigen::Index a = 0; a < side; ++a) {
      double dx = -radius + 2.0 * radius * static_cast<double>(a) / static_cast<double>(side - 1);
      if (dim == 1) {
        Eigen::RowVectorXd off(1);
        off << dx;
        table(r, 0) = static_cast<double>(pi);
        table(r, 1) = dx;
        table(r, 2) = spline ? gamma_ns(probes[pi], Eigen::RowVectorXd(probes[pi] + off),
                                        *spline, *bundle.model)
                             : (*bundle.model)(std::abs(dx));
        ++r;
        continue;
      }
      for (Eigen::Index b = 0; b < side; ++b, ++r) {
        double dy =
            -radius + 2.0 * radius * static_cast<double>(b) / static_cast<double>(side - 1);
        Eigen::RowVectorXd off(2);
        off << dx, dy;
        table(r, 0) = static_cast<double>(pi);
        table(r, 1) = dx;
        table(r, 2) = dy;
        table(r, 3) = spline ? gamma_ns(probes[pi], Eigen::RowVectorXd(probes[pi] + off),
                                        *spline, *bundle.model)
                             : (*bundle.model)(off.norm());
      }
    }
  }
  std::vector<std::string> header =
      dim == 1 ? std::vector<std::string>{"probe", "dx", "gamma"}
               : std::vector<std::string>{"probe", "dx", "dy", "gamma"};
  gdeform::write_csv(join_path(out_dir, "contours.csv"), header, table);

  if (data) {
    Matrix img = spline ? (*spline)(data->locations()) : data->locations();
    write_deformed_scatter(join_path(out_dir, "deformed.csv"), data->locations(), img);
  }
  std::cout << "wrote contour samples for " << probes.size() << " probes to "
            << join_path(out_dir, "contours.csv") << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"space deformation estimation for non-stationary spatial data"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML config file; command-line flags take precedence");
  app.set_version_flag("--version", std::string(gdeform::version()));

  const double nan = std::numeric_limits<double>::quiet_NaN();
  int exit_code = 0;

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic example dataset");
  std::string gen_example;
  Eigen::Index gen_n = 1000, gen_grid = 60;
  std::uint64_t gen_seed = 7;
  std::string gen_out = ".";
  gen->add_option("--example", gen_example, "1d or 2d")->required();
  gen->add_option("--n", gen_n, "sample count (1d)")->capture_default_str();
  gen->add_option("--grid", gen_grid, "grid side (2d)")->capture_default_str();
  gen->add_option("--seed", gen_seed, "random seed")->capture_default_str();
  gen->add_option("--out-dir", gen_out, "output directory")->capture_default_str();
  gen->callback(
      [&] { exit_code = run_gen(gen_example, gen_n, gen_grid, gen_seed, gen_out); });

  // fit
  auto* fit = app.add_subcommand("fit", "estimate the deformation and variogram model");
  CommonFitArgs fit_args;
  add_common_fit_flags(fit, fit_args);
  bool fit_stationary_flag = false;
  double fit_lambda = nan, fit_omega = nan;
  std::vector<double> fit_lgrid, fit_ogrid;
  std::size_t fit_shortlist = 3;
  fit->add_flag("--stationary", fit_stationary_flag,
                "fit the undeformed baseline model only");
  fit->add_option("--lambda", fit_lambda, "kernel bandwidth (skips selection)");
  fit->add_option("--omega", fit_omega, "dissimilarity mixing weight (skips selection)");
  fit->add_option("--lambda-grid", fit_lgrid, "bandwidth candidates")->delimiter(',');
  fit->add_option("--omega-grid", fit_ogrid, "mixing weight candidates")->delimiter(',');
  fit->add_option("--shortlist", fit_shortlist, "bandwidths kept after the first stage")->capture_default_str();
  fit->callback([&] {
    exit_code = run_fit(fit_args, fit_stationary_flag, fit_lambda, fit_omega, fit_lgrid,
                        fit_ogrid, fit_shortlist);
  });

  // krige
  auto* krige = app.add_subcommand("krige", "predict at target locations from a fit bundle");
  std::string kr_bundle, kr_data, kr_targets, kr_truth, kr_out = ".";
  Eigen::Index kr_grid = 50;
  krige->add_option("--bundle", kr_bundle, "fit bundle JSON")->required();
  krige->add_option("--data", kr_data, "conditioning data CSV")->required();
  krige->add_option("--targets", kr_targets, "target locations CSV (header x[,y])");
  krige->add_option("--grid", kr_grid, "target grid side when no --targets")->capture_default_str();
  krige->add_option("--truth", kr_truth, "true values at the targets, enables scoring");
  krige->add_option("--out-dir", kr_out, "output directory")->capture_default_str();
  krige->callback([&] {
    exit_code = run_krige(kr_bundle, kr_data, kr_targets, kr_grid, kr_truth, kr_out);
  });

  // simulate
  auto* sim = app.add_subcommand("simulate", "conditional Gaussian simulation at targets");
  std::string sm_bundle, sm_data, sm_targets, sm_out = ".";
  Eigen::Index sm_grid = 50;
  int sm_nreal = 100;
  std::uint64_t sm_seed = 1;
  bool sm_check = false;
  sim->add_option("--bundle", sm_bundle, "fit bundle JSON")->required();
  sim->add_option("--data", sm_data, "conditioning data CSV")->required();
  sim->add_option("--targets", sm_targets, "target locations CSV (header x[,y])");
  sim->add_option("--grid", sm_grid, "target grid side when no --targets")->capture_default_str();
  sim->add_option("--n-real", sm_nreal, "number of realizations")->capture_default_str();
  sim->add_option("--seed", sm_seed, "random seed")->capture_default_str();
  sim->add_flag("--check", sm_check,
                "verify conditioning reproduction and ensemble means, exit 3 on failure");
  sim->add_option("--out-dir", sm_out, "output directory")->capture_default_str();
  sim->callback([&] {
    exit_code =
        run_simulate(sm_bundle, sm_data, sm_targets, sm_grid, sm_nreal, sm_seed, sm_check, sm_out);
  });

  // cv
  auto* cv = app.add_subcommand("cv", "two-stage hyper-parameter cross-validation");
  CommonFitArgs cv_args;
  add_common_fit_flags(cv, cv_args);
  std::vector<double> cv_lgrid, cv_ogrid;
  std::size_t cv_shortlist = 3;
  cv->add_option("--lambda-grid", cv_lgrid, "bandwidth candidates")
      ->delimiter(',')
      ->required();
  cv->add_option("--omega-grid", cv_ogrid, "mixing weight candidates")
      ->delimiter(',')
      ->required();
  cv->add_option("--shortlist", cv_shortlist, "bandwidths kept after the first stage")->capture_default_str();
  cv->callback([&] { exit_code = run_cv(cv_args, cv_lgrid, cv_ogrid, cv_shortlist); });

  // diag
  auto* diag = app.add_subcommand("diag", "plot-ready variogram contours and deformed scatter");
  std::string dg_bundle, dg_data, dg_out = ".";
  std::vector<std::string> dg_probes;
  double dg_radius = 0.0;
  Eigen::Index dg_side = 21;
  diag->add_option("--bundle", dg_bundle, "fit bundle JSON")->required();
  diag->add_option("--data", dg_data, "data CSV for the deformed scatter and defaults");
  diag->add_option("--probe", dg_probes, "probe location 'x[,y]', repeatable")
      ->take_all()
      ->required();
  diag->add_option("--radius", dg_radius, "offset disc radius (default 10% of the data span)");
  diag->add_option("--grid-side", dg_side, "offset grid side")->capture_default_str();
  diag->add_option("--out-dir", dg_out, "output directory")->capture_default_str();
  diag->callback(
      [&] { exit_code = run_diag(dg_bundle, dg_data, dg_probes, dg_radius, dg_side, dg_out); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  } catch (const gdeform::data_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const gdeform::numeric_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return exit_code;
}
