#include <catch2/catch_amalgamated.hpp>

#include <random>

#include <gdeform/variogram_model.hpp>

using namespace gdeform;

TEST_CASE("unit variogram analytic values") {
  CHECK(unit_variogram(CovKind::exponential, 0.0, 1.0) == 0.0);
  CHECK_THAT(unit_variogram(CovKind::exponential, 1.0, 1.0),
             Catch::Matchers::WithinAbs(1.0 - std::exp(-1.0), 1e-15));
  CHECK_THAT(unit_variogram(CovKind::gaussian, 2.0, 2.0),
             Catch::Matchers::WithinAbs(1.0 - std::exp(-1.0), 1e-15));
  CHECK_THAT(unit_variogram(CovKind::spherical, 0.25, 0.5),
             Catch::Matchers::WithinAbs(0.6875, 1e-15));
  CHECK(unit_variogram(CovKind::spherical, 0.5, 0.5) == 1.0);
  CHECK(unit_variogram(CovKind::spherical, 9.0, 0.5) == 1.0);
  CHECK_THAT(unit_variogram(CovKind::cubic, 0.5, 1.0),
             Catch::Matchers::WithinAbs(0.759765625, 1e-15));
  CHECK(unit_variogram(CovKind::cubic, 1.0, 1.0) == 1.0);
  CHECK(unit_variogram(CovKind::nugget, 1e-300, 1.0) == 1.0);
  CHECK(unit_variogram(CovKind::nugget, 0.0, 1.0) == 0.0);
  CHECK_THROWS_AS(unit_variogram(CovKind::exponential, -0.1, 1.0), data_error);
}

TEST_CASE("unit variograms are nondecreasing and bounded by 1 past the range") {
  for (CovKind kind : {CovKind::exponential, CovKind::gaussian, CovKind::spherical,
                       CovKind::cubic}) {
    double prev = 0.0;
    for (int i = 1; i <= 200; ++i) {
      double v = unit_variogram(kind, 0.01 * i, 0.7);
      CHECK(v >= prev - 1e-12);
      CHECK(v <= 1.0 + 1e-12);
      prev = v;
    }
  }
}

TEST_CASE("mixture model sums its components") {
  VariogramModel m({{CovKind::nugget, 0.2, 0.0},
                    {CovKind::exponential, 1.0, 0.5},
                    {CovKind::spherical, 0.8, 1.5}});
  CHECK_THAT(m.total_sill(), Catch::Matchers::WithinAbs(2.0, 1e-15));
  CHECK_THAT(m.nugget(), Catch::Matchers::WithinAbs(0.2, 1e-15));
  double h = 0.9;
  double want = 0.2 + 1.0 * unit_variogram(CovKind::exponential, h, 0.5) +
                0.8 * unit_variogram(CovKind::spherical, h, 1.5);
  CHECK_THAT(m(h), Catch::Matchers::WithinAbs(want, 1e-15));
  CHECK_THAT(m.covariance(h), Catch::Matchers::WithinAbs(2.0 - want, 1e-15));
  CHECK(m(0.0) == 0.0);

  SECTION("validation") {
    CHECK_THROWS_AS(VariogramModel({}), data_error);
    CHECK_THROWS_AS(VariogramModel({{CovKind::exponential, -1.0, 0.5}}), data_error);
    CHECK_THROWS_AS(VariogramModel({{CovKind::exponential, 1.0, 0.0}}), data_error);
    CHECK_THROWS_AS(VariogramModel({{CovKind::exponential, 0.0, 1.0}}), data_error);
  }
}

TEST_CASE("scaling the space and the ranges together leaves the variogram fixed") {
  VariogramModel m({{CovKind::nugget, 0.1, 0.0},
                    {CovKind::gaussian, 0.7, 0.4},
                    {CovKind::cubic, 1.2, 2.0}});
  double a = 1.73;
  VariogramModel scaled = m.with_scaled_ranges(a);
  for (double h : {0.01, 0.2, 0.5, 1.0, 3.0, 10.0})
    CHECK_THAT(scaled(a * h), Catch::Matchers::WithinAbs(m(h), 1e-12));
  CHECK_THROWS_AS(m.with_scaled_ranges(0.0), data_error);
}

TEST_CASE("model text round-trip") {
  VariogramModel m({{CovKind::nugget, 0.25, 0.0},
                    {CovKind::exponential, 1.125, 0.333333333333333315}});
  VariogramModel back = VariogramModel::from_text(m.to_text());
  REQUIRE(back.components().size() == 2);
  CHECK(back.components()[0].kind == CovKind::nugget);
  CHECK(back.components()[0].sill == 0.25);
  CHECK(back.components()[1].sill == 1.125);
  CHECK(back.components()[1].range == 0.333333333333333315);

  CHECK_THROWS_AS(VariogramModel::from_text("exponential 1.0"), data_error);
  CHECK_THROWS_AS(VariogramModel::from_text("exponential 1.0 0.5 9"), data_error);
  CHECK_THROWS_AS(VariogramModel::from_text("matern 1.0 0.5"), data_error);
  CHECK_THROWS_AS(VariogramModel::from_text(""), data_error);
}

TEST_CASE("experimental variogram equals an independent binning pass") {
  rng_type rng(31);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int rep = 0; rep < 10; ++rep) {
    Eigen::Index n = 10 + static_cast<Eigen::Index>(rng() % 30);
    Eigen::Index dim = rep % 2 == 0 ? 2 : 1;
    Matrix pts(n, dim);
    for (Eigen::Index i = 0; i < pts.size(); ++i) pts(i / dim, i % dim) = unit(rng);
    Vector z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = gauss(rng);

    const int n_bins = 8;
    ExperimentalVariogram ev = experimental_variogram(pts, z, n_bins);

    double dmax = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        dmax = std::max(dmax, (pts.row(i) - pts.row(j)).norm());
    double cutoff = 0.5 * dmax;
    double width = cutoff / n_bins;
    Vector sum_g = Vector::Zero(n_bins), sum_h = Vector::Zero(n_bins),
           cnt = Vector::Zero(n_bins);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        double d = (pts.row(i) - pts.row(j)).norm();
        if (d > cutoff || d <= 0.0) continue;
        auto b = std::min<Eigen::Index>(n_bins - 1,
                                        static_cast<Eigen::Index>(std::ceil(d / width)) - 1);
        sum_g(b) += 0.5 * (z(i) - z(j)) * (z(i) - z(j));
        sum_h(b) += d;
        cnt(b) += 1.0;
      }
    Eigen::Index k = 0;
    for (Eigen::Index b = 0; b < n_bins; ++b) {
      if (!(cnt(b) > 0.0)) continue;
      REQUIRE(k < ev.h.size());
      CHECK(ev.count(k) == cnt(b));
      CHECK(ev.h(k) == sum_h(b) / cnt(b));
      CHECK(ev.gamma(k) == sum_g(b) / cnt(b));
      ++k;
    }
    CHECK(k == ev.h.size());
    CHECK(ev.cutoff == cutoff);
  }
}

TEST_CASE("experimental variogram drops empty bins and validates input") {
  Matrix pts(4, 1);
  pts << 0.0, 0.01, 5.0, 5.011;
  Vector z(4);
  z << 0.0, 1.0, 2.0, 3.5;
  ExperimentalVariogram ev = experimental_variogram(pts, z, 10);
  CHECK(ev.h.size() < 10);
  CHECK((ev.count.array() > 0.0).all());

  CHECK_THROWS_AS(experimental_variogram(pts, z.head(3), 10), data_error);
  CHECK_THROWS_AS(experimental_variogram(pts, z, 1), data_error);
  CHECK_THROWS_AS(experimental_variogram(pts.topRows(1), z.head(1), 5), data_error);
}

TEST_CASE("nnls satisfies the KKT conditions and known optima") {
  SECTION("identity system clamps negatives") {
    Matrix a = Matrix::Identity(3, 3);
    Vector y(3);
    y << 1.0, -2.0, 3.0;
    Vector x = nnls(a, y);
    CHECK_THAT(x(0), Catch::Matchers::WithinAbs(1.0, 1e-12));
    CHECK(x(1) == 0.0);
    CHECK_THAT(x(2), Catch::Matchers::WithinAbs(3.0, 1e-12));
  }
  SECTION("overdetermined mean") {
    Matrix a(2, 1);
    a << 1.0, 1.0;
    Vector y(2);
    y << 1.0, 3.0;
    CHECK_THAT(nnls(a, y)(0), Catch::Matchers::WithinAbs(2.0, 1e-12));
    y << -1.0, -3.0;
    CHECK(nnls(a, y)(0) == 0.0);
  }
  SECTION("random problems satisfy KKT") {
    rng_type rng(8);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int rep = 0; rep < 25; ++rep) {
      Matrix a(12, 5);
      Vector y(12);
      for (Eigen::Index i = 0; i < a.size(); ++i) a(i / 5, i % 5) = gauss(rng);
      for (Eigen::Index i = 0; i < 12; ++i) y(i) = gauss(rng);
      Vector x = nnls(a, y);
      CHECK(x.minCoeff() >= 0.0);
      Vector grad = a.transpose() * (y - a * x);
      double scale = std::max(1.0, grad.cwiseAbs().maxCoeff());
      for (Eigen::Index c = 0; c < 5; ++c) {
        if (x(c) > 0.0)
          CHECK(std::abs(grad(c)) < 1e-8 * scale);
        else
          CHECK(grad(c) < 1e-8 * scale);
      }
    }
  }
}

namespace {

ExperimentalVariogram synth_ev(const VariogramModel& m, double hmax, Eigen::Index lags) {
  ExperimentalVariogram ev;
  ev.h = Vector::LinSpaced(lags, hmax / static_cast<double>(lags), hmax);
  ev.gamma.resize(lags);
  for (Eigen::Index i = 0; i < lags; ++i) ev.gamma(i) = m(ev.h(i));
  ev.count = Vector::Constant(lags, 400.0);
  ev.cutoff = hmax;
  return ev;
}

}  // namespace

TEST_CASE("mixture fit recovers a two-structure model within 5%") {
  VariogramModel truth({{CovKind::exponential, 62.0, 101.0},
                        {CovKind::spherical, 102.0, 428.0}});
  ExperimentalVariogram ev = synth_ev(truth, 600.0, 30);
  VariogramModel fit = fit_mixture(ev);
  CHECK_THAT(fit.total_sill(), Catch::Matchers::WithinRel(truth.total_sill(), 0.05));
  for (Eigen::Index i = 0; i < ev.h.size(); ++i)
    CHECK_THAT(fit(ev.h(i)), Catch::Matchers::WithinAbs(truth(ev.h(i)),
                                                        0.05 * truth.total_sill()));
}

TEST_CASE("flat experimental variogram is fitted by a dominant nugget") {
  ExperimentalVariogram ev;
  ev.h = Vector::LinSpaced(20, 0.05, 1.0);
  ev.gamma = Vector::Constant(20, 3.0);
  ev.count = Vector::Constant(20, 100.0);
  ev.cutoff = 1.0;
  VariogramModel fit = fit_mixture(ev);
  CHECK(fit.nugget() >= 0.9 * fit.total_sill());
  CHECK_THAT(fit.total_sill(), Catch::Matchers::WithinRel(3.0, 0.05));
}

TEST_CASE("a single structure with a dictionary range is recovered almost exactly") {
  // Reconstruct one range the dictionary will contain: the geometric grid
  // spans [hmax/50, 1.25*hmax] with ranges_per_kind points.
  const double hmax = 2.0;
  MixtureFitOptions opt;
  opt.kinds = {CovKind::spherical};
  opt.nugget = false;
  const double lo = hmax / 50.0, hi = 1.25 * hmax;
  const double t = 6.0 / (opt.ranges_per_kind - 1);
  const double range = lo * std::pow(hi / lo, t);
  VariogramModel truth({{CovKind::spherical, 2.0, range}});
  ExperimentalVariogram ev = synth_ev(truth, hmax, 25);
  VariogramModel fit = fit_mixture(ev, opt);
  for (Eigen::Index i = 0; i < ev.h.size(); ++i)
    CHECK_THAT(fit(ev.h(i)), Catch::Matchers::WithinAbs(truth(ev.h(i)), 1e-8));
}

TEST_CASE("no fitted component falls below the prune threshold") {
  VariogramModel truth({{CovKind::nugget, 0.3, 0.0}, {CovKind::gaussian, 1.1, 0.6}});
  VariogramModel fit = fit_mixture(synth_ev(truth, 2.0, 25));
  double total = fit.total_sill();
  for (const auto& c : fit.components()) CHECK(c.sill >= 1e-3 * total);
}

TEST_CASE("gamma_ns through the identity map is the stationary variogram") {
  Matrix centers(5, 1);
  centers << 0.0, 0.25, 0.5, 0.75, 1.0;
  TpsSpline ident = TpsSpline::fit(centers, centers);
  VariogramModel m({{CovKind::exponential, 1.0, 0.3}});
  Eigen::RowVectorXd x(1), y(1);
  x << 0.1;
  y << 0.8;
  CHECK_THAT(gamma_ns(x, y, ident, m), Catch::Matchers::WithinAbs(m(0.7), 1e-9));
}
