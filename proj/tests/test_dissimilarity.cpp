#include <catch2/catch_amalgamated.hpp>

#include <random>

#include <gdeform/dissimilarity.hpp>

using namespace gdeform;

TEST_CASE("minmax_offdiag rescales off-diagonal entries to [0,1]") {
  Matrix m = Matrix::Zero(3, 3);
  m(0, 1) = m(1, 0) = 1.0;
  m(0, 2) = m(2, 0) = 2.0;
  m(1, 2) = m(2, 1) = 3.0;
  Matrix s = minmax_offdiag(m);
  CHECK(s(0, 1) == 0.0);
  CHECK(s(0, 2) == 0.5);
  CHECK(s(1, 2) == 1.0);
  CHECK(s.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK((s - s.transpose()).cwiseAbs().maxCoeff() == 0.0);

  SECTION("all-equal off-diagonal raises a numeric error") {
    Matrix flat = Matrix::Constant(3, 3, 2.0);
    flat.diagonal().setZero();
    CHECK_THROWS_AS(minmax_offdiag(flat), numeric_error);
  }
  SECTION("non-square input is a data error") {
    CHECK_THROWS_AS(minmax_offdiag(Matrix::Zero(2, 3)), data_error);
  }
}

TEST_CASE("composite_dissimilarity blends the rescaled matrices") {
  Matrix gamma = Matrix::Zero(3, 3);
  gamma(0, 1) = gamma(1, 0) = 4.0;
  gamma(0, 2) = gamma(2, 0) = 8.0;
  gamma(1, 2) = gamma(2, 1) = 6.0;
  Matrix dist = Matrix::Zero(3, 3);
  dist(0, 1) = dist(1, 0) = 1.0;
  dist(0, 2) = dist(2, 0) = 2.0;
  dist(1, 2) = dist(2, 1) = 1.5;

  Matrix sg = minmax_offdiag(gamma);
  Matrix sd = minmax_offdiag(dist);

  SECTION("endpoints recover the pure terms") {
    CHECK((composite_dissimilarity(gamma, dist, 1.0) - sg).cwiseAbs().maxCoeff() == 0.0);
    CHECK((composite_dissimilarity(gamma, dist, 0.0) - sd).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("interior omega is the convex blend") {
    Matrix d = composite_dissimilarity(gamma, dist, 0.3);
    Matrix want = 0.3 * sg + 0.7 * sd;
    CHECK((d - want).cwiseAbs().maxCoeff() < 1e-15);
  }
  SECTION("omega outside [0,1] is rejected") {
    CHECK_THROWS_AS(composite_dissimilarity(gamma, dist, -0.01), data_error);
    CHECK_THROWS_AS(composite_dissimilarity(gamma, dist, 1.01), data_error);
  }
}

TEST_CASE("nmds_weight_matrix is mass product over distance") {
  Vector mass(3);
  mass << 2.0, 3.0, 0.0;
  Matrix pts(3, 1);
  pts << 0.0, 0.5, 2.0;
  Matrix d = pairwise_distances(pts);
  Matrix w = nmds_weight_matrix(mass, d);
  CHECK(w(0, 1) == 2.0 * 3.0 / 0.5);
  CHECK(w(1, 0) == w(0, 1));
  CHECK(w(0, 2) == 0.0);
  CHECK(w(1, 2) == 0.0);
  CHECK(w.diagonal().cwiseAbs().maxCoeff() == 0.0);

  SECTION("coincident anchors are rejected") {
    Matrix dd = d;
    dd(0, 1) = dd(1, 0) = 0.0;
    CHECK_THROWS_AS(nmds_weight_matrix(mass, dd), data_error);
  }
}

TEST_CASE("anchor_dissimilarity produces a valid composite matrix") {
  rng_type rng(42);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix loc(40, 2);
  for (Eigen::Index i = 0; i < loc.size(); ++i) loc(i / 2, i % 2) = unit(rng);
  Vector z(40);
  for (Eigen::Index i = 0; i < 40; ++i) z(i) = gauss(rng);
  Dataset data(loc, z);
  NsVariogram vario(data, 0.5);

  Matrix apts(4, 2);
  apts << 0.2, 0.2, 0.8, 0.2, 0.2, 0.8, 0.8, 0.8;
  AnchorSet anchors(apts);
  AnchorDissimilarity diss = anchor_dissimilarity(vario, anchors, 0.6);

  CHECK(diss.delta.rows() == 4);
  CHECK((diss.delta - diss.delta.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(diss.delta.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK(diss.delta.minCoeff() >= 0.0);
  CHECK(diss.delta.maxCoeff() <= 1.0);
  CHECK(diss.mass.minCoeff() > 0.0);
  CHECK(diss.dist(0, 1) == (apts.row(0) - apts.row(1)).norm());

  SECTION("an anchor outside every kernel window is named in the error") {
    Matrix far = apts;
    far.row(3) << 40.0, 40.0;
    AnchorSet bad(far);
    CHECK_THROWS_WITH(anchor_dissimilarity(vario, bad, 0.6),
                      Catch::Matchers::ContainsSubstring("anchor 3") &&
                          Catch::Matchers::ContainsSubstring("bandwidth"));
  }
}

TEST_CASE("nmds_weights matches the explicit mass computation") {
  Matrix loc(10, 1);
  loc << 0.0, 0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9, 1.0;
  Vector z(10);
  z << 0, 1, 0, 1, 0, 1, 0, 1, 0, 1;
  Dataset data(loc, z);
  NsVariogram vario(data, 0.25);
  Matrix apts(4, 1);
  apts << 0.0, 0.3, 0.6, 1.0;
  AnchorSet anchors(apts);
  Matrix w = nmds_weights(vario, anchors);
  auto moments = vario.anchor_moments(apts);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 4; ++j) {
      if (i == j) continue;
      double want = moments[static_cast<std::size_t>(i)].r *
                    moments[static_cast<std::size_t>(j)].r /
                    (apts.row(i) - apts.row(j)).norm();
      CHECK_THAT(w(i, j), Catch::Matchers::WithinAbs(want, 1e-14));
    }
}
