#include <catch2/catch_amalgamated.hpp>

#include <gdeform/core.hpp>

using namespace gdeform;

TEST_CASE("distance is the Euclidean norm") {
  Eigen::RowVectorXd a(2), b(2);
  a << 0.0, 0.0;
  b << 3.0, 4.0;
  CHECK(distance(a, b) == 5.0);
  CHECK(distance(a, a) == 0.0);
  Eigen::RowVectorXd u(1), v(1);
  u << -1.5;
  v << 2.5;
  CHECK(distance(u, v) == 4.0);
}

TEST_CASE("pairwise distances are symmetric with zero diagonal") {
  rng_type rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix pts(6, 2);
  for (Eigen::Index i = 0; i < pts.size(); ++i) pts(i / 2, i % 2) = unit(rng);
  Matrix d = pairwise_distances(pts);
  CHECK(d.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK((d - d.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    for (Eigen::Index j = 0; j < pts.rows(); ++j)
      CHECK(d(i, j) == (pts.row(i) - pts.row(j)).norm());
}

TEST_CASE("cross distances match row-by-row norms") {
  Matrix a(2, 2), b(3, 2);
  a << 0, 0, 1, 0;
  b << 0, 1, 3, 4, -1, 0;
  Matrix d = cross_distances(a, b);
  REQUIRE(d.rows() == 2);
  REQUIRE(d.cols() == 3);
  CHECK(d(0, 0) == 1.0);
  CHECK(d(0, 1) == 5.0);
  CHECK(d(1, 2) == 2.0);
}

TEST_CASE("minmax_scale maps to [0,1] preserving order") {
  Vector v(3);
  v << 1.0, 2.0, 3.0;
  Vector s = minmax_scale(v);
  CHECK(s(0) == 0.0);
  CHECK(s(1) == 0.5);
  CHECK(s(2) == 1.0);
  Vector flat = Vector::Constant(4, 2.5);
  CHECK_THROWS_AS(minmax_scale(flat), numeric_error);
}

TEST_CASE("Dataset validates its inputs") {
  Matrix loc(3, 2);
  loc << 0, 0, 1, 0, 0, 1;
  Vector z(3);
  z << 1.0, 2.0, 3.0;
  Dataset d(loc, z);
  CHECK(d.n() == 3);
  CHECK(d.dim() == 2);

  SECTION("needs at least two points") {
    CHECK_THROWS_AS(Dataset(loc.topRows(1), z.head(1)), data_error);
  }
  SECTION("dimension must be 1 or 2") {
    Matrix three(2, 3);
    three.setZero();
    three(1, 0) = 1.0;
    CHECK_THROWS_AS(Dataset(three, z.head(2)), data_error);
  }
  SECTION("rejects duplicate locations") {
    Matrix dup = loc;
    dup.row(2) = dup.row(0);
    CHECK_THROWS_AS(Dataset(dup, z), data_error);
  }
  SECTION("rejects non-finite entries") {
    Matrix bad = loc;
    bad(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(Dataset(bad, z), data_error);
    Vector badz = z;
    badz(0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(Dataset(loc, badz), data_error);
  }
  SECTION("rejects size mismatch") {
    CHECK_THROWS_AS(Dataset(loc, z.head(2)), data_error);
  }
}

TEST_CASE("AnchorSet enforces count, distinctness, and non-collinearity") {
  Matrix pts(4, 2);
  pts << 0, 0, 1, 0, 0, 1, 1, 1;
  CHECK_NOTHROW(AnchorSet(pts));

  CHECK_THROWS_AS(AnchorSet(pts.topRows(3)), data_error);

  Matrix dup = pts;
  dup.row(3) = dup.row(1);
  CHECK_THROWS_AS(AnchorSet(dup), data_error);

  Matrix line(4, 2);
  line << 0, 0, 1, 1, 2, 2, 3, 3;
  CHECK_THROWS_AS(AnchorSet(line), data_error);

  Matrix pts1(3, 1);
  pts1 << 0, 0.5, 1;
  CHECK_NOTHROW(AnchorSet(pts1));
  CHECK_THROWS_AS(AnchorSet(pts1.topRows(2)), data_error);
}

TEST_CASE("make_anchor_grid covers the bounding box") {
  SECTION("1D linspace hits both ends") {
    Matrix loc(5, 1);
    loc << 0.0, 0.2, 0.5, 0.7, 2.0;
    AnchorSet a = make_anchor_grid(loc, 11);
    REQUIRE(a.m() == 11);
    CHECK(a.points()(0, 0) == 0.0);
    CHECK(a.points()(10, 0) == 2.0);
    for (Eigen::Index i = 1; i < a.m(); ++i)
      CHECK(a.points()(i, 0) > a.points()(i - 1, 0));
  }
  SECTION("2D lattice with side near sqrt(target)") {
    Matrix loc(4, 2);
    loc << 0, 0, 1, 0, 0, 1, 1, 1;
    AnchorSet a = make_anchor_grid(loc, 125);
    REQUIRE(a.m() == 121);
    CHECK(a.points().colwise().minCoeff().isApprox(loc.colwise().minCoeff()));
    CHECK(a.points().colwise().maxCoeff().isApprox(loc.colwise().maxCoeff()));
  }
  SECTION("degenerate box is rejected") {
    Matrix loc(3, 2);
    loc << 0, 0, 0, 1, 0, 2;
    CHECK_THROWS_AS(make_anchor_grid(loc, 9), data_error);
  }
}

TEST_CASE("GaugeTransform validates and scales distances by a") {
  Matrix rot(2, 2);
  double th = 0.7;
  rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
  Vector b(2);
  b << 0.3, -0.2;
  GaugeTransform g(1.7, rot, b);

  Matrix pts(3, 2);
  pts << 0, 0, 1, 0, 0.3, 0.9;
  Matrix img = g.apply(pts);
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j) {
      double want = 1.7 * (pts.row(i) - pts.row(j)).norm();
      CHECK_THAT((img.row(i) - img.row(j)).norm(),
                 Catch::Matchers::WithinAbs(want, 1e-12));
    }

  SECTION("rejects non-orthogonal R and non-positive scale") {
    Matrix skew(2, 2);
    skew << 1, 0.5, 0, 1;
    CHECK_THROWS_AS(GaugeTransform(1.0, skew, b), data_error);
    CHECK_THROWS_AS(GaugeTransform(0.0, rot, b), data_error);
    CHECK_THROWS_AS(GaugeTransform(-1.0, rot, b), data_error);
  }

  SECTION("random gauges are valid in both dimensions") {
    rng_type rng(5);
    for (int k = 0; k < 25; ++k) {
      GaugeTransform g1 = GaugeTransform::random(1, rng);
      CHECK(g1.a() >= 0.5);
      CHECK(g1.a() <= 2.0);
      GaugeTransform g2 = GaugeTransform::random(2, rng);
      Matrix gram = g2.R().transpose() * g2.R();
      CHECK((gram - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}
