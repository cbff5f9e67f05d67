#include <catch2/catch_amalgamated.hpp>

#include <random>

#include <gdeform/variogram_kernel.hpp>

using namespace gdeform;

namespace {

Dataset random_dataset(Eigen::Index n, Eigen::Index dim, std::uint64_t seed) {
  rng_type rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix loc(n, dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < dim; ++c) loc(i, c) = unit(rng);
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = 5.0 + gauss(rng);
  return Dataset(std::move(loc), std::move(z));
}

}  // namespace

TEST_CASE("Epanechnikov kernel shape") {
  Eigen::RowVectorXd o(1), s(1);
  o << 0.0;
  s << 0.5;
  CHECK(epanechnikov(o, o, 1.0) == 1.0);
  CHECK(epanechnikov(o, s, 1.0) == 0.75);
  s << 1.0;
  CHECK(epanechnikov(o, s, 1.0) == 0.0);
  s << 1.5;
  CHECK(epanechnikov(o, s, 1.0) == 0.0);
  CHECK_THROWS_AS(epanechnikov(o, s, 0.0), data_error);
  CHECK_THROWS_AS(epanechnikov(o, s, -1.0), data_error);
}

TEST_CASE("variogram_cloud holds half squared increments") {
  Matrix loc(3, 1);
  loc << 0.0, 1.0, 2.0;
  Vector z(3);
  z << 1.0, 3.0, 0.0;
  Matrix cloud = variogram_cloud(Dataset(loc, z));
  CHECK(cloud(0, 1) == 2.0);
  CHECK(cloud(0, 2) == 0.5);
  CHECK(cloud(1, 2) == 4.5);
  CHECK(cloud(1, 0) == cloud(0, 1));
  CHECK(cloud.diagonal().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("two isolated points reduce to the raw increment") {
  // With bandwidth 0.8 each evaluation point sees only its own datum, so the
  // double sum collapses to (Z_1 - Z_2)^2 / 2 = (1 - 3)^2 / 2 = 2.
  Matrix loc(2, 1);
  loc << 0.0, 1.0;
  Vector z(2);
  z << 1.0, 3.0;
  NsVariogram vario(Dataset(loc, z), 0.8);
  CHECK_THAT(vario(loc.row(0), loc.row(1)), Catch::Matchers::WithinAbs(2.0, 1e-15));
}

TEST_CASE("factorized estimator equals the brute-force double sum") {
  rng_type rng(101);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int rep = 0; rep < 50; ++rep) {
    Eigen::Index n = 4 + static_cast<Eigen::Index>(rng() % 7);
    Eigen::Index dim = rep % 2 == 0 ? 2 : 1;
    Dataset data = random_dataset(n, dim, 1000 + static_cast<std::uint64_t>(rep));
    double lambda = 0.3 + 1.2 * unit(rng);
    NsVariogram vario(data, lambda);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        double fast = vario(data.locations().row(i), data.locations().row(j));
        double slow = vario.brute_force(data.locations().row(i), data.locations().row(j));
        CHECK_THAT(fast, Catch::Matchers::WithinAbs(slow, 1e-12));
      }
  }
}

TEST_CASE("estimate is invariant under value shifts") {
  Dataset data = random_dataset(12, 2, 77);
  Vector shifted = data.values().array() + 1e6;
  Dataset data2(data.locations(), shifted);
  NsVariogram a(data, 0.6), b(data2, 0.6);
  Eigen::RowVectorXd x = data.locations().row(0);
  Eigen::RowVectorXd y = data.locations().row(5);
  CHECK_THAT(a(x, y), Catch::Matchers::WithinAbs(b(x, y), 1e-9 * (1.0 + a(x, y))));
}

TEST_CASE("gamma_matrix is symmetric, zero diagonal, matches pointwise calls") {
  Dataset data = random_dataset(15, 2, 5);
  NsVariogram vario(data, 0.7);
  Matrix anchors(4, 2);
  anchors << 0.2, 0.2, 0.8, 0.2, 0.2, 0.8, 0.8, 0.8;
  Matrix g = vario.gamma_matrix(anchors);
  CHECK(g.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK((g - g.transpose()).cwiseAbs().maxCoeff() == 0.0);
  for (Eigen::Index i = 0; i < 4; ++i)
    for (Eigen::Index j = 0; j < 4; ++j)
      if (i != j)
        CHECK_THAT(g(i, j),
                   Catch::Matchers::WithinAbs(vario(anchors.row(i), anchors.row(j)), 1e-14));
}

TEST_CASE("identical evaluation points give exactly zero") {
  Dataset data = random_dataset(8, 1, 3);
  NsVariogram vario(data, 0.5);
  Eigen::RowVectorXd x(1);
  x << 0.37;
  CHECK(vario(x, x) == 0.0);
}

TEST_CASE("constant field estimates to zero") {
  Matrix loc(6, 1);
  loc << 0.0, 0.1, 0.3, 0.55, 0.8, 1.0;
  Vector z = Vector::Constant(6, 4.2);
  NsVariogram vario(Dataset(loc, z), 0.5);
  CHECK_THAT(vario(loc.row(0), loc.row(4)), Catch::Matchers::WithinAbs(0.0, 1e-18));
}

TEST_CASE("empty kernel support is reported") {
  Dataset data = random_dataset(6, 1, 9);
  NsVariogram vario(data, 0.05);
  Eigen::RowVectorXd far(1);
  far << 50.0;
  CHECK_THROWS_WITH(vario(far, data.locations().row(0)),
                    Catch::Matchers::ContainsSubstring("bandwidth"));

  bool ok = true;
  double v = NsVariogram::combine_checked(vario.moments(far),
                                          vario.moments(data.locations().row(0)), ok);
  CHECK_FALSE(ok);
  CHECK(v == 0.0);

  SECTION("moments carry the support count") {
    CHECK(vario.moments(far).support == 0);
    CHECK(vario.moments(data.locations().row(0)).support >= 1);
  }
}

TEST_CASE("bandwidth must be positive and finite") {
  Dataset data = random_dataset(5, 1, 4);
  CHECK_THROWS_AS(NsVariogram(data, 0.0), data_error);
  CHECK_THROWS_AS(NsVariogram(data, -0.3), data_error);
  CHECK_THROWS_AS(NsVariogram(data, std::numeric_limits<double>::quiet_NaN()), data_error);
}
