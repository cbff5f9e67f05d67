#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "core.hpp"

//! Thin-plate spline interpolation of the deformation between anchor points
//! and their embedded images,
//!
//!   f(x) = c + A x + V^T sigma(x),  sigma_k(x) = r^2 log r,  r = |x - x_k|,
//!
//! fitted by the augmented symmetric system that enforces exact
//! interpolation together with the orthogonality constraints 1^T V = 0 and
//! X^T V = 0. The same radial basis is used in dimension 1 and 2.
namespace gdeform {

//! r^2 log r, continued by 0 at r = 0.
inline double tps_radial(double r) { return r > 0.0 ? r * r * std::log(r) : 0.0; }

struct TpsFitReport {
  bool regularized = false;  //!< a ridge was added to the radial block
  double ridge = 0.0;
  double pivot_ratio = 0.0;  //!< min/max absolute pivot of the accepted factorization
};

class TpsSpline {
 public:
  //! Assembles a spline from its coefficients. centers is m x p, V is m x q,
  //! A is q x p and c has length q.
  TpsSpline(Vector c, Matrix a, Matrix v, Matrix centers)
      : c_(std::move(c)), a_(std::move(a)), v_(std::move(v)), centers_(std::move(centers)) {
    const Eigen::Index p = centers_.cols();
    const Eigen::Index q = c_.size();
    if (p != 1 && p != 2) throw data_error("TpsSpline: input dimension must be 1 or 2");
    if (q < 1) throw data_error("TpsSpline: empty output dimension");
    if (a_.rows() != q || a_.cols() != p) throw data_error("TpsSpline: A size mismatch");
    if (v_.rows() != centers_.rows() || v_.cols() != q)
      throw data_error("TpsSpline: V size mismatch");
    if (!c_.allFinite() || !a_.allFinite() || !v_.allFinite() || !centers_.allFinite())
      throw data_error("TpsSpline: non-finite coefficient");
  }

  //! Fits the interpolating spline through (centers, targets). The system is
  //! solved by partial-pivot LU; when the pivot ratio signals singularity a
  //! ridge of 1e-10 is added to the radial block and the solve is retried,
  //! which trades exact interpolation for stability and is recorded in the
  //! report. Throws numeric_error when the system stays singular.
  static TpsSpline fit(const Matrix& centers, const Matrix& targets,
                       TpsFitReport* report = nullptr) {
    const Eigen::Index m = centers.rows();
    const Eigen::Index p = centers.cols();
    const Eigen::Index q = targets.cols();
    if (p != 1 && p != 2) throw data_error("TpsSpline::fit: input dimension must be 1 or 2");
    if (targets.rows() != m) throw data_error("TpsSpline::fit: centers/targets size mismatch");
    if (m < p + 2) throw data_error("TpsSpline::fit: need at least dim + 2 centers");
    if (!centers.allFinite() || !targets.allFinite())
      throw data_error("TpsSpline::fit: non-finite input");

    const Eigen::Index dim = m + 1 + p;
    Matrix lhs = Matrix::Zero(dim, dim);
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = i + 1; j < m; ++j) {
        double s = tps_radial((centers.row(i) - centers.row(j)).norm());
        lhs(i, j) = s;
        lhs(j, i) = s;
      }
    lhs.block(0, m, m, 1).setOnes();
    lhs.block(m, 0, 1, m).setOnes();
    lhs.block(0, m + 1, m, p) = centers;
    lhs.block(m + 1, 0, p, m) = centers.transpose();

    Matrix rhs = Matrix::Zero(dim, q);
    rhs.topRows(m) = targets;

    TpsFitReport local;
    Matrix sol;
    for (int attempt = 0; attempt < 2; ++attempt) {
      Eigen::PartialPivLU<Matrix> lu(lhs);
      Vector piv = lu.matrixLU().diagonal().cwiseAbs();
      double ratio = piv.maxCoeff() > 0.0 ? piv.minCoeff() / piv.maxCoeff() : 0.0;
      if (ratio >= 1e-14) {
        sol = lu.solve(rhs);
        local.pivot_ratio = ratio;
        break;
      }
      if (attempt == 1)
        throw numeric_error("TpsSpline::fit: interpolation system is singular");
      lhs.topLeftCorner(m, m).diagonal().array() += 1e-10;
      local.regularized = true;
      local.ridge = 1e-10;
    }
    if (report) *report = local;

    Matrix v = sol.topRows(m);
    Vector c = sol.row(m).transpose();
    Matrix a = sol.bottomRows(p).transpose();
    return TpsSpline(std::move(c), std::move(a), std::move(v), centers);
  }

  Eigen::Index input_dim() const { return centers_.cols(); }
  Eigen::Index output_dim() const { return c_.size(); }
  Eigen::Index center_count() const { return centers_.rows(); }
  const Vector& constant() const { return c_; }
  const Matrix& affine() const { return a_; }
  const Matrix& radial_coeffs() const { return v_; }
  const Matrix& centers() const { return centers_; }

  //! Maps each row of points through the spline.
  Matrix operator()(const Matrix& points) const {
    if (points.cols() != input_dim()) throw data_error("TpsSpline: dimension mismatch");
    Matrix out = points * a_.transpose();
    out.rowwise() += c_.transpose();
    for (Eigen::Index t = 0; t < points.rows(); ++t)
      for (Eigen::Index k = 0; k < centers_.rows(); ++k) {
        double s = tps_radial((points.row(t) - centers_.row(k)).norm());
        if (s != 0.0) out.row(t) += s * v_.row(k);
      }
    return out;
  }

  //! Jacobian of the map at one point, q x p. The radial gradient
  //! (2 log r + 1)(x - x_k) vanishes in the limit r -> 0, so centers
  //! contribute nothing at their own location.
  Matrix jacobian(const Eigen::RowVectorXd& x) const {
    if (x.size() != input_dim()) throw data_error("TpsSpline: dimension mismatch");
    Matrix j = a_;
    for (Eigen::Index k = 0; k < centers_.rows(); ++k) {
      Eigen::RowVectorXd d = x - centers_.row(k);
      double r = d.norm();
      if (r <= 0.0) continue;
      j += (2.0 * std::log(r) + 1.0) * (v_.row(k).transpose() * d);
    }
    return j;
  }

  //! Composes a similarity transform with the spline output: x -> a R f(x) + b.
  TpsSpline gauged(const GaugeTransform& g) const {
    if (g.dim() != output_dim()) throw data_error("TpsSpline::gauged: dimension mismatch");
    Vector c = g.a() * (g.R() * c_) + g.b();
    Matrix a = g.a() * (g.R() * a_);
    Matrix v = g.a() * (v_ * g.R().transpose());
    return TpsSpline(std::move(c), std::move(a), std::move(v), centers_);
  }

  //! Flat text form: a header line "p q m", then the rows of c, A, V and the
  //! centers, one row per line, 17 significant digits.
  std::string to_text() const {
    std::ostringstream os;
    os << input_dim() << ' ' << output_dim() << ' ' << center_count() << '\n';
    auto put_row = [&os](const auto& row) {
      for (Eigen::Index k = 0; k < row.size(); ++k) {
        if (k) os << ' ';
        os << format_g17(row(k));
      }
      os << '\n';
    };
    put_row(c_.transpose());
    for (Eigen::Index r = 0; r < a_.rows(); ++r) put_row(a_.row(r));
    for (Eigen::Index r = 0; r < v_.rows(); ++r) put_row(v_.row(r));
    for (Eigen::Index r = 0; r < centers_.rows(); ++r) put_row(centers_.row(r));
    return os.str();
  }

  static TpsSpline from_text(const std::string& text) {
    std::istringstream is(text);
    long p = 0, q = 0, m = 0;
    if (!(is >> p >> q >> m)) throw data_error("TpsSpline::from_text: bad header");
    if ((p != 1 && p != 2) || q < 1 || m < p + 2)
      throw data_error("TpsSpline::from_text: invalid dimensions");
    auto take = [&is](Eigen::Index count) {
      Vector v(count);
      std::string token;
      for (Eigen::Index k = 0; k < count; ++k) {
        if (!(is >> token)) throw data_error("TpsSpline::from_text: truncated input");
        v(k) = parse_double(token);
      }
      return v;
    };
    Vector c = take(q);
    Matrix a(q, p);
    for (Eigen::Index r = 0; r < q; ++r) a.row(r) = take(p).transpose();
    Matrix v(m, q);
    for (Eigen::Index r = 0; r < m; ++r) v.row(r) = take(q).transpose();
    Matrix centers(m, p);
    for (Eigen::Index r = 0; r < m; ++r) centers.row(r) = take(p).transpose();
    std::string extra;
    if (is >> extra) throw data_error("TpsSpline::from_text: trailing content");
    return TpsSpline(std::move(c), std::move(a), std::move(v), std::move(centers));
  }

 private:
  Vector c_;
  Matrix a_;
  Matrix v_;
  Matrix centers_;
};

//! Folding diagnostic over a probe grid.
struct FoldReport {
  Eigen::Index probes = 0;
  Eigen::Index folded = 0;       //!< probes whose Jacobian sign differs from the majority
  double fold_fraction = 0.0;    //!< folded / probes; 0 means no fold detected
  int majority_sign = 1;
};

//! Estimates the Jacobian determinant of the map at each probe by central
//! finite differences and reports the fraction of probes whose sign differs
//! from the majority sign. A bijective map has one sign everywhere, so any
//! nonzero fraction flags folding. Degenerate (zero) determinants count as
//! folded.
inline FoldReport fold_check(const TpsSpline& spline, const Matrix& probes, double step = 0.0) {
  const Eigen::Index p = spline.input_dim();
  if (probes.cols() != p) throw data_error("fold_check: dimension mismatch");
  if (probes.rows() < 1) throw data_error("fold_check: no probes");
  if (spline.output_dim() != p)
    throw data_error("fold_check: map must have equal input and output dimension");
  if (step <= 0.0) {
    double extent = (spline.centers().colwise().maxCoeff() -
                     spline.centers().colwise().minCoeff()).norm();
    step = 1e-5 * std::max(extent, 1e-12);
  }

  std::vector<int> sign(static_cast<std::size_t>(probes.rows()));
  parallel_for(sign.size(), [&](std::size_t k) {
    auto row = probes.row(static_cast<Eigen::Index>(k));
    Matrix j(p, p);
    for (Eigen::Index c = 0; c < p; ++c) {
      Eigen::RowVectorXd hi = row, lo = row;
      hi(c) += step;
      lo(c) -= step;
      Matrix pts(2, p);
      pts.row(0) = hi;
      pts.row(1) = lo;
      Matrix img = spline(pts);
      j.col(c) = (img.row(0) - img.row(1)).transpose() / (2.0 * step);
    }
    double det = p == 1 ? j(0, 0) : j(0, 0) * j(1, 1) - j(0, 1) * j(1, 0);
    sign[k] = det > 0.0 ? 1 : (det < 0.0 ? -1 : 0);
  });

  Eigen::Index pos = 0, neg = 0;
  for (int s : sign) {
    if (s > 0) ++pos;
    if (s < 0) ++neg;
  }
  FoldReport rep;
  rep.probes = probes.rows();
  rep.majority_sign = neg > pos ? -1 : 1;
  for (int s : sign)
    if (s != rep.majority_sign) ++rep.folded;
  rep.fold_fraction = static_cast<double>(rep.folded) / static_cast<double>(rep.probes);
  return rep;
}

}  // namespace gdeform
