#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "core.hpp"
#include "tps.hpp"

//! Isotropic variogram models gamma0(h) built as nonnegative mixtures of
//! standard structures, the binned experimental variogram, and a weighted
//! nonnegative least-squares fit of the mixture sills over a dictionary of
//! candidate ranges.
namespace gdeform {

enum class CovKind { nugget, exponential, gaussian, spherical, cubic };

inline const char* kind_name(CovKind k) {
  switch (k) {
    case CovKind::nugget: return "nugget";
    case CovKind::exponential: return "exponential";
    case CovKind::gaussian: return "gaussian";
    case CovKind::spherical: return "spherical";
    case CovKind::cubic: return "cubic";
  }
  throw data_error("kind_name: unknown kind");
}

inline CovKind kind_from_name(const std::string& name) {
  if (name == "nugget") return CovKind::nugget;
  if (name == "exponential") return CovKind::exponential;
  if (name == "gaussian") return CovKind::gaussian;
  if (name == "spherical") return CovKind::spherical;
  if (name == "cubic") return CovKind::cubic;
  throw data_error("unknown variogram structure '" + name + "'");
}

//! Unit-sill variogram of one structure at lag h; range is the scale
//! parameter of the structure (the distance where bounded models reach
//! their sill, or the exponential/gaussian scale).
inline double unit_variogram(CovKind kind, double h, double range) {
  if (h < 0.0) throw data_error("unit_variogram: negative lag");
  if (h == 0.0) return 0.0;
  switch (kind) {
    case CovKind::nugget:
      return 1.0;
    case CovKind::exponential:
      return 1.0 - std::exp(-h / range);
    case CovKind::gaussian: {
      double u = h / range;
      return 1.0 - std::exp(-u * u);
    }
    case CovKind::spherical: {
      double r = h / range;
      if (r >= 1.0) return 1.0;
      return 1.5 * r - 0.5 * r * r * r;
    }
    case CovKind::cubic: {
      double r = h / range;
      if (r >= 1.0) return 1.0;
      double r2 = r * r;
      double r3 = r2 * r;
      return 7.0 * r2 - 8.75 * r3 + 3.5 * r3 * r2 - 0.75 * r3 * r3 * r;
    }
  }
  throw data_error("unit_variogram: unknown kind");
}

//! Nonnegative mixture of variogram structures. Kriging uses the induced
//! covariance C(h) = total_sill - gamma(h), which is positive definite for
//! every structure handled here.
class VariogramModel {
 public:
  struct Component {
    CovKind kind;
    double sill;
    double range;  //!< ignored by the nugget, serialized as 0
  };

  explicit VariogramModel(std::vector<Component> components)
      : components_(std::move(components)) {
    if (components_.empty()) throw data_error("VariogramModel: no components");
    for (const auto& c : components_) {
      if (!std::isfinite(c.sill) || c.sill < 0.0)
        throw data_error("VariogramModel: sill must be finite and nonnegative");
      if (c.kind != CovKind::nugget && (!std::isfinite(c.range) || c.range <= 0.0))
        throw data_error("VariogramModel: range must be finite and positive");
    }
    if (!(total_sill() > 0.0)) throw data_error("VariogramModel: total sill must be positive");
  }

  const std::vector<Component>& components() const { return components_; }

  double total_sill() const {
    double s = 0.0;
    for (const auto& c : components_) s += c.sill;
    return s;
  }

  double nugget() const {
    double s = 0.0;
    for (const auto& c : components_)
      if (c.kind == CovKind::nugget) s += c.sill;
    return s;
  }

  //! gamma0(h).
  double operator()(double h) const {
    double g = 0.0;
    for (const auto& c : components_) g += c.sill * unit_variogram(c.kind, h, c.range);
    return g;
  }

  //! Stationary covariance C(h) = total_sill - gamma0(h).
  double covariance(double h) const { return total_sill() - (*this)(h); }

  //! Same structures with every range multiplied by a. Composing the
  //! deformation with a scaling by a leaves predictions unchanged when the
  //! model ranges are scaled with it.
  VariogramModel with_scaled_ranges(double a) const {
    if (!(a > 0.0)) throw data_error("with_scaled_ranges: factor must be positive");
    std::vector<Component> scaled = components_;
    for (auto& c : scaled)
      if (c.kind != CovKind::nugget) c.range *= a;
    return VariogramModel(std::move(scaled));
  }

  //! One line per component: "kind sill range".
  std::string to_text() const {
    std::ostringstream os;
    for (const auto& c : components_) {
      double range = c.kind == CovKind::nugget ? 0.0 : c.range;
      os << kind_name(c.kind) << ' ' << format_g17(c.sill) << ' ' << format_g17(range) << '\n';
    }
    return os.str();
  }

  static VariogramModel from_text(const std::string& text) {
    std::istringstream is(text);
    std::vector<Component> comps;
    std::string line;
    while (std::getline(is, line)) {
      std::istringstream ls(line);
      std::string kind, sill, range;
      if (!(ls >> kind)) continue;
      if (!(ls >> sill >> range))
        throw data_error("VariogramModel::from_text: expected 'kind sill range'");
      std::string extra;
      if (ls >> extra) throw data_error("VariogramModel::from_text: trailing content");
      CovKind k = kind_from_name(kind);
      comps.push_back({k, parse_double(sill), k == CovKind::nugget ? 0.0 : parse_double(range)});
    }
    return VariogramModel(std::move(comps));
  }

 private:
  std::vector<Component> components_;
};

//! Binned classical (method-of-moments) variogram of a point set: bin b
//! averages (Z_i - Z_j)^2 / 2 over pairs whose distance falls in
//! (edges[b], edges[b+1]]. Empty bins are dropped; h is the mean pair
//! distance of each kept bin.
struct ExperimentalVariogram {
  Vector h;
  Vector gamma;
  Vector count;
  double cutoff = 0.0;
};

inline ExperimentalVariogram experimental_variogram(const Matrix& points, const Vector& values,
                                                    int n_bins = 15, double cutoff = 0.0) {
  if (points.rows() != values.size()) throw data_error("experimental_variogram: size mismatch");
  if (points.rows() < 2) throw data_error("experimental_variogram: need at least 2 points");
  if (n_bins < 2) throw data_error("experimental_variogram: need at least 2 bins");
  const Eigen::Index n = points.rows();
  double dmax = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      dmax = std::max(dmax, (points.row(i) - points.row(j)).norm());
  if (!(dmax > 0.0)) throw numeric_error("experimental_variogram: all points coincide");
  if (cutoff <= 0.0) cutoff = 0.5 * dmax;

  Vector sum_g = Vector::Zero(n_bins);
  Vector sum_h = Vector::Zero(n_bins);
  Vector cnt = Vector::Zero(n_bins);
  const double width = cutoff / n_bins;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double d = (points.row(i) - points.row(j)).norm();
      if (d > cutoff || d <= 0.0) continue;
      // bin b covers (b*width, (b+1)*width]
      auto b = std::min<Eigen::Index>(n_bins - 1,
                                      static_cast<Eigen::Index>(std::ceil(d / width)) - 1);
      double dz = values(i) - values(j);
      sum_g(b) += 0.5 * dz * dz;
      sum_h(b) += d;
      cnt(b) += 1.0;
    }

  Eigen::Index kept = (cnt.array() > 0.0).count();
  if (kept == 0) throw numeric_error("experimental_variogram: no pairs within cutoff");
  ExperimentalVariogram out;
  out.h.resize(kept);
  out.gamma.resize(kept);
  out.count.resize(kept);
  out.cutoff = cutoff;
  Eigen::Index k = 0;
  for (Eigen::Index b = 0; b < n_bins; ++b) {
    if (!(cnt(b) > 0.0)) continue;
    out.h(k) = sum_h(b) / cnt(b);
    out.gamma(k) = sum_g(b) / cnt(b);
    out.count(k) = cnt(b);
    ++k;
  }
  return out;
}

//! Lawson-Hanson nonnegative least squares: minimizes |A x - y| over x >= 0.
inline Vector nnls(const Matrix& a, const Vector& y) {
  const Eigen::Index ncol = a.cols();
  if (a.rows() != y.size()) throw data_error("nnls: size mismatch");
  Vector x = Vector::Zero(ncol);
  std::vector<bool> passive(static_cast<std::size_t>(ncol), false);
  Vector w = a.transpose() * y;
  const double tol = 1e-12 * std::max(1.0, w.cwiseAbs().maxCoeff());

  auto solve_passive = [&](Vector& z) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index c = 0; c < ncol; ++c)
      if (passive[static_cast<std::size_t>(c)]) idx.push_back(c);
    Matrix ap(a.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t c = 0; c < idx.size(); ++c) ap.col(static_cast<Eigen::Index>(c)) = a.col(idx[c]);
    Vector zp = ap.colPivHouseholderQr().solve(y);
    z.setZero();
    for (std::size_t c = 0; c < idx.size(); ++c) z(idx[c]) = zp(static_cast<Eigen::Index>(c));
  };

  for (int outer = 0; outer < 6 * static_cast<int>(ncol) + 30; ++outer) {
    w = a.transpose() * (y - a * x);
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index c = 0; c < ncol; ++c)
      if (!passive[static_cast<std::size_t>(c)] && w(c) > best_w) {
        best_w = w(c);
        best = c;
      }
    if (best < 0) return x;
    passive[static_cast<std::size_t>(best)] = true;

    Vector z(ncol);
    for (int inner = 0; inner < 6 * static_cast<int>(ncol) + 30; ++inner) {
      solve_passive(z);
      bool feasible = true;
      double alpha = 1.0;
      for (Eigen::Index c = 0; c < ncol; ++c)
        if (passive[static_cast<std::size_t>(c)] && z(c) <= 0.0) {
          feasible = false;
          alpha = std::min(alpha, x(c) / (x(c) - z(c)));
        }
      if (feasible) {
        x = z;
        break;
      }
      x += alpha * (z - x);
      for (Eigen::Index c = 0; c < ncol; ++c)
        if (passive[static_cast<std::size_t>(c)] && x(c) <= 1e-14)
          passive[static_cast<std::size_t>(c)] = false;
    }
  }
  return x;
}

struct MixtureFitOptions {
  std::vector<CovKind> kinds = {CovKind::exponential, CovKind::gaussian, CovKind::spherical,
                                CovKind::cubic};
  bool nugget = true;
  int ranges_per_kind = 12;  //!< geometric range grid per structure kind
  double prune_fraction = 1e-3;
};

//! Fits mixture sills to an experimental variogram by weighted nonnegative
//! least squares over a dictionary of (kind, range) structures, rows scaled
//! by sqrt(count)/lag so short well-populated lags dominate. Components
//! whose sill falls below prune_fraction of the total are dropped and the
//! remainder refitted until stable.
inline VariogramModel fit_mixture(const ExperimentalVariogram& ev,
                                  const MixtureFitOptions& opt = {}) {
  if (ev.h.size() < 2) throw numeric_error("fit_mixture: need at least 2 lags");
  if (opt.kinds.empty() && !opt.nugget) throw data_error("fit_mixture: empty dictionary");
  if (opt.ranges_per_kind < 1) throw data_error("fit_mixture: need at least one range");

  double hmax = ev.h.maxCoeff();
  std::vector<VariogramModel::Component> dict;
  if (opt.nugget) dict.push_back({CovKind::nugget, 1.0, 0.0});
  for (CovKind kind : opt.kinds) {
    double lo = hmax / 50.0;
    double hi = 1.25 * hmax;
    for (int g = 0; g < opt.ranges_per_kind; ++g) {
      double t = opt.ranges_per_kind == 1
                     ? 0.5
                     : static_cast<double>(g) / (opt.ranges_per_kind - 1);
      dict.push_back({kind, 1.0, lo * std::pow(hi / lo, t)});
    }
  }

  Vector weights(ev.h.size());
  for (Eigen::Index i = 0; i < ev.h.size(); ++i)
    weights(i) = std::sqrt(ev.count(i)) / ev.h(i);

  std::vector<std::size_t> active(dict.size());
  std::iota(active.begin(), active.end(), std::size_t{0});
  Vector sills;
  for (;;) {
    Matrix a(ev.h.size(), static_cast<Eigen::Index>(active.size()));
    for (std::size_t c = 0; c < active.size(); ++c) {
      const auto& comp = dict[active[c]];
      for (Eigen::Index i = 0; i < ev.h.size(); ++i)
        a(i, static_cast<Eigen::Index>(c)) =
            weights(i) * unit_variogram(comp.kind, ev.h(i), comp.range);
    }
    sills = nnls(a, (weights.array() * ev.gamma.array()).matrix());
    double total = sills.sum();
    if (!(total > 0.0)) throw numeric_error("fit_mixture: fitted total sill is zero");
    std::vector<std::size_t> kept;
    for (std::size_t c = 0; c < active.size(); ++c)
      if (sills(static_cast<Eigen::Index>(c)) >= opt.prune_fraction * total)
        kept.push_back(active[c]);
    if (kept.empty()) throw numeric_error("fit_mixture: every component pruned");
    if (kept.size() == active.size()) break;
    active = std::move(kept);
  }

  std::vector<VariogramModel::Component> comps;
  for (std::size_t c = 0; c < active.size(); ++c) {
    VariogramModel::Component comp = dict[active[c]];
    comp.sill = sills(static_cast<Eigen::Index>(c));
    comps.push_back(comp);
  }
  return VariogramModel(std::move(comps));
}

//! Non-stationary variogram induced by a deformation and a stationary
//! model: gamma(x, y) = gamma0(|f(x) - f(y)|).
inline double gamma_ns(const Eigen::RowVectorXd& x, const Eigen::RowVectorXd& y,
                       const TpsSpline& spline, const VariogramModel& model) {
  Matrix pts(2, x.size());
  pts.row(0) = x;
  pts.row(1) = y;
  Matrix img = spline(pts);
  return model((img.row(0) - img.row(1)).norm());
}

}  // namespace gdeform
