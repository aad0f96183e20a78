#ifndef HIDDEN_AR_MODEL_HPP
#define HIDDEN_AR_MODEL_HPP

/** @file
 * Parameter point, parameter space, stationary filter quantities and their
 * parameter derivatives, and the Fisher informations of the hidden AR(1)
 * observation model
 *
 *   X_t = f Y_{t-1} + sigma w_t,   Y_t = a Y_{t-1} + b v_t.
 */

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hidden_ar/error.hpp"

namespace hidden_ar {

enum class Coord : std::uint8_t { f, b, a, sigma2 };

inline constexpr std::array<Coord, 4> all_coords{Coord::f, Coord::b, Coord::a, Coord::sigma2};

constexpr std::string_view name(Coord c) noexcept {
  switch (c) {
    case Coord::f: return "f";
    case Coord::b: return "b";
    case Coord::a: return "a";
    case Coord::sigma2: return "sigma2";
  }
  return "?";
}

inline std::optional<Coord> parse_coord(std::string_view s) {
  for (Coord c : all_coords)
    if (s == name(c)) return c;
  if (s == "s2" || s == "sigma^2") return Coord::sigma2;
  return std::nullopt;
}

/// Full parameter point (a, b, f, sigma^2).
struct ModelParams {
  double a = 0.0;
  double b = 1.0;
  double f = 1.0;
  double sigma2 = 1.0;

  double get(Coord c) const noexcept {
    switch (c) {
      case Coord::f: return f;
      case Coord::b: return b;
      case Coord::a: return a;
      case Coord::sigma2: return sigma2;
    }
    return 0.0;
  }

  void set(Coord c, double v) noexcept {
    switch (c) {
      case Coord::f: f = v; break;
      case Coord::b: b = v; break;
      case Coord::a: a = v; break;
      case Coord::sigma2: sigma2 = v; break;
    }
  }

  ModelParams with(Coord c, double v) const noexcept {
    ModelParams out = *this;
    out.set(c, v);
    return out;
  }

  double sigma() const { return std::sqrt(sigma2); }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

inline bool satisfies_a0(const ModelParams& p) noexcept {
  return std::isfinite(p.a) && std::isfinite(p.b) && std::isfinite(p.f) && std::isfinite(p.sigma2) &&
         p.a * p.a < 1.0 && p.b > 0.0 && p.f * p.f > 0.0 && p.sigma2 > 0.0;
}

inline void check_a0(const ModelParams& p) {
  if (satisfies_a0(p)) return;
  std::ostringstream os;
  os.precision(17);
  if (!(p.a * p.a < 1.0)) os << "a=" << p.a << " violates a^2<1";
  else if (!(p.b > 0.0)) os << "b=" << p.b << " violates b>0";
  else if (!(p.f * p.f > 0.0)) os << "f=" << p.f << " violates f^2>0";
  else if (!(p.sigma2 > 0.0)) os << "sigma2=" << p.sigma2 << " violates sigma2>0";
  else os << "non-finite parameter";
  throw Error(Errc::condition_a0_violated, os.str());
}

/// Open interval (lo, hi); estimates are clipped into its closure.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double clip(double v) const noexcept { return std::clamp(v, lo, hi); }
  bool contains(double v) const noexcept { return lo < v && v < hi; }
  double width() const noexcept { return hi - lo; }

  friend bool operator==(const Interval&, const Interval&) = default;
};

enum class UnknownSet { f, b, a, sigma2, fa, afs, abs };

/// Which coordinates are estimated, their bounds, and the fixed values of the rest.
struct ParamProblem {
  ModelParams known;
  std::vector<Coord> unknown;  // canonical order, see canonical_order()
  std::map<Coord, Interval> bounds;

  std::size_t dim() const noexcept { return unknown.size(); }

  bool is_unknown(Coord c) const noexcept {
    return std::find(unknown.begin(), unknown.end(), c) != unknown.end();
  }

  const Interval& bound(Coord c) const {
    auto it = bounds.find(c);
    if (it == bounds.end())
      throw Error(Errc::invalid_config, "no bounds for coordinate " + std::string(name(c)));
    return it->second;
  }

  /// Known values with the unknown coordinates replaced by `values`.
  ModelParams point(std::span<const double> values) const {
    ModelParams p = known;
    for (std::size_t i = 0; i < unknown.size() && i < values.size(); ++i) p.set(unknown[i], values[i]);
    return p;
  }

  std::vector<double> values(const ModelParams& p) const {
    std::vector<double> v;
    v.reserve(unknown.size());
    for (Coord c : unknown) v.push_back(p.get(c));
    return v;
  }

  /// Coordinate-wise clip into the closed bounds box; returns true if anything moved.
  bool clip(std::span<double> values) const {
    bool moved = false;
    for (std::size_t i = 0; i < unknown.size(); ++i) {
      const double c = bound(unknown[i]).clip(values[i]);
      moved |= (c != values[i]);
      values[i] = c;
    }
    return moved;
  }

  friend bool operator==(const ParamProblem&, const ParamProblem&) = default;
};

namespace detail {

inline std::vector<Coord> sorted_unique(std::vector<Coord> u) {
  std::sort(u.begin(), u.end());
  u.erase(std::unique(u.begin(), u.end()), u.end());
  return u;
}

inline std::string join(const std::vector<Coord>& u) {
  std::string s = "{";
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (i) s += ",";
    s += name(u[i]);
  }
  return s + "}";
}

}  // namespace detail

/// Classifies a set of unknown coordinates; throws ForbiddenPair / UnsupportedSet.
inline UnknownSet classify(const std::vector<Coord>& unknown) {
  const auto u = detail::sorted_unique(unknown);
  auto has = [&](Coord c) { return std::binary_search(u.begin(), u.end(), c); };
  if (has(Coord::f) && has(Coord::b))
    throw Error(Errc::forbidden_pair, "f and b cannot be estimated jointly (model depends on f*b only)");
  if (u.size() != unknown.size() || u.empty())
    throw Error(Errc::unsupported_set, "unknown set " + detail::join(unknown));
  if (u.size() == 1) {
    switch (u[0]) {
      case Coord::f: return UnknownSet::f;
      case Coord::b: return UnknownSet::b;
      case Coord::a: return UnknownSet::a;
      case Coord::sigma2: return UnknownSet::sigma2;
    }
  }
  if (u.size() == 2 && has(Coord::f) && has(Coord::a)) return UnknownSet::fa;
  if (u.size() == 3 && has(Coord::a) && has(Coord::sigma2)) {
    if (has(Coord::f)) return UnknownSet::afs;
    if (has(Coord::b)) return UnknownSet::abs;
  }
  throw Error(Errc::unsupported_set, "unknown set " + detail::join(unknown));
}

inline std::vector<Coord> canonical_order(UnknownSet s) {
  switch (s) {
    case UnknownSet::f: return {Coord::f};
    case UnknownSet::b: return {Coord::b};
    case UnknownSet::a: return {Coord::a};
    case UnknownSet::sigma2: return {Coord::sigma2};
    case UnknownSet::fa: return {Coord::f, Coord::a};
    case UnknownSet::afs: return {Coord::a, Coord::f, Coord::sigma2};
    case UnknownSet::abs: return {Coord::a, Coord::b, Coord::sigma2};
  }
  return {};
}

/// Checks that every point of the closed box [lo, hi] satisfies A0 for `c`.
inline void check_bounds(Coord c, const Interval& iv) {
  auto fail = [&](const std::string& why) {
    std::ostringstream os;
    os.precision(17);
    os << name(c) << " bounds (" << iv.lo << ", " << iv.hi << "): " << why;
    throw Error(Errc::condition_a0_violated, os.str());
  };
  if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi)) fail("bounds must be finite");
  if (!(iv.lo < iv.hi)) fail("lower bound must be below upper bound");
  switch (c) {
    case Coord::a:
      if (!(iv.lo > -1.0)) fail("a^2>=1 at the lower bound");
      if (!(iv.hi < 1.0)) fail("a^2>=1 at the upper bound");
      break;
    case Coord::b:
      if (!(iv.lo > 0.0)) fail("b<=0 at the lower bound");
      break;
    case Coord::f:
      if (!(iv.lo > 0.0 || iv.hi < 0.0)) fail("interval contains f=0 (need lo>0 or hi<0)");
      break;
    case Coord::sigma2:
      if (!(iv.lo > 0.0)) fail("sigma2<=0 at the lower bound");
      break;
  }
}

/// Returns the canonicalized problem iff the unknown set is supported and A0
/// holds at `params` and over the whole bounds box.
inline ParamProblem validate(const ModelParams& params, const ParamProblem& problem) {
  const UnknownSet set = classify(problem.unknown);
  check_a0(params);
  ParamProblem out = problem;
  out.unknown = canonical_order(set);
  for (Coord c : out.unknown) check_bounds(c, out.bound(c));
  for (Coord c : all_coords)
    if (!out.is_unknown(c)) out.bounds.erase(c);
  check_a0(out.known);
  return out;
}

inline ParamProblem make_problem(const ModelParams& known, std::vector<Coord> unknown,
                                 std::map<Coord, Interval> bounds) {
  return validate(known, ParamProblem{known, std::move(unknown), std::move(bounds)});
}

// ---------------------------------------------------------------------------
// Stationary filter quantities
// ---------------------------------------------------------------------------

struct StationaryQuantities {
  double gamma_star = 0.0;  ///< stationary filtering error variance
  double big_gamma = 0.0;   ///< f^2 gamma*
  double p = 0.0;           ///< innovation variance sigma^2 + f^2 gamma*
  double a_coef = 0.0;      ///< a sigma^2 / P, multiplies m_{t-1}
  double e_coef = 0.0;      ///< a Gamma / P
  double b_coef = 0.0;      ///< a Gamma / sqrt(P), innovation loading of M_t = f m_t
  double gain = 0.0;        ///< a f gamma* / P, multiplies x_t in the m-recursion
};

/// One step of the Riccati variance recursion.
inline double riccati_step(const ModelParams& p, double gamma) {
  const double f2 = p.f * p.f;
  const double a2 = p.a * p.a;
  return a2 * gamma + p.b * p.b - a2 * f2 * gamma * gamma / (p.sigma2 + f2 * gamma);
}

namespace detail {

// gamma* solves g^2 + lin g + cst = 0.
struct Quadratic {
  double lin;
  double cst;
};

inline Quadratic stationary_quadratic(const ModelParams& p) {
  const double f2 = p.f * p.f;
  return {p.sigma2 * (1.0 - p.a * p.a) / f2 - p.b * p.b, -p.b * p.b * p.sigma2 / f2};
}

}  // namespace detail

/// Relative residual of the stationary quadratic at `gamma`.
inline double stationary_residual(const ModelParams& p, double gamma) {
  const auto q = detail::stationary_quadratic(p);
  const double r = gamma * gamma + q.lin * gamma + q.cst;
  const double scale = gamma * gamma + std::abs(q.lin * gamma) + std::abs(q.cst);
  return std::abs(r) / scale;
}

inline StationaryQuantities stationary(const ModelParams& p) {
  check_a0(p);
  const auto q = detail::stationary_quadratic(p);
  // Positive root; the two branches avoid cancellation.
  const double disc = std::sqrt(q.lin * q.lin - 4.0 * q.cst);
  const double g = q.lin > 0.0 ? -2.0 * q.cst / (q.lin + disc) : 0.5 * (disc - q.lin);

  StationaryQuantities s;
  s.gamma_star = g;
  s.big_gamma = p.f * p.f * g;
  s.p = p.sigma2 + s.big_gamma;
  s.a_coef = p.a * p.sigma2 / s.p;
  s.e_coef = p.a * s.big_gamma / s.p;
  s.b_coef = p.a * s.big_gamma / std::sqrt(s.p);
  s.gain = p.a * p.f * g / s.p;
  return s;
}

/// Parameter derivatives of the stationary quantities with respect to one coordinate.
struct StationaryGradient {
  Coord wrt = Coord::b;
  double d_gamma_star = 0.0;
  double d_big_gamma = 0.0;
  double d_p = 0.0;
  double d_a_coef = 0.0;
  double d_e_coef = 0.0;
  double d_gain = 0.0;
  /// d/dpsi of B*(theta, theta0) = gain(theta) sqrt(P(theta0)), at theta = theta0.
  double d_b_coef = 0.0;
  /// d/dpsi of B(theta, theta0) = E(theta) sqrt(P(theta0)), at theta = theta0 (M = f m scale).
  double d_b_obs = 0.0;
};

/// Implicit differentiation of the stationary quadratic, then chain rule.
inline StationaryGradient stationary_gradient(const ModelParams& p, Coord wrt) {
  const StationaryQuantities s = stationary(p);
  const double f2 = p.f * p.f;
  const double f3 = f2 * p.f;
  const double g = s.gamma_star;
  const auto q = detail::stationary_quadratic(p);

  double d_lin = 0.0;
  double d_cst = 0.0;
  switch (wrt) {
    case Coord::a:
      d_lin = -2.0 * p.a * p.sigma2 / f2;
      break;
    case Coord::b:
      d_lin = -2.0 * p.b;
      d_cst = -2.0 * p.b * p.sigma2 / f2;
      break;
    case Coord::f:
      d_lin = -2.0 * p.sigma2 * (1.0 - p.a * p.a) / f3;
      d_cst = 2.0 * p.b * p.b * p.sigma2 / f3;
      break;
    case Coord::sigma2:
      d_lin = (1.0 - p.a * p.a) / f2;
      d_cst = -p.b * p.b / f2;
      break;
  }

  const double one_f = wrt == Coord::f ? 1.0 : 0.0;
  const double one_a = wrt == Coord::a ? 1.0 : 0.0;
  const double one_s = wrt == Coord::sigma2 ? 1.0 : 0.0;

  StationaryGradient d;
  d.wrt = wrt;
  d.d_gamma_star = -(d_lin * g + d_cst) / (2.0 * g + q.lin);
  d.d_big_gamma = f2 * d.d_gamma_star + one_f * 2.0 * p.f * g;
  d.d_p = one_s + d.d_big_gamma;
  d.d_a_coef = one_a * p.sigma2 / s.p + p.a * (one_s * s.p - p.sigma2 * d.d_p) / (s.p * s.p);
  d.d_e_coef = one_a - d.d_a_coef;
  // gain = a f gamma* / P
  const double num = p.a * p.f * g;
  const double d_num = one_a * p.f * g + one_f * p.a * g + p.a * p.f * d.d_gamma_star;
  d.d_gain = (d_num * s.p - num * d.d_p) / (s.p * s.p);
  const double sqrt_p = std::sqrt(s.p);
  d.d_b_coef = d.d_gain * sqrt_p;
  d.d_b_obs = d.d_e_coef * sqrt_p;
  return d;
}

// ---------------------------------------------------------------------------
// Fisher information
// ---------------------------------------------------------------------------

/// Scalar or 2x2 Fisher information per observation.
struct FisherInfo {
  std::vector<Coord> coords;
  std::size_t dim = 0;
  std::array<double, 4> values{};       ///< row-major I_ij
  std::array<double, 4> dm_moments{};   ///< row-major E[dM_i dM_j] (stationary, at theta0)

  double operator()(std::size_t i, std::size_t j) const { return values[i * 2 + j]; }
  double scalar() const { return values[0]; }
  double determinant() const { return dim == 1 ? values[0] : values[0] * values[3] - values[1] * values[2]; }
  double trace() const { return dim == 1 ? values[0] : values[0] + values[3]; }

  /// Q(theta0) = E[dM_a^2] when the information involves a.
  double q() const {
    for (std::size_t i = 0; i < dim; ++i)
      if (coords[i] == Coord::a) return dm_moments[i * 2 + i];
    return std::nan("");
  }
  /// K(theta0) = E[dM_f dM_a] in the (f, a) case.
  double k() const { return dim == 2 ? dm_moments[1] : std::nan(""); }

  /// Row-major inverse (1x1 or 2x2).
  std::array<double, 4> inverse() const {
    if (dim == 1) return {1.0 / values[0], 0.0, 0.0, 0.0};
    const double det = determinant();
    return {values[3] / det, -values[1] / det, -values[2] / det, values[0] / det};
  }
};

namespace detail {

/// Stationary second moments of the derivative tracks dM_i = d(f m)/dpsi_i at
/// the true parameter. The joint state z = (M, dM_1..dM_k) obeys
///   z_t = F z_{t-1} + g zeta_t,
/// F = [[a, 0], [1{psi_i = a}, A I]],  g = (B, dB_1..dB_k),
/// and the moments come from the discrete Lyapunov equation (doubling).
inline Eigen::MatrixXd derivative_moments(const ModelParams& p, std::span<const Coord> coords) {
  const StationaryQuantities s = stationary(p);
  const auto k = static_cast<Eigen::Index>(coords.size());
  Eigen::MatrixXd F = Eigen::MatrixXd::Zero(k + 1, k + 1);
  Eigen::VectorXd g(k + 1);
  F(0, 0) = p.a;
  g(0) = s.e_coef * std::sqrt(s.p);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Coord c = coords[static_cast<std::size_t>(i)];
    F(i + 1, i + 1) = s.a_coef;
    F(i + 1, 0) = c == Coord::a ? 1.0 : 0.0;
    g(i + 1) = stationary_gradient(p, c).d_b_obs;
  }
  Eigen::MatrixXd sigma = g * g.transpose();
  Eigen::MatrixXd Fk = F;
  for (int it = 0; it < 64 && Fk.cwiseAbs().maxCoeff() > 1e-20; ++it) {
    sigma += Fk * sigma * Fk.transpose();
    Fk = Fk * Fk;
  }
  return sigma.bottomRightCorner(k, k);
}

inline double closed_form_scalar_info(const ModelParams& p, Coord c) {
  const StationaryQuantities s = stationary(p);
  const double dp = stationary_gradient(p, c).d_p;
  const double p2 = s.p * s.p;
  const double as4 = p.a * p.a * p.sigma2 * p.sigma2;
  return dp * dp * (p2 + as4) / (2.0 * p2 * (p2 - as4));
}

}  // namespace detail

/// Fisher information from the stationary moments of the score increments,
/// I_ij = E[dM_i dM_j] / P + dP_i dP_j / (2 P^2). Valid for any subset of {f, b, a}.
inline FisherInfo fisher_info_from_moments(const ModelParams& p, std::span<const Coord> coords) {
  const StationaryQuantities s = stationary(p);
  const Eigen::MatrixXd mom = detail::derivative_moments(p, coords);
  FisherInfo fi;
  fi.coords.assign(coords.begin(), coords.end());
  fi.dim = coords.size();
  std::array<double, 2> dp{};
  for (std::size_t i = 0; i < fi.dim; ++i) dp[i] = stationary_gradient(p, coords[i]).d_p;
  for (std::size_t i = 0; i < fi.dim; ++i)
    for (std::size_t j = 0; j < fi.dim; ++j) {
      const double m = mom(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      fi.dm_moments[i * 2 + j] = m;
      fi.values[i * 2 + j] = m / s.p + dp[i] * dp[j] / (2.0 * s.p * s.p);
    }
  return fi;
}

/// Fisher information at `params` for the problem's unknown set: {b}, {f}, {a} or {f, a}.
inline FisherInfo fisher_info(const ModelParams& params, const ParamProblem& problem) {
  const UnknownSet set = classify(problem.unknown);
  const auto coords = canonical_order(set);
  switch (set) {
    case UnknownSet::b:
    case UnknownSet::f: {
      FisherInfo fi = fisher_info_from_moments(params, coords);
      fi.values[0] = detail::closed_form_scalar_info(params, coords[0]);
      return fi;
    }
    case UnknownSet::a:
    case UnknownSet::fa:
      return fisher_info_from_moments(params, coords);
    default:
      throw Error(Errc::unsupported_set,
                  "Fisher information is available for {b}, {f}, {a}, {f,a}; got " + detail::join(problem.unknown));
  }
}

}  // namespace hidden_ar

#endif  // HIDDEN_AR_MODEL_HPP
