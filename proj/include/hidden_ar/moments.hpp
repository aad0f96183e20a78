#ifndef HIDDEN_AR_MOMENTS_HPP
#define HIDDEN_AR_MOMENTS_HPP

/** @file
 * Difference statistics S1, S2, S3 of the observations, their limits Phi(theta),
 * and the method-of-moments estimators obtained by inverting S = Phi(theta).
 */

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hidden_ar/error.hpp"
#include "hidden_ar/kalman.hpp"
#include "hidden_ar/model.hpp"

namespace hidden_ar {

struct MomentStats {
  double s1 = 0.0;
  double s2 = 0.0;
  double s3 = 0.0;
  std::size_t t_used = 0;  ///< normalizer T (number of points minus one)
};

/// S1 = (1/T) sum_{t>=1} D_t^2, S2 = (1/T) sum_{t>=2} D_t D_{t-1},
/// S3 = (1/T) sum_{t>=3} D_t D_{t-2}, with D_t = X_t - X_{t-1}.
inline MomentStats s_statistics(std::span<const double> x) {
  detail::check_series(x, 4);
  const std::size_t T = x.size() - 1;
  double s1 = 0.0, s2 = 0.0, s3 = 0.0;
  double d1 = 0.0, d2 = 0.0;  // D_{t-1}, D_{t-2}
  for (std::size_t t = 1; t <= T; ++t) {
    const double d = x[t] - x[t - 1];
    s1 += d * d;
    if (t >= 2) s2 += d * d1;
    if (t >= 3) s3 += d * d2;
    d2 = d1;
    d1 = d;
  }
  const double inv = 1.0 / static_cast<double>(T);
  return {s1 * inv, s2 * inv, s3 * inv, T};
}

struct PhiValues {
  double phi1 = 0.0;
  double phi2 = 0.0;
  double phi3 = 0.0;
};

inline PhiValues phi(const ModelParams& p) {
  check_a0(p);
  const double fb2 = p.f * p.f * p.b * p.b;
  const double r = fb2 / (1.0 + p.a);
  return {2.0 * r + 2.0 * p.sigma2, r * (p.a - 1.0) - p.sigma2, r * p.a * (p.a - 1.0)};
}

/// Which side of the bounds box an estimate was moved to (events B1 / B2 / B3).
enum class ClipEvent : std::uint8_t { interior, low, high };

struct MmeOptions {
  /// Estimate f from S2 instead of S1 (single unknown f only).
  bool f_from_s2 = false;
  /// Denominators with magnitude below this are treated as degenerate.
  double degenerate_tol = 1e-12;
};

struct MmeResult {
  ModelParams point;
  std::vector<double> values;  ///< unknown coordinates in canonical order
  std::vector<ClipEvent> clip;
  bool degenerate = false;
  std::string degenerate_note;
  MomentStats stats;

  bool clipped() const {
    for (auto e : clip)
      if (e != ClipEvent::interior) return true;
    return false;
  }
};

namespace detail {

struct Clipped {
  double value;
  ClipEvent event;
};

inline Clipped clip_event(const Interval& iv, double v) {
  if (!(v > iv.lo)) return {iv.lo, ClipEvent::low};
  if (!(v < iv.hi)) return {iv.hi, ClipEvent::high};
  return {v, ClipEvent::interior};
}

/// Root with the sign dictated by the box; a non-positive square goes to the
/// bound closest to zero.
inline Clipped signed_root(const Interval& iv, double square) {
  if (!(square > 0.0)) return iv.lo > 0.0 ? Clipped{iv.lo, ClipEvent::low} : Clipped{iv.hi, ClipEvent::high};
  const double r = std::sqrt(square);
  return clip_event(iv, iv.lo > 0.0 ? r : -r);
}

}  // namespace detail

/// Inverts the relevant subsystem of S_i = Phi_i(theta) for the unknowns and
/// clips into the bounds box.
inline MmeResult mme_from_stats(const MomentStats& st, const ParamProblem& problem, const MmeOptions& opt = {}) {
  const UnknownSet set = classify(problem.unknown);
  const auto coords = canonical_order(set);
  const ModelParams& k = problem.known;
  const double tol = opt.degenerate_tol;

  MmeResult res;
  res.stats = st;
  res.point = k;
  auto put = [&](Coord c, detail::Clipped v) {
    res.point.set(c, v.value);
    res.values.push_back(v.value);
    res.clip.push_back(v.event);
  };
  auto degenerate = [&](const std::string& what) {
    res.degenerate = true;
    if (!res.degenerate_note.empty()) res.degenerate_note += "; ";
    res.degenerate_note += what;
  };

  const double excess = st.s1 - 2.0 * k.sigma2;  // S1 - 2 sigma^2 = 2 f^2 b^2 / (1 + a)

  switch (set) {
    case UnknownSet::f: {
      double sq;
      if (opt.f_from_s2)
        sq = (st.s2 + k.sigma2) * (1.0 + k.a) / (k.b * k.b * (k.a - 1.0));
      else
        sq = excess * (1.0 + k.a) / (2.0 * k.b * k.b);
      if (std::abs(excess) < tol) degenerate("S1 - 2 sigma^2 vanishes");
      put(Coord::f, detail::signed_root(problem.bound(Coord::f), sq));
      break;
    }
    case UnknownSet::b: {
      if (std::abs(excess) < tol) degenerate("S1 - 2 sigma^2 vanishes");
      put(Coord::b, detail::signed_root(problem.bound(Coord::b), excess * (1.0 + k.a) / (2.0 * k.f * k.f)));
      break;
    }
    case UnknownSet::a: {
      const Interval& iv = problem.bound(Coord::a);
      if (excess <= tol) {
        degenerate("S1 - 2 sigma^2 is not positive");
        put(Coord::a, {iv.hi, ClipEvent::high});
      } else {
        put(Coord::a, detail::clip_event(iv, 2.0 * k.f * k.f * k.b * k.b / excess - 1.0));
      }
      break;
    }
    case UnknownSet::sigma2: {
      put(Coord::sigma2,
          detail::clip_event(problem.bound(Coord::sigma2), 0.5 * st.s1 - k.f * k.f * k.b * k.b / (1.0 + k.a)));
      break;
    }
    case UnknownSet::fa: {
      // S1 + 2 S2 = 2 f^2 b^2 a / (1 + a), so a = (S1 + 2 S2) / (S1 - 2 sigma^2).
      const Interval& ia = problem.bound(Coord::a);
      const double num = st.s1 + 2.0 * st.s2;
      detail::Clipped a;
      if (std::abs(excess) < tol) {
        degenerate("S1 - 2 sigma^2 vanishes");
        a = num >= 0.0 ? detail::Clipped{ia.hi, ClipEvent::high} : detail::Clipped{ia.lo, ClipEvent::low};
      } else {
        a = detail::clip_event(ia, num / excess);
      }
      const auto f = detail::signed_root(problem.bound(Coord::f), excess * (1.0 + a.value) / (2.0 * k.b * k.b));
      put(Coord::f, f);
      put(Coord::a, a);
      break;
    }
    case UnknownSet::afs:
    case UnknownSet::abs: {
      const Coord scale = set == UnknownSet::afs ? Coord::f : Coord::b;
      const double other = set == UnknownSet::afs ? k.b : k.f;
      const Interval& ia = problem.bound(Coord::a);
      const double den = st.s1 + 2.0 * st.s2;
      detail::Clipped a;
      if (std::abs(den) < tol) {
        degenerate("S1 + 2 S2 vanishes");
        a = st.s3 >= 0.0 ? detail::Clipped{ia.hi, ClipEvent::high} : detail::Clipped{ia.lo, ClipEvent::low};
      } else {
        a = detail::clip_event(ia, 2.0 * st.s3 / den + 1.0);
      }
      const double den2 = a.value * (a.value - 1.0);
      double sq = 0.0;
      if (std::abs(den2) < tol)
        degenerate("a* is numerically zero");
      else
        sq = st.s3 * (1.0 + a.value) / (other * other * den2);
      const auto s = detail::signed_root(problem.bound(scale), sq);
      const double s2 =
          0.5 * st.s1 - s.value * s.value * other * other / (1.0 + a.value);
      put(Coord::a, a);
      put(scale, s);
      put(Coord::sigma2, detail::clip_event(problem.bound(Coord::sigma2), s2));
      break;
    }
  }
  return res;
}

inline MmeResult mme(std::span<const double> x_prefix, const ParamProblem& problem, const MmeOptions& opt = {}) {
  return mme_from_stats(s_statistics(x_prefix), problem, opt);
}

/// Exact moments at theta, for round-trip checks.
inline MomentStats exact_moments(const ModelParams& p) {
  const PhiValues v = phi(p);
  return {v.phi1, v.phi2, v.phi3, 0};
}

}  // namespace hidden_ar

#endif  // HIDDEN_AR_MOMENTS_HPP
