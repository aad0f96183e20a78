#ifndef HIDDEN_AR_ADAPTIVE_HPP
#define HIDDEN_AR_ADAPTIVE_HPP

/** @file
 * Adaptive Kalman filter: the stationary filter step with the unknown
 * coordinates replaced, at every step, by the current value of the one-step
 * estimator process. Also the limit S*^2 of the normalized filtering excess
 * risk and per-checkpoint error reports against the oracle filter.
 */

#include <cmath>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "hidden_ar/error.hpp"
#include "hidden_ar/kalman.hpp"
#include "hidden_ar/model.hpp"
#include "hidden_ar/onestep.hpp"

namespace hidden_ar {

struct AdaptiveTrace {
  std::size_t tau = 0;
  std::vector<double> m_star;  ///< m*_t for t = tau+1..T, stored at index t - first_t()
  EstimatorTrace theta_track;
  std::vector<double> oracle_m;  ///< m_t(theta0) for t = 0..T when attached, else empty

  std::size_t first_t() const noexcept { return tau + 1; }
  std::size_t horizon() const noexcept { return theta_track.horizon; }
  bool defined_at(std::size_t t) const noexcept { return t >= first_t() && t <= horizon(); }
  double at(std::size_t t) const { return m_star.at(t - first_t()); }
};

/// Runs the adaptive recursion for a given estimator track.
///
/// m*_tau is the stationary filter at the preliminary point over x_0..x_tau
/// (started from 0). For t > tau the plug-in is theta*_{t-1}, falling back to
/// the preliminary estimate while the track is not yet defined.
inline AdaptiveTrace adaptive_from_track(std::span<const double> x, const EstimatorTrace& track) {
  if (x.size() != track.horizon + 1)
    throw Error(Errc::mismatched_lengths, "series and estimator track have different horizons");
  AdaptiveTrace out;
  out.tau = track.tau;
  out.theta_track = track;
  const std::size_t T = track.horizon;

  const StationaryQuantities s0 = stationary(track.prelim_point);
  double m = 0.0;
  for (std::size_t t = 1; t <= track.tau; ++t) m = stationary_step(s0, m, x[t]);

  out.m_star.resize(T - track.tau);
  for (std::size_t t = track.tau + 1; t <= T; ++t) {
    const StationaryQuantities s = stationary(track.params_at(t - 1));
    m = stationary_step(s, m, x[t]);
    out.m_star[t - out.first_t()] = m;
  }
  return out;
}

/// Full pipeline: preliminary MME, one-step process, adaptive filter.
inline AdaptiveTrace adaptive_filter(std::span<const double> x, const ParamProblem& problem,
                                     double delta = default_delta) {
  return adaptive_from_track(x, one_step(x, problem, delta, OneStepForm::recurrent));
}

/// Estimator track frozen at `point` (every path value equal to it); feeding
/// the truth reduces the adaptive filter to the oracle filter.
inline EstimatorTrace frozen_track(const ModelParams& point, const ParamProblem& problem, std::size_t tau,
                                   std::size_t horizon) {
  const ParamProblem pr = validate(problem.known, problem);
  EstimatorTrace tr;
  tr.tau = tau;
  tr.horizon = horizon;
  tr.coords = pr.unknown;
  tr.prelim = pr.values(point);
  tr.prelim_point = pr.point(tr.prelim);
  tr.prelim_clip.assign(tr.dim(), ClipEvent::interior);
  const std::size_t n = horizon >= tau + 2 ? horizon - tau - 1 : 0;
  tr.clipped.assign(n, 0);
  tr.path.reserve(n * tr.dim());
  for (std::size_t i = 0; i < n; ++i) tr.path.insert(tr.path.end(), tr.prelim.begin(), tr.prelim.end());
  return tr;
}

/// lim t E(m*_t - m_t(theta0))^2 for one unknown coordinate, computed as
/// E[dm^2] / I with dm the stationary derivative track of the m-filter.
///
/// For b this is B*'^2 / (I_b (1 - A^2)), B*' = a f sigma^2 dgamma*/db / P^{3/2},
/// because the derivative track is then driven by the innovations only. For f
/// and a the track also loads on m itself and the 2x2 Lyapunov moment is used
/// (experimental).
inline double s_star_limit(const ModelParams& p, Coord c = Coord::b) {
  if (c == Coord::sigma2) throw Error(Errc::unsupported_coordinate, "S*^2 is provided for f, b, a only");
  const StationaryQuantities s = stationary(p);
  const StationaryGradient d = stationary_gradient(p, c);
  const ParamProblem pr{p, {c}, {}};
  const double info = fisher_info(p, pr).scalar();
  if (c == Coord::b) return d.d_b_coef * d.d_b_coef / (info * (1.0 - s.a_coef * s.a_coef));

  // m_t = a m_{t-1} + K sqrt(P) zeta_t,  dm_t = A dm_{t-1} + (dA + f dK) m_{t-1} + dK sqrt(P) zeta_t.
  Eigen::Matrix2d F;
  F << p.a, 0.0, d.d_a_coef + p.f * d.d_gain, s.a_coef;
  const Eigen::Vector2d g(s.gain * std::sqrt(s.p), d.d_b_coef);
  Eigen::Matrix2d sigma = g * g.transpose();
  Eigen::Matrix2d Fk = F;
  for (int it = 0; it < 64 && Fk.cwiseAbs().maxCoeff() > 1e-20; ++it) {
    sigma += Fk * sigma * Fk.transpose();
    Fk = Fk * Fk;
  }
  return sigma(1, 1) / info;
}

struct CheckpointError {
  double v = 0.0;
  std::size_t t = 0;
  double filter_error = 0.0;              ///< t (m*_t - m_t(theta0))^2
  std::vector<double> estimator_error;    ///< t (theta*_t - theta0)^2 per unknown coordinate
};

/// Normalized filter and estimator errors at t = floor(v T) for each checkpoint v.
inline std::vector<CheckpointError> error_report(const AdaptiveTrace& trace, std::span<const double> oracle_m,
                                                 std::span<const double> checkpoints, const ModelParams& theta0) {
  const std::size_t T = trace.horizon();
  if (oracle_m.size() != T + 1) throw Error(Errc::mismatched_lengths, "oracle track length differs from T+1");
  std::vector<CheckpointError> out;
  for (double v : checkpoints) {
    if (!(v > 0.0 && v <= 1.0)) throw Error(Errc::invalid_config, "checkpoints must lie in (0, 1]");
    const auto t = static_cast<std::size_t>(std::floor(v * static_cast<double>(T)));
    if (!trace.defined_at(t))
      throw Error(Errc::invalid_config, "checkpoint t=" + std::to_string(t) + " precedes the adaptive filter");
    CheckpointError e;
    e.v = v;
    e.t = t;
    const double dt = static_cast<double>(t);
    const double dm = trace.at(t) - oracle_m[t];
    e.filter_error = dt * dm * dm;
    const ModelParams est = trace.theta_track.params_at(t);
    for (Coord c : trace.theta_track.coords) {
      const double de = est.get(c) - theta0.get(c);
      e.estimator_error.push_back(dt * de * de);
    }
    out.push_back(std::move(e));
  }
  return out;
}

inline std::vector<CheckpointError> error_report(const AdaptiveTrace& trace, const FilterTrace& oracle,
                                                 std::span<const double> checkpoints, const ModelParams& theta0) {
  return error_report(trace, std::span<const double>(oracle.m), checkpoints, theta0);
}

}  // namespace hidden_ar

#endif  // HIDDEN_AR_ADAPTIVE_HPP
