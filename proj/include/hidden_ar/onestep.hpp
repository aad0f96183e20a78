#ifndef HIDDEN_AR_ONESTEP_HPP
#define HIDDEN_AR_ONESTEP_HPP

/** @file
 * One-step MLE-process: a method-of-moments estimate on the learning interval
 * [0, tau], corrected by one Fisher-scoring step whose score sum runs over
 * s = tau+1..t. The result is a process in the upper time index t.
 */

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "hidden_ar/error.hpp"
#include "hidden_ar/kalman.hpp"
#include "hidden_ar/model.hpp"
#include "hidden_ar/moments.hpp"

namespace hidden_ar {

inline constexpr double default_delta = 0.6;

/// tau_T = floor(T^delta), delta in (1/2, 1); requires tau_T <= T - 2.
inline std::size_t learning_interval(std::size_t horizon, double delta) {
  if (!(delta > 0.5 && delta < 1.0))
    throw Error(Errc::invalid_config, "delta must lie in (0.5, 1), got " + std::to_string(delta));
  if (horizon < 16) throw Error(Errc::horizon_too_short, "T must be at least 16, got " + std::to_string(horizon));
  const double v = std::pow(static_cast<double>(horizon), delta);
  // Exact powers such as (10^5)^0.6 = 1000 may come back as 999.999...
  const double nearest = std::round(v);
  const auto tau = static_cast<std::size_t>(std::abs(v - nearest) <= 1e-9 * v ? nearest : std::floor(v));
  if (tau + 2 > horizon)
    throw Error(Errc::horizon_too_short, "floor(T^delta)=" + std::to_string(tau) + " exceeds T-2");
  return tau;
}

enum class OneStepForm { batch, recurrent };

/// Estimator path theta*_{t,T} for t = tau+2..T.
struct EstimatorTrace {
  std::size_t tau = 0;
  std::size_t horizon = 0;
  double delta = 0.0;
  std::vector<Coord> coords;
  ModelParams prelim_point;      ///< known values plus the preliminary estimate
  std::vector<double> prelim;    ///< preliminary estimate, canonical order
  std::vector<ClipEvent> prelim_clip;
  std::vector<double> path;      ///< row-major, one row of dim() values per t
  std::vector<std::uint8_t> clipped;

  std::size_t dim() const noexcept { return coords.size(); }
  std::size_t first_t() const noexcept { return tau + 2; }
  std::size_t size() const noexcept { return clipped.size(); }
  bool defined_at(std::size_t t) const noexcept { return t >= first_t() && t <= horizon; }

  double value(std::size_t t, std::size_t i = 0) const { return path.at((t - first_t()) * dim() + i); }
  bool clipped_at(std::size_t t) const { return clipped.at(t - first_t()) != 0; }

  std::vector<double> values_at(std::size_t t) const {
    const auto row = path.begin() + static_cast<std::ptrdiff_t>((t - first_t()) * dim());
    return {row, row + static_cast<std::ptrdiff_t>(dim())};
  }

  /// Full parameter point at t; the preliminary estimate before the path starts.
  ModelParams params_at(std::size_t t) const {
    ModelParams p = prelim_point;
    if (!defined_at(t)) return p;
    for (std::size_t i = 0; i < dim(); ++i) p.set(coords[i], value(t, i));
    return p;
  }
};

namespace detail {

/// Score increments at the frozen point for s = tau+1..T, row-major (T - tau) x dim.
/// The filter tracks restart at s = tau+1 from m = 0, dm = 0.
inline std::vector<double> score_increments(const ModelParams& at, std::span<const double> x, std::size_t tau,
                                            std::span<const Coord> coords) {
  const StationaryQuantities s = stationary(at);
  const std::size_t k = coords.size();
  std::vector<StationaryGradient> grads;
  for (Coord c : coords) grads.push_back(stationary_gradient(at, c));
  const std::size_t T = x.size() - 1;
  std::vector<double> out((T - tau) * k);
  double m = 0.0;
  std::vector<double> dm(k, 0.0);
  const double inv_p = 1.0 / s.p;
  const double inv_2p2 = 0.5 * inv_p * inv_p;
  for (std::size_t t = tau + 1; t <= T; ++t) {
    const double e = x[t] - at.f * m;
    for (std::size_t i = 0; i < k; ++i) {
      // d(f m)/d psi
      const double dM = at.f * dm[i] + (coords[i] == Coord::f ? m : 0.0);
      out[(t - tau - 1) * k + i] = e * dM * inv_p + (e * e - s.p) * grads[i].d_p * inv_2p2;
    }
    for (std::size_t i = 0; i < k; ++i) dm[i] = s.a_coef * dm[i] + grads[i].d_a_coef * m + grads[i].d_gain * x[t];
    m = stationary_step(s, m, x[t]);
  }
  return out;
}

}  // namespace detail

/// One-step process from an explicit learning interval and preliminary estimate.
inline EstimatorTrace one_step_path(std::span<const double> x, const ParamProblem& problem_in, std::size_t tau,
                                    std::span<const double> prelim, OneStepForm form = OneStepForm::batch) {
  const ParamProblem problem = validate(problem_in.known, problem_in);
  const UnknownSet set = classify(problem.unknown);
  if (set != UnknownSet::b && set != UnknownSet::f && set != UnknownSet::a && set != UnknownSet::fa)
    throw Error(Errc::unsupported_set, "one-step estimator supports {b}, {f}, {a}, {f,a}");
  const auto coords = canonical_order(set);
  const std::size_t k = coords.size();
  if (prelim.size() != k) throw Error(Errc::mismatched_lengths, "preliminary estimate has wrong dimension");
  if (x.size() < tau + 3)
    throw Error(Errc::series_too_short, "series too short for learning interval " + std::to_string(tau));

  EstimatorTrace tr;
  tr.tau = tau;
  tr.horizon = x.size() - 1;
  tr.coords = coords;
  tr.prelim.assign(prelim.begin(), prelim.end());
  tr.prelim_point = problem.point(prelim);
  tr.prelim_clip.assign(k, ClipEvent::interior);

  const FisherInfo fi = fisher_info(tr.prelim_point, problem);
  if (k == 1 ? !(fi.scalar() >= 1e-12) : !(fi.determinant() >= 1e-12 * fi.trace() * fi.trace()))
    throw Error(Errc::fisher_singular, "Fisher information singular at the preliminary estimate");
  const auto inv = fi.inverse();

  const std::vector<double> d = detail::score_increments(tr.prelim_point, x, tau, coords);
  const std::size_t T = tr.horizon;
  tr.path.resize((T - tau - 1) * k);
  tr.clipped.resize(T - tau - 1);

  auto apply_inverse = [&](const double* v, double* out) {
    if (k == 1) {
      out[0] = inv[0] * v[0];
    } else {
      out[0] = inv[0] * v[0] + inv[1] * v[1];
      out[1] = inv[2] * v[0] + inv[3] * v[1];
    }
  };

  std::array<double, 2> theta{};  // unclipped theta*_{t,T}
  std::array<double, 2> sum{};
  std::array<double, 2> step{};
  for (std::size_t t = tau + 1; t <= T; ++t) {
    const double* dt = &d[(t - tau - 1) * k];
    const double n = static_cast<double>(t - tau);
    if (form == OneStepForm::batch) {
      for (std::size_t i = 0; i < k; ++i) sum[i] += dt[i];
      apply_inverse(sum.data(), step.data());
      for (std::size_t i = 0; i < k; ++i) theta[i] = prelim[i] + step[i] / n;
    } else {
      apply_inverse(dt, step.data());
      if (t == tau + 1) {
        for (std::size_t i = 0; i < k; ++i) theta[i] = prelim[i] + step[i];
      } else {
        for (std::size_t i = 0; i < k; ++i)
          theta[i] = prelim[i] / n + (1.0 - 1.0 / n) * theta[i] + step[i] / n;
      }
    }
    if (t < tau + 2) continue;
    double* row = &tr.path[(t - tau - 2) * k];
    for (std::size_t i = 0; i < k; ++i) row[i] = theta[i];
    tr.clipped[t - tau - 2] = problem.clip(std::span<double>(row, k)) ? 1 : 0;
  }
  return tr;
}

/// Full pipeline: learning interval, preliminary MME on x[0..tau], one-step correction.
inline EstimatorTrace one_step(std::span<const double> x, const ParamProblem& problem, double delta = default_delta,
                               OneStepForm form = OneStepForm::batch) {
  detail::check_series(x, 17);
  const std::size_t tau = learning_interval(x.size() - 1, delta);
  const MmeResult pre = mme(x.first(tau + 1), problem);
  EstimatorTrace tr = one_step_path(x, problem, tau, pre.values, form);
  tr.delta = delta;
  tr.prelim_clip = pre.clip;
  return tr;
}

inline EstimatorTrace one_step_scalar(std::span<const double> x, const ParamProblem& problem,
                                      double delta = default_delta, OneStepForm form = OneStepForm::batch) {
  if (problem.dim() != 1) throw Error(Errc::unsupported_set, "scalar one-step needs exactly one unknown");
  return one_step(x, problem, delta, form);
}

inline EstimatorTrace one_step_pair(std::span<const double> x, const ParamProblem& problem,
                                    double delta = default_delta, OneStepForm form = OneStepForm::batch) {
  if (classify(problem.unknown) != UnknownSet::fa)
    throw Error(Errc::unsupported_set, "pair one-step needs unknown = {f,a}");
  return one_step(x, problem, delta, form);
}

}  // namespace hidden_ar

#endif  // HIDDEN_AR_ONESTEP_HPP
