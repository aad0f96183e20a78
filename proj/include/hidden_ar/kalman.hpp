#ifndef HIDDEN_AR_KALMAN_HPP
#define HIDDEN_AR_KALMAN_HPP

#include <cmath>
#include <map>
#include <span>
#include <vector>

#include "hidden_ar/error.hpp"
#include "hidden_ar/model.hpp"

namespace hidden_ar {

/// Conditional-mean track m_t = E(Y_t | X_0..X_t) and companions.
struct FilterTrace {
  std::vector<double> m;      ///< m_0..m_T
  std::vector<double> gamma;  ///< gamma_0..gamma_T, or the single value gamma* when stationary
  bool stationary = false;
  std::vector<double> innovations;  ///< zeta_1..zeta_T, stored at index t-1
  std::map<Coord, std::vector<double>> dm;  ///< d m_t / d psi, t = 0..T

  double gamma_at(std::size_t t) const { return stationary ? gamma.front() : gamma.at(t); }
};

namespace detail {

inline void check_series(std::span<const double> x, std::size_t min_len) {
  if (x.size() < min_len)
    throw Error(Errc::series_too_short,
                "series has " + std::to_string(x.size()) + " points, need at least " + std::to_string(min_len));
}

}  // namespace detail

/// One step of the stationary filter, m_t = A m_{t-1} + (a f gamma*/P) x_t.
/// Every stationary-filter consumer goes through this so that equal inputs
/// give bit-identical tracks.
inline double stationary_step(const StationaryQuantities& s, double m_prev, double x) noexcept {
  return s.a_coef * m_prev + s.gain * x;
}

/// Exact Kalman recursion with the transient Riccati variance.
inline FilterTrace filter_transient(const ModelParams& p, std::span<const double> x, double m0 = 0.0,
                                    double gamma0 = 0.0) {
  check_a0(p);
  detail::check_series(x, 2);
  const std::size_t n = x.size();
  FilterTrace tr;
  tr.m.resize(n);
  tr.gamma.resize(n);
  tr.innovations.resize(n - 1);
  tr.m[0] = m0;
  tr.gamma[0] = gamma0;
  const double f2 = p.f * p.f;
  for (std::size_t t = 1; t < n; ++t) {
    const double g = tr.gamma[t - 1];
    const double pt = p.sigma2 + f2 * g;
    const double innov = x[t] - p.f * tr.m[t - 1];
    tr.m[t] = p.a * tr.m[t - 1] + p.a * p.f * g / pt * innov;
    tr.gamma[t] = riccati_step(p, g);
    tr.innovations[t - 1] = innov / std::sqrt(pt);
  }
  return tr;
}

/// Stationary filter with gamma = gamma*(theta) throughout.
inline FilterTrace filter_stationary(const ModelParams& p, std::span<const double> x, double m0 = 0.0) {
  detail::check_series(x, 2);
  const StationaryQuantities s = stationary(p);
  const std::size_t n = x.size();
  FilterTrace tr;
  tr.stationary = true;
  tr.gamma = {s.gamma_star};
  tr.m.resize(n);
  tr.innovations.resize(n - 1);
  tr.m[0] = m0;
  const double inv_sqrt_p = 1.0 / std::sqrt(s.p);
  for (std::size_t t = 1; t < n; ++t) {
    tr.innovations[t - 1] = (x[t] - p.f * tr.m[t - 1]) * inv_sqrt_p;
    tr.m[t] = stationary_step(s, tr.m[t - 1], x[t]);
  }
  return tr;
}

/// Derivative of the stationary m-track with respect to one coordinate, with
/// the observations held fixed:
///   dm_t = A dm_{t-1} + dA m_{t-1} + d(gain) x_t.
/// For psi = b this is dm_t = P^-2 a sigma^2 [P dm_{t-1} - f^2 dgamma* m_{t-1}] + a f sigma^2 dgamma* / P^2 x_t.
inline std::vector<double> filter_derivative(const ModelParams& p, std::span<const double> x, Coord wrt,
                                             double m0 = 0.0, double dm0 = 0.0) {
  if (wrt == Coord::sigma2)
    throw Error(Errc::unsupported_coordinate, "derivative filter is provided for f, b, a only");
  detail::check_series(x, 2);
  const StationaryQuantities s = stationary(p);
  const StationaryGradient d = stationary_gradient(p, wrt);
  const std::size_t n = x.size();
  std::vector<double> dm(n);
  double m_prev = m0;
  dm[0] = dm0;
  for (std::size_t t = 1; t < n; ++t) {
    dm[t] = s.a_coef * dm[t - 1] + d.d_a_coef * m_prev + d.d_gain * x[t];
    m_prev = stationary_step(s, m_prev, x[t]);
  }
  return dm;
}

/// Stationary filter plus derivative tracks for each coordinate in `coords`.
inline FilterTrace filter_with_derivatives(const ModelParams& p, std::span<const double> x,
                                           std::span<const Coord> coords, double m0 = 0.0) {
  FilterTrace tr = filter_stationary(p, x, m0);
  for (Coord c : coords) tr.dm[c] = filter_derivative(p, x, c, m0, 0.0);
  return tr;
}

}  // namespace hidden_ar

#endif  // HIDDEN_AR_KALMAN_HPP
