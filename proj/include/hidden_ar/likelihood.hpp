#ifndef HIDDEN_AR_LIKELIHOOD_HPP
#define HIDDEN_AR_LIKELIHOOD_HPP

/** @file
 * Gaussian log-likelihood through the stationary filter, maximum-likelihood
 * estimation by grid scan plus golden-section refinement, and the posterior
 * mean under a prior on the bounds box.
 */

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "hidden_ar/error.hpp"
#include "hidden_ar/kalman.hpp"
#include "hidden_ar/model.hpp"

namespace hidden_ar {

/// -(T/2) ln(2 pi P) - sum_t (x_t - f m_{t-1})^2 / (2 P), m from the stationary filter.
inline double log_likelihood(std::span<const double> x, const ModelParams& candidate, double m0 = 0.0) {
  detail::check_series(x, 2);
  const StationaryQuantities s = stationary(candidate);
  const std::size_t T = x.size() - 1;
  double m = m0;
  double sq = 0.0;
  for (std::size_t t = 1; t <= T; ++t) {
    const double e = x[t] - candidate.f * m;
    sq += e * e;
    m = stationary_step(s, m, x[t]);
  }
  return -0.5 * static_cast<double>(T) * std::log(2.0 * std::numbers::pi * s.p) - sq / (2.0 * s.p);
}

struct MleOptions {
  std::size_t grid_points = 256;  ///< per dimension
  double tol = 1e-8;              ///< final bracket width
  int max_sweeps = 60;            ///< coordinate sweeps in two dimensions
};

struct MleResult {
  std::vector<double> values;
  ModelParams point;
  double loglik = 0.0;
  bool flat = false;  ///< grid range of the log-likelihood below 1e-9
  std::vector<Interval> bracket;  ///< final bracket per coordinate
  std::size_t evaluations = 0;
};

namespace detail {

struct GoldenResult {
  double x;
  double value;
  double lo;
  double hi;
};

/// Golden-section maximization on [lo, hi]; the returned point is the best of
/// the final interior probes and both bracket ends.
template <class F>
GoldenResult golden_max(F&& fn, double lo, double hi, double tol, std::size_t& evals) {
  constexpr double inv_phi = 0.6180339887498948482;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = fn(c);
  double fd = fn(d);
  evals += 2;
  while (hi - lo > tol) {
    if (fc >= fd) {  // ties move toward the smaller coordinate
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = fn(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = fn(d);
    }
    ++evals;
  }
  const double flo = fn(lo);
  const double fhi = fn(hi);
  evals += 2;
  GoldenResult best{lo, flo, lo, hi};
  for (auto [x, v] : {std::pair{c, fc}, std::pair{d, fd}, std::pair{hi, fhi}})
    if (v > best.value) {
      best.x = x;
      best.value = v;
    }
  return best;
}

inline std::vector<double> grid_nodes(const Interval& iv, std::size_t n) {
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i)
    g[i] = n == 1 ? 0.5 * (iv.lo + iv.hi) : iv.lo + iv.width() * static_cast<double>(i) / static_cast<double>(n - 1);
  return g;
}

}  // namespace detail

/// Maximum-likelihood estimate over the closed bounds box ({1 or 2} unknowns).
inline MleResult mle(std::span<const double> x, const ParamProblem& problem_in, const MleOptions& opt = {}) {
  const ParamProblem problem = validate(problem_in.known, problem_in);
  const std::size_t k = problem.dim();
  if (k != 1 && k != 2) throw Error(Errc::unsupported_set, "MLE supports one or two unknowns");
  if (opt.grid_points < 3) throw Error(Errc::invalid_config, "MLE grid needs at least 3 points");
  detail::check_series(x, 2);

  MleResult res;
  std::vector<double> theta(k);
  auto loglik = [&](std::span<const double> v) {
    ++res.evaluations;
    return log_likelihood(x, problem.point(v));
  };

  std::vector<std::vector<double>> nodes;
  for (Coord c : problem.unknown) nodes.push_back(detail::grid_nodes(problem.bound(c), opt.grid_points));
  const std::size_t n = opt.grid_points;

  // Grid scan; strict improvement keeps the first (smallest) argmax.
  double best = -std::numeric_limits<double>::infinity();
  double worst = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> arg(k, 0);
  if (k == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      theta[0] = nodes[0][i];
      const double v = loglik(theta);
      worst = std::min(worst, v);
      if (v > best) {
        best = v;
        arg[0] = i;
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        theta[0] = nodes[0][i];
        theta[1] = nodes[1][j];
        const double v = loglik(theta);
        worst = std::min(worst, v);
        if (v > best) {
          best = v;
          arg = {i, j};
        }
      }
  }
  for (std::size_t i = 0; i < k; ++i) theta[i] = nodes[i][arg[i]];
  res.loglik = best;
  res.bracket.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& g = nodes[i];
    res.bracket[i] = {g[arg[i] == 0 ? 0 : arg[i] - 1], g[std::min(arg[i] + 1, n - 1)]};
  }

  if (best - worst < 1e-9) {
    res.flat = true;
  } else if (k == 1) {
    auto g = detail::golden_max([&](double v) { return log_likelihood(x, problem.point(std::span(&v, 1))); },
                                res.bracket[0].lo, res.bracket[0].hi, opt.tol, res.evaluations);
    theta[0] = g.x;
    res.loglik = g.value;
    res.bracket[0] = {g.lo, g.hi};
  } else {
    // Coordinate-wise golden sections inside shrinking brackets around the grid argmax.
    std::array<double, 2> half{0.5 * res.bracket[0].width(), 0.5 * res.bracket[1].width()};
    for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
      double moved = 0.0;
      for (std::size_t i = 0; i < 2; ++i) {
        const Interval& box = problem.bound(problem.unknown[i]);
        const double lo = std::max(box.lo, theta[i] - half[i]);
        const double hi = std::min(box.hi, theta[i] + half[i]);
        std::vector<double> probe = theta;
        auto g = detail::golden_max(
            [&](double v) {
              probe[i] = v;
              return log_likelihood(x, problem.point(probe));
            },
            lo, hi, opt.tol, res.evaluations);
        if (g.value >= res.loglik) {
          moved = std::max(moved, std::abs(g.x - theta[i]));
          theta[i] = g.x;
          res.loglik = g.value;
        }
        res.bracket[i] = {g.lo, g.hi};
        half[i] = std::max(2.0 * std::abs(g.x - theta[i]), 0.25 * half[i]);
      }
      if (moved < opt.tol && std::max(half[0], half[1]) < 1e3 * opt.tol) break;
    }
  }
  res.values = theta;
  res.point = problem.point(theta);
  return res;
}

// ---------------------------------------------------------------------------
// Bayes estimator
// ---------------------------------------------------------------------------

/// Prior density on the bounds box (unnormalized is fine) and quadrature size.
struct PosteriorSpec {
  std::function<double(std::span<const double>)> prior;  ///< empty: uniform
  std::size_t grid_size = 512;                            ///< midpoint nodes per dimension
};

/// Piecewise-linear prior through (theta, weight) nodes, constant beyond the end nodes.
inline std::function<double(std::span<const double>)> piecewise_linear_prior(
    std::vector<std::pair<double, double>> nodes) {
  if (nodes.empty()) throw Error(Errc::invalid_prior, "prior grid is empty");
  std::sort(nodes.begin(), nodes.end());
  for (const auto& [t, w] : nodes)
    if (!(w > 0.0) || !std::isfinite(w) || !std::isfinite(t))
      throw Error(Errc::invalid_prior, "prior weights must be positive and finite");
  return [nodes = std::move(nodes)](std::span<const double> v) {
    const double t = v[0];
    if (t <= nodes.front().first) return nodes.front().second;
    if (t >= nodes.back().first) return nodes.back().second;
    auto hi = std::upper_bound(nodes.begin(), nodes.end(), std::pair{t, std::numeric_limits<double>::max()});
    auto lo = hi - 1;
    const double u = (t - lo->first) / (hi->first - lo->first);
    return lo->second + u * (hi->second - lo->second);
  };
}

struct BayesResult {
  std::vector<double> values;  ///< posterior mean
  ModelParams point;
  double log_max = 0.0;  ///< largest log-likelihood on the grid
};

/// Posterior mean by midpoint quadrature over the box with log-sum-exp weights.
inline BayesResult bayes(std::span<const double> x, const ParamProblem& problem_in, const PosteriorSpec& spec = {}) {
  const ParamProblem problem = validate(problem_in.known, problem_in);
  const std::size_t k = problem.dim();
  if (k != 1 && k != 2) throw Error(Errc::unsupported_set, "Bayes estimator supports one or two unknowns");
  if (spec.grid_size < 64) throw Error(Errc::invalid_config, "Bayes grid_size must be at least 64");
  detail::check_series(x, 2);

  const std::size_t n = spec.grid_size;
  std::vector<std::vector<double>> nodes(k);
  for (std::size_t i = 0; i < k; ++i) {
    const Interval& iv = problem.bound(problem.unknown[i]);
    nodes[i].resize(n);
    for (std::size_t j = 0; j < n; ++j)
      nodes[i][j] = iv.lo + iv.width() * (static_cast<double>(j) + 0.5) / static_cast<double>(n);
  }

  const std::size_t total = k == 1 ? n : n * n;
  std::vector<double> logw(total);
  std::vector<double> theta(k);
  auto node = [&](std::size_t idx) {
    if (k == 1) {
      theta[0] = nodes[0][idx];
    } else {
      theta[0] = nodes[0][idx / n];
      theta[1] = nodes[1][idx % n];
    }
  };
  double log_max = -std::numeric_limits<double>::infinity();
  double ll_max = -std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < total; ++idx) {
    node(idx);
    const double pr = spec.prior ? spec.prior(theta) : 1.0;
    if (!(pr > 0.0) || !std::isfinite(pr)) throw Error(Errc::invalid_prior, "prior must be positive on the box");
    const double ll = log_likelihood(x, problem.point(theta));
    ll_max = std::max(ll_max, ll);
    logw[idx] = ll + std::log(pr);
    log_max = std::max(log_max, logw[idx]);
  }
  double z = 0.0;
  std::vector<double> acc(k, 0.0);
  for (std::size_t idx = 0; idx < total; ++idx) {
    node(idx);
    const double w = std::exp(logw[idx] - log_max);
    z += w;
    for (std::size_t i = 0; i < k; ++i) acc[i] += w * theta[i];
  }
  if (!(z > 0.0) || !std::isfinite(z))
    throw Error(Errc::degenerate_posterior, "posterior weights vanished or are not finite");

  BayesResult res;
  res.values.resize(k);
  for (std::size_t i = 0; i < k; ++i) res.values[i] = acc[i] / z;
  res.point = problem.point(res.values);
  res.log_max = ll_max;
  return res;
}

}  // namespace hidden_ar

#endif  // HIDDEN_AR_LIKELIHOOD_HPP
