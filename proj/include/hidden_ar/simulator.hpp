#ifndef HIDDEN_AR_SIMULATOR_HPP
#define HIDDEN_AR_SIMULATOR_HPP

#include <cmath>
#include <cstdint>
#include <ostream>
#include <vector>

#include "hidden_ar/error.hpp"
#include "hidden_ar/model.hpp"
#include "hidden_ar/random.hpp"

namespace hidden_ar {

/// Observations X_0..X_T and, optionally, hidden states Y_0..Y_T.
struct Trajectory {
  std::vector<double> x;
  std::vector<double> y;  // empty unless kept
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  ModelParams params;

  std::size_t horizon() const noexcept { return x.empty() ? 0 : x.size() - 1; }
  bool has_hidden() const noexcept { return !y.empty(); }
};

/// Simulates the stationary system. A pre-sample state Y_{-1} is drawn from
/// the stationary law, then X_0 = f Y_{-1} + sigma w_0 and Y_0 = a Y_{-1} + b v_0,
/// so (X_t) is a stationary observation sequence from t = 0.
/// Draw order per stream: Y_{-1}, then (w_t, v_t) for t = 0..T.
inline Trajectory simulate(const ModelParams& params, std::size_t horizon, std::uint64_t seed,
                           bool keep_hidden = true, std::uint64_t stream = 0) {
  check_a0(params);
  if (horizon == 0) throw Error(Errc::zero_horizon, "horizon T must be at least 1");

  Trajectory tr;
  tr.seed = seed;
  tr.stream = stream;
  tr.params = params;
  tr.x.resize(horizon + 1);
  if (keep_hidden) tr.y.resize(horizon + 1);

  RandomStream rng(seed, stream);
  const double sigma = params.sigma();
  double y_prev = params.b / std::sqrt(1.0 - params.a * params.a) * rng.normal();
  for (std::size_t t = 0; t <= horizon; ++t) {
    const double w = rng.normal();
    const double v = rng.normal();
    tr.x[t] = params.f * y_prev + sigma * w;
    y_prev = params.a * y_prev + params.b * v;
    if (keep_hidden) tr.y[t] = y_prev;
  }
  return tr;
}

}  // namespace hidden_ar

#endif  // HIDDEN_AR_SIMULATOR_HPP
