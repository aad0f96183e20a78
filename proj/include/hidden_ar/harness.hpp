#ifndef HIDDEN_AR_HARNESS_HPP
#define HIDDEN_AR_HARNESS_HPP

/** @file
 * Monte Carlo experiments: configuration, per-replication runs on independent
 * random streams, deterministic aggregation into a report, and CSV/JSON export.
 */

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "hidden_ar/adaptive.hpp"
#include "hidden_ar/error.hpp"
#include "hidden_ar/io.hpp"
#include "hidden_ar/kalman.hpp"
#include "hidden_ar/likelihood.hpp"
#include "hidden_ar/model.hpp"
#include "hidden_ar/moments.hpp"
#include "hidden_ar/onestep.hpp"
#include "hidden_ar/simulator.hpp"
#include "hidden_ar/stats.hpp"

namespace hidden_ar {

inline const std::vector<std::string>& known_estimators() {
  static const std::vector<std::string> names{"mme", "onestep", "mle", "bayes", "adaptive"};
  return names;
}

struct ExperimentConfig {
  ModelParams params;  ///< truth; also the known values of the problem
  ParamProblem problem;
  std::vector<std::size_t> horizons;
  std::size_t replications = 0;
  double delta = default_delta;
  std::vector<double> checkpoints{1.0};
  std::uint64_t seed = 1;
  std::string outputs = "out";
  std::vector<std::string> estimators{"onestep"};
  std::size_t mle_grid = 256;
  std::size_t bayes_grid = 512;

  bool uses(const std::string& e) const { return std::find(estimators.begin(), estimators.end(), e) != estimators.end(); }
};

/// Derived stream id of replication r at horizon index h.
inline std::uint64_t replication_stream(std::size_t horizon_index, std::size_t r) {
  return (static_cast<std::uint64_t>(horizon_index) << 32) | static_cast<std::uint64_t>(r);
}

inline std::size_t checkpoint_time(double v, std::size_t horizon) {
  return static_cast<std::size_t>(std::floor(v * static_cast<double>(horizon)));
}

/// Checks the configuration and returns it with a canonicalized problem.
inline ExperimentConfig validate_config(ExperimentConfig c) {
  auto bad = [](const std::string& m) { throw Error(Errc::invalid_config, m); };
  if (c.replications < 1) bad("replications must be at least 1");
  if (c.horizons.empty()) bad("horizons must not be empty");
  if (c.checkpoints.empty()) bad("checkpoints must not be empty");
  for (double v : c.checkpoints)
    if (!(v > 0.0 && v <= 1.0)) bad("checkpoints must lie in (0, 1]");
  for (const auto& e : c.estimators)
    if (std::find(known_estimators().begin(), known_estimators().end(), e) == known_estimators().end())
      bad("unknown estimator '" + e + "'");
  c.problem.known = c.params;
  c.problem = validate(c.params, c.problem);
  for (Coord u : c.problem.unknown) {
    const Interval& iv = c.problem.bound(u);
    if (!(c.params.get(u) > iv.lo && c.params.get(u) < iv.hi)) bad("true " + std::string(name(u)) + " outside its bounds");
  }

  const UnknownSet set = classify(c.problem.unknown);
  const bool stepwise = c.uses("onestep") || c.uses("adaptive");
  if (stepwise && !(set == UnknownSet::b || set == UnknownSet::f || set == UnknownSet::a || set == UnknownSet::fa))
    throw Error(Errc::unsupported_set, "onestep/adaptive support {b}, {f}, {a}, {f,a}");
  if ((c.uses("mle") || c.uses("bayes")) && c.problem.dim() > 2)
    throw Error(Errc::unsupported_set, "mle/bayes support one or two unknowns");
  if (c.uses("bayes") && c.bayes_grid < 64) bad("bayes_grid must be at least 64");

  for (std::size_t T : c.horizons) {
    if (T == 0) throw Error(Errc::zero_horizon, "horizon T must be at least 1");
    const std::size_t tau = stepwise ? learning_interval(T, c.delta) : 0;
    for (double v : c.checkpoints) {
      const std::size_t t = checkpoint_time(v, T);
      if (stepwise && t < tau + 2)
        bad("checkpoint v=" + io::format_double(v) + " gives t=" + std::to_string(t) + " before the estimator path at T=" +
            std::to_string(T));
      if (t < 3) bad("checkpoint v=" + io::format_double(v) + " leaves fewer than 4 observations");
    }
  }
  return c;
}

/// One output row of one replication: estimator values at one checkpoint.
/// Parameter estimators store the estimate per unknown coordinate; the
/// adaptive filter stores {m*_t - m_t(theta0), (m*_t - Y_t)^2}.
struct ReplicationRow {
  std::size_t horizon = 0;
  std::size_t replication = 0;
  std::uint64_t stream = 0;
  std::string estimator;
  double v = 0.0;
  std::size_t t = 0;
  std::vector<double> values;
  std::string error;  ///< empty on success

  bool ok() const noexcept { return error.empty(); }
};

/// Aggregated statistics of one estimator component at one horizon and checkpoint.
struct McCell {
  std::string estimator;
  std::size_t horizon = 0;
  double v = 0.0;
  std::size_t t = 0;
  double mean = 0.0;
  double var = 0.0;
  double norm_risk = 0.0;  ///< t * mean squared error
  double target = 0.0;
  double ratio = 0.0;
  double ks = 0.0;    ///< KS distance of sqrt(t)(value - truth) to N(0, target)
  double ks_p = 0.0;  ///< its asymptotic p-value
  std::size_t n = 0;
  std::size_t failures = 0;
};

struct McReport {
  ExperimentConfig config;
  std::vector<McCell> cells;
  std::vector<ReplicationRow> rows;

  const McCell* find(const std::string& estimator, std::size_t horizon, double v) const {
    for (const auto& c : cells)
      if (c.estimator == estimator && c.horizon == horizon && c.v == v) return &c;
    return nullptr;
  }
};

/// Runs every selected estimator on one simulated path. Estimator failures
/// are recorded in the rows rather than thrown.
inline std::vector<ReplicationRow> run_replication(const ExperimentConfig& cfg, std::size_t horizon_index,
                                                   std::size_t r) {
  const std::size_t T = cfg.horizons.at(horizon_index);
  const std::uint64_t stream = replication_stream(horizon_index, r);
  const Trajectory sim = simulate(cfg.params, T, cfg.seed, cfg.uses("adaptive"), stream);
  const std::span<const double> x(sim.x);

  std::vector<ReplicationRow> rows;
  auto emit = [&](const std::string& est, double v, std::size_t t, std::vector<double> vals, std::string err) {
    rows.push_back({T, r, stream, est, v, t, std::move(vals), std::move(err)});
  };
  auto per_checkpoint = [&](const std::string& est, auto&& fn) {
    for (double v : cfg.checkpoints) {
      const std::size_t t = checkpoint_time(v, T);
      try {
        emit(est, v, t, fn(t), {});
      } catch (const std::exception& e) {
        emit(est, v, t, {}, e.what());
      }
    }
  };

  for (const auto& est : cfg.estimators) {
    if (est == "mme") {
      per_checkpoint(est, [&](std::size_t t) { return mme(x.first(t + 1), cfg.problem).values; });
    } else if (est == "mle") {
      MleOptions opt;
      opt.grid_points = cfg.mle_grid;
      per_checkpoint(est, [&](std::size_t t) { return mle(x.first(t + 1), cfg.problem, opt).values; });
    } else if (est == "bayes") {
      PosteriorSpec spec;
      spec.grid_size = cfg.bayes_grid;
      per_checkpoint(est, [&](std::size_t t) { return bayes(x.first(t + 1), cfg.problem, spec).values; });
    } else if (est == "onestep" || est == "adaptive") {
      std::optional<EstimatorTrace> track;
      std::string err;
      try {
        track = one_step(x, cfg.problem, cfg.delta);
      } catch (const std::exception& e) {
        err = e.what();
      }
      if (!track) {
        for (double v : cfg.checkpoints) emit(est, v, checkpoint_time(v, T), {}, err);
        continue;
      }
      if (est == "onestep") {
        per_checkpoint(est, [&](std::size_t t) { return track->values_at(t); });
      } else {
        const AdaptiveTrace ad = adaptive_from_track(x, *track);
        const FilterTrace oracle = filter_stationary(cfg.params, x);
        per_checkpoint(est, [&](std::size_t t) {
          const double e = ad.at(t) - oracle.m[t];
          const double s = ad.at(t) - sim.y[t];
          return std::vector<double>{e, s * s};
        });
      }
    }
  }
  return rows;
}

namespace detail {

inline double nan() { return std::numeric_limits<double>::quiet_NaN(); }

inline std::vector<double> inverse_targets(const ExperimentConfig& cfg) {
  std::vector<double> out(cfg.problem.dim(), nan());
  try {
    const FisherInfo fi = fisher_info(cfg.params, cfg.problem);
    const auto inv = fi.inverse();
    for (std::size_t i = 0; i < fi.dim; ++i) out[i] = inv[i * 2 + i];
  } catch (const Error&) {
    // no information formula for this unknown set
  }
  return out;
}

inline McCell summarize(std::string label, std::size_t T, double v, std::size_t t, std::span<const double> vals,
                        double truth, double target, std::size_t failures, bool ratio_from_var) {
  McCell c;
  c.estimator = std::move(label);
  c.horizon = T;
  c.v = v;
  c.t = t;
  c.n = vals.size();
  c.failures = failures;
  c.mean = stats::mean(vals);
  c.var = stats::variance(vals);
  const double dt = static_cast<double>(t);
  std::vector<double> z;
  double sq = 0.0;
  for (double x : vals) {
    sq += (x - truth) * (x - truth);
    z.push_back(std::sqrt(dt) * (x - truth));
  }
  c.norm_risk = vals.empty() ? nan() : dt * sq / static_cast<double>(vals.size());
  c.target = target;
  c.ratio = (ratio_from_var ? dt * c.var : c.norm_risk) / target;
  c.ks = std::isfinite(target) && target > 0.0 ? stats::ks_statistic(z, target) : nan();
  c.ks_p = std::isfinite(c.ks) ? stats::ks_pvalue(c.ks, z.size()) : nan();
  return c;
}

}  // namespace detail

/// Aggregates rows (in replication order) into report cells. One cell per
/// estimator component, horizon and checkpoint, in configuration order.
inline std::vector<McCell> aggregate(const ExperimentConfig& cfg, const std::vector<ReplicationRow>& rows) {
  std::vector<McCell> cells;
  const std::vector<double> inv = detail::inverse_targets(cfg);
  const std::size_t k = cfg.problem.dim();
  const StationaryQuantities s0 = stationary(cfg.params);
  double s_star = detail::nan();
  if (k == 1 && cfg.problem.unknown[0] != Coord::sigma2) s_star = s_star_limit(cfg.params, cfg.problem.unknown[0]);

  for (const auto& est : cfg.estimators)
    for (std::size_t T : cfg.horizons)
      for (double v : cfg.checkpoints) {
        const std::size_t t = checkpoint_time(v, T);
        std::vector<std::vector<double>> cols(est == "adaptive" ? 2 : k);
        std::size_t failures = 0;
        for (const auto& row : rows) {
          if (row.estimator != est || row.horizon != T || row.v != v) continue;
          if (!row.ok()) {
            ++failures;
            continue;
          }
          for (std::size_t i = 0; i < cols.size(); ++i) cols[i].push_back(row.values[i]);
        }
        if (est == "adaptive") {
          cells.push_back(detail::summarize(est, T, v, t, cols[0], 0.0, s_star, failures, false));
          McCell st = detail::summarize("adaptive_state", T, v, t, cols[1], 0.0, detail::nan(), failures, false);
          st.norm_risk = st.mean;
          st.target = s0.gamma_star + s_star / static_cast<double>(t);
          st.ratio = st.mean / st.target;
          cells.push_back(st);
          continue;
        }
        for (std::size_t i = 0; i < k; ++i) {
          const Coord c = cfg.problem.unknown[i];
          const std::string label = k == 1 ? est : est + "." + std::string(name(c));
          cells.push_back(detail::summarize(label, T, v, t, cols[i], cfg.params.get(c), inv[i], failures, true));
        }
      }
  return cells;
}

/// Runs all replications for all horizons. Results do not depend on `threads`
/// (0 means the hardware concurrency).
inline McReport run_monte_carlo(const ExperimentConfig& config, unsigned threads = 1) {
  McReport rep;
  rep.config = validate_config(config);
  const ExperimentConfig& cfg = rep.config;
  const std::size_t R = cfg.replications;
  const std::size_t jobs = cfg.horizons.size() * R;
  std::vector<std::vector<ReplicationRow>> out(jobs);
  std::vector<std::exception_ptr> errors(jobs);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t j = next++; j < jobs; j = next++) {
      try {
        out[j] = run_replication(cfg, j / R, j % R);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  const auto n_workers = static_cast<unsigned>(std::min<std::size_t>(threads, jobs));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < n_workers; ++i) pool.emplace_back(worker);
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (auto& rows : out)
    for (auto& row : rows) rep.rows.push_back(std::move(row));
  rep.cells = aggregate(cfg, rep.rows);
  return rep;
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace detail {

inline nlohmann::json num(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }
inline double num(const nlohmann::json& j) { return j.is_null() ? nan() : j.get<double>(); }

}  // namespace detail

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json bounds = nlohmann::json::object();
  for (const auto& [coord, iv] : c.problem.bounds) bounds[std::string(name(coord))] = {iv.lo, iv.hi};
  nlohmann::json unknown = nlohmann::json::array();
  for (Coord u : c.problem.unknown) unknown.push_back(std::string(name(u)));
  return {
      {"params", {{"a", c.params.a}, {"b", c.params.b}, {"f", c.params.f}, {"sigma2", c.params.sigma2}}},
      {"problem", {{"unknown", unknown}, {"bounds", bounds}}},
      {"horizons", c.horizons},
      {"replications", c.replications},
      {"delta", c.delta},
      {"checkpoints", c.checkpoints},
      {"seed", c.seed},
      {"outputs", c.outputs},
      {"estimators", c.estimators},
      {"mle_grid", c.mle_grid},
      {"bayes_grid", c.bayes_grid},
  };
}

/// Parses a configuration; absent fields keep their defaults, unknown keys are rejected.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    static const std::vector<std::string> keys{"params",     "problem", "horizons", "replications",
                                               "delta",      "checkpoints", "seed", "outputs",
                                               "estimators", "mle_grid", "bayes_grid"};
    for (const auto& [k, _] : j.items())
      if (std::find(keys.begin(), keys.end(), k) == keys.end())
        throw Error(Errc::invalid_config, "unknown config key '" + k + "'");
    if (j.contains("params")) {
      const auto& p = j.at("params");
      for (const auto& [k, v] : p.items()) {
        const auto coord = parse_coord(k);
        if (!coord) throw Error(Errc::invalid_config, "unknown parameter '" + k + "'");
        c.params.set(*coord, v.get<double>());
      }
    }
    if (j.contains("problem")) {
      const auto& p = j.at("problem");
      for (const auto& u : p.value("unknown", nlohmann::json::array())) {
        const auto coord = parse_coord(u.get<std::string>());
        if (!coord) throw Error(Errc::invalid_config, "unknown coordinate '" + u.get<std::string>() + "'");
        c.problem.unknown.push_back(*coord);
      }
      const nlohmann::json bounds = p.value("bounds", nlohmann::json::object());
      for (const auto& [k, v] : bounds.items()) {
        const auto coord = parse_coord(k);
        if (!coord) throw Error(Errc::invalid_config, "unknown coordinate '" + k + "' in bounds");
        if (!v.is_array() || v.size() != 2) throw Error(Errc::invalid_config, "bounds must be [lo, hi] pairs");
        c.problem.bounds[*coord] = {v[0].get<double>(), v[1].get<double>()};
      }
    }
    if (j.contains("horizons")) c.horizons = j.at("horizons").get<std::vector<std::size_t>>();
    if (j.contains("replications")) {
      const auto r = j.at("replications").get<std::int64_t>();
      if (r < 1) throw Error(Errc::invalid_config, "replications must be at least 1");
      c.replications = static_cast<std::size_t>(r);
    }
    c.delta = j.value("delta", c.delta);
    if (j.contains("checkpoints")) c.checkpoints = j.at("checkpoints").get<std::vector<double>>();
    c.seed = j.value("seed", c.seed);
    c.outputs = j.value("outputs", c.outputs);
    if (j.contains("estimators")) c.estimators = j.at("estimators").get<std::vector<std::string>>();
    c.mle_grid = j.value("mle_grid", c.mle_grid);
    c.bayes_grid = j.value("bayes_grid", c.bayes_grid);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_config, std::string("malformed config: ") + e.what());
  }
  c.problem.known = c.params;
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open config " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_config, path + ": " + e.what());
  }
  return config_from_json(j);
}

inline nlohmann::json to_json(const McReport& r) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : r.cells)
    cells.push_back({{"estimator", c.estimator}, {"T", c.horizon},       {"v", c.v},
                     {"t", c.t},                 {"mean", detail::num(c.mean)}, {"var", detail::num(c.var)},
                     {"norm_risk", detail::num(c.norm_risk)}, {"target", detail::num(c.target)},
                     {"ratio", detail::num(c.ratio)},         {"ks", detail::num(c.ks)},
                     {"ks_p", detail::num(c.ks_p)},           {"n", c.n},
                     {"failures", c.failures}});
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json vals = nlohmann::json::array();
    for (double v : row.values) vals.push_back(detail::num(v));
    rows.push_back({{"T", row.horizon}, {"replication", row.replication}, {"stream", row.stream},
                    {"estimator", row.estimator}, {"v", row.v}, {"t", row.t}, {"values", vals},
                    {"error", row.error}});
  }
  return {{"config", to_json(r.config)}, {"cells", cells}, {"replications", rows}};
}

inline McReport report_from_json(const nlohmann::json& j) {
  McReport r;
  try {
    r.config = validate_config(config_from_json(j.at("config")));
    for (const auto& c : j.at("cells")) {
      McCell m;
      m.estimator = c.at("estimator").get<std::string>();
      m.horizon = c.at("T").get<std::size_t>();
      m.v = c.at("v").get<double>();
      m.t = c.at("t").get<std::size_t>();
      m.mean = detail::num(c.at("mean"));
      m.var = detail::num(c.at("var"));
      m.norm_risk = detail::num(c.at("norm_risk"));
      m.target = detail::num(c.at("target"));
      m.ratio = detail::num(c.at("ratio"));
      m.ks = detail::num(c.at("ks"));
      m.ks_p = detail::num(c.at("ks_p"));
      m.n = c.at("n").get<std::size_t>();
      m.failures = c.at("failures").get<std::size_t>();
      r.cells.push_back(std::move(m));
    }
    for (const auto& row : j.at("replications")) {
      ReplicationRow x;
      x.horizon = row.at("T").get<std::size_t>();
      x.replication = row.at("replication").get<std::size_t>();
      x.stream = row.at("stream").get<std::uint64_t>();
      x.estimator = row.at("estimator").get<std::string>();
      x.v = row.at("v").get<double>();
      x.t = row.at("t").get<std::size_t>();
      for (const auto& v : row.at("values")) x.values.push_back(detail::num(v));
      x.error = row.at("error").get<std::string>();
      r.rows.push_back(std::move(x));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::invalid_config, std::string("malformed report: ") + e.what());
  }
  return r;
}

/// Reports compare equal when their JSON documents do (NaN equals NaN).
inline bool operator==(const McReport& a, const McReport& b) { return to_json(a) == to_json(b); }

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

inline void write_report_csv(std::ostream& os, const McReport& r) {
  using io::format_double;
  os << "estimator,T,v,mean,var,norm_risk,target,ratio,ks\n";
  for (const auto& c : r.cells)
    os << c.estimator << ',' << c.horizon << ',' << format_double(c.v) << ',' << format_double(c.mean) << ','
       << format_double(c.var) << ',' << format_double(c.norm_risk) << ',' << format_double(c.target) << ','
       << format_double(c.ratio) << ',' << format_double(c.ks) << '\n';
}

inline void write_replications_csv(std::ostream& os, const McReport& r) {
  std::size_t width = 0;
  for (const auto& row : r.rows) width = std::max(width, row.values.size());
  os << "T,replication,stream,estimator,v,t";
  for (std::size_t i = 0; i < width; ++i) os << ",value_" << i + 1;
  os << ",error\n";
  for (const auto& row : r.rows) {
    os << row.horizon << ',' << row.replication << ',' << row.stream << ',' << row.estimator << ','
       << io::format_double(row.v) << ',' << row.t;
    for (std::size_t i = 0; i < width; ++i) {
      os << ',';
      if (i < row.values.size()) os << io::format_double(row.values[i]);
    }
    std::string err = row.error;
    std::replace(err.begin(), err.end(), '"', '\'');
    os << ',' << (err.empty() ? "" : "\"" + err + "\"") << '\n';
  }
}

/// Writes report.csv, report.json and replications.csv into `dir`.
inline void export_report(const McReport& r, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::io_error, "cannot create " + dir.string() + ": " + ec.message());
  auto write = [&](const std::string& file, auto&& body) {
    const auto path = (dir / file).string();
    std::ofstream out = io::open_output(path);
    body(out);
    if (!out) throw Error(Errc::io_error, "write failed for " + path);
  };
  write("report.csv", [&](std::ostream& os) { write_report_csv(os, r); });
  write("replications.csv", [&](std::ostream& os) { write_replications_csv(os, r); });
  write("report.json", [&](std::ostream& os) { os << to_json(r).dump(2) << '\n'; });
}

}  // namespace hidden_ar

#endif  // HIDDEN_AR_HARNESS_HPP
