// hidden-ar: command-line front end for simulation, filtering, estimation and
// Monte Carlo experiments.
//
// Exit codes: 0 success, 2 invalid input or configuration, 1 runtime failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hidden_ar/hidden_ar.hpp"

namespace ha = hidden_ar;
using nlohmann::json;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned threads = 1;

  std::optional<double> a, b, f, sigma2;
  std::optional<std::size_t> horizon;
  std::optional<double> delta;
  std::string unknown;
  std::vector<std::string> bounds;
  std::string input;
  std::string column = "x";

  // filter
  bool transient = false;
  // mle / bayes
  std::optional<std::size_t> mle_grid;
  std::optional<std::size_t> bayes_grid;
  // montecarlo
  std::optional<std::size_t> replications;
  std::vector<std::size_t> horizons;
  std::vector<double> checkpoints;
  std::vector<std::string> estimators;
};

[[noreturn]] void invalid(const std::string& msg) { throw ha::Error(ha::Errc::invalid_config, msg); }

std::vector<ha::Coord> parse_unknown(const std::string& s) {
  std::vector<ha::Coord> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const std::size_t end = std::min(s.find(',', start), s.size());
    const std::string tok = s.substr(start, end - start);
    if (!tok.empty()) {
      const auto c = ha::parse_coord(tok);
      if (!c) invalid("unknown coordinate '" + tok + "'");
      out.push_back(*c);
    }
    start = end + 1;
  }
  return out;
}

// "b=0.5:2" -> (b, [0.5, 2])
std::pair<ha::Coord, ha::Interval> parse_bound(const std::string& s) {
  const auto eq = s.find('=');
  const auto colon = s.find(':', eq == std::string::npos ? 0 : eq);
  if (eq == std::string::npos || colon == std::string::npos) invalid("bounds must look like coord=lo:hi, got '" + s + "'");
  const auto c = ha::parse_coord(s.substr(0, eq));
  if (!c) invalid("unknown coordinate in bounds '" + s + "'");
  try {
    std::size_t n1 = 0, n2 = 0;
    const std::string lo = s.substr(eq + 1, colon - eq - 1), hi = s.substr(colon + 1);
    const double l = std::stod(lo, &n1), h = std::stod(hi, &n2);
    if (n1 != lo.size() || n2 != hi.size()) throw std::invalid_argument("trailing characters");
    return {*c, {l, h}};
  } catch (const std::logic_error&) {
    invalid("cannot parse bounds '" + s + "'");
  }
}

/// Configuration assembled from --config (if any) overridden by inline flags.
ha::ExperimentConfig assemble(const Options& o) {
  ha::ExperimentConfig c;
  c.params = {0.5, 1.0, 1.0, 1.0};
  if (!o.config.empty()) c = ha::load_config(o.config);
  if (o.a) c.params.a = *o.a;
  if (o.b) c.params.b = *o.b;
  if (o.f) c.params.f = *o.f;
  if (o.sigma2) c.params.sigma2 = *o.sigma2;
  if (!o.unknown.empty()) c.problem.unknown = parse_unknown(o.unknown);
  for (const auto& s : o.bounds) {
    const auto [coord, iv] = parse_bound(s);
    c.problem.bounds[coord] = iv;
  }
  if (o.delta) c.delta = *o.delta;
  if (o.seed) c.seed = *o.seed;
  if (o.horizon) c.horizons = {*o.horizon};
  if (!o.horizons.empty()) c.horizons = o.horizons;
  if (o.replications) c.replications = *o.replications;
  if (!o.checkpoints.empty()) c.checkpoints = o.checkpoints;
  if (!o.estimators.empty()) c.estimators = o.estimators;
  if (!o.out.empty()) c.outputs = o.out;
  if (o.mle_grid) c.mle_grid = *o.mle_grid;
  if (o.bayes_grid) c.bayes_grid = *o.bayes_grid;
  c.problem.known = c.params;
  ha::check_a0(c.params);
  return c;
}

ha::ParamProblem problem_of(const ha::ExperimentConfig& c) {
  if (c.problem.unknown.empty()) invalid("no unknown coordinates given (use --unknown)");
  return ha::validate(c.params, c.problem);
}

std::size_t horizon_of(const ha::ExperimentConfig& c) {
  if (c.horizons.empty()) invalid("no horizon given (use --T)");
  return c.horizons.front();
}

/// Observations from --input, or simulated from the configured parameters.
ha::Trajectory observations(const Options& o, const ha::ExperimentConfig& c) {
  if (!o.input.empty()) {
    ha::Trajectory tr;
    tr.x = ha::io::read_series_file(o.input, o.column);
    tr.params = c.params;
    return tr;
  }
  return ha::simulate(c.params, horizon_of(c), c.seed, true);
}

/// Writes CSV to --out, or to stdout when no file is given.
template <class Fn>
void emit_csv(const Options& o, Fn&& write) {
  if (o.out.empty()) {
    write(std::cout);
  } else {
    auto f = ha::io::open_output(o.out);
    write(f);
    if (!f) throw ha::Error(ha::Errc::io_error, "write failed: " + o.out);
  }
}

json values_json(const ha::ParamProblem& pr, std::span<const double> v) {
  json j = json::object();
  for (std::size_t i = 0; i < pr.dim(); ++i) j[std::string(ha::name(pr.unknown[i]))] = v[i];
  return j;
}

const char* clip_name(ha::ClipEvent e) {
  switch (e) {
    case ha::ClipEvent::low: return "low";
    case ha::ClipEvent::high: return "high";
    default: return "interior";
  }
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

// ---------------------------------------------------------------------------

void cmd_simulate(const Options& o) {
  const auto c = assemble(o);
  const auto tr = ha::simulate(c.params, horizon_of(c), c.seed, true);
  emit_csv(o, [&](std::ostream& os) { ha::io::write_trajectory(os, tr); });
}

void cmd_filter(const Options& o) {
  const auto c = assemble(o);
  const auto tr = observations(o, c);
  ha::FilterTrace ft = o.transient ? ha::filter_transient(c.params, tr.x) : ha::filter_stationary(c.params, tr.x);
  for (ha::Coord coord : c.problem.unknown) ft.dm[coord] = ha::filter_derivative(c.params, tr.x, coord);
  emit_csv(o, [&](std::ostream& os) { ha::io::write_filter_trace(os, tr.x, ft); });
}

void cmd_mme(const Options& o) {
  const auto c = assemble(o);
  const auto pr = problem_of(c);
  const auto r = ha::mme(observations(o, c).x, pr);
  json clip = json::array();
  for (auto e : r.clip) clip.push_back(clip_name(e));
  json j{{"estimator", "mme"},
         {"values", values_json(pr, r.values)},
         {"clip", clip},
         {"degenerate", r.degenerate},
         {"S", {r.stats.s1, r.stats.s2, r.stats.s3}}};
  if (r.degenerate) j["note"] = r.degenerate_note;
  print(j);
}

void cmd_onestep(const Options& o) {
  const auto c = assemble(o);
  const auto pr = problem_of(c);
  const auto x = observations(o, c).x;
  const auto tr = ha::one_step(x, pr, c.delta);
  if (!o.out.empty()) emit_csv(o, [&](std::ostream& os) { ha::io::write_estimator_trace(os, tr); });
  print({{"estimator", "onestep"},
         {"tau", tr.tau},
         {"preliminary", values_json(pr, tr.prelim)},
         {"values", values_json(pr, tr.values_at(tr.horizon))},
         {"clipped_final", tr.clipped_at(tr.horizon)}});
}

void cmd_mle(const Options& o) {
  const auto c = assemble(o);
  const auto pr = problem_of(c);
  ha::MleOptions opt;
  opt.grid_points = c.mle_grid;
  const auto r = ha::mle(observations(o, c).x, pr, opt);
  print({{"estimator", "mle"},
         {"values", values_json(pr, r.values)},
         {"loglik", r.loglik},
         {"flat", r.flat},
         {"evaluations", r.evaluations}});
}

void cmd_bayes(const Options& o) {
  const auto c = assemble(o);
  const auto pr = problem_of(c);
  ha::PosteriorSpec spec;
  spec.grid_size = c.bayes_grid;
  const auto r = ha::bayes(observations(o, c).x, pr, spec);
  print({{"estimator", "bayes"}, {"values", values_json(pr, r.values)}, {"log_max", r.log_max}});
}

void cmd_adaptive(const Options& o) {
  const auto c = assemble(o);
  const auto pr = problem_of(c);
  const auto tr = observations(o, c);
  auto ad = ha::adaptive_filter(tr.x, pr, c.delta);
  json j{{"estimator", "adaptive"}, {"tau", ad.tau}, {"m_star_final", ad.at(ad.horizon())}};
  if (o.input.empty()) {
    // Simulated data: the oracle filter at the true parameters is available.
    ad.oracle_m = ha::filter_stationary(c.params, tr.x).m;
    const auto rep = ha::error_report(ad, ad.oracle_m, c.checkpoints, c.params);
    json cps = json::array();
    for (const auto& e : rep) cps.push_back({{"v", e.v}, {"t", e.t}, {"filter_error", e.filter_error}});
    j["checkpoints"] = cps;
  }
  if (!o.out.empty()) emit_csv(o, [&](std::ostream& os) { ha::io::write_adaptive_trace(os, tr.x, ad); });
  print(j);
}

void cmd_montecarlo(const Options& o) {
  const auto c = ha::validate_config(assemble(o));
  const auto report = ha::run_monte_carlo(c, o.threads);
  ha::export_report(report, c.outputs);
  std::printf("%-18s %8s %5s %12s %12s %10s %8s\n", "estimator", "T", "v", "norm_risk", "target", "ratio", "ks");
  for (const auto& cell : report.cells)
    std::printf("%-18s %8zu %5.2f %12.6g %12.6g %10.4f %8.4f\n", cell.estimator.c_str(), cell.horizon, cell.v,
                cell.norm_risk, cell.target, cell.ratio, cell.ks);
  std::printf("wrote %s/{report.csv,replications.csv,report.json}\n", c.outputs.c_str());
}

void add_model_flags(CLI::App* sub, Options& o) {
  sub->add_option("--a", o.a, "AR coefficient of the hidden state");
  sub->add_option("--b", o.b, "state noise scale");
  sub->add_option("--f", o.f, "observation loading");
  sub->add_option("--sigma2", o.sigma2, "observation noise variance");
  sub->add_option("--T", o.horizon, "horizon for simulated data");
}

void add_estimation_flags(CLI::App* sub, Options& o) {
  add_model_flags(sub, o);
  sub->add_option("--unknown", o.unknown, "comma-separated unknown coordinates, e.g. b or f,a");
  sub->add_option("--bounds", o.bounds, "parameter box, e.g. --bounds b=0.5:2 (repeatable)");
  sub->add_option("--delta", o.delta, "learning-interval exponent in (0, 1)");
  sub->add_option("--input", o.input, "CSV file with an observation column");
  sub->add_option("--column", o.column, "column name in --input")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Estimation and adaptive filtering for a partially observed AR(1) model"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "JSON experiment configuration");
  app.add_option("--seed", o.seed, "random seed");
  app.add_option("--out", o.out, "output file (output directory for montecarlo)");
  app.add_option("--threads", o.threads, "worker threads for montecarlo, 0 = all cores")->capture_default_str();

  auto* simulate = app.add_subcommand("simulate", "simulate a trajectory, CSV columns t,x,y");
  add_model_flags(simulate, o);

  auto* filter = app.add_subcommand("filter", "Kalman filter at the given parameters");
  add_estimation_flags(filter, o);
  filter->add_flag("--transient", o.transient, "start the Riccati recursion from gamma_0 = 0");

  auto* mme = app.add_subcommand("mme", "method-of-moments estimate");
  add_estimation_flags(mme, o);
  auto* onestep = app.add_subcommand("onestep", "one-step estimator process");
  add_estimation_flags(onestep, o);
  auto* mle = app.add_subcommand("mle", "maximum likelihood estimate");
  add_estimation_flags(mle, o);
  mle->add_option("--grid", o.mle_grid, "grid points per coordinate (default 256)");
  auto* bayes = app.add_subcommand("bayes", "posterior mean under a uniform prior");
  add_estimation_flags(bayes, o);
  bayes->add_option("--grid", o.bayes_grid, "quadrature nodes per coordinate (default 512)");
  auto* adaptive = app.add_subcommand("adaptive", "adaptive Kalman filter");
  add_estimation_flags(adaptive, o);
  adaptive->add_option("--checkpoints", o.checkpoints, "fractions v of T for the error report");

  auto* mc = app.add_subcommand("montecarlo", "Monte Carlo experiment");
  add_estimation_flags(mc, o);
  mc->add_option("--replications", o.replications, "replications per horizon");
  mc->add_option("--horizons", o.horizons, "horizons T");
  mc->add_option("--checkpoints", o.checkpoints, "fractions v of T");
  mc->add_option("--estimators", o.estimators, "subset of mme, onestep, mle, bayes, adaptive");
  mc->add_option("--mle-grid", o.mle_grid, "MLE grid points");
  mc->add_option("--bayes-grid", o.bayes_grid, "Bayes quadrature nodes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  const std::map<CLI::App*, void (*)(const Options&)> commands{
      {simulate, cmd_simulate}, {filter, cmd_filter}, {mme, cmd_mme},     {onestep, cmd_onestep},
      {mle, cmd_mle},           {bayes, cmd_bayes},   {adaptive, cmd_adaptive}, {mc, cmd_montecarlo}};
  try {
    for (const auto& [sub, fn] : commands)
      if (sub->parsed()) fn(o);
  } catch (const ha::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.validation() ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
