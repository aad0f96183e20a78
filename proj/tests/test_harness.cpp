#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hidden_ar/harness.hpp"
#include "hidden_ar/io.hpp"
#include "hidden_ar/stats.hpp"

using namespace hidden_ar;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.params = {0.5, 1.0, 1.0, 1.0};
  c.problem.unknown = {Coord::b};
  c.problem.bounds = {{Coord::b, {0.5, 2.0}}};
  c.horizons = {600, 1200};
  c.replications = 12;
  c.checkpoints = {0.5, 1.0};
  c.seed = 99;
  c.estimators = {"mme", "onestep", "mle", "bayes", "adaptive"};
  c.mle_grid = 64;
  c.bayes_grid = 64;
  return c;
}

}  // namespace

TEST(Stats, Basics) {
  const std::vector<double> v{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(stats::mean(v), 2.5);
  EXPECT_DOUBLE_EQ(stats::variance(v), 5.0 / 3.0);
  EXPECT_TRUE(std::isnan(stats::variance(std::vector<double>{1.0})));
  EXPECT_NEAR(stats::normal_cdf(1.959963984540054), 0.975, 1e-15);
}

TEST(Stats, KolmogorovSmirnov) {
  // single point at 0: D = 1/2
  EXPECT_DOUBLE_EQ(stats::ks_statistic(std::vector<double>{0.0}), 0.5);
  // Known asymptotic quantiles of the Kolmogorov distribution.
  const std::size_t n = 100000000;
  const double sn = std::sqrt(static_cast<double>(n));
  EXPECT_NEAR(stats::ks_pvalue(1.3581 / sn, n), 0.05, 1e-3);
  EXPECT_NEAR(stats::ks_pvalue(1.6276 / sn, n), 0.01, 2e-4);
  EXPECT_EQ(stats::ks_pvalue(0.0, 10), 1.0);
  // shifted sample is rejected, scaled variance is honoured
  std::vector<double> z;
  for (int i = 1; i < 1000; ++i) z.push_back(normal_quantile(i / 1000.0));
  EXPECT_LT(stats::ks_statistic(z), 0.002);
  for (auto& x : z) x *= 2.0;
  EXPECT_LT(stats::ks_statistic(z, 4.0), 0.002);
  EXPECT_GT(stats::ks_statistic(z, 1.0), 0.1);
}

TEST(Harness, RejectsBadConfigs) {
  auto c = small_config();
  c.replications = 0;
  try {
    run_monte_carlo(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_config);
  }
  c = small_config();
  c.horizons.clear();
  EXPECT_THROW(run_monte_carlo(c), Error);
  c = small_config();
  c.checkpoints = {1.5};
  EXPECT_THROW(run_monte_carlo(c), Error);
  c = small_config();
  c.estimators = {"kalman"};
  EXPECT_THROW(run_monte_carlo(c), Error);
  c = small_config();
  c.checkpoints = {0.01};
  EXPECT_THROW(run_monte_carlo(c), Error);
  c = small_config();
  c.problem.bounds = {{Coord::b, {1.5, 2.0}}};
  EXPECT_THROW(run_monte_carlo(c), Error);
  EXPECT_THROW(config_from_json(nlohmann::json{{"replications", 0}}), Error);
  EXPECT_THROW(config_from_json(nlohmann::json{{"bogus", 1}}), Error);
}

TEST(Harness, DeterministicAcrossRunsAndThreads) {
  const auto c = small_config();
  const auto a = run_monte_carlo(c, 1);
  const auto b = run_monte_carlo(c, 1);
  const auto d = run_monte_carlo(c, 4);
  EXPECT_TRUE(a == b);
  EXPECT_TRUE(a == d);
  EXPECT_EQ(to_json(a).dump(), to_json(d).dump());
}

TEST(Harness, CellsAndRows) {
  const auto c = small_config();
  const auto r = run_monte_carlo(c);
  // 4 parameter estimators + adaptive (2 cells) per horizon and checkpoint
  EXPECT_EQ(r.cells.size(), 6u * 2u * 2u);
  EXPECT_EQ(r.rows.size(), 5u * 2u * 2u * 12u);
  const McCell* cell = r.find("onestep", 1200, 1.0);
  ASSERT_NE(cell, nullptr);
  EXPECT_EQ(cell->n, 12u);
  EXPECT_EQ(cell->failures, 0u);
  EXPECT_EQ(cell->t, 1200u);
  EXPECT_NEAR(cell->target, 1.0 / 0.549569, 1e-5);
  EXPECT_NEAR(cell->ratio, 1200 * cell->var / cell->target, 1e-12);
  ASSERT_NE(r.find("adaptive_state", 600, 0.5), nullptr);
  for (const auto& row : r.rows) EXPECT_EQ(row.stream, replication_stream(row.horizon == 600 ? 0 : 1, row.replication));
}

TEST(Harness, SingleReplicationReproducesItsRows) {
  const auto c = validate_config(small_config());
  const auto r = run_monte_carlo(c, 2);
  const auto rows = run_replication(c, 1, 7);
  std::size_t matched = 0;
  for (const auto& row : r.rows)
    if (row.horizon == 1200 && row.replication == 7) {
      const auto& iso = rows.at(matched++);
      EXPECT_EQ(iso.estimator, row.estimator);
      EXPECT_EQ(iso.values, row.values);
      EXPECT_EQ(iso.stream, row.stream);
    }
  EXPECT_EQ(matched, rows.size());
}

TEST(Harness, JsonRoundTrip) {
  const auto r = run_monte_carlo(small_config());
  const auto back = report_from_json(nlohmann::json::parse(to_json(r).dump()));
  EXPECT_TRUE(back == r);
  const auto cfg = config_from_json(to_json(r.config));
  EXPECT_EQ(to_json(cfg), to_json(r.config));
}

TEST(Harness, CsvSchema) {
  auto c = small_config();
  const auto r = run_monte_carlo(c);
  std::ostringstream os;
  write_report_csv(os, r);
  std::istringstream is(os.str());
  std::string header;
  std::getline(is, header);
  EXPECT_EQ(header, "estimator,T,v,mean,var,norm_risk,target,ratio,ks");
  c.estimators.clear();
  std::ostringstream empty;
  write_report_csv(empty, run_monte_carlo(c));
  EXPECT_EQ(empty.str(), "estimator,T,v,mean,var,norm_risk,target,ratio,ks\n");
}

TEST(Harness, ExportWritesFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "hidden_ar_export_test";
  std::filesystem::remove_all(dir);
  auto c = small_config();
  c.estimators = {"onestep"};
  export_report(run_monte_carlo(c), dir);
  for (const char* f : {"report.csv", "report.json", "replications.csv"}) EXPECT_TRUE(std::filesystem::exists(dir / f));
  std::ifstream in(dir / "report.json");
  EXPECT_NO_THROW(report_from_json(nlohmann::json::parse(in)));
  std::filesystem::remove_all(dir);
  EXPECT_THROW(export_report(run_monte_carlo(c), "/proc/hidden_ar_no_such_dir"), Error);
}

TEST(Io, ShortestRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5e17, 123456789.0}) {
    const std::string s = io::format_double(v);
    EXPECT_EQ(std::stod(s), v);
  }
  EXPECT_EQ(io::format_double(0.1), "0.1");
}

TEST(Io, TraceCsvAndSeriesReader) {
  const auto tr = simulate({0.5, 1, 1, 1}, 20, 1);
  std::stringstream ss;
  io::write_trajectory(ss, tr);
  EXPECT_EQ(io::read_series(ss), tr.x);

  std::stringstream bare("1.5\n2\n-3e-2\n");
  EXPECT_EQ(io::read_series(bare), (std::vector<double>{1.5, 2.0, -0.03}));
  std::stringstream broken("t,x\n0,1\n1,abc\n");
  EXPECT_THROW(io::read_series(broken), Error);

  const auto f = filter_with_derivatives(tr.params, tr.x, std::vector<Coord>{Coord::b});
  std::stringstream fs;
  io::write_filter_trace(fs, tr.x, f);
  std::string header;
  std::getline(fs, header);
  EXPECT_EQ(header, "t,x,m,gamma,innovation,dm_b");
}
