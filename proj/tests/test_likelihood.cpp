#include <gtest/gtest.h>

#include <numbers>

#include "hidden_ar/likelihood.hpp"
#include "hidden_ar/onestep.hpp"
#include "hidden_ar/simulator.hpp"
#include "hidden_ar/stats.hpp"
#include "oracles.hpp"

using namespace hidden_ar;

namespace {
const ModelParams kRef{0.5, 1.0, 1.0, 1.0};
ParamProblem b_problem() { return make_problem(kRef, {Coord::b}, {{Coord::b, {0.5, 2.0}}}); }
}  // namespace

TEST(LogLikelihood, SingleTerm) {
  const double P = stationary(kRef).p;
  const std::vector<double> x{0.3, 1.7};
  EXPECT_NEAR(log_likelihood(x, kRef), -0.5 * std::log(2 * std::numbers::pi * P) - 1.7 * 1.7 / (2 * P), 1e-14);
  EXPECT_THROW(log_likelihood(std::vector<double>{1.0}, kRef), Error);
  EXPECT_THROW(log_likelihood(x, ModelParams{1.0, 1, 1, 1}), Error);
}

TEST(LogLikelihood, NormalizedValueAtTruth) {
  const auto x = simulate(kRef, 100000, 2, false).x;
  const double P = stationary(kRef).p;
  EXPECT_NEAR(-2.0 / 1e5 * log_likelihood(x, kRef) - std::log(2 * std::numbers::pi * P), 1.0, 0.02);
}

TEST(LogLikelihood, SignOfFIsNotIdentified) {
  const ModelParams p{0.6, 0.8, 1.3, 0.5};
  const auto x = simulate(p, 1000, 3, false).x;
  EXPECT_EQ(log_likelihood(x, p), log_likelihood(x, p.with(Coord::f, -1.3)));
}

TEST(LogLikelihood, KullbackPositivity) {
  const auto pr = b_problem();
  for (double b : {0.7, 0.9, 1.1, 1.5}) {
    std::vector<double> lr;
    for (int r = 0; r < 200; ++r) {
      const auto x = simulate(kRef, 2000, 31, false, r).x;
      lr.push_back(log_likelihood(x, kRef) - log_likelihood(x, kRef.with(Coord::b, b)));
    }
    EXPECT_GE(stats::mean(lr) + 3 * std::sqrt(stats::variance(lr) / lr.size()), 0.0) << "b=" << b;
  }
}

TEST(Mle, MatchesBruteForceGrid) {
  const auto pr = b_problem();
  for (int r = 0; r < 5; ++r) {
    const auto x = simulate(kRef, 3000, 40, false, r).x;
    const auto res = mle(x, pr);
    EXPECT_FALSE(res.flat);
    const double brute = oracle::grid_argmax(
        [&](double b) { return log_likelihood(x, kRef.with(Coord::b, b)); }, 0.5, 2.0, 200001);
    EXPECT_NEAR(res.values[0], brute, 2e-5);
    // local maximum against its bracket neighbours
    EXPECT_GE(res.loglik, log_likelihood(x, kRef.with(Coord::b, res.bracket[0].lo)));
    EXPECT_GE(res.loglik, log_likelihood(x, kRef.with(Coord::b, res.bracket[0].hi)));
    EXPECT_LE(res.bracket[0].width(), 1e-8);
    EXPECT_EQ(res.loglik, log_likelihood(x, res.point));
  }
}

TEST(Mle, PairMaximizesLikelihood) {
  const auto pr = make_problem(kRef, {Coord::f, Coord::a}, {{Coord::f, {0.3, 3}}, {Coord::a, {-0.9, 0.9}}});
  const auto x = simulate(kRef, 5000, 41, false).x;
  MleOptions opt;
  opt.grid_points = 64;
  const auto res = mle(x, pr, opt);
  EXPECT_EQ(res.values.size(), 2u);
  // no better point in a small neighbourhood
  for (double df : {-1e-3, 0.0, 1e-3})
    for (double da : {-1e-3, 0.0, 1e-3}) {
      ModelParams q = res.point;
      q.f += df;
      q.a += da;
      EXPECT_LE(log_likelihood(x, q), res.loglik + 1e-9);
    }
}

TEST(Mle, BoundaryMaximumAndFlatFlag) {
  // Data with tiny signal put the b maximum at the lower bound.
  const ModelParams weak{0.5, 0.05, 1.0, 1.0};
  const auto x = simulate(weak, 2000, 5, false).x;
  const auto res = mle(x, b_problem());
  EXPECT_NEAR(res.values[0], 0.5, 1e-8);

  const auto tiny = make_problem(kRef, {Coord::b}, {{Coord::b, {1.0, 1.0 + 1e-13}}});
  const auto flat = mle(x, tiny);
  EXPECT_TRUE(flat.flat);
  EXPECT_EQ(flat.values[0], 1.0);  // ties resolve to the smallest coordinate
}

TEST(Mle, Errors) {
  const auto x = simulate(kRef, 100, 1, false).x;
  const auto triple = make_problem(kRef, {Coord::a, Coord::f, Coord::sigma2},
                                   {{Coord::a, {-0.9, 0.9}}, {Coord::f, {0.2, 3}}, {Coord::sigma2, {0.1, 3}}});
  EXPECT_THROW(mle(x, triple), Error);
  EXPECT_THROW(bayes(x, triple), Error);
}

TEST(Bayes, SymmetricPosteriorMeanIsCenter) {
  // With x = 0 the likelihood depends on a only through a^2.
  const std::vector<double> x(200, 0.0);
  const auto pr = make_problem(kRef, {Coord::a}, {{Coord::a, {-0.5, 0.5}}});
  EXPECT_NEAR(bayes(x, pr).values[0], 0.0, 1e-14);
  PosteriorSpec spec;
  spec.prior = piecewise_linear_prior({{-0.5, 1.0}, {0.0, 3.0}, {0.5, 1.0}});
  EXPECT_NEAR(bayes(x, pr, spec).values[0], 0.0, 1e-14);
}

TEST(Bayes, MatchesFineQuadratureAndIsGridStable) {
  const auto pr = b_problem();
  const auto x = simulate(kRef, 10000, 50, false).x;
  PosteriorSpec coarse;
  coarse.grid_size = 128;
  const double b128 = bayes(x, pr, coarse).values[0];
  const double b512 = bayes(x, pr).values[0];
  EXPECT_LT(std::abs(b128 - b512), 1e-4);

  // trapezoid rule with 20001 nodes, independent of the midpoint rule
  const std::size_t n = 20001;
  std::vector<double> ll(n);
  double mx = -INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    ll[i] = log_likelihood(x, kRef.with(Coord::b, 0.5 + 1.5 * i / (n - 1.0)));
    mx = std::max(mx, ll[i]);
  }
  double z = 0, m = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::exp(ll[i] - mx) * (i == 0 || i == n - 1 ? 0.5 : 1.0);
    z += w;
    m += w * (0.5 + 1.5 * i / (n - 1.0));
  }
  EXPECT_NEAR(b512, m / z, 1e-6);
  EXPECT_LT(std::abs(b512 - mle(x, pr).values[0]), 2e-4);
}

TEST(Bayes, InvalidPriorAndDegenerate) {
  const auto pr = b_problem();
  const auto x = simulate(kRef, 100, 1, false).x;
  PosteriorSpec spec;
  spec.prior = [](std::span<const double> v) { return v[0] < 1.0 ? 1.0 : 0.0; };
  try {
    bayes(x, pr, spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::invalid_prior);
  }
  EXPECT_THROW(piecewise_linear_prior({}), Error);
  EXPECT_THROW(piecewise_linear_prior({{1.0, -1.0}}), Error);
  PosteriorSpec small;
  small.grid_size = 32;
  EXPECT_THROW(bayes(x, pr, small), Error);

  std::vector<double> huge(50, 1e200);
  try {
    bayes(huge, pr);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::degenerate_posterior);
  }
}
