#include <gtest/gtest.h>

#include "hidden_ar/random.hpp"
#include "hidden_ar/simulator.hpp"
#include "hidden_ar/stats.hpp"

using namespace hidden_ar;

// Known-answer vectors of the Philox4x32-10 reference implementation.
TEST(Philox, KnownAnswers) {
  using C = Philox4x32::Counter;
  EXPECT_EQ(Philox4x32::block({0, 0, 0, 0}, {0, 0}), (C{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}));
  EXPECT_EQ(Philox4x32::block({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}),
            (C{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}));
  EXPECT_EQ(Philox4x32::block({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}),
            (C{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}));
}

TEST(NormalQuantile, InvertsTheCdf) {
  for (double p : {1e-12, 1e-6, 0.01, 0.2, 0.5, 0.7, 0.975, 1 - 1e-9}) {
    EXPECT_NEAR(stats::normal_cdf(normal_quantile(p)), p, 1e-14 + 1e-12 * p);
  }
  EXPECT_NEAR(normal_quantile(0.975), 1.959963984540054, 1e-14);
}

TEST(RandomStream, StreamsAreReproducibleAndDistinct) {
  RandomStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  for (int i = 0; i < 100; ++i) {
    const double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    EXPECT_NE(u, c.uniform());
    EXPECT_NE(u, d.uniform());
    EXPECT_GT(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(RandomStream, NormalMoments) {
  RandomStream r(1, 0);
  std::vector<double> z(200000);
  for (auto& v : z) v = r.normal();
  EXPECT_NEAR(stats::mean(z), 0.0, 4.0 / std::sqrt(z.size()));
  EXPECT_NEAR(stats::variance(z), 1.0, 4.0 * std::sqrt(2.0 / z.size()));
  EXPECT_GT(stats::ks_pvalue(stats::ks_statistic(z), z.size()), 1e-3);
}

TEST(Simulate, Errors) {
  EXPECT_THROW(simulate({0.5, 1, 1, 1}, 0, 1), Error);
  try {
    simulate({1.5, 1, 1, 1}, 10, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::condition_a0_violated);
  }
}

TEST(Simulate, DeterministicAndHiddenFlagIndependent) {
  const ModelParams p{0.5, 1, 1, 1};
  const auto a = simulate(p, 1000, 9);
  const auto b = simulate(p, 1000, 9);
  const auto c = simulate(p, 1000, 9, false);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.x, c.x);
  EXPECT_EQ(a.x.size(), 1001u);
  EXPECT_EQ(a.y.size(), 1001u);
  EXPECT_TRUE(c.y.empty());
  EXPECT_NE(simulate(p, 1000, 9, true, 1).x, a.x);
}

TEST(Simulate, ObservationEquationHolds) {
  // With sigma tiny, X_t is f * Y_{t-1}.
  const ModelParams p{0.3, 1.0, 2.0, 1e-20};
  const auto tr = simulate(p, 100, 3);
  for (std::size_t t = 1; t <= 100; ++t) EXPECT_NEAR(tr.x[t], 2.0 * tr.y[t - 1], 1e-8);
}

TEST(Simulate, WhiteAtZeroA) {
  const auto tr = simulate({0.0, 1, 1, 1}, 200000, 5, false);
  const double n = static_cast<double>(tr.x.size());
  EXPECT_LT(std::abs(stats::autocorrelation(tr.x, 1)), 3.0 / std::sqrt(n));
}

TEST(Simulate, StationaryMoments) {
  const ModelParams p{0.5, 1, 1, 1};
  const auto tr = simulate(p, 200000, 6);
  EXPECT_NEAR(stats::variance(tr.x), 7.0 / 3.0, 0.02 * 7.0 / 3.0);
  // Var Y = 4/3; the sample variance of an AR(1) has sd ~ sqrt(2 (1+a^2)/(1-a^2) / n) Var Y.
  const double n = static_cast<double>(tr.y.size());
  EXPECT_NEAR(stats::variance(tr.y), 4.0 / 3.0, 3.0 * std::sqrt(2.0 * 1.25 / 0.75 / n) * 4.0 / 3.0);
  // Cov(X_t, X_{t+k}) = f^2 a^k b^2 / (1 - a^2) for k >= 1.
  for (int k = 1; k <= 3; ++k) {
    std::vector<double> u(tr.x.begin(), tr.x.end() - k), v(tr.x.begin() + k, tr.x.end());
    EXPECT_NEAR(stats::covariance(u, v), std::pow(0.5, k) * 4.0 / 3.0, 0.03) << "lag " << k;
  }
}
