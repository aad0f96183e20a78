#include <gtest/gtest.h>

#include <random>

#include "hidden_ar/model.hpp"
#include "oracles.hpp"

using namespace hidden_ar;

namespace {

const ModelParams kRef{0.5, 1.0, 1.0, 1.0};

ParamProblem problem_for(const ModelParams& p, std::vector<Coord> unknown) {
  std::map<Coord, Interval> bounds;
  for (Coord c : unknown) {
    switch (c) {
      case Coord::a: bounds[c] = {-0.99, 0.99}; break;
      case Coord::b: bounds[c] = {0.01, 10.0}; break;
      case Coord::f: bounds[c] = p.f > 0 ? Interval{0.01, 10.0} : Interval{-10.0, -0.01}; break;
      case Coord::sigma2: bounds[c] = {0.01, 10.0}; break;
    }
  }
  return make_problem(p, std::move(unknown), std::move(bounds));
}

}  // namespace

TEST(Validate, AcceptsReferenceProblem) {
  EXPECT_NO_THROW(make_problem(kRef, {Coord::b}, {{Coord::b, {0.1, 5.0}}}));
}

TEST(Validate, RejectsForbiddenPair) {
  try {
    make_problem(kRef, {Coord::f, Coord::b}, {{Coord::f, {0.1, 2}}, {Coord::b, {0.1, 2}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::forbidden_pair);
  }
  try {
    make_problem(kRef, {Coord::f, Coord::b, Coord::sigma2}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::forbidden_pair);
  }
}

TEST(Validate, RejectsUnsupportedSets) {
  for (auto u : std::vector<std::vector<Coord>>{{}, {Coord::a, Coord::sigma2}, {Coord::b, Coord::a}, {Coord::a, Coord::a}}) {
    try {
      classify(u);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::unsupported_set);
    }
  }
}

TEST(Validate, BoundsOutsideA0NameTheCoordinate) {
  try {
    make_problem(kRef, {Coord::a}, {{Coord::a, {-1.2, 0.5}}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::condition_a0_violated);
    EXPECT_NE(std::string(e.what()).find("a bounds"), std::string::npos);
  }
  EXPECT_THROW(make_problem(kRef, {Coord::f}, {{Coord::f, {-0.5, 0.5}}}), Error);
  EXPECT_THROW(make_problem(kRef, {Coord::b}, {{Coord::b, {0.0, 0.5}}}), Error);
  EXPECT_THROW(make_problem(kRef, {Coord::b}, {{Coord::b, {2.0, 1.0}}}), Error);
  EXPECT_THROW(make_problem(kRef, {Coord::b}, {}), Error);
  EXPECT_THROW(check_a0({1.0, 1, 1, 1}), Error);
  EXPECT_THROW(check_a0({0.5, 1, 0.0, 1}), Error);
}

TEST(Validate, CanonicalOrderAndClip) {
  const auto pr = make_problem(kRef, {Coord::a, Coord::f}, {{Coord::a, {-0.9, 0.9}}, {Coord::f, {0.2, 3.0}}});
  ASSERT_EQ(pr.unknown, (std::vector<Coord>{Coord::f, Coord::a}));
  std::vector<double> v{5.0, -2.0};
  EXPECT_TRUE(pr.clip(v));
  EXPECT_EQ(v, (std::vector<double>{3.0, -0.9}));
}

TEST(Stationary, ZeroAGivesBSquared) {
  for (double b : {0.3, 1.0, 2.5}) {
    const ModelParams p{0.0, b, 1.7, 0.4};
    EXPECT_NEAR(stationary(p).gamma_star, b * b, 1e-14 * b * b);
  }
}

TEST(Stationary, ReferenceValues) {
  const auto s = stationary(kRef);
  EXPECT_NEAR(s.gamma_star, 1.1327822189, 1e-9);
  EXPECT_NEAR(s.p, 2.1327822189, 1e-9);
  EXPECT_NEAR(s.a_coef, 0.2344355629, 1e-9);
  EXPECT_NEAR(s.gamma_star, oracle::riccati_fixed_point(kRef), 1e-13);
}

TEST(Stationary, RandomPointsMatchIterationAndBounds) {
  std::mt19937_64 rng(20240611);
  for (int i = 0; i < 1000; ++i) {
    const ModelParams p = oracle::random_admissible(rng);
    const auto s = stationary(p);
    EXPECT_GT(s.gamma_star, 0.0);
    EXPECT_LT(std::abs(riccati_step(p, s.gamma_star) - s.gamma_star), 1e-12 * std::max(1.0, s.gamma_star));
    EXPECT_LT(stationary_residual(p, s.gamma_star), 1e-12);
    EXPECT_LT(std::abs(s.a_coef), 1.0);
    EXPECT_NEAR(s.a_coef + s.e_coef, p.a, 4e-16 * (1.0 + std::abs(p.a)));
    if (std::abs(p.a) < 0.9) {
      EXPECT_NEAR(s.gamma_star, oracle::riccati_fixed_point(p), 1e-9 * s.gamma_star);
    }
  }
}

TEST(Gradient, ZeroAForB) {
  const ModelParams p{0.0, 1.3, 0.8, 0.7};
  const auto d = stationary_gradient(p, Coord::b);
  EXPECT_NEAR(d.d_gamma_star, 2 * 1.3, 1e-12);
  EXPECT_NEAR(d.d_p, 2 * 0.64 * 1.3, 1e-12);
}

TEST(Gradient, ReferenceB) {
  EXPECT_NEAR(stationary_gradient(kRef, Coord::b).d_gamma_star, 2.116313, 1e-6);
  const double fd = oracle::central_diff([](const ModelParams& q) { return oracle::riccati_fixed_point(q); }, kRef,
                                         Coord::b);
  EXPECT_NEAR(stationary_gradient(kRef, Coord::b).d_gamma_star, fd, 1e-6);
}

TEST(Gradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 100; ++i) {
    const ModelParams p = oracle::random_admissible(rng);
    const auto s0 = stationary(p);
    for (Coord c : all_coords) {
      const auto d = stationary_gradient(p, c);
      auto fd = [&](auto field) {
        return oracle::central_diff([&](const ModelParams& q) { return field(stationary(q)); }, p, c);
      };
      EXPECT_LT(oracle::rel_error(d.d_gamma_star, fd([](auto s) { return s.gamma_star; })), 1e-5);
      EXPECT_LT(oracle::rel_error(d.d_p, fd([](auto s) { return s.p; })), 1e-5);
      EXPECT_LT(oracle::rel_error(d.d_a_coef, fd([](auto s) { return s.a_coef; })), 1e-5);
      EXPECT_LT(oracle::rel_error(d.d_gain, fd([](auto s) { return s.gain; })), 1e-5);
      const double sp = std::sqrt(s0.p);
      EXPECT_LT(oracle::rel_error(d.d_b_coef, sp * fd([](auto s) { return s.gain; })), 1e-5);
      EXPECT_LT(oracle::rel_error(d.d_b_obs, sp * fd([](auto s) { return s.e_coef; })), 1e-5);
      if (c == Coord::b) {
        EXPECT_GT(d.d_gamma_star, 0.0);
      }
    }
  }
}

TEST(Fisher, ZeroAForB) {
  const ModelParams p{0.0, 1.0, 1.0, 1.0};
  EXPECT_NEAR(fisher_info(p, problem_for(p, {Coord::b})).scalar(), 0.5, 1e-14);
}

TEST(Fisher, ReferenceB) {
  EXPECT_NEAR(fisher_info(kRef, problem_for(kRef, {Coord::b})).scalar(), 0.54956, 1e-5);
}

TEST(Fisher, LyapunovRouteAgreesWithClosedForm) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const ModelParams p = oracle::random_admissible(rng);
    for (Coord c : {Coord::b, Coord::f}) {
      const double closed = detail::closed_form_scalar_info(p, c);
      const double lyap = fisher_info_from_moments(p, std::vector<Coord>{c}).scalar();
      EXPECT_NEAR(lyap, closed, 1e-9 * closed) << "a=" << p.a << " coord=" << name(c);
    }
  }
}

TEST(Fisher, PairIsSymmetricPositiveDefinite) {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 200; ++i) {
    const ModelParams p = oracle::random_admissible(rng);
    const auto fi = fisher_info(p, problem_for(p, {Coord::f, Coord::a}));
    EXPECT_EQ(fi.dim, 2u);
    EXPECT_NEAR(fi(0, 1), fi(1, 0), 1e-12 * std::abs(fi(0, 1)) + 1e-300);
    EXPECT_GT(fi(0, 0), 0.0);
    EXPECT_GT(fi.determinant(), 0.0);
    const auto inv = fi.inverse();
    EXPECT_NEAR(fi(0, 0) * inv[0] + fi(0, 1) * inv[2], 1.0, 1e-9);
    EXPECT_NEAR(fi(1, 0) * inv[0] + fi(1, 1) * inv[2], 0.0, 1e-9 * (std::abs(fi(1, 0) * inv[0]) + 1));
  }
}

TEST(Fisher, UnsupportedSets) {
  try {
    fisher_info(kRef, problem_for(kRef, {Coord::sigma2}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unsupported_set);
  }
}
