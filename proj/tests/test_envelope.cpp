#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include <gtest/gtest.h>

#include "ldshape/corpus.hpp"
#include "ldshape/envelope.hpp"
#include "ldshape/measures.hpp"
#include "oracles.hpp"

namespace {

using ldshape::ConditioningData;
using ldshape::IntervalUnion;
using ldshape::PiecewisePoly;

TEST(TangentAbscissas, ThroughPointAbove) {
  const auto a = ldshape::tangent_abscissas(0.0, 1.0);
  EXPECT_DOUBLE_EQ(a.a_minus, -1.0);
  EXPECT_DOUBLE_EQ(a.a_plus, 1.0);
  const auto on = ldshape::tangent_abscissas(2.0, -4.0);
  EXPECT_DOUBLE_EQ(on.a_minus, 2.0);
  EXPECT_DOUBLE_EQ(on.a_plus, 2.0);
  EXPECT_THROW(ldshape::tangent_abscissas(0.0, -0.1), ldshape::InfeasibleError);
}

TEST(EBmFinite, SingleWedgeClosedForm) {
  for (double a : {-1.0, 0.0, 2.0})
    for (double b : {0.25, 1.0, 4.0}) {
      const auto s = ldshape::corpus::single_wedge(a, b);
      EXPECT_NEAR(s.value, 4.0 / 3.0 * std::pow(b, 1.5), 1e-12);
      const auto w = ldshape::wedge_profile(a, b, 1.0);
      for (int i = 0; i <= 100; ++i) {
        const double x = -6.0 + 12.0 * i / 100;
        EXPECT_NEAR(s.minimizer(x), w(x), 1e-12);
      }
    }
}

TEST(EBmFinite, TwoPointsOnParabolaGiveParabola) {
  const auto s = ldshape::e_bm_finite({{-1.0, -1.0}, {0.5, -0.25}});
  EXPECT_EQ(s.value, 0.0);
  for (double x : {-2.0, -1.0, 0.0, 0.5, 3.0}) EXPECT_NEAR(s.minimizer(x), -x * x, 1e-15);
}

TEST(EBmFinite, PointsAgreeWithDegenerateIntervals) {
  const std::vector<ldshape::Node> pts{{-1.0, 2.0}, {0.0, 1.0}, {1.0, 2.0}};
  const auto s = ldshape::e_bm_finite(pts);
  ConditioningData d;
  d.support = IntervalUnion::points({-1.0, 0.0, 1.0});
  d.profile = PiecewisePoly::unchecked({-0.5, 0.5}, {{2.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {2.0, 0.0, 0.0}});
  const auto e = ldshape::e_bm(d);
  ASSERT_TRUE(e.finite());
  EXPECT_EQ(e.value(), s.value);
}

TEST(EBmFinite, InputValidation) {
  EXPECT_THROW(ldshape::e_bm_finite({}), std::invalid_argument);
  EXPECT_THROW(ldshape::e_bm_finite({{1.0, 0.0}, {0.0, 0.0}}), std::invalid_argument);
  EXPECT_THROW(ldshape::e_bm_finite({{1.0, -2.0}}), ldshape::InfeasibleError);
}

TEST(EBm, LiftClosedForm) {
  // f = 1 - x^2 on [-1/2, 1/2] has energy 7/3.
  const auto d = ldshape::corpus::lift(0.5, 1.0);
  const auto e = ldshape::e_bm(d);
  ASSERT_TRUE(e.finite());
  EXPECT_NEAR(e.value(), 7.0 / 3.0, 1e-12);
  const auto f = ldshape::interpolate(d);
  EXPECT_NEAR(oracle::q_bm_square_form(f), 7.0 / 3.0, 1e-9);
}

TEST(EBm, InfiniteReasons) {
  ConditioningData empty;
  EXPECT_EQ(ldshape::e_bm(empty).reason(), ldshape::InfiniteReason::empty_support);
  EXPECT_FALSE(ldshape::e_bm(empty).finite());
  EXPECT_TRUE(std::isinf(ldshape::e_bm(empty).value()));

  ConditioningData below{IntervalUnion({{-0.5, 0.5}}), PiecewisePoly::parabola(1.0, 0.0, -0.1), {}};
  EXPECT_EQ(ldshape::e_bm(below).reason(), ldshape::InfiniteReason::infeasible);

  ConditioningData jump{IntervalUnion({{-1.0, 1.0}}),
                        PiecewisePoly::unchecked({0.0}, {{1.0, 0.0, 0.0}, {2.0, 0.0, 0.0}}), {}};
  EXPECT_EQ(ldshape::e_bm(jump).reason(), ldshape::InfiniteReason::discontinuous);
}

TEST(EBm, ParabolaOnSupportIsZero) {
  ConditioningData d{IntervalUnion({{-1.0, 1.0}}), PiecewisePoly::parabola(), {}};
  EXPECT_EQ(ldshape::e_bm(d).value(), 0.0);
}

TEST(EBm, ShiftedWedgeIsTranslationInvariant) {
  ConditioningData a{IntervalUnion({{-0.4, 0.3}}), PiecewisePoly::parabola(1.0, 0.0, 0.8), {}};
  ConditioningData b{IntervalUnion({{1.6, 2.3}}), PiecewisePoly::parabola(1.0, 2.0, 0.8 + 0.5), {2.0, 0.5}};
  EXPECT_NEAR(ldshape::e_bm(a).value(), ldshape::e_bm(b).value(), 1e-12);
}

// Profile -x^2 + g on [a, b] u [c, d] with g piecewise linear and positive.
ConditioningData random_data(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double a = -1.5 + u(rng), b = a + 0.3 + u(rng), c = b + 0.4 + u(rng), d = c + 0.2 + 0.5 * u(rng);
  std::vector<double> br{a, b, c, d};
  std::vector<double> g;
  for (std::size_t i = 0; i < br.size(); ++i) g.push_back(0.2 + 1.5 * u(rng));
  std::vector<PiecewisePoly::Coeffs> segs{{g[0], 0.0, -1.0}};
  for (std::size_t i = 0; i + 1 < br.size(); ++i) {
    const double m = (g[i + 1] - g[i]) / (br[i + 1] - br[i]);
    segs.push_back({g[i] - m * br[i], m, -1.0});
  }
  segs.push_back({g.back(), 0.0, -1.0});
  return {IntervalUnion({{a, b}, {c, d}}), PiecewisePoly(br, segs), {}};
}

TEST(InterpolateProperty, AgreesOnSupportAndDominatesParabola) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const auto d = random_data(rng);
    const auto f = ldshape::interpolate(d);
    for (const auto& iv : d.support.intervals())
      for (int i = 0; i <= 50; ++i) {
        const double x = iv.a + (iv.b - iv.a) * i / 50;
        EXPECT_NEAR(f(x), d.profile(x), 1e-12);
      }
    for (int i = 0; i <= 400; ++i) {
      const double x = -5.0 + 10.0 * i / 400;
      EXPECT_GE(f(x), -x * x - 1e-12);
    }
    EXPECT_TRUE(f.has_tails(PiecewisePoly::dirichlet()));
  }
}

TEST(InterpolateProperty, GapsMatchBruteForceHull) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = random_data(rng);
    const auto f = ldshape::interpolate(d);
    const auto& iv = d.support.intervals();
    // Concave majorant of the gap end points and the parabola sampled inside the gap.
    std::vector<std::pair<double, double>> gap{{iv[0].b, d.profile(iv[0].b)}, {iv[1].a, d.profile(iv[1].a)}};
    for (int i = 1; i < 10000; ++i) {
      const double x = iv[0].b + (iv[1].a - iv[0].b) * i / 10000;
      gap.push_back({x, -x * x});
    }
    const auto gh = oracle::upper_hull(gap);
    for (int i = 1; i < 200; ++i) {
      const double x = iv[0].b + (iv[1].a - iv[0].b) * i / 200;
      EXPECT_NEAR(f(x), oracle::hull_value(gh, x), 1e-6);
    }
    // Left tail: the first end point and the parabola on a wide window.
    std::vector<std::pair<double, double>> tail{{iv[0].a, d.profile(iv[0].a)}};
    for (int i = 1; i <= 10000; ++i) {
      const double x = iv[0].a - 6.0 * i / 10000;
      tail.push_back({x, -x * x});
    }
    const auto th = oracle::upper_hull(tail);
    for (int i = 1; i < 100; ++i) {
      const double x = iv[0].a - 3.0 * i / 100;
      EXPECT_NEAR(f(x), oracle::hull_value(th, x), 1e-6);
    }
  }
}

TEST(EBmFiniteProperty, LatticeRestrictionIsMonotoneAndConverges) {
  const auto d = ldshape::corpus::lift(0.5, 1.0);
  const double full = ldshape::e_bm(d).value();
  double prev = -1.0;
  for (int m : {1, 2, 4, 8, 16, 64}) {
    std::vector<ldshape::Node> pts;
    for (int k = -m; k <= m; ++k) {
      const double y = static_cast<double>(k) / m;
      if (std::abs(y) <= 0.5) pts.push_back({y, d.profile(y)});
    }
    const double v = ldshape::e_bm_finite(pts).value;
    EXPECT_GE(v, prev - 1e-12) << "m = " << m;
    EXPECT_LE(v, full + 1e-12);
    prev = v;
    if (m == 64) {
      EXPECT_LT(full - v, 1e-3);
    }
  }
}

TEST(EBmFiniteProperty, LipschitzUnderPerturbation) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<ldshape::Node> pts;
    double y = -1.5;
    for (int k = 0; k < 4; ++k) {
      y += 0.3 + 0.5 * u(rng);
      pts.push_back({y, -y * y + 0.2 + u(rng)});
    }
    const double v = ldshape::e_bm_finite(pts).value;
    for (double delta : {1e-3, 1e-4, 1e-5}) {
      auto q = pts;
      for (auto& p : q) {
        p.y += delta * (u(rng) - 0.5);
        p.value += delta * (u(rng) - 0.5);
      }
      const double w = ldshape::e_bm_finite(q).value;
      const double ratio = std::abs(w - v) / delta;
      EXPECT_LT(ratio, 100.0);
    }
  }
}

}  // namespace
