#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "ldshape/corpus.hpp"
#include "ldshape/metric.hpp"
#include "ldshape/shocks.hpp"
#include "oracles.hpp"

namespace {

using ldshape::Evolution;
using ldshape::GridField;
using ldshape::LatticeSpec;
using ldshape::PathMeasure;
using ldshape::PiecewisePoly;

LatticeSpec lattice(int nt, int nx, double xm = 3.0) {
  LatticeSpec L;
  L.n_t = nt;
  L.n_x = nx;
  L.t_min = 1.0 / nt;
  L.t_max = 1.0;
  L.x_min = -xm;
  L.x_max = xm;
  return L;
}

double wedge_error(const GridField& g, double a, double b, double cone) {
  const auto& L = g.lattice;
  double e = 0.0;
  for (int k = 0; k <= L.n_t; ++k)
    for (int i = 0; i <= L.n_x; ++i) {
      const double t = L.t(k), x = L.x(i);
      if (std::abs(x) > cone * t) continue;
      e = std::max(e, std::abs(g(k, i) - ldshape::a_wedge(a, b, t, x)));
    }
  return e;
}

// Rounding allowance: the in-cell optimum is located from the data.
constexpr double kUlps = 4.0 * 2.220446049250313e-16;

TEST(LatticeSpec, GeometryAndValidation) {
  const auto L = lattice(10, 20);
  EXPECT_DOUBLE_EQ(L.dt(), 0.09);
  EXPECT_DOUBLE_EQ(L.dx(), 0.3);
  EXPECT_EQ(L.t(10), 1.0);
  EXPECT_EQ(L.x(20), 3.0);
  EXPECT_GE(L.hop(), 1);
  LatticeSpec bad = L;
  bad.n_t = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = L;
  bad.x_max = bad.x_min;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = L;
  bad.max_hop = -1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(GridHeight, EmptyMeasureIsParabola) {
  const auto L = lattice(50, 100);
  const auto g = ldshape::grid_height(PathMeasure{}, L);
  for (int k = 0; k <= L.n_t; ++k)
    for (int i = 0; i <= L.n_x; ++i) EXPECT_NEAR(g(k, i), -L.x(i) * L.x(i) / L.t(k), 1e-12);
  EXPECT_FALSE(g.clipped);
}

TEST(GridHeight, SingleRayConvergesAtFirstOrder) {
  std::vector<double> err;
  for (int s : {1, 2, 4}) {
    const auto g = ldshape::grid_height(ldshape::corpus::ray(0.3, 1.0), lattice(50 * s, 100 * s));
    err.push_back(wedge_error(g, 0.3, 1.0, 2.0));
  }
  EXPECT_LT(err[0], 0.1);
  EXPECT_GT(err[0] / err[1], 1.6);
  EXPECT_LT(err[0] / err[1], 2.4);
  EXPECT_GT(err[1] / err[2], 1.6);
  EXPECT_LT(err[1] / err[2], 2.4);
}

TEST(GridHeight, InputChecks) {
  PathMeasure far;
  far.atoms.push_back({{0.0, 1.0}, {0.0, 5.0}, {1.0}});
  EXPECT_THROW(ldshape::grid_height(far, lattice(10, 20)), std::out_of_range);
  EXPECT_THROW(ldshape::grid_height(PathMeasure{}, lattice(10, 20), {0.5, 0.0}), std::invalid_argument);
}

TEST(GridHeightProperty, MonotoneInTheMeasure) {
  std::mt19937_64 rng(51);
  const auto L = lattice(40, 80);
  std::size_t violations = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const auto mu = oracle::random_polyline_measure(rng);
    const auto nu = oracle::dominating(mu, rng, trial % 2 == 1);
    const auto gm = ldshape::grid_height(mu, L), gn = ldshape::grid_height(nu, L);
    for (std::size_t n = 0; n < gm.values.size(); ++n)
      if (gm.values[n] > gn.values[n] + kUlps * std::max(1.0, std::abs(gn.values[n]))) ++violations;
  }
  EXPECT_EQ(violations, 0u);
}

TEST(GridHeightProperty, SuperadditiveAlongIntermediateNodes) {
  // Two-point values compose up to the lattice error envelope.
  std::mt19937_64 rng(52);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto L = lattice(40, 120);
  const double slack = 2.0 * (L.dx() + L.dt());
  for (int trial = 0; trial < 5; ++trial) {
    const auto mu = oracle::random_fan(rng, 2);
    const auto whole = ldshape::grid_height(mu, L);
    for (int probe = 0; probe < 10; ++probe) {
      const int k = 8 + static_cast<int>(u(rng) * 20);
      const int i = 40 + static_cast<int>(u(rng) * 40);
      const double tu = L.t(k), xu = L.x(i);
      LatticeSpec tail = L;
      tail.n_t = L.n_t - k;
      tail.t_min = tu + L.dt();
      const auto second = ldshape::grid_height(mu, tail, {tu, xu});
      for (int j = 0; j <= L.n_x; j += 10) {
        const double lhs = whole(k, i) + second(tail.n_t, j);
        EXPECT_LE(lhs, whole(L.n_t, j) + slack);
      }
    }
  }
}

TEST(HopflaxBackward, ParabolaIsExact) {
  const auto L = lattice(20, 40);
  const auto g = ldshape::grid_hopflax_bk(PiecewisePoly::parabola(), L);
  // Nodes whose minimiser x / t stays inside the window.
  for (int k = 0; k <= L.n_t; ++k)
    for (int i = 0; i <= L.n_x; ++i)
      if (std::abs(L.x(i)) <= 2.0 * L.t(k)) {
        EXPECT_NEAR(g(k, i), -L.x(i) * L.x(i) / L.t(k), 1e-12);
      }
  auto bad = L;
  bad.t_max = 0.9;
  EXPECT_THROW(ldshape::grid_hopflax_bk(PiecewisePoly::parabola(), bad), std::invalid_argument);
}

TEST(HopflaxBackward, ConvergesToTheShearAndCutEvolution) {
  for (const auto& phi : ldshape::corpus::random_profiles(3, 53)) {
    const auto ev = Evolution::backward(phi);
    const double xm = ev.cone_radius() + 1.0;
    double prev = INFINITY;
    for (int s : {1, 2, 4}) {
      const double d = ldshape::oracle_delta(ev, ldshape::grid_hopflax_bk(phi, lattice(50 * s, 100 * s, xm)));
      EXPECT_LT(d, prev);
      prev = d;
    }
    EXPECT_LT(prev, 0.05);
  }
}

TEST(HopflaxBackward, NarrowHopBudgetClips) {
  const auto phi = ldshape::corpus::single_wedge(2.0, 4.0).minimizer;
  auto L = lattice(20, 200, 6.0);
  EXPECT_FALSE(ldshape::grid_hopflax_bk(phi, L).clipped);
  L.max_hop = 1;
  EXPECT_TRUE(ldshape::grid_hopflax_bk(phi, L).clipped);
}

TEST(HopflaxForward, TracksTheEntropyEvolutionAndComposes) {
  for (const auto& base : ldshape::corpus::random_profiles(3, 54)) {
    const double s = 0.5;
    const auto phi = oracle::rescaled(base, s);
    const auto ev = Evolution::forward(phi, s);
    LatticeSpec L = lattice(50, 200, 5.0);
    L.t_min = s;
    const auto one = ldshape::grid_hopflax_fwd(phi, L);
    LatticeSpec a = L, b = L;
    a.t_max = 0.75;
    a.n_t = 25;
    b.t_min = 0.75;
    b.n_t = 25;
    const auto first = ldshape::grid_hopflax_fwd(phi, a);
    const auto second = ldshape::grid_hopflax_fwd(ev.at(0.75).height_profile(), b);
    const double env = 2.0 * (L.dx() + L.dt());
    const double c = ev.cone_radius();
    for (int i = 0; i <= L.n_x; ++i) {
      const double x = L.x(i);
      if (std::abs(x) > c) continue;
      EXPECT_NEAR(first(a.n_t, i), one(25, i), 1e-12);
      EXPECT_NEAR(second(b.n_t, i), one(L.n_t, i), env);
      EXPECT_NEAR(one(L.n_t, i), ev.at(1.0).height(x), env);
    }
  }
}

TEST(Geodesic, FollowsTheAtom) {
  const auto mu = ldshape::corpus::ray(0.5, 1.0);
  const auto L = lattice(50, 120);
  const auto g = ldshape::grid_height(mu, L);
  const auto p = ldshape::geodesic(g, mu, 1.0, 0.5);
  EXPECT_FALSE(p.off_lattice);
  ASSERT_EQ(p.t.size(), static_cast<std::size_t>(L.n_t + 1));
  for (std::size_t k = 0; k < p.t.size(); ++k) EXPECT_NEAR(p.x[k], 0.5 * p.t[k], L.dx());
}

TEST(Geodesic, StraightLineWithoutAtoms) {
  const auto L = lattice(20, 60);
  const auto g = ldshape::grid_height(PathMeasure{}, L);
  const auto p = ldshape::geodesic(g, PathMeasure{}, 1.0, 1.0);
  for (std::size_t k = 0; k < p.t.size(); ++k) EXPECT_NEAR(p.x[k], p.t[k], 1e-12);
  GridField none;
  EXPECT_THROW(ldshape::geodesic(none, PathMeasure{}, 1.0, 0.0), std::invalid_argument);
}

TEST(ReconstructCheck, ParabolaHasNoResidual) {
  const auto ev = Evolution::backward(PiecewisePoly::parabola());
  const auto r = ldshape::reconstruct_check(ev, {}, lattice(20, 40));
  EXPECT_LE(r.residual, 1e-12);
  EXPECT_FALSE(r.clipped);
}

TEST(ReconstructCheck, WedgeResidualHalves) {
  const auto ev = Evolution::backward(ldshape::corpus::single_wedge(0.0, 1.0).minimizer);
  const auto tr = ldshape::trace_shocks(ev);
  std::vector<double> res;
  for (int s : {1, 2, 4}) res.push_back(ldshape::reconstruct_check(ev, tr.records, lattice(50 * s, 100 * s, 2.0)).residual);
  for (std::size_t i = 0; i + 1 < res.size(); ++i) {
    EXPECT_GT(res[i] / res[i + 1], 1.6);
    EXPECT_LT(res[i] / res[i + 1], 2.4);
  }
}

TEST(ReconstructCheck, RayAnchorMatchesFanAtStart) {
  const auto mu = ldshape::corpus::ray(0.3, 1.0);
  const auto L = lattice(20, 60);
  const auto g = ldshape::grid_height(mu, L, {}, ldshape::Anchor::rays);
  for (int i = 0; i <= L.n_x; ++i) EXPECT_NEAR(g(0, i), ldshape::a_wedge(0.3, 1.0, L.t(0), L.x(i)), 1e-12);
}

}  // namespace
