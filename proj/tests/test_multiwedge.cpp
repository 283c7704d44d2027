#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

#include <gtest/gtest.h>

#include "ldshape/burgers.hpp"
#include "ldshape/envelope.hpp"
#include "ldshape/measures.hpp"
#include "ldshape/multiwedge.hpp"
#include "ldshape/shocks.hpp"

namespace {

using ldshape::MultiWedgeProblem;
using ldshape::Node;
using ldshape::OrderedPartition;
using ldshape::PathMeasure;
using ldshape::SourcePoint;

// Random strictly feasible problem with distinct abscissas.
MultiWedgeProblem random_problem(std::mt19937_64& rng, int nz, int ny) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MultiWedgeProblem p;
  std::vector<double> zs, ys;
  while (static_cast<int>(zs.size()) < nz) {
    const double z = -2.0 + 4.0 * u(rng);
    if (std::none_of(zs.begin(), zs.end(), [&](double w) { return std::abs(w - z) < 0.2; })) zs.push_back(z);
  }
  while (static_cast<int>(ys.size()) < ny) {
    const double y = -2.5 + 5.0 * u(rng);
    if (std::none_of(ys.begin(), ys.end(), [&](double w) { return std::abs(w - y) < 0.1; })) ys.push_back(y);
  }
  for (double z : zs) p.sources.push_back({z, -0.5 + u(rng)});
  for (double y : ys) p.targets.push_back({y, 0.0});
  for (auto& t : p.targets) t.value = p.wedge_max(t.y) + 0.05 + 1.5 * u(rng);
  return p;
}

MultiWedgeProblem reflected(const MultiWedgeProblem& p) {
  MultiWedgeProblem r = p;
  for (auto& s : r.sources) s.z = -s.z;
  for (auto& t : r.targets) t.y = -t.y;
  return r;
}

MultiWedgeProblem translated(const MultiWedgeProblem& p, double c) {
  MultiWedgeProblem r = p;
  for (auto& s : r.sources) s.z += c;
  for (auto& t : r.targets) t.y += c;
  return r;
}

// Owners of the mirror problem: targets in reverse order, sources relabelled.
OrderedPartition mirrored(const OrderedPartition& part, std::size_t n_sources) {
  OrderedPartition m;
  for (auto it = part.owner.rbegin(); it != part.owner.rend(); ++it)
    m.owner.push_back(static_cast<int>(n_sources) - 1 - *it);
  return m;
}

// Shock measure of one block profile, in the data frame.
PathMeasure block_measure(const ldshape::PiecewisePoly& phi, const SourcePoint& s) {
  const auto ev = ldshape::Evolution::backward(ldshape::shifted(phi, -s.z, -s.g));
  PathMeasure mu = ldshape::measure_from_shocks(ldshape::trace_shocks(ev, 1e-9).records);
  for (auto& a : mu.atoms)
    for (double& x : a.x) x += s.z;
  return mu;
}

double binomial(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
  return c;
}

TEST(Shifted, TranslatesAndLifts) {
  const auto w = ldshape::wedge_profile(0.0, 1.0, 1.0);
  const auto s = ldshape::shifted(w, 1.5, -0.25);
  for (double x : {-3.0, 0.0, 1.4, 2.0, 4.0}) EXPECT_NEAR(s(x), w(x - 1.5) - 0.25, 1e-12);
}

TEST(OrderedPartitions, CountAndLexicographicOrder) {
  for (int ny = 1; ny <= 6; ++ny)
    for (int nz = 1; nz <= 4; ++nz) {
      const auto parts = ldshape::ordered_partitions(ny, nz);
      EXPECT_EQ(static_cast<double>(parts.size()), binomial(ny + nz - 1, nz - 1));
      for (const auto& p : parts) {
        ASSERT_EQ(p.owner.size(), static_cast<std::size_t>(ny));
        EXPECT_TRUE(std::is_sorted(p.owner.begin(), p.owner.end()));
        EXPECT_GE(p.owner.front(), 0);
        EXPECT_LT(p.owner.back(), nz);
      }
      EXPECT_TRUE(std::is_sorted(parts.begin(), parts.end()));
      EXPECT_EQ(std::adjacent_find(parts.begin(), parts.end()), parts.end());
    }
}

TEST(MultiRate, SingleTargetWedgeClosedForm) {
  for (double a : {-1.0, 0.0, 2.0})
    for (double b : {0.25, 1.0, 4.0}) {
      const MultiWedgeProblem p{{{0.0, 0.0}}, {{a, b - a * a}}};
      EXPECT_NEAR(ldshape::multi_rate(p).value, 4.0 / 3.0 * std::pow(b, 1.5), 1e-12);
    }
}

TEST(MultiRateProperty, OneSourceIsBitForBitTheFiniteEnergy) {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 40; ++trial) {
    const auto p = random_problem(rng, 1, 1 + trial % 6);
    const auto r = ldshape::multi_rate(p);
    const auto& s = r.problem.sources[0];
    std::vector<Node> pts;
    for (const auto& t : r.problem.targets) pts.push_back({t.y - s.z, t.value - s.g});
    const auto direct = ldshape::e_bm_finite(pts);
    EXPECT_EQ(r.value, direct.value);
    ASSERT_TRUE(r.profiles[0].has_value());
    for (const auto& t : r.problem.targets) EXPECT_NEAR((*r.profiles[0])(t.y), t.value, 1e-12);
  }
}

TEST(MultiRateProperty, ReflectionAndTranslationInvariant) {
  std::mt19937_64 rng(62);
  for (int trial = 0; trial < 30; ++trial) {
    const auto p = random_problem(rng, 1 + trial % 3, 1 + trial % 5);
    const auto r = ldshape::multi_rate(p);
    const auto m = ldshape::multi_rate(reflected(p));
    EXPECT_NEAR(r.value, m.value, 1e-10);
    EXPECT_EQ(mirrored(r.partition, p.sources.size()), m.partition);
    EXPECT_NEAR(r.value, ldshape::multi_rate(translated(p, 0.75)).value, 1e-10);
  }
}

TEST(MultiRateProperty, DominatedSourceNeverIncreasesTheValue) {
  std::mt19937_64 rng(63);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    auto p = random_problem(rng, 1 + trial % 2, 1 + trial % 4);
    const double before = ldshape::multi_rate(p).value;
    const SourcePoint& ref = p.sources[0];
    SourcePoint extra{3.0 + u(rng), 0.0};
    double g = ldshape::kInf;
    for (const auto& t : p.targets)
      g = std::min(g, (t.y - extra.z) * (t.y - extra.z) - (t.y - ref.z) * (t.y - ref.z) + ref.g);
    extra.g = g - 0.5;
    p.sources.push_back(extra);
    EXPECT_LE(ldshape::multi_rate(p).value, before);
  }
}

TEST(MultiRate, SymmetricTwoWedgeKeepsTargetsWithTheirSources) {
  const MultiWedgeProblem p{{{-1.0, 0.0}, {1.0, 0.0}}, {{-1.0, 2.0}, {1.0, 2.0}}};
  const auto r = ldshape::multi_rate(p);
  EXPECT_EQ(r.partition.owner, (std::vector<int>{0, 1}));
  ASSERT_EQ(r.energies.size(), 3u);
  for (const auto& e : r.energies)
    if (e.partition != r.partition) {
      EXPECT_GT(e.value, r.value);
    }
  EXPECT_NEAR(r.value, 2.0 * 4.0 / 3.0 * std::pow(2.0, 1.5), 1e-12);
}

TEST(MultiRate, OutputIsConjecturalAndFlagIsConsistent) {
  std::mt19937_64 rng(64);
  std::size_t flagged = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto r = ldshape::multi_rate(random_problem(rng, 2 + trial % 2, 2 + trial % 4));
    EXPECT_TRUE(r.conjectural);
    bool cheaper_rejected = false;
    for (const auto& e : r.energies) {
      if (e.admissible) {
        EXPECT_LE(e.violation, 1e-10);
        EXPECT_GE(e.value, r.value);
      } else {
        EXPECT_GT(e.violation, 0.0);
        cheaper_rejected = cheaper_rejected || e.value < r.value;
      }
    }
    EXPECT_EQ(r.flagged, cheaper_rejected);
    flagged += r.flagged;
  }
  EXPECT_GT(flagged, 0u);
}

TEST(MultiRate, InputErrors) {
  MultiWedgeProblem big;
  for (int i = 0; i < 12; ++i) big.sources.push_back({static_cast<double>(i), 0.0});
  for (int i = 0; i < 11; ++i) big.targets.push_back({i + 0.5, 1.0});
  EXPECT_THROW(ldshape::multi_rate(big), std::invalid_argument);
  EXPECT_THROW(ldshape::multi_rate({{{0.0, 0.0}}, {{0.0, -0.5}}}), ldshape::InfeasibleError);
  EXPECT_THROW(ldshape::multi_rate({{{0.0, 0.0}, {0.0, 1.0}}, {{0.0, 2.0}}}), std::invalid_argument);
  EXPECT_THROW(ldshape::multi_rate({{}, {{0.0, 2.0}}}), std::invalid_argument);
}

class Decomposition : public ::testing::Test {
 protected:
  void SetUp() override {
    result = ldshape::multi_rate(problem);
    for (std::size_t z = 0; z < result.profiles.size(); ++z)
      parts.push_back(block_measure(*result.profiles[z], result.problem.sources[z]));
  }
  MultiWedgeProblem problem{{{-3.0, 0.0}, {3.0, 0.0}}, {{-3.0, 1.0}, {3.0, 1.0}}};
  ldshape::MultiWedgeResult result;
  std::vector<PathMeasure> parts;
};

TEST_F(Decomposition, SeparatedWedgesPassAllConditions) {
  ASSERT_EQ(result.partition.owner, (std::vector<int>{0, 1}));
  const auto rep = ldshape::verify_decomposition(parts, problem, result.partition);
  EXPECT_TRUE(rep.exact);
  EXPECT_TRUE(rep.pass());
  EXPECT_LE(rep.matches.residual, 1e-9);
  EXPECT_EQ(rep.bounded.residual, 0.0);
}

TEST_F(Decomposition, InflatedDensityBreaksTheBound) {
  for (auto& a : parts[0].atoms)
    for (double& r : a.rho) r *= 4.0;
  const auto rep = ldshape::verify_decomposition(parts, problem, result.partition);
  EXPECT_FALSE(rep.bounded.pass);
  EXPECT_GT(rep.bounded.residual, 0.1);
  EXPECT_TRUE(rep.disjoint.pass);
}

TEST_F(Decomposition, CrossingSupportsFailDisjointness) {
  parts[1].atoms.push_back({{0.0, 1.0}, {3.0, -3.0}, {0.1}});
  const auto rep = ldshape::verify_decomposition(parts, problem, result.partition);
  EXPECT_FALSE(rep.disjoint.pass);
}

TEST_F(Decomposition, ShapeMismatchThrows) {
  EXPECT_THROW(ldshape::verify_decomposition({parts[0]}, problem, result.partition), std::invalid_argument);
  EXPECT_THROW(ldshape::verify_decomposition(parts, problem, OrderedPartition{{0}}), std::invalid_argument);
}

}  // namespace
