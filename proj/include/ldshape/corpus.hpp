#ifndef LDSHAPE_CORPUS_HPP_
#define LDSHAPE_CORPUS_HPP_

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "ldshape/envelope.hpp"
#include "ldshape/measures.hpp"
#include "ldshape/pwfn.hpp"

namespace ldshape::corpus {

// Piecewise-linear terminal profile with -x^2 tails: support [-c, c] with
// c in [0.5, 2.5], 2 to 7 interior nodes at least 0.05 apart, node values
// -x^2 + U(0, 2), rejected unless the chords stay above -x^2.
inline PiecewisePoly random_profile(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    const double c = 0.5 + 2.0 * u(rng);
    const int k = 2 + static_cast<int>(u(rng) * 6.0);
    std::vector<double> inner;
    for (int i = 0; i < k; ++i) inner.push_back(-c + 2.0 * c * u(rng));
    std::sort(inner.begin(), inner.end());
    std::vector<double> xs{-c};
    for (double x : inner)
      if (x - xs.back() > 0.05) xs.push_back(x);
    if (c - xs.back() < 0.05) xs.pop_back();
    xs.push_back(c);
    std::vector<double> vs;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const bool end = i == 0 || i + 1 == xs.size();
      vs.push_back(-xs[i] * xs[i] + (end ? 0.0 : 2.0 * u(rng)));
    }
    bool ok = true;
    for (std::size_t i = 0; ok && i + 1 < xs.size(); ++i)
      for (int j = 1; j < 50; ++j) {
        const double x = xs[i] + (xs[i + 1] - xs[i]) * j / 50.0;
        const double v = vs[i] + (vs[i + 1] - vs[i]) * (x - xs[i]) / (xs[i + 1] - xs[i]);
        if (v < -x * x) {
          ok = false;
          break;
        }
      }
    if (!ok) continue;
    std::vector<PiecewisePoly::Coeffs> segs{PiecewisePoly::dirichlet()};
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
      const double m = (vs[i + 1] - vs[i]) / (xs[i + 1] - xs[i]);
      segs.push_back({vs[i] - m * xs[i], m, 0.0});
    }
    segs.push_back(PiecewisePoly::dirichlet());
    return PiecewisePoly(std::move(xs), std::move(segs));
  }
}

inline std::vector<PiecewisePoly> random_profiles(std::size_t n, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  std::vector<PiecewisePoly> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(random_profile(rng));
  return out;
}

// f* for the single point I = {alpha}, f(alpha) = beta - alpha^2.
inline FiniteSolution single_wedge(double alpha, double beta) {
  return e_bm_finite({{alpha, beta - alpha * alpha}});
}

// I = {-alpha, 0, alpha}, f(+-alpha) = beta - alpha^2, f(0) = beta'.
inline FiniteSolution m_shape(double alpha, double beta, double beta0) {
  const double side = beta - alpha * alpha;
  return e_bm_finite({{-alpha, side}, {0.0, beta0}, {alpha, side}});
}

// I = [-a, a] with f = -x^2 + beta.
inline ConditioningData lift(double a, double beta) {
  return {IntervalUnion({{-a, a}}), PiecewisePoly::parabola(1.0, 0.0, beta), {}};
}

// beta delta_{gamma_alpha} + beta delta_{gamma_{-alpha}}.
inline PathMeasure two_rays(double alpha, double beta) {
  PathMeasure mu;
  mu.atoms.push_back({{0.0, 1.0}, {0.0, -alpha}, {beta}});
  mu.atoms.push_back({{0.0, 1.0}, {0.0, alpha}, {beta}});
  return mu;
}

inline PathMeasure ray(double alpha, double beta) {
  PathMeasure mu;
  mu.atoms.push_back({{0.0, 1.0}, {0.0, alpha}, {beta}});
  return mu;
}

}  // namespace ldshape::corpus

#endif  // LDSHAPE_CORPUS_HPP_
