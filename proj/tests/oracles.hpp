#ifndef LDSHAPE_TESTS_ORACLES_HPP_
#define LDSHAPE_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "ldshape/burgers.hpp"
#include "ldshape/measures.hpp"
#include "ldshape/pwfn.hpp"

namespace oracle {

// Composite Simpson rule with n (even) panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

// Simpson on each segment of phi between its outermost breakpoints; f sees
// the coefficients of the segment being integrated.
inline double piecewise_simpson(const ldshape::PiecewisePoly& phi,
                                const std::function<double(double, const ldshape::PiecewisePoly::Coeffs&)>& f) {
  const auto& br = phi.breakpoints();
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < br.size(); ++i) {
    const auto& c = phi.segments()[i + 1];
    s += simpson([&](double x) { return f(x, c); }, br[i], br[i + 1], 200);
  }
  return s;
}

// (1/4) * integral of (phi' + 2x)^2 plus integral of (phi + x^2); equals
// q_bm for -x^2 tails after integrating the cross term by parts.
inline double q_bm_square_form(const ldshape::PiecewisePoly& phi) {
  return piecewise_simpson(phi, [](double x, const ldshape::PiecewisePoly::Coeffs& c) {
    const double d = c[1] + 2.0 * c[2] * x + 2.0 * x;
    return 0.25 * d * d + c[0] + x * (c[1] + x * c[2]) + x * x;
  });
}

// Upper convex hull (concave majorant) of points sorted by x, by the monotone chain.
inline std::vector<std::pair<double, double>> upper_hull(std::vector<std::pair<double, double>> p) {
  std::sort(p.begin(), p.end());
  std::vector<std::pair<double, double>> h;
  for (const auto& q : p) {
    while (h.size() >= 2) {
      const auto& a = h[h.size() - 2];
      const auto& b = h[h.size() - 1];
      const double cross = (b.first - a.first) * (q.second - a.second) - (b.second - a.second) * (q.first - a.first);
      if (cross >= 0.0) h.pop_back();
      else break;
    }
    h.push_back(q);
  }
  return h;
}

inline double hull_value(const std::vector<std::pair<double, double>>& h, double x) {
  for (std::size_t i = 0; i + 1 < h.size(); ++i)
    if (h[i].first <= x && x <= h[i + 1].first) {
      const double w = (x - h[i].first) / (h[i + 1].first - h[i].first);
      return h[i].second + w * (h[i + 1].second - h[i].second);
    }
  return -INFINITY;
}

// s * phi(x / s): maps -x^2 tails to -x^2 / s tails.
inline ldshape::PiecewisePoly rescaled(const ldshape::PiecewisePoly& phi, double s) {
  std::vector<double> br = phi.breakpoints();
  for (double& b : br) b *= s;
  std::vector<ldshape::PiecewisePoly::Coeffs> segs;
  for (const auto& c : phi.segments()) segs.push_back({c[0] * s, c[1], c[2] / s});
  return ldshape::PiecewisePoly::unchecked(std::move(br), std::move(segs));
}

// Random fan of rays from the origin, pairwise distinct slopes.
inline ldshape::PathMeasure random_fan(std::mt19937_64& rng, int max_atoms = 3) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 1 + static_cast<int>(u(rng) * max_atoms);
  std::vector<double> slopes;
  while (static_cast<int>(slopes.size()) < n) {
    const double v = -1.5 + 3.0 * u(rng);
    bool ok = true;
    for (double w : slopes) ok = ok && std::abs(w - v) > 0.1;
    if (ok) slopes.push_back(v);
  }
  ldshape::PathMeasure mu;
  for (double v : slopes) mu.atoms.push_back({{0.0, 1.0}, {0.0, v}, {0.2 + 1.5 * u(rng)}});
  return mu;
}

// Random piecewise-linear atoms that stay disjoint: one per horizontal lane.
inline ldshape::PathMeasure random_polyline_measure(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ldshape::PathMeasure mu;
  const int lanes = 1 + static_cast<int>(u(rng) * 3.0);
  for (int l = 0; l < lanes; ++l) {
    const double centre = -1.5 + 1.5 * l;
    const double b = 0.2 * u(rng), e = 0.6 + 0.4 * u(rng);
    const int pieces = 1 + static_cast<int>(u(rng) * 3.0);
    ldshape::PathAtom a;
    for (int k = 0; k <= pieces; ++k) {
      a.t.push_back(b + (e - b) * k / pieces);
      a.x.push_back(centre - 0.5 + u(rng));
    }
    for (int k = 0; k < pieces; ++k) a.rho.push_back(2.0 * u(rng));
    mu.atoms.push_back(std::move(a));
  }
  return mu;
}

// Same graphs, each density scaled up by a factor in [1, 2], plus maybe one extra atom.
inline ldshape::PathMeasure dominating(const ldshape::PathMeasure& mu, std::mt19937_64& rng, bool extra) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ldshape::PathMeasure nu = mu;
  for (auto& a : nu.atoms)
    for (double& r : a.rho) r *= 1.0 + u(rng);
  if (extra) nu.atoms.push_back({{0.3, 0.9}, {2.6, 2.6}, {0.5 + u(rng)}});
  return nu;
}

}  // namespace oracle

#endif  // LDSHAPE_TESTS_ORACLES_HPP_
