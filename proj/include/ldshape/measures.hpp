#ifndef LDSHAPE_MEASURES_HPP_
#define LDSHAPE_MEASURES_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ldshape/burgers.hpp"
#include "ldshape/errors.hpp"
#include "ldshape/pwfn.hpp"
#include "ldshape/shocks.hpp"

namespace ldshape {

// Piecewise-linear path x(t) on [t.front(), t.back()] carrying a density
// that is constant on each segment.
struct PathAtom {
  std::vector<double> t;
  std::vector<double> x;
  std::vector<double> rho;

  double begin() const { return t.front(); }
  double end() const { return t.back(); }

  // Position at time s inside [begin, end].
  double position(double s) const {
    if (s <= t.front()) return x.front();
    if (s >= t.back()) return x.back();
    const std::size_t k = segment(s);
    const double w = (s - t[k]) / (t[k + 1] - t[k]);
    return x[k] + w * (x[k + 1] - x[k]);
  }
  double density(double s) const { return rho[segment(s)]; }
  double slope(std::size_t k) const { return (x[k + 1] - x[k]) / (t[k + 1] - t[k]); }

  // Index k with t[k] <= s < t[k+1], clamped to the segment range.
  std::size_t segment(double s) const {
    const auto it = std::upper_bound(t.begin(), t.end(), s);
    const std::ptrdiff_t k = (it - t.begin()) - 1;
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(k, 0, static_cast<std::ptrdiff_t>(rho.size()) - 1));
  }

  // Integral of (rho - xdot^2) over [a, b] within the atom's life.
  double reward(double a, double b) const {
    a = std::max(a, t.front());
    b = std::min(b, t.back());
    double total = 0.0;
    if (!(b > a)) return total;
    for (std::size_t k = segment(a); k < rho.size() && t[k] < b; ++k) {
      const double lo = std::max(a, t[k]), hi = std::min(b, t[k + 1]);
      if (hi > lo) {
        const double v = slope(k);
        total += (rho[k] - v * v) * (hi - lo);
      }
    }
    return total;
  }

  void validate() const {
    if (t.size() < 2 || x.size() != t.size() || rho.size() + 1 != t.size())
      throw std::invalid_argument("PathAtom: need n >= 2 times, n positions, n - 1 densities");
    for (std::size_t k = 0; k + 1 < t.size(); ++k)
      if (!(t[k + 1] > t[k])) throw std::invalid_argument("PathAtom: times must increase strictly");
    if (t.front() < 0.0 || t.back() > 1.0) throw std::invalid_argument("PathAtom: times must lie in [0, 1]");
    for (double r : rho)
      if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument("PathAtom: densities must be finite and >= 0");
    for (double v : x)
      if (!std::isfinite(v)) throw std::invalid_argument("PathAtom: non-finite position");
  }
};

namespace detail {

inline bool is_path_end(const PathAtom& a, double t, double x, double tol) {
  const auto near = [&](double ta, double xa) {
    return std::abs(ta - t) <= tol * (1.0 + std::abs(t)) && std::abs(xa - x) <= tol * (1.0 + std::abs(x));
  };
  return near(a.t.front(), a.x.front()) || near(a.t.back(), a.x.back());
}

// Graphs over a common time window meet iff x_p - x_q vanishes or changes sign.
inline bool internally_disjoint(const PathAtom& p, const PathAtom& q, double tol = 1e-12) {
  const double lo = std::max(p.begin(), q.begin()), hi = std::min(p.end(), q.end());
  if (lo > hi) return true;
  std::vector<double> ts{lo, hi};
  for (double s : p.t)
    if (s > lo && s < hi) ts.push_back(s);
  for (double s : q.t)
    if (s > lo && s < hi) ts.push_back(s);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  double prev = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double s = ts[i];
    const double xp = p.position(s), xq = q.position(s);
    const double d = xp - xq;
    if (std::abs(d) <= tol * (1.0 + std::abs(xp))) {
      if (!is_path_end(p, s, xp, tol) && !is_path_end(q, s, xq, tol)) return false;
      prev = 0.0;
      continue;
    }
    if (prev != 0.0 && (prev > 0.0) != (d > 0.0)) return false;
    prev = d;
  }
  return true;
}

}  // namespace detail

struct PathMeasure {
  std::vector<PathAtom> atoms;

  bool empty() const { return atoms.empty(); }

  double cone_radius() const {
    double c = 0.0;
    for (const auto& a : atoms)
      for (std::size_t k = 0; k < a.t.size(); ++k)
        if (a.t[k] > 0.0) c = std::max(c, std::abs(a.x[k]) / a.t[k]);
    return c;
  }

  void validate() const {
    for (const auto& a : atoms) a.validate();
    for (std::size_t i = 0; i < atoms.size(); ++i)
      for (std::size_t j = i + 1; j < atoms.size(); ++j)
        if (!detail::internally_disjoint(atoms[i], atoms[j]))
          throw DisjointnessError("PathMeasure: atom graphs intersect away from endpoints");
  }
};

inline double rate(const PathAtom& a) {
  double r = 0.0;
  for (std::size_t k = 0; k < a.rho.size(); ++k) r += (4.0 / 3.0) * std::pow(a.rho[k], 1.5) * (a.t[k + 1] - a.t[k]);
  return r;
}

inline double rate(const PathMeasure& mu) {
  double r = 0.0;
  for (const auto& a : mu.atoms) r += rate(a);
  return r;
}

inline PathAtom atom_from_shock(const ShockRecord& r) {
  PathAtom a;
  for (const auto& s : r.samples) {
    a.t.push_back(s.t);
    a.x.push_back(s.x);
  }
  for (std::size_t k = 0; k + 1 < r.samples.size(); ++k) {
    const double c = std::cbrt(r.segment_mean(k));
    a.rho.push_back(c * c / 16.0);
  }
  return a;
}

inline PathMeasure measure_from_shocks(const std::vector<ShockRecord>& shocks) {
  PathMeasure mu;
  for (const auto& r : shocks)
    if (r.cls != ShockClass::contact) mu.atoms.push_back(atom_from_shock(r));
  mu.validate();
  return mu;
}

struct SplitMeasure {
  PathMeasure non_entropy;
  PathMeasure entropy;
};

inline SplitMeasure split_measure(const std::vector<ShockRecord>& shocks) {
  SplitMeasure s;
  for (const auto& r : shocks) {
    if (r.cls == ShockClass::non_entropy) s.non_entropy.atoms.push_back(atom_from_shock(r));
    else if (r.cls == ShockClass::entropy) s.entropy.atoms.push_back(atom_from_shock(r));
  }
  s.non_entropy.validate();
  s.entropy.validate();
  return s;
}

struct KruzhkovPair {
  static double entropy(double a) { return a * a / 4.0; }
  static double flux(double a) { return a * a * a / 12.0; }
  static double entropy_derivative(double a) { return a / 2.0; }
  static double flux_derivative(double a) { return a * a / 4.0; }
};

struct EntropyProduction {
  double plus = 0.0;
  double minus = 0.0;
};

inline EntropyProduction entropy_production(const std::vector<ShockRecord>& shocks) {
  EntropyProduction e;
  for (const auto& r : shocks) {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < r.samples.size(); ++k)
      s += r.segment_mean(k) * (r.samples[k + 1].t - r.samples[k].t);
    s /= 48.0;
    if (r.cls == ShockClass::non_entropy) e.plus += s;
    else if (r.cls == ShockClass::entropy) e.minus += s;
  }
  return e;
}

// (1/4) * integral of (u^2 - uhat^2) dx at one time.
inline double flux_energy(const FrontState& st) {
  const double t = st.time;
  double total = 0.0;
  const auto& v = st.vertices;
  for (std::size_t k = 0; k + 1 < v.size(); ++k) {
    const double a = v[k].x, b = v[k + 1].x;
    if (a == b) continue;
    // u is linear on [a, b]; so is uhat = -2x/t.
    const double ua = v[k].u, ub = v[k + 1].u;
    const double wa = -2.0 * a / t, wb = -2.0 * b / t;
    const auto sq = [](double p, double q) { return (p * p + p * q + q * q) / 3.0; };
    total += (sq(ua, ub) - sq(wa, wb)) * (b - a);
  }
  return total / 4.0;
}

// Entp+ - Entp- over [t_lo, t_hi] through the energy balance.
inline double flux_route(const Evolution& ev, double t_lo, double t_hi) {
  return flux_energy(ev.at(t_hi)) - flux_energy(ev.at(t_lo));
}

inline double key_identity_residual(const HeightField& field, const std::vector<ShockRecord>& shocks) {
  const auto it = field.slices.find(1.0);
  if (it == field.slices.end()) throw std::invalid_argument("key_identity_residual: no slice at t = 1");
  const EntropyProduction e = entropy_production(shocks);
  return std::abs((e.plus - e.minus) - q_bm(it->second));
}

// Atom given by callables, for approximation.
struct CurvedAtom {
  double b = 0.0;
  double e = 1.0;
  std::function<double(double)> path;
  std::function<double(double)> density;
  std::vector<double> kinks;  // times where path slope or density may jump
};

inline CurvedAtom curved(const PathAtom& a) {
  CurvedAtom c;
  c.b = a.begin();
  c.e = a.end();
  c.path = [a](double s) { return a.position(s); };
  c.density = [a](double s) { return a.density(s); };
  c.kinks.assign(a.t.begin() + 1, a.t.end() - 1);
  return c;
}

namespace detail {

// Gauss-Legendre, 5 nodes on [a, b].
inline double gauss5(const std::function<double(double)>& f, double a, double b) {
  static const double xs[5] = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                               0.9061798459386640};
  static const double ws[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                               0.2369268850561891, 0.2369268850561891};
  const double m = 0.5 * (a + b), h = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < 5; ++i) s += ws[i] * f(m + h * xs[i]);
  return s * h;
}

inline PathAtom polygonalize(const CurvedAtom& c, int n) {
  std::vector<double> ts;
  for (int k = 0; k <= n; ++k) ts.push_back(k == n ? c.e : c.b + (c.e - c.b) * k / n);
  for (double s : c.kinks)
    if (s > c.b && s < c.e) ts.push_back(s);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end(), [](double p, double q) { return std::abs(p - q) <= 1e-14; }), ts.end());
  PathAtom a;
  for (double s : ts) {
    a.t.push_back(s);
    a.x.push_back(c.path(s));
  }
  for (std::size_t k = 0; k + 1 < ts.size(); ++k) {
    const double lo = ts[k], hi = ts[k + 1];
    // Densities may jump at kinks only, so the panel average is smooth.
    a.rho.push_back(gauss5(c.density, lo, hi) / (hi - lo));
  }
  // Merge collinear neighbours of equal density.
  PathAtom m;
  m.t.push_back(a.t.front());
  m.x.push_back(a.x.front());
  for (std::size_t k = 0; k + 1 < a.t.size(); ++k) {
    const bool last = k + 2 == a.t.size();
    if (!last) {
      const double s0 = (a.x[k + 1] - m.x.back()) / (a.t[k + 1] - m.t.back());
      const double s1 = (a.x[k + 2] - a.x[k + 1]) / (a.t[k + 2] - a.t[k + 1]);
      const double r1 = a.rho[k], r2 = a.rho[k + 1];
      if (std::abs(s0 - s1) <= 1e-12 * (1.0 + std::abs(s0)) && std::abs(r1 - r2) <= 1e-12 * (1.0 + r1))
        continue;
    }
    m.t.push_back(a.t[k + 1]);
    m.x.push_back(a.x[k + 1]);
    m.rho.push_back(a.rho[k]);
  }
  return m;
}

}  // namespace detail

// Piecewise-linear approximation on n equal panels with endpoint matching.
// Atoms touching t = 0 away from the origin are cut at 1/2, 1/3, ..., 1/n
// first. Panels are doubled for atoms that would intersect.
inline PathMeasure approximate(const std::vector<CurvedAtom>& atoms, int n) {
  if (n < 1) throw std::invalid_argument("approximate: need n >= 1");
  std::vector<CurvedAtom> parts;
  for (const auto& c : atoms) {
    if (c.b == 0.0 && std::abs(c.path(0.0)) > 1e-12) {
      for (int k = 1; k <= n; ++k) {
        const double hi = k == 1 ? c.e : 1.0 / k;
        const double lo = 1.0 / (k + 1);
        if (hi <= lo || lo >= c.e) continue;
        CurvedAtom p = c;
        p.b = lo;
        p.e = std::min(hi, c.e);
        parts.push_back(std::move(p));
      }
    } else {
      parts.push_back(c);
    }
  }
  std::vector<int> panels(parts.size(), n);
  for (int round = 0; round <= 8; ++round) {
    PathMeasure mu;
    for (std::size_t i = 0; i < parts.size(); ++i) mu.atoms.push_back(detail::polygonalize(parts[i], panels[i]));
    bool clash = false;
    for (std::size_t i = 0; i < mu.atoms.size(); ++i)
      for (std::size_t j = i + 1; j < mu.atoms.size(); ++j)
        if (!detail::internally_disjoint(mu.atoms[i], mu.atoms[j])) {
          panels[i] *= 2;
          panels[j] *= 2;
          clash = true;
        }
    if (!clash) return mu;
  }
  throw DisjointnessError("approximate: panels keep intersecting after refinement");
}

inline PathMeasure approximate(const PathMeasure& mu, int n) {
  std::vector<CurvedAtom> c;
  for (const auto& a : mu.atoms) c.push_back(curved(a));
  return approximate(c, n);
}

// mu <= nu: every atom of mu sits on an atom of nu with the same vertices
// and pointwise smaller density. Throws when no common refinement exists.
inline bool dominated(const PathMeasure& mu, const PathMeasure& nu) {
  for (const auto& a : mu.atoms) {
    const PathAtom* match = nullptr;
    for (const auto& b : nu.atoms)
      if (a.t == b.t && a.x == b.x) {
        match = &b;
        break;
      }
    if (!match) throw IncomparableError("dominated: atom of the smaller measure has no counterpart");
    for (std::size_t k = 0; k < a.rho.size(); ++k)
      if (a.rho[k] > match->rho[k]) return false;
  }
  return true;
}

// Ray atom x = v t on [0, 1] with constant density.
struct Ray {
  double slope = 0.0;
  double density = 0.0;
};

inline std::vector<Ray> fan_rays(const PathMeasure& mu) {
  std::vector<Ray> out;
  for (const auto& a : mu.atoms) {
    if (a.t.front() != 0.0 || a.x.front() != 0.0 || a.t.back() != 1.0)
      throw std::invalid_argument("fan_rays: atoms must be rays on [0, 1] from the origin");
    const double v = a.x.back();
    for (std::size_t k = 0; k < a.t.size(); ++k)
      if (std::abs(a.x[k] - v * a.t[k]) > 1e-12 * (1.0 + std::abs(v)))
        throw std::invalid_argument("fan_rays: atom is not a ray");
    for (double r : a.rho)
      if (r != a.rho.front()) throw std::invalid_argument("fan_rays: density must be constant");
    out.push_back({v, a.rho.front()});
  }
  return out;
}

// A_{alpha,beta}(t, .) as a profile.
inline PiecewisePoly wedge_profile(double alpha, double beta, double t) {
  const auto tail = PiecewisePoly::dirichlet(t);
  if (beta == 0.0) return PiecewisePoly({}, {tail});
  const double r = std::sqrt(beta);
  const double lo = alpha - r, hi = alpha + r;
  return PiecewisePoly({t * lo, t * alpha, t * hi},
                       {tail, {lo * lo * t, -2.0 * lo, 0.0}, {hi * hi * t, -2.0 * hi, 0.0}, tail});
}

// Height of a fan of rays: the maximum of their wedges.
inline PiecewisePoly fan_height(const std::vector<Ray>& rays, double t) {
  PiecewisePoly h = PiecewisePoly::parabola(t);
  for (const auto& r : rays) h = upper_envelope(h, wedge_profile(r.slope, r.density, t));
  return h;
}

}  // namespace ldshape

#endif  // LDSHAPE_MEASURES_HPP_
