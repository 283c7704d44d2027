#ifndef LDSHAPE_METRIC_HPP_
#define LDSHAPE_METRIC_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ldshape/burgers.hpp"
#include "ldshape/measures.hpp"
#include "ldshape/pwfn.hpp"

namespace ldshape {

struct LatticeSpec {
  double t_min = 1e-3;
  double t_max = 1.0;
  int n_t = 100;
  double x_min = -3.0;
  double x_max = 3.0;
  int n_x = 200;
  int max_hop = 0;     // 0 derives the budget from speed
  double speed = 0.0;  // velocity bound; 0 uses twice the lattice half-width

  double dt() const { return (t_max - t_min) / n_t; }
  double dx() const { return (x_max - x_min) / n_x; }
  double t(int k) const { return k == n_t ? t_max : t_min + k * dt(); }
  double x(int i) const { return i == n_x ? x_max : x_min + i * dx(); }

  int hop() const {
    if (max_hop > 0) return max_hop;
    const double v = speed > 0.0 ? speed : 2.0 * std::max(std::abs(x_min), std::abs(x_max));
    return static_cast<int>(std::ceil(v * dt() / dx())) + 1;
  }

  void validate() const {
    if (!(n_t > 0 && n_x > 0)) throw std::invalid_argument("LatticeSpec: need positive step counts");
    if (!(t_max > t_min) || !(x_max > x_min)) throw std::invalid_argument("LatticeSpec: empty window");
    if (max_hop < 0 || speed < 0.0) throw std::invalid_argument("LatticeSpec: negative hop budget");
  }
};

// Starting point of the two-point values e_mu(s, y; t, x).
struct Source {
  double s = 0.0;
  double y = 0.0;
};

// Where a lattice or atom value came from.
struct BackPointer {
  enum Kind : unsigned char { anchor, lattice, atom, on_atom, follow };
  Kind kind = anchor;
  double y = 0.0;  // previous position for lattice moves
  int atom_id = -1;
};

struct GridField {
  LatticeSpec lattice;
  Source source;
  std::vector<double> values;  // row k holds time t(k)
  bool clipped = false;
  std::vector<BackPointer> back;
  // Values and back pointers at atom positions, per level and atom.
  std::vector<double> atom_values;
  std::vector<BackPointer> atom_back;
  std::size_t atom_count = 0;

  double operator()(int k, int i) const { return values[row(k) + static_cast<std::size_t>(i)]; }
  std::size_t row(int k) const { return static_cast<std::size_t>(k) * static_cast<std::size_t>(lattice.n_x + 1); }
  const double* level(int k) const { return values.data() + row(k); }
  double atom_value(int k, std::size_t a) const { return atom_values[static_cast<std::size_t>(k) * atom_count + a]; }
};

namespace detail {

struct StepBest {
  double value;
  double y;
  bool clipped;
};

inline double minmod(double a, double b) {
  if (a * b <= 0.0) return 0.0;
  return std::abs(a) < std::abs(b) ? a : b;
}

// Best of interp(y) -/+ (x - y)^2 / tau over the hop window. interp is the
// linear interpolant of one lattice level, optionally with a minmod-limited
// curvature term that is exact on parabolas.
inline StepBest lattice_step(const double* h, const LatticeSpec& L, double x, double tau, Extremum e,
                             bool curved = false) {
  const double dx = L.dx();
  const int hop = L.hop();
  const int c = static_cast<int>(std::floor((x - L.x_min) / dx));
  const int j0 = std::max(0, c - hop + 1), j1 = std::min(L.n_x - 1, c + hop);
  const double sgn = e == Extremum::max ? 1.0 : -1.0;
  StepBest best{sgn > 0 ? -kInf : kInf, x, false};
  if (j0 > j1) return best;
  for (int j = j0; j <= j1; ++j) {
    const double xa = L.x(j), xb = L.x(j + 1);
    const double a = h[j], b = h[j + 1];
    const double s = (b - a) / (xb - xa);
    double k = 0.0;  // half the curvature
    if (curved && j > 0 && j + 1 < L.n_x) {
      const double d0 = h[j - 1] - 2.0 * a + b, d1 = a - 2.0 * b + h[j + 2];
      k = minmod(d0, d1) / (2.0 * dx * dx);
    }
    // Objective a + s (y - xa) + k (y - xa)(y - xb) - sgn (x - y)^2 / tau.
    const double curv = k - sgn / tau;
    const auto f = [&](double y) { return a + s * (y - xa) + k * (y - xa) * (y - xb) - sgn * (x - y) * (x - y) / tau; };
    double y;
    if (sgn * curv < 0.0) {
      // Interior extremum of a strictly concave (max) or convex (min) objective.
      y = (s - k * (xa + xb) + 2.0 * sgn * x / tau) / (-2.0 * curv);
      y = std::clamp(y, xa, xb);
    } else {
      y = (sgn > 0) == (f(xa) >= f(xb)) ? xa : xb;
    }
    const double v = f(y);
    if (sgn > 0 ? v > best.value : v < best.value) best = {v, y, false};
  }
  // Hop budget binds when the optimum sits on a window edge inside the lattice.
  best.clipped = (j0 > 0 && best.y == L.x(j0)) || (j1 < L.n_x - 1 && best.y == L.x(j1 + 1));
  return best;
}

// Exact step from a piecewise quadratic profile.
inline StepBest profile_step(const PiecewisePoly& phi, double x, double tau, Extremum e) {
  const double sgn = e == Extremum::max ? 1.0 : -1.0;
  StepBest best{sgn > 0 ? -kInf : kInf, x, false};
  const auto& br = phi.breakpoints();
  const auto& seg = phi.segments();
  for (std::size_t i = 0; i < seg.size(); ++i) {
    const double lo = i == 0 ? -kInf : br[i - 1], hi = i + 1 == seg.size() ? kInf : br[i];
    const auto& q = seg[i];
    const auto f = [&](double y) { return PiecewisePoly::eval(q, y) - sgn * (x - y) * (x - y) / tau; };
    const double curv = q[2] - sgn / tau;
    std::vector<double> ys;
    if (sgn * curv < 0.0) ys.push_back(std::clamp((q[1] + 2.0 * sgn * x / tau) / (-2.0 * curv), lo, hi));
    if (std::isfinite(lo)) ys.push_back(lo);
    if (std::isfinite(hi)) ys.push_back(hi);
    for (double y : ys) {
      const double v = f(y);
      if (sgn > 0 ? v > best.value : v < best.value) best = {v, y, false};
    }
  }
  return best;
}

inline double interp(const double* h, const LatticeSpec& L, double y) {
  const double dx = L.dx();
  int j = static_cast<int>(std::floor((y - L.x_min) / dx));
  j = std::clamp(j, 0, L.n_x - 1);
  const double w = (y - L.x(j)) / dx;
  return h[j] + w * (h[j + 1] - h[j]);
}

// Largest characteristic speed |phi'| / 2 of phi over the lattice window.
inline double profile_speed(const PiecewisePoly& phi, const LatticeSpec& L) {
  double v = 0.0;
  const PiecewiseLinear d = phi.derivative();
  std::vector<double> xs{L.x_min, L.x_max};
  for (double b : phi.breakpoints())
    if (b > L.x_min && b < L.x_max) xs.push_back(b);
  for (double x : xs) v = std::max({v, std::abs(d.left(x)), std::abs(d.right(x))});
  return v / 2.0;
}

inline LatticeSpec with_speed(LatticeSpec L, double v) {
  if (L.max_hop == 0 && L.speed == 0.0) L.speed = std::max(v, 1.0);
  return L;
}

}  // namespace detail

inline GridField grid_hopflax_bk(const PiecewisePoly& phi, const LatticeSpec& spec) {
  spec.validate();
  const LatticeSpec L = detail::with_speed(spec, detail::profile_speed(phi, spec));
  if (L.t_max != 1.0) throw std::invalid_argument("grid_hopflax_bk: lattice must end at t = 1");
  GridField g;
  g.lattice = L;
  g.values.assign(static_cast<std::size_t>(L.n_t + 1) * static_cast<std::size_t>(L.n_x + 1), 0.0);
  g.back.assign(g.values.size(), {});
  for (int i = 0; i <= L.n_x; ++i) g.values[g.row(L.n_t) + i] = phi(L.x(i));
  for (int k = L.n_t - 1; k >= 0; --k) {
    const double tau = L.t(k + 1) - L.t(k);
    const double* next = g.level(k + 1);
    for (int i = 0; i <= L.n_x; ++i) {
      const auto b = k == L.n_t - 1 ? detail::profile_step(phi, L.x(i), tau, Extremum::min)
                                    : detail::lattice_step(next, L, L.x(i), tau, Extremum::min, true);
      g.values[g.row(k) + i] = b.value;
      g.back[g.row(k) + i] = {BackPointer::lattice, b.y, -1};
      g.clipped = g.clipped || b.clipped;
    }
  }
  return g;
}

inline GridField grid_hopflax_fwd(const PiecewisePoly& phi, const LatticeSpec& spec) {
  spec.validate();
  const LatticeSpec L = detail::with_speed(spec, detail::profile_speed(phi, spec));
  GridField g;
  g.lattice = L;
  g.values.assign(static_cast<std::size_t>(L.n_t + 1) * static_cast<std::size_t>(L.n_x + 1), 0.0);
  g.back.assign(g.values.size(), {});
  for (int i = 0; i <= L.n_x; ++i) g.values[i] = phi(L.x(i));
  for (int k = 0; k < L.n_t; ++k) {
    const double tau = L.t(k + 1) - L.t(k);
    const double* prev = g.level(k);
    for (int i = 0; i <= L.n_x; ++i) {
      const auto b = k == 0 ? detail::profile_step(phi, L.x(i), tau, Extremum::max)
                            : detail::lattice_step(prev, L, L.x(i), tau, Extremum::max, true);
      g.values[g.row(k + 1) + i] = b.value;
      g.back[g.row(k + 1) + i] = {BackPointer::lattice, b.y, -1};
      g.clipped = g.clipped || b.clipped;
    }
  }
  return g;
}

enum class Anchor { dirichlet, rays };

// Forward Bellman recursion for Hfn[mu]. Atom points ride along each atom
// at exact positions and collect (rho - xdot^2) dt while followed.
inline GridField grid_height(const PathMeasure& mu, const LatticeSpec& spec, Source src = {},
                             Anchor anchor = Anchor::dirichlet) {
  spec.validate();
  double v = 2.0 * std::max(std::abs(spec.x_min), std::abs(spec.x_max));
  for (const auto& a : mu.atoms)
    for (std::size_t k = 0; k + 1 < a.t.size(); ++k) v = std::max(v, std::abs(a.slope(k)));
  const LatticeSpec L = detail::with_speed(spec, v);
  if (!(L.t_min > src.s)) throw std::invalid_argument("grid_height: lattice must start after the source");
  for (const auto& a : mu.atoms) {
    a.validate();
    for (double x : a.x)
      if (x < L.x_min || x > L.x_max) throw std::out_of_range("grid_height: atom leaves the lattice");
  }
  const std::size_t na = mu.atoms.size();
  GridField g;
  g.lattice = L;
  g.source = src;
  g.atom_count = na;
  const std::size_t nodes = static_cast<std::size_t>(L.n_x + 1);
  g.values.assign(static_cast<std::size_t>(L.n_t + 1) * nodes, 0.0);
  g.back.assign(g.values.size(), {});
  g.atom_values.assign(static_cast<std::size_t>(L.n_t + 1) * na, -kInf);
  g.atom_back.assign(g.atom_values.size(), {});

  const auto active = [&](std::size_t a, double t) {
    return mu.atoms[a].begin() <= t && t <= mu.atoms[a].end();
  };
  const auto aidx = [&](int k, std::size_t a) { return static_cast<std::size_t>(k) * na + a; };

  // Anchor at t_min.
  const double t0 = L.t(0), tau0 = t0 - src.s;
  std::vector<Ray> rays;
  if (anchor == Anchor::rays)
    for (std::size_t a = 0; a < na; ++a)
      if (mu.atoms[a].begin() < t0 && active(a, t0))
        rays.push_back({(mu.atoms[a].position(t0) - src.y) / tau0, mu.atoms[a].density(t0)});
  const auto anchor_value = [&](double x) {
    double v = -(x - src.y) * (x - src.y) / tau0;
    for (const auto& r : rays) v = std::max(v, a_wedge(r.slope, r.density, tau0, x - src.y));
    return v;
  };
  for (int i = 0; i <= L.n_x; ++i) g.values[i] = anchor_value(L.x(i));
  for (std::size_t a = 0; a < na; ++a)
    if (active(a, t0)) g.atom_values[aidx(0, a)] = anchor_value(mu.atoms[a].position(t0));

  for (int k = 0; k < L.n_t; ++k) {
    const double tk = L.t(k), tn = L.t(k + 1);
    const double* prev = g.level(k);
    double* cur = g.values.data() + g.row(k + 1);

    // Candidates leaving an atom: from its point at t_k, or from its end
    // point when it ends inside the step.
    struct Exit {
      double t, x, v;
      int atom;
    };
    std::vector<Exit> exits;
    for (std::size_t a = 0; a < na; ++a) {
      const auto& A = mu.atoms[a];
      const double va = g.atom_values[aidx(k, a)];
      if (active(a, tk) && va > -kInf) {
        exits.push_back({tk, A.position(tk), va, static_cast<int>(a)});
        if (A.end() < tn && A.end() > tk)
          exits.push_back({A.end(), A.x.back(), va + A.reward(tk, A.end()), static_cast<int>(a)});
      }
    }
    const auto best_at = [&](double x, double t_to) {
      const auto b = detail::lattice_step(prev, L, x, t_to - tk, Extremum::max);
      std::pair<double, BackPointer> r{b.value, {BackPointer::lattice, b.y, -1}};
      // Straight path from the source, which every measure improves on.
      const double direct = -(x - src.y) * (x - src.y) / (t_to - src.s);
      if (direct > r.first) r = {direct, {BackPointer::anchor, src.y, -1}};
      for (const auto& e : exits) {
        if (!(t_to > e.t)) continue;
        const double v = e.v - (x - e.x) * (x - e.x) / (t_to - e.t);
        if (v > r.first) r = {v, {BackPointer::atom, e.x, e.atom}};
      }
      if (r.second.kind == BackPointer::lattice && b.clipped) g.clipped = true;
      return r;
    };

    for (int i = 0; i <= L.n_x; ++i) {
      const auto r = best_at(L.x(i), tn);
      cur[i] = r.first;
      g.back[g.row(k + 1) + i] = r.second;
    }
    for (std::size_t a = 0; a < na; ++a) {
      if (!active(a, tn)) continue;
      const auto& A = mu.atoms[a];
      auto r = best_at(A.position(tn), tn);
      if (active(a, tk) && g.atom_values[aidx(k, a)] > -kInf) {
        const double v = g.atom_values[aidx(k, a)] + A.reward(tk, tn);
        if (v > r.first) r = {v, {BackPointer::follow, A.position(tk), static_cast<int>(a)}};
      } else if (A.begin() > tk) {
        // Join at the atom's start and follow it to t_{k+1}.
        const double b = A.begin();
        double v0 = b - tk > 1e-14 ? best_at(A.x.front(), b).first : detail::interp(prev, L, A.x.front());
        const double v = v0 + A.reward(b, tn);
        if (v > r.first) r = {v, {BackPointer::follow, A.x.front(), static_cast<int>(a)}};
      }
      g.atom_values[aidx(k + 1, a)] = r.first;
      g.atom_back[aidx(k + 1, a)] = r.second;
    }
    // Nodes lying on an atom take its value.
    for (std::size_t a = 0; a < na; ++a) {
      if (!active(a, tn)) continue;
      const double p = mu.atoms[a].position(tn);
      const double fi = (p - L.x_min) / L.dx();
      const int i = static_cast<int>(std::lround(fi));
      if (i < 0 || i > L.n_x || std::abs(L.x(i) - p) > 1e-12 * (1.0 + std::abs(p))) continue;
      const double v = g.atom_values[aidx(k + 1, a)];
      if (v > cur[i]) {
        cur[i] = v;
        g.back[g.row(k + 1) + i] = {BackPointer::on_atom, p, static_cast<int>(a)};
      }
    }
  }
  return g;
}

struct LatticePath {
  std::vector<double> t;
  std::vector<double> x;
  bool off_lattice = false;
};

// Back-traces the optimal path ending at (t, x), snapping to the nearest node.
inline LatticePath geodesic(const GridField& g, const PathMeasure& mu, double t, double x) {
  const auto& L = g.lattice;
  if (g.back.empty()) throw std::invalid_argument("geodesic: field has no back pointers");
  LatticePath p;
  int k = static_cast<int>(std::lround((t - L.t_min) / L.dt()));
  int i = static_cast<int>(std::lround((x - L.x_min) / L.dx()));
  k = std::clamp(k, 0, L.n_t);
  i = std::clamp(i, 0, L.n_x);
  p.off_lattice = std::abs(L.t(k) - t) > 1e-12 || std::abs(L.x(i) - x) > 1e-12;
  int atom = -1;  // when >= 0 we are on that atom's point
  double pos = L.x(i);
  while (true) {
    p.t.push_back(L.t(k));
    p.x.push_back(pos);
    if (k == 0) break;
    BackPointer b;
    if (atom >= 0) b = g.atom_back[static_cast<std::size_t>(k) * g.atom_count + static_cast<std::size_t>(atom)];
    else b = g.back[g.row(k) + static_cast<std::size_t>(i)];
    if (b.kind == BackPointer::on_atom) {
      // Same time level: replace the node by the atom point.
      atom = b.atom_id;
      pos = mu.atoms[static_cast<std::size_t>(atom)].position(L.t(k));
      p.t.pop_back();
      p.x.pop_back();
      continue;
    }
    if (b.kind == BackPointer::anchor) {
      // Straight segment back to the source.
      const double t1 = L.t(k), x1 = pos, s0 = g.source.s, y0 = g.source.y;
      for (int j = k - 1; j >= 0; --j) {
        p.t.push_back(L.t(j));
        p.x.push_back(y0 + (x1 - y0) * (L.t(j) - s0) / (t1 - s0));
      }
      break;
    }
    --k;
    switch (b.kind) {
      case BackPointer::follow:
      case BackPointer::atom:
        atom = b.atom_id;
        pos = mu.atoms[static_cast<std::size_t>(atom)].position(L.t(k));
        break;
      default:
        atom = -1;
        i = std::clamp(static_cast<int>(std::lround((b.y - L.x_min) / L.dx())), 0, L.n_x);
        pos = L.x(i);
        break;
    }
  }
  std::reverse(p.t.begin(), p.t.end());
  std::reverse(p.x.begin(), p.x.end());
  return p;
}

// Sup over cone nodes of |grid - h| for a backward Hopf-Lax field.
inline double oracle_delta(const Evolution& ev, const GridField& g) {
  const auto& L = g.lattice;
  const double c = ev.cone_radius();
  double d = 0.0;
  for (int k = 0; k <= L.n_t; ++k) {
    const FrontState st = ev.at(L.t(k));
    for (int i = 0; i <= L.n_x; ++i) {
      const double x = L.x(i);
      if (std::abs(x) > c * L.t(k)) continue;
      d = std::max(d, std::abs(g(k, i) - st.height(x)));
    }
  }
  return d;
}

struct ReconstructionReport {
  double residual = 0.0;
  bool clipped = false;
  std::size_t nodes = 0;
};

// Sup over cone nodes of |h - Hfn[M[h]]| for a tractable evolution.
inline ReconstructionReport reconstruct_check(const Evolution& ev, const std::vector<ShockRecord>& shocks,
                                              const LatticeSpec& L, Anchor anchor = Anchor::dirichlet) {
  const PathMeasure m = measure_from_shocks(shocks);
  const GridField g = grid_height(m, L, {}, anchor);
  const double c = ev.cone_radius();
  ReconstructionReport r;
  r.clipped = g.clipped;
  for (int k = 0; k <= L.n_t; ++k) {
    const double t = L.t(k);
    const FrontState st = ev.at(t);
    for (int i = 0; i <= L.n_x; ++i) {
      const double x = L.x(i);
      if (std::abs(x) > c * t) continue;
      r.residual = std::max(r.residual, std::abs(st.height(x) - g(k, i)));
      ++r.nodes;
    }
  }
  return r;
}

}  // namespace ldshape

#endif  // LDSHAPE_METRIC_HPP_
