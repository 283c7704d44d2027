#ifndef LDSHAPE_BURGERS_HPP_
#define LDSHAPE_BURGERS_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ldshape/errors.hpp"
#include "ldshape/pwfn.hpp"

namespace ldshape {

// Point of the complete graph of u = h_x, carrying the height h.
struct FrontVertex {
  double x = 0.0;
  double u = 0.0;
  double h = 0.0;
};

struct ShockPoint {
  double x = 0.0;
  double v_left = 0.0;
  double v_right = 0.0;
  double h = 0.0;
};

// Complete graph CG(t) between the two tail junctions. Outside the first and
// last vertex u follows -2x/t. Equal consecutive x marks a vertical segment.
struct FrontState {
  double time = 1.0;
  std::vector<FrontVertex> vertices;

  double cone_radius() const {
    double c = 0.0;
    for (const auto& v : vertices) c = std::max(c, std::abs(v.x) / time);
    return c;
  }

  std::vector<ShockPoint> jumps(double tol = kJumpTol) const {
    std::vector<ShockPoint> out;
    for (std::size_t i = 0; i + 1 < vertices.size(); ++i) {
      const auto& p = vertices[i];
      const auto& q = vertices[i + 1];
      if (p.x != q.x) continue;
      if (std::abs(p.u - q.u) <= tol * (1.0 + std::abs(p.u) + std::abs(q.u))) continue;
      out.push_back({p.x, p.u, q.u, 0.5 * (p.h + q.h)});
    }
    return out;
  }

  // One-sided limits of u.
  double u_left(double x) const { return u_at(x, true); }
  double u_right(double x) const { return u_at(x, false); }

  double height(double x) const {
    if (vertices.empty() || x <= vertices.front().x || x >= vertices.back().x) return -x * x / time;
    const std::size_t k = locate(x, false);
    return segment(k)(x);
  }

  PiecewisePoly height_profile() const {
    const auto tail = PiecewisePoly::dirichlet(time);
    if (vertices.empty()) return PiecewisePoly({}, {tail});
    std::vector<double> breaks;
    std::vector<PiecewisePoly::Coeffs> segs{tail};
    breaks.push_back(vertices.front().x);
    for (std::size_t k = 0; k + 1 < vertices.size(); ++k) {
      if (vertices[k + 1].x == vertices[k].x) continue;
      const Quadratic g = segment(k).recentered(0.0);
      segs.push_back({g.a0, g.a1, g.a2});
      breaks.push_back(vertices[k + 1].x);
    }
    segs.push_back(tail);
    // Drop duplicated breakpoints left by verticals at the ends.
    std::vector<double> b2;
    std::vector<PiecewisePoly::Coeffs> s2{segs.front()};
    for (std::size_t i = 0; i < breaks.size(); ++i) {
      if (!b2.empty() && breaks[i] == b2.back()) {
        s2.back() = segs[i + 1];
        continue;
      }
      b2.push_back(breaks[i]);
      s2.push_back(segs[i + 1]);
    }
    return PiecewisePoly::unchecked(std::move(b2), std::move(s2));
  }

  // Height on the segment from vertex k to k + 1 (non-vertical).
  Quadratic segment(std::size_t k) const {
    const auto& p = vertices[k];
    const auto& q = vertices[k + 1];
    const double m = (q.u - p.u) / (q.x - p.x);
    return {p.x, p.h, p.u, 0.5 * m};
  }

  static constexpr double kJumpTol = 1e-10;
  // Smallest fan width the shear map separates from a vertical segment.
  static constexpr double kFanResolution = 1e-12;

 private:
  std::size_t locate(double x, bool left) const {
    // Index k of the non-vertical segment [x_k, x_{k+1}] containing x.
    std::size_t lo = 0, hi = vertices.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      if (left ? vertices[mid].x < x : vertices[mid].x <= x) lo = mid;
      else hi = mid;
    }
    return lo;
  }
  double u_at(double x, bool left) const {
    if (vertices.empty()) return -2.0 * x / time;
    if (left ? x <= vertices.front().x : x < vertices.front().x) return -2.0 * x / time;
    if (left ? x > vertices.back().x : x >= vertices.back().x) return -2.0 * x / time;
    const std::size_t k = locate(x, left);
    return segment(k).slope(x);
  }
};

// CG(s) of a profile whose tails equal -x^2/s.
inline FrontState complete_graph(const PiecewisePoly& phi, double s = 1.0) {
  if (!phi.has_tails(PiecewisePoly::dirichlet(s)))
    throw std::invalid_argument("complete_graph: tails must be -x^2/s");
  FrontState st;
  st.time = s;
  const auto& br = phi.breakpoints();
  const auto& seg = phi.segments();
  for (std::size_t i = 0; i < br.size(); ++i) {
    const double b = br[i];
    const double dl = seg[i][1] + 2.0 * seg[i][2] * b;
    const double dr = seg[i + 1][1] + 2.0 * seg[i + 1][2] * b;
    const double h = PiecewisePoly::eval(seg[i], b);
    st.vertices.push_back({b, dl, h});
    if (dr != dl) st.vertices.push_back({b, dr, PiecewisePoly::eval(seg[i + 1], b)});
  }
  return st;
}

inline double rh_velocity(double v_left, double v_right) {
  if (v_left == v_right) throw ContactError("rh_velocity: equal states");
  return -(v_left + v_right) / 4.0;
}

inline double characteristic_velocity(double u) { return -u / 2.0; }

// t * A_{alpha,beta}(1, x / t)
inline double a_wedge(double alpha, double beta, double t, double x) {
  if (beta < 0.0) throw std::invalid_argument("a_wedge: beta must be nonnegative");
  const double y = x / t;
  const double r = std::sqrt(beta);
  const double lo = alpha - r, hi = alpha + r;
  double v;
  if (y >= lo && y <= alpha) v = -2.0 * lo * y + lo * lo;
  else if (y > alpha && y <= hi) v = -2.0 * hi * y + hi * hi;
  else v = -y * y;
  return t * v;
}

// Sheared complete graph: x' = x + (s - t) u / 2, H' = h + (s - t) u^2 / 4.
struct ShearedCurve {
  double time = 1.0;
  Extremum sense = Extremum::min;
  std::vector<FrontVertex> vertices;
};

inline ShearedCurve shear(const FrontState& st, double t) {
  ShearedCurve c;
  c.time = t;
  c.sense = t <= st.time ? Extremum::min : Extremum::max;
  const double s = st.time;
  c.vertices.reserve(st.vertices.size());
  for (const auto& v : st.vertices) {
    // Through the focus point at time 0 so that tail vertices stay exact.
    const double x0 = v.x + s * v.u / 2.0;
    const double h0 = v.h + s * v.u * v.u / 4.0;
    c.vertices.push_back({x0 - t * v.u / 2.0, v.u, h0 - t * v.u * v.u / 4.0});
  }
  return c;
}

namespace detail {

inline std::vector<Piece> branch_pieces(const ShearedCurve& c) {
  std::vector<Piece> out;
  const auto& v = c.vertices;
  const Quadratic tail{0.0, 0.0, 0.0, -1.0 / c.time};
  if (v.empty()) {
    out.push_back({-kInf, kInf, tail, -1});
    return out;
  }
  out.push_back({-kInf, v.front().x, tail, -1});
  for (std::size_t k = 0; k + 1 < v.size(); ++k) {
    const auto& p = v[k];
    const auto& q = v[k + 1];
    if (p.x == q.x) continue;
    const double m = (q.u - p.u) / (q.x - p.x);
    out.push_back({std::min(p.x, q.x), std::max(p.x, q.x), Quadratic{p.x, p.h, p.u, 0.5 * m},
                   static_cast<int>(k)});
  }
  out.push_back({v.back().x, kInf, tail, -2});
  return out;
}

inline void push_vertex(std::vector<FrontVertex>& out, const FrontVertex& v) {
  if (!out.empty() && out.back().x == v.x &&
      std::abs(out.back().u - v.u) <= FrontState::kJumpTol * (1.0 + std::abs(v.u)))
    return;
  out.push_back(v);
}

}  // namespace detail

// Resolves overhangs: the height at x is the lowest (backward) or highest
// (forward) branch over x, which is the equal-area cut.
inline FrontState cut(const ShearedCurve& c) {
  const PieceChain chain = extremal_chain(detail::branch_pieces(c), c.sense);
  FrontState st;
  st.time = c.time;
  for (const auto& p : chain) {
    if (p.id < 0 && std::isinf(p.lo)) continue;
    if (p.id < 0 && std::isinf(p.hi)) continue;
    detail::push_vertex(st.vertices, {p.lo, p.q.slope(p.lo), p.q(p.lo)});
    detail::push_vertex(st.vertices, {p.hi, p.q.slope(p.hi), p.q(p.hi)});
  }
  // The outermost vertices must sit on the tail junctions.
  if (!st.vertices.empty() && chain.size() >= 2) {
    const Piece& l = chain.front();
    const Piece& r = chain.back();
    if (st.vertices.front().x != l.hi)
      st.vertices.insert(st.vertices.begin(), {l.hi, l.q.slope(l.hi), l.q(l.hi)});
    if (st.vertices.back().x != r.lo) st.vertices.push_back({r.lo, r.q.slope(r.lo), r.q(r.lo)});
  }
  return st;
}

enum class Direction { backward, forward };

inline const char* to_string(Direction d) { return d == Direction::backward ? "backward" : "forward"; }

// Shear-and-cut from a fixed base state; each query is independent.
class Evolution {
 public:
  Evolution(FrontState base, Direction dir) : base_(std::move(base)), dir_(dir) {}

  static Evolution backward(const PiecewisePoly& terminal) {
    return {complete_graph(terminal, 1.0), Direction::backward};
  }
  static Evolution forward(const PiecewisePoly& initial, double s) {
    return {complete_graph(initial, s), Direction::forward};
  }

  const FrontState& base() const { return base_; }
  double base_time() const { return base_.time; }
  Direction direction() const { return dir_; }
  double cone_radius() const { return base_.cone_radius(); }

  FrontState at(double t) const {
    check_time(t);
    if (t == base_.time) return base_;
    ShearedCurve c = shear(base_, t);
    c.sense = dir_ == Direction::backward ? Extremum::min : Extremum::max;
    return cut(c);
  }

  // Shocks at time t. Kinks of the base state open into fans at once; a fan
  // narrower than the shear map resolves still looks vertical and is not a
  // shock of the evolution.
  std::vector<ShockPoint> shocks_at(double t) const {
    std::vector<ShockPoint> j = at(t).jumps();
    std::erase_if(j, [&](const ShockPoint& p) {
      const bool opening = dir_ == Direction::backward ? p.v_left < p.v_right : p.v_left > p.v_right;
      const double width = 0.5 * std::abs(t - base_.time) * std::abs(p.v_left - p.v_right);
      return opening && width <= FrontState::kFanResolution * (1.0 + std::abs(p.x));
    });
    return j;
  }

 private:
  void check_time(double t) const {
    const bool ok = dir_ == Direction::backward ? (t > 0.0 && t <= base_.time)
                                                : (t >= base_.time && t <= 1.0);
    if (!ok) throw std::out_of_range("Evolution: time outside the evolution range");
  }

  FrontState base_;
  Direction dir_;
};

struct HeightField {
  std::map<double, PiecewisePoly> slices;
  Direction provenance = Direction::backward;
};

inline HeightField sample_heights(const Evolution& ev, const std::vector<double>& times) {
  HeightField f;
  f.provenance = ev.direction();
  for (double t : times) f.slices.emplace(t, ev.at(t).height_profile());
  return f;
}

}  // namespace ldshape

#endif  // LDSHAPE_BURGERS_HPP_
