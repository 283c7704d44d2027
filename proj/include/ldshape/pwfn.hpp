#ifndef LDSHAPE_PWFN_HPP_
#define LDSHAPE_PWFN_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ldshape {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// a0 + a1*(x - c) + a2*(x - c)^2
struct Quadratic {
  double c = 0.0;
  double a0 = 0.0;
  double a1 = 0.0;
  double a2 = 0.0;

  double operator()(double x) const {
    const double d = x - c;
    return a0 + d * (a1 + d * a2);
  }
  double slope(double x) const { return a1 + 2.0 * a2 * (x - c); }

  Quadratic recentered(double nc) const {
    const double d = nc - c;
    return {nc, a0 + d * (a1 + d * a2), a1 + 2.0 * a2 * d, a2};
  }
  Quadratic operator-(const Quadratic& o) const {
    const Quadratic r = o.recentered(c);
    return {c, a0 - r.a0, a1 - r.a1, a2 - r.a2};
  }
  bool operator==(const Quadratic&) const = default;
};

namespace detail {

// Real roots of a0 + a1*d + a2*d^2 in ascending order. A double root is
// reported once; callers treat it as a touching point.
inline std::vector<double> quadratic_roots(double a0, double a1, double a2) {
  std::vector<double> r;
  const double scale = std::max({std::abs(a0), std::abs(a1), std::abs(a2)});
  if (scale == 0.0) return r;
  if (std::abs(a2) <= 1e-14 * scale) {
    if (a1 != 0.0) r.push_back(-a0 / a1);
    return r;
  }
  const double disc = a1 * a1 - 4.0 * a2 * a0;
  if (disc < -1e-14 * a1 * a1) return r;
  if (disc <= 1e-14 * a1 * a1) {
    r.push_back(-a1 / (2.0 * a2));
    return r;
  }
  const double s = std::sqrt(disc);
  const double q = -0.5 * (a1 + std::copysign(s, a1));
  double x1 = q / a2;
  double x2 = q != 0.0 ? a0 / q : -x1;
  if (x1 > x2) std::swap(x1, x2);
  r.push_back(x1);
  if (x2 != x1) r.push_back(x2);
  return r;
}

inline double probe_point(double lo, double hi) {
  if (std::isinf(lo) && std::isinf(hi)) return 0.0;
  if (std::isinf(lo)) return hi - 1.0 - std::abs(hi);
  if (std::isinf(hi)) return lo + 1.0 + std::abs(lo);
  return 0.5 * (lo + hi);
}

}  // namespace detail

// A quadratic restricted to [lo, hi]; either end may be infinite.
struct Piece {
  double lo = -kInf;
  double hi = kInf;
  Quadratic q;
  int id = 0;
};

using PieceChain = std::vector<Piece>;

enum class Extremum { min, max };

namespace detail {

inline void push_piece(PieceChain& out, const Piece& p) {
  if (!(p.hi > p.lo)) return;
  if (!out.empty() && out.back().id == p.id && out.back().hi == p.lo) {
    out.back().hi = p.hi;
    return;
  }
  out.push_back(p);
}

inline bool better(double a, double b, Extremum e) {
  return e == Extremum::min ? a < b : a > b;
}

// Pointwise extremum of two chains; where only one is defined it wins.
inline PieceChain merge_chains(const PieceChain& A, const PieceChain& B,
                               Extremum e) {
  std::vector<double> cuts;
  cuts.reserve(2 * (A.size() + B.size()));
  for (const auto& p : A) { cuts.push_back(p.lo); cuts.push_back(p.hi); }
  for (const auto& p : B) { cuts.push_back(p.lo); cuts.push_back(p.hi); }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  PieceChain out;
  std::size_t ia = 0, ib = 0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double lo = cuts[k], hi = cuts[k + 1];
    const double mid = probe_point(lo, hi);
    while (ia < A.size() && A[ia].hi <= lo) ++ia;
    while (ib < B.size() && B[ib].hi <= lo) ++ib;
    const Piece* pa = (ia < A.size() && A[ia].lo <= mid && mid <= A[ia].hi) ? &A[ia] : nullptr;
    const Piece* pb = (ib < B.size() && B[ib].lo <= mid && mid <= B[ib].hi) ? &B[ib] : nullptr;
    if (!pa && !pb) continue;
    if (!pa || !pb) {
      Piece p = pa ? *pa : *pb;
      p.lo = lo;
      p.hi = hi;
      push_piece(out, p);
      continue;
    }
    const Quadratic d = pa->q.recentered(mid) - pb->q.recentered(mid);
    std::vector<double> splits{lo};
    for (double r : quadratic_roots(d.a0, d.a1, d.a2)) {
      const double x = mid + r;
      if (x > lo && x < hi) splits.push_back(x);
    }
    splits.push_back(hi);
    for (std::size_t s = 0; s + 1 < splits.size(); ++s) {
      const double a = splits[s], b = splits[s + 1];
      const double m = probe_point(a, b);
      const double va = pa->q(m), vb = pb->q(m);
      const Piece* w;
      if (better(va, vb, e)) w = pa;
      else if (better(vb, va, e)) w = pb;
      else w = pa->id <= pb->id ? pa : pb;
      Piece p = *w;
      p.lo = a;
      p.hi = b;
      push_piece(out, p);
    }
  }
  return out;
}

// Removes pieces narrower than tol by moving the shared boundary.
inline void drop_slivers(PieceChain& c, double tol) {
  if (c.size() < 3) return;
  PieceChain out;
  out.reserve(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Piece& p = c[i];
    const bool interior = i > 0 && i + 1 < c.size() && c[i - 1].hi == p.lo &&
                          c[i + 1].lo == p.hi;
    if (interior && p.hi - p.lo <= tol * (1.0 + std::abs(p.lo))) {
      const double m = 0.5 * (p.lo + p.hi);
      out.back().hi = m;
      c[i + 1].lo = m;
      continue;
    }
    out.push_back(p);
  }
  c = std::move(out);
}

}  // namespace detail

// Lower or upper envelope of partial quadratics, as a sorted chain.
inline PieceChain extremal_chain(const std::vector<Piece>& pieces, Extremum e) {
  if (pieces.empty()) return {};
  std::vector<PieceChain> level;
  level.reserve(pieces.size());
  for (const auto& p : pieces)
    if (p.hi > p.lo) level.push_back({p});
  if (level.empty()) return {};
  while (level.size() > 1) {
    std::vector<PieceChain> next;
    next.reserve((level.size() + 1) / 2);
    for (std::size_t i = 0; i + 1 < level.size(); i += 2)
      next.push_back(detail::merge_chains(level[i], level[i + 1], e));
    if (level.size() % 2) next.push_back(std::move(level.back()));
    level = std::move(next);
  }
  detail::drop_slivers(level.front(), 1e-13);
  return level.front();
}

struct Jump {
  double x = 0.0;
  double left = 0.0;
  double right = 0.0;
};

// Piecewise d0 + d1*x with possible jumps at the breakpoints.
class PiecewiseLinear {
 public:
  using Coeffs = std::array<double, 2>;

  PiecewiseLinear() : segments_{Coeffs{0.0, 0.0}} {}
  PiecewiseLinear(std::vector<double> breaks, std::vector<Coeffs> segs)
      : breaks_(std::move(breaks)), segments_(std::move(segs)) {
    if (segments_.size() != breaks_.size() + 1)
      throw std::invalid_argument("PiecewiseLinear: need one more segment than breakpoints");
  }

  const std::vector<double>& breakpoints() const { return breaks_; }
  const std::vector<Coeffs>& segments() const { return segments_; }

  double left(double x) const { return at(segment_left(x), x); }
  double right(double x) const { return at(segment_right(x), x); }
  double operator()(double x) const { return right(x); }

  std::vector<Jump> jumps(double tol = 0.0) const {
    std::vector<Jump> out;
    for (std::size_t i = 0; i < breaks_.size(); ++i) {
      const double b = breaks_[i];
      const double l = at(i, b), r = at(i + 1, b);
      if (std::abs(l - r) > tol) out.push_back({b, l, r});
    }
    return out;
  }

 private:
  static double eval(const Coeffs& c, double x) { return c[0] + c[1] * x; }
  double at(std::size_t i, double x) const { return eval(segments_[i], x); }
  std::size_t segment_left(double x) const {
    return static_cast<std::size_t>(std::lower_bound(breaks_.begin(), breaks_.end(), x) - breaks_.begin());
  }
  std::size_t segment_right(double x) const {
    return static_cast<std::size_t>(std::upper_bound(breaks_.begin(), breaks_.end(), x) - breaks_.begin());
  }

  std::vector<double> breaks_;
  std::vector<Coeffs> segments_;
};

// Continuous function c0 + c1*x + c2*x^2 per segment; the first and last
// segments are the unbounded tails.
class PiecewisePoly {
 public:
  using Coeffs = std::array<double, 3>;

  // -(x - z)^2 / t + g
  static Coeffs dirichlet(double t = 1.0, double z = 0.0, double g = 0.0) {
    return {-z * z / t + g, 2.0 * z / t, -1.0 / t};
  }

  PiecewisePoly() : segments_{dirichlet()} {}
  PiecewisePoly(std::vector<double> breaks, std::vector<Coeffs> segs)
      : breaks_(std::move(breaks)), segments_(std::move(segs)) {
    check_shape();
    const double j = max_jump();
    if (!(j <= 0.0)) throw std::invalid_argument("PiecewisePoly: discontinuous at a breakpoint");
  }

  // Skips the continuity check; used for raw input profiles.
  static PiecewisePoly unchecked(std::vector<double> breaks, std::vector<Coeffs> segs) {
    PiecewisePoly p;
    p.breaks_ = std::move(breaks);
    p.segments_ = std::move(segs);
    p.check_shape();
    return p;
  }

  static PiecewisePoly parabola(double t = 1.0, double z = 0.0, double g = 0.0) {
    return PiecewisePoly({}, {dirichlet(t, z, g)});
  }

  // Envelope chain covering the whole line, as produced by extremal_chain.
  static PiecewisePoly from_chain(const PieceChain& chain) {
    if (chain.empty() || !std::isinf(chain.front().lo) || !std::isinf(chain.back().hi))
      throw std::invalid_argument("PiecewisePoly: chain does not cover the real line");
    std::vector<double> breaks;
    std::vector<Coeffs> segs;
    for (std::size_t i = 0; i < chain.size(); ++i) {
      if (i > 0 && chain[i].lo != chain[i - 1].hi)
        throw std::invalid_argument("PiecewisePoly: chain has a gap");
      const Quadratic g = chain[i].q.recentered(0.0);
      const Coeffs c{g.a0, g.a1, g.a2};
      if (!segs.empty() && segs.back() == c) continue;
      if (i > 0) breaks.push_back(chain[i].lo);
      segs.push_back(c);
    }
    PiecewisePoly p;
    p.breaks_ = std::move(breaks);
    p.segments_ = std::move(segs);
    return p;
  }

  const std::vector<double>& breakpoints() const { return breaks_; }
  const std::vector<Coeffs>& segments() const { return segments_; }
  const Coeffs& left_tail() const { return segments_.front(); }
  const Coeffs& right_tail() const { return segments_.back(); }

  double operator()(double x) const { return eval(segments_[segment_index(x)], x); }
  double left_value(double x) const { return eval(segments_[segment_left(x)], x); }

  // Segment i covers [breaks[i-1], breaks[i]].
  std::size_t segment_index(double x) const {
    return static_cast<std::size_t>(std::upper_bound(breaks_.begin(), breaks_.end(), x) - breaks_.begin());
  }
  std::size_t segment_left(double x) const {
    return static_cast<std::size_t>(std::lower_bound(breaks_.begin(), breaks_.end(), x) - breaks_.begin());
  }
  double segment_lo(std::size_t i) const { return i == 0 ? -kInf : breaks_[i - 1]; }
  double segment_hi(std::size_t i) const { return i == breaks_.size() ? kInf : breaks_[i]; }

  PiecewiseLinear derivative() const {
    std::vector<PiecewiseLinear::Coeffs> d;
    d.reserve(segments_.size());
    for (const auto& c : segments_) d.push_back({c[1], 2.0 * c[2]});
    return {breaks_, std::move(d)};
  }

  std::vector<Piece> pieces(int id_base = 0) const {
    std::vector<Piece> out;
    out.reserve(segments_.size());
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      const auto& c = segments_[i];
      out.push_back({segment_lo(i), segment_hi(i), Quadratic{0.0, c[0], c[1], c[2]},
                     id_base + static_cast<int>(i)});
    }
    return out;
  }

  // Largest relative value mismatch across breakpoints.
  double max_jump() const {
    double worst = 0.0;
    for (std::size_t i = 0; i < breaks_.size(); ++i) {
      const double b = breaks_[i];
      const double l = eval(segments_[i], b), r = eval(segments_[i + 1], b);
      const double d = std::abs(l - r) - kContinuityTol * std::max({1.0, std::abs(l), std::abs(r)});
      worst = std::max(worst, d);
    }
    return worst;
  }
  bool continuous_at(double b) const {
    const auto it = std::lower_bound(breaks_.begin(), breaks_.end(), b);
    if (it == breaks_.end() || *it != b) return true;
    const std::size_t i = static_cast<std::size_t>(it - breaks_.begin());
    const double l = eval(segments_[i], b), r = eval(segments_[i + 1], b);
    return std::abs(l - r) <= kContinuityTol * std::max({1.0, std::abs(l), std::abs(r)});
  }

  bool has_tails(const Coeffs& p) const { return left_tail() == p && right_tail() == p; }

  // Radius outside of which the function equals its (common) tail.
  double support_radius() const {
    if (breaks_.empty()) return 0.0;
    std::size_t first = 0, last = breaks_.size() - 1;
    while (first < breaks_.size() && segments_[first + 1] == segments_.front()) ++first;
    while (last > 0 && segments_[last] == segments_.back()) --last;
    if (first >= breaks_.size()) return 0.0;
    return std::max(std::abs(breaks_[first]), std::abs(breaks_[std::max(first, last)]));
  }

  bool operator==(const PiecewisePoly&) const = default;

  static double eval(const Coeffs& c, double x) { return c[0] + x * (c[1] + x * c[2]); }

  static constexpr double kContinuityTol = 1e-12;

 private:
  void check_shape() const {
    if (segments_.size() != breaks_.size() + 1)
      throw std::invalid_argument("PiecewisePoly: need one more segment than breakpoints");
    for (std::size_t i = 0; i < breaks_.size(); ++i) {
      if (!std::isfinite(breaks_[i])) throw std::invalid_argument("PiecewisePoly: non-finite breakpoint");
      if (i > 0 && !(breaks_[i] > breaks_[i - 1]))
        throw std::invalid_argument("PiecewisePoly: breakpoints must increase strictly");
    }
    for (const auto& c : segments_)
      for (double v : c)
        if (!std::isfinite(v)) throw std::invalid_argument("PiecewisePoly: non-finite coefficient");
  }

  std::vector<double> breaks_;
  std::vector<Coeffs> segments_;
};

struct Interval {
  double a = 0.0;
  double b = 0.0;
  bool operator==(const Interval&) const = default;
};

class IntervalUnion {
 public:
  IntervalUnion() = default;
  explicit IntervalUnion(std::vector<Interval> iv) : intervals_(std::move(iv)) {
    for (std::size_t i = 0; i < intervals_.size(); ++i) {
      const auto& v = intervals_[i];
      if (!std::isfinite(v.a) || !std::isfinite(v.b) || v.a > v.b)
        throw std::invalid_argument("IntervalUnion: need finite a <= b");
      if (i > 0 && !(intervals_[i - 1].b < v.a))
        throw std::invalid_argument("IntervalUnion: intervals must be sorted and disjoint");
    }
  }
  static IntervalUnion points(const std::vector<double>& ys) {
    std::vector<Interval> iv;
    for (double y : ys) iv.push_back({y, y});
    return IntervalUnion(std::move(iv));
  }

  const std::vector<Interval>& intervals() const { return intervals_; }
  bool empty() const { return intervals_.empty(); }
  std::size_t size() const { return intervals_.size(); }
  bool contains(double x) const {
    for (const auto& v : intervals_)
      if (v.a <= x && x <= v.b) return true;
    return false;
  }

 private:
  std::vector<Interval> intervals_;
};

namespace detail {

// (1/4) * integral over [a, b] of (phi')^2 - (tail')^2 for one segment,
// with tail' = -2 (x - z).
inline double energy_density_integral(const PiecewisePoly::Coeffs& c, double a, double b,
                                      double z) {
  const double m = 0.5 * (a + b), w = 0.5 * (b - a);
  const double p0 = c[1] + 2.0 * c[2] * m;
  const double q0 = -2.0 * (m - z);
  const double p1 = 2.0 * c[2];
  const double lead = (p0 - q0) * (p0 + q0);
  return 0.25 * (2.0 * w * lead + (2.0 / 3.0) * w * w * w * (p1 * p1 - 4.0));
}

}  // namespace detail

// (1/4) * integral of ((phi')^2 - 4 (x - z)^2), where the common tail of
// phi is -(x - z)^2 + g.
inline double q_bm(const PiecewisePoly& phi) {
  const auto& tail = phi.left_tail();
  if (tail != phi.right_tail() || tail[2] != -1.0)
    throw std::invalid_argument("q_bm: tails must be a common unit parabola");
  const double z = 0.5 * tail[1];
  const auto& br = phi.breakpoints();
  const auto& seg = phi.segments();
  double total = 0.0;
  for (std::size_t i = 1; i + 1 < seg.size(); ++i)
    total += detail::energy_density_integral(seg[i], br[i - 1], br[i], z);
  return total;
}

inline PiecewisePoly upper_envelope(const PiecewisePoly& f, const PiecewisePoly& g) {
  if (f.left_tail() != g.left_tail() || f.right_tail() != g.right_tail())
    throw std::invalid_argument("upper_envelope: tails differ");
  std::vector<Piece> all = f.pieces(0);
  const auto gp = g.pieces(static_cast<int>(f.segments().size()));
  all.insert(all.end(), gp.begin(), gp.end());
  return PiecewisePoly::from_chain(extremal_chain(all, Extremum::max));
}

}  // namespace ldshape

#endif  // LDSHAPE_PWFN_HPP_
