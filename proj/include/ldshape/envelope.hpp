#ifndef LDSHAPE_ENVELOPE_HPP_
#define LDSHAPE_ENVELOPE_HPP_

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ldshape/errors.hpp"
#include "ldshape/pwfn.hpp"

namespace ldshape {

// Parabola -(x - z)^2 + shift.
struct Wedge {
  double z = 0.0;
  double shift = 0.0;
  double operator()(double x) const { return -(x - z) * (x - z) + shift; }
  bool operator==(const Wedge&) const = default;
};

struct ConditioningData {
  IntervalUnion support;
  PiecewisePoly profile;
  Wedge wedge;
};

enum class InfiniteReason { none, infeasible, discontinuous, empty_support };

inline const char* to_string(InfiniteReason r) {
  switch (r) {
    case InfiniteReason::none: return "none";
    case InfiniteReason::infeasible: return "infeasible";
    case InfiniteReason::discontinuous: return "discontinuous";
    case InfiniteReason::empty_support: return "empty_support";
  }
  return "unknown";
}

// Energy value, or +infinity tagged with the reason.
class Energy {
 public:
  static Energy of(double v) { return Energy(v, InfiniteReason::none); }
  static Energy infinite(InfiniteReason r) { return Energy(0.0, r); }

  bool finite() const { return reason_ == InfiniteReason::none; }
  InfiniteReason reason() const { return reason_; }
  double value() const { return finite() ? value_ : kInf; }

 private:
  Energy(double v, InfiniteReason r) : value_(v), reason_(r) {}
  double value_;
  InfiniteReason reason_;
};

struct TangentAbscissas {
  double a_minus = 0.0;
  double a_plus = 0.0;
};

// Tangency points a of the lines -2 a x + a^2 through (x0, y0).
inline TangentAbscissas tangent_abscissas(double x0, double y0) {
  double r = x0 * x0 + y0;
  if (r < 0.0) {
    if (r < -1e-12 * std::max(1.0, x0 * x0)) throw InfeasibleError("point below the parabola");
    r = 0.0;
  }
  const double s = std::sqrt(r);
  return {x0 - s, x0 + s};
}

namespace detail {

// Conditioning block in parabola-centred coordinates.
struct Block {
  double a = 0.0, b = 0.0;
  double fa = 0.0, fb = 0.0;
  std::vector<Piece> pieces;
};

inline Quadratic tangent_line(double a) { return {a, -a * a, -2.0 * a, 0.0}; }
inline Quadratic unit_parabola() { return {0.0, 0.0, 0.0, -1.0}; }

inline std::vector<Piece> interpolation_pieces(const std::vector<Block>& blocks) {
  std::vector<Piece> out;
  int id = 0;
  auto add = [&](double lo, double hi, const Quadratic& q) {
    if (hi > lo) out.push_back({lo, hi, q, id++});
  };
  const Block& first = blocks.front();
  const double am0 = tangent_abscissas(first.a, first.fa).a_minus;
  add(-kInf, am0, unit_parabola());
  add(am0, first.a, tangent_line(am0));
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    for (const auto& p : blocks[i].pieces) add(p.lo, p.hi, p.q);
    if (i + 1 == blocks.size()) break;
    const double p = blocks[i].b, fp = blocks[i].fb;
    const double q = blocks[i + 1].a, fq = blocks[i + 1].fa;
    const double ap = tangent_abscissas(p, fp).a_plus;
    const double am = tangent_abscissas(q, fq).a_minus;
    if (ap < am) {
      add(p, ap, tangent_line(ap));
      add(ap, am, unit_parabola());
      add(am, q, tangent_line(am));
    } else {
      add(p, q, Quadratic{p, fp, (fq - fp) / (q - p), 0.0});
    }
  }
  const Block& last = blocks.back();
  const double ap1 = tangent_abscissas(last.b, last.fb).a_plus;
  add(last.b, ap1, tangent_line(ap1));
  add(ap1, kInf, unit_parabola());
  return out;
}

inline PiecewisePoly assemble(const std::vector<Block>& blocks, const Wedge& w) {
  std::vector<Piece> pieces = interpolation_pieces(blocks);
  for (auto& p : pieces) {
    p.lo += w.z;
    p.hi += w.z;
    p.q.c += w.z;
    p.q.a0 += w.shift;
  }
  PieceChain chain(pieces.begin(), pieces.end());
  PiecewisePoly f = PiecewisePoly::from_chain(chain);
  if (f.max_jump() > 1e-9) throw std::logic_error("interpolate: assembled profile is discontinuous");
  return f;
}

inline std::vector<Block> blocks_from(const ConditioningData& d) {
  if (d.support.empty()) throw std::invalid_argument("interpolate: empty support");
  const Wedge& w = d.wedge;
  const PiecewisePoly& f = d.profile;
  const auto& br = f.breakpoints();
  std::vector<Block> blocks;
  for (const auto& iv : d.support.intervals()) {
    for (double b : br)
      if (iv.a <= b && b <= iv.b && !f.continuous_at(b))
        throw DiscontinuousError("interpolate: profile jumps inside the support");
    Block blk;
    blk.a = iv.a - w.z;
    blk.b = iv.b - w.z;
    blk.fa = f(iv.a) - w.shift;
    blk.fb = f(iv.b) - w.shift;
    if (iv.b > iv.a) {
      const std::size_t i0 = f.segment_index(iv.a), i1 = f.segment_left(iv.b);
      for (std::size_t i = i0; i <= i1; ++i) {
        const double lo = std::max(iv.a, f.segment_lo(i)), hi = std::min(iv.b, f.segment_hi(i));
        if (!(hi > lo)) continue;
        const auto& c = f.segments()[i];
        Quadratic q{0.0, c[0], c[1], c[2]};
        q = q.recentered(lo);
        // Move into parabola-centred coordinates.
        q.c -= w.z;
        q.a0 -= w.shift;
        blk.pieces.push_back({lo - w.z, hi - w.z, q, 0});
      }
      // Feasibility on each piece: q(x) + x^2 >= 0.
      for (const auto& p : blk.pieces) {
        const Quadratic gap{p.q.c, p.q.a0 + p.q.c * p.q.c, p.q.a1 + 2.0 * p.q.c, p.q.a2 + 1.0};
        double worst = std::min(gap(p.lo), gap(p.hi));
        if (gap.a2 > 0.0) {
          const double xs = gap.c - gap.a1 / (2.0 * gap.a2);
          if (xs > p.lo && xs < p.hi) worst = std::min(worst, gap(xs));
        }
        if (worst < -1e-12 * std::max(1.0, p.lo * p.lo + p.hi * p.hi))
          throw InfeasibleError("interpolate: profile below the parabola on the support");
      }
    }
    if (blk.fa + blk.a * blk.a < -1e-12 * std::max(1.0, blk.a * blk.a) ||
        blk.fb + blk.b * blk.b < -1e-12 * std::max(1.0, blk.b * blk.b))
      throw InfeasibleError("interpolate: profile below the parabola on the support");
    blocks.push_back(std::move(blk));
  }
  return blocks;
}

}  // namespace detail

// Parabola-constrained interpolation: the minimiser f* of the energy among
// profiles agreeing with f on the support.
inline PiecewisePoly interpolate(const ConditioningData& d) {
  return detail::assemble(detail::blocks_from(d), d.wedge);
}

inline Energy e_bm(const ConditioningData& d) {
  if (d.support.empty()) return Energy::infinite(InfiniteReason::empty_support);
  try {
    return Energy::of(q_bm(interpolate(d)));
  } catch (const InfeasibleError&) {
    return Energy::infinite(InfiniteReason::infeasible);
  } catch (const DiscontinuousError&) {
    return Energy::infinite(InfiniteReason::discontinuous);
  }
}

struct FiniteSolution {
  double value = 0.0;
  PiecewisePoly minimizer;
};

struct Node {
  double y = 0.0;
  double value = 0.0;
};

inline FiniteSolution e_bm_finite(const std::vector<Node>& points) {
  if (points.empty()) throw std::invalid_argument("e_bm_finite: no points");
  std::vector<detail::Block> blocks;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (i > 0 && !(p.y > points[i - 1].y))
      throw std::invalid_argument("e_bm_finite: abscissas must increase strictly");
    if (p.value + p.y * p.y < -1e-12 * std::max(1.0, p.y * p.y))
      throw InfeasibleError("e_bm_finite: point below the parabola");
    blocks.push_back({p.y, p.y, p.value, p.value, {}});
  }
  PiecewisePoly f = detail::assemble(blocks, Wedge{});
  const double v = q_bm(f);
  return {v, std::move(f)};
}

}  // namespace ldshape

#endif  // LDSHAPE_ENVELOPE_HPP_
