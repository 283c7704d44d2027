#ifndef LDSHAPE_MULTIWEDGE_HPP_
#define LDSHAPE_MULTIWEDGE_HPP_

#include <algorithm>
#include <cmath>
#include <compare>
#include <map>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "ldshape/envelope.hpp"
#include "ldshape/errors.hpp"
#include "ldshape/measures.hpp"
#include "ldshape/metric.hpp"
#include "ldshape/pwfn.hpp"

namespace ldshape {

struct SourcePoint {
  double z = 0.0;
  double g = 0.0;
};

struct MultiWedgeProblem {
  std::vector<SourcePoint> sources;
  std::vector<Node> targets;

  // Largest wedge value max_z -(y - z)^2 + g(z) at y.
  double wedge_max(double y) const {
    double v = -kInf;
    for (const auto& s : sources) v = std::max(v, -(y - s.z) * (y - s.z) + s.g);
    return v;
  }

  // Sorted copy; throws on duplicates or infeasible data.
  MultiWedgeProblem normalized() const {
    if (sources.empty() || targets.empty()) throw std::invalid_argument("MultiWedgeProblem: need sources and targets");
    MultiWedgeProblem p = *this;
    std::sort(p.sources.begin(), p.sources.end(), [](const SourcePoint& a, const SourcePoint& b) { return a.z < b.z; });
    std::sort(p.targets.begin(), p.targets.end(), [](const Node& a, const Node& b) { return a.y < b.y; });
    for (std::size_t i = 1; i < p.sources.size(); ++i)
      if (p.sources[i].z == p.sources[i - 1].z) throw std::invalid_argument("MultiWedgeProblem: repeated source");
    for (std::size_t i = 1; i < p.targets.size(); ++i)
      if (p.targets[i].y == p.targets[i - 1].y) throw std::invalid_argument("MultiWedgeProblem: repeated target");
    for (const auto& t : p.targets)
      if (!(t.value > p.wedge_max(t.y))) throw InfeasibleError("MultiWedgeProblem: target not above every wedge");
    return p;
  }
};

// owner[k] is the source index of the k-th target in increasing order; it is
// nondecreasing in k.
struct OrderedPartition {
  std::vector<int> owner;
  bool operator==(const OrderedPartition&) const = default;
  auto operator<=>(const OrderedPartition&) const = default;
};

struct PartitionEnergy {
  OrderedPartition partition;
  double value = 0.0;
  bool admissible = true;   // no wedge profile exceeds f on Y
  double violation = 0.0;   // max over Y of max_z phi_z(y) - f(y), clipped at 0
};

struct MultiWedgeResult {
  double value = 0.0;
  OrderedPartition partition;
  // Per sorted source: its profile, or nothing when its block is empty.
  std::vector<std::optional<PiecewisePoly>> profiles;
  std::vector<PartitionEnergy> energies;
  MultiWedgeProblem problem;  // sorted form
  bool conjectural = true;
  // Set when some partition with lower energy was rejected by the bound on Y.
  bool flagged = false;
};

inline constexpr std::size_t kMaxMultiWedgeSize = 22;

// phi(x - z) + g as a new profile.
inline PiecewisePoly shifted(const PiecewisePoly& phi, double z, double g) {
  std::vector<double> br = phi.breakpoints();
  for (double& b : br) b += z;
  std::vector<PiecewisePoly::Coeffs> segs;
  for (const auto& c : phi.segments())
    segs.push_back({c[0] - c[1] * z + c[2] * z * z + g, c[1] - 2.0 * c[2] * z, c[2]});
  return PiecewisePoly::unchecked(std::move(br), std::move(segs));
}

namespace detail {

inline void enumerate_partitions(int n_targets, int n_sources, std::vector<int>& cur,
                                 std::vector<OrderedPartition>& out) {
  if (static_cast<int>(cur.size()) == n_targets) {
    out.push_back({cur});
    return;
  }
  const int from = cur.empty() ? 0 : cur.back();
  for (int z = from; z < n_sources; ++z) {
    cur.push_back(z);
    enumerate_partitions(n_targets, n_sources, cur, out);
    cur.pop_back();
  }
}

struct BlockSolve {
  FiniteSolution sol;
  std::vector<double> at_targets;  // phi_z(y) + g(z) on all targets
};

}  // namespace detail

inline std::vector<OrderedPartition> ordered_partitions(std::size_t n_targets, std::size_t n_sources) {
  std::vector<OrderedPartition> out;
  std::vector<int> cur;
  detail::enumerate_partitions(static_cast<int>(n_targets), static_cast<int>(n_sources), cur, out);
  return out;
}

inline MultiWedgeResult multi_rate(const MultiWedgeProblem& input, double tol = 1e-12) {
  const MultiWedgeProblem p = input.normalized();
  const std::size_t nz = p.sources.size(), ny = p.targets.size();
  if (nz + ny > kMaxMultiWedgeSize) throw std::invalid_argument("multi_rate: problem too large to enumerate");

  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, detail::BlockSolve> cache;
  const auto solve = [&](std::size_t z, std::size_t i, std::size_t j) -> const detail::BlockSolve& {
    const auto key = std::make_tuple(z, i, j);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    const auto& s = p.sources[z];
    std::vector<Node> pts;
    for (std::size_t k = i; k < j; ++k) pts.push_back({p.targets[k].y - s.z, p.targets[k].value - s.g});
    detail::BlockSolve b{e_bm_finite(pts), {}};
    for (const auto& t : p.targets) b.at_targets.push_back(b.sol.minimizer(t.y - s.z) + s.g);
    return cache.emplace(key, std::move(b)).first->second;
  };

  MultiWedgeResult r;
  r.problem = p;
  std::optional<std::size_t> best;
  std::optional<std::size_t> best_any;
  for (auto& part : ordered_partitions(ny, nz)) {
    PartitionEnergy e{part, 0.0, true, 0.0};
    std::vector<double> top(ny, -kInf);
    std::size_t k = 0;
    for (std::size_t z = 0; z < nz; ++z) {
      std::size_t j = k;
      while (j < ny && part.owner[j] == static_cast<int>(z)) ++j;
      if (j > k) {
        const auto& b = solve(z, k, j);
        e.value += b.sol.value;
        for (std::size_t m = 0; m < ny; ++m) top[m] = std::max(top[m], b.at_targets[m]);
      } else {
        for (std::size_t m = 0; m < ny; ++m) {
          const double d = p.targets[m].y - p.sources[z].z;
          top[m] = std::max(top[m], -d * d + p.sources[z].g);
        }
      }
      k = j;
    }
    for (std::size_t m = 0; m < ny; ++m) {
      const double f = p.targets[m].value;
      const double excess = top[m] - f;
      if (excess > tol * std::max(1.0, std::abs(f))) e.admissible = false;
      e.violation = std::max(e.violation, std::max(0.0, excess));
    }
    r.energies.push_back(std::move(e));
    const std::size_t idx = r.energies.size() - 1;
    const auto better = [&](std::optional<std::size_t> cur) {
      return !cur || r.energies[idx].value < r.energies[*cur].value;
    };
    if (better(best_any)) best_any = idx;
    if (r.energies[idx].admissible && better(best)) best = idx;
  }
  if (!best) throw InfeasibleError("multi_rate: every ordered partition violates the upper bound");
  const PartitionEnergy& win = r.energies[*best];
  r.value = win.value;
  r.partition = win.partition;
  r.flagged = r.energies[*best_any].value < win.value;
  std::size_t k = 0;
  for (std::size_t z = 0; z < nz; ++z) {
    std::size_t j = k;
    while (j < ny && win.partition.owner[j] == static_cast<int>(z)) ++j;
    if (j > k) r.profiles.push_back(shifted(solve(z, k, j).sol.minimizer, p.sources[z].z, p.sources[z].g));
    else r.profiles.push_back(std::nullopt);
    k = j;
  }
  return r;
}

struct ConditionCheck {
  bool pass = true;
  double residual = 0.0;
};

struct DecompositionReport {
  ConditionCheck disjoint;  // parts have disjoint supports
  ConditionCheck matches;   // each part reaches f on its own targets
  ConditionCheck bounded;   // no part exceeds f on any target
  bool exact = true;        // every part evaluated by the fan formula
  bool pass() const { return disjoint.pass && matches.pass && bounded.pass; }
};

namespace detail {

// Whether two atoms share a point, including end points.
inline bool touching(const PathAtom& p, const PathAtom& q) {
  const double lo = std::max(p.begin(), q.begin()), hi = std::min(p.end(), q.end());
  if (lo > hi) return false;
  std::vector<double> ts{lo, hi};
  for (double t : p.t)
    if (t > lo && t < hi) ts.push_back(t);
  for (double t : q.t)
    if (t > lo && t < hi) ts.push_back(t);
  std::sort(ts.begin(), ts.end());
  int sign = 0;
  for (double t : ts) {
    const double d = p.position(t) - q.position(t);
    if (d == 0.0) return true;
    const int s = d > 0.0 ? 1 : -1;
    if (sign != 0 && s != sign) return true;
    sign = s;
  }
  return false;
}

// Straight atoms that a shock trace stopped just above t = 0 are extended to
// the origin.
inline constexpr double kTraceStart = 1e-6;

inline PathMeasure closed_at_origin(PathMeasure mu) {
  for (auto& a : mu.atoms) {
    if (a.t.front() == 0.0 || a.t.front() > kTraceStart || a.t.back() != 1.0) continue;
    const double v = a.x.back();
    bool straight = true;
    for (std::size_t k = 0; k < a.t.size(); ++k)
      straight = straight && std::abs(a.x[k] - v * a.t[k]) <= 1e-12 * (1.0 + std::abs(v));
    if (!straight) continue;
    a.t.front() = 0.0;
    a.x.front() = 0.0;
  }
  return mu;
}

// e_{mu}(0, z; 1, y) + g.
class PartHeight {
 public:
  PartHeight(const PathMeasure& mu, const SourcePoint& s, const LatticeSpec& L) : src_(s) {
    PathMeasure centred = mu;
    for (auto& a : centred.atoms)
      for (double& x : a.x) x -= s.z;
    try {
      rays_ = fan_rays(closed_at_origin(centred));
      exact_ = true;
    } catch (const std::invalid_argument&) {
      exact_ = false;
      LatticeSpec shifted_lattice = L;
      shifted_lattice.t_max = 1.0;
      field_ = grid_height(mu, shifted_lattice, Source{0.0, s.z});
    }
  }

  bool exact() const { return exact_; }

  double operator()(double y) const {
    if (exact_) return fan_height(rays_, 1.0)(y - src_.z) + src_.g;
    const auto& L = field_->lattice;
    return interp(field_->level(L.n_t), L, y) + src_.g;
  }

 private:
  SourcePoint src_;
  bool exact_ = false;
  std::vector<Ray> rays_;
  std::optional<GridField> field_;
};

}  // namespace detail

// Checks the decomposition conditions for one measure per sorted source.
inline DecompositionReport verify_decomposition(const std::vector<PathMeasure>& parts, const MultiWedgeProblem& input,
                                                const OrderedPartition& partition, const LatticeSpec& lattice = {},
                                                double tol_exact = 1e-9, double tol_grid_c = 2.0) {
  const MultiWedgeProblem p = input.normalized();
  if (parts.size() != p.sources.size()) throw std::invalid_argument("verify_decomposition: one measure per source");
  if (partition.owner.size() != p.targets.size())
    throw std::invalid_argument("verify_decomposition: partition does not match the targets");
  DecompositionReport r;
  for (std::size_t a = 0; a < parts.size(); ++a)
    for (std::size_t b = a + 1; b < parts.size(); ++b)
      for (const auto& pa : parts[a].atoms)
        for (const auto& pb : parts[b].atoms)
          if (detail::touching(pa, pb)) {
            r.disjoint.pass = false;
            r.disjoint.residual = 1.0;
          }
  std::vector<detail::PartHeight> heights;
  for (std::size_t z = 0; z < parts.size(); ++z) {
    heights.emplace_back(parts[z], p.sources[z], lattice);
    r.exact = r.exact && heights.back().exact();
  }
  const double tol = r.exact ? tol_exact : tol_grid_c * (lattice.dx() + lattice.dt());
  for (std::size_t k = 0; k < p.targets.size(); ++k) {
    const auto& t = p.targets[k];
    const std::size_t own = static_cast<std::size_t>(partition.owner[k]);
    const double d = std::abs(heights[own](t.y) - t.value);
    r.matches.residual = std::max(r.matches.residual, d);
    for (const auto& h : heights) r.bounded.residual = std::max(r.bounded.residual, h(t.y) - t.value);
  }
  r.bounded.residual = std::max(r.bounded.residual, 0.0);
  r.matches.pass = r.matches.residual <= tol;
  r.bounded.pass = r.bounded.residual <= tol;
  return r;
}

}  // namespace ldshape

#endif  // LDSHAPE_MULTIWEDGE_HPP_
