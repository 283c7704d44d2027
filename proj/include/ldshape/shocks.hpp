#ifndef LDSHAPE_SHOCKS_HPP_
#define LDSHAPE_SHOCKS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "ldshape/burgers.hpp"

namespace ldshape {

enum class ShockClass { entropy, non_entropy, contact };

inline const char* to_string(ShockClass c) {
  switch (c) {
    case ShockClass::entropy: return "entropy";
    case ShockClass::non_entropy: return "non_entropy";
    case ShockClass::contact: return "contact";
  }
  return "unknown";
}

inline ShockClass classify(double v_left, double v_right) {
  if (v_left > v_right) return ShockClass::non_entropy;
  if (v_left < v_right) return ShockClass::entropy;
  return ShockClass::contact;
}

struct ShockSample {
  double t = 0.0;
  double x = 0.0;
  double v_left = 0.0;
  double v_right = 0.0;
  double h = 0.0;
  double jump() const { return v_left - v_right; }
};

// l(t) = p1(t) + sign * sqrt(p2(t)), p1 linear and p2 quadratic in t.
struct ClosedForm {
  std::array<double, 2> p1{};
  std::array<double, 3> p2{};
  double sign = 1.0;
  double max_residual = 0.0;

  double operator()(double t) const {
    const double a = p1[0] + p1[1] * t;
    const double b = p2[0] + t * (p2[1] + t * p2[2]);
    return a + sign * std::sqrt(std::max(b, 0.0));
  }
};

struct ShockRecord {
  std::vector<ShockSample> samples;
  // Mean of |jump|^3 over [samples[k].t, samples[k+1].t].
  std::vector<double> mean_cubed_jump;
  ShockClass cls = ShockClass::contact;
  std::optional<ClosedForm> closed_form;

  double begin() const { return samples.front().t; }
  double end() const { return samples.back().t; }

  double segment_mean(std::size_t k) const {
    if (k < mean_cubed_jump.size()) return mean_cubed_jump[k];
    const double a = std::abs(samples[k].jump()), b = std::abs(samples[k + 1].jump());
    return 0.5 * (a * a * a + b * b * b);
  }
};

struct TraceEvent {
  double t = 0.0;
  int before = 0;
  int after = 0;
};

struct TraceOptions {
  double quad_tol = 1e-10;  // per unit time, on |jump|^3
  double x_tol = 1e-8;      // polyline deviation at panel midpoints
  double min_width = 1e-11; // event localisation
  int initial_panels = 64;
  int max_depth = 48;
};

struct TraceResult {
  std::vector<ShockRecord> records;
  std::vector<TraceEvent> events;
  std::size_t evaluations = 0;
};

using ShockSource = std::function<std::vector<ShockPoint>(double)>;

namespace detail {

class Tracer {
 public:
  Tracer(const ShockSource& src, const TraceOptions& opt) : src_(src), opt_(opt) {}

  TraceResult run(double lo, double hi) {
    std::vector<double> nodes;
    // Geometric panels near lo resolve structure that scales with t.
    const double step = (hi - lo) / opt_.initial_panels;
    if (lo > 0.0 && lo < step) {
      for (double t = lo; t < lo + step; t *= 2.0) nodes.push_back(t);
    } else {
      nodes.push_back(lo);
    }
    for (int k = 1; k <= opt_.initial_panels; ++k) {
      const double t = k == opt_.initial_panels ? hi : lo + k * step;
      if (t > nodes.back()) nodes.push_back(t);
    }
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) refine(nodes[i], nodes[i + 1], 0);
    return assemble(lo);
  }

 private:
  struct Panel {
    double a, b;
    bool event;
    std::vector<double> means;
  };

  const std::vector<ShockPoint>& eval(double t) {
    auto it = cache_.find(t);
    if (it != cache_.end()) return it->second;
    ++evaluations_;
    return cache_.emplace(t, src_(t)).first->second;
  }

  static double speed(const ShockPoint& p) { return -(p.v_left + p.v_right) / 4.0; }
  static double cube(const ShockPoint& p) {
    const double j = std::abs(p.v_left - p.v_right);
    return j * j * j;
  }

  static bool compatible(const std::vector<ShockPoint>& A, double a, const std::vector<ShockPoint>& B,
                         double b) {
    if (A.size() != B.size()) return false;
    const double w = b - a;
    for (std::size_t i = 0; i < A.size(); ++i) {
      if (classify(A[i].v_left, A[i].v_right) != classify(B[i].v_left, B[i].v_right)) return false;
      const double ra = speed(A[i]), rb = speed(B[i]);
      const double pred = A[i].x + w * 0.5 * (ra + rb);
      const double tol = 0.5 * w * std::abs(ra - rb) + 1e-3 * w + 1e-12;
      if (std::abs(B[i].x - pred) > tol) return false;
    }
    return true;
  }

  void refine(double a, double b, int depth) {
    const double m = 0.5 * (a + b);
    const auto& A = eval(a);
    const auto& M = eval(m);
    const auto& B = eval(b);
    const bool ok = compatible(A, a, M, m) && compatible(M, m, B, b);
    if (!ok) {
      if (b - a <= opt_.min_width || depth >= 2 * opt_.max_depth) {
        panels_.push_back({a, b, true, {}});
        return;
      }
      refine(a, m, depth + 1);
      refine(m, b, depth + 1);
      return;
    }
    const double q1 = 0.5 * (a + m), q3 = 0.5 * (m + b);
    const auto& Q1 = eval(q1);
    const auto& Q3 = eval(q3);
    if (!compatible(A, a, Q1, q1) || !compatible(Q1, q1, M, m) || !compatible(M, m, Q3, q3) ||
        !compatible(Q3, q3, B, b)) {
      refine(a, m, depth + 1);
      refine(m, b, depth + 1);
      return;
    }
    double err = 0.0, dev = 0.0;
    std::vector<double> left(A.size()), right(A.size());
    for (std::size_t i = 0; i < A.size(); ++i) {
      const double fa = cube(A[i]), f1 = cube(Q1[i]), fm = cube(M[i]), f3 = cube(Q3[i]),
                   fb = cube(B[i]);
      const double whole = (fa + 4.0 * fm + fb) / 6.0 * (b - a);
      const double l = (fa + 4.0 * f1 + fm) / 6.0 * (m - a);
      const double r = (fm + 4.0 * f3 + fb) / 6.0 * (b - m);
      err = std::max(err, std::abs(l + r - whole));
      left[i] = l / (m - a);
      right[i] = r / (b - m);
      dev = std::max(dev, std::abs(M[i].x - 0.5 * (A[i].x + B[i].x)));
    }
    const bool accurate = err <= 15.0 * opt_.quad_tol * (b - a) && dev <= opt_.x_tol;
    if (!accurate && depth < opt_.max_depth && b - a > opt_.min_width) {
      refine(a, m, depth + 1);
      refine(m, b, depth + 1);
      return;
    }
    panels_.push_back({a, m, false, std::move(left)});
    panels_.push_back({m, b, false, std::move(right)});
  }

  static ShockSample sample(double t, const ShockPoint& p) { return {t, p.x, p.v_left, p.v_right, p.h}; }

  TraceResult assemble(double lo) {
    TraceResult out;
    std::vector<ShockRecord> done;
    std::vector<ShockRecord> open;
    for (const auto& p : eval(lo)) open.push_back({{sample(lo, p)}, {}, classify(p.v_left, p.v_right), {}});
    for (const auto& pn : panels_) {
      const auto& B = eval(pn.b);
      if (!pn.event) {
        for (std::size_t i = 0; i < open.size(); ++i) {
          open[i].samples.push_back(sample(pn.b, B[i]));
          open[i].mean_cubed_jump.push_back(pn.means[i]);
        }
        continue;
      }
      const auto& A = eval(pn.a);
      out.events.push_back({pn.b, static_cast<int>(A.size()), static_cast<int>(B.size())});
      // Carry records whose shock is unaffected by the event.
      std::vector<int> match(B.size(), -1);
      std::vector<int> used(A.size(), 0);
      for (std::size_t j = 0; j < B.size(); ++j) {
        int found = -1, count = 0;
        for (std::size_t i = 0; i < A.size(); ++i) {
          const double ja = A[i].v_left - A[i].v_right, jb = B[j].v_left - B[j].v_right;
          if (std::abs(A[i].x - B[j].x) <= 1e-7 && std::abs(ja - jb) <= 1e-6 * (1.0 + std::abs(ja)) &&
              classify(A[i].v_left, A[i].v_right) == classify(B[j].v_left, B[j].v_right)) {
            found = static_cast<int>(i);
            ++count;
          }
        }
        if (count == 1) {
          match[j] = found;
          ++used[found];
        }
      }
      for (std::size_t j = 0; j < B.size(); ++j)
        if (match[j] >= 0 && used[match[j]] > 1) match[j] = -1;
      std::vector<ShockRecord> next(B.size());
      std::vector<char> carried(open.size(), 0);
      for (std::size_t j = 0; j < B.size(); ++j) {
        if (match[j] >= 0) {
          ShockRecord r = std::move(open[match[j]]);
          carried[match[j]] = 1;
          r.samples.push_back(sample(pn.b, B[j]));
          const double ca = cube(A[match[j]]), cb = cube(B[j]);
          r.mean_cubed_jump.push_back(0.5 * (ca + cb));
          next[j] = std::move(r);
        } else {
          next[j] = {{sample(pn.b, B[j])}, {}, classify(B[j].v_left, B[j].v_right), {}};
        }
      }
      for (std::size_t i = 0; i < open.size(); ++i)
        if (!carried[i]) done.push_back(std::move(open[i]));
      open = std::move(next);
    }
    for (auto& r : open) done.push_back(std::move(r));
    for (auto& r : done)
      if (r.samples.size() >= 2 && r.cls != ShockClass::contact) out.records.push_back(std::move(r));
    std::sort(out.records.begin(), out.records.end(), [](const ShockRecord& p, const ShockRecord& q) {
      if (p.begin() != q.begin()) return p.begin() < q.begin();
      return p.samples.front().x < q.samples.front().x;
    });
    out.evaluations = evaluations_;
    return out;
  }

  const ShockSource& src_;
  TraceOptions opt_;
  std::map<double, std::vector<ShockPoint>> cache_;
  std::vector<Panel> panels_;
  std::size_t evaluations_ = 0;
};

}  // namespace detail

inline TraceResult trace_shocks(const ShockSource& src, double t_lo, double t_hi,
                                const TraceOptions& opt = {}) {
  if (!(t_lo > 0.0 && t_hi > t_lo)) throw std::invalid_argument("trace_shocks: need 0 < t_lo < t_hi");
  return detail::Tracer(src, opt).run(t_lo, t_hi);
}

inline TraceResult trace_shocks(const Evolution& ev, double t_floor = 1e-9, const TraceOptions& opt = {}) {
  const double lo = ev.direction() == Direction::backward ? t_floor : ev.base_time();
  const double hi = ev.direction() == Direction::backward ? ev.base_time() : 1.0;
  return trace_shocks([&ev](double t) { return ev.shocks_at(t); }, lo, hi, opt);
}

// Least-squares fit of l^2 = 2 p1(t) l - q(t); then p2 = p1^2 - q.
inline std::optional<ClosedForm> fit_closed_form(const ShockRecord& r) {
  const auto& s = r.samples;
  if (s.size() < 7) return std::nullopt;
  const Eigen::Index n = static_cast<Eigen::Index>(s.size());
  const double t0 = s.front().t, span = s.back().t - s.front().t;
  if (!(span > 0.0)) return std::nullopt;
  Eigen::MatrixXd A(n, 5);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double tau = (s[i].t - t0) / span, l = s[i].x;
    A.row(i) << 2.0 * l, 2.0 * l * tau, -1.0, -tau, -tau * tau;
    y(i) = l * l;
  }
  const Eigen::VectorXd c = A.completeOrthogonalDecomposition().solve(y);
  // Back to the variable t: tau = (t - t0) / span.
  const double k = 1.0 / span;
  ClosedForm f;
  f.p1 = {c(0) - c(1) * k * t0, c(1) * k};
  const std::array<double, 3> q{c(2) - c(3) * k * t0 + c(4) * k * k * t0 * t0,
                                c(3) * k - 2.0 * c(4) * k * k * t0, c(4) * k * k};
  f.p2 = {f.p1[0] * f.p1[0] - q[0], 2.0 * f.p1[0] * f.p1[1] - q[1], f.p1[1] * f.p1[1] - q[2]};
  const ShockSample& mid = s[s.size() / 2];
  f.sign = mid.x >= f.p1[0] + f.p1[1] * mid.t ? 1.0 : -1.0;
  double res = 0.0;
  for (const auto& p : s) res = std::max(res, std::abs(f(p.t) - p.x));
  f.max_residual = res;
  return f;
}

struct ShockTopology {
  std::size_t records = 0;
  std::size_t non_entropy = 0;
  std::size_t entropy = 0;
  // Topology events in increasing time, by the change in shock count.
  std::size_t drops = 0;
  std::size_t rises = 0;
  // Shocks join at a positive time, or only meet at the origin.
  const char* configuration() const { return drops + rises > 0 ? "merge" : "separate"; }
};

inline ShockTopology summarize(const TraceResult& tr) {
  ShockTopology s;
  s.records = tr.records.size();
  for (const auto& r : tr.records) {
    if (r.cls == ShockClass::non_entropy) ++s.non_entropy;
    if (r.cls == ShockClass::entropy) ++s.entropy;
  }
  for (const auto& e : tr.events) {
    if (e.after < e.before) ++s.drops;
    if (e.after > e.before) ++s.rises;
  }
  return s;
}

struct EvolutionResult {
  HeightField field;
  TraceResult trace;
};

inline EvolutionResult backward_evolve(const PiecewisePoly& f_star, const std::vector<double>& times,
                                       double t_floor = 1e-9, const TraceOptions& opt = {}) {
  const Evolution ev = Evolution::backward(f_star);
  return {sample_heights(ev, times), trace_shocks(ev, t_floor, opt)};
}

inline EvolutionResult forward_evolve(const PiecewisePoly& phi, double s, const std::vector<double>& times,
                                      const TraceOptions& opt = {}) {
  const Evolution ev = Evolution::forward(phi, s);
  return {sample_heights(ev, times), trace_shocks(ev, 0.0, opt)};
}

}  // namespace ldshape

#endif  // LDSHAPE_SHOCKS_HPP_
