#ifndef LDSHAPE_IO_HPP_
#define LDSHAPE_IO_HPP_

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ldshape/burgers.hpp"
#include "ldshape/envelope.hpp"
#include "ldshape/errors.hpp"
#include "ldshape/measures.hpp"
#include "ldshape/metric.hpp"
#include "ldshape/multiwedge.hpp"
#include "ldshape/pwfn.hpp"
#include "ldshape/shocks.hpp"

namespace ldshape::io {

using json = nlohmann::ordered_json;

namespace detail {

inline const json& field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  return j.at(key);
}

inline double number(const json& j, const char* what) {
  if (!j.is_number()) throw ParseError(std::string(what) + ": expected a number");
  return j.get<double>();
}

inline std::vector<double> numbers(const json& j, const char* what) {
  if (!j.is_array()) throw ParseError(std::string(what) + ": expected an array");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(number(v, what));
  return out;
}

template <class F>
auto checked(F&& f) {
  try {
    return f();
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what());
  }
}

}  // namespace detail

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline json to_json(const PiecewisePoly& f) {
  json segs = json::array();
  for (const auto& c : f.segments()) segs.push_back({c[0], c[1], c[2]});
  return {{"breakpoints", f.breakpoints()}, {"segments", segs}};
}

inline PiecewisePoly poly_from_json(const json& j) {
  std::vector<double> br = detail::numbers(detail::field(j, "breakpoints"), "breakpoints");
  const json& s = detail::field(j, "segments");
  if (!s.is_array()) throw ParseError("segments: expected an array");
  std::vector<PiecewisePoly::Coeffs> segs;
  for (const auto& c : s) {
    const auto v = detail::numbers(c, "segment");
    if (v.empty() || v.size() > 3) throw ParseError("segment: expected one to three coefficients");
    segs.push_back({v[0], v.size() > 1 ? v[1] : 0.0, v.size() > 2 ? v[2] : 0.0});
  }
  return detail::checked([&] { return PiecewisePoly(std::move(br), std::move(segs)); });
}

inline json to_json(const ConditioningData& d) {
  json iv = json::array();
  for (const auto& i : d.support.intervals()) iv.push_back({i.a, i.b});
  return {{"intervals", iv}, {"profile", to_json(d.profile)}, {"wedge", {{"z", d.wedge.z}, {"shift", d.wedge.shift}}}};
}

inline ConditioningData conditioning_from_json(const json& j) {
  const json& iv = detail::field(j, "intervals");
  if (!iv.is_array()) throw ParseError("intervals: expected an array");
  std::vector<Interval> ivs;
  for (const auto& p : iv) {
    const auto ab = detail::numbers(p, "interval");
    if (ab.size() != 2) throw ParseError("interval: expected [a, b]");
    ivs.push_back({ab[0], ab[1]});
  }
  ConditioningData d;
  d.support = detail::checked([&] { return IntervalUnion(std::move(ivs)); });
  d.profile = poly_from_json(detail::field(j, "profile"));
  if (j.contains("wedge")) {
    const json& w = j.at("wedge");
    d.wedge = {detail::number(detail::field(w, "z"), "wedge.z"), detail::number(detail::field(w, "shift"), "wedge.shift")};
  }
  return d;
}

inline std::vector<Node> points_from_json(const json& j) {
  if (!j.is_array()) throw ParseError("points: expected an array");
  std::vector<Node> out;
  for (const auto& p : j) out.push_back({detail::number(detail::field(p, "y"), "y"), detail::number(detail::field(p, "f"), "f")});
  return out;
}

inline json to_json(const PathMeasure& mu) {
  json atoms = json::array();
  for (const auto& a : mu.atoms) atoms.push_back({{"t", a.t}, {"x", a.x}, {"rho", a.rho}});
  return {{"atoms", atoms}};
}

inline PathMeasure measure_from_json(const json& j) {
  const json& atoms = detail::field(j, "atoms");
  if (!atoms.is_array()) throw ParseError("atoms: expected an array");
  PathMeasure mu;
  for (const auto& a : atoms)
    mu.atoms.push_back({detail::numbers(detail::field(a, "t"), "t"), detail::numbers(detail::field(a, "x"), "x"),
                        detail::numbers(detail::field(a, "rho"), "rho")});
  detail::checked([&] {
    mu.validate();
    return 0;
  });
  return mu;
}

inline MultiWedgeProblem multiwedge_from_json(const json& j) {
  MultiWedgeProblem p;
  const json& s = detail::field(j, "sources");
  const json& t = detail::field(j, "targets");
  if (!s.is_array() || !t.is_array()) throw ParseError("sources and targets must be arrays");
  for (const auto& v : s) p.sources.push_back({detail::number(detail::field(v, "z"), "z"), detail::number(detail::field(v, "g"), "g")});
  for (const auto& v : t) p.targets.push_back({detail::number(detail::field(v, "y"), "y"), detail::number(detail::field(v, "f"), "f")});
  return p;
}

inline json to_json(const OrderedPartition& part, const MultiWedgeProblem& sorted) {
  json blocks = json::array();
  for (std::size_t z = 0; z < sorted.sources.size(); ++z) {
    json ys = json::array();
    for (std::size_t k = 0; k < part.owner.size(); ++k)
      if (part.owner[k] == static_cast<int>(z)) ys.push_back(sorted.targets[k].y);
    blocks.push_back({{"z", sorted.sources[z].z}, {"targets", ys}});
  }
  return blocks;
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
}

// Writes through a temporary file and a rename.
inline void write_atomic(const std::filesystem::path& path, const std::string& text) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

// Translation from the parabola-centred frame back to the data frame.
struct Offset {
  double z = 0.0;
  double g = 0.0;
};

inline std::string height_slices_csv(const Evolution& ev, const std::vector<double>& times, int samples = 201,
                                     Offset off = {}) {
  std::ostringstream os;
  os << "t,x,value,v_left,v_right,class\n";
  const double c = ev.cone_radius();
  for (double t : times) {
    const FrontState st = ev.at(t);
    std::vector<double> xs;
    for (int i = 0; i < samples; ++i) xs.push_back(-(c + 1.0) + 2.0 * (c + 1.0) * i / (samples - 1));
    for (const auto& v : st.vertices) xs.push_back(v.x);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    for (double x : xs) {
      const double l = st.u_left(x), r = st.u_right(x);
      const bool jump = std::abs(l - r) > FrontState::kJumpTol * (1.0 + std::abs(l) + std::abs(r));
      os << fmt(t) << ',' << fmt(x + off.z) << ',' << fmt(st.height(x) + off.g) << ',' << fmt(l) << ',' << fmt(r) << ','
         << (jump ? to_string(classify(l, r)) : "smooth") << '\n';
    }
  }
  return os.str();
}

inline std::string shocks_csv(const TraceResult& tr, Offset off = {}) {
  std::ostringstream os;
  os << "record_id,t,x,value,v_left,v_right,class\n";
  for (std::size_t i = 0; i < tr.records.size(); ++i)
    for (const auto& s : tr.records[i].samples)
      os << i << ',' << fmt(s.t) << ',' << fmt(s.x + off.z) << ',' << fmt(s.h + off.g) << ',' << fmt(s.v_left) << ','
         << fmt(s.v_right) << ',' << to_string(tr.records[i].cls) << '\n';
  return os.str();
}

inline std::string grid_csv(const GridField& g) {
  std::ostringstream os;
  os << "t,x,h\n";
  const auto& L = g.lattice;
  for (int k = 0; k <= L.n_t; ++k)
    for (int i = 0; i <= L.n_x; ++i) os << fmt(L.t(k)) << ',' << fmt(L.x(i)) << ',' << fmt(g(k, i)) << '\n';
  return os.str();
}

inline std::string measure_csv(const PathMeasure& mu) {
  std::ostringstream os;
  os << "atom_id,t,x,rho\n";
  for (std::size_t a = 0; a < mu.atoms.size(); ++a) {
    const auto& at = mu.atoms[a];
    for (std::size_t k = 0; k < at.t.size(); ++k)
      os << a << ',' << fmt(at.t[k]) << ',' << fmt(at.x[k]) << ','
         << fmt(at.rho[std::min(k, at.rho.size() - 1)]) << '\n';
  }
  return os.str();
}

// Characteristics as straight lines from the base time, each stopped where it
// leaves the solution, and shocks as polylines; time runs upward.
inline std::string characteristics_svg(const Evolution& ev, const TraceResult& tr, int lines = 41, int steps = 200,
                                       Offset off = {}) {
  const double c = ev.cone_radius();
  const double w = 2.0 * (c + 1.0);
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"600\" height=\"400\" viewBox=\""
     << fmt(-(c + 1.0) + off.z) << " 0 " << fmt(w) << " 1\" preserveAspectRatio=\"none\">\n"
     << "<g transform=\"translate(" << fmt(off.z) << ",0)\">\n";
  const auto y = [](double t) { return fmt(1.0 - t); };
  const FrontState& base = ev.base();
  const double s = base.time;
  const bool back = ev.direction() == Direction::backward;
  const double t_end = back ? 0.0 : 1.0;
  std::vector<FrontState> states;
  for (int k = 1; k <= steps; ++k) {
    const double t = s + (t_end - s) * k / steps;
    if (t <= 0.0) break;
    states.push_back(ev.at(t));
  }
  os << "<g stroke=\"#8899aa\" stroke-width=\"1\" vector-effect=\"non-scaling-stroke\" fill=\"none\">\n";
  for (int i = 0; i < lines; ++i) {
    const double x0 = -c + 2.0 * c * i / std::max(1, lines - 1);
    const double u = base.u_right(x0);
    double t_stop = t_end;
    for (std::size_t m = 0; m < states.size(); ++m) {
      const int k = static_cast<int>(m) + 1;
      const FrontState& st = states[m];
      const double t = st.time;
      const double x = x0 + (s - t) * u / 2.0;
      const double scale = 1.0 + std::abs(u);
      if (std::abs(st.u_left(x) - u) > 1e-9 * scale && std::abs(st.u_right(x) - u) > 1e-9 * scale) {
        t_stop = s + (t_end - s) * (k - 1) / steps;
        break;
      }
    }
    const double x1 = x0 + (s - t_stop) * u / 2.0;
    os << "<line x1=\"" << fmt(x0) << "\" y1=\"" << y(s) << "\" x2=\"" << fmt(x1) << "\" y2=\"" << y(t_stop)
       << "\"/>\n";
  }
  os << "</g>\n";
  for (const auto& r : tr.records) {
    const char* colour = r.cls == ShockClass::non_entropy ? "#c0392b" : "#2471a3";
    os << "<polyline stroke=\"" << colour
       << "\" stroke-width=\"2\" vector-effect=\"non-scaling-stroke\" fill=\"none\" points=\"";
    for (std::size_t k = 0; k < r.samples.size(); ++k)
      os << (k ? " " : "") << fmt(r.samples[k].x) << ',' << y(r.samples[k].t);
    os << "\"/>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

}  // namespace ldshape::io

#endif  // LDSHAPE_IO_HPP_
