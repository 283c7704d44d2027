#ifndef LDSHAPE_CLI_HPP_
#define LDSHAPE_CLI_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ldshape/burgers.hpp"
#include "ldshape/corpus.hpp"
#include "ldshape/envelope.hpp"
#include "ldshape/errors.hpp"
#include "ldshape/io.hpp"
#include "ldshape/measures.hpp"
#include "ldshape/metric.hpp"
#include "ldshape/multiwedge.hpp"
#include "ldshape/pwfn.hpp"
#include "ldshape/shocks.hpp"

namespace ldshape::cli {

using io::json;

inline constexpr const char* kVersion = "1.0.0";

enum ExitCode : int { ok = 0, parse_error = 2, infeasible = 3, check_failed = 4 };

struct Flags {
  std::string spec;
  std::string out = "out";
  std::string times = "0.25,0.5,0.75,1";
  int nt = 100;
  int nx = 200;
  double tmin = 0.0;  // 0 uses one time step
  double xmax = 0.0;  // 0 uses the cone radius plus one
  int maxhop = 0;
  unsigned long long seed = 7;
  int n = 100;
  double tol_identity = 1e-6;
  double tol_oracle_c = 0.0;  // 0 calibrates on the single wedge
  bool json_only = false;
  double t_floor = 1e-9;
};

inline constexpr double kFluxTol = 1e-8;
inline constexpr double kCalibrationFactor = 10.0;

struct Outcome {
  int code = ok;
  json report;
};

inline std::vector<double> parse_times(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double t = 0.0;
    try {
      t = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ParseError("times: cannot parse '" + item + "'");
    }
    if (used != item.size() && item.find_first_not_of(" \t", used) != std::string::npos)
      throw ParseError("times: cannot parse '" + item + "'");
    if (!(t > 0.0 && t <= 1.0)) throw ParseError("times: values must lie in (0, 1]");
    out.push_back(t);
  }
  out.push_back(1.0);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline LatticeSpec lattice_for(const Flags& f, double cone, int scale = 1) {
  LatticeSpec L;
  L.n_t = f.nt * scale;
  L.n_x = f.nx * scale;
  L.t_min = f.tmin > 0.0 ? f.tmin : 1.0 / L.n_t;
  L.t_max = 1.0;
  const double xm = f.xmax > 0.0 ? f.xmax : cone + 1.0;
  L.x_min = -xm;
  L.x_max = xm;
  L.max_hop = f.maxhop;
  return L;
}

inline json lattice_json(const LatticeSpec& L) {
  return {{"nt", L.n_t}, {"nx", L.n_x}, {"t_min", L.t_min}, {"x_max", L.x_max}, {"dt", L.dt()}, {"dx", L.dx()}};
}

// Solved problem in the parabola-centred frame, plus the data-frame measure.
struct SolveRun {
  Energy energy = Energy::infinite(InfiniteReason::empty_support);
  Wedge wedge;
  std::optional<PiecewisePoly> f_star;
  std::optional<PiecewisePoly> centred;
  std::optional<Evolution> evolution;
  TraceResult trace;
  HeightField field;
  PathMeasure mu_star;
  SplitMeasure split;
  EntropyProduction entp;
  double rate = 0.0;
  double identity_residual = 0.0;
  double key_residual = 0.0;
  double flux_residual = 0.0;
};

inline SolveRun solve_problem(const json& spec, const std::vector<double>& times, double t_floor) {
  SolveRun r;
  if (spec.contains("points")) {
    FiniteSolution s = e_bm_finite(io::points_from_json(spec.at("points")));
    r.energy = Energy::of(s.value);
    r.f_star = std::move(s.minimizer);
  } else {
    const ConditioningData d = io::conditioning_from_json(spec);
    r.wedge = d.wedge;
    r.energy = e_bm(d);
    if (!r.energy.finite()) return r;
    r.f_star = interpolate(d);
  }
  r.centred = shifted(*r.f_star, -r.wedge.z, -r.wedge.shift);
  r.evolution.emplace(Evolution::backward(*r.centred));
  r.field = sample_heights(*r.evolution, times);
  r.trace = trace_shocks(*r.evolution, t_floor);
  for (auto& rec : r.trace.records) rec.closed_form = fit_closed_form(rec);
  r.split = split_measure(r.trace.records);
  r.mu_star = measure_from_shocks(r.trace.records);
  for (auto& a : r.mu_star.atoms)
    for (double& x : a.x) x += r.wedge.z;
  r.entp = entropy_production(r.trace.records);
  r.rate = rate(r.mu_star);
  r.identity_residual = std::abs(r.energy.value() - r.rate);
  r.key_residual = key_identity_residual(r.field, r.trace.records);
  r.flux_residual = std::abs((r.entp.plus - r.entp.minus) - flux_route(*r.evolution, t_floor, 1.0));
  return r;
}

inline json topology_json(const TraceResult& tr) {
  const ShockTopology s = summarize(tr);
  json events = json::array();
  for (const auto& e : tr.events) events.push_back({{"t", e.t}, {"before", e.before}, {"after", e.after}});
  return {{"records", s.records},
          {"non_entropy", s.non_entropy},
          {"entropy", s.entropy},
          {"events", events},
          {"configuration", s.configuration()}};
}

// Single-wedge calibration: reconstruction residual per unit of dx + dt.
inline double calibrated_c(const Flags& f) {
  const LatticeSpec L = lattice_for(f, 1.0);
  const auto sol = corpus::single_wedge(0.0, 1.0);
  const Evolution ev = Evolution::backward(sol.minimizer);
  const TraceResult tr = trace_shocks(ev, f.t_floor);
  const auto rep = reconstruct_check(ev, tr.records, L);
  return rep.residual / (L.dx() + L.dt());
}

inline double elapsed_ms(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

inline json base_report(const char* command, const Flags& f) {
  return {{"tool", "ldshape"},
          {"version", kVersion},
          {"command", command},
          {"inputs",
           {{"spec", f.spec},
            {"times", f.times},
            {"nt", f.nt},
            {"nx", f.nx},
            {"tmin", f.tmin},
            {"xmax", f.xmax},
            {"maxhop", f.maxhop},
            {"seed", f.seed},
            {"n", f.n},
            {"tol_identity", f.tol_identity},
            {"tol_oracle_c", f.tol_oracle_c}}}};
}

// Runs the body, mapping typed failures to exit codes; the report is always
// written when an output directory is available.
template <class Body>
Outcome guarded(const char* command, const Flags& f, bool write, Body&& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  o.report = base_report(command, f);
  try {
    o.code = body(o.report);
  } catch (const ParseError& e) {
    o.code = parse_error;
    o.report["error"] = {{"kind", "parse"}, {"message", e.what()}};
  } catch (const InfeasibleError& e) {
    o.code = infeasible;
    o.report["error"] = {{"kind", "infeasible"}, {"message", e.what()}};
  } catch (const DiscontinuousError& e) {
    o.code = infeasible;
    o.report["error"] = {{"kind", "discontinuous"}, {"message", e.what()}};
  } catch (const std::invalid_argument& e) {
    o.code = parse_error;
    o.report["error"] = {{"kind", "invalid"}, {"message", e.what()}};
  }
  o.report["exit_code"] = o.code;
  o.report["timing"] = {{"wall_ms", elapsed_ms(t0)}};
  if (write) {
    std::filesystem::create_directories(f.out);
    io::write_atomic(std::filesystem::path(f.out) / (std::string(command) + "_report.json"),
                     o.report.dump(2) + "\n");
  }
  return o;
}

inline json load_spec(const Flags& f) {
  if (f.spec.empty()) throw ParseError("--spec is required");
  return io::read_json_file(f.spec);
}

inline Outcome cmd_solve(const Flags& f) {
  Outcome o = guarded("solve", f, false, [&](json& rep) {
    const json spec = load_spec(f);
    const std::vector<double> times = parse_times(f.times);
    rep["spec"] = spec;
    SolveRun run = solve_problem(spec, times, f.t_floor);
    rep["conjectural"] = false;
    if (!run.energy.finite()) {
      rep["e_bm"] = nullptr;
      rep["infinite_reason"] = to_string(run.energy.reason());
      return static_cast<int>(infeasible);
    }
    const Evolution& ev = *run.evolution;
    const LatticeSpec L = lattice_for(f, ev.cone_radius());
    const double delta = L.dx() + L.dt();
    const double c_cal = calibrated_c(f);
    const double c_tol = f.tol_oracle_c > 0.0 ? f.tol_oracle_c : kCalibrationFactor * c_cal;
    const auto rec = reconstruct_check(ev, run.trace.records, L);
    const GridField bk = grid_hopflax_bk(*run.centred, L);
    const double bk_delta = oracle_delta(ev, bk);

    rep["e_bm"] = run.energy.value();
    rep["infinite_reason"] = "none";
    rep["rate_mu_star"] = run.rate;
    rep["identity_residual"] = run.identity_residual;
    rep["entropy_production"] = {{"plus", run.entp.plus}, {"minus", run.entp.minus}};
    rep["rate_m_ent"] = rate(run.split.entropy);
    rep["key_identity_residual"] = run.key_residual;
    rep["flux_route_residual"] = run.flux_residual;
    rep["shock_topology"] = topology_json(run.trace);
    rep["reconstruction"] = {{"lattice", lattice_json(L)},
                             {"residual", rec.residual},
                             {"envelope", c_tol * delta},
                             {"clipped", rec.clipped}};
    rep["oracle"] = {{"backward_delta", bk_delta},
                     {"envelope", c_tol * delta},
                     {"calibration_c", c_cal},
                     {"c", c_tol},
                     {"clipped", bk.clipped}};
    json checks = {{"identity", run.identity_residual <= f.tol_identity},
                   {"key_identity", run.key_residual <= f.tol_identity},
                   {"flux_route", run.flux_residual <= kFluxTol},
                   {"reconstruction", rec.residual <= c_tol * delta},
                   {"oracle", bk_delta <= c_tol * delta}};
    bool all = true;
    for (const auto& [k, v] : checks.items()) all = all && v.get<bool>();
    rep["checks"] = checks;

    std::filesystem::create_directories(f.out);
    const std::filesystem::path out(f.out);
    const io::Offset off{run.wedge.z, run.wedge.shift};
    io::write_atomic(out / "f_star.json", io::to_json(*run.f_star).dump(2) + "\n");
    io::write_atomic(out / "measure.json", io::to_json(run.mu_star).dump(2) + "\n");
    if (!f.json_only) {
      io::write_atomic(out / "height_slices.csv", io::height_slices_csv(ev, times, 201, off));
      io::write_atomic(out / "shocks.csv", io::shocks_csv(run.trace, off));
      io::write_atomic(out / "characteristics.svg", io::characteristics_svg(ev, run.trace, 41, 200, off));
    }
    return static_cast<int>(all ? ok : check_failed);
  });
  std::filesystem::create_directories(f.out);
  io::write_atomic(std::filesystem::path(f.out) / "report.json", o.report.dump(2) + "\n");
  return o;
}

// Least-squares slope of log(err) against log(delta).
inline double loglog_slope(const std::vector<double>& delta, const std::vector<double>& err) {
  const std::size_t n = delta.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(delta[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

struct ConvergenceRow {
  LatticeSpec lattice;
  double bk_error = 0.0;
  double reconstruct = 0.0;
  bool bk_clipped = false;
  bool clipped = false;  // either oracle
};

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  double bk_slope = 0.0;
  double bk_c = 0.0;             // geometric mean of err / delta
  double bk_c_spread = 0.0;      // max relative deviation of per-level C from bk_c
  std::vector<double> reconstruct_ratios;
  bool reconstruct_exact = false;  // residual at rounding level on every level
};

inline constexpr double kExactResidual = 1e-12;

inline ConvergenceStudy convergence_study(const Evolution& ev, const PiecewisePoly& centred,
                                          const std::vector<ShockRecord>& shocks, const Flags& f, int levels = 3) {
  ConvergenceStudy s;
  std::vector<double> deltas, errs;
  for (int l = 0; l < levels; ++l) {
    ConvergenceRow row;
    row.lattice = lattice_for(f, ev.cone_radius(), 1 << l);
    const GridField bk = grid_hopflax_bk(centred, row.lattice);
    row.bk_error = oracle_delta(ev, bk);
    const auto rec = reconstruct_check(ev, shocks, row.lattice);
    row.reconstruct = rec.residual;
    row.bk_clipped = bk.clipped;
    row.clipped = bk.clipped || rec.clipped;
    deltas.push_back(row.lattice.dx() + row.lattice.dt());
    errs.push_back(std::max(row.bk_error, 1e-300));
    s.rows.push_back(row);
  }
  s.bk_slope = loglog_slope(deltas, errs);
  double logc = 0.0;
  for (std::size_t i = 0; i < deltas.size(); ++i) logc += std::log(errs[i] / deltas[i]);
  s.bk_c = std::exp(logc / deltas.size());
  for (std::size_t i = 0; i < deltas.size(); ++i)
    s.bk_c_spread = std::max(s.bk_c_spread, std::abs(errs[i] / deltas[i] / s.bk_c - 1.0));
  s.reconstruct_exact = true;
  for (const auto& r : s.rows) s.reconstruct_exact = s.reconstruct_exact && r.reconstruct <= kExactResidual;
  for (std::size_t i = 1; i < s.rows.size(); ++i)
    s.reconstruct_ratios.push_back(s.rows[i - 1].reconstruct / s.rows[i].reconstruct);
  return s;
}

inline Outcome cmd_oracle(const Flags& f) {
  return guarded("oracle", f, true, [&](json& rep) {
    const json spec = load_spec(f);
    rep["spec"] = spec;
    SolveRun run = solve_problem(spec, {1.0}, f.t_floor);
    if (!run.energy.finite()) {
      rep["infinite_reason"] = to_string(run.energy.reason());
      return static_cast<int>(infeasible);
    }
    const Evolution& ev = *run.evolution;
    const ConvergenceStudy s = convergence_study(ev, *run.centred, run.trace.records, f);
    json table = json::array();
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
      const auto& r = s.rows[i];
      json row = {{"lattice", lattice_json(r.lattice)},
                  {"delta", r.lattice.dx() + r.lattice.dt()},
                  {"backward_error", r.bk_error},
                  {"reconstruction_residual", r.reconstruct},
                  {"clipped", r.clipped}};
      if (i > 0) row["reconstruction_ratio"] = s.reconstruct_ratios[i - 1];
      table.push_back(row);
    }
    rep["convergence"] = table;
    rep["backward_slope"] = s.bk_slope;
    rep["backward_c"] = s.bk_c;
    rep["backward_c_spread"] = s.bk_c_spread;
    rep["reconstruction_exact"] = s.reconstruct_exact;
    bool halving = true;
    for (double q : s.reconstruct_ratios) halving = halving && q >= 1.6 && q <= 2.4;
    const bool bk_first_order = s.rows.front().bk_error <= kExactResidual ||
                                (s.bk_slope >= 0.8 && s.bk_slope <= 1.2 && s.bk_c_spread <= 0.3);
    json checks = {{"reconstruction_halving", s.reconstruct_exact || halving},
                   {"backward_first_order", bk_first_order}};
    rep["checks"] = checks;
    std::filesystem::create_directories(f.out);
    const LatticeSpec L0 = s.rows.front().lattice;
    const std::filesystem::path out(f.out);
    if (!f.json_only) {
      io::write_atomic(out / "grid_backward.csv", io::grid_csv(grid_hopflax_bk(*run.centred, L0)));
      io::write_atomic(out / "grid_height.csv", io::grid_csv(grid_height(measure_from_shocks(run.trace.records), L0)));
    }
    return static_cast<int>(checks["reconstruction_halving"].get<bool>() && bk_first_order ? ok : check_failed);
  });
}

struct IdentityCase {
  double q_bm = 0.0;
  double entropy_production = 0.0;
  double residual = 0.0;
  double flux_residual = 0.0;
};

inline IdentityCase identity_case(const PiecewisePoly& phi, double t_floor) {
  const Evolution ev = Evolution::backward(phi);
  const TraceResult tr = trace_shocks(ev, t_floor);
  const EntropyProduction e = entropy_production(tr.records);
  IdentityCase c;
  c.q_bm = q_bm(phi);
  c.entropy_production = e.plus - e.minus;
  c.residual = std::abs(c.q_bm - c.entropy_production);
  c.flux_residual = std::abs(c.entropy_production - flux_route(ev, t_floor, 1.0));
  return c;
}

inline Outcome cmd_identity(const Flags& f) {
  return guarded("identity", f, true, [&](json& rep) {
    std::vector<PiecewisePoly> profiles;
    if (!f.spec.empty()) {
      const json spec = load_spec(f);
      rep["spec"] = spec;
      if (spec.contains("breakpoints")) {
        profiles.push_back(io::poly_from_json(spec));
      } else {
        SolveRun run = solve_problem(spec, {1.0}, f.t_floor);
        if (!run.energy.finite()) return static_cast<int>(infeasible);
        profiles.push_back(*run.centred);
      }
    } else {
      if (f.n < 1) throw ParseError("--n must be positive");
      profiles = corpus::random_profiles(static_cast<std::size_t>(f.n), f.seed);
    }
    double worst = 0.0, worst_flux = 0.0;
    json cases = json::array();
    for (const auto& p : profiles) {
      const IdentityCase c = identity_case(p, f.t_floor);
      worst = std::max(worst, c.residual);
      worst_flux = std::max(worst_flux, c.flux_residual);
      cases.push_back({{"q_bm", c.q_bm}, {"entropy_production", c.entropy_production}, {"residual", c.residual},
                       {"flux_residual", c.flux_residual}});
    }
    rep["profiles"] = profiles.size();
    rep["max_residual"] = worst;
    rep["max_flux_residual"] = worst_flux;
    rep["cases"] = cases;
    const bool pass = worst <= f.tol_identity && worst_flux <= kFluxTol;
    rep["checks"] = {{"key_identity", worst <= f.tol_identity}, {"flux_route", worst_flux <= kFluxTol}};
    return static_cast<int>(pass ? ok : check_failed);
  });
}

// Measure of one wedge's profile, in the data frame.
inline PathMeasure wedge_measure(const PiecewisePoly& phi, const SourcePoint& s, double t_floor) {
  const PiecewisePoly centred = shifted(phi, -s.z, -s.g);
  const Evolution ev = Evolution::backward(centred);
  const TraceResult tr = trace_shocks(ev, t_floor);
  PathMeasure mu = measure_from_shocks(tr.records);
  for (auto& a : mu.atoms)
    for (double& x : a.x) x += s.z;
  return mu;
}

inline Outcome cmd_multiwedge(const Flags& f) {
  return guarded("multiwedge", f, true, [&](json& rep) {
    const json spec = load_spec(f);
    rep["spec"] = spec;
    const MultiWedgeProblem p = io::multiwedge_from_json(spec);
    const MultiWedgeResult r = multi_rate(p);
    rep["conjectural"] = r.conjectural;
    rep["value"] = r.value;
    rep["partition"] = io::to_json(r.partition, r.problem);
    rep["flagged"] = r.flagged;
    json parts = json::array();
    for (const auto& e : r.energies)
      parts.push_back({{"partition", io::to_json(e.partition, r.problem)},
                       {"energy", e.value},
                       {"admissible", e.admissible},
                       {"violation", e.violation}});
    rep["partitions"] = parts;
    std::vector<PathMeasure> measures;
    json profiles = json::array();
    double reach = 0.0;
    for (std::size_t z = 0; z < r.profiles.size(); ++z) {
      const auto& s = r.problem.sources[z];
      reach = std::max(reach, std::abs(s.z));
      if (r.profiles[z]) {
        measures.push_back(wedge_measure(*r.profiles[z], s, f.t_floor));
        profiles.push_back(io::to_json(*r.profiles[z]));
        reach = std::max(reach, measures.back().cone_radius() + std::abs(s.z));
      } else {
        measures.emplace_back();
        profiles.push_back(nullptr);
      }
    }
    for (const auto& t : r.problem.targets) reach = std::max(reach, std::abs(t.y));
    rep["profiles"] = profiles;
    Flags lf = f;
    if (lf.xmax <= 0.0) lf.xmax = reach + 1.0;
    const LatticeSpec L = lattice_for(lf, reach);
    const DecompositionReport d = verify_decomposition(measures, r.problem, r.partition, L);
    rep["decomposition"] = {{"exact", d.exact},
                            {"disjoint", {{"pass", d.disjoint.pass}, {"residual", d.disjoint.residual}}},
                            {"matches", {{"pass", d.matches.pass}, {"residual", d.matches.residual}}},
                            {"bounded", {{"pass", d.bounded.pass}, {"residual", d.bounded.residual}}},
                            {"lattice", lattice_json(L)}};
    return static_cast<int>(d.pass() ? ok : check_failed);
  });
}

}  // namespace ldshape::cli

#endif  // LDSHAPE_CLI_HPP_
