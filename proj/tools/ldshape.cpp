#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ldshape/cli.hpp"

namespace {

void add_common(CLI::App* app, ldshape::cli::Flags& f) {
  app->add_option("--out", f.out, "output directory");
  app->add_flag("--json-only", f.json_only, "skip CSV and SVG artifacts");
  app->add_option("--tol-identity", f.tol_identity, "identity tolerance");
}

void add_lattice(CLI::App* app, ldshape::cli::Flags& f) {
  app->add_option("--nt", f.nt, "time steps")->check(CLI::PositiveNumber);
  app->add_option("--nx", f.nx, "space steps")->check(CLI::PositiveNumber);
  app->add_option("--tmin", f.tmin, "first lattice time (0: one time step)")->check(CLI::NonNegativeNumber);
  app->add_option("--xmax", f.xmax, "lattice half-width (0: cone radius + 1)")->check(CLI::NonNegativeNumber);
  app->add_option("--maxhop", f.maxhop, "hop budget in cells (0: from the speed bound)")->check(CLI::NonNegativeNumber);
  app->add_option("--tol-oracle-c", f.tol_oracle_c, "oracle envelope constant (0: calibrate)")
      ->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
  using namespace ldshape::cli;
  CLI::App app{"Rate functions, shock measures and lattice oracles for conditioned height profiles"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Flags f;

  auto* solve = app.add_subcommand("solve", "minimise the energy, evolve backward and read off the measure");
  solve->add_option("--spec", f.spec, "problem JSON")->required();
  solve->add_option("--times", f.times, "comma separated slice times");
  add_common(solve, f);
  add_lattice(solve, f);

  auto* oracle = app.add_subcommand("oracle", "lattice oracle convergence study");
  oracle->add_option("--spec", f.spec, "problem JSON")->required();
  add_common(oracle, f);
  add_lattice(oracle, f);

  auto* identity = app.add_subcommand("identity", "entropy production identity on random profiles");
  identity->add_option("--n", f.n, "number of random profiles");
  identity->add_option("--seed", f.seed, "random seed");
  identity->add_option("--spec", f.spec, "single profile or problem JSON instead of random profiles");
  add_common(identity, f);

  auto* multi = app.add_subcommand("multiwedge", "multi-wedge rate over ordered partitions");
  multi->add_option("--spec", f.spec, "multi-wedge problem JSON")->required();
  add_common(multi, f);
  add_lattice(multi, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ExitCode::parse_error);
  }

  Outcome o;
  if (*solve) o = cmd_solve(f);
  else if (*oracle) o = cmd_oracle(f);
  else if (*identity) o = cmd_identity(f);
  else o = cmd_multiwedge(f);
  std::cout << o.report.dump(2) << "\n";
  return o.code;
}
