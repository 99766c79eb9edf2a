#include <kescale/commands.hpp>

#include <CLI11.hpp>

#include <iostream>

namespace {

void print_summary(const kescale::Report& rep) {
  for (const auto& r : rep.records)
    std::cerr << (r.pass ? "PASS " : "FAIL ") << r.name << "  computed=" << r.computed << " target=" << r.target
              << " tol=" << r.tolerance << '\n';
  for (const auto& m : rep.messages) std::cerr << "note: " << m << '\n';
  std::cerr << (rep.pass() ? "verdict: pass" : "verdict: FAIL") << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  kescale::RunConfig cfg;
  CLI::App app{"Kahler-Einstein potential scaling and vector-field verification"};
  app.set_config("--config", "", "TOML configuration file (command-line flags take precedence)");
  app.require_subcommand(1);

  double grid_radius = 0.0, tol = 0.0, lambda_override = 0.0;
  int grid_points = 0;
  app.add_option("--domain", cfg.domain, "ball | polydisc | halfplane | siegel | ball-cayley")->capture_default_str();
  app.add_option("--dim", cfg.dim, "complex dimension n")->capture_default_str();
  app.add_option("--order", cfg.order, "jet order (2..4)")->capture_default_str();
  auto* o_radius = app.add_option("--grid-radius", grid_radius, "radius of the sample grid");
  auto* o_points = app.add_option("--grid-points", grid_points, "number of grid points");
  app.add_option("--steps", cfg.steps, "scaling sequence length J")->capture_default_str();
  app.add_option("--start", cfg.start, "base point (scale) or flow start, e.g. 0+1i or 0.1,0.2i");
  app.add_option("--t0", cfg.t0, "flow start time")->capture_default_str();
  app.add_option("--t1", cfg.t1, "flow end time")->capture_default_str();
  app.add_option("--step", cfg.step, "RK4 step")->capture_default_str();
  auto* o_tol = app.add_option("--tol", tol, "convergence tolerance for scaling");
  app.add_option("--seed", cfg.seed, "seed for sample points")->capture_default_str();
  app.add_option("--out", cfg.out, "report path (JSON); artifacts are written next to it");
  app.add_flag("--bergman", cfg.bergman, "scale the Bergman kernel instead of the KE volume");
  auto* o_lambda = app.add_option("--lambda-override", lambda_override, "test only: replace n+1 in h = dd^c Phi / (n+1)");
  app.add_flag("--timing", cfg.timing, "record wall time in the report");

  for (const char* name : {"verify", "scale", "flow"}) {
    auto* sub = app.add_subcommand(name, std::string(name) + " checks");
    sub->fallthrough();
    sub->callback([&cfg, name] { cfg.command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (o_radius->count() > 0) cfg.grid_radius = grid_radius;
  if (o_points->count() > 0) cfg.grid_points = grid_points;
  if (o_tol->count() > 0) cfg.tol = tol;
  if (o_lambda->count() > 0) cfg.lambda_override = lambda_override;

  try {
    const kescale::Report rep = kescale::run_command(cfg, &std::cout);
    print_summary(rep);
    return rep.pass() ? 0 : 1;
  } catch (const kescale::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const kescale::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
