#pragma once

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "treegs/analysis.hpp"
#include "treegs/io.hpp"
#include "treegs/shooting.hpp"
#include "treegs/verify.hpp"

namespace treegs::cli {

struct RunConfig {
  std::string subcommand;
  std::string kind = "unrooted";
  int branching = 2;
  double edge_length = 1.0;
  int depth = 8;
  int depth_r = 60;
  int nodes_per_edge = 8;
  std::string bc = "dirichlet";
  double tol = 1e-10;
  double p = 4.0;
  double mu = 1.0;
  double mu_min = 0.25;
  double mu_max = 4.0;
  int mu_count = 16;
  std::uint64_t seed = 0;
  double grad_tol = 1e-9;
  int max_iters = 20000;
  int multistart = 3;
  int samples = 1000;
  std::string suite = "poincare";
  double eps = 0.0;  // 0: discretization-aware default
  double bracket_width = 0.05;
  int threads = 0;
  bool radial = false;
  bool reference = false;
  bool detect = false;
  bool shoot = false;
  bool mu_star = false;
  std::string out;
  std::string csv_out;
  std::string profile_out;
  std::string config_file;

  TreeSpec tree_spec() const {
    TreeSpec s;
    s.kind = tree_kind_from_string(kind);
    s.branching = branching;
    s.edge_length = edge_length;
    s.depth = depth;
    return s;
  }
  LeafBC leaf_bc() const { return leaf_bc_from_string(bc); }

  SolverOptions solver_options() const {
    SolverOptions o;
    o.p = p;
    o.mass = mu;
    o.grad_tol = grad_tol;
    o.max_iters = max_iters;
    o.multistart = multistart;
    o.seed = seed;
    return o;
  }

  std::string json() const {
    JsonWriter w;
    w.field("subcommand", subcommand)
        .field("kind", kind)
        .field("branching", branching)
        .field("edge_length", edge_length)
        .field("depth", depth)
        .field("depth_r", depth_r)
        .field("nodes_per_edge", nodes_per_edge)
        .field("bc", bc)
        .field("tol", tol)
        .field("p", p)
        .field("mu", mu)
        .field("mu_min", mu_min)
        .field("mu_max", mu_max)
        .field("mu_count", mu_count)
        .field("seed", seed)
        .field("grad_tol", grad_tol)
        .field("max_iters", max_iters)
        .field("multistart", multistart)
        .field("samples", samples)
        .field("suite", suite)
        .field("eps", eps)
        .field("bracket_width", bracket_width)
        .field("threads", threads)
        .field("radial", radial)
        .field("reference", reference)
        .field("detect", detect)
        .field("shoot", shoot)
        .field("mu_star", mu_star);
    return w.str();
  }
};

namespace detail {

inline void apply_config_file(RunConfig& cfg) {
  if (cfg.config_file.empty()) return;
  std::ifstream f(cfg.config_file);
  if (!f) throw config_error("cannot read config file: " + cfg.config_file);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw config_error("invalid config file " + cfg.config_file + ": " + e.what());
  }
  auto get = [&](const char* key, auto& target) {
    if (j.contains(key)) target = j.at(key).get<std::decay_t<decltype(target)>>();
  };
  get("kind", cfg.kind);
  get("branching", cfg.branching);
  get("edge_length", cfg.edge_length);
  get("depth", cfg.depth);
  get("depth_r", cfg.depth_r);
  get("nodes_per_edge", cfg.nodes_per_edge);
  get("bc", cfg.bc);
  get("tol", cfg.tol);
  get("p", cfg.p);
  get("mu", cfg.mu);
  get("mu_min", cfg.mu_min);
  get("mu_max", cfg.mu_max);
  get("mu_count", cfg.mu_count);
  get("seed", cfg.seed);
  get("grad_tol", cfg.grad_tol);
  get("max_iters", cfg.max_iters);
  get("multistart", cfg.multistart);
  get("samples", cfg.samples);
  get("suite", cfg.suite);
  get("eps", cfg.eps);
  get("bracket_width", cfg.bracket_width);
  get("threads", cfg.threads);
  get("radial", cfg.radial);
  get("reference", cfg.reference);
  get("detect", cfg.detect);
  get("shoot", cfg.shoot);
  get("mu_star", cfg.mu_star);
  get("out", cfg.out);
  get("csv_out", cfg.csv_out);
  get("profile_out", cfg.profile_out);
}

inline std::vector<double> mass_grid(const RunConfig& cfg) {
  if (cfg.mu_count < 2) throw config_error("mu-count must be >= 2");
  if (!(cfg.mu_min > 0.0) || !(cfg.mu_max > cfg.mu_min))
    throw config_error("mass range must satisfy 0 < mu-min < mu-max");
  std::vector<double> grid(static_cast<std::size_t>(cfg.mu_count));
  for (int i = 0; i < cfg.mu_count; ++i)
    grid[static_cast<std::size_t>(i)] =
        cfg.mu_min + (cfg.mu_max - cfg.mu_min) * i / (cfg.mu_count - 1);
  return grid;
}

inline int cmd_lambda1(const RunConfig& cfg) {
  if (cfg.reference) {
    ReferenceBudget budget;
    budget.max_depth_r = cfg.depth_r > 1 ? cfg.depth_r : 400;
    budget.max_n = cfg.nodes_per_edge;
    budget.tol = cfg.tol;
    LambdaReference ref = lambda1_reference_uncached(cfg.branching, cfg.edge_length, budget);
    std::string doc = lambda_reference_json(ref, cfg.json());
    if (!cfg.out.empty()) write_text_file(cfg.out, doc + "\n");
    std::cout << "lambda1 = " << format_double(ref.lambda1)
              << " (error estimate " << format_double(ref.error_estimate) << ", fit "
              << ref.fit_model << ")\n";
    return 0;
  }
  EigenResult r;
  if (cfg.radial) {
    RadialGrid grid = build_radial_grid(cfg.tree_spec(), cfg.depth_r, cfg.nodes_per_edge,
                                        cfg.leaf_bc());
    r = lambda1_radial(grid, cfg.tol, cfg.seed);
    std::string doc = eigen_result_json(r, cfg.json());
    if (!cfg.out.empty()) write_text_file(cfg.out, doc + "\n");
  } else {
    Mesh mesh = build_mesh(cfg.tree_spec(), cfg.nodes_per_edge, cfg.leaf_bc());
    r = lambda1_full(mesh, cfg.tol, cfg.seed);
    std::string doc = eigen_result_json(r, cfg.json());
    if (!cfg.out.empty()) write_text_file(cfg.out, doc + "\n");
  }
  std::cout << "lambda1 = " << format_double(r.lambda1) << " (residual "
            << format_double(r.residual_rel) << ")\n";
  return 0;
}

inline int cmd_minimize(const RunConfig& cfg) {
  Mesh mesh = build_mesh(cfg.tree_spec(), cfg.nodes_per_edge, cfg.leaf_bc());
  FemSystem fem(mesh);
  GroundStateResult r = minimize(fem, cfg.solver_options());
  EnergyReport e = cfg.mu > 0.0 ? fem.energy(r.u, cfg.p) : EnergyReport{};
  std::string doc = ground_state_json(r, e, cfg.json());
  if (!cfg.out.empty()) write_text_file(cfg.out, doc + "\n");
  if (!cfg.profile_out.empty()) write_text_file(cfg.profile_out, profile_csv(mesh, r.u));
  std::cout << "energy = " << format_double(r.energy) << ", lambda = "
            << format_double(r.lambda) << ", converged = " << (r.converged ? 1 : 0) << "\n";
  if (!r.converged) {
    std::cerr << "minimize did not reach the gradient tolerance; rerun with more "
                 "iterations or a looser --grad-tol\n";
    return 2;
  }
  return 0;
}

inline int cmd_radial(const RunConfig& cfg) {
  RadialGrid grid = build_radial_grid(cfg.tree_spec(), cfg.depth_r, cfg.nodes_per_edge,
                                      cfg.leaf_bc());
  FemSystem fem(grid);
  GroundStateResult r = minimize(fem, cfg.solver_options());
  EnergyReport e = cfg.mu > 0.0 ? fem.energy(r.u, cfg.p) : EnergyReport{};

  JsonWriter w;
  w.field_object("result", ground_state_json(r, e, cfg.json()));
  if (cfg.shoot && r.converged) {
    ShootingReport s = shooting_verify(r, grid, cfg.p);
    JsonWriter sw;
    sw.field("max_deviation", s.max_deviation)
        .field("compared_up_to", s.compared_up_to)
        .field("tail_value", s.tail_value)
        .field("diverged", s.diverged);
    w.field_object("shooting", sw.str());
  }
  if (!cfg.out.empty()) write_text_file(cfg.out, w.str() + "\n");
  if (!cfg.profile_out.empty()) write_text_file(cfg.profile_out, profile_csv(grid, r.u));
  std::cout << "energy = " << format_double(r.energy) << ", lambda = "
            << format_double(r.lambda) << ", converged = " << (r.converged ? 1 : 0) << "\n";
  return r.converged ? 0 : 2;
}

inline int cmd_sweep(const RunConfig& cfg) {
  std::vector<double> grid = mass_grid(cfg);
  const TreeSpec spec = cfg.tree_spec();
  const double lam_ref = lambda1_reference(spec).lambda1;
  LevelCurve curve;
  std::optional<MuStarResult> mu_star;

  if (cfg.radial) {
    RadialGrid g = build_radial_grid(spec, cfg.depth_r, cfg.nodes_per_edge, cfg.leaf_bc());
    FemSystem fem(g);
    curve = level_sweep(fem, spec, cfg.p, grid, cfg.solver_options(), lam_ref, cfg.threads);
    curve.depth_used = cfg.depth_r;
    curve.nodes_per_edge = cfg.nodes_per_edge;
    if (cfg.detect) {
      const double eps = cfg.eps > 0.0 ? cfg.eps
                                       : 2.0 * (0.5 *
                                                    std::fabs(curve.lambda1_truncated - lam_ref) *
                                                    grid.back() +
                                                cfg.grad_tol);
      mu_star = mu_star_detect(curve, fem, cfg.solver_options(), eps, cfg.bracket_width);
    }
  } else {
    Mesh mesh = build_mesh(spec, cfg.nodes_per_edge, cfg.leaf_bc());
    FemSystem fem(mesh);
    curve = level_sweep(fem, spec, cfg.p, grid, cfg.solver_options(), lam_ref, cfg.threads);
    curve.depth_used = cfg.depth;
    curve.nodes_per_edge = cfg.nodes_per_edge;
    if (cfg.detect) {
      const double eps = cfg.eps > 0.0 ? cfg.eps
                                       : 2.0 * (0.5 *
                                                    std::fabs(curve.lambda1_truncated - lam_ref) *
                                                    grid.back() +
                                                cfg.grad_tol);
      mu_star = mu_star_detect(curve, fem, cfg.solver_options(), eps, cfg.bracket_width);
    }
  }

  JsonWriter w;
  w.field_object("curve", level_curve_json(curve, cfg.json()));
  if (mu_star) w.field_object("mu_star", mu_star_json(*mu_star));
  if (!cfg.out.empty()) write_text_file(cfg.out, w.str() + "\n");
  if (!cfg.csv_out.empty()) write_text_file(cfg.csv_out, level_curve_csv(curve));
  std::cout << "sweep: " << curve.converged_count << "/" << curve.points.size()
            << " converged, slope0 = " << format_double(curve.slope_at_zero);
  if (mu_star && mu_star->transition_detected)
    std::cout << ", mu* in [" << format_double(mu_star->mu_lo) << ", "
              << format_double(mu_star->mu_hi) << "]";
  std::cout << "\n";
  return 0;
}

inline int cmd_verify(const RunConfig& cfg) {
  VerifyConfig vc;
  vc.spec = cfg.tree_spec();
  vc.nodes_per_edge = cfg.nodes_per_edge;
  vc.samples = cfg.samples;
  vc.seed = cfg.seed;
  vc.p = cfg.p;
  vc.threads = cfg.threads;
  VerifyReport rep = run_verify_suite(cfg.suite, vc);
  std::string doc = verify_report_json(rep, cfg.json());
  if (!cfg.out.empty()) write_text_file(cfg.out, doc + "\n");
  for (const auto& item : rep.items)
    std::cout << (item.pass ? "[pass] " : "[FAIL] ") << rep.suite << "/" << item.name
              << ": worst " << format_double(item.worst_ratio) << " vs threshold "
              << format_double(item.threshold) << "\n";
  return rep.pass ? 0 : 3;
}

inline int cmd_compare(const RunConfig& cfg) {
  std::vector<double> grid = mass_grid(cfg);
  SolverOptions opts = cfg.solver_options();
  CompareReport rep = compare_rooted_unrooted(cfg.p, grid, cfg.depth, cfg.nodes_per_edge,
                                              opts, cfg.mu_star, cfg.bracket_width,
                                              cfg.threads);
  JsonWriter w;
  w.field_object("config", cfg.json())
      .field("p", rep.p)
      .field("max_violation", rep.max_violation)
      .field("ordering_holds", rep.ordering_holds)
      .field_object("rooted", level_curve_json(rep.rooted, cfg.json()))
      .field_object("unrooted", level_curve_json(rep.unrooted, cfg.json()));
  if (rep.mu_star_rooted) w.field_object("mu_star_rooted", mu_star_json(*rep.mu_star_rooted));
  if (rep.mu_star_unrooted)
    w.field_object("mu_star_unrooted", mu_star_json(*rep.mu_star_unrooted));
  if (!cfg.out.empty()) write_text_file(cfg.out, w.str() + "\n");
  std::cout << "ordering holds: " << (rep.ordering_holds ? 1 : 0)
            << ", max violation = " << format_double(rep.max_violation) << "\n";
  return 0;
}

}  // namespace detail

inline int run(const std::vector<std::string>& args) {
  RunConfig cfg;
  CLI::App app{"mass-constrained NLS ground states on homogeneous metric trees"};
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--kind", cfg.kind, "rooted|unrooted");
    sub->add_option("--branching", cfg.branching, "children per interior vertex (>=2)");
    sub->add_option("--edge-length", cfg.edge_length, "edge length");
    sub->add_option("--depth", cfg.depth, "tree truncation depth (generations)");
    sub->add_option("--depth-r", cfg.depth_r, "radial truncation depth");
    sub->add_option("--nodes-per-edge", cfg.nodes_per_edge, "sub-intervals per edge");
    sub->add_option("--bc", cfg.bc, "dirichlet|neumann leaves");
    sub->add_option("--seed", cfg.seed, "random seed");
    sub->add_option("--threads", cfg.threads, "worker threads (default TREEGS_THREADS)");
    sub->add_option("--out", cfg.out, "JSON output path");
    sub->add_option("--config", cfg.config_file, "JSON config file overriding flags");
  };
  auto add_solver = [&](CLI::App* sub) {
    sub->add_option("--p", cfg.p, "nonlinearity exponent in (2,6)");
    sub->add_option("--grad-tol", cfg.grad_tol, "projected-gradient tolerance");
    sub->add_option("--max-iters", cfg.max_iters, "iteration cap");
    sub->add_option("--multistart", cfg.multistart, "number of starts");
  };

  CLI::App* lam = app.add_subcommand("lambda1", "smallest eigenvalue of the tree problem");
  add_common(lam);
  lam->add_option("--tol", cfg.tol, "eigen residual tolerance");
  lam->add_flag("--radial", cfg.radial, "use the radial reduction");
  lam->add_flag("--reference", cfg.reference, "deep-radial extrapolated reference value");

  CLI::App* min = app.add_subcommand("minimize", "ground state on the full tree");
  add_common(min);
  add_solver(min);
  min->add_option("--mu", cfg.mu, "mass constraint");
  min->add_option("--profile-out", cfg.profile_out, "profile CSV path");

  CLI::App* rad = app.add_subcommand("radial", "radial ground state on the half-line");
  add_common(rad);
  add_solver(rad);
  rad->add_option("--mu", cfg.mu, "mass constraint");
  rad->add_flag("--shoot", cfg.shoot, "verify against the shooting integrator");
  rad->add_option("--profile-out", cfg.profile_out, "profile CSV path");

  CLI::App* swp = app.add_subcommand("sweep", "level function over a mass grid");
  add_common(swp);
  add_solver(swp);
  swp->add_option("--mu-min", cfg.mu_min, "smallest mass");
  swp->add_option("--mu-max", cfg.mu_max, "largest mass");
  swp->add_option("--mu-count", cfg.mu_count, "grid size");
  swp->add_flag("--radial", cfg.radial, "sweep the radial problem");
  swp->add_flag("--detect", cfg.detect, "detect the critical mass");
  swp->add_option("--eps", cfg.eps, "detection threshold (default discretization-aware)");
  swp->add_option("--bracket-width", cfg.bracket_width, "bisection bracket width");
  swp->add_option("--csv-out", cfg.csv_out, "level curve CSV path");

  CLI::App* ver = app.add_subcommand("verify", "inequality verification suites");
  add_common(ver);
  ver->add_option("--suite", cfg.suite,
                  "poincare|weighted|gn|symmetrize|surgery|decay|apriori");
  ver->add_option("--samples", cfg.samples, "sample count");
  ver->add_option("--p", cfg.p, "exponent used by gn/decay/apriori");

  CLI::App* cmp = app.add_subcommand("compare", "rooted vs unrooted level ordering");
  add_common(cmp);
  add_solver(cmp);
  cmp->add_option("--mu-min", cfg.mu_min, "smallest mass");
  cmp->add_option("--mu-max", cfg.mu_max, "largest mass");
  cmp->add_option("--mu-count", cfg.mu_count, "grid size");
  cmp->add_flag("--mu-star", cfg.mu_star, "also bracket the critical masses");
  cmp->add_option("--bracket-width", cfg.bracket_width, "bisection bracket width");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      std::cout << app.help() << std::flush;
      return 0;
    }
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    detail::apply_config_file(cfg);
    require_exponent(cfg.p);
    for (CLI::App* sub : {lam, min, rad, swp, ver, cmp}) {
      if (sub->parsed()) {
        cfg.subcommand = sub->get_name();
        break;
      }
    }
    if (cfg.subcommand == "lambda1") return detail::cmd_lambda1(cfg);
    if (cfg.subcommand == "minimize") return detail::cmd_minimize(cfg);
    if (cfg.subcommand == "radial") return detail::cmd_radial(cfg);
    if (cfg.subcommand == "sweep") return detail::cmd_sweep(cfg);
    if (cfg.subcommand == "verify") return detail::cmd_verify(cfg);
    if (cfg.subcommand == "compare") return detail::cmd_compare(cfg);
    throw config_error("no subcommand given");
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const numeric_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace treegs::cli
