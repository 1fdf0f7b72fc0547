#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "treegs/eigen.hpp"
#include "treegs/energy.hpp"
#include "treegs/parallel.hpp"
#include "treegs/solver.hpp"
#include "treegs/space.hpp"

namespace treegs {

struct LevelPoint {
  double mu = 0.0;
  double energy = 0.0;
  double lambda = 0.0;
  double sup_norm = 0.0;
  bool converged = false;
};

struct LevelCurve {
  double p = 4.0;
  TreeSpec spec;
  int nodes_per_edge = 0;
  bool radial = false;
  int depth_used = 0;              // mesh depth or radial depth
  double lambda1_truncated = 0.0;  // discrete lambda1 of the swept space
  double lambda1_ref = 0.0;
  double grad_tol = 0.0;
  std::vector<LevelPoint> points;

  // diagnostics over converged points
  int concavity_violations = 0;
  double max_above_line = 0.0;     // max of E_i - lambda1(D) mu_i / 2
  double slope_at_zero = 0.0;      // through-origin fit on the 3 smallest masses
  int converged_count = 0;

  void recompute_diagnostics() {
    concavity_violations = 0;
    max_above_line = -std::numeric_limits<double>::infinity();
    converged_count = 0;
    std::vector<const LevelPoint*> ok;
    for (const auto& pt : points)
      if (pt.converged) {
        ++converged_count;
        ok.push_back(&pt);
      }
    for (std::size_t i = 0; i + 2 < ok.size(); ++i) {
      const LevelPoint& a = *ok[i];
      const LevelPoint& m = *ok[i + 1];
      const LevelPoint& b = *ok[i + 2];
      const double chord = ((b.mu - m.mu) * a.energy + (m.mu - a.mu) * b.energy) /
                           (b.mu - a.mu);
      if (m.energy < chord - 2.0 * grad_tol) ++concavity_violations;
    }
    for (const auto* pt : ok)
      max_above_line = std::max(max_above_line,
                                pt->energy - 0.5 * lambda1_truncated * pt->mu);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < std::min<std::size_t>(3, ok.size()); ++i) {
      num += ok[i]->mu * ok[i]->energy;
      den += ok[i]->mu * ok[i]->mu;
    }
    slope_at_zero = den > 0.0 ? num / den : 0.0;
  }
};

namespace detail {

inline GroundStateResult minimize_with_warm(const FemSystem& fem, SolverOptions opts,
                                            const Field* warm) {
  GroundStateResult best = minimize(fem, opts);
  if (warm && !warm->x.empty()) {
    SolverOptions w = opts;
    w.init = *warm;
    GroundStateResult alt = minimize(fem, w);
    if (alt.energy < best.energy - 1e-14 ||
        (alt.converged && !best.converged && alt.energy <= best.energy + 1e-12))
      return alt;
  }
  return best;
}

}  // namespace detail

// Per-mass best-of-multistart energies. Points run in parallel; unconverged
// points get a sequential warm-started retry from their converged neighbors
// and are flagged if still unconverged (they stay out of the diagnostics).
inline LevelCurve level_sweep(const FemSystem& fem, const TreeSpec& spec, double p,
                              const std::vector<double>& mass_grid, SolverOptions base_opts,
                              double lambda1_ref_value, int threads = 0) {
  require_exponent(p);
  for (std::size_t i = 0; i + 1 < mass_grid.size(); ++i)
    if (!(mass_grid[i] < mass_grid[i + 1]))
      throw config_error("mass grid must be strictly increasing");
  if (!mass_grid.empty() && !(mass_grid.front() >= 0.0))
    throw config_error("mass grid must be nonnegative");

  LevelCurve curve;
  curve.p = p;
  curve.spec = spec;
  curve.radial = fem.space().is_radial();
  curve.nodes_per_edge = 0;
  curve.grad_tol = base_opts.grad_tol;
  curve.lambda1_ref = lambda1_ref_value;
  curve.lambda1_truncated = lambda1_solve(fem, 1e-10, base_opts.seed).lambda1;

  std::vector<GroundStateResult> results(mass_grid.size());
  parallel_for(mass_grid.size(), [&](std::size_t i) {
    SolverOptions o = base_opts;
    o.p = p;
    o.mass = mass_grid[i];
    results[i] = minimize(fem, o);
  }, threads);

  // warm-start polish for stragglers, deterministic left-to-right then right-to-left
  for (int pass = 0; pass < 2; ++pass) {
    for (std::size_t step = 0; step < mass_grid.size(); ++step) {
      std::size_t i = pass == 0 ? step : mass_grid.size() - 1 - step;
      if (results[i].converged) continue;
      const Field* warm = nullptr;
      if (pass == 0 && i > 0 && results[i - 1].converged) warm = &results[i - 1].u;
      if (pass == 1 && i + 1 < results.size() && results[i + 1].converged)
        warm = &results[i + 1].u;
      if (!warm) continue;
      SolverOptions o = base_opts;
      o.p = p;
      o.mass = mass_grid[i];
      o.init = *warm;
      GroundStateResult alt = minimize(fem, o);
      if (alt.converged || alt.energy < results[i].energy) results[i] = std::move(alt);
    }
  }

  curve.points.reserve(mass_grid.size());
  for (std::size_t i = 0; i < mass_grid.size(); ++i) {
    LevelPoint pt;
    pt.mu = mass_grid[i];
    pt.energy = results[i].energy;
    pt.lambda = results[i].lambda;
    pt.sup_norm = results[i].u.sup_norm();
    pt.converged = results[i].converged;
    curve.points.push_back(pt);
  }
  curve.recompute_diagnostics();
  return curve;
}

struct MuStarResult {
  bool transition_detected = false;
  double mu_lo = 0.0;    // largest mass where the gap stays within eps
  double mu_hi = 0.0;    // smallest mass where the gap exceeds eps
  double eps = 0.0;
  double gap_at_hi = 0.0;
  std::string note;
};

// Bisection refinement of the smallest mass at which the level detaches from
// the line lambda1 mu / 2 by more than eps. eps must absorb the truncation
// gap, which is the resolution limit of the linear regime at finite depth.
inline MuStarResult mu_star_detect(const LevelCurve& curve, const FemSystem& fem,
                                   SolverOptions base_opts, double eps,
                                   double bracket_width = 0.05) {
  std::vector<const LevelPoint*> ok;
  for (const auto& pt : curve.points)
    if (pt.converged) ok.push_back(&pt);
  if (ok.size() < 8)
    throw config_error("mu* detection needs a curve with at least 8 converged points");
  const double mu_max = ok.back()->mu;
  const double min_eps =
      2.0 * (0.5 * std::fabs(curve.lambda1_truncated - curve.lambda1_ref) * mu_max +
             curve.grad_tol);
  if (eps < min_eps)
    throw config_error("eps below the discretization-aware bound " + std::to_string(min_eps));

  MuStarResult out;
  out.eps = eps;
  auto gap = [&](double mu, double energy) { return 0.5 * curve.lambda1_ref * mu - energy; };

  std::size_t first_fire = ok.size();
  for (std::size_t i = 0; i < ok.size(); ++i) {
    if (gap(ok[i]->mu, ok[i]->energy) > eps) {
      first_fire = i;
      break;
    }
  }
  if (first_fire == ok.size()) {
    out.note = "no transition detected on range";
    return out;
  }
  out.transition_detected = true;
  double hi = ok[first_fire]->mu;
  double lo = first_fire == 0 ? 0.0 : ok[first_fire - 1]->mu;
  out.gap_at_hi = gap(ok[first_fire]->mu, ok[first_fire]->energy);

  Field warm;  // nearest solved minimizer, reused across bisection steps
  bool have_warm = false;
  while (hi - lo > bracket_width && lo > 0.0) {
    const double mid = 0.5 * (lo + hi);
    SolverOptions o = base_opts;
    o.p = curve.p;
    o.mass = mid;
    GroundStateResult r =
        detail::minimize_with_warm(fem, o, have_warm ? &warm : nullptr);
    if (!r.converged) {
      out.note = "bisection stopped at an unconverged solve";
      break;
    }
    warm = r.u;
    have_warm = true;
    if (gap(mid, r.energy) > eps) {
      hi = mid;
      out.gap_at_hi = gap(mid, r.energy);
    } else {
      lo = mid;
    }
  }
  out.mu_lo = lo;
  out.mu_hi = hi;
  return out;
}

struct CompareReport {
  double p = 4.0;
  LevelCurve rooted;
  LevelCurve unrooted;
  double max_violation = 0.0;  // max of E_rooted - E_unrooted over the grid
  bool ordering_holds = false; // E_rooted <= E_unrooted + 2 grad_tol everywhere
  std::optional<MuStarResult> mu_star_rooted;
  std::optional<MuStarResult> mu_star_unrooted;
};

// Rooted-vs-unrooted level ordering at matched truncation, with optional
// critical-mass brackets computed against a common eps.
inline CompareReport compare_rooted_unrooted(double p, const std::vector<double>& mass_grid,
                                             int depth, int nodes_per_edge,
                                             SolverOptions base_opts, bool with_mu_star,
                                             double bracket_width = 0.05, int threads = 0) {
  TreeSpec rooted_spec{TreeKind::Rooted, 2, 1.0, depth};
  TreeSpec unrooted_spec{TreeKind::Unrooted, 2, 1.0, depth};
  Mesh rooted_mesh = build_mesh(rooted_spec, nodes_per_edge, LeafBC::Dirichlet);
  Mesh unrooted_mesh = build_mesh(unrooted_spec, nodes_per_edge, LeafBC::Dirichlet);
  FemSystem rooted_fem(rooted_mesh);
  FemSystem unrooted_fem(unrooted_mesh);
  const double lam_ref = lambda1_reference(rooted_spec).lambda1;

  CompareReport rep;
  rep.p = p;
  rep.rooted = level_sweep(rooted_fem, rooted_spec, p, mass_grid, base_opts, lam_ref, threads);
  rep.rooted.depth_used = depth;
  rep.rooted.nodes_per_edge = nodes_per_edge;
  rep.unrooted =
      level_sweep(unrooted_fem, unrooted_spec, p, mass_grid, base_opts, lam_ref, threads);
  rep.unrooted.depth_used = depth;
  rep.unrooted.nodes_per_edge = nodes_per_edge;

  rep.max_violation = -std::numeric_limits<double>::infinity();
  rep.ordering_holds = true;
  for (std::size_t i = 0; i < mass_grid.size(); ++i) {
    const LevelPoint& a = rep.rooted.points[i];
    const LevelPoint& b = rep.unrooted.points[i];
    if (!a.converged || !b.converged) continue;
    rep.max_violation = std::max(rep.max_violation, a.energy - b.energy);
    if (a.energy > b.energy + 2.0 * base_opts.grad_tol) rep.ordering_holds = false;
  }

  if (with_mu_star) {
    const double mu_max = mass_grid.back();
    const double eps =
        2.0 * (0.5 * std::max(std::fabs(rep.rooted.lambda1_truncated - lam_ref),
                              std::fabs(rep.unrooted.lambda1_truncated - lam_ref)) *
                   mu_max +
               base_opts.grad_tol);
    rep.mu_star_rooted = mu_star_detect(rep.rooted, rooted_fem, base_opts, eps, bracket_width);
    rep.mu_star_unrooted =
        mu_star_detect(rep.unrooted, unrooted_fem, base_opts, eps, bracket_width);
  }
  return rep;
}

}  // namespace treegs
