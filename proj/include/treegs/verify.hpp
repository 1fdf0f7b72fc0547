#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "treegs/analysis.hpp"
#include "treegs/inequalities.hpp"
#include "treegs/parallel.hpp"
#include "treegs/random_fields.hpp"

namespace treegs {

struct InequalityResult {
  std::string name;
  double worst_ratio = 0.0;
  double empirical_constant = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct VerifyReport {
  std::string suite;
  int samples = 0;
  std::uint64_t seed = 0;
  TreeSpec spec;
  int depth_used = 0;
  int nodes_per_edge = 0;
  std::vector<InequalityResult> items;
  bool pass = true;

  void add(InequalityResult item) {
    pass = pass && item.pass;
    items.push_back(std::move(item));
  }
};

struct VerifyConfig {
  TreeSpec spec{TreeKind::Unrooted, 2, 1.0, 8};
  int nodes_per_edge = 8;
  int samples = 1000;
  std::uint64_t seed = 1;
  double p = 4.0;
  int threads = 0;
};

// min over seeded fields of (|u'|^2 - lambda1 |u|^2) / |u|_inf^2; the surgery
// bound gives 3 lambda1 / 2 on the unrooted tree and a third of that on the
// rooted one.
inline VerifyReport verify_poincare(const VerifyConfig& cfg) {
  Mesh mesh = build_mesh(cfg.spec, cfg.nodes_per_edge, LeafBC::Dirichlet);
  FemSystem fem(mesh);
  const double lam = lambda1_reference(cfg.spec).lambda1;

  std::vector<double> ratios(static_cast<std::size_t>(cfg.samples));
  parallel_for(ratios.size(), [&](std::size_t i) {
    Field u = random_smooth_field(mesh, cfg.seed + i);
    RemainderResult r = poincare_remainder(fem, u, lam);
    ratios[i] = r.defined ? r.ratio : std::numeric_limits<double>::infinity();
  }, cfg.threads);

  double worst = std::numeric_limits<double>::infinity();
  for (double r : ratios) worst = std::min(worst, r);

  const double c_surgery = 1.5 * lam / (cfg.spec.kind == TreeKind::Unrooted ? 1.0 : 3.0);
  VerifyReport rep;
  rep.suite = "poincare";
  rep.samples = cfg.samples;
  rep.seed = cfg.seed;
  rep.spec = cfg.spec;
  rep.depth_used = cfg.spec.depth;
  rep.nodes_per_edge = cfg.nodes_per_edge;
  rep.add({"remainder_vs_sup", worst, worst, c_surgery * (1.0 - kLambdaTol),
           worst >= c_surgery * (1.0 - kLambdaTol)});
  return rep;
}

inline VerifyReport verify_weighted(const VerifyConfig& cfg) {
  Mesh mesh = build_mesh(cfg.spec, cfg.nodes_per_edge, LeafBC::Dirichlet);
  FemSystem fem(mesh);
  const double lam = lambda1_reference(cfg.spec).lambda1;

  std::vector<double> ratios(static_cast<std::size_t>(cfg.samples));
  parallel_for(ratios.size(), [&](std::size_t i) {
    Field u = random_smooth_field(mesh, cfg.seed + i);
    RemainderResult r = weighted_remainder(fem, u, lam);
    ratios[i] = r.defined ? r.ratio : std::numeric_limits<double>::infinity();
  }, cfg.threads);
  double worst = std::numeric_limits<double>::infinity();
  for (double r : ratios) worst = std::min(worst, r);

  VerifyReport rep;
  rep.suite = "weighted";
  rep.samples = cfg.samples;
  rep.seed = cfg.seed;
  rep.spec = cfg.spec;
  rep.depth_used = cfg.spec.depth;
  rep.nodes_per_edge = cfg.nodes_per_edge;
  rep.add({"remainder_vs_weighted_l2", worst, worst, 0.0, worst > 0.0});
  return rep;
}

// Gagliardo-Nirenberg ratio |u|_p^p / (|u|_2^{p/2+1} |u'|_2^{p/2-1}) and the
// sup-norm bound |u|_inf <= C |u'|_2; empirical constants reported, finiteness
// asserted (the constants themselves are not quantified).
inline VerifyReport verify_gn(const VerifyConfig& cfg) {
  Mesh mesh = build_mesh(cfg.spec, cfg.nodes_per_edge, LeafBC::Dirichlet);
  FemSystem fem(mesh);
  const double p = cfg.p;

  std::vector<double> gn(static_cast<std::size_t>(cfg.samples)), sn(gn.size());
  parallel_for(gn.size(), [&](std::size_t i) {
    Field u = random_smooth_field(mesh, cfg.seed + i);
    const double l2 = std::sqrt(fem.mass(u.x));
    const double kin = std::sqrt(fem.kinetic_form(u.x));
    const double lpp = p * fem.potential(u.x, p);
    if (l2 == 0.0 || kin == 0.0) {
      gn[i] = 0.0;
      sn[i] = 0.0;
      return;
    }
    gn[i] = lpp / (std::pow(l2, 0.5 * p + 1.0) * std::pow(kin, 0.5 * p - 1.0));
    sn[i] = u.sup_norm() / kin;
  }, cfg.threads);
  double gn_sup = 0.0, sn_sup = 0.0;
  for (std::size_t i = 0; i < gn.size(); ++i) {
    gn_sup = std::max(gn_sup, gn[i]);
    sn_sup = std::max(sn_sup, sn[i]);
  }

  VerifyReport rep;
  rep.suite = "gn";
  rep.samples = cfg.samples;
  rep.seed = cfg.seed;
  rep.spec = cfg.spec;
  rep.depth_used = cfg.spec.depth;
  rep.nodes_per_edge = cfg.nodes_per_edge;
  rep.add({"gn_ratio_sup", gn_sup, gn_sup, 0.0, std::isfinite(gn_sup) && gn_sup > 0.0});
  rep.add({"sup_vs_kinetic", sn_sup, sn_sup, 0.0, std::isfinite(sn_sup) && sn_sup > 0.0});
  return rep;
}

// mass equality (nodal quadrature), kinetic non-increase and Lp non-increase
// for p in {3,4,5} of the quadratic-average symmetrization
inline VerifyReport verify_symmetrize(const VerifyConfig& cfg) {
  Mesh mesh = build_mesh(cfg.spec, cfg.nodes_per_edge, LeafBC::Dirichlet);
  FemSystem fem(mesh);
  RadialGrid grid = make_matching_radial_grid(mesh);
  FemSystem rfem(grid);

  double worst_mass = 0.0, worst_kin = 0.0, worst_lp = 0.0;
  for (int i = 0; i < cfg.samples; ++i) {
    Field u = random_smooth_field(mesh, cfg.seed + static_cast<std::uint64_t>(i));
    Field w = symmetrize(mesh, u, grid);
    const double mu_u = fem.nodal_l2_sq(u.x);
    const double mu_w = rfem.nodal_l2_sq(w.x);
    worst_mass = std::max(worst_mass,
                          std::fabs(mu_u - mu_w) / std::max(1.0, std::fabs(mu_u)));
    worst_kin = std::max(worst_kin, rfem.kinetic_form(w.x) - fem.kinetic_form(u.x));
    for (double p : {3.0, 4.0, 5.0})
      worst_lp = std::max(worst_lp, rfem.nodal_lp_pow(w.x, p) - fem.nodal_lp_pow(u.x, p));
  }

  VerifyReport rep;
  rep.suite = "symmetrize";
  rep.samples = cfg.samples;
  rep.seed = cfg.seed;
  rep.spec = cfg.spec;
  rep.depth_used = cfg.spec.depth;
  rep.nodes_per_edge = cfg.nodes_per_edge;
  rep.add({"mass_equality", worst_mass, worst_mass, 1e-10, worst_mass <= 1e-10});
  rep.add({"kinetic_nonincrease", worst_kin, worst_kin, 1e-10, worst_kin <= 1e-10});
  rep.add({"lp_nonincrease", worst_lp, worst_lp, 1e-10, worst_lp <= 1e-10});
  return rep;
}

inline VerifyReport verify_surgery(const VerifyConfig& cfg) {
  TreeSpec spec = cfg.spec;
  spec.kind = TreeKind::Unrooted;
  Mesh mesh = build_mesh(spec, cfg.nodes_per_edge, LeafBC::Dirichlet);
  FemSystem fem(mesh);
  const double lam = lambda1_reference(spec).lambda1;
  const double ell = spec.edge_length;

  double worst_kin = 0.0, worst_l2 = 0.0, worst_bound = std::numeric_limits<double>::infinity();
  for (int i = 0; i < cfg.samples; ++i) {
    Field u = random_smooth_field(mesh, cfg.seed + static_cast<std::uint64_t>(i));
    SurgeryResult s = surgery_duplicate(mesh, u);
    const double scale_k = std::max(1.0, std::fabs(s.u_kinetic));
    const double scale_m = std::max(1.0, std::fabs(s.u_l2));
    worst_kin = std::max(worst_kin, std::fabs(s.v_kinetic - 2.0 * s.u_kinetic) / scale_k);
    worst_l2 = std::max(worst_l2, std::fabs(s.v_l2 - (2.0 * s.u_l2 +
                                                      3.0 * ell * s.max_value * s.max_value)) /
                                      scale_m);
    if (s.max_value > 0.0) {
      const double remainder = s.u_kinetic - lam * s.u_l2;
      worst_bound = std::min(worst_bound,
                             remainder / (s.max_value * s.max_value) / (1.5 * lam));
    }
  }

  VerifyReport rep;
  rep.suite = "surgery";
  rep.samples = cfg.samples;
  rep.seed = cfg.seed;
  rep.spec = spec;
  rep.depth_used = spec.depth;
  rep.nodes_per_edge = cfg.nodes_per_edge;
  rep.add({"kinetic_identity", worst_kin, worst_kin, 1e-12, worst_kin <= 1e-12});
  rep.add({"mass_identity", worst_l2, worst_l2, 1e-12, worst_l2 <= 1e-12});
  rep.add({"implied_remainder_bound", worst_bound, worst_bound, 1.0 - kLambdaTol,
           worst_bound >= 1.0 - kLambdaTol});
  return rep;
}

// decay of radial fields: |u(t)|^2 b^{floor(t/l)} / |u'|^2 bounded over a
// corpus of eigenfields, ground states and random radial fields, and stable
// under doubling the depth
inline VerifyReport verify_decay(const VerifyConfig& cfg, int depth_a = 100, int depth_b = 200) {
  TreeSpec spec = cfg.spec;
  spec.kind = TreeKind::Rooted;

  // random members are generated once on the shallow grid and carried to the
  // deeper one by zero extension, so the stability check isolates the
  // genuinely depth-dependent corpus members (eigenfields, ground states)
  RadialGrid grid_a = build_radial_grid(spec, depth_a, cfg.nodes_per_edge, LeafBC::Dirichlet);
  const int nrand = std::max(1, cfg.samples - 3);
  std::vector<Field> random_fields;
  random_fields.reserve(static_cast<std::size_t>(nrand));
  for (int i = 0; i < nrand; ++i)
    random_fields.push_back(random_smooth_field(grid_a, cfg.seed + 7919ull * (i + 1)));

  auto corpus_max = [&](int depth_r) {
    RadialGrid grid = build_radial_grid(spec, depth_r, cfg.nodes_per_edge, LeafBC::Dirichlet);
    FemSystem fem(grid);
    double cmax = 0.0;
    EigenResult eig = lambda1_radial(grid, 1e-10, cfg.seed);
    DecayResult d = decay_check(fem, grid, eig.eigenfield);
    if (d.defined) cmax = std::max(cmax, d.c_emp);
    for (double mu : {2.0, 4.0}) {
      SolverOptions o;
      o.p = cfg.p;
      o.mass = mu;
      o.seed = cfg.seed;
      GroundStateResult g = minimize(fem, o);
      DecayResult dg = decay_check(fem, grid, g.u);
      if (dg.defined) cmax = std::max(cmax, dg.c_emp);
    }
    for (const Field& src : random_fields) {
      Field u = Field::zeros(grid);
      std::copy(src.x.begin(), src.x.end(), u.x.begin());
      DecayResult dr = decay_check(fem, grid, u);
      if (dr.defined) cmax = std::max(cmax, dr.c_emp);
    }
    return cmax;
  };

  const double ca = corpus_max(depth_a);
  const double cb = corpus_max(depth_b);
  const double stability = ca > 0.0 ? cb / ca : 0.0;

  VerifyReport rep;
  rep.suite = "decay";
  rep.samples = cfg.samples;
  rep.seed = cfg.seed;
  rep.spec = spec;
  rep.depth_used = depth_b;
  rep.nodes_per_edge = cfg.nodes_per_edge;
  rep.add({"c_emp_finite", cb, cb, 0.0, std::isfinite(cb) && cb > 0.0});
  rep.add({"depth_stability", stability, stability, 2.0,
           stability >= 0.5 && stability <= 2.0});
  return rep;
}

// a priori estimates over a corpus of converged ground states that satisfy
// the energy hypothesis E <= lambda1 mu / 2
inline VerifyReport verify_apriori(const VerifyConfig& cfg) {
  TreeSpec spec = cfg.spec;
  Mesh mesh = build_mesh(spec, cfg.nodes_per_edge, LeafBC::Dirichlet);
  Mesh fine = build_mesh(spec, 2 * cfg.nodes_per_edge, LeafBC::Dirichlet);
  const double lam = lambda1_reference(spec).lambda1;
  const double p = cfg.p;
  const double mexp = (p + 2.0) / (6.0 - p);

  struct Constants {
    double coerc = 0.0;
    double supbound = 0.0;
    double weighted = 0.0;
    int used = 0;
  };
  auto scan = [&](const Mesh& m) {
    FemSystem fem(m);
    Constants c;
    for (double mu : {0.5, 1.0, 2.0, 3.0, 4.0, 6.0}) {
      SolverOptions o;
      o.p = p;
      o.mass = mu;
      o.seed = cfg.seed;
      GroundStateResult g = minimize(fem, o);
      if (!g.converged) continue;
      EnergyReport e = fem.energy(g.u, p);
      if (e.energy > 0.5 * lam * mu) continue;  // hypothesis of the estimates
      ++c.used;
      c.coerc = std::max(c.coerc, (2.0 * e.kinetic - 4.0 * e.energy > 0.0
                                       ? (2.0 * e.kinetic - 4.0 * e.energy) /
                                             std::pow(mu, mexp)
                                       : 0.0));
      if (e.sup_norm > 0.0)
        c.supbound = std::max(c.supbound, 1.0 / (std::pow(e.sup_norm, p - 4.0) * mu));
      const double wl2 = weighted_l2_form(m, g.u.x);
      const double lpp = p * e.potential;
      if (lpp > 0.0) c.weighted = std::max(c.weighted, wl2 / lpp);
    }
    return c;
  };

  Constants coarse = scan(mesh);
  Constants refined = scan(fine);
  if (coarse.used == 0) throw numeric_error("a priori corpus is empty");

  auto stable = [](double a, double b) {
    if (a == 0.0 && b == 0.0) return true;
    if (a <= 0.0 || b <= 0.0) return false;
    const double r = b / a;
    return r >= 0.5 && r <= 2.0;
  };

  VerifyReport rep;
  rep.suite = "apriori";
  rep.samples = coarse.used + refined.used;
  rep.seed = cfg.seed;
  rep.spec = spec;
  rep.depth_used = spec.depth;
  rep.nodes_per_edge = cfg.nodes_per_edge;
  rep.add({"kinetic_coercivity_constant", coarse.coerc, refined.coerc, 0.0,
           std::isfinite(coarse.coerc) && stable(coarse.coerc, refined.coerc)});
  rep.add({"sup_lower_bound_constant", coarse.supbound, refined.supbound, 0.0,
           std::isfinite(coarse.supbound) && coarse.supbound > 0.0 &&
               stable(coarse.supbound, refined.supbound)});
  rep.add({"weighted_l2_vs_lp_constant", coarse.weighted, refined.weighted, 0.0,
           std::isfinite(coarse.weighted) && coarse.weighted > 0.0 &&
               stable(coarse.weighted, refined.weighted)});
  return rep;
}

inline VerifyReport run_verify_suite(const std::string& suite, const VerifyConfig& cfg) {
  if (suite == "poincare") return verify_poincare(cfg);
  if (suite == "weighted") return verify_weighted(cfg);
  if (suite == "gn") return verify_gn(cfg);
  if (suite == "symmetrize") return verify_symmetrize(cfg);
  if (suite == "surgery") return verify_surgery(cfg);
  if (suite == "decay") return verify_decay(cfg);
  if (suite == "apriori") return verify_apriori(cfg);
  throw config_error("unknown verify suite '" + suite +
                     "' (poincare|weighted|gn|symmetrize|surgery|decay|apriori)");
}

}  // namespace treegs
