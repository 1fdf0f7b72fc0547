#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "treegs/common.hpp"
#include "treegs/eigen.hpp"
#include "treegs/energy.hpp"
#include "treegs/operators.hpp"
#include "treegs/random_fields.hpp"
#include "treegs/space.hpp"

namespace treegs {

enum class InitKind { Eigenfield, EdgeBump, Random, Provided };

struct SolverOptions {
  double p = 4.0;
  double mass = 1.0;
  int max_iters = 20000;
  double grad_tol = 1e-9;         // projected-gradient norm, relative to |u|_H1
  double backtrack_ratio = 0.5;
  double sufficient_decrease = 1e-4;
  int multistart = 3;             // eigenfield, bump, then seeded random starts
  std::uint64_t seed = 0;
  std::optional<Field> init;      // Provided start; used alone when set

  void validate() const {
    require_exponent(p);
    if (!(mass >= 0.0) || !std::isfinite(mass)) throw config_error("mass must be >= 0");
    if (max_iters < 1) throw config_error("max-iters must be >= 1");
    if (!(grad_tol > 0.0)) throw config_error("grad-tol must be positive");
    if (multistart < 1) throw config_error("multistart must be >= 1");
  }
};

struct GroundStateResult {
  Field u;                     // nonnegative, mass exactly mu after final rescale
  double energy = 0.0;
  double lambda = 0.0;         // weak-form multiplier: K u - N_p(u) - lambda M u = 0
  double projected_grad_norm = 0.0;
  double ode_residual = 0.0;       // max interior-node defect of u'' + |u|^{p-2}u + lambda u
  double kirchhoff_residual = 0.0; // max vertex flux defect (weighted flux on radial grids)
  int iterations = 0;
  bool converged = false;
  InitKind winning_init = InitKind::Eigenfield;
  int winning_start = 0;
};

namespace detail {

inline void rescale_to_mass(const FemSystem& fem, std::vector<double>& x, double mu) {
  const double m = fem.mass(x);
  if (!(m > 0.0)) throw numeric_error("cannot rescale a zero field to positive mass");
  const double c = std::sqrt(mu / m);
  for (auto& v : x) v *= c;
}

inline void retract(const FemSystem& fem, std::vector<double>& x, double mu) {
  for (auto& v : x) v = std::fabs(v);
  rescale_to_mass(fem, x, mu);
}

struct DescentOutcome {
  std::vector<double> x;
  double energy = 0.0;
  double lambda = 0.0;
  double pg_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Projected gradient descent on the mass sphere, preconditioned by
// (K + M)^-1, Barzilai-Borwein trial step with Armijo backtracking, and an
// absolute-value retraction that also restores the mass exactly.
inline DescentOutcome descend(const FemSystem& fem, const SolverOptions& opt,
                              std::vector<double> x) {
  const double mu = opt.mass;
  const double p = opt.p;
  retract(fem, x, mu);

  DescentOutcome out;
  double E = fem.energy_value(x, p);
  double potential = fem.potential(x, p);
  std::vector<double> x_prev, r_prev;
  double bb_step = 1.0;
  const double eps = std::numeric_limits<double>::epsilon();

  for (int it = 0; it < opt.max_iters; ++it) {
    std::vector<double> kx = fem.stiffness().apply(x);
    std::vector<double> q = fem.potential_gradient(x, p);
    std::vector<double> mx = fem.mass_op().apply(x);
    const double kin_form = dot(x, kx);
    double lambda = (kin_form - dot(x, q)) / mu;
    std::vector<double> r(kx.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = kx[i] - q[i] - lambda * mx[i];

    std::vector<double> d = fem.h1_solver().solve_copy(r);
    const double rn2 = std::max(0.0, dot(r, d));  // |r|^2 in the (K+M)^-1 metric
    for (auto& v : d) v = -v;
    const double un = std::sqrt(std::max(kin_form + mu, 1e-300));
    const double pg = std::sqrt(rn2) / un;

    out.energy = E;
    out.lambda = lambda;
    out.pg_norm = pg;
    out.iterations = it;
    if (pg <= opt.grad_tol) {
      out.converged = true;
      out.x = std::move(x);
      return out;
    }

    if (!x_prev.empty()) {
      double ss = 0.0, sy = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        const double s = x[i] - x_prev[i];
        ss += s * s;
        sy += s * (r[i] - r_prev[i]);
      }
      bb_step = sy > 0.0 ? ss / sy : 1.0;
    }
    double alpha = std::clamp(bb_step, 1e-3, 1e3);

    // energies near the optimum differ below fp resolution; allow that much
    const double noise = 64.0 * eps * (std::fabs(E) + 0.5 * std::fabs(kin_form) +
                                       std::fabs(potential));
    bool accepted = false;
    std::vector<double> y;
    double Ey = 0.0;
    for (int ls = 0; ls < 80; ++ls) {
      y = x;
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += alpha * d[i];
      retract(fem, y, mu);
      Ey = fem.energy_value(y, p);
      if (!std::isfinite(Ey)) throw numeric_error("non-finite energy in line search");
      if (Ey <= E - opt.sufficient_decrease * alpha * rn2 + noise) {
        accepted = true;
        break;
      }
      alpha *= opt.backtrack_ratio;
    }
    if (!accepted) {
      out.x = std::move(x);
      return out;  // converged stays false; caller reports honestly
    }
    x_prev = std::move(x);
    r_prev = std::move(r);
    x = std::move(y);
    E = Ey;
    potential = fem.potential(x, p);
  }
  out.x = std::move(x);
  return out;
}

inline std::vector<double> bump_start(const Discretization& space, double p, double mu) {
  // sech profile centered at the root edge midpoint on full meshes (where a
  // vertex-free neighborhood exists) and at t = 0 on radial grids
  const double beta = std::max(0.5, 0.25 * std::pow(std::max(mu, 1e-8), (p - 2.0) / (6.0 - p)));
  double center = 0.0;
  if (!space.is_radial()) center = 0.5 * space.elements.front().h;  // near the root/center
  std::vector<double> x(static_cast<std::size_t>(space.dof_count), 0.0);
  for (std::int32_t i = 0; i < space.dof_count; ++i) {
    const double t = space.node_t[static_cast<std::size_t>(space.dof_to_node[i])];
    const double a = std::min(700.0, beta * std::fabs(t - center));
    x[static_cast<std::size_t>(i)] = 1.0 / std::cosh(a);
  }
  return x;
}

}  // namespace detail

// residual diagnostics -------------------------------------------------------

// max over interior (degree-2) nodes of the strong-form defect
// u'' + |u|^{p-2} u + lambda u via second differences
inline double ode_residual(const Discretization& space, const std::vector<double>& x,
                           double p, double lambda) {
  std::vector<int> degree(static_cast<std::size_t>(space.node_count), 0);
  std::vector<std::int32_t> nb_a(static_cast<std::size_t>(space.node_count), -1);
  std::vector<std::int32_t> nb_b(static_cast<std::size_t>(space.node_count), -1);
  std::vector<double> hh(static_cast<std::size_t>(space.node_count), 0.0);
  std::vector<double> wa(static_cast<std::size_t>(space.node_count), 0.0);
  std::vector<double> wb(static_cast<std::size_t>(space.node_count), 0.0);
  for (const Element& el : space.elements) {
    auto touch = [&](std::int32_t v, std::int32_t other, double w) {
      if (degree[static_cast<std::size_t>(v)] == 0) {
        nb_a[static_cast<std::size_t>(v)] = other;
        wa[static_cast<std::size_t>(v)] = w;
      } else if (degree[static_cast<std::size_t>(v)] == 1) {
        nb_b[static_cast<std::size_t>(v)] = other;
        wb[static_cast<std::size_t>(v)] = w;
      }
      ++degree[static_cast<std::size_t>(v)];
      hh[static_cast<std::size_t>(v)] = el.h;
    };
    touch(el.a, el.b, el.weight);
    touch(el.b, el.a, el.weight);
  }
  double worst = 0.0;
  for (std::int64_t v = 0; v < space.node_count; ++v) {
    const std::size_t vv = static_cast<std::size_t>(v);
    if (degree[vv] != 2 || wa[vv] != wb[vv]) continue;  // vertices and breakpoints excluded
    const double u = space.coef(x, v);
    const double ua = space.coef(x, nb_a[vv]);
    const double ub = space.coef(x, nb_b[vv]);
    const double h = hh[vv];
    const double second = (ua - 2.0 * u + ub) / (h * h);
    const double defect = second + sign_power(u, p - 1.0) + lambda * u;
    worst = std::max(worst, std::fabs(defect));
  }
  return worst;
}

// max over shared vertices (or radial breakpoints) of the outgoing flux sum,
// weighted by the element weights so the radial jump condition is covered
inline double kirchhoff_residual(const Discretization& space, const std::vector<double>& x) {
  std::vector<double> flux(static_cast<std::size_t>(space.node_count), 0.0);
  std::vector<int> degree(static_cast<std::size_t>(space.node_count), 0);
  std::vector<int> is_breakpoint(static_cast<std::size_t>(space.node_count), 0);
  for (const Element& el : space.elements) {
    const double ua = space.coef(x, el.a);
    const double ub = space.coef(x, el.b);
    const double slope = (ub - ua) / el.h;
    flux[static_cast<std::size_t>(el.a)] += el.weight * slope;    // outgoing from a
    flux[static_cast<std::size_t>(el.b)] -= el.weight * slope;    // outgoing from b
    ++degree[static_cast<std::size_t>(el.a)];
    ++degree[static_cast<std::size_t>(el.b)];
  }
  // flag nodes where the element weight changes (radial generation breakpoints)
  std::vector<double> wseen(static_cast<std::size_t>(space.node_count), -1.0);
  for (const Element& el : space.elements) {
    for (std::int32_t v : {el.a, el.b}) {
      if (wseen[static_cast<std::size_t>(v)] < 0.0)
        wseen[static_cast<std::size_t>(v)] = el.weight;
      else if (wseen[static_cast<std::size_t>(v)] != el.weight)
        is_breakpoint[static_cast<std::size_t>(v)] = 1;
    }
  }
  double worst = 0.0;
  for (std::int64_t v = 0; v < space.node_count; ++v) {
    const std::size_t vv = static_cast<std::size_t>(v);
    if (space.node_to_dof[vv] < 0) continue;     // constrained leaves excluded
    if (degree[vv] == 2 && !is_breakpoint[vv]) continue;  // mid-edge nodes
    worst = std::max(worst, std::fabs(flux[vv]));
  }
  return worst;
}

inline GroundStateResult minimize(const FemSystem& fem, const SolverOptions& opt_in) {
  SolverOptions opt = opt_in;
  opt.validate();
  const Discretization& space = fem.space();

  GroundStateResult best;
  best.u = Field::zeros(space);
  if (opt.mass == 0.0) {  // the zero field is the minimizer of mass zero
    best.converged = true;
    return best;
  }

  std::vector<std::pair<InitKind, std::vector<double>>> starts;
  if (opt.init.has_value()) {
    starts.emplace_back(InitKind::Provided, opt.init->x);
  } else {
    EigenResult eig = lambda1_solve(fem, 1e-8, opt.seed);
    starts.emplace_back(InitKind::Eigenfield, eig.eigenfield.x);
    if (opt.multistart >= 2)
      starts.emplace_back(InitKind::EdgeBump, detail::bump_start(space, opt.p, opt.mass));
    for (int k = 2; k < opt.multistart; ++k) {
      Field f = random_smooth_field(space, opt.seed + 1000003ull * (k - 1));
      starts.emplace_back(InitKind::Random, std::move(f.x));
    }
  }

  bool have = false;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    detail::DescentOutcome cand = detail::descend(fem, opt, starts[s].second);
    Field u;
    u.space = &space;
    u.x = std::move(cand.x);
    const double sup = u.sup_norm();
    const bool better =
        !have || cand.energy < best.energy - 1e-10 ||
        (std::fabs(cand.energy - best.energy) <= 1e-10 && sup < best.u.sup_norm());
    if (better) {
      best.u = std::move(u);
      best.energy = cand.energy;
      best.lambda = cand.lambda;
      best.projected_grad_norm = cand.pg_norm;
      best.iterations = cand.iterations;
      best.converged = cand.converged;
      best.winning_init = starts[s].first;
      best.winning_start = static_cast<int>(s);
      have = true;
    }
  }

  best.ode_residual = ode_residual(space, best.u.x, opt.p, best.lambda);
  best.kirchhoff_residual = kirchhoff_residual(space, best.u.x);
  return best;
}

inline GroundStateResult minimize(const Mesh& mesh, const SolverOptions& opt) {
  FemSystem fem(mesh);
  return minimize(fem, opt);
}

inline GroundStateResult minimize_radial(const RadialGrid& grid, const SolverOptions& opt) {
  FemSystem fem(grid);
  return minimize(fem, opt);
}

}  // namespace treegs
