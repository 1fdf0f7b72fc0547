#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "treegs/common.hpp"
#include "treegs/solver.hpp"
#include "treegs/space.hpp"

namespace treegs {

struct ShootingReport {
  double max_deviation = 0.0;     // over nodes inside the comparison window
  double deviation_floor = 0.0;   // window: |u| >= floor * sup
  double tail_value = 0.0;        // |v| at the last integrated node
  double compared_up_to = 0.0;    // t of the last compared node
  bool diverged = false;          // growing mode took over before the window closed
  std::vector<double> profile;    // integrated v at the grid nodes
};

// Independent check of a radial profile: integrate the stationary equation
// v'' = -(lambda v + |v|^{p-2} v) with classical RK4 from (v(0)=u(0), v'(0)=0),
// scaling v' by 1/b across each generation breakpoint, and compare with the
// finite element profile. The equation's decaying mode loses out to the
// growing one in fp arithmetic once v is tiny, so deviations are measured
// only while |u| stays above floor*sup; past that the report carries the tail.
inline ShootingReport shooting_verify(const GroundStateResult& result, const RadialGrid& grid,
                                      double p, int substeps = 8, double window_floor = 1e-5,
                                      bool drop_nonlinearity = false,
                                      double lambda_override = 0.0,
                                      bool use_lambda_override = false) {
  require_exponent(p);
  const double lambda = use_lambda_override ? lambda_override : result.lambda;
  const double b = static_cast<double>(grid.spec.branching);
  const int n = grid.nodes_per_edge;
  const double h = grid.spec.edge_length / n;
  const double hs = h / substeps;

  const std::vector<double>& x = result.u.x;
  auto uval = [&](std::int64_t node) { return grid.coef(x, node); };

  ShootingReport rep;
  rep.deviation_floor = window_floor;
  const double sup = result.u.sup_norm();
  const double floor_abs = window_floor * (sup > 0.0 ? sup : 1.0);
  const double blowup = 10.0 * (sup > 0.0 ? sup : 1.0);

  auto rhs = [&](double v) {
    double f = -lambda * v;
    if (!drop_nonlinearity) f -= sign_power(v, p - 1.0);
    return f;
  };

  double v = uval(0);
  double w = 0.0;  // v'
  rep.profile.assign(static_cast<std::size_t>(grid.node_count), 0.0);
  rep.profile[0] = v;
  bool in_window = true;
  for (std::int64_t node = 1; node < grid.node_count; ++node) {
    for (int s = 0; s < substeps; ++s) {
      const double k1v = w, k1w = rhs(v);
      const double k2v = w + 0.5 * hs * k1w, k2w = rhs(v + 0.5 * hs * k1v);
      const double k3v = w + 0.5 * hs * k2w, k3w = rhs(v + 0.5 * hs * k2v);
      const double k4v = w + hs * k3w, k4w = rhs(v + hs * k3v);
      v += hs / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
      w += hs / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
    }
    rep.profile[static_cast<std::size_t>(node)] = v;
    const double ref = uval(node);
    if (in_window && std::fabs(ref) >= floor_abs) {
      rep.max_deviation = std::max(rep.max_deviation, std::fabs(v - ref));
      rep.compared_up_to = grid.node_t[static_cast<std::size_t>(node)];
    } else {
      in_window = false;  // window is the initial segment where u is resolved
    }
    if (std::fabs(v) > blowup) {
      rep.diverged = true;
      break;
    }
    // breakpoint jump: v'(t+) = v'(t-)/b at generation boundaries
    if (node % n == 0 && node < grid.node_count - 1) w /= b;
  }
  rep.tail_value = std::fabs(v);
  return rep;
}

}  // namespace treegs
