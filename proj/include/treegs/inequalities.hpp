#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "treegs/eigen.hpp"
#include "treegs/energy.hpp"
#include "treegs/random_fields.hpp"
#include "treegs/solver.hpp"
#include "treegs/space.hpp"

namespace treegs {

// relative slack absorbed by thresholds that involve the reference lambda1
inline constexpr double kLambdaTol = 1e-3;

struct RemainderResult {
  bool defined = false;
  double remainder = 0.0;   // |u'|^2 - lambda1 |u|^2
  double sup_sq = 0.0;
  double weighted_l2 = 0.0; // int |u|^2 / (1+|x|)^2
  double ratio = 0.0;
};

// Poincare remainder against the sup norm; the field must vanish on the
// truncation leaves so its zero extension lives on the infinite tree.
inline RemainderResult poincare_remainder(const FemSystem& fem, const Field& u,
                                          double lambda1_ref_value) {
  RemainderResult r;
  r.sup_sq = u.sup_norm() * u.sup_norm();
  if (r.sup_sq == 0.0) return r;
  r.defined = true;
  r.remainder = fem.kinetic_form(u.x) - lambda1_ref_value * fem.mass(u.x);
  r.ratio = r.remainder / r.sup_sq;
  return r;
}

// exact integral of (linear interpolant)^2 / (1+t)^2 on one element:
// with u = kappa (1+t) + c0 the antiderivative is elementary
inline double element_weighted_l2(double va, double vb, double h, double weight, double t0) {
  const double gamma = 1.0 + t0;
  const double kappa = (vb - va) / h;
  const double c0 = va - kappa * gamma;
  const double log_term = std::log1p(h / gamma);
  return weight * (kappa * kappa * h + 2.0 * kappa * c0 * log_term +
                   c0 * c0 * h / (gamma * (gamma + h)));
}

inline double weighted_l2_form(const Discretization& space, const std::vector<double>& x) {
  double s = 0.0;
  for (const Element& el : space.elements)
    s += element_weighted_l2(space.coef(x, el.a), space.coef(x, el.b), el.h, el.weight,
                             el.t0);
  return s;
}

inline RemainderResult weighted_remainder(const FemSystem& fem, const Field& u,
                                          double lambda1_ref_value) {
  RemainderResult r;
  r.weighted_l2 = weighted_l2_form(fem.space(), u.x);
  if (r.weighted_l2 == 0.0) return r;
  r.defined = true;
  r.remainder = fem.kinetic_form(u.x) - lambda1_ref_value * fem.mass(u.x);
  r.sup_sq = u.sup_norm() * u.sup_norm();
  r.ratio = r.remainder / r.weighted_l2;
  return r;
}

// ---- symmetrization --------------------------------------------------------

inline RadialGrid make_matching_radial_grid(const Mesh& mesh) {
  return build_radial_grid(mesh.spec, mesh.spec.depth, mesh.nodes_per_edge, mesh.leaf_bc);
}

// Quadratic average across each depth slice: at radial coordinate t the value
// is sqrt(mean of u^2 over the mesh nodes at depth t). Constrained leaves
// participate with value zero.
inline Field symmetrize(const Mesh& mesh, const Field& u, const RadialGrid& grid) {
  if (grid.nodes_per_edge != mesh.nodes_per_edge || grid.depth_r < mesh.spec.depth)
    throw config_error("radial grid does not match the mesh resolution");
  const std::int32_t rmax = mesh.spec.depth * mesh.nodes_per_edge;
  std::vector<double> sumsq(static_cast<std::size_t>(rmax) + 1, 0.0);
  std::vector<double> count(static_cast<std::size_t>(rmax) + 1, 0.0);
  for (std::int64_t v = 0; v < mesh.node_count; ++v) {
    const std::int32_t r = mesh.radial_index[static_cast<std::size_t>(v)];
    const double val = u.value_at_node(v);
    sumsq[static_cast<std::size_t>(r)] += val * val;
    count[static_cast<std::size_t>(r)] += 1.0;
  }
  Field w = Field::zeros(grid);
  for (std::int64_t node = 0; node < grid.node_count; ++node) {
    const std::int32_t d = grid.node_to_dof[static_cast<std::size_t>(node)];
    if (d < 0) continue;
    const std::int32_t r = grid.radial_index[static_cast<std::size_t>(node)];
    if (r <= rmax && count[static_cast<std::size_t>(r)] > 0.0)
      w.x[static_cast<std::size_t>(d)] =
          std::sqrt(sumsq[static_cast<std::size_t>(r)] / count[static_cast<std::size_t>(r)]);
  }
  return w;
}

// radial profile carried back onto the full mesh by depth
inline Field lift_radial(const RadialGrid& grid, const Field& v, const Mesh& mesh) {
  if (grid.nodes_per_edge != mesh.nodes_per_edge || grid.depth_r < mesh.spec.depth)
    throw config_error("radial grid does not match the mesh resolution");
  Field out = Field::zeros(mesh);
  for (std::int32_t i = 0; i < mesh.dof_count; ++i) {
    const std::int64_t node = mesh.dof_to_node[static_cast<std::size_t>(i)];
    const std::int32_t r = mesh.radial_index[static_cast<std::size_t>(node)];
    out.x[static_cast<std::size_t>(i)] = v.value_at_node(r);
  }
  return out;
}

// ---- surgery ---------------------------------------------------------------

struct SurgeryResult {
  std::int64_t x0_node = -1;
  double max_value = 0.0;       // M, after sign normalization
  double stub_length = 0.0;     // distance from x0 to the nearest vertex on the T1 side
  double junction_length = 0.0; // always 3 l
  double u_kinetic = 0.0;       // |u'|^2
  double u_l2 = 0.0;            // |u|^2
  double v_kinetic = 0.0;       // assembled on the rearranged network
  double v_l2 = 0.0;
  std::int64_t network_elements = 0;
};

// Duplicates the two components of the tree across the maximum point and
// joins them through a junction of total length 3 l held at the constant
// value M. Both quadratic forms of the rearranged field are assembled
// directly from the new element list, so the identities
// |v'|^2 = 2 |u'|^2 and |v|^2 = 2 |u|^2 + 3 l M^2 are checked against an
// independent route.
inline SurgeryResult surgery_duplicate(const Mesh& mesh, const Field& u_in,
                                       std::int64_t x0_node = -1) {
  if (mesh.spec.kind != TreeKind::Unrooted)
    throw config_error("surgery is defined on the unrooted tree");
  Field u = u_in;
  // sign-normalize so the extremum is a positive maximum
  double best = 0.0;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < u.x.size(); ++i)
    if (std::fabs(u.x[i]) > best) {
      best = std::fabs(u.x[i]);
      arg = i;
    }
  SurgeryResult res;
  res.junction_length = 3.0 * mesh.spec.edge_length;
  if (best == 0.0) {  // zero field: identities hold trivially with M = 0
    res.x0_node = x0_node >= 0 ? x0_node : 0;
    return res;
  }
  if (u.x[arg] < 0.0)
    for (auto& v : u.x) v = -v;
  if (x0_node < 0) x0_node = mesh.dof_to_node[static_cast<std::size_t>(arg)];
  if (x0_node < 0 || x0_node >= mesh.node_count)
    throw config_error("surgery point is not a mesh node");
  res.x0_node = x0_node;
  res.max_value = u.value_at_node(x0_node);

  res.u_kinetic = 0.0;
  res.u_l2 = 0.0;
  const TreeOperator K = assemble_stiffness(mesh);
  const TreeOperator M = assemble_mass(mesh, false);
  res.u_kinetic = K.form(u.x);
  res.u_l2 = M.form(u.x);

  // stub length: offset of x0 inside its edge (full edge length at a vertex)
  const double ell = mesh.spec.edge_length;
  {
    const std::int32_t r = mesh.radial_index[static_cast<std::size_t>(x0_node)];
    const int n = mesh.nodes_per_edge;
    const int off = r % n;
    res.stub_length = off == 0 ? ell : off * (ell / n);
  }

  // assemble the rearranged network forms: every element of the punctured
  // tree twice, plus the junction at constant M
  double vk = 0.0, vl = 0.0;
  std::int64_t nelem = 0;
  for (const Element& el : mesh.elements) {
    const double a = u.value_at_node(el.a);
    const double b = u.value_at_node(el.b);
    vk += 2.0 * el.weight * (b - a) * (b - a) / el.h;
    vl += 2.0 * el.weight * el.h * (a * a + a * b + b * b) / 3.0;
    nelem += 2;
  }
  {
    const int n = mesh.nodes_per_edge;
    const double h = ell / n;
    const double Msq = res.max_value * res.max_value;
    // central edge (n elements) + two stubs + two complementary stubs,
    // 3 l of metric length in total
    const std::int64_t stub_elems = static_cast<std::int64_t>(std::llround(
        res.stub_length / h));
    const std::int64_t total_j = n + 2 * stub_elems + 2 * (n - stub_elems);
    vl += static_cast<double>(total_j) * h * Msq;  // constant value: mass only
    nelem += total_j;
  }
  res.v_kinetic = vk;
  res.v_l2 = vl;
  res.network_elements = nelem;
  return res;
}

// ---- decay -----------------------------------------------------------------

struct DecayResult {
  bool defined = false;
  double c_emp = 0.0;        // max of |u(t)|^2 b^{floor(t/l)} / |u'|^2
  double worst_t = 0.0;
};

inline DecayResult decay_check(const FemSystem& fem, const RadialGrid& grid, const Field& u) {
  DecayResult r;
  const double kin = fem.kinetic_form(u.x);
  if (!(kin > 0.0)) return r;
  r.defined = true;
  const double b = static_cast<double>(grid.spec.branching);
  const int n = grid.nodes_per_edge;
  for (std::int64_t node = 0; node < grid.node_count; ++node) {
    const double val = u.value_at_node(node);
    const int gen = static_cast<int>(grid.radial_index[static_cast<std::size_t>(node)] / n);
    const double c = val * val * std::pow(b, gen) / kin;
    if (c > r.c_emp) {
      r.c_emp = c;
      r.worst_t = grid.node_t[static_cast<std::size_t>(node)];
    }
  }
  return r;
}

}  // namespace treegs
