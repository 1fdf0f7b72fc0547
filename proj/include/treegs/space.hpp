#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "treegs/common.hpp"
#include "treegs/tree.hpp"

namespace treegs {

// One linear element between two mesh nodes. `weight` multiplies both the
// stiffness and mass contributions (1 on full trees, c0*b^gen on radial
// grids, where it counts the edges represented by the radial coordinate).
struct Element {
  std::int32_t a = 0;
  std::int32_t b = 0;
  double h = 0.0;
  double weight = 1.0;
  std::int32_t generation = 0;
  std::int64_t edge = -1;   // owning tree edge, -1 on radial grids
  double t0 = 0.0;          // geodesic distance of node a from the root/center
};

// Shared discretization core. Nodes form a tree graph (a path for radial
// grids); constrained nodes carry dof -1 and are implicitly zero.
struct Discretization {
  std::int64_t node_count = 0;
  std::vector<Element> elements;
  std::vector<double> node_t;           // geodesic coordinate per node
  std::vector<std::int32_t> radial_index;  // node_t / h in integer steps
  std::vector<std::int32_t> node_to_dof;   // -1 when constrained
  std::vector<std::int32_t> dof_to_node;
  std::int32_t dof_count = 0;
  LeafBC leaf_bc = LeafBC::Dirichlet;

  // dof tree: parent of each dof (towards node 0), -1 at the root dof, plus
  // an elimination order with children listed before their parents.
  std::vector<std::int32_t> dof_parent;
  std::vector<std::int32_t> elimination_order;

  double total_weighted_length = 0.0;

  double coef(const std::vector<double>& x, std::int64_t node) const {
    std::int32_t d = node_to_dof[static_cast<std::size_t>(node)];
    return d < 0 ? 0.0 : x[static_cast<std::size_t>(d)];
  }

  bool is_radial() const { return !elements.empty() && elements.front().edge < 0; }
};

namespace detail {

// Builds node_to_dof/dof_to_node plus the dof tree from node adjacency.
// `node_parent` must describe a tree rooted at node 0 in BFS order
// (parents appear before children).
inline void finalize_dofs(Discretization& d, const std::vector<std::int32_t>& node_parent,
                          const std::vector<std::int64_t>& bfs_order,
                          const std::vector<bool>& constrained) {
  d.node_to_dof.assign(static_cast<std::size_t>(d.node_count), -1);
  d.dof_to_node.clear();
  for (std::int64_t v = 0; v < d.node_count; ++v) {
    if (!constrained[static_cast<std::size_t>(v)]) {
      d.node_to_dof[static_cast<std::size_t>(v)] =
          static_cast<std::int32_t>(d.dof_to_node.size());
      d.dof_to_node.push_back(static_cast<std::int32_t>(v));
    }
  }
  d.dof_count = static_cast<std::int32_t>(d.dof_to_node.size());

  d.dof_parent.assign(static_cast<std::size_t>(d.dof_count), -1);
  for (std::int32_t i = 0; i < d.dof_count; ++i) {
    std::int32_t node = d.dof_to_node[static_cast<std::size_t>(i)];
    std::int32_t pn = node_parent[static_cast<std::size_t>(node)];
    if (pn >= 0) {
      // a constrained parent (-1) splits the dof tree into a forest, which
      // the factorization handles as independent roots
      d.dof_parent[static_cast<std::size_t>(i)] = d.node_to_dof[static_cast<std::size_t>(pn)];
    }
  }

  // reverse BFS puts every child before its parent
  d.elimination_order.clear();
  d.elimination_order.reserve(static_cast<std::size_t>(d.dof_count));
  for (auto it = bfs_order.rbegin(); it != bfs_order.rend(); ++it) {
    std::int32_t dof = d.node_to_dof[static_cast<std::size_t>(*it)];
    if (dof >= 0) d.elimination_order.push_back(dof);
  }
}

}  // namespace detail

// Full-tree finite element mesh: n sub-intervals per edge, tree vertices
// shared across incident edges (continuity is structural, realizing the
// vertex coupling as the natural condition of the weak form).
struct Mesh : Discretization {
  TreeSpec spec;
  int nodes_per_edge = 2;  // n: sub-intervals per edge, h = l/n
  Tree tree;

  // vertex id <-> node id: vertices occupy nodes [0, V)
  std::vector<std::int64_t> leaf_vertices;   // depth-D truncation leaves

  std::int64_t vertex_count() const { return static_cast<std::int64_t>(tree.vertices.size()); }
  std::int64_t node_of_vertex(std::int64_t v) const { return v; }
  // interior mesh node k (0-based from tail) of edge e
  std::int64_t node_of_edge_interior(std::int64_t e, int k) const {
    return vertex_count() + e * (nodes_per_edge - 1) + k;
  }
};

inline constexpr std::int64_t kDefaultDofCap = 2'000'000;

inline Mesh build_mesh(const TreeSpec& spec, int nodes_per_edge, LeafBC leaf_bc,
                       std::int64_t dof_cap = kDefaultDofCap) {
  spec.validate();
  if (nodes_per_edge < 2) throw config_error("nodes-per-edge must be >= 2");

  // overflow-safe size guard before building anything
  double est_edges = 0.0;
  for (int j = 0; j < spec.depth; ++j)
    est_edges += (spec.kind == TreeKind::Rooted ? 1.0 : spec.branching + 1.0) *
                 std::pow(static_cast<double>(spec.branching), j);
  double est_dofs = est_edges * (nodes_per_edge + 1);
  if (est_dofs > static_cast<double>(dof_cap))
    throw resource_error("mesh would exceed the DOF cap (" + std::to_string(dof_cap) +
                         "); reduce depth or nodes-per-edge, or use the radial problem");

  Mesh m;
  m.spec = spec;
  m.nodes_per_edge = nodes_per_edge;
  m.leaf_bc = leaf_bc;
  m.tree = build_tree(spec);

  const std::int64_t V = m.vertex_count();
  const std::int64_t E = static_cast<std::int64_t>(m.tree.edges.size());
  const int n = nodes_per_edge;
  const double h = spec.edge_length / n;
  m.node_count = V + E * (n - 1);

  m.node_t.assign(static_cast<std::size_t>(m.node_count), 0.0);
  m.radial_index.assign(static_cast<std::size_t>(m.node_count), 0);
  for (const auto& v : m.tree.vertices) {
    m.node_t[static_cast<std::size_t>(v.id)] = v.generation * spec.edge_length;
    m.radial_index[static_cast<std::size_t>(v.id)] = static_cast<std::int32_t>(v.generation) * n;
  }

  std::vector<std::int32_t> node_parent(static_cast<std::size_t>(m.node_count), -1);
  m.elements.reserve(static_cast<std::size_t>(E) * n);
  for (const auto& e : m.tree.edges) {
    std::int64_t prev = m.node_of_vertex(e.tail);
    const double tbase = e.generation * spec.edge_length;
    for (int k = 0; k < n; ++k) {
      std::int64_t cur = (k == n - 1) ? m.node_of_vertex(e.head) : m.node_of_edge_interior(e.id, k);
      if (k < n - 1) {
        m.node_t[static_cast<std::size_t>(cur)] = tbase + (k + 1) * h;
        m.radial_index[static_cast<std::size_t>(cur)] =
            static_cast<std::int32_t>(e.generation) * n + k + 1;
      }
      node_parent[static_cast<std::size_t>(cur)] = static_cast<std::int32_t>(prev);
      Element el;
      el.a = static_cast<std::int32_t>(prev);
      el.b = static_cast<std::int32_t>(cur);
      el.h = h;
      el.weight = 1.0;
      el.generation = e.generation;
      el.edge = e.id;
      el.t0 = tbase + k * h;
      m.elements.push_back(el);
      prev = cur;
    }
  }

  // BFS order over nodes: vertices and interiors interleaved by distance.
  // Edge-by-edge emission above already lists parents before children within
  // an edge, and tree vertices are BFS-ordered; a single sweep by radial
  // index gives a global BFS order.
  std::vector<std::int64_t> order(static_cast<std::size_t>(m.node_count));
  for (std::int64_t i = 0; i < m.node_count; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::int64_t a, std::int64_t b) {
    return m.radial_index[static_cast<std::size_t>(a)] < m.radial_index[static_cast<std::size_t>(b)];
  });

  std::vector<bool> constrained(static_cast<std::size_t>(m.node_count), false);
  for (const auto& v : m.tree.vertices) {
    if (v.generation == spec.depth) {
      m.leaf_vertices.push_back(v.id);
      if (leaf_bc == LeafBC::Dirichlet) constrained[static_cast<std::size_t>(v.id)] = true;
    }
  }

  detail::finalize_dofs(m, node_parent, order, constrained);
  m.total_weighted_length = spec.total_length();
  return m;
}

// Weighted half-line reduction. Radial functions on the tree become
// functions of the geodesic coordinate t, with weight w(t) = c0 * b^floor(t/l)
// counting the edges at depth t (c0 = 1 rooted, b+1 unrooted). The
// derivative jump v'(jl+) = v'(jl-)/b is the natural interface condition of
// this weighted form.
struct RadialGrid : Discretization {
  TreeSpec spec;
  int depth_r = 1;
  int nodes_per_edge = 2;
  double c0 = 1.0;

  double weight_at_generation(int j) const {
    return c0 * std::pow(static_cast<double>(spec.branching), j);
  }
};

inline RadialGrid build_radial_grid(const TreeSpec& spec, int depth_r, int nodes_per_edge,
                                    LeafBC leaf_bc = LeafBC::Dirichlet,
                                    std::int64_t dof_cap = kDefaultDofCap) {
  if (spec.branching < 2) throw config_error("branching must be >= 2");
  if (!(spec.edge_length > 0.0)) throw config_error("edge length must be positive");
  if (depth_r < 1) throw config_error("radial depth must be >= 1");
  if (nodes_per_edge < 2) throw config_error("nodes-per-edge must be >= 2");
  if (depth_r * std::log10(static_cast<double>(spec.branching)) > 290.0)
    throw resource_error("radial depth overflows the weight range for this branching");
  const std::int64_t N = static_cast<std::int64_t>(depth_r) * nodes_per_edge + 1;
  if (N > dof_cap) throw resource_error("radial grid would exceed the DOF cap");

  RadialGrid g;
  g.spec = spec;
  g.depth_r = depth_r;
  g.nodes_per_edge = nodes_per_edge;
  g.leaf_bc = leaf_bc;
  g.c0 = spec.kind == TreeKind::Rooted ? 1.0 : spec.branching + 1.0;

  const int n = nodes_per_edge;
  const double h = spec.edge_length / n;
  g.node_count = N;
  g.node_t.resize(static_cast<std::size_t>(N));
  g.radial_index.resize(static_cast<std::size_t>(N));
  std::vector<std::int32_t> node_parent(static_cast<std::size_t>(N), -1);
  std::vector<std::int64_t> order(static_cast<std::size_t>(N));
  for (std::int64_t i = 0; i < N; ++i) {
    g.node_t[static_cast<std::size_t>(i)] = static_cast<double>(i) * h;
    g.radial_index[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(i);
    if (i > 0) node_parent[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(i - 1);
    order[static_cast<std::size_t>(i)] = i;
  }

  g.elements.reserve(static_cast<std::size_t>(N - 1));
  double total = 0.0;
  for (std::int64_t k = 0; k < N - 1; ++k) {
    Element el;
    el.a = static_cast<std::int32_t>(k);
    el.b = static_cast<std::int32_t>(k + 1);
    el.h = h;
    el.generation = static_cast<std::int32_t>(k / n);
    el.weight = g.weight_at_generation(el.generation);
    el.edge = -1;
    el.t0 = static_cast<double>(k) * h;
    g.elements.push_back(el);
    total += el.weight * h;
  }

  std::vector<bool> constrained(static_cast<std::size_t>(N), false);
  if (leaf_bc == LeafBC::Dirichlet) constrained[static_cast<std::size_t>(N - 1)] = true;
  detail::finalize_dofs(g, node_parent, order, constrained);
  g.total_weighted_length = total;
  return g;
}

// Single interval [0, length] with a choice of endpoint constraints;
// used by tests against textbook eigenvalues.
inline Discretization make_interval(double length, int n, bool dirichlet_left,
                                    bool dirichlet_right) {
  Discretization d;
  d.leaf_bc = LeafBC::Dirichlet;
  const std::int64_t N = n + 1;
  const double h = length / n;
  d.node_count = N;
  d.node_t.resize(static_cast<std::size_t>(N));
  d.radial_index.resize(static_cast<std::size_t>(N));
  std::vector<std::int32_t> node_parent(static_cast<std::size_t>(N), -1);
  std::vector<std::int64_t> order(static_cast<std::size_t>(N));
  for (std::int64_t i = 0; i < N; ++i) {
    d.node_t[static_cast<std::size_t>(i)] = i * h;
    d.radial_index[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(i);
    if (i > 0) node_parent[static_cast<std::size_t>(i)] = static_cast<std::int32_t>(i - 1);
    order[static_cast<std::size_t>(i)] = i;
  }
  for (std::int64_t k = 0; k < N - 1; ++k) {
    Element el;
    el.a = static_cast<std::int32_t>(k);
    el.b = static_cast<std::int32_t>(k + 1);
    el.h = h;
    el.weight = 1.0;
    el.generation = 0;
    el.edge = 0;
    el.t0 = k * h;
    d.elements.push_back(el);
  }
  std::vector<bool> constrained(static_cast<std::size_t>(N), false);
  constrained.front() = dirichlet_left;
  constrained.back() = dirichlet_right;
  detail::finalize_dofs(d, node_parent, order, constrained);
  d.total_weighted_length = length;
  return d;
}

}  // namespace treegs
