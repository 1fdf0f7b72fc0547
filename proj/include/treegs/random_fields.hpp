#pragma once

#include <cstdint>
#include <vector>

#include "treegs/energy.hpp"
#include "treegs/rng.hpp"
#include "treegs/space.hpp"

namespace treegs {

// Seeded standard-normal nodal values, k Jacobi smoothing passes over the
// node adjacency, constrained leaves kept at zero. Smoothing keeps the H^1
// norm moderate so inequality ratios stay informative.
inline Field random_smooth_field(const Discretization& space, std::uint64_t seed,
                                 int smoothing_passes = 3) {
  Field f = Field::zeros(space);
  Rng rng(seed);
  std::vector<double> nodal(static_cast<std::size_t>(space.node_count), 0.0);
  for (std::int64_t v = 0; v < space.node_count; ++v) {
    double g = rng.next_normal();
    if (space.node_to_dof[static_cast<std::size_t>(v)] >= 0)
      nodal[static_cast<std::size_t>(v)] = g;
  }

  // node adjacency from elements
  std::vector<std::vector<std::int32_t>> adj(static_cast<std::size_t>(space.node_count));
  for (const Element& el : space.elements) {
    adj[static_cast<std::size_t>(el.a)].push_back(el.b);
    adj[static_cast<std::size_t>(el.b)].push_back(el.a);
  }

  std::vector<double> next(nodal.size());
  for (int pass = 0; pass < smoothing_passes; ++pass) {
    for (std::size_t v = 0; v < nodal.size(); ++v) {
      if (space.node_to_dof[v] < 0) {
        next[v] = 0.0;
        continue;
      }
      double s = 0.0;
      for (std::int32_t w : adj[v]) s += nodal[static_cast<std::size_t>(w)];
      next[v] = adj[v].empty() ? nodal[v] : 0.5 * nodal[v] + 0.5 * s / adj[v].size();
    }
    nodal.swap(next);
  }

  for (std::int32_t i = 0; i < space.dof_count; ++i)
    f.x[static_cast<std::size_t>(i)] = nodal[static_cast<std::size_t>(space.dof_to_node[i])];
  return f;
}

}  // namespace treegs
