#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "treegs/common.hpp"

namespace treegs {

// A truncated homogeneous metric tree. Rooted: the root has a single child
// edge and every other interior vertex has `branching` children. Unrooted:
// the center carries branching+1 child edges (equivalently, branching+1
// rooted trees sharing their root), so every interior vertex has degree
// branching+1.
struct TreeSpec {
  TreeKind kind = TreeKind::Rooted;
  int branching = 2;        // children per interior vertex, b >= 2
  double edge_length = 1.0; // l > 0
  int depth = 1;            // generations kept before truncation, D >= 1

  void validate() const {
    if (branching < 2) throw config_error("branching must be >= 2");
    if (!(edge_length > 0.0) || !std::isfinite(edge_length))
      throw config_error("edge length must be positive and finite");
    if (depth < 1) throw config_error("depth must be >= 1");
    // keep b^depth within int64; the mesh DOF cap is far stricter anyway
    if (static_cast<double>(depth) * std::log2(static_cast<double>(branching)) > 42.0)
      throw config_error("depth out of range for branching " + std::to_string(branching));
  }

  // edges created at generation j (0-based)
  std::int64_t edges_at_generation(int j) const {
    std::int64_t base = 1;
    for (int i = 0; i < j; ++i) base *= branching;
    return kind == TreeKind::Rooted ? base : (branching + 1) * base;
  }

  std::int64_t total_edges() const {
    std::int64_t sum = 0;
    for (int j = 0; j < depth; ++j) sum += edges_at_generation(j);
    return sum;
  }

  double total_length() const {
    return static_cast<double>(total_edges()) * edge_length;
  }

  // number of children hanging below a vertex of given generation
  int children_of(int generation) const {
    if (generation >= depth) return 0;
    if (generation == 0) return kind == TreeKind::Rooted ? 1 : branching + 1;
    return branching;
  }
};

struct TreeVertex {
  std::int64_t id = 0;
  int generation = 0;          // graph distance from root/center in edges
  std::int64_t parent_vertex = -1;
  std::int64_t parent_edge = -1;
};

struct TreeEdge {
  std::int64_t id = 0;
  std::int64_t tail = 0;  // vertex closer to the root/center
  std::int64_t head = 0;
  int generation = 0;
};

struct Tree {
  TreeSpec spec;
  std::vector<TreeVertex> vertices;
  std::vector<TreeEdge> edges;
};

// Breadth-first construction; ids are deterministic.
inline Tree build_tree(const TreeSpec& spec) {
  spec.validate();
  if (spec.total_edges() > (std::int64_t(1) << 40))
    throw resource_error("tree too large: " + std::to_string(spec.total_edges()) + " edges");

  Tree tree;
  tree.spec = spec;
  tree.vertices.push_back(TreeVertex{0, 0, -1, -1});
  std::size_t next = 0;
  while (next < tree.vertices.size()) {
    const std::int64_t vid = static_cast<std::int64_t>(next);
    const int gen = tree.vertices[next].generation;
    ++next;
    const int nchild = spec.children_of(gen);
    for (int c = 0; c < nchild; ++c) {
      std::int64_t eid = static_cast<std::int64_t>(tree.edges.size());
      std::int64_t wid = static_cast<std::int64_t>(tree.vertices.size());
      tree.edges.push_back(TreeEdge{eid, vid, wid, gen});
      tree.vertices.push_back(TreeVertex{wid, gen + 1, vid, eid});
    }
  }
  return tree;
}

}  // namespace treegs
