#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "treegs/common.hpp"
#include "treegs/space.hpp"

namespace treegs {

// Symmetric operator whose sparsity pattern is the dof tree: one diagonal
// entry per dof plus one off-diagonal entry coupling each dof to its parent.
// P1 stiffness and mass matrices on a tree mesh have exactly this pattern.
struct TreeOperator {
  const Discretization* space = nullptr;
  std::vector<double> diag;
  std::vector<double> off;  // off[i] couples dof i with dof_parent[i]

  std::int32_t size() const { return space ? space->dof_count : 0; }

  void apply(const std::vector<double>& x, std::vector<double>& y) const {
    const auto& parent = space->dof_parent;
    const std::size_t n = diag.size();
    y.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) y[i] = diag[i] * x[i];
    for (std::size_t i = 0; i < n; ++i) {
      std::int32_t p = parent[i];
      if (p >= 0) {
        y[i] += off[i] * x[static_cast<std::size_t>(p)];
        y[static_cast<std::size_t>(p)] += off[i] * x[i];
      }
    }
  }

  std::vector<double> apply(const std::vector<double>& x) const {
    std::vector<double> y;
    apply(x, y);
    return y;
  }

  double form(const std::vector<double>& x) const {
    const auto& parent = space->dof_parent;
    double q = 0.0, c = 0.0;
    for (std::size_t i = 0; i < diag.size(); ++i) {
      q += diag[i] * x[i] * x[i];
      std::int32_t p = parent[i];
      if (p >= 0) c += off[i] * x[i] * x[static_cast<std::size_t>(p)];
    }
    return q + 2.0 * c;
  }
};

namespace detail {

inline void add_entry(TreeOperator& op, std::int32_t da, std::int32_t db, double vaa,
                      double vbb, double vab) {
  const auto& parent = op.space->dof_parent;
  if (da >= 0) op.diag[static_cast<std::size_t>(da)] += vaa;
  if (db >= 0) op.diag[static_cast<std::size_t>(db)] += vbb;
  if (da >= 0 && db >= 0) {
    if (parent[static_cast<std::size_t>(db)] == da)
      op.off[static_cast<std::size_t>(db)] += vab;
    else
      op.off[static_cast<std::size_t>(da)] += vab;
  }
}

}  // namespace detail

inline TreeOperator assemble_stiffness(const Discretization& space) {
  TreeOperator op;
  op.space = &space;
  op.diag.assign(static_cast<std::size_t>(space.dof_count), 0.0);
  op.off.assign(static_cast<std::size_t>(space.dof_count), 0.0);
  for (const Element& el : space.elements) {
    const double k = el.weight / el.h;
    detail::add_entry(op, space.node_to_dof[static_cast<std::size_t>(el.a)],
                      space.node_to_dof[static_cast<std::size_t>(el.b)], k, k, -k);
  }
  return op;
}

inline TreeOperator assemble_mass(const Discretization& space, bool lumped = false) {
  TreeOperator op;
  op.space = &space;
  op.diag.assign(static_cast<std::size_t>(space.dof_count), 0.0);
  op.off.assign(static_cast<std::size_t>(space.dof_count), 0.0);
  for (const Element& el : space.elements) {
    const double m = el.weight * el.h / 6.0;
    std::int32_t da = space.node_to_dof[static_cast<std::size_t>(el.a)];
    std::int32_t db = space.node_to_dof[static_cast<std::size_t>(el.b)];
    if (lumped)
      detail::add_entry(op, da, db, 3.0 * m, 3.0 * m, 0.0);
    else
      detail::add_entry(op, da, db, 2.0 * m, 2.0 * m, m);
  }
  return op;
}

// LDL^T factorization of alpha*A + beta*B (same pattern). Elimination in the
// stored child-before-parent order produces no fill on a tree, so both the
// factorization and the solves are O(n). The number of negative pivots equals
// the number of eigenvalues of the pencil below the shift (Sylvester), which
// drives the bisection eigensolver.
struct TreeFactorization {
  const Discretization* space = nullptr;
  std::vector<double> d;  // pivots
  std::vector<double> l;  // l[i] multiplies the parent row of dof i
  int negative_pivots = 0;
  bool singular = false;

  void factor(const TreeOperator& A, const TreeOperator& B, double alpha, double beta) {
    space = A.space;
    const std::size_t n = A.diag.size();
    d.resize(n);
    l.assign(n, 0.0);
    negative_pivots = 0;
    singular = false;
    for (std::size_t i = 0; i < n; ++i) d[i] = alpha * A.diag[i] + beta * B.diag[i];
    const auto& parent = space->dof_parent;
    for (std::int32_t i : space->elimination_order) {
      const std::size_t ii = static_cast<std::size_t>(i);
      const double di = d[ii];
      if (di < 0.0) ++negative_pivots;
      if (di == 0.0) singular = true;
      std::int32_t p = parent[ii];
      if (p >= 0) {
        const double aip = alpha * A.off[ii] + beta * B.off[ii];
        if (di != 0.0) {
          const double lv = aip / di;
          l[ii] = lv;
          d[static_cast<std::size_t>(p)] -= lv * aip;
        } else {
          singular = true;
        }
      }
    }
  }

  void factor(const TreeOperator& A) {
    factor(A, A, 1.0, 0.0);
  }

  // in-place solve of (LDL^T) x = b
  void solve(std::vector<double>& x) const {
    const auto& parent = space->dof_parent;
    for (std::int32_t i : space->elimination_order) {
      const std::size_t ii = static_cast<std::size_t>(i);
      std::int32_t p = parent[ii];
      if (p >= 0) x[static_cast<std::size_t>(p)] -= l[ii] * x[ii];
    }
    for (std::size_t i = 0; i < d.size(); ++i) x[i] = d[i] != 0.0 ? x[i] / d[i] : 0.0;
    for (auto it = space->elimination_order.rbegin(); it != space->elimination_order.rend();
         ++it) {
      const std::size_t ii = static_cast<std::size_t>(*it);
      std::int32_t p = parent[ii];
      if (p >= 0) x[ii] -= l[ii] * x[static_cast<std::size_t>(p)];
    }
  }

  std::vector<double> solve_copy(const std::vector<double>& b) const {
    std::vector<double> x = b;
    solve(x);
    return x;
  }
};

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

}  // namespace treegs
