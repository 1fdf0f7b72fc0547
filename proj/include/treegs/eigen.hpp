#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <string>
#include <tuple>
#include <vector>

#include "treegs/common.hpp"
#include "treegs/energy.hpp"
#include "treegs/operators.hpp"
#include "treegs/rng.hpp"
#include "treegs/space.hpp"

namespace treegs {

struct EigenRecordEntry {
  int depth = 0;
  int nodes_per_edge = 0;
  double lambda = 0.0;
};

struct EigenResult {
  double lambda1 = 0.0;
  Field eigenfield;          // unit mass, nonnegative
  double residual = 0.0;     // |K x - lambda M x|_2 / |x|_2
  double residual_rel = 0.0; // scale-invariant residual
  int iterations = 0;
  std::vector<EigenRecordEntry> record;
};

namespace detail {

inline int pencil_count_below(const TreeOperator& K, const TreeOperator& M, double sigma,
                              TreeFactorization& work) {
  work.factor(K, M, 1.0, -sigma);
  return work.negative_pivots + (work.singular ? 1 : 0);
}

}  // namespace detail

// Smallest eigenpair of K x = lambda M x. Bisection on the pivot signs of
// K - sigma M localizes lambda1 to near machine precision, then shifted
// inverse iteration (with the fill-free tree solver) recovers the eigenvector.
// The ground eigenvalue is simple on a connected mesh, so no deflation.
inline EigenResult lambda1_solve(const FemSystem& fem, double tol = 1e-10,
                                 std::uint64_t seed = 0, int max_iters = 200) {
  const TreeOperator& K = fem.stiffness();
  const TreeOperator& M = fem.mass_op();
  const std::size_t n = K.diag.size();
  if (n == 0) throw config_error("empty system");

  TreeFactorization work;
  double hi = 1.0;
  for (int guard = 0; detail::pencil_count_below(K, M, hi, work) < 1; ++guard) {
    hi *= 4.0;
    if (guard > 600) throw numeric_error("eigenvalue bisection found no upper bound");
  }
  double lo = 0.0;  // K is positive semidefinite
  for (int it = 0; it < 120 && (hi - lo) > 1e-14 * hi + 1e-300; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (detail::pencil_count_below(K, M, mid, work) >= 1)
      hi = mid;
    else
      lo = mid;
  }

  // inverse iteration with a certified shift just below lambda1
  const double width = hi - lo;
  double sigma = lo - 4.0 * width - 1e-15 * hi;
  work.factor(K, M, 1.0, -sigma);
  Rng rng(seed);
  std::vector<double> x(n);
  for (auto& v : x) v = 0.5 + rng.next_uniform();
  double lambda = 0.5 * (lo + hi);
  double res_abs = 0.0, res_rel = 1.0;
  int used = 0;
  std::vector<double> kx, mx, r;
  for (int it = 0; it < max_iters; ++it) {
    ++used;
    std::vector<double> y = M.apply(x);
    work.solve(y);
    const double ym = std::sqrt(std::max(M.form(y), 1e-300));
    for (auto& v : y) v /= ym;
    x.swap(y);
    kx = K.apply(x);
    mx = M.apply(x);
    lambda = dot(x, kx) / dot(x, mx);
    r.resize(n);
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = kx[i] - lambda * mx[i];
      scale += kx[i] * kx[i] + lambda * lambda * mx[i] * mx[i];
    }
    res_abs = norm2(r) / norm2(x);
    res_rel = norm2(r) / std::sqrt(std::max(scale, 1e-300));
    if (res_rel <= tol) break;
  }
  if (res_rel > tol)
    throw numeric_error("inverse iteration did not reach tolerance: residual " +
                        std::to_string(res_rel) + " after " + std::to_string(used) +
                        " iterations (lambda ~ " + std::to_string(lambda) + ")");

  // sign-normalize: the ground eigenvector of the tree operator has one sign
  double s = 0.0;
  for (double v : x) s += v;
  if (s < 0.0)
    for (auto& v : x) v = -v;

  const double m = M.form(x);
  const double c = 1.0 / std::sqrt(m);
  for (auto& v : x) v *= c;

  EigenResult out;
  out.lambda1 = lambda;
  out.eigenfield.space = &fem.space();
  out.eigenfield.x = std::move(x);
  out.residual = res_abs;  // scale-free in x, unchanged by the rescale
  out.residual_rel = res_rel;
  out.iterations = used;
  return out;
}

inline EigenResult lambda1_full(const Mesh& mesh, double tol = 1e-10,
                                std::uint64_t seed = 0) {
  FemSystem fem(mesh);
  EigenResult r = lambda1_solve(fem, tol, seed);
  r.record.push_back({mesh.spec.depth, mesh.nodes_per_edge, r.lambda1});
  return r;
}

inline EigenResult lambda1_radial(const RadialGrid& grid, double tol = 1e-10,
                                  std::uint64_t seed = 0) {
  FemSystem fem(grid);
  EigenResult r = lambda1_solve(fem, tol, seed);
  r.record.push_back({grid.depth_r, grid.nodes_per_edge, r.lambda1});
  return r;
}

// ---- extrapolation -------------------------------------------------------

// Richardson in h assuming O(h^2): two levels remove h^2, three remove h^4.
inline double richardson_h(const std::vector<std::pair<int, double>>& by_n,
                           double* h_error = nullptr) {
  std::vector<std::pair<int, double>> v = by_n;
  std::sort(v.begin(), v.end());
  if (v.size() == 1) {
    if (h_error) *h_error = std::fabs(v[0].second) * 1e-3;
    return v[0].second;
  }
  std::vector<double> cur;
  for (auto& e : v) cur.push_back(e.second);
  // assumes n doubles between consecutive entries
  int order = 2;
  double prev_best = cur.back();
  while (cur.size() > 1) {
    const double f = std::pow(2.0, order);
    std::vector<double> next;
    for (std::size_t i = 0; i + 1 < cur.size(); ++i)
      next.push_back((f * cur[i + 1] - cur[i]) / (f - 1.0));
    prev_best = cur.back();
    cur = next;
    order += 2;
  }
  if (h_error) *h_error = std::fabs(cur.back() - prev_best);
  return cur.back();
}

struct DepthFit {
  std::string model;      // "inverse_square_shifted", "inverse_square", "geometric"
  double limit = 0.0;
  double residual = 0.0;  // max |fit - data|
};

namespace detail {

// least squares of lambda(D) = limit + c * g(D) for a known regressor g
inline std::pair<double, double> lsq_two(const std::vector<double>& g,
                                         const std::vector<double>& y) {
  const double n = static_cast<double>(g.size());
  double sg = 0, sy = 0, sgg = 0, sgy = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    sg += g[i];
    sy += y[i];
    sgg += g[i] * g[i];
    sgy += g[i] * y[i];
  }
  const double det = n * sgg - sg * sg;
  if (det == 0.0) return {y.empty() ? 0.0 : y[0], 0.0};
  const double c = (n * sgy - sg * sy) / det;
  const double a = (sy - c * sg) / n;
  return {a, c};
}

inline double fit_residual(const std::vector<double>& g, const std::vector<double>& y,
                           double a, double c) {
  double r = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    r = std::max(r, std::fabs(a + c * g[i] - y[i]));
  return r;
}

}  // namespace detail

// Fit of the depth-truncation decay. The paper-side theory gives no rate, so
// the model is chosen by fit residual among a shifted inverse-square law, a
// plain inverse-square law and a geometric law.
inline DepthFit fit_depth_limit(const std::vector<std::pair<int, double>>& by_depth) {
  std::vector<std::pair<int, double>> v = by_depth;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  if (m == 0) throw config_error("empty extrapolation record");
  if (m == 1) return {"single", v[0].second, std::fabs(v[0].second) * 1e-2};

  std::vector<double> D, y;
  for (auto& e : v) {
    D.push_back(static_cast<double>(e.first));
    y.push_back(e.second);
  }

  DepthFit best;
  best.model = "none";
  best.residual = std::numeric_limits<double>::infinity();

  {  // plain 1/D^2
    std::vector<double> g;
    for (double d : D) g.push_back(1.0 / (d * d));
    auto [a, c] = detail::lsq_two(g, y);
    double r = detail::fit_residual(g, y, a, c);
    if (r < best.residual) best = {"inverse_square", a, r};
  }
  if (m >= 3) {  // shifted 1/(D+delta)^2, delta scanned then refined
    double best_r = std::numeric_limits<double>::infinity(), best_a = 0, best_delta = 0;
    double span = D.front();
    for (int pass = 0; pass < 3; ++pass) {
      double lo = best_r == std::numeric_limits<double>::infinity() ? -0.45 * D.front()
                                                                    : best_delta - span;
      double hi = best_r == std::numeric_limits<double>::infinity() ? 2.0 * D.front()
                                                                    : best_delta + span;
      const int steps = 200;
      for (int i = 0; i <= steps; ++i) {
        const double delta = lo + (hi - lo) * i / steps;
        std::vector<double> g;
        for (double d : D) g.push_back(1.0 / ((d + delta) * (d + delta)));
        auto [a, c] = detail::lsq_two(g, y);
        double r = detail::fit_residual(g, y, a, c);
        if (r < best_r) {
          best_r = r;
          best_a = a;
          best_delta = delta;
        }
      }
      span = (hi - lo) / steps * 4.0;
    }
    if (best_r < best.residual) best = {"inverse_square_shifted", best_a, best_r};
  }
  if (m >= 3) {  // geometric a*rho^D on (approximately) equally spaced depths
    const double d1 = y[1] - y[0];
    const double d2 = y[2] - y[1];
    if (d1 != 0.0 && d2 / d1 > 0.0 && d2 / d1 < 1.0) {
      const double step = D[1] - D[0];
      const double rho_step = d2 / d1;  // rho^step
      const double rho = std::pow(rho_step, 1.0 / step);
      // y_i = limit + A rho^{D_i}
      std::vector<double> g;
      for (double d : D) g.push_back(std::pow(rho, d - D[0]));
      auto [a, c] = detail::lsq_two(g, y);
      double r = detail::fit_residual(g, y, a, c);
      if (r < best.residual) best = {"geometric", a, r};
    }
  }
  return best;
}

struct ReferenceBudget {
  int max_depth_r = 400;
  int max_n = 32;
  double tol = 1e-11;
  double accuracy_goal = 1e-4;  // relative error estimate bound
};

struct LambdaReference {
  double lambda1 = 0.0;
  double error_estimate = 0.0;
  std::string fit_model;
  std::vector<EigenRecordEntry> record;
};

// Canonical lambda1 for all downstream inequality checks: deep radial grids,
// Richardson in h, depth fit in D. The value is kind-independent (a constant
// weight factor cancels in the Rayleigh quotient), so it is computed on the
// rooted reduction.
inline LambdaReference lambda1_reference_uncached(int branching, double edge_length,
                                                  const ReferenceBudget& budget = {}) {
  TreeSpec spec;
  spec.kind = TreeKind::Rooted;
  spec.branching = branching;
  spec.edge_length = edge_length;
  spec.depth = 1;

  std::vector<int> depths;
  for (double f : {0.25, 0.5, 0.75, 1.0}) {
    int d = std::max(8, static_cast<int>(std::lround(budget.max_depth_r * f)));
    if (depths.empty() || d > depths.back()) depths.push_back(d);
  }
  std::vector<int> ns;
  for (int n = std::max(2, budget.max_n / 4); n <= budget.max_n; n *= 2) ns.push_back(n);

  LambdaReference ref;
  std::vector<std::pair<int, double>> by_depth;
  double h_error = 0.0;
  for (int d : depths) {
    std::vector<std::pair<int, double>> by_n;
    for (int n : ns) {
      RadialGrid g = build_radial_grid(spec, d, n, LeafBC::Dirichlet);
      EigenResult r = lambda1_radial(g, budget.tol);
      by_n.emplace_back(n, r.lambda1);
      ref.record.push_back({d, n, r.lambda1});
    }
    double he = 0.0;
    by_depth.emplace_back(d, richardson_h(by_n, &he));
    h_error = std::max(h_error, he);
  }

  DepthFit fit = fit_depth_limit(by_depth);
  const std::size_t tail = std::min<std::size_t>(3, by_depth.size());
  DepthFit fit_tail = fit_depth_limit(
      std::vector<std::pair<int, double>>(by_depth.end() - tail, by_depth.end()));
  ref.lambda1 = fit.limit;
  ref.fit_model = fit.model;
  ref.error_estimate = fit.residual + std::fabs(fit.limit - fit_tail.limit) + h_error;
  if (!(ref.lambda1 > 0.0))
    throw numeric_error("reference eigenvalue is not positive");
  if (ref.error_estimate > budget.accuracy_goal * ref.lambda1)
    throw accuracy_error("reference eigenvalue error estimate " +
                         std::to_string(ref.error_estimate) + " exceeds goal");
  return ref;
}

inline const LambdaReference& lambda1_reference(int branching, double edge_length,
                                                const ReferenceBudget& budget = {}) {
  static std::map<std::tuple<int, double, int, int>, LambdaReference> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto key = std::make_tuple(branching, edge_length, budget.max_depth_r, budget.max_n);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, lambda1_reference_uncached(branching, edge_length, budget)).first;
  return it->second;
}

inline LambdaReference lambda1_reference(const TreeSpec& spec,
                                         const ReferenceBudget& budget = {}) {
  return lambda1_reference(spec.branching, spec.edge_length, budget);
}

// closed-form band edge of the weighted transfer problem; a non-normative
// sanity value used only in tests
inline double lambda1_band_edge(int branching, double edge_length) {
  const double b = static_cast<double>(branching);
  const double k = std::acos(2.0 * std::sqrt(b) / (b + 1.0));
  return (k / edge_length) * (k / edge_length);
}

}  // namespace treegs
