#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "treegs/common.hpp"
#include "treegs/operators.hpp"
#include "treegs/space.hpp"

namespace treegs {

// Discrete H^1 function: coefficient per free dof, constrained dofs are zero.
struct Field {
  const Discretization* space = nullptr;
  std::vector<double> x;

  static Field zeros(const Discretization& s) {
    Field f;
    f.space = &s;
    f.x.assign(static_cast<std::size_t>(s.dof_count), 0.0);
    return f;
  }

  double value_at_node(std::int64_t node) const { return space->coef(x, node); }

  double sup_norm() const {
    double m = 0.0;
    for (double v : x) m = std::max(m, std::fabs(v));
    return m;
  }
};

struct EnergyReport {
  double kinetic = 0.0;    // (1/2) int |u'|^2
  double potential = 0.0;  // (1/p) int |u|^p
  double energy = 0.0;     // kinetic - potential
  double mass = 0.0;       // int |u|^2
  double sup_norm = 0.0;
  double lp_norm = 0.0;
};

// Assembled operators for one discretization. Operators are immutable after
// construction; evaluations are pure and safe to share across threads.
class FemSystem {
 public:
  explicit FemSystem(const Discretization& space)
      : space_(&space),
        K_(assemble_stiffness(space)),
        M_(assemble_mass(space, false)),
        Mlumped_(assemble_mass(space, true)) {
    h1_.factor(K_, M_, 1.0, 1.0);
  }

  const Discretization& space() const { return *space_; }
  const TreeOperator& stiffness() const { return K_; }
  const TreeOperator& mass_op() const { return M_; }
  const TreeOperator& lumped_mass_op() const { return Mlumped_; }
  const TreeFactorization& h1_solver() const { return h1_; }

  double mass(const std::vector<double>& x) const { return M_.form(x); }
  double kinetic_form(const std::vector<double>& x) const { return K_.form(x); }

  // (1/p) int |u_h|^p by the fixed per-element Gauss rule on the linear
  // interpolant; the gradient below differentiates exactly this quadrature.
  double potential(const std::vector<double>& x, double p) const {
    require_exponent(p);
    double P = 0.0;
    for (const Element& el : space_->elements) {
      const double ua = space_->coef(x, el.a);
      const double ub = space_->coef(x, el.b);
      const double hw = el.weight * el.h;
      for (int g = 0; g < GaussRule3::count; ++g) {
        const double s = kGauss3.x[g];
        const double u = ua * (1.0 - s) + ub * s;
        P += hw * kGauss3.w[g] * std::pow(std::fabs(u), p);
      }
    }
    return P / p;
  }

  // d/du_i of potential(u): the weak nonlinear term N_p(u)
  std::vector<double> potential_gradient(const std::vector<double>& x, double p) const {
    require_exponent(p);
    std::vector<double> q(static_cast<std::size_t>(space_->dof_count), 0.0);
    for (const Element& el : space_->elements) {
      const std::int32_t da = space_->node_to_dof[static_cast<std::size_t>(el.a)];
      const std::int32_t db = space_->node_to_dof[static_cast<std::size_t>(el.b)];
      const double ua = da < 0 ? 0.0 : x[static_cast<std::size_t>(da)];
      const double ub = db < 0 ? 0.0 : x[static_cast<std::size_t>(db)];
      const double hw = el.weight * el.h;
      for (int g = 0; g < GaussRule3::count; ++g) {
        const double s = kGauss3.x[g];
        const double u = ua * (1.0 - s) + ub * s;
        const double c = hw * kGauss3.w[g] * sign_power(u, p - 1.0);
        if (da >= 0) q[static_cast<std::size_t>(da)] += c * (1.0 - s);
        if (db >= 0) q[static_cast<std::size_t>(db)] += c * s;
      }
    }
    return q;
  }

  double lp_norm(const std::vector<double>& x, double p) const {
    return std::pow(p * potential(x, p), 1.0 / p);
  }

  double energy_value(const std::vector<double>& x, double p) const {
    return 0.5 * K_.form(x) - potential(x, p);
  }

  EnergyReport energy(const Field& u, double p) const {
    require_exponent(p);
    EnergyReport r;
    r.kinetic = 0.5 * K_.form(u.x);
    r.potential = potential(u.x, p);
    r.energy = r.kinetic - r.potential;
    r.mass = M_.form(u.x);
    r.sup_norm = u.sup_norm();
    r.lp_norm = std::pow(p * r.potential, 1.0 / p);
    return r;
  }

  // gradient of the discrete energy: K u - N_p(u)
  std::vector<double> energy_gradient(const std::vector<double>& x, double p) const {
    std::vector<double> g = K_.apply(x);
    std::vector<double> q = potential_gradient(x, p);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= q[i];
    return g;
  }

  // Lagrange multiplier from testing the weak form with u itself:
  // lambda = (|u'|_2^2 - |u|_p^p) / mass. The stored convention makes the
  // weak residual K u - N_p(u) - lambda M u vanish at critical points; the
  // pointwise statement is u'' + |u|^{p-2} u + lambda u = 0.
  double multiplier(const std::vector<double>& x, double p) const {
    const double m = M_.form(x);
    if (!(m > 0.0)) throw numeric_error("multiplier undefined for zero-mass field");
    return (K_.form(x) - p * potential(x, p)) / m;
  }

  // least-squares multiplier from the weak residual projection on M u
  double multiplier_projected(const std::vector<double>& x, double p) const {
    std::vector<double> g = energy_gradient(x, p);
    std::vector<double> mu_vec = M_.apply(x);
    const double den = dot(mu_vec, mu_vec);
    if (!(den > 0.0)) throw numeric_error("multiplier undefined for zero-mass field");
    return dot(g, mu_vec) / den;
  }

  // nodal (lumped) quadrature norms; these realize the symmetrization
  // identities exactly at the discrete level
  double nodal_l2_sq(const std::vector<double>& x) const { return Mlumped_.form(x); }

  double nodal_lp_pow(const std::vector<double>& x, double p) const {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      s += Mlumped_.diag[i] * std::pow(std::fabs(x[i]), p);
    return s;
  }

 private:
  const Discretization* space_;
  TreeOperator K_;
  TreeOperator M_;
  TreeOperator Mlumped_;
  TreeFactorization h1_;
};

// exact integral of the squared linear interpolant (independent of the mass
// matrix path; used as an oracle in tests)
inline double exact_l2_sq_of_interpolant(const Discretization& space,
                                         const std::vector<double>& x) {
  double s = 0.0;
  for (const Element& el : space.elements) {
    const double a = space.coef(x, el.a);
    const double b = space.coef(x, el.b);
    s += el.weight * el.h * (a * a + a * b + b * b) / 3.0;
  }
  return s;
}

}  // namespace treegs
