#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace treegs {

// Error categories map to CLI exit codes: config 1, numeric 2, verification 3.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

class resource_error : public config_error {
 public:
  explicit resource_error(const std::string& msg) : config_error(msg) {}
};

class numeric_error : public std::runtime_error {
 public:
  explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

class accuracy_error : public numeric_error {
 public:
  explicit accuracy_error(const std::string& msg) : numeric_error(msg) {}
};

enum class TreeKind { Rooted, Unrooted };
enum class LeafBC { Dirichlet, Neumann };

inline const char* to_string(TreeKind k) {
  return k == TreeKind::Rooted ? "rooted" : "unrooted";
}
inline const char* to_string(LeafBC bc) {
  return bc == LeafBC::Dirichlet ? "dirichlet" : "neumann";
}

inline TreeKind tree_kind_from_string(const std::string& s) {
  if (s == "rooted") return TreeKind::Rooted;
  if (s == "unrooted") return TreeKind::Unrooted;
  throw config_error("unknown tree kind '" + s + "' (expected rooted|unrooted)");
}
inline LeafBC leaf_bc_from_string(const std::string& s) {
  if (s == "dirichlet") return LeafBC::Dirichlet;
  if (s == "neumann") return LeafBC::Neumann;
  throw config_error("unknown leaf bc '" + s + "' (expected dirichlet|neumann)");
}

inline void require_exponent(double p) {
  if (!(p > 2.0 && p < 6.0)) throw config_error("p must lie in (2,6)");
}

// 3-point Gauss-Legendre rule on [0,1]; exact for polynomials up to degree 5.
struct GaussRule3 {
  static constexpr int count = 3;
  double x[3];
  double w[3];
  constexpr GaussRule3() : x{0.0, 0.5, 0.0}, w{5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0} {
    const double d = 0.3872983346207417;  // sqrt(3/5)/2
    x[0] = 0.5 - d;
    x[2] = 0.5 + d;
  }
};
inline constexpr GaussRule3 kGauss3{};

inline double sign_power(double u, double q) {
  // |u|^(q-1) * u, continuous through 0
  if (u == 0.0) return 0.0;
  return std::copysign(std::pow(std::fabs(u), q), u);
}

}  // namespace treegs
