#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "treegs/analysis.hpp"
#include "treegs/common.hpp"
#include "treegs/eigen.hpp"
#include "treegs/solver.hpp"
#include "treegs/verify.hpp"

namespace treegs {

// 17 significant digits round-trip doubles exactly and render identically
// across runs, which the determinism contract relies on.
inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Minimal ordered JSON document writer: insertion order is emission order,
// floats go through format_double, output ends with LF.
class JsonWriter {
 public:
  JsonWriter() { out_ << "{"; }

  JsonWriter& field(const std::string& key, double v) { return raw(key, format_double(v)); }
  JsonWriter& field(const std::string& key, int v) { return raw(key, std::to_string(v)); }
  JsonWriter& field(const std::string& key, std::int64_t v) { return raw(key, std::to_string(v)); }
  JsonWriter& field(const std::string& key, std::uint64_t v) { return raw(key, std::to_string(v)); }
  JsonWriter& field(const std::string& key, bool v) { return raw(key, v ? "true" : "false"); }
  JsonWriter& field(const std::string& key, const std::string& v) {
    return raw(key, quote(v));
  }
  JsonWriter& field(const std::string& key, const char* v) { return field(key, std::string(v)); }

  JsonWriter& field_object(const std::string& key, const std::string& object_json) {
    return raw(key, object_json);
  }

  template <typename T, typename F>
  JsonWriter& field_array(const std::string& key, const std::vector<T>& items, F&& to_json) {
    std::ostringstream arr;
    arr << "[";
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) arr << ",";
      arr << to_json(items[i]);
    }
    arr << "]";
    return raw(key, arr.str());
  }

  JsonWriter& field_numbers(const std::string& key, const std::vector<double>& items) {
    return field_array(key, items, [](double v) { return format_double(v); });
  }

  std::string str() const { return out_.str() + "}"; }

  static std::string quote(const std::string& s) {
    std::string r = "\"";
    for (char c : s) {
      switch (c) {
        case '"': r += "\\\""; break;
        case '\\': r += "\\\\"; break;
        case '\n': r += "\\n"; break;
        case '\t': r += "\\t"; break;
        case '\r': r += "\\r"; break;
        default:
          if (static_cast<unsigned char>(c) < 0x20) {
            char buf[8];
            std::snprintf(buf, sizeof(buf), "\\u%04x", c);
            r += buf;
          } else {
            r += c;
          }
      }
    }
    return r + "\"";
  }

 private:
  JsonWriter& raw(const std::string& key, const std::string& value) {
    if (!first_) out_ << ",";
    first_ = false;
    out_ << quote(key) << ":" << value;
    return *this;
  }

  std::ostringstream out_;
  bool first_ = true;
};

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw config_error("cannot open output file: " + path);
  f << content;
  if (!f) throw config_error("failed to write output file: " + path);
}

// ---- serializers -----------------------------------------------------------

inline std::string tree_spec_json(const TreeSpec& spec) {
  JsonWriter w;
  w.field("kind", to_string(spec.kind))
      .field("branching", spec.branching)
      .field("edge_length", spec.edge_length)
      .field("depth", spec.depth);
  return w.str();
}

inline std::string mesh_summary_json(const Mesh& mesh) {
  JsonWriter w;
  w.field_object("spec", tree_spec_json(mesh.spec))
      .field("nodes_per_edge", mesh.nodes_per_edge)
      .field("leaf_bc", to_string(mesh.leaf_bc))
      .field("dof_count", static_cast<std::int64_t>(mesh.dof_count))
      .field("node_count", mesh.node_count)
      .field("edge_count", static_cast<std::int64_t>(mesh.tree.edges.size()))
      .field("total_length", mesh.total_weighted_length);
  return w.str();
}

inline std::string eigen_record_json(const std::vector<EigenRecordEntry>& record) {
  std::ostringstream arr;
  arr << "[";
  for (std::size_t i = 0; i < record.size(); ++i) {
    if (i) arr << ",";
    JsonWriter w;
    w.field("depth", record[i].depth)
        .field("nodes_per_edge", record[i].nodes_per_edge)
        .field("lambda", record[i].lambda);
    arr << w.str();
  }
  arr << "]";
  return arr.str();
}

inline std::string eigen_result_json(const EigenResult& r, const std::string& config_json) {
  JsonWriter w;
  w.field_object("config", config_json)
      .field("lambda1", r.lambda1)
      .field("residual", r.residual)
      .field("residual_rel", r.residual_rel)
      .field("iterations", r.iterations)
      .field_object("record", eigen_record_json(r.record));
  return w.str();
}

inline std::string lambda_reference_json(const LambdaReference& r,
                                         const std::string& config_json) {
  JsonWriter w;
  w.field_object("config", config_json)
      .field("lambda1", r.lambda1)
      .field("error_estimate", r.error_estimate)
      .field("fit_model", r.fit_model)
      .field_object("record", eigen_record_json(r.record));
  return w.str();
}

inline const char* init_kind_name(InitKind k) {
  switch (k) {
    case InitKind::Eigenfield: return "eigenfield";
    case InitKind::EdgeBump: return "edge_bump";
    case InitKind::Random: return "random";
    case InitKind::Provided: return "provided";
  }
  return "unknown";
}

inline std::string ground_state_json(const GroundStateResult& r, const EnergyReport& e,
                                     const std::string& config_json) {
  JsonWriter w;
  w.field_object("config", config_json)
      .field("energy", r.energy)
      .field("lambda", r.lambda)
      .field("mass", e.mass)
      .field("kinetic", e.kinetic)
      .field("potential", e.potential)
      .field("sup_norm", e.sup_norm)
      .field("lp_norm", e.lp_norm)
      .field("projected_grad_norm", r.projected_grad_norm)
      .field("ode_residual", r.ode_residual)
      .field("kirchhoff_residual", r.kirchhoff_residual)
      .field("iterations", r.iterations)
      .field("converged", r.converged)
      .field("winning_init", init_kind_name(r.winning_init));
  return w.str();
}

inline std::string level_curve_csv(const LevelCurve& c) {
  std::ostringstream out;
  out << "mu,energy,lambda,sup_norm,converged\n";
  for (const auto& pt : c.points)
    out << format_double(pt.mu) << "," << format_double(pt.energy) << ","
        << format_double(pt.lambda) << "," << format_double(pt.sup_norm) << ","
        << (pt.converged ? 1 : 0) << "\n";
  return out.str();
}

inline std::string level_curve_json(const LevelCurve& c, const std::string& config_json) {
  JsonWriter w;
  w.field_object("config", config_json)
      .field("p", c.p)
      .field_object("spec", tree_spec_json(c.spec))
      .field("radial", c.radial)
      .field("depth_used", c.depth_used)
      .field("nodes_per_edge", c.nodes_per_edge)
      .field("lambda1_truncated", c.lambda1_truncated)
      .field("lambda1_ref", c.lambda1_ref)
      .field("grad_tol", c.grad_tol)
      .field("converged_count", c.converged_count)
      .field("concavity_violations", c.concavity_violations)
      .field("max_above_line", c.max_above_line)
      .field("slope_at_zero", c.slope_at_zero);
  std::ostringstream pts;
  pts << "[";
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    if (i) pts << ",";
    JsonWriter p;
    p.field("mu", c.points[i].mu)
        .field("energy", c.points[i].energy)
        .field("lambda", c.points[i].lambda)
        .field("sup_norm", c.points[i].sup_norm)
        .field("converged", c.points[i].converged);
    pts << p.str();
  }
  pts << "]";
  w.field_object("points", pts.str());
  return w.str();
}

inline std::string mu_star_json(const MuStarResult& m) {
  JsonWriter w;
  w.field("transition_detected", m.transition_detected)
      .field("mu_lo", m.mu_lo)
      .field("mu_hi", m.mu_hi)
      .field("eps", m.eps)
      .field("gap_at_hi", m.gap_at_hi)
      .field("note", m.note);
  return w.str();
}

inline std::string verify_report_json(const VerifyReport& r, const std::string& config_json) {
  JsonWriter w;
  w.field_object("config", config_json)
      .field("suite", r.suite)
      .field("samples", r.samples)
      .field("seed", r.seed)
      .field_object("spec", tree_spec_json(r.spec))
      .field("depth_used", r.depth_used)
      .field("nodes_per_edge", r.nodes_per_edge)
      .field("pass", r.pass);
  std::ostringstream items;
  items << "[";
  for (std::size_t i = 0; i < r.items.size(); ++i) {
    if (i) items << ",";
    JsonWriter it;
    it.field("name", r.items[i].name)
        .field("worst_ratio", r.items[i].worst_ratio)
        .field("empirical_constant", r.items[i].empirical_constant)
        .field("threshold", r.items[i].threshold)
        .field("pass", r.items[i].pass);
    items << it.str();
  }
  items << "]";
  w.field_object("items", items.str());
  return w.str();
}

// profile CSV: per-edge arc length for meshes, radial coordinate for grids
inline std::string profile_csv(const Discretization& space, const Field& u) {
  std::ostringstream out;
  if (space.is_radial()) {
    out << "t,value\n";
    for (std::int64_t node = 0; node < space.node_count; ++node)
      out << format_double(space.node_t[static_cast<std::size_t>(node)]) << ","
          << format_double(u.value_at_node(node)) << "\n";
  } else {
    out << "edge,s,value\n";
    // emit each element's left endpoint, then close every edge with its head
    std::int64_t prev_edge = -1;
    double edge_t0 = 0.0;
    for (std::size_t i = 0; i < space.elements.size(); ++i) {
      const Element& el = space.elements[i];
      if (el.edge != prev_edge) {
        prev_edge = el.edge;
        edge_t0 = el.t0;
      }
      out << el.edge << "," << format_double(el.t0 - edge_t0) << ","
          << format_double(u.value_at_node(el.a)) << "\n";
      const bool closes_edge =
          i + 1 == space.elements.size() || space.elements[i + 1].edge != el.edge;
      if (closes_edge)
        out << el.edge << "," << format_double(el.t0 - edge_t0 + el.h) << ","
            << format_double(u.value_at_node(el.b)) << "\n";
    }
  }
  return out.str();
}

}  // namespace treegs
