#pragma once

// Job configs, canonical JSON, CSV tables and frame persistence.
//
// Canonical JSON: object keys sorted, two-space indent, every double printed
// with %.17g, non-finite doubles as the strings "inf", "-inf", "nan".
// Complex numbers are [re, im]; matrices are row-major arrays of rows.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ptqm/errors.hpp"
#include "ptqm/linop.hpp"
#include "ptqm/metric.hpp"
#include "ptqm/models.hpp"
#include "ptqm/observables.hpp"
#include "ptqm/potential.hpp"

namespace ptqm::io {

using Json = nlohmann::json;

inline constexpr const char* kReportSchema = "ptqm.report/1";
inline constexpr const char* kFrameSchema = "ptqm.frame/1";
inline constexpr const char* kSpectrumCsvHeader = "index,re,im,residual,kept";
inline constexpr const char* kPhaseScanCsvHeader = "index,parameter,value,kept_modes,max_abs_imag,phase";

// ---------------------------------------------------------------- encoding

inline Json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline Json complex(Complex z) { return Json::array({number(z.real()), number(z.imag())}); }

inline Json matrix(const CMatrix& M) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(complex(M(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Json vector(const CVector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex(v(i)));
  return out;
}

namespace detail {

inline void write_string(std::string& out, const std::string& s) { out += Json(s).dump(); }

inline void write(std::string& out, const Json& j, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(2 * depth), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // std::map: sorted keys
        if (!first) out += ",\n";
        first = false;
        out += pad;
        write_string(out, it.key());
        out += ": ";
        write(out, it.value(), depth + 1);
      }
      out += "\n" + close + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // Arrays of scalars stay on one line; that keeps matrices readable.
      bool flat = true;
      for (const auto& e : j) flat = flat && !e.is_object() && !(e.is_array() && !e.empty() && e[0].is_array());
      if (flat) {
        out += "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) out += ", ";
          write(out, j[i], depth + 1);
        }
        out += "]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        write(out, j[i], depth + 1);
      }
      out += "\n" + close + "]";
      return;
    }
    case Json::value_t::number_float:
      out += ptqm::detail::format_double(j.get<double>());
      return;
    default:
      out += j.dump();
  }
}

}  // namespace detail

inline std::string canonical(const Json& j) {
  std::string out;
  detail::write(out, j, 0);
  out += "\n";
  return out;
}

// ---------------------------------------------------------------- decoding

namespace detail {

[[noreturn]] inline void config_error(const std::string& path, const std::string& what) {
  fail(ErrorKind::ConfigError, (path.empty() ? std::string("config") : "'" + path + "'") + ": " + what);
}

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

inline void allow_keys(const Json& obj, const std::string& path, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) config_error(path, "expected an object");
  std::set<std::string> allowed(keys.begin(), keys.end());
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) config_error(join(path, it.key()), "unknown key");
  }
}

inline double get_double(const Json& obj, const std::string& path, const char* key) {
  const std::string p = join(path, key);
  if (!obj.contains(key)) config_error(p, "missing");
  const Json& v = obj.at(key);
  if (!v.is_number()) config_error(p, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) config_error(p, "must be finite");
  return d;
}

inline std::int64_t get_int(const Json& v, const std::string& path) {
  if (!v.is_number_integer()) config_error(path, "expected an integer");
  return v.get<std::int64_t>();
}

}  // namespace detail

/// [re, im] with finite entries.
inline Complex parse_complex(const Json& v, const std::string& path) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    detail::config_error(path, "complex numbers are [re, im]");
  }
  const Complex z(v[0].get<double>(), v[1].get<double>());
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) detail::config_error(path, "must be finite");
  return z;
}

inline CMatrix parse_matrix(const Json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) detail::config_error(path, "expected a non-empty array of rows");
  const auto n = static_cast<Eigen::Index>(v.size());
  CMatrix M(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Json& row = v[static_cast<std::size_t>(i)];
    const std::string rp = path + "[" + std::to_string(i) + "]";
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) detail::config_error(rp, "matrix must be square");
    for (Eigen::Index j = 0; j < n; ++j) {
      M(i, j) = parse_complex(row[static_cast<std::size_t>(j)], rp + "[" + std::to_string(j) + "]");
    }
  }
  return M;
}

struct OperatorSpec {
  std::string builtin;  ///< x | p | h | random_def1 | random_def2, or empty
  std::optional<CMatrix> matrix;
  std::string label;
};

struct SweepSpec {
  std::string parameter;  ///< epsilon | theta
  double from = 0;
  double to = 0;
  int steps = 0;
};

struct Outputs {
  std::string report_path;
  std::string csv_path;
  std::string frame_path;
};

struct JobConfig {
  ModelSpec model;
  std::optional<Grid> grid;
  std::optional<int> modes_kept;
  Tolerances tolerances;
  std::uint64_t seed = 0;
  std::vector<OperatorSpec> operators;
  Outputs outputs;
  std::optional<SweepSpec> sweep;
  Json source;  ///< the validated document, echoed in reports
};

inline ModelSpec parse_model(const Json& m) {
  const std::string path = "model";
  if (!m.is_object()) detail::config_error(path, "expected an object");
  if (!m.contains("type") || !m.at("type").is_string()) detail::config_error("model.type", "missing model type");
  const std::string type = m.at("type").get<std::string>();
  if (type == "matrix2x2") {
    detail::allow_keys(m, path, {"type", "r", "s", "theta"});
    return model::Matrix2x2{detail::get_double(m, path, "r"), detail::get_double(m, path, "s"),
                            detail::get_double(m, path, "theta")};
  }
  if (type == "epsilon_family") {
    detail::allow_keys(m, path, {"type", "epsilon"});
    return model::EpsilonFamily{detail::get_double(m, path, "epsilon")};
  }
  if (type == "ix_cubed") {
    detail::allow_keys(m, path, {"type"});
    return model::IXCubed{};
  }
  if (type == "hermitian_oscillator") {
    detail::allow_keys(m, path, {"type"});
    return model::HermitianOscillator{};
  }
  if (type == "shifted_square") {
    detail::allow_keys(m, path, {"type"});
    return model::ShiftedSquare{};
  }
  if (type == "poly_potential") {
    detail::allow_keys(m, path, {"type", "coefficients"});
    if (!m.contains("coefficients") || !m.at("coefficients").is_array() || m.at("coefficients").empty()) {
      detail::config_error("model.coefficients", "expected a non-empty array of [re, im]");
    }
    std::vector<Complex> c;
    for (std::size_t k = 0; k < m.at("coefficients").size(); ++k) {
      c.push_back(parse_complex(m.at("coefficients")[k], "model.coefficients[" + std::to_string(k) + "]"));
    }
    return PolyPotential{ptqm::detail::poly_trim(std::move(c))};
  }
  if (type == "potential_expr") {
    detail::allow_keys(m, path, {"type", "source"});
    if (!m.contains("source") || !m.at("source").is_string()) detail::config_error("model.source", "expected a string");
    return model::PotentialExpr{m.at("source").get<std::string>()};
  }
  detail::config_error("model.type", "unknown model type '" + type + "'");
}

inline JobConfig parse_config(const Json& doc) {
  detail::allow_keys(doc, "", {"model", "grid", "modes_kept", "tolerances", "seed", "operators", "outputs", "sweep"});
  JobConfig cfg;
  if (!doc.contains("model")) detail::config_error("model", "missing");
  cfg.model = parse_model(doc.at("model"));

  if (doc.contains("grid")) {
    const Json& g = doc.at("grid");
    detail::allow_keys(g, "grid", {"n", "half_width"});
    if (!g.contains("n")) detail::config_error("grid.n", "missing");
    const auto n = detail::get_int(g.at("n"), "grid.n");
    const double L = detail::get_double(g, "grid", "half_width");
    if (n < 3 || n > 4000) detail::config_error("grid.n", "must lie in [3, 4000]");
    if (!(L > 0)) detail::config_error("grid.half_width", "must be positive");
    cfg.grid = make_grid(static_cast<int>(n), L);
  }
  if (is_lattice_model(cfg.model) && !cfg.grid) detail::config_error("grid", "required for " + model_label(cfg.model));
  if (!is_lattice_model(cfg.model) && cfg.grid) detail::config_error("grid", "not used by matrix2x2");

  if (doc.contains("modes_kept")) {
    const auto m = detail::get_int(doc.at("modes_kept"), "modes_kept");
    if (m < 1) detail::config_error("modes_kept", "must be positive");
    cfg.modes_kept = static_cast<int>(m);
  }
  if (doc.contains("tolerances")) {
    const Json& t = doc.at("tolerances");
    detail::allow_keys(t, "tolerances", {"residual", "algebraic", "reality", "discretization"});
    if (t.contains("residual")) cfg.tolerances.residual = detail::get_double(t, "tolerances", "residual");
    if (t.contains("algebraic")) cfg.tolerances.algebraic = detail::get_double(t, "tolerances", "algebraic");
    if (t.contains("reality")) cfg.tolerances.reality = detail::get_double(t, "tolerances", "reality");
    if (t.contains("discretization")) {
      cfg.tolerances.discretization = detail::get_double(t, "tolerances", "discretization");
    }
  }
  if (doc.contains("seed")) {
    const Json& s = doc.at("seed");
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<std::int64_t>() >= 0)) {
      detail::config_error("seed", "expected a non-negative integer");
    }
    cfg.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("operators")) {
    const Json& ops = doc.at("operators");
    if (!ops.is_array()) detail::config_error("operators", "expected an array");
    for (std::size_t k = 0; k < ops.size(); ++k) {
      const std::string p = "operators[" + std::to_string(k) + "]";
      const Json& o = ops[k];
      detail::allow_keys(o, p, {"builtin", "matrix", "label"});
      OperatorSpec spec;
      if (o.contains("builtin") == o.contains("matrix")) detail::config_error(p, "give exactly one of builtin, matrix");
      if (o.contains("builtin")) {
        if (!o.at("builtin").is_string()) detail::config_error(p + ".builtin", "expected a string");
        spec.builtin = o.at("builtin").get<std::string>();
        static const std::set<std::string> known{"x", "p", "h", "random_def1", "random_def2"};
        if (!known.count(spec.builtin)) detail::config_error(p + ".builtin", "unknown builtin '" + spec.builtin + "'");
        if ((spec.builtin == "x" || spec.builtin == "p") && !is_lattice_model(cfg.model)) {
          detail::config_error(p + ".builtin", "'" + spec.builtin + "' needs a lattice model");
        }
        spec.label = spec.builtin;
      } else {
        spec.matrix = parse_matrix(o.at("matrix"), p + ".matrix");
        spec.label = "matrix" + std::to_string(k);
      }
      if (o.contains("label")) {
        if (!o.at("label").is_string()) detail::config_error(p + ".label", "expected a string");
        spec.label = o.at("label").get<std::string>();
      }
      cfg.operators.push_back(std::move(spec));
    }
  }
  if (doc.contains("outputs")) {
    const Json& o = doc.at("outputs");
    detail::allow_keys(o, "outputs", {"report_path", "csv_path", "frame_path"});
    auto str = [&](const char* key, std::string& dst) {
      if (!o.contains(key)) return;
      if (!o.at(key).is_string()) detail::config_error(detail::join("outputs", key), "expected a string");
      dst = o.at(key).get<std::string>();
    };
    str("report_path", cfg.outputs.report_path);
    str("csv_path", cfg.outputs.csv_path);
    str("frame_path", cfg.outputs.frame_path);
  }
  if (doc.contains("sweep")) {
    const Json& s = doc.at("sweep");
    detail::allow_keys(s, "sweep", {"parameter", "from", "to", "steps"});
    SweepSpec sw;
    if (!s.contains("parameter") || !s.at("parameter").is_string()) {
      detail::config_error("sweep.parameter", "expected \"epsilon\" or \"theta\"");
    }
    sw.parameter = s.at("parameter").get<std::string>();
    if (sw.parameter != "epsilon" && sw.parameter != "theta") {
      detail::config_error("sweep.parameter", "expected \"epsilon\" or \"theta\"");
    }
    sw.from = detail::get_double(s, "sweep", "from");
    sw.to = detail::get_double(s, "sweep", "to");
    if (!s.contains("steps")) detail::config_error("sweep.steps", "missing");
    const auto steps = detail::get_int(s.at("steps"), "sweep.steps");
    if (steps < 2 || steps > 100000) detail::config_error("sweep.steps", "must be at least 2");
    sw.steps = static_cast<int>(steps);
    if (sw.parameter == "epsilon" && !std::holds_alternative<model::EpsilonFamily>(cfg.model)) {
      detail::config_error("sweep.parameter", "epsilon sweeps need an epsilon_family model");
    }
    if (sw.parameter == "theta" && !std::holds_alternative<model::Matrix2x2>(cfg.model)) {
      detail::config_error("sweep.parameter", "theta sweeps need a matrix2x2 model");
    }
    cfg.sweep = sw;
  }

  // Surface model and tolerance domain errors as config errors.
  try {
    cfg.tolerances.validate();
    validate_model(cfg.model);
    if (const auto* e = std::get_if<model::PotentialExpr>(&cfg.model)) parse_potential(e->source);
    if (cfg.sweep && cfg.sweep->parameter == "epsilon") {
      validate_epsilon(cfg.sweep->from);
      validate_epsilon(cfg.sweep->to);
    }
  } catch (const Error& e) {
    fail(ErrorKind::ConfigError, e.what());
  }
  cfg.source = doc;
  return cfg;
}

inline Json read_json_file(const std::string& path, ErrorKind on_error) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    fail(on_error, "'" + path + "' is not valid JSON: " + e.what());
  }
}

inline JobConfig load_config(const std::string& path) {
  try {
    return parse_config(read_json_file(path, ErrorKind::ConfigError));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::IoError) fail(ErrorKind::ConfigError, e.what());
    throw;
  }
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write '" + path + "'");
  out << text;
  if (!out) fail(ErrorKind::IoError, "write to '" + path + "' failed");
}

// ---------------------------------------------------------------- reports

inline Json spectrum_json(const EigenSystem& E, const SpectrumClassification& cls) {
  Json real = Json::array();
  Json residual = Json::array();
  for (Eigen::Index k = 0; k < E.dim(); ++k) {
    real.push_back(static_cast<bool>(cls.real[k]));
    residual.push_back(number(std::max(E.residual_right(k), E.residual_left(k)) / E.operator_norm));
  }
  return {
      {"values", vector(E.values)},
      {"real", real},
      {"residual", residual},
      {"kept", cls.kept},
      {"phase", std::string(to_string(cls.phase))},
      {"max_candidate_imag", number(cls.max_candidate_imag)},
      {"spectral_radius", number(cls.spectral_radius)},
      {"complex_outside_kept", cls.complex_outside_kept},
  };
}

inline Json invariants_json(const FrameInvariants& inv) {
  return {
      {"involution", number(inv.involution)},
      {"commutes_with_h", number(inv.commutes_with_h)},
      {"pt_commutation", number(inv.pt_commutation)},
      {"biorthogonality", number(inv.biorthogonality)},
      {"factor_consistency", number(inv.factor_consistency)},
      {"eta_hermiticity_pc", number(inv.eta_hermiticity_pc)},
      {"eta_hermiticity_cp", number(inv.eta_hermiticity_cp)},
      {"metric_min_eig_pc", number(inv.metric_min_eig_pc)},
      {"metric_min_eig_cp", number(inv.metric_min_eig_cp)},
      {"pseudo_hermiticity_pc", number(inv.pseudo_hermiticity_pc)},
      {"pseudo_hermiticity_cp", number(inv.pseudo_hermiticity_cp)},
  };
}

inline Json frame_summary_json(const CPTFrame& f) {
  return {
      {"status", "ok"},
      {"order_convention", std::string(to_string(f.order))},
      {"signs", f.signs},
      {"weight", number(f.weight)},
      {"modes_kept", f.modes_kept()},
      {"kept_values", vector(f.kept_values)},
      {"exact", f.exact},
      {"invariants", invariants_json(f.invariants)},
  };
}

inline Json symmetry_json(const SymmetryFlags& s) {
  return {{"symmetric", {{"flag", s.symmetric}, {"residual", number(s.symmetric_residual)}}},
          {"pt_symmetric", {{"flag", s.pt_symmetric}, {"residual", number(s.pt_residual)}}}};
}

inline Json report_json(const ObservableReport& r) {
  Json j = symmetry_json(r.symmetry);
  j["label"] = r.label;
  j["dim"] = r.dim;
  j["def1_residual"] = number(r.def1_residual);
  j["def1_status"] = std::string(to_string(r.def1_status));
  j["eq2_residual_pc"] = number(r.eq2.pc);
  j["eq2_residual_cp"] = number(r.eq2.cp);
  j["def2_residual"] = number(r.def2_residual);
  j["def2_residual_cpt"] = number(r.def2_residual_cpt);
  j["requirement_i"] = {{"pass", r.requirements.requirement_i},
                        {"max_imag_relative", number(r.requirements.max_imag_relative)}};
  j["requirement_ii"] = {{"pass", r.requirements.requirement_ii},
                         {"gram_deviation", number(r.requirements.gram_deviation)},
                         {"completeness_deviation", number(r.requirements.completeness_deviation)},
                         {"cond_estimate", number(r.requirements.cond_estimate)},
                         {"note", r.requirements.note}};
  Json me = {{"evaluated", r.matrix_element.evaluated}};
  if (r.matrix_element.evaluated) {
    me["pass"] = r.matrix_element.pass;
    me["max_violation"] = number(r.matrix_element.max_violation);
    me["max_violation_relative"] = number(r.matrix_element.max_violation_relative);
    me["table"] = matrix(r.matrix_element.table);
  }
  j["matrix_element"] = me;
  j["order_convention"] = std::string(to_string(r.order));
  j["threshold"] = number(r.threshold);
  j["verdict"] = std::string(to_string(r.verdict));
  return j;
}

// ---------------------------------------------------------------- CSV

inline std::string spectrum_csv(const EigenSystem& E, const SpectrumClassification& cls) {
  std::string out = std::string(kSpectrumCsvHeader) + "\n";
  for (Eigen::Index k = 0; k < E.dim(); ++k) {
    const bool kept = std::find(cls.kept.begin(), cls.kept.end(), k) != cls.kept.end();
    out += std::to_string(k) + "," + ptqm::detail::format_double(E.values(k).real()) + "," +
           ptqm::detail::format_double(E.values(k).imag()) + "," +
           ptqm::detail::format_double(std::max(E.residual_right(k), E.residual_left(k)) / E.operator_norm) + "," +
           (kept ? "1" : "0") + "\n";
  }
  return out;
}

struct PhaseScanRow {
  int index = 0;
  std::string parameter;
  double value = 0;
  int kept_modes = 0;
  double max_abs_imag = 0;
  std::string phase;
};

inline std::string phase_scan_csv(const std::vector<PhaseScanRow>& rows) {
  std::string out = std::string(kPhaseScanCsvHeader) + "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.index) + "," + r.parameter + "," + ptqm::detail::format_double(r.value) + "," +
           std::to_string(r.kept_modes) + "," + ptqm::detail::format_double(r.max_abs_imag) + "," + r.phase + "\n";
  }
  return out;
}

// ---------------------------------------------------------------- frames

inline Json frame_json(const CPTFrame& f) {
  return {
      {"schema_version", kFrameSchema},
      {"dim", f.dim()},
      {"modes_kept", f.modes_kept()},
      {"weight", number(f.weight)},
      {"order_convention", std::string(to_string(f.order))},
      {"exact", f.exact},
      {"signs", f.signs},
      {"kept_values", vector(f.kept_values)},
      {"hamiltonian", matrix(f.hamiltonian)},
      {"parity", matrix(f.parity)},
      {"c_operator", matrix(f.c_operator)},
      {"eta", matrix(f.eta)},
      {"eta_inv", matrix(f.eta_inv)},
      {"projector", matrix(f.projector)},
      {"kept_right", matrix(f.kept_right)},
      {"kept_left", matrix(f.kept_left)},
  };
}

namespace detail {

[[noreturn]] inline void corrupt(const std::string& what) { fail(ErrorKind::FrameInconsistent, what); }

inline double frame_double(const Json& v, const std::string& what) {
  if (!v.is_number()) corrupt(what + " is not a number");
  return v.get<double>();
}

inline Complex frame_complex(const Json& v, const std::string& what) {
  if (!v.is_array() || v.size() != 2) corrupt(what + " is not a [re, im] pair");
  return {frame_double(v[0], what), frame_double(v[1], what)};
}

inline CMatrix frame_matrix(const Json& doc, const char* key, Eigen::Index rows, Eigen::Index cols) {
  if (!doc.contains(key)) corrupt(std::string("missing ") + key);
  const Json& v = doc.at(key);
  if (!v.is_array() || static_cast<Eigen::Index>(v.size()) != rows) {
    corrupt(std::string(key) + " has " + std::to_string(v.is_array() ? v.size() : 0) + " rows, expected " +
            std::to_string(rows));
  }
  CMatrix M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = v[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      corrupt(std::string(key) + " row " + std::to_string(i) + " is truncated");
    }
    for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = frame_complex(row[static_cast<std::size_t>(j)], key);
  }
  return M;
}

}  // namespace detail

/// Rebuilds a frame from JSON and re-verifies every invariant. Any damage
/// surfaces as FrameInconsistent.
inline CPTFrame frame_from_json(const Json& doc, const Tolerances& tol = {}) {
  if (!doc.is_object()) detail::corrupt("frame document is not an object");
  if (!doc.contains("schema_version") || doc.at("schema_version") != kFrameSchema) {
    detail::corrupt("unsupported frame schema");
  }
  for (const char* key : {"dim", "modes_kept"}) {
    if (!doc.contains(key) || !doc.at(key).is_number_integer() || doc.at(key).get<std::int64_t>() < 1) {
      detail::corrupt(std::string("bad ") + key);
    }
  }
  const auto n = static_cast<Eigen::Index>(doc.at("dim").get<std::int64_t>());
  const auto m = static_cast<Eigen::Index>(doc.at("modes_kept").get<std::int64_t>());
  if (m > n) detail::corrupt("more kept modes than dimensions");
  CPTFrame f;
  f.weight = detail::frame_double(doc.value("weight", Json()), "weight");
  const std::string order = doc.value("order_convention", "");
  if (order != "PC" && order != "CP") detail::corrupt("bad order_convention");
  f.order = order == "PC" ? OrderConvention::PC : OrderConvention::CP;
  if (!doc.contains("exact") || !doc.at("exact").is_boolean()) detail::corrupt("bad exact flag");
  f.exact = doc.at("exact").get<bool>();
  if (!doc.contains("signs") || !doc.at("signs").is_array()) detail::corrupt("missing signs");
  for (const auto& s : doc.at("signs")) {
    if (!s.is_number_integer()) detail::corrupt("signs must be integers");
    f.signs.push_back(s.get<int>());
  }
  if (!doc.contains("kept_values") || !doc.at("kept_values").is_array() ||
      static_cast<Eigen::Index>(doc.at("kept_values").size()) != m) {
    detail::corrupt("kept_values does not match modes_kept");
  }
  f.kept_values.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    f.kept_values(k) = detail::frame_complex(doc.at("kept_values")[static_cast<std::size_t>(k)], "kept_values");
  }
  f.hamiltonian = detail::frame_matrix(doc, "hamiltonian", n, n);
  f.parity = detail::frame_matrix(doc, "parity", n, n);
  f.c_operator = detail::frame_matrix(doc, "c_operator", n, n);
  f.eta = detail::frame_matrix(doc, "eta", n, n);
  f.eta_inv = detail::frame_matrix(doc, "eta_inv", n, n);
  f.projector = detail::frame_matrix(doc, "projector", n, n);
  f.kept_right = detail::frame_matrix(doc, "kept_right", n, m);
  f.kept_left = detail::frame_matrix(doc, "kept_left", n, m);
  try {
    verify_frame(f, tol);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::FrameInconsistent) throw;
    fail(ErrorKind::FrameInconsistent, e.what());
  }
  return f;
}

inline void save_frame(const CPTFrame& f, const std::string& path) { write_text(path, canonical(frame_json(f))); }

inline CPTFrame load_frame(const std::string& path, const Tolerances& tol = {}) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::IoError, "cannot open '" + path + "'");
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    fail(ErrorKind::FrameInconsistent, "'" + path + "' is not a readable frame: " + e.what());
  }
  return frame_from_json(doc, tol);
}

}  // namespace ptqm::io
