#pragma once

// Batch front end. Exit codes: 0 success, 1 numerical or domain failure,
// 2 usage or config failure.

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ptqm/errors.hpp"
#include "ptqm/io.hpp"
#include "ptqm/metric.hpp"
#include "ptqm/models.hpp"
#include "ptqm/observables.hpp"

namespace ptqm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 1;
inline constexpr int kExitUsage = 2;

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError:
    case ErrorKind::SyntaxError:
    case ErrorKind::NonPolynomial:
    case ErrorKind::IoError:
    case ErrorKind::InvalidArgument:
      return kExitUsage;
    default:
      return kExitNumerical;
  }
}

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<int> modes;
  std::optional<double> tol_real;
  std::optional<double> tol_disc;
  bool timings = false;
  std::string path;  ///< frame file (frame save|load|check)
  std::string expr;  ///< parse-check
};

class Runner {
 public:
  Runner(const Options& opt, std::ostream& out, std::ostream& err, bool color)
      : opt_(opt), out_(out), err_(err), color_(color) {}

  int spectrum() {
    auto cfg = load();
    const auto model = build_hamiltonian(cfg.model, cfg.grid);
    const auto t0 = Clock::now();
    EigenSystem E = eig(model.hamiltonian.matrix, cfg.tolerances);
    const auto cls = classify_spectrum(E, cfg.tolerances, modes(cfg, model));
    timing("eig_seconds", t0);

    io::Json doc = header("spectrum", cfg);
    doc["spectrum"] = io::spectrum_json(E, cls);
    finish_timings(doc);
    emit_csv(cfg.outputs.csv_path, "spectrum.csv", io::spectrum_csv(E, cls));
    emit_report(cfg.outputs.report_path, doc, true);
    return kExitOk;
  }

  int audit() {
    auto cfg = load();
    const auto model = build_hamiltonian(cfg.model, cfg.grid);
    const auto operators = resolve_operators(cfg, model);
    auto t0 = Clock::now();
    EigenSystem E = eig(model.hamiltonian.matrix, cfg.tolerances);
    const auto cls = classify_spectrum(E, cfg.tolerances, modes(cfg, model));
    timing("eig_seconds", t0);

    io::Json doc = header("audit", cfg);
    doc["spectrum"] = io::spectrum_json(E, cls);
    t0 = Clock::now();
    std::optional<CPTFrame> frame;
    try {
      if (cls.phase != Phase::Broken) E = biorthonormalize(std::move(E), cfg.tolerances, &cls.kept);
      frame = construct_frame(model.hamiltonian.matrix, model.parity.matrix, E, cls, cfg.tolerances,
                              model.weight(), !model.hamiltonian.grid.has_value());
    } catch (const Error& e) {
      if (exit_code(e.kind()) != kExitNumerical) throw;
      doc["frame"] = {{"status", "error"}, {"error", {{"kind", std::string(to_string(e.kind()))}, {"message", e.what()}}}};
      io::Json reports = io::Json::array();
      for (const auto& op : operators) {
        io::Json r = op.full ? io::symmetry_json(symmetry_flags(*op.full, model.parity.matrix, cfg.tolerances.algebraic))
                             : io::Json::object();
        r["label"] = op.label;
        r["def1_status"] = "Inapplicable";
        r["verdict"] = "Inapplicable";
        reports.push_back(std::move(r));
      }
      doc["operators"] = reports;
      finish_timings(doc);
      emit_report(cfg.outputs.report_path, doc, true);
      diagnose(e.what());
      return kExitNumerical;
    }
    timing("frame_seconds", t0);
    doc["frame"] = io::frame_summary_json(*frame);

    t0 = Clock::now();
    io::Json reports = io::Json::array();
    for (std::size_t k = 0; k < operators.size(); ++k) {
      const auto& op = operators[k];
      ObservableReport rep;
      if (op.random) {
        const auto A = generate_observable(*op.random, *frame, cfg.seed + k, cfg.tolerances);
        rep = classify_operator(A, *frame, cfg.tolerances, op.label);
      } else {
        rep = classify_operator(*op.full, *frame, cfg.tolerances, op.label);
      }
      reports.push_back(io::report_json(rep));
    }
    timing("classify_seconds", t0);
    doc["operators"] = reports;
    finish_timings(doc);
    if (!cfg.outputs.frame_path.empty()) io::save_frame(*frame, resolve(cfg.outputs.frame_path, ""));
    emit_report(cfg.outputs.report_path, doc, true);
    return kExitOk;
  }

  int phase_scan() {
    auto cfg = load();
    if (!cfg.sweep) fail(ErrorKind::ConfigError, "'sweep': required by phase-scan");
    const auto& sw = *cfg.sweep;
    std::vector<io::PhaseScanRow> rows;
    for (int i = 0; i < sw.steps; ++i) {
      const double value = i == sw.steps - 1 ? sw.to : sw.from + i * (sw.to - sw.from) / (sw.steps - 1);
      ModelSpec spec = cfg.model;
      if (auto* e = std::get_if<model::EpsilonFamily>(&spec)) e->epsilon = value;
      if (auto* m = std::get_if<model::Matrix2x2>(&spec)) m->theta = value;
      const auto model = build_hamiltonian(spec, cfg.grid);
      io::PhaseScanRow row{i, sw.parameter, value, 0, 0.0, ""};
      try {
        EigenSystem E = eig(model.hamiltonian.matrix, cfg.tolerances);
        const auto cls = classify_spectrum(E, cfg.tolerances, modes(cfg, model));
        row.kept_modes = static_cast<int>(cls.kept.size());
        row.max_abs_imag = cls.max_candidate_imag;
        row.phase = std::string(to_string(cls.phase));
        if (near_exceptional_point(E, cls, cfg.tolerances)) {
          row.phase = "Exceptional";
        } else if (cls.phase != Phase::Broken) {
          biorthonormalize(std::move(E), cfg.tolerances, &cls.kept);
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::DefectiveSpectrum && e.kind() != ErrorKind::AmbiguousPairing) throw;
        row.phase = "Exceptional";
      }
      rows.push_back(row);
    }
    const std::string csv = io::phase_scan_csv(rows);
    const std::string path = resolve(cfg.outputs.csv_path, "phase_scan.csv");
    if (path.empty()) {
      out_ << csv;
    } else {
      io::write_text(path, csv);
    }
    return kExitOk;
  }

  int frame_save() {
    auto cfg = load();
    const auto model = build_hamiltonian(cfg.model, cfg.grid);
    const CPTFrame frame = build_frame(model, cfg.tolerances, modes(cfg, model));
    const std::string path = resolve(opt_.path.empty() ? cfg.outputs.frame_path : opt_.path, "frame.json");
    if (path.empty()) fail(ErrorKind::ConfigError, "no frame path: pass one, set outputs.frame_path, or use --out");
    io::save_frame(frame, path);
    out_ << io::canonical(io::frame_summary_json(frame));
    return kExitOk;
  }

  int frame_load(bool brief) {
    const CPTFrame frame = io::load_frame(opt_.path, tolerances());
    if (brief) {
      out_ << "frame ok: dim " << frame.dim() << ", kept " << frame.modes_kept() << ", order "
           << to_string(frame.order) << "\n";
    } else {
      out_ << io::canonical(io::frame_summary_json(frame));
    }
    return kExitOk;
  }

  int parse_check() {
    try {
      const PolyPotential p = parse_potential(opt_.expr);
      io::Json coeffs = io::Json::array();
      for (const auto& c : p.coefficients) coeffs.push_back(io::complex(c));
      out_ << io::canonical({{"canonical", format_potential(p)}, {"coefficients", coeffs}, {"degree", p.degree()}});
      return kExitOk;
    } catch (const SyntaxError& e) {
      diagnose(e.what());
      err_ << "  " << opt_.expr << "\n  " << std::string(e.position(), ' ') << "^\n";
      return kExitUsage;
    }
  }

  void diagnose(const std::string& message) {
    err_ << (color_ ? "\x1b[31merror:\x1b[0m " : "error: ") << message << "\n";
  }

 private:
  using Clock = std::chrono::steady_clock;

  struct ResolvedOperator {
    std::string label;
    std::optional<CMatrix> full;
    std::optional<ObservableKind> random;
  };

  Options opt_;
  std::ostream& out_;
  std::ostream& err_;
  bool color_;
  io::Json timings_ = io::Json::object();

  Tolerances tolerances(Tolerances base = {}) const {
    if (opt_.tol_real) base.reality = *opt_.tol_real;
    if (opt_.tol_disc) base.discretization = *opt_.tol_disc;
    try {
      base.validate();
    } catch (const Error& e) {
      fail(ErrorKind::ConfigError, e.what());
    }
    return base;
  }

  io::JobConfig load() {
    if (opt_.config.empty()) fail(ErrorKind::ConfigError, "--config is required");
    io::JobConfig cfg = io::load_config(opt_.config);
    if (opt_.seed) cfg.seed = *opt_.seed;
    if (opt_.modes) {
      if (*opt_.modes < 1) fail(ErrorKind::ConfigError, "--modes must be positive");
      cfg.modes_kept = *opt_.modes;
    }
    cfg.tolerances = tolerances(cfg.tolerances);
    return cfg;
  }

  static int modes(const io::JobConfig& cfg, const HamiltonianModel& model) {
    return cfg.modes_kept.value_or(default_modes(model));
  }

  std::vector<ResolvedOperator> resolve_operators(const io::JobConfig& cfg, const HamiltonianModel& model) const {
    std::vector<ResolvedOperator> ops;
    std::optional<LatticeOperators> lattice;
    if (model.hamiltonian.grid) lattice = build_operators(*model.hamiltonian.grid);
    for (std::size_t k = 0; k < cfg.operators.size(); ++k) {
      const auto& spec = cfg.operators[k];
      ResolvedOperator r{spec.label, std::nullopt, std::nullopt};
      if (spec.matrix) {
        if (spec.matrix->rows() != model.hamiltonian.matrix.rows()) {
          fail(ErrorKind::ConfigError, "'operators[" + std::to_string(k) + "].matrix': dimension " +
                                           std::to_string(spec.matrix->rows()) + " does not match the model (" +
                                           std::to_string(model.hamiltonian.matrix.rows()) + ")");
        }
        r.full = *spec.matrix;
      } else if (spec.builtin == "h") {
        r.full = model.hamiltonian.matrix;
      } else if (spec.builtin == "x") {
        r.full = lattice->position.matrix;
      } else if (spec.builtin == "p") {
        r.full = lattice->momentum.matrix;
      } else if (spec.builtin == "random_def1") {
        r.random = ObservableKind::Def1;
      } else {
        r.random = ObservableKind::Def2;
      }
      ops.push_back(std::move(r));
    }
    return ops;
  }

  io::Json header(const char* command, const io::JobConfig& cfg) const {
    io::Json effective = cfg.source;
    effective["seed"] = cfg.seed;
    if (cfg.modes_kept) effective["modes_kept"] = *cfg.modes_kept;
    effective["tolerances"] = {{"residual", cfg.tolerances.residual},
                               {"algebraic", cfg.tolerances.algebraic},
                               {"reality", cfg.tolerances.reality},
                               {"discretization", cfg.tolerances.discretization}};
    return {{"schema_version", io::kReportSchema}, {"command", command}, {"config", effective}};
  }

  void timing(const char* key, Clock::time_point start) {
    if (opt_.timings) timings_[key] = std::chrono::duration<double>(Clock::now() - start).count();
  }

  void finish_timings(io::Json& doc) const {
    if (opt_.timings) doc["timings"] = timings_;
  }

  /// Relative paths land in --out when given; an empty path falls back to
  /// `fallback` inside --out, or to nothing.
  std::string resolve(const std::string& path, const std::string& fallback) const {
    namespace fs = std::filesystem;
    std::string chosen = path;
    if (chosen.empty()) {
      if (opt_.out_dir.empty() || fallback.empty()) return "";
      chosen = fallback;
    }
    fs::path p(chosen);
    if (!opt_.out_dir.empty() && p.is_relative()) p = fs::path(opt_.out_dir) / p;
    std::error_code ec;
    if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
    if (ec) fail(ErrorKind::IoError, "cannot create '" + p.parent_path().string() + "': " + ec.message());
    return p.string();
  }

  void emit_report(const std::string& path, const io::Json& doc, bool stdout_fallback) {
    const std::string target = resolve(path, "report.json");
    if (target.empty()) {
      if (stdout_fallback) out_ << io::canonical(doc);
    } else {
      io::write_text(target, io::canonical(doc));
    }
  }

  void emit_csv(const std::string& path, const char* fallback, const std::string& csv) {
    const std::string target = resolve(path, fallback);
    if (!target.empty()) io::write_text(target, csv);
  }
};

inline bool want_color(std::ostream& err) {
  return &err == &std::cerr && std::getenv("PTQM_NO_COLOR") == nullptr && ::isatty(STDERR_FILENO);
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"PT-symmetric frame construction and observable audits", "ptqm"};
  app.fallthrough();
  app.require_subcommand(1);
  Options opt;
  std::uint64_t seed = 0;
  int modes = 0;
  double tol_real = 0, tol_disc = 0;
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed for generated operators");
  auto* modes_opt = app.add_option("--modes", modes, "number of kept modes");
  auto* real_opt = app.add_option("--tol-real", tol_real, "eigenvalue reality threshold");
  auto* disc_opt = app.add_option("--tol-disc", tol_disc, "discretization tolerance");
  app.add_option("--config", opt.config, "job config (JSON)");
  app.add_option("--out", opt.out_dir, "output directory");
  app.add_flag("--timings", opt.timings, "include wall-times in reports");

  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues, reality flags and phase");
  auto* audit = app.add_subcommand("audit", "build the frame and classify operators");
  auto* scan = app.add_subcommand("phase-scan", "sweep epsilon or theta");
  auto* frame = app.add_subcommand("frame", "persist and verify frames");
  frame->require_subcommand(1);
  auto* save = frame->add_subcommand("save", "build a frame and write it");
  save->add_option("path", opt.path, "frame file");
  auto* load = frame->add_subcommand("load", "read a frame and print its invariants");
  load->add_option("path", opt.path, "frame file")->required();
  auto* check = frame->add_subcommand("check", "read a frame and verify it");
  check->add_option("path", opt.path, "frame file")->required();
  auto* parse = app.add_subcommand("parse-check", "validate a potential expression");
  parse->add_option("expr", opt.expr, "expression in x")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }
  if (*seed_opt) opt.seed = seed;
  if (*modes_opt) opt.modes = modes;
  if (*real_opt) opt.tol_real = tol_real;
  if (*disc_opt) opt.tol_disc = tol_disc;

  Runner runner(opt, out, err, want_color(err));
  try {
    if (*spectrum) return runner.spectrum();
    if (*audit) return runner.audit();
    if (*scan) return runner.phase_scan();
    if (*save) return runner.frame_save();
    if (*load) return runner.frame_load(false);
    if (*check) return runner.frame_load(true);
    if (*parse) return runner.parse_check();
  } catch (const Error& e) {
    runner.diagnose(e.what());
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    runner.diagnose(e.what());
    return kExitNumerical;
  }
  return kExitUsage;
}

}  // namespace ptqm::cli
