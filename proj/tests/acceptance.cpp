// One line per acceptance criterion; exit status 1 if any fails.

#include <sys/wait.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "fixtures.hpp"
#include "ptqm/io.hpp"
#include "ptqm/observables.hpp"

using namespace ptqm;
namespace fs = std::filesystem;

namespace {

const Tolerances tol;
int failures = 0;

struct Criterion {
  std::string name;
  std::ostringstream detail;
  bool ok = true;

  explicit Criterion(std::string n) : name(std::move(n)) {}

  void expect(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [x] " << what;
    }
  }
  template <class T>
  Criterion& note(const std::string& key, T value) {
    detail << " " << key << "=" << value;
    return *this;
  }
  ~Criterion() {
    if (!ok) ++failures;
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << ":" << detail.str() << std::endl;
  }
};

template <class F>
void guarded(Criterion& c, F&& f) {
  try {
    f();
  } catch (const std::exception& e) {
    c.expect(false, std::string("unexpected error: ") + e.what());
  }
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Run {
  int code;
  std::string out;
};

Run run_cli(const std::string& args, const fs::path& dir, const std::string& tag) {
  const fs::path out = dir / (tag + ".out");
  const fs::path err = dir / (tag + ".err");
  const std::string cmd = std::string("PTQM_NO_COLOR=1 '") + PTQM_CLI_PATH + "' " + args + " > '" + out.string() +
                          "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  const int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return {code, slurp(out)};
}

std::string config(const std::string& name) { return std::string("'") + PTQM_CONFIG_DIR + "/" + name + "'"; }

CVector random_kept(const CPTFrame& f, detail::GaussianStream& g) {
  CVector a(f.modes_kept());
  for (Eigen::Index k = 0; k < a.size(); ++k) a(k) = g.complex();
  return f.kept_right * a;
}

double max_off_diagonal(const CMatrix& T) {
  double worst = 0;
  for (Eigen::Index m = 0; m < T.rows(); ++m) {
    for (Eigen::Index n = 0; n < T.cols(); ++n) {
      if (m != n) worst = std::max(worst, std::abs(T(m, n)));
    }
  }
  return worst;
}

void closed_form_frame() {
  Criterion c("AC1 2x2 closed-form frame");
  guarded(c, [&] {
    const double s3 = std::sqrt(3.0);
    const auto& f = fixtures::two_level_frame();
    const auto E = eig(f.hamiltonian, tol);
    const double ev = std::max(std::abs(E.values(0)), std::abs(E.values(1) - s3));
    c.expect(ev <= 1e-12, "eigenvalues {0, sqrt3}");

    CMatrix C(2, 2);
    C << Complex(0, 1 / s3), 2 / s3, 2 / s3, Complex(0, -1 / s3);
    const double dc = (f.c_operator - C).cwiseAbs().maxCoeff();
    c.expect(dc <= 1e-10, "C closed form");
    const CMatrix I = CMatrix::Identity(2, 2);
    const double c2 = (f.c_operator * f.c_operator - I).cwiseAbs().maxCoeff();
    const double ch = (f.c_operator * f.hamiltonian - f.hamiltonian * f.c_operator).cwiseAbs().maxCoeff();
    const double herm = (f.eta - f.eta.adjoint()).cwiseAbs().maxCoeff();
    c.expect(c2 <= 1e-10, "C^2 = I");
    c.expect(ch <= 1e-10, "[C,H] = 0");
    c.expect(herm <= 1e-10, "eta Hermitian");
    Eigen::SelfAdjointEigenSolver<CMatrix> es(f.eta);
    const double de = std::max(std::abs(es.eigenvalues()(0) - 1 / s3), std::abs(es.eigenvalues()(1) - s3));
    c.expect(de <= 1e-10, "eta eigenvalues {sqrt3, 1/sqrt3}");
    c.expect(is_positive_definite(f.eta), "eta positive definite");
    c.note("eig_err", ev).note("C_err", dc).note("C2_err", c2).note("CH_err", ch).note("eta_eig_err", de);
  });
}

void def1_implies_eq2() {
  Criterion c("AC2 Def 1 implies pseudo-Hermiticity");
  guarded(c, [&] {
    for (const auto& [name, f] : {std::pair{"2x2", &fixtures::two_level_frame()}, std::pair{"eps1", &fixtures::epsilon_frame(1.0)}}) {
      int pass = 0;
      double worst1 = 0, worst2 = 0;
      for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto A = generate_observable(ObservableKind::Def1, *f, seed);
        const double d1 = def1_residual(A, *f);
        const double e2 = eq2_residual(A, *f).min();
        worst1 = std::max(worst1, d1);
        worst2 = std::max(worst2, e2);
        if (d1 <= tol.algebraic && e2 <= 10 * tol.algebraic) ++pass;
      }
      c.expect(pass == 100, std::string(name) + " cases");
      c.note(std::string(name) + "_pass", std::to_string(pass) + "/100")
          .note(std::string(name) + "_max_def1", worst1)
          .note(std::string(name) + "_max_eq2", worst2);
    }
  });
}

void def2_equivalence() {
  Criterion c("AC3 Def 2 iff requirements (i)+(ii)");
  guarded(c, [&] {
    for (const auto& [name, f] : {std::pair{"2x2", &fixtures::two_level_frame()}, std::pair{"eps1", &fixtures::epsilon_frame(1.0)}}) {
      const double gram_limit = f->exact ? 1e-8 : 1e-6;
      int pass = 0;
      double worst_gram = 0;
      for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto r = requirement_audit(generate_observable(ObservableKind::Def2, *f, seed), *f, tol);
        worst_gram = std::max(worst_gram, r.gram_deviation);
        if (r.requirement_i && r.requirement_ii && r.gram_deviation <= gram_limit) ++pass;
      }
      int rejected = 0, caught = 0;
      for (std::uint64_t seed = 10000; rejected < 100; ++seed) {
        const KeptOperator A{fixtures::random_matrix(seed, f->modes_kept())};
        if (!(def2_residual(A, *f) > 1e-3)) continue;
        ++rejected;
        const auto r = requirement_audit(A, *f, tol);
        if (!(r.requirement_i && r.requirement_ii)) ++caught;
      }
      c.expect(pass == 100, std::string(name) + " Def 2 operators pass");
      c.expect(caught == 100, std::string(name) + " non-Def 2 operators fail");
      c.note(std::string(name) + "_def2_pass", std::to_string(pass) + "/100")
          .note(std::string(name) + "_max_gram", worst_gram)
          .note(std::string(name) + "_non_def2_fail", std::to_string(caught) + "/100");
    }
  });
}

void inner_product_coincidence() {
  Criterion c("AC4 CPT and eta inner products coincide");
  guarded(c, [&] {
    detail::GaussianStream g(2024);
    for (double eps : {0.0, 0.5, 1.0}) {
      const auto& f = fixtures::epsilon_frame(eps);
      double worst = 0;
      int pass = 0;
      for (int k = 0; k < 100; ++k) {
        const CVector u = random_kept(f, g), v = random_kept(f, g);
        const double d = std::abs(inner_cpt(f, u, v) - inner_eta(f, u, v)) / (u.norm() * v.norm());
        worst = std::max(worst, d);
        if (d <= 1e-6) ++pass;
      }
      c.expect(pass == 100, "eps=" + std::to_string(eps));
      std::ostringstream key;
      key << "eps" << eps << "_max_rel";
      c.note(key.str(), worst);
    }
  });
}

void counterexample(const fs::path& dir) {
  Criterion c("AC5 shifted-square counterexample");
  guarded(c, [&] {
    const auto m = build_hamiltonian(model::ShiftedSquare{}, make_grid(301, 10));
    const auto s = symmetry_flags(m.hamiltonian.matrix, m.parity.matrix);
    c.expect(s.pt_residual <= 1e-9, "PT-symmetric");
    c.expect(s.symmetric_residual > 0.1, "not symmetric");
    c.note("pt_residual", s.pt_residual).note("symmetric_residual", s.symmetric_residual);

    std::string outcome;
    try {
      const auto f = build_frame(m, tol);
      const auto r = classify_operator(m.hamiltonian.matrix, f, tol, "H");
      c.expect(r.def1_status == Def1Status::Inapplicable, "Def 1 Inapplicable");
      c.expect(f.invariants.metric_min_eig_pc > 0 || f.invariants.metric_min_eig_cp > 0, "positive frame");
      outcome = "frame";
    } catch (const Error& e) {
      c.expect(e.kind() == ErrorKind::MetricNotPositive || e.kind() == ErrorKind::BrokenPhase, "documented outcome");
      outcome = std::string(to_string(e.kind()));
    }
    c.note("library_outcome", outcome);

    const auto a = run_cli("--config " + config("shifted_square_audit.json") + " audit", dir, "ss1");
    const auto b = run_cli("--config " + config("shifted_square_audit.json") + " audit", dir, "ss2");
    c.expect(a.out == b.out, "deterministic report");
    const auto doc = io::Json::parse(a.out);
    const auto& op = doc.at("operators").at(0);
    c.expect(op.at("def1_status") == "Inapplicable", "report marks Def 1 Inapplicable");
    c.expect(op.at("symmetric").at("flag") == false, "report flags symmetric=false");
    const bool frame_ok = doc.at("frame").at("status") == "ok";
    if (!frame_ok) {
      c.expect(a.code == 1, "exit 1 with diagnostics");
      c.expect(doc.at("frame").at("error").at("kind") == outcome, "report documents the outcome");
    }
    c.note("cli_exit", a.code).note("report_frame_status", doc.at("frame").at("status").get<std::string>());
  });
}

void matrix_elements() {
  Criterion c("AC6 matrix-element procedure");
  guarded(c, [&] {
    const auto& f = fixtures::epsilon_frame(1.0);
    const auto h = matrix_element_audit(restrict_to_kept(f.hamiltonian, f), f, tol);
    const double top = h.table.cwiseAbs().maxCoeff();
    const double off = max_off_diagonal(h.table) / top;
    double diag = 0;
    for (Eigen::Index k = 0; k < h.table.rows(); ++k) {
      diag = std::max(diag, std::abs(h.table(k, k) - f.kept_values(k)) / std::abs(f.kept_values(k)));
    }
    c.expect(off <= 1e-6, "H table diagonal");
    c.expect(diag <= 1e-6, "diagonal matches kept eigenvalues");
    c.note("offdiag_rel", off).note("diag_rel", diag);

    const auto ops = build_operators(make_grid(201, 8));
    std::vector<KeptOperator> corpus;
    for (std::uint64_t s = 0; s < 6; ++s) corpus.push_back(generate_observable(ObservableKind::Def2, f, s));
    for (std::uint64_t s = 0; s < 4; ++s) corpus.push_back(generate_observable(ObservableKind::Def1, f, s));
    for (std::uint64_t s = 0; s < 6; ++s) corpus.push_back({fixtures::random_matrix(700 + s, f.modes_kept())});
    corpus.push_back(restrict_to_kept(f.hamiltonian, f));
    corpus.push_back(restrict_to_kept(ops.position.matrix, f));
    corpus.push_back(restrict_to_kept(ops.momentum.matrix, f));
    corpus.push_back(restrict_to_kept(ops.kinetic.matrix, f));
    int agree = 0, def2 = 0;
    for (const auto& A : corpus) {
      const bool by_residual = def2_residual(A, f) <= tol.discretization;
      if (by_residual) ++def2;
      if (matrix_element_audit(A, f, tol).pass == by_residual) ++agree;
    }
    c.expect(agree == 20 && corpus.size() == 20, "agreement on the mixed corpus");
    c.note("agreement", std::to_string(agree) + "/" + std::to_string(corpus.size())).note("def2_in_corpus", def2);
  });
}

void hermitian_control() {
  Criterion c("AC7 Hermitian control");
  guarded(c, [&] {
    const auto& f = fixtures::epsilon_frame(0.0);
    const double dc = (f.c_operator - f.parity * f.projector).norm() / f.parity.norm();
    const double de = (f.eta - f.projector).norm();
    c.expect(dc <= 1e-6, "C = Par on the kept span");
    c.expect(de <= 1e-6, "eta = I on the kept span");
    c.note("C_minus_Par_rel", dc).note("eta_minus_I", de);

    auto low = [](const HamiltonianModel& m) {
      EigenSystem E;
      const auto cls = classify_model(m, tol, 5, E);
      std::vector<double> v;
      for (const auto k : cls.kept) v.push_back(E.values(k).real());
      return v;
    };
    const auto coarse = low(fixtures::epsilon_model(0.0));
    const auto fine = low(build_hamiltonian(model::HermitianOscillator{}, make_grid(401, 8)));
    double worst_coarse = 0, worst_fine = 0;
    bool converging = coarse.size() == 5 && fine.size() == 5;
    for (std::size_t n = 0; converging && n < 5; ++n) {
      const double odd = 2.0 * n + 1;
      const double ec = std::abs(coarse[n] - odd) / odd, ef = std::abs(fine[n] - odd) / odd;
      worst_coarse = std::max(worst_coarse, ec);
      worst_fine = std::max(worst_fine, ef);
      converging = converging && ef < ec;
    }
    c.expect(worst_coarse <= 1e-3, "N=201 eigenvalues within 1e-3 of {1,3,5,7,9}");
    c.expect(converging && worst_fine <= 1e-3, "N=401 oracle confirms convergence");
    c.note("max_rel_err_N201", worst_coarse).note("max_rel_err_N401", worst_fine);
  });
}

void determinism_and_formats(const fs::path& dir) {
  Criterion c("AC8 determinism, goldens, exit codes");
  guarded(c, [&] {
    const std::string golden = PTQM_GOLDEN_DIR;
    for (const char* job : {"two_level_audit.json", "ix_cubed_audit.json"}) {
      const auto a = run_cli("--config " + config(job) + " audit", dir, "det_a");
      const auto b = run_cli("--config " + config(job) + " audit", dir, "det_b");
      c.expect(a.code == 0 && !a.out.empty() && a.out == b.out, std::string("byte-identical ") + job);
    }
    const fs::path spec_dir = dir / "spectrum";
    const auto s = run_cli("--config " + config("two_level_spectrum.json") + " --out '" + spec_dir.string() + "' spectrum",
                           dir, "spec");
    c.expect(s.code == 0 && slurp(spec_dir / "spectrum.csv") == slurp(golden + "/two_level_spectrum.csv"),
             "spectrum CSV golden");
    const auto a = run_cli("--config " + config("two_level_audit.json") + " audit", dir, "audit");
    c.expect(a.code == 0 && a.out == slurp(golden + "/two_level_audit.json"), "audit JSON golden");
    const auto p = run_cli("--config " + config("theta_scan.json") + " phase-scan", dir, "scan");
    c.expect(p.code == 0 && p.out == slurp(golden + "/theta_scan.csv"), "phase-scan CSV golden");

    const int ok = run_cli("--config " + config("two_level_spectrum.json") + " spectrum", dir, "x0").code;
    const int numerical = run_cli("--config " + config("two_level_broken_audit.json") + " audit", dir, "x1").code;
    const int usage = run_cli("--config " + config("bad_unknown_key.json") + " spectrum", dir, "x2").code;
    const int steps = run_cli("--config " + config("bad_steps.json") + " phase-scan", dir, "x3").code;
    c.expect(ok == 0, "exit 0 on success");
    c.expect(numerical == 1, "exit 1 on numerical failure");
    c.expect(usage == 2 && steps == 2, "exit 2 on config failure");
    c.note("exit_codes", std::to_string(ok) + "/" + std::to_string(numerical) + "/" + std::to_string(usage) + "/" +
                             std::to_string(steps));
  });
}

}  // namespace

int main() {
  const fs::path dir = fs::temp_directory_path() / "ptqm_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);

  closed_form_frame();
  def1_implies_eq2();
  def2_equivalence();
  inner_product_coincidence();
  counterexample(dir);
  matrix_elements();
  hermitian_control();
  determinism_and_formats(dir);

  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criterion(s) failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
