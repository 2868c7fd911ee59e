#pragma once

// Observable criteria: Def 1 (transpose/CPT condition), both orderings of the
// pseudo-Hermiticity relation, Def 2 (CPT-inner-product Hermiticity), the
// measurement requirements, and the matrix-element procedure.
//
// Everything is evaluated in kept-mode coordinates A_c = X†AΦ. There:
//   CPT        a ↦ T·conj(a),           T = S·X†·Par·conj(Φ)
//   transpose  A_c ↦ J⁻¹·A_cᵀ·J,        J = Δx·ΦᵀΦ
//   metric     G = Δx·Φ†·eta·Φ
// The *_full variants apply the literal N×N formulas and are only accurate on
// well-conditioned frames.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>

#include "ptqm/errors.hpp"
#include "ptqm/linop.hpp"
#include "ptqm/metric.hpp"

namespace ptqm {

/// An operator expressed in the kept-mode coordinates of a frame.
struct KeptOperator {
  CMatrix coords;
};

inline KeptOperator restrict_to_kept(const CMatrix& A, const CPTFrame& f) {
  require_square(A);
  if (A.rows() != f.dim()) {
    fail(ErrorKind::DimensionMismatch,
         "operator of dimension " + std::to_string(A.rows()) + " against frame of dimension " + std::to_string(f.dim()));
  }
  require_finite(A);
  return {f.compress(A)};
}

struct SymmetryFlags {
  bool symmetric = false;
  double symmetric_residual = 0;
  bool pt_symmetric = false;
  double pt_residual = 0;
};

inline SymmetryFlags symmetry_flags(const CMatrix& A, const CMatrix& Par, double threshold = Tolerances{}.algebraic) {
  require_square(A);
  require_same_dim(A, Par);
  const double scale = A.norm();
  SymmetryFlags s;
  s.symmetric_residual = relative_norm(A.transpose() - A, scale);
  s.pt_residual = relative_norm(Par * A.conjugate() * Par - A, scale);
  s.symmetric = s.symmetric_residual <= threshold;
  s.pt_symmetric = s.pt_residual <= threshold;
  return s;
}

namespace detail {

inline void require_coords(const KeptOperator& A, const CPTFrame& f) {
  const Eigen::Index m = f.modes_kept();
  if (A.coords.rows() != m || A.coords.cols() != m) {
    fail(ErrorKind::DimensionMismatch, "kept operator is " + std::to_string(A.coords.rows()) + "x" +
                                           std::to_string(A.coords.cols()) + ", frame keeps " + std::to_string(m));
  }
}

/// ‖T·conj(T) − I‖: CPT must be an involution before the Def 1 identity can be expanded.
inline void require_cpt_involution(const CPTFrame& f, const Tolerances& tol) {
  const CMatrix T = f.cpt_coordinates();
  const Eigen::Index m = T.rows();
  const double dev = relative_norm(T * T.conjugate() - CMatrix::Identity(m, m), std::sqrt(double(m)));
  if (!(dev <= tol.discretization)) {
    fail(ErrorKind::FrameInconsistent, "CPT is not an involution on the kept span, deviation " + format_double(dev));
  }
}

/// ‖G·A − A†·G‖ / (‖G‖‖A‖).
inline double hermiticity_residual(const CMatrix& G, const CMatrix& A) {
  const double scale = G.norm() * A.norm();
  return scale > 0 ? (G * A - A.adjoint() * G).norm() / scale : 0.0;
}

/// The conjugate-linear map F(M) = (J·T·conj(M)·conj(T)·J⁻¹)ᵀ whose fixed
/// points are the Def 1 observables.
inline CMatrix def1_involution(const CPTFrame& f, const CMatrix& M) {
  const CMatrix J = f.bilinear_gram();
  const CMatrix T = f.cpt_coordinates();
  const CMatrix inner = J * T * M.conjugate() * T.conjugate();
  // (inner·J⁻¹)ᵀ = J⁻¹·innerᵀ since J is symmetric.
  return J.partialPivLu().solve(inner.transpose());
}

}  // namespace detail

/// Def 1 on the kept span: ‖J⁻¹A_cᵀJ − T·conj(A_c)·conj(T)‖ / ‖A_c‖.
inline double def1_residual(const KeptOperator& A, const CPTFrame& f, const Tolerances& tol = {}) {
  detail::require_coords(A, f);
  detail::require_cpt_involution(f, tol);
  const double scale = A.coords.norm();
  if (scale == 0) return 0.0;
  const CMatrix J = f.bilinear_gram();
  const CMatrix T = f.cpt_coordinates();
  const CMatrix lhs = J.partialPivLu().solve(A.coords.transpose() * J);
  const CMatrix rhs = T * A.coords.conjugate() * T.conjugate();
  return (lhs - rhs).norm() / scale;
}

/// Literal N×N form ‖AᵀΠ − C·Par·conj(A)·conj(C·Par)·Π‖ / ‖A‖.
inline double def1_residual_full(const CMatrix& A, const CPTFrame& f, const Tolerances& tol = {}) {
  require_same_dim(A, f.parity);
  const CMatrix CP = f.c_operator * f.parity;
  const CMatrix theta2 = CP * CP.conjugate();
  if (!(relative_norm(theta2 - f.projector, f.projector.norm()) <= tol.discretization)) {
    fail(ErrorKind::FrameInconsistent, "CPT squared differs from the projector");
  }
  const double scale = A.norm();
  if (scale == 0) return 0.0;
  return (A.transpose() * f.projector - CP * A.conjugate() * CP.conjugate() * f.projector).norm() / scale;
}

struct Eq2Residuals {
  double pc = 0;  ///< A† = η⁻¹Aη with η = Par·C
  double cp = 0;  ///< A† = ηAη⁻¹
  double min() const { return std::min(pc, cp); }
};

/// Weak form on the kept span: A† = η⁻¹Aη says A is Hermitian for the metric
/// η⁻¹ = C·Par, and A† = ηAη⁻¹ says A is Hermitian for η = Par·C.
inline Eq2Residuals eq2_residual(const KeptOperator& A, const CPTFrame& f) {
  detail::require_coords(A, f);
  return {detail::hermiticity_residual(f.metric_gram(OrderConvention::CP), A.coords),
          detail::hermiticity_residual(f.metric_gram(OrderConvention::PC), A.coords)};
}

inline Eq2Residuals eq2_residual_full(const CMatrix& A, const CPTFrame& f) {
  require_same_dim(A, f.parity);
  const double scale = A.norm();
  if (scale == 0) return {};
  const CMatrix pc = f.parity * f.c_operator;
  const CMatrix cp = f.c_operator * f.parity;
  const CMatrix lhs = A.adjoint() * f.projector;
  return {(lhs - cp * A * pc * f.projector).norm() / scale, (lhs - pc * A * cp * f.projector).norm() / scale};
}

/// Def 2 on the kept span, under the frame's metric.
inline double def2_residual(const KeptOperator& A, const CPTFrame& f) {
  detail::require_coords(A, f);
  return detail::hermiticity_residual(f.metric_gram(), A.coords);
}

/// Cross-check of def2_residual through inner_cpt on the kept eigenbasis.
inline double def2_residual_cpt(const KeptOperator& A, const CPTFrame& f) {
  detail::require_coords(A, f);
  return detail::hermiticity_residual(f.cpt_gram(), A.coords);
}

inline double def2_residual_full(const CMatrix& A, const CPTFrame& f) {
  require_same_dim(A, f.parity);
  const double scale = f.eta.norm() * A.norm();
  if (scale == 0) return 0.0;
  const CMatrix EA = f.eta * A;
  const CMatrix& Pi = f.projector;
  return (Pi.adjoint() * (EA - EA.adjoint()) * Pi).norm() / scale;
}

struct RequirementAudit {
  bool requirement_i = false;
  double max_imag_relative = 0;
  bool requirement_ii = false;
  double gram_deviation = 0;
  double completeness_deviation = 0;
  double cond_estimate = 0;
  std::string note;
};

/// (i) real spectrum on the kept span; (ii) complete eigenbasis, orthogonal
/// under inner_eta after per-vector normalization.
inline RequirementAudit requirement_audit(const KeptOperator& A, const CPTFrame& f, const Tolerances& tol = {}) {
  detail::require_coords(A, f);
  RequirementAudit r;
  const Eigen::Index m = A.coords.rows();
  EigenSystem E;
  try {
    E = eig(A.coords, tol);
  } catch (const Error& e) {
    r.note = e.what();
    r.max_imag_relative = std::numeric_limits<double>::infinity();
    r.gram_deviation = r.completeness_deviation = std::numeric_limits<double>::infinity();
    return r;
  }
  const double rho = E.spectral_radius;
  const double max_imag = E.values.imag().cwiseAbs().maxCoeff();
  r.max_imag_relative = rho > 0 ? max_imag / rho : max_imag;
  r.requirement_i = max_imag <= tol.reality * rho;

  try {
    E = biorthonormalize(std::move(E), tol);
  } catch (const Error& e) {
    r.note = e.what();
    r.cond_estimate = r.gram_deviation = r.completeness_deviation = std::numeric_limits<double>::infinity();
    return r;
  }
  r.cond_estimate = E.cond_estimate;
  r.completeness_deviation =
      (E.right * E.left.adjoint() - CMatrix::Identity(m, m)).norm() / std::sqrt(static_cast<double>(m));

  const CMatrix W = E.right;
  const CMatrix gram = W.adjoint() * f.metric_gram() * W;
  bool positive = true;
  for (Eigen::Index a = 0; a < m; ++a) positive = positive && gram(a, a).real() > 0;
  if (!positive) {
    r.gram_deviation = std::numeric_limits<double>::infinity();
    r.note = "non-positive eigenvector norm under the metric";
  } else {
    for (Eigen::Index a = 0; a < m; ++a) {
      for (Eigen::Index b = 0; b < m; ++b) {
        if (a == b) continue;
        const double scaled = std::abs(gram(a, b)) / std::sqrt(gram(a, a).real() * gram(b, b).real());
        r.gram_deviation = std::max(r.gram_deviation, scaled);
      }
    }
  }
  const double gram_tol = f.exact ? 10.0 * tol.algebraic : tol.discretization;
  const bool rank_ok = r.cond_estimate * tol.discretization < 1.0;
  if (!rank_ok && r.note.empty()) r.note = "eigenvectors do not span the kept subspace";
  r.requirement_ii = positive && rank_ok && r.completeness_deviation <= tol.discretization &&
                     r.gram_deviation <= gram_tol;
  return r;
}

struct MatrixElementAudit {
  bool evaluated = false;
  bool pass = false;
  double max_violation = 0;           ///< max |conj(A_mn) − A_nm|
  double max_violation_relative = 0;  ///< divided by max |A_mn|
  CMatrix table;
};

/// A_mn = inner_cpt(φ_m, Aφ_n) with each φ_n scaled to unit CPT norm.
inline MatrixElementAudit matrix_element_audit(const KeptOperator& A, const CPTFrame& f, const Tolerances& tol = {}) {
  detail::require_coords(A, f);
  const Eigen::Index m = f.modes_kept();
  if (m < 2) fail(ErrorKind::InvalidArgument, "matrix-element audit needs at least two kept modes");
  const CMatrix K = f.cpt_gram();
  RVector scale(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double norm = K(k, k).real();
    if (!(norm > 0)) {
      fail(ErrorKind::BrokenPhase, "CPT norm of kept mode " + std::to_string(k) + " is not positive (" +
                                       detail::format_double(norm) + ")");
    }
    scale(k) = 1.0 / std::sqrt(norm);
  }
  MatrixElementAudit out;
  out.evaluated = true;
  out.table = scale.asDiagonal() * (K * A.coords) * scale.asDiagonal();
  const double top = out.table.cwiseAbs().maxCoeff();
  out.max_violation = (out.table.adjoint() - out.table).cwiseAbs().maxCoeff();
  out.max_violation_relative = top > 0 ? out.max_violation / top : 0.0;
  out.pass = out.max_violation <= tol.discretization * top;
  return out;
}

enum class ObservableKind { Def1, Def2 };

namespace detail {

/// Standard normal draws via Box–Muller on the 53-bit uniform of mt19937_64.
/// Spelled out so the stream is identical across standard libraries.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}
  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }
  Complex complex() {
    const double re = next();
    return {re, next()};
  }
  CMatrix matrix(Eigen::Index m) {
    CMatrix M(m, m);
    for (Eigen::Index j = 0; j < m; ++j) {
      for (Eigen::Index i = 0; i < m; ++i) M(i, j) = complex();
    }
    return M;
  }

 private:
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::mt19937_64 engine_;
  double spare_ = 0;
  bool has_spare_ = false;
};

}  // namespace detail

/// Seeded operator satisfying the requested definition by construction.
inline KeptOperator generate_observable(ObservableKind kind, const CPTFrame& f, std::uint64_t seed,
                                        const Tolerances& tol = {}) {
  detail::GaussianStream rng(seed);
  const Eigen::Index m = f.modes_kept();
  const CMatrix Z = rng.matrix(m);
  if (kind == ObservableKind::Def2) {
    const CMatrix B = (Z + Z.adjoint()) / 2.0;
    KeptOperator A{f.metric_gram().partialPivLu().solve(B)};
    const double r = def2_residual(A, f);
    if (!(r <= tol.algebraic)) {
      fail(ErrorKind::FrameInconsistent, "generated Def 2 operator misses by " + detail::format_double(r));
    }
    return A;
  }
  const CMatrix FM = detail::def1_involution(f, Z);
  const double back = relative_norm(detail::def1_involution(f, FM) - Z, Z.norm());
  if (!(back <= tol.algebraic)) {
    fail(ErrorKind::FrameInconsistent, "Def 1 map is not an involution, deviation " + detail::format_double(back));
  }
  KeptOperator A{(Z + FM) / 2.0};
  const double r = def1_residual(A, f, tol);
  if (!(r <= tol.algebraic)) {
    fail(ErrorKind::FrameInconsistent, "generated Def 1 operator misses by " + detail::format_double(r));
  }
  return A;
}

enum class Def1Status { Satisfied, Violated, Inapplicable };
enum class Verdict { Def1AndDef2, Def2Only, NotObservable, Inapplicable };

constexpr std::string_view to_string(Def1Status s) {
  switch (s) {
    case Def1Status::Satisfied: return "Satisfied";
    case Def1Status::Violated: return "Violated";
    case Def1Status::Inapplicable: return "Inapplicable";
  }
  return "Unknown";
}

constexpr std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::Def1AndDef2: return "Def1AndDef2";
    case Verdict::Def2Only: return "Def2Only";
    case Verdict::NotObservable: return "NotObservable";
    case Verdict::Inapplicable: return "Inapplicable";
  }
  return "Unknown";
}

struct ObservableReport {
  std::string label;
  Eigen::Index dim = 0;
  SymmetryFlags symmetry;
  double def1_residual = 0;
  Def1Status def1_status = Def1Status::Violated;
  Eq2Residuals eq2;
  double def2_residual = 0;
  double def2_residual_cpt = 0;
  RequirementAudit requirements;
  MatrixElementAudit matrix_element;
  OrderConvention order = OrderConvention::PC;
  double threshold = 0;
  Verdict verdict = Verdict::NotObservable;
};

/// Runs every check. `full` (the N×N operator, when known) feeds the symmetry
/// flags; otherwise they are taken from the lifted kept operator.
inline ObservableReport classify_operator(const KeptOperator& A, const CPTFrame& f, const Tolerances& tol = {},
                                          std::string label = "A", const CMatrix* full = nullptr) {
  detail::require_coords(A, f);
  ObservableReport r;
  r.label = std::move(label);
  r.dim = f.dim();
  r.order = f.order;
  r.threshold = f.verdict_tolerance(tol);
  r.symmetry = symmetry_flags(full ? *full : f.lift(A.coords), f.parity, tol.algebraic);
  r.def1_residual = def1_residual(A, f, tol);
  r.eq2 = eq2_residual(A, f);
  r.def2_residual = def2_residual(A, f);
  r.def2_residual_cpt = def2_residual_cpt(A, f);
  r.requirements = requirement_audit(A, f, tol);
  if (f.modes_kept() >= 2) r.matrix_element = matrix_element_audit(A, f, tol);

  const bool h_symmetric = symmetry_flags(f.hamiltonian, f.parity, tol.algebraic).symmetric;
  if (!h_symmetric) {
    r.def1_status = Def1Status::Inapplicable;
  } else {
    r.def1_status = r.def1_residual <= r.threshold ? Def1Status::Satisfied : Def1Status::Violated;
  }
  const bool def2 = r.def2_residual <= r.threshold;
  if (def2) {
    r.verdict = r.def1_status == Def1Status::Satisfied ? Verdict::Def1AndDef2 : Verdict::Def2Only;
  } else {
    r.verdict = Verdict::NotObservable;
  }
  return r;
}

inline ObservableReport classify_operator(const CMatrix& A, const CPTFrame& f, const Tolerances& tol = {},
                                          std::string label = "A") {
  return classify_operator(restrict_to_kept(A, f), f, tol, std::move(label), &A);
}

}  // namespace ptqm
