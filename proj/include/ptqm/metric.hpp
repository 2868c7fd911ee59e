#pragma once

// CPT frame: the C operator, the metric eta = Par·C, and the two inner
// products, built spectrally from biorthonormal kept modes.
//
// Large kept-mode condition numbers make full N×N products with C or eta lose
// accuracy, so every operator application has a factored form through
// (Φ, S, X†) and the observables work in kept-mode coordinates.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ptqm/errors.hpp"
#include "ptqm/linop.hpp"
#include "ptqm/models.hpp"

namespace ptqm {

enum class Phase { Unbroken, Broken, PartiallyKept };

constexpr std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::Unbroken: return "Unbroken";
    case Phase::Broken: return "Broken";
    case Phase::PartiallyKept: return "PartiallyKept";
  }
  return "Unknown";
}

struct SpectrumClassification {
  std::vector<bool> real;                  ///< per mode, in EigenSystem order
  std::vector<bool> certified;             ///< residual certificates present
  std::vector<Eigen::Index> candidates;    ///< m smallest |Re λ|, ascending index
  std::vector<Eigen::Index> kept;          ///< real and certified candidates
  Phase phase = Phase::Unbroken;
  double max_candidate_imag = 0;           ///< max |Im λ| over candidates
  double spectral_radius = 0;
  int complex_outside_kept = 0;            ///< non-real modes beyond the candidates
};

/// Reality and residual flags, the kept list and the phase label. The label
/// describes the candidate (low) modes: complex modes outside them are only
/// counted.
inline SpectrumClassification classify_spectrum(const EigenSystem& E, const Tolerances& tol, int m) {
  if (m <= 0) fail(ErrorKind::InvalidArgument, "modes_kept must be positive");
  const Eigen::Index n = E.dim();
  SpectrumClassification cls;
  cls.spectral_radius = E.spectral_radius;
  cls.real.resize(n);
  cls.certified.resize(n);
  const double bound = tol.residual * E.operator_norm;
  for (Eigen::Index k = 0; k < n; ++k) {
    cls.real[k] = std::abs(E.values(k).imag()) <= tol.reality * E.spectral_radius;
    cls.certified[k] = k < E.residual_right.size() && k < E.residual_left.size() &&
                       E.residual_right(k) <= bound && E.residual_left(k) <= bound;
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::abs(E.values(a).real()) < std::abs(E.values(b).real());
  });
  const auto take = std::min<Eigen::Index>(m, n);
  cls.candidates.assign(order.begin(), order.begin() + take);
  std::sort(cls.candidates.begin(), cls.candidates.end());

  bool broken = false;
  for (const Eigen::Index k : cls.candidates) {
    cls.max_candidate_imag = std::max(cls.max_candidate_imag, std::abs(E.values(k).imag()));
    if (!cls.real[k]) broken = true;
    if (cls.real[k] && cls.certified[k]) cls.kept.push_back(k);
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    if (!cls.real[k] && !std::binary_search(cls.candidates.begin(), cls.candidates.end(), k)) {
      ++cls.complex_outside_kept;
    }
  }
  if (broken) {
    cls.phase = Phase::Broken;
  } else if (static_cast<Eigen::Index>(cls.kept.size()) < take) {
    cls.phase = Phase::PartiallyKept;
  } else {
    cls.phase = Phase::Unbroken;
  }
  return cls;
}

/// True when two candidate modes nearly coalesce with nearly orthogonal
/// left/right partners (|Δλ| and |χ†φ| both ≤ √τ_res in relative terms),
/// the numerical signature of an exceptional point.
inline bool near_exceptional_point(const EigenSystem& E, const SpectrumClassification& cls, const Tolerances& tol) {
  const double gap = std::sqrt(tol.residual) * std::max(E.operator_norm, std::numeric_limits<double>::min());
  auto overlap = [&](Eigen::Index k) {
    return std::abs(E.left.col(k).dot(E.right.col(k))) / (E.left.col(k).norm() * E.right.col(k).norm());
  };
  for (std::size_t a = 0; a < cls.candidates.size(); ++a) {
    for (std::size_t b = a + 1; b < cls.candidates.size(); ++b) {
      const Eigen::Index i = cls.candidates[a], j = cls.candidates[b];
      if (std::abs(E.values(i) - E.values(j)) <= gap &&
          std::min(overlap(i), overlap(j)) <= std::sqrt(tol.residual)) {
        return true;
      }
    }
  }
  return false;
}

enum class OrderConvention { PC, CP };

constexpr std::string_view to_string(OrderConvention o) { return o == OrderConvention::PC ? "PC" : "CP"; }

struct FrameInvariants {
  double involution = 0;          ///< ‖C² − Π‖ / ‖Π‖
  double commutes_with_h = 0;     ///< ‖CHΠ − HCΠ‖ / (‖C‖‖H‖)
  double pt_commutation = 0;      ///< ‖Par·conj(C)·Par − C‖ / ‖C‖
  double biorthogonality = 0;     ///< max |X†Φ − I|
  double factor_consistency = 0;  ///< ‖C − ΦSX†‖ / ‖C‖ (stored vs. rebuilt)
  double eta_hermiticity_pc = 0;
  double eta_hermiticity_cp = 0;
  double metric_min_eig_pc = 0;   ///< min eigenvalue of the kept metric, relative to its largest
  double metric_min_eig_cp = 0;
  double pseudo_hermiticity_pc = 0;  ///< ‖H†η − ηH‖ / (‖H‖‖η‖)
  double pseudo_hermiticity_cp = 0;
};

struct CPTFrame {
  CMatrix hamiltonian;
  CMatrix parity;
  CMatrix c_operator;
  CMatrix eta;
  CMatrix eta_inv;
  CMatrix projector;
  CMatrix kept_right;  ///< Φ, PT-invariant and PT-normalized
  CMatrix kept_left;   ///< X, with X†Φ = I
  CVector kept_values;
  std::vector<int> signs;
  double weight = 1;
  OrderConvention order = OrderConvention::PC;
  bool exact = false;  ///< matrix model: algebraic thresholds apply
  FrameInvariants invariants;

  Eigen::Index dim() const { return parity.rows(); }
  Eigen::Index modes_kept() const { return kept_right.cols(); }

  /// Threshold for verdicts: τ_alg on exact frames, τ_disc on lattices.
  double verdict_tolerance(const Tolerances& tol) const { return exact ? tol.algebraic : tol.discretization; }

  CVector sign_vector() const {
    CVector s(static_cast<Eigen::Index>(signs.size()));
    for (std::size_t k = 0; k < signs.size(); ++k) s(static_cast<Eigen::Index>(k)) = signs[k];
    return s;
  }

  CMatrix apply_c(const CMatrix& V) const {
    return kept_right * (sign_vector().asDiagonal() * (kept_left.adjoint() * V));
  }
  CMatrix apply_eta(const CMatrix& V, OrderConvention o) const {
    return o == OrderConvention::PC ? CMatrix(parity * apply_c(V)) : apply_c(parity * V);
  }
  CMatrix apply_eta(const CMatrix& V) const { return apply_eta(V, order); }
  CMatrix apply_eta_inv(const CMatrix& V) const {
    return apply_eta(V, order == OrderConvention::PC ? OrderConvention::CP : OrderConvention::PC);
  }

  /// Kept-mode coordinates of an operator, A_c = X†AΦ.
  CMatrix compress(const CMatrix& A) const { return kept_left.adjoint() * A * kept_right; }
  CMatrix lift(const CMatrix& Ac) const { return kept_right * Ac * kept_left.adjoint(); }

  /// G = Δx·Φ†ηΦ for the given ordering.
  CMatrix metric_gram(OrderConvention o) const { return weight * (kept_right.adjoint() * apply_eta(kept_right, o)); }
  CMatrix metric_gram() const { return metric_gram(order); }
  /// J = Δx·ΦᵀΦ, the plain bilinear form on the kept span.
  CMatrix bilinear_gram() const { return weight * (kept_right.transpose() * kept_right); }
  /// B = X†·Par·conj(Φ): PT in coordinates is a ↦ B·conj(a).
  CMatrix pt_coordinates() const { return kept_left.adjoint() * (parity * kept_right.conjugate()); }
  /// T = S·B: CPT in coordinates is a ↦ T·conj(a).
  CMatrix cpt_coordinates() const { return sign_vector().asDiagonal() * pt_coordinates(); }
  /// inner_cpt(Φa, Φb) = a†·K·b.
  CMatrix cpt_gram() const { return cpt_coordinates().transpose() * bilinear_gram(); }
};

namespace detail {

inline double relative_min_eigenvalue(const CMatrix& G) {
  const CMatrix sym = (G + G.adjoint()) / 2.0;
  const RVector ev = Eigen::SelfAdjointEigenSolver<CMatrix>(sym, Eigen::EigenvaluesOnly).eigenvalues();
  const double top = ev.cwiseAbs().maxCoeff();
  return top > 0 ? ev.minCoeff() / top : 0.0;
}

/// Multiply v by the phase that makes Par·conj(v) = v, read off at the
/// largest-magnitude component. Returns the relative residual.
inline double pt_phase_fix(const CMatrix& parity, CVector& v) {
  Eigen::Index j = 0;
  v.cwiseAbs().maxCoeff(&j);
  const CVector mirrored = parity * v.conjugate();
  Complex a = mirrored(j) / v(j);
  if (!std::isfinite(std::abs(a)) || std::abs(a) == 0) return std::numeric_limits<double>::infinity();
  a /= std::abs(a);
  v *= std::sqrt(a);
  return (parity * v.conjugate() - v).norm() / v.norm();
}

inline std::string describe(Complex z) {
  std::ostringstream os;
  os.precision(6);
  os << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i";
  return os.str();
}

}  // namespace detail

/// Recompute every invariant from the stored matrices and factors.
inline FrameInvariants measure_invariants(const CPTFrame& f) {
  FrameInvariants inv;
  const CMatrix& C = f.c_operator;
  const CMatrix& Pi = f.projector;
  const CMatrix& H = f.hamiltonian;
  const CMatrix& Par = f.parity;
  const double c_norm = C.norm();
  inv.involution = relative_norm(C * C - Pi, Pi.norm());
  inv.commutes_with_h = relative_norm(C * H * Pi - H * C * Pi, c_norm * H.norm());
  inv.pt_commutation = relative_norm(Par * C.conjugate() * Par - C, c_norm);
  const Eigen::Index m = f.modes_kept();
  inv.biorthogonality = (f.kept_left.adjoint() * f.kept_right - CMatrix::Identity(m, m)).cwiseAbs().maxCoeff();
  inv.factor_consistency = relative_norm(C - f.apply_c(CMatrix::Identity(f.dim(), f.dim())), c_norm);

  const CMatrix eta_pc = Par * C;
  const CMatrix eta_cp = C * Par;
  inv.eta_hermiticity_pc = relative_norm(eta_pc - eta_pc.adjoint(), eta_pc.norm());
  inv.eta_hermiticity_cp = relative_norm(eta_cp - eta_cp.adjoint(), eta_cp.norm());
  inv.metric_min_eig_pc = detail::relative_min_eigenvalue(f.metric_gram(OrderConvention::PC));
  inv.metric_min_eig_cp = detail::relative_min_eigenvalue(f.metric_gram(OrderConvention::CP));
  const CMatrix Hh = H.adjoint();
  inv.pseudo_hermiticity_pc = relative_norm(Hh * eta_pc - eta_pc * H, H.norm() * eta_pc.norm());
  inv.pseudo_hermiticity_cp = relative_norm(Hh * eta_cp - eta_cp * H, H.norm() * eta_cp.norm());
  return inv;
}

namespace detail {

inline bool ordering_ok(const FrameInvariants& inv, OrderConvention o, double tau) {
  return o == OrderConvention::PC ? inv.eta_hermiticity_pc <= tau && inv.metric_min_eig_pc > 0
                                  : inv.eta_hermiticity_cp <= tau && inv.metric_min_eig_cp > 0;
}

inline void set_order(CPTFrame& f, OrderConvention o) {
  f.order = o;
  const CMatrix pc = f.parity * f.c_operator;
  const CMatrix cp = f.c_operator * f.parity;
  f.eta = o == OrderConvention::PC ? pc : cp;
  f.eta_inv = o == OrderConvention::PC ? cp : pc;
}

}  // namespace detail

/// Throws FrameInconsistent / MetricNotPositive when a stored frame breaks an
/// invariant. Used after construction and after loading.
inline void verify_frame(CPTFrame& f, const Tolerances& tol) {
  const double tau = tol.discretization;
  const Eigen::Index n = f.dim();
  const Eigen::Index m = f.modes_kept();
  auto shape = [&](const CMatrix& M, Eigen::Index r, Eigen::Index c, const char* what) {
    if (M.rows() != r || M.cols() != c) {
      fail(ErrorKind::FrameInconsistent, std::string(what) + " has shape " + std::to_string(M.rows()) + "x" +
                                             std::to_string(M.cols()) + ", expected " + std::to_string(r) + "x" +
                                             std::to_string(c));
    }
    if (!all_finite(M)) fail(ErrorKind::FrameInconsistent, std::string(what) + " has non-finite entries");
  };
  if (n == 0 || m == 0) fail(ErrorKind::FrameInconsistent, "empty frame");
  shape(f.parity, n, n, "P");
  shape(f.hamiltonian, n, n, "H");
  shape(f.c_operator, n, n, "C");
  shape(f.eta, n, n, "eta");
  shape(f.eta_inv, n, n, "eta_inv");
  shape(f.projector, n, n, "projector");
  shape(f.kept_right, n, m, "kept_right");
  shape(f.kept_left, n, m, "kept_left");
  if (f.kept_values.size() != m || static_cast<Eigen::Index>(f.signs.size()) != m) {
    fail(ErrorKind::FrameInconsistent, "kept values / signs do not match the kept modes");
  }
  for (const int s : f.signs) {
    if (s != 1 && s != -1) fail(ErrorKind::FrameInconsistent, "signs must be +1 or -1");
  }
  if (!(f.weight > 0)) fail(ErrorKind::FrameInconsistent, "weight must be positive");

  f.invariants = measure_invariants(f);
  const FrameInvariants& inv = f.invariants;
  auto check = [&](double value, double limit, const char* what) {
    if (!(value <= limit)) {
      fail(ErrorKind::FrameInconsistent, std::string(what) + " residual " + detail::format_double(value) +
                                             " exceeds " + detail::format_double(limit));
    }
  };
  check(inv.factor_consistency, tau, "C vs. sum of s_n phi_n chi_n^H");
  check(inv.biorthogonality, tau, "biorthonormality");
  check(inv.involution, tau, "C^2 = projector");
  check(inv.commutes_with_h, tau, "[C, H] on the kept span");
  check(inv.pt_commutation, tau, "[C, PT]");
  check(relative_norm(f.projector - f.kept_right * f.kept_left.adjoint(), f.projector.norm()), tau, "projector");

  const bool pc = detail::ordering_ok(inv, OrderConvention::PC, tau);
  const bool cp = detail::ordering_ok(inv, OrderConvention::CP, tau);
  if (!pc && !cp) {
    const double worst = std::max(inv.metric_min_eig_pc, inv.metric_min_eig_cp);
    fail(ErrorKind::MetricNotPositive,
         "no ordering gives a Hermitian positive metric (hermiticity PC " +
             detail::format_double(inv.eta_hermiticity_pc) + ", CP " + detail::format_double(inv.eta_hermiticity_cp) +
             "; smallest symmetrized-metric eigenvalue " + detail::format_double(worst) + ")");
  }
  const CMatrix eta_expected = f.order == OrderConvention::PC ? CMatrix(f.parity * f.c_operator)
                                                               : CMatrix(f.c_operator * f.parity);
  const CMatrix eta_inv_expected = f.order == OrderConvention::PC ? CMatrix(f.c_operator * f.parity)
                                                                   : CMatrix(f.parity * f.c_operator);
  check(relative_norm(f.eta - eta_expected, eta_expected.norm()), tau, "eta vs. recorded ordering");
  check(relative_norm(f.eta_inv - eta_inv_expected, eta_inv_expected.norm()), tau, "eta_inv vs. recorded ordering");
  if (!detail::ordering_ok(inv, f.order, tau)) {
    fail(ErrorKind::FrameInconsistent, "recorded ordering " + std::string(to_string(f.order)) +
                                           " does not give a Hermitian positive metric");
  }
  check(f.order == OrderConvention::PC ? inv.pseudo_hermiticity_pc : inv.pseudo_hermiticity_cp, tau,
        "pseudo-Hermiticity of H");
}

inline CPTFrame construct_frame(const CMatrix& H, const CMatrix& Par, const EigenSystem& E,
                                const SpectrumClassification& cls, const Tolerances& tol, double weight = 1.0,
                                bool exact = false) {
  tol.validate();
  require_square(H, "H");
  require_same_dim(H, Par);
  if (E.dim() != H.rows()) fail(ErrorKind::DimensionMismatch, "eigensystem does not belong to H");
  if (cls.phase == Phase::Broken) {
    std::string which;
    for (const Eigen::Index k : cls.candidates) {
      if (!cls.real[k]) {
        which = detail::describe(E.values(k));
        break;
      }
    }
    fail(ErrorKind::BrokenPhase, "kept-candidate eigenvalue " + which + " is not real");
  }
  if (cls.kept.empty()) fail(ErrorKind::BrokenPhase, "no certified real modes to keep");

  const EigenSystem R = refine_eigenpairs(H, E, cls.kept, tol);

  const Eigen::Index n = H.rows();
  const auto m = static_cast<Eigen::Index>(cls.kept.size());
  CPTFrame f;
  f.hamiltonian = H;
  f.parity = Par;
  f.weight = weight;
  f.exact = exact;
  f.kept_right.resize(n, m);
  f.kept_left.resize(n, m);
  f.kept_values.resize(m);
  f.signs.resize(m);

  for (Eigen::Index a = 0; a < m; ++a) {
    const Eigen::Index k = cls.kept[a];
    CVector phi = R.right.col(k);
    CVector chi = R.left.col(k);
    const double rp = detail::pt_phase_fix(Par, phi);
    const double rc = detail::pt_phase_fix(Par, chi);
    if (!(rp <= tol.discretization) || !(rc <= tol.discretization)) {
      fail(ErrorKind::PhaseFixFailure, "mode " + std::to_string(k) + " (" + detail::describe(R.values(k)) +
                                           ") is not PT-invariant up to a phase, residual " +
                                           detail::format_double(std::max(rp, rc)));
    }
    phi = (phi + Par * phi.conjugate()) / 2.0;
    chi = (chi + Par * chi.conjugate()) / 2.0;

    const Complex p = weight * (Par * phi.conjugate()).transpose() * phi;
    if (std::abs(p) < 1e-12 * weight * phi.squaredNorm()) {
      fail(ErrorKind::PhaseFixFailure, "PT-norm vanishes for mode " + std::to_string(k) + " (" +
                                           detail::describe(R.values(k)) + "): exceptional point");
    }
    f.signs[a] = p.real() > 0 ? 1 : -1;
    phi /= std::sqrt(std::abs(p));
    const Complex overlap = chi.dot(phi);
    if (std::abs(overlap) < 1e-12 * chi.norm() * phi.norm()) {
      fail(ErrorKind::DefectiveSpectrum, "left/right overlap vanishes for mode " + std::to_string(k));
    }
    chi /= std::conj(overlap);
    f.kept_right.col(a) = phi;
    f.kept_left.col(a) = chi;
    f.kept_values(a) = R.values(k);
  }

  f.c_operator = f.apply_c(CMatrix::Identity(n, n));
  f.projector = f.kept_right * f.kept_left.adjoint();
  f.invariants = measure_invariants(f);
  const bool pc_ok = detail::ordering_ok(f.invariants, OrderConvention::PC, tol.discretization);
  const bool cp_ok = detail::ordering_ok(f.invariants, OrderConvention::CP, tol.discretization);
  detail::set_order(f, !pc_ok && cp_ok ? OrderConvention::CP : OrderConvention::PC);
  verify_frame(f, tol);
  return f;
}

inline int default_modes(const HamiltonianModel& model) {
  return model.hamiltonian.grid ? 10 : static_cast<int>(model.hamiltonian.matrix.rows());
}

inline SpectrumClassification classify_model(const HamiltonianModel& model, const Tolerances& tol, int modes,
                                             EigenSystem& out) {
  out = eig(model.hamiltonian.matrix, tol);
  auto cls = classify_spectrum(out, tol, modes);
  if (cls.phase != Phase::Broken) out = biorthonormalize(std::move(out), tol, &cls.kept);
  return cls;
}

inline CPTFrame build_frame(const HamiltonianModel& model, const Tolerances& tol, std::optional<int> modes = {}) {
  EigenSystem E;
  const auto cls = classify_model(model, tol, modes.value_or(default_modes(model)), E);
  return construct_frame(model.hamiltonian.matrix, model.parity.matrix, E, cls, tol, model.weight(),
                         !model.hamiltonian.grid.has_value());
}

/// The trivial frame on C^dim: H = Par = C = eta = I.
inline CPTFrame identity_frame(Eigen::Index dim) {
  if (dim <= 0) fail(ErrorKind::InvalidArgument, "dimension must be positive");
  CPTFrame f;
  const CMatrix I = CMatrix::Identity(dim, dim);
  f.hamiltonian = I;
  f.parity = I;
  f.c_operator = I;
  f.eta = I;
  f.eta_inv = I;
  f.projector = I;
  f.kept_right = I;
  f.kept_left = I;
  f.kept_values = CVector::Ones(dim);
  f.signs.assign(static_cast<std::size_t>(dim), 1);
  f.exact = true;
  f.invariants = measure_invariants(f);
  return f;
}

inline void require_vector(const CPTFrame& f, const CVector& v) {
  if (v.size() != f.dim()) {
    fail(ErrorKind::DimensionMismatch,
         "vector of length " + std::to_string(v.size()) + " against frame of dimension " + std::to_string(f.dim()));
  }
}

/// Δx·u†·eta·v.
inline Complex inner_eta(const CPTFrame& f, const CVector& u, const CVector& v) {
  require_vector(f, u);
  require_vector(f, v);
  return f.weight * u.dot(f.apply_eta(v).col(0));
}

/// Δx·Σⱼ (C·Par·conj(u))ⱼ·vⱼ.
inline Complex inner_cpt(const CPTFrame& f, const CVector& u, const CVector& v) {
  require_vector(f, u);
  require_vector(f, v);
  const CVector cpt_u = f.apply_c(f.parity * u.conjugate()).col(0);
  return f.weight * cpt_u.transpose() * v;
}

}  // namespace ptqm
