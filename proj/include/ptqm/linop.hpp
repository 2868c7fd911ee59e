#pragma once

// Dense complex operator algebra and the eigendecomposition machinery the
// rest of the library builds on. Operators are plain Eigen::MatrixXcd values;
// all functions are pure.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "ptqm/errors.hpp"

namespace ptqm {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

/// Relative thresholds used throughout the library.
struct Tolerances {
  double residual = 1e-10;        ///< eigenpair residual, relative to ‖A‖_F
  double algebraic = 1e-9;        ///< identities on exactly constructed objects
  double reality = 1e-8;          ///< |Im λ| relative to the spectral radius
  double discretization = 1e-6;   ///< lattice-level claims

  void validate() const {
    if (!(residual > 0 && algebraic > 0 && reality > 0 && discretization > 0)) {
      fail(ErrorKind::InvalidArgument, "tolerances must be strictly positive");
    }
    if (!(algebraic < discretization)) {
      fail(ErrorKind::InvalidArgument, "algebraic tolerance must be below the discretization tolerance");
    }
  }
};

inline bool all_finite(const CMatrix& A) {
  for (Eigen::Index j = 0; j < A.cols(); ++j) {
    for (Eigen::Index i = 0; i < A.rows(); ++i) {
      if (!std::isfinite(A(i, j).real()) || !std::isfinite(A(i, j).imag())) return false;
    }
  }
  return true;
}

inline void require_square(const CMatrix& A, const char* what = "operator") {
  if (A.rows() != A.cols() || A.rows() == 0) {
    fail(ErrorKind::DimensionMismatch, std::string(what) + " must be a non-empty square matrix, got " +
                                           std::to_string(A.rows()) + "x" + std::to_string(A.cols()));
  }
}

inline void require_finite(const CMatrix& A, const char* what = "operator") {
  if (!all_finite(A)) fail(ErrorKind::NonFinite, std::string(what) + " has NaN or Inf entries");
}

inline void require_same_dim(const CMatrix& A, const CMatrix& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) {
    fail(ErrorKind::DimensionMismatch, std::to_string(A.rows()) + "x" + std::to_string(A.cols()) + " vs " +
                                           std::to_string(B.rows()) + "x" + std::to_string(B.cols()));
  }
}

inline CMatrix transpose(const CMatrix& A) { return A.transpose(); }

/// Usual adjoint: conjugate transpose.
inline CMatrix adjoint(const CMatrix& A) { return A.adjoint(); }

inline CMatrix conjugate(const CMatrix& A) { return A.conjugate(); }

/// ‖AB − BA‖_F / max(1, ‖A‖_F·‖B‖_F).
inline double commutator_norm(const CMatrix& A, const CMatrix& B) {
  require_square(A);
  require_same_dim(A, B);
  const double scale = std::max(1.0, A.norm() * B.norm());
  return (A * B - B * A).norm() / scale;
}

/// ‖diff‖_F / scale, with a zero scale treated as one.
inline double relative_norm(const CMatrix& diff, double scale) {
  return diff.norm() / (scale > 0 ? scale : 1.0);
}

struct EigenSystem {
  CVector values;        ///< right eigenvalues, sorted by (Re, Im)
  CVector left_values;   ///< matched eigenvalues of A†, ≈ conj(values)
  CMatrix right;         ///< φ_k as columns
  CMatrix left;          ///< χ_k as columns
  RVector residual_right;
  RVector residual_left;
  std::vector<int> cluster;  ///< modes sharing an id are numerically degenerate
  double operator_norm = 0;
  double spectral_radius = 0;
  bool biortho = false;
  double cond_estimate = 0;

  Eigen::Index dim() const { return values.size(); }
};

namespace detail {

inline bool lex_less(const Complex& a, const Complex& b) {
  if (a.real() != b.real()) return a.real() < b.real();
  return a.imag() < b.imag();
}

/// A·x − λ·x accumulated in extended precision.
inline CVector extended_residual(const CMatrix& A, Complex lambda, const CVector& x) {
  using LComplex = std::complex<long double>;
  const Eigen::Index n = A.rows();
  std::vector<LComplex> acc(static_cast<std::size_t>(n));
  const LComplex l(lambda.real(), lambda.imag());
  for (Eigen::Index i = 0; i < n; ++i) {
    acc[i] = -l * LComplex(x(i).real(), x(i).imag());
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const LComplex xj(x(j).real(), x(j).imag());
    for (Eigen::Index i = 0; i < n; ++i) {
      acc[i] += LComplex(A(i, j).real(), A(i, j).imag()) * xj;
    }
  }
  CVector r(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    r(i) = Complex(static_cast<double>(acc[i].real()), static_cast<double>(acc[i].imag()));
  }
  return r;
}

/// Bordered Newton iteration for one eigenpair. The correction solve runs in
/// double precision; only the residual is accumulated in long double.
inline void newton_refine(const CMatrix& A, Complex& lambda, CVector& x, int steps = 3) {
  const Eigen::Index n = A.rows();
  x.normalize();
  double current = extended_residual(A, lambda, x).norm();
  for (int step = 0; step < steps && current > 0; ++step) {
    CMatrix bordered = CMatrix::Zero(n + 1, n + 1);
    bordered.topLeftCorner(n, n) = A;
    bordered.topLeftCorner(n, n).diagonal().array() -= lambda;
    bordered.topRightCorner(n, 1) = -x;
    bordered.bottomLeftCorner(1, n) = x.adjoint();
    CVector rhs = CVector::Zero(n + 1);
    rhs.head(n) = -extended_residual(A, lambda, x);
    const CVector sol = bordered.partialPivLu().solve(rhs);
    if (!sol.allFinite()) break;
    CVector next = x + sol.head(n);
    next.normalize();
    const Complex next_lambda = lambda + sol(n);
    const double next_res = extended_residual(A, next_lambda, next).norm();
    // Once the residual sits at rounding level it stops decreasing while the
    // forward error keeps improving, so only a clear divergence is rejected.
    if (!(next_res <= 10.0 * current + 1e-300)) break;
    x = next;
    lambda = next_lambda;
    current = next_res;
  }
}

/// Shifted inverse iteration from `start`; returns the iterate with the
/// smallest residual (on strongly non-normal matrices later steps can drift).
inline CVector inverse_iteration(const CMatrix& A, Complex shift, const CVector& start, int steps = 3) {
  CMatrix M = A;
  M.diagonal().array() -= shift;
  Eigen::PartialPivLU<CMatrix> lu(M);
  CVector v = start.normalized();
  CVector best = CVector::Constant(A.rows(), std::numeric_limits<double>::quiet_NaN());
  double best_res = std::numeric_limits<double>::infinity();
  for (int step = 0; step < steps; ++step) {
    v = lu.solve(v);
    if (!v.allFinite() || v.norm() == 0) break;
    v.normalize();
    const double res = (M * v).norm();
    if (res < best_res) {
      best_res = res;
      best = v;
    }
  }
  return best;
}

/// Single-linkage clusters of values closer than `threshold`.
inline std::vector<int> cluster_values(const CVector& values, double threshold) {
  const auto n = static_cast<int>(values.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (std::abs(values(i) - values(j)) <= threshold) {
        const int a = find(i), b = find(j);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
      }
    }
  }
  std::vector<int> ids(n);
  std::vector<int> relabel(n, -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    const int root = find(i);
    if (relabel[root] < 0) relabel[root] = next++;
    ids[i] = relabel[root];
  }
  return ids;
}

inline void compute_residuals(const CMatrix& A, EigenSystem& E) {
  const Eigen::Index n = E.dim();
  const CMatrix Ah = A.adjoint();
  E.residual_right.resize(n);
  E.residual_left.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const CVector phi = E.right.col(k).normalized();
    const CVector chi = E.left.col(k).normalized();
    E.residual_right(k) = (A * phi - E.values(k) * phi).norm();
    E.residual_left(k) = (Ah * chi - E.left_values(k) * chi).norm();
  }
}

}  // namespace detail

/// All eigenpairs of A, with left vectors from an independent solve of A†.
inline EigenSystem eig(const CMatrix& A, const Tolerances& tol = {}) {
  require_square(A);
  require_finite(A);
  const Eigen::Index n = A.rows();

  Eigen::ComplexEigenSolver<CMatrix> right_solver(A, true);
  if (right_solver.info() != Eigen::Success) fail(ErrorKind::EigFailure, "Schur iteration did not converge for A");
  const CMatrix Ah = A.adjoint();
  Eigen::ComplexEigenSolver<CMatrix> left_solver(Ah, true);
  if (left_solver.info() != Eigen::Success) fail(ErrorKind::EigFailure, "Schur iteration did not converge for A^H");

  const CVector& raw_values = right_solver.eigenvalues();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return detail::lex_less(raw_values(a), raw_values(b));
  });

  EigenSystem E;
  E.values.resize(n);
  E.left_values.resize(n);
  E.right.resize(n, n);
  E.left.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    E.values(k) = raw_values(order[k]);
    E.right.col(k) = right_solver.eigenvectors().col(order[k]).normalized();
  }
  E.operator_norm = A.norm();
  E.spectral_radius = n > 0 ? E.values.cwiseAbs().maxCoeff() : 0.0;

  const double scale = E.spectral_radius > 0 ? E.spectral_radius : E.operator_norm;
  const double threshold = 10.0 * tol.residual * scale;
  E.cluster = detail::cluster_values(E.values, threshold);

  // Nearest-neighbour pairing of left modes (via conj of the A† eigenvalues).
  const CVector mu = left_solver.eigenvalues().conjugate();
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index best = -1, second = -1;
    double d_best = std::numeric_limits<double>::infinity();
    double d_second = d_best;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (used[j]) continue;
      const double d = std::abs(E.values(k) - mu(j));
      if (d < d_best) {
        second = best;
        d_second = d_best;
        best = j;
        d_best = d;
      } else if (d < d_second) {
        second = j;
        d_second = d;
      }
    }
    if (second >= 0 && d_second - d_best <= threshold && std::abs(mu(best) - mu(second)) > threshold) {
      // Eigenvalues alone do not decide; try the left/right overlap, then
      // inverse iteration on A† at conj(λ).
      const CVector phi = E.right.col(k);
      const double o_best = std::abs(left_solver.eigenvectors().col(best).normalized().dot(phi));
      const double o_second = std::abs(left_solver.eigenvectors().col(second).normalized().dot(phi));
      if (o_second > 2.0 * o_best) {
        std::swap(best, second);
      } else if (!(o_best > 2.0 * o_second)) {
        const Complex target = std::conj(E.values(k));
        const CVector chi = detail::inverse_iteration(Ah, target, phi);
        if (!chi.allFinite() || (Ah * chi - target * chi).norm() > tol.residual * E.operator_norm) {
          fail(ErrorKind::AmbiguousPairing, "left eigenvalues " + std::to_string(best) + " and " +
                                                std::to_string(second) + " are equally close to mode " +
                                                std::to_string(k));
        }
        E.left_values(k) = target;
        E.left.col(k) = chi;
        continue;
      }
    }
    used[best] = true;
    E.left_values(k) = left_solver.eigenvalues()(best);
    E.left.col(k) = left_solver.eigenvectors().col(best).normalized();
  }

  detail::compute_residuals(A, E);
  const double bound = tol.residual * E.operator_norm;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (E.residual_right(k) > bound || E.residual_left(k) > bound) {
      fail(ErrorKind::EigFailure, "eigenpair " + std::to_string(k) + " residual " +
                                      std::to_string(std::max(E.residual_right(k), E.residual_left(k))) +
                                      " exceeds " + std::to_string(bound));
    }
  }
  return E;
}

/// Scale the left vectors so that χ_m†φ_n = δ_mn. Degenerate clusters are
/// handled blockwise by inverting their overlap matrix. With `modes`, only the
/// clusters touching those modes are processed and the biortho flag is left
/// as it was; cond_estimate then covers the selected columns.
inline EigenSystem biorthonormalize(EigenSystem E, const Tolerances& /*tol*/ = {},
                                    const std::vector<Eigen::Index>* modes = nullptr) {
  const Eigen::Index n = E.dim();
  const int clusters = n > 0 ? *std::max_element(E.cluster.begin(), E.cluster.end()) + 1 : 0;
  std::vector<bool> wanted(static_cast<std::size_t>(clusters), modes == nullptr);
  if (modes) {
    for (const Eigen::Index k : *modes) {
      if (k < 0 || k >= n) fail(ErrorKind::InvalidArgument, "mode index out of range");
      wanted[E.cluster[k]] = true;
    }
  }
  for (int c = 0; c < clusters; ++c) {
    if (!wanted[c]) continue;
    std::vector<Eigen::Index> idx;
    for (Eigen::Index k = 0; k < n; ++k) {
      if (E.cluster[k] == c) idx.push_back(k);
    }
    const auto size = static_cast<Eigen::Index>(idx.size());
    CMatrix Phi(n, size), Chi(n, size);
    for (Eigen::Index a = 0; a < size; ++a) {
      Phi.col(a) = E.right.col(idx[a]);
      Chi.col(a) = E.left.col(idx[a]);
    }
    const CMatrix overlap = Chi.adjoint() * Phi;
    CMatrix normalized = overlap;
    for (Eigen::Index a = 0; a < size; ++a) {
      for (Eigen::Index b = 0; b < size; ++b) {
        normalized(a, b) /= Chi.col(a).norm() * Phi.col(b).norm();
      }
    }
    const RVector sv = Eigen::JacobiSVD<CMatrix>(normalized).singularValues();
    if (sv(sv.size() - 1) < 1e-12) {
      fail(ErrorKind::DefectiveSpectrum, "left/right overlap vanishes for mode " + std::to_string(idx.front()) +
                                             " (eigenvalue " + std::to_string(E.values(idx.front()).real()) +
                                             (E.values(idx.front()).imag() < 0 ? "" : "+") +
                                             std::to_string(E.values(idx.front()).imag()) + "i)");
    }
    const CMatrix scaled = Chi * overlap.inverse().adjoint();
    for (Eigen::Index a = 0; a < size; ++a) E.left.col(idx[a]) = scaled.col(a);
  }

  CMatrix unit;
  if (modes) {
    unit.resize(n, static_cast<Eigen::Index>(modes->size()));
    for (std::size_t a = 0; a < modes->size(); ++a) unit.col(static_cast<Eigen::Index>(a)) = E.right.col((*modes)[a]);
  } else {
    unit = E.right;
  }
  for (Eigen::Index k = 0; k < unit.cols(); ++k) unit.col(k).normalize();
  const RVector sv = Eigen::BDCSVD<CMatrix>(unit).singularValues();
  const double smallest = sv.size() > 0 ? sv(sv.size() - 1) : 0.0;
  E.cond_estimate = smallest > 0 ? sv(0) / smallest : std::numeric_limits<double>::infinity();
  if (!modes) E.biortho = true;
  return E;
}

/// Newton-refine the selected eigenpairs of A (right and left) and restore
/// biorthonormality on them. Used on the few modes that carry downstream identities.
inline EigenSystem refine_eigenpairs(const CMatrix& A, EigenSystem E, const std::vector<Eigen::Index>& modes,
                                     const Tolerances& tol = {}) {
  require_square(A);
  if (A.rows() != E.dim()) fail(ErrorKind::DimensionMismatch, "eigensystem does not belong to this operator");
  const CMatrix Ah = A.adjoint();
  for (const Eigen::Index k : modes) {
    Complex lambda = E.values(k);
    CVector phi = E.right.col(k);
    detail::newton_refine(A, lambda, phi);
    Complex mu = E.left_values(k);
    CVector chi = E.left.col(k);
    detail::newton_refine(Ah, mu, chi);
    E.values(k) = lambda;
    E.left_values(k) = mu;
    E.right.col(k) = phi;
    E.left.col(k) = chi;
  }
  detail::compute_residuals(A, E);
  return biorthonormalize(std::move(E), tol, &modes);
}

/// Hermitian within τ_alg and strictly positive Hermitian part.
inline bool is_positive_definite(const CMatrix& M, const Tolerances& tol = {}) {
  if (M.rows() != M.cols() || M.rows() == 0 || !all_finite(M)) return false;
  const double scale = M.norm();
  if ((M - M.adjoint()).norm() > tol.algebraic * scale) return false;
  const CMatrix sym = (M + M.adjoint()) / 2.0;
  const RVector ev = Eigen::SelfAdjointEigenSolver<CMatrix>(sym, Eigen::EigenvaluesOnly).eigenvalues();
  return ev.minCoeff() > tol.algebraic * scale;
}

}  // namespace ptqm
