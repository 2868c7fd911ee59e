#pragma once

// Real-line lattices, the canonical lattice operators, and the catalog of
// PT-symmetric Hamiltonians. Time reversal is never stored as a matrix: it is
// componentwise conjugation on the symmetric node set.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ptqm/errors.hpp"
#include "ptqm/linop.hpp"
#include "ptqm/potential.hpp"

namespace ptqm {

/// Symmetric Dirichlet lattice on (−L, L); endpoints are excluded.
struct Grid {
  int n_points = 0;
  double half_width = 0;
  double spacing = 0;
  std::vector<double> nodes;

  bool operator==(const Grid&) const = default;
};

inline Grid make_grid(int n, double half_width) {
  if (n < 3) fail(ErrorKind::BadGrid, "need at least 3 points, got " + std::to_string(n));
  if (!(half_width > 0) || !std::isfinite(half_width)) {
    fail(ErrorKind::BadGrid, "half width must be positive and finite");
  }
  Grid g;
  g.n_points = n;
  g.half_width = half_width;
  g.spacing = 2.0 * half_width / (n + 1);
  g.nodes.assign(static_cast<std::size_t>(n), 0.0);
  // Fill the left half and mirror it so x_j = −x_{N−1−j} holds bit-exactly.
  for (int j = 0; j < n / 2; ++j) {
    const double x = -half_width + (j + 1) * g.spacing;
    g.nodes[j] = x;
    g.nodes[n - 1 - j] = -x;
  }
  return g;
}

struct DiscretizedOperator {
  CMatrix matrix;
  std::optional<Grid> grid;
  std::string label;
};

struct LatticeOperators {
  DiscretizedOperator position;
  DiscretizedOperator momentum;
  DiscretizedOperator kinetic;
  DiscretizedOperator parity;
};

inline CMatrix reversal_permutation(Eigen::Index n) {
  CMatrix P = CMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) P(j, n - 1 - j) = 1.0;
  return P;
}

inline LatticeOperators build_operators(const Grid& grid) {
  const Eigen::Index n = grid.n_points;
  const double dx = grid.spacing;

  CMatrix X = CMatrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) X(j, j) = grid.nodes[j];

  // −i·(central difference); the stencil is real antisymmetric.
  CMatrix P = CMatrix::Zero(n, n);
  const Complex hop(0.0, -1.0 / (2.0 * dx));
  for (Eigen::Index j = 0; j + 1 < n; ++j) {
    P(j, j + 1) = hop;
    P(j + 1, j) = -hop;
  }

  CMatrix K = CMatrix::Zero(n, n);
  const double inv_dx2 = 1.0 / (dx * dx);
  for (Eigen::Index j = 0; j < n; ++j) {
    K(j, j) = 2.0 * inv_dx2;
    if (j + 1 < n) {
      K(j, j + 1) = -inv_dx2;
      K(j + 1, j) = -inv_dx2;
    }
  }

  return {
      {X, grid, "x"},
      {P, grid, "p"},
      {K, grid, "p^2"},
      {reversal_permutation(n), grid, "P"},
  };
}

namespace model {

struct Matrix2x2 {
  double r = 1;
  double s = 1;
  double theta = 0;
};
struct EpsilonFamily {
  double epsilon = 0;
};
struct IXCubed {};
struct HermitianOscillator {};
/// H = (p + ix)² + x², expanded as p² + i(xp + px).
struct ShiftedSquare {};
struct PotentialExpr {
  std::string source;
};

}  // namespace model

using ModelSpec = std::variant<model::Matrix2x2, model::EpsilonFamily, model::IXCubed, model::HermitianOscillator,
                               model::ShiftedSquare, PolyPotential, model::PotentialExpr>;

inline std::string model_label(const ModelSpec& spec) {
  struct Visitor {
    std::string operator()(const model::Matrix2x2&) const { return "matrix2x2"; }
    std::string operator()(const model::EpsilonFamily&) const { return "epsilon_family"; }
    std::string operator()(const model::IXCubed&) const { return "ix_cubed"; }
    std::string operator()(const model::HermitianOscillator&) const { return "hermitian_oscillator"; }
    std::string operator()(const model::ShiftedSquare&) const { return "shifted_square"; }
    std::string operator()(const PolyPotential&) const { return "poly_potential"; }
    std::string operator()(const model::PotentialExpr&) const { return "potential_expr"; }
  };
  return std::visit(Visitor{}, spec);
}

inline bool is_lattice_model(const ModelSpec& spec) { return !std::holds_alternative<model::Matrix2x2>(spec); }

inline void validate_epsilon(double eps) {
  if (!(eps > -1.0 && eps < 2.0)) {
    fail(ErrorKind::BranchDomain, "epsilon must lie strictly inside (-1, 2), got " + detail::format_double(eps));
  }
}

inline void validate_model(const ModelSpec& spec) {
  if (const auto* m = std::get_if<model::Matrix2x2>(&spec)) {
    if (m->s == 0.0) fail(ErrorKind::BadModel, "matrix2x2 requires s != 0");
    if (!std::isfinite(m->r) || !std::isfinite(m->s) || !std::isfinite(m->theta)) {
      fail(ErrorKind::BadModel, "matrix2x2 parameters must be finite");
    }
  } else if (const auto* e = std::get_if<model::EpsilonFamily>(&spec)) {
    validate_epsilon(e->epsilon);
  }
}

/// x²(ix)^ε on the real line with the branch exp(ε·log|x| + iε(π/2)·sign x).
inline Complex epsilon_potential(double eps, double x) {
  validate_epsilon(eps);
  if (x == 0.0) return 0.0;
  const double magnitude = std::pow(std::abs(x), 2.0 + eps);
  const double phase = eps * (std::numbers::pi / 2) * (x > 0 ? 1.0 : -1.0);
  return std::polar(magnitude, phase);
}

/// Diagonal potential matrix for the potential-bearing variants.
inline CMatrix potential_values(const ModelSpec& spec, const Grid& grid) {
  validate_model(spec);
  const Eigen::Index n = grid.n_points;
  CMatrix V = CMatrix::Zero(n, n);
  auto fill = [&](auto&& f) {
    for (Eigen::Index j = 0; j < n; ++j) V(j, j) = f(grid.nodes[j]);
  };
  if (const auto* e = std::get_if<model::EpsilonFamily>(&spec)) {
    fill([&](double x) { return epsilon_potential(e->epsilon, x); });
  } else if (std::holds_alternative<model::IXCubed>(spec)) {
    fill([](double x) { return epsilon_potential(1.0, x); });
  } else if (std::holds_alternative<model::HermitianOscillator>(spec)) {
    fill([](double x) { return epsilon_potential(0.0, x); });
  } else if (const auto* p = std::get_if<PolyPotential>(&spec)) {
    fill([&](double x) { return (*p)(x); });
  } else if (const auto* src = std::get_if<model::PotentialExpr>(&spec)) {
    const PolyPotential poly = parse_potential(src->source);
    fill([&](double x) { return poly(x); });
  } else {
    fail(ErrorKind::BadModel, model_label(spec) + " has no potential");
  }
  return V;
}

struct HamiltonianModel {
  DiscretizedOperator hamiltonian;
  DiscretizedOperator parity;

  /// Quadrature weight of the discrete L² product (1 for matrix models).
  double weight() const { return hamiltonian.grid ? hamiltonian.grid->spacing : 1.0; }
};

inline HamiltonianModel build_hamiltonian(const ModelSpec& spec, const std::optional<Grid>& grid) {
  validate_model(spec);
  if (const auto* m = std::get_if<model::Matrix2x2>(&spec)) {
    CMatrix H(2, 2);
    H << m->r * std::exp(Complex(0.0, m->theta)), m->s, m->s, m->r * std::exp(Complex(0.0, -m->theta));
    return {{H, std::nullopt, "H"}, {reversal_permutation(2), std::nullopt, "P"}};
  }
  if (!grid) fail(ErrorKind::BadGrid, model_label(spec) + " needs a lattice");
  const LatticeOperators ops = build_operators(*grid);
  CMatrix H;
  if (std::holds_alternative<model::ShiftedSquare>(spec)) {
    const CMatrix& X = ops.position.matrix;
    const CMatrix& P = ops.momentum.matrix;
    H = ops.kinetic.matrix + Complex(0.0, 1.0) * (X * P + P * X);
  } else {
    H = ops.kinetic.matrix + potential_values(spec, *grid);
  }
  return {{H, grid, "H"}, ops.parity};
}

}  // namespace ptqm
