#include <catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "ptqm/metric.hpp"

using namespace ptqm;
using Catch::Matchers::WithinAbs;

namespace {

const double s3 = std::sqrt(3.0);
const Complex I1{0.0, 1.0};

std::vector<double> kept_real(const HamiltonianModel& m, int modes) {
  EigenSystem E;
  const auto cls = classify_model(m, {}, modes, E);
  std::vector<double> out;
  for (const auto k : cls.kept) out.push_back(E.values(k).real());
  return out;
}

// Lowest eigenvalues extrapolated to Δx → 0 from two lattices (error ∝ Δx²).
std::vector<double> richardson(const std::vector<double>& a, double ha, const std::vector<double>& b, double hb) {
  std::vector<double> out;
  for (std::size_t k = 0; k < a.size(); ++k) out.push_back((ha * ha * b[k] - hb * hb * a[k]) / (ha * ha - hb * hb));
  return out;
}

CVector random_kept(const CPTFrame& f, detail::GaussianStream& g) {
  CVector a(f.modes_kept());
  for (Eigen::Index k = 0; k < a.size(); ++k) a(k) = g.complex();
  return f.kept_right * a;
}

void rebuild_c(CPTFrame& f) {
  f.c_operator = f.kept_right * f.sign_vector().asDiagonal() * f.kept_left.adjoint();
  detail::set_order(f, f.order);
  f.invariants = measure_invariants(f);
}

}  // namespace

TEST_CASE("classify 2x2 spectra", "[metric]") {
  const Tolerances tol;
  EigenSystem E;
  const auto cls = classify_model(fixtures::two_level_unbroken(), tol, 2, E);
  CHECK(cls.phase == Phase::Unbroken);
  REQUIRE(cls.kept.size() == 2);
  CHECK(std::abs(E.values(cls.kept[0])) < 1e-12);
  CHECK(std::abs(E.values(cls.kept[1]) - s3) < 1e-12);

  const auto broken = classify_model(fixtures::two_level_broken(), tol, 2, E);
  CHECK(broken.phase == Phase::Broken);
  CHECK_THAT(broken.max_candidate_imag, WithinAbs(s3, 1e-12));
  CHECK(broken.kept.empty());
}

TEST_CASE("classify rejects a non-positive mode count", "[metric]") {
  const auto E = eig(fixtures::two_level_unbroken().hamiltonian.matrix);
  CHECK(fixtures::error_kind([&] { classify_spectrum(E, {}, 0); }) == "InvalidArgument");
}

TEST_CASE("oscillator spectrum against the finite-difference oracle", "[metric]") {
  const Grid g = make_grid(201, 8);
  const auto lam = kept_real(fixtures::epsilon_model(0.0), 5);
  REQUIRE(lam.size() == 5);
  // 3-point stencil: λₙ ≈ (2n+1) − (Δx²/12)·⟨p⁴⟩ₙ with ⟨p⁴⟩ₙ = (3/4)(2n² + 2n + 1).
  const double h2 = g.spacing * g.spacing;
  for (int n = 0; n < 5; ++n) {
    const double oracle = (2 * n + 1) - h2 / 12 * 0.75 * (2 * n * n + 2 * n + 1);
    INFO("n = " << n);
    CHECK(std::abs(lam[n] - oracle) / (2 * n + 1) < 2e-5);
  }
  for (int n = 0; n < 2; ++n) CHECK(std::abs(lam[n] - (2 * n + 1)) / (2 * n + 1) < 1e-3);
}

TEST_CASE("oscillator spectrum converges under refinement", "[metric]") {
  const Grid coarse = make_grid(201, 8), fine = make_grid(401, 8);
  const auto a = kept_real(fixtures::epsilon_model(0.0), 5);
  const auto b = kept_real(build_hamiltonian(model::HermitianOscillator{}, fine), 5);
  REQUIRE(b.size() == 5);
  const auto x = richardson(a, coarse.spacing, b, fine.spacing);
  for (int n = 0; n < 5; ++n) {
    const double odd = 2 * n + 1;
    INFO("n = " << n);
    CHECK(std::abs(b[n] - odd) < std::abs(a[n] - odd) / 3);
    CHECK(std::abs(x[n] - odd) / odd < 1e-5);
  }
}

TEST_CASE("2x2 frame matches the closed form", "[metric]") {
  const auto& f = fixtures::two_level_frame();
  CMatrix C(2, 2);
  C << I1 / s3, 2 / s3, 2 / s3, -I1 / s3;
  CHECK((f.c_operator - C).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((f.c_operator * f.c_operator - CMatrix::Identity(2, 2)).norm() < 1e-12);
  const CMatrix& H = f.hamiltonian;
  CHECK((f.c_operator * H - H * f.c_operator).norm() < 1e-12);
  CHECK(f.order == OrderConvention::PC);
  CHECK((f.eta - f.parity * C).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((f.eta - f.eta.adjoint()).norm() < 1e-12);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(f.eta);
  CHECK_THAT(es.eigenvalues()(0), WithinAbs(1 / s3, 1e-10));
  CHECK_THAT(es.eigenvalues()(1), WithinAbs(s3, 1e-10));
  CHECK(is_positive_definite(f.eta));
  CHECK((f.eta * f.eta_inv - CMatrix::Identity(2, 2)).norm() < 1e-12);
  CHECK(f.modes_kept() == 2);
  CHECK(f.exact);
}

TEST_CASE("frame invariants on lattice frames", "[metric]") {
  for (double eps : {0.0, 0.5, 1.0}) {
    const auto& f = fixtures::epsilon_frame(eps);
    const auto& inv = f.invariants;
    INFO("epsilon = " << eps);
    CHECK(f.modes_kept() == 10);
    CHECK(inv.involution <= 1e-6);
    CHECK(inv.commutes_with_h <= 1e-6);
    CHECK(inv.pt_commutation <= 1e-6);
    CHECK(inv.biorthogonality <= 1e-6);
    CHECK(inv.factor_consistency <= 1e-6);
    CHECK(inv.eta_hermiticity_pc <= 1e-6);
    CHECK(inv.metric_min_eig_pc > 0);
    CHECK(inv.pseudo_hermiticity_pc <= 1e-6);
    CHECK(f.weight == make_grid(201, 8).spacing);
  }
}

TEST_CASE("oscillator frame collapses onto parity", "[metric]") {
  const auto& f = fixtures::epsilon_frame(0.0);
  const Grid g = make_grid(201, 8);
  const CMatrix& Par = f.parity;
  const CMatrix& Pi = f.projector;
  CHECK((f.c_operator - Par * Pi).norm() <= 1e-6 * Par.norm());
  CHECK((f.eta - Pi).norm() <= 1e-6);
  for (std::size_t n = 0; n < f.signs.size(); ++n) CHECK(f.signs[n] == (n % 2 == 0 ? 1 : -1));

  // Independent oracle: real symmetric solve, C = Σ (−1)ⁿ φₙφₙᵀ Δx.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fixtures::epsilon_model(0.0).hamiltonian.matrix.real());
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(201, 201);
  for (int n = 0; n < 10; ++n) {
    const Eigen::VectorXd phi = es.eigenvectors().col(n) / std::sqrt(g.spacing);
    C += (n % 2 == 0 ? 1.0 : -1.0) * g.spacing * phi * phi.transpose();
  }
  CHECK((f.c_operator - C.cast<Complex>()).norm() <= 1e-6 * Par.norm());
}

TEST_CASE("broken phase refuses a frame", "[metric]") {
  CHECK(fixtures::error_kind([] { build_frame(fixtures::two_level_broken(), {}); }) == "BrokenPhase");
}

TEST_CASE("shifted square has no positive metric", "[metric]") {
  const auto m = build_hamiltonian(model::ShiftedSquare{}, make_grid(301, 10));
  CHECK(fixtures::error_kind([&] { build_frame(m, {}); }) == "MetricNotPositive");
}

TEST_CASE("inner_eta", "[metric]") {
  const auto id = identity_frame(3);
  CVector u(3), v(3);
  u << 1.0, I1, 2.0;
  v << 0.5, 1.0, -I1;
  CHECK(std::abs(inner_eta(id, u, v) - u.dot(v)) < 1e-15);

  const auto& f = fixtures::two_level_frame();
  CVector e0 = CVector::Zero(2), e1 = CVector::Zero(2);
  e0(0) = 1;
  e1(1) = 1;
  CHECK(std::abs(inner_eta(f, e0, e1) - Complex(0, -1 / s3)) < 1e-10);
  CHECK(fixtures::error_kind([&] { inner_eta(f, e0, u); }) == "DimensionMismatch");
  CHECK(fixtures::error_kind([&] { inner_cpt(f, u, e1); }) == "DimensionMismatch");
}

TEST_CASE("inner_eta is positive and Hermitian on the kept span", "[metric]") {
  detail::GaussianStream g(11);
  for (const CPTFrame* f : {&fixtures::two_level_frame(), &fixtures::epsilon_frame(1.0)}) {
    for (int trial = 0; trial < 100; ++trial) {
      const CVector u = random_kept(*f, g), v = random_kept(*f, g);
      const Complex uu = inner_eta(*f, u, u);
      REQUIRE(uu.real() > 0);
      REQUIRE(std::abs(uu.imag()) <= 1e-8 * uu.real());
      const double scale = std::sqrt(uu.real() * inner_eta(*f, v, v).real());
      REQUIRE(std::abs(inner_eta(*f, u, v) - std::conj(inner_eta(*f, v, u))) <= 1e-8 * scale);
    }
  }
}

TEST_CASE("inner_cpt coincides with inner_eta", "[metric]") {
  detail::GaussianStream g(5);
  for (const CPTFrame* f : {&fixtures::two_level_frame(), &fixtures::epsilon_frame(0.0), &fixtures::epsilon_frame(0.5),
                            &fixtures::epsilon_frame(1.0)}) {
    for (int trial = 0; trial < 100; ++trial) {
      const CVector u = random_kept(*f, g), v = random_kept(*f, g);
      REQUIRE(std::abs(inner_cpt(*f, u, v) - inner_eta(*f, u, v)) <= 1e-6 * u.norm() * v.norm());
    }
  }
}

TEST_CASE("inner_cpt norm of a kept mode is positive", "[metric]") {
  const auto& f = fixtures::two_level_frame();
  const CVector phi0 = f.kept_right.col(0);
  const Complex n = inner_cpt(f, phi0, phi0);
  CHECK(n.real() > 0);
  CHECK(std::abs(n.imag()) < 1e-12);
  CHECK(std::abs(n - inner_eta(f, phi0, phi0)) < 1e-12);
}

TEST_CASE("inner_cpt on point vectors when C is parity", "[metric]") {
  // Free particle on 5 nodes keeping every mode: C = Par, so C·Par = I.
  const Grid g = make_grid(5, 3);
  const auto f = build_frame(build_hamiltonian(PolyPotential{}, g), {}, 5);
  REQUIRE((f.c_operator - f.parity).norm() < 1e-10);
  for (int j = 0; j < 5; ++j) {
    for (int k = 0; k < 5; ++k) {
      CVector u = CVector::Zero(5), v = CVector::Zero(5);
      u(j) = Complex(0.3, 0.7);
      v(k) = Complex(-1.1, 0.2);
      const Complex expected = j == k ? g.spacing * std::conj(u(j)) * v(k) : Complex(0.0);
      REQUIRE(std::abs(inner_cpt(f, u, v) - expected) < 1e-10);
    }
  }
}

TEST_CASE("kept modes are orthogonal in the metric", "[metric]") {
  for (const CPTFrame* f : {&fixtures::two_level_frame(), &fixtures::epsilon_frame(0.5), &fixtures::epsilon_frame(1.0)}) {
    const CMatrix G = f->metric_gram();
    for (Eigen::Index m = 0; m < G.rows(); ++m) {
      REQUIRE(G(m, m).real() > 0);
      for (Eigen::Index n = 0; n < G.cols(); ++n) {
        if (m != n) REQUIRE(std::abs(G(m, n)) <= 1e-6 * std::sqrt(G(m, m).real() * G(n, n).real()));
      }
    }
  }
}

TEST_CASE("flipping one sign is detected", "[metric]") {
  const Tolerances tol;
  for (const CPTFrame* base : {&fixtures::two_level_frame(), &fixtures::epsilon_frame(1.0)}) {
    for (std::size_t k = 0; k < base->signs.size(); ++k) {
      INFO("mode " << k);
      CPTFrame stale = *base;
      stale.signs[k] = -stale.signs[k];
      const std::string kind = fixtures::error_kind([&] { verify_frame(stale, tol); });
      CHECK((kind == "FrameInconsistent" || kind == "MetricNotPositive"));

      CPTFrame rebuilt = *base;
      rebuilt.signs[k] = -rebuilt.signs[k];
      rebuild_c(rebuilt);
      CHECK(rebuilt.invariants.involution <= 1e-6);
      CHECK(fixtures::error_kind([&] { verify_frame(rebuilt, tol); }) == "MetricNotPositive");
    }
  }
}

TEST_CASE("exceptional point detection", "[metric]") {
  const Tolerances tol;
  auto near_ep = [&](double theta) {
    EigenSystem E;
    const auto m = build_hamiltonian(model::Matrix2x2{1, 1, theta}, std::nullopt);
    E = eig(m.hamiltonian.matrix, tol);
    const auto cls = classify_spectrum(E, tol, 2);
    return near_exceptional_point(E, cls, tol);
  };
  CHECK(near_ep(std::numbers::pi / 2));
  CHECK_FALSE(near_ep(std::numbers::pi / 6));
  CHECK_FALSE(near_ep(1.2));
}
