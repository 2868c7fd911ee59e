#pragma once

#include <numbers>
#include <string>

#include "ptqm/metric.hpp"
#include "ptqm/observables.hpp"
#include "ptqm/models.hpp"

namespace fixtures {

inline const ptqm::HamiltonianModel& two_level_unbroken() {
  static const auto m = ptqm::build_hamiltonian(ptqm::model::Matrix2x2{1, 1, std::numbers::pi / 6}, std::nullopt);
  return m;
}

inline const ptqm::HamiltonianModel& two_level_broken() {
  static const auto m = ptqm::build_hamiltonian(ptqm::model::Matrix2x2{2, 1, std::numbers::pi / 2}, std::nullopt);
  return m;
}

inline const ptqm::HamiltonianModel& epsilon_model(double eps) {
  static const auto m0 = ptqm::build_hamiltonian(ptqm::model::EpsilonFamily{0.0}, ptqm::make_grid(201, 8));
  static const auto m05 = ptqm::build_hamiltonian(ptqm::model::EpsilonFamily{0.5}, ptqm::make_grid(201, 8));
  static const auto m1 = ptqm::build_hamiltonian(ptqm::model::EpsilonFamily{1.0}, ptqm::make_grid(201, 8));
  return eps == 0.0 ? m0 : eps == 0.5 ? m05 : m1;
}

inline const ptqm::CPTFrame& two_level_frame() {
  static const auto f = ptqm::build_frame(two_level_unbroken(), {});
  return f;
}

inline const ptqm::CPTFrame& epsilon_frame(double eps) {
  static const auto f0 = ptqm::build_frame(epsilon_model(0.0), {});
  static const auto f05 = ptqm::build_frame(epsilon_model(0.5), {});
  static const auto f1 = ptqm::build_frame(epsilon_model(1.0), {});
  return eps == 0.0 ? f0 : eps == 0.5 ? f05 : f1;
}

// Name of the error kind raised by f, or "none".
template <class F>
std::string error_kind(F&& f) {
  try {
    f();
  } catch (const ptqm::Error& e) {
    return std::string(ptqm::to_string(e.kind()));
  }
  return "none";
}

inline ptqm::CMatrix random_matrix(std::uint64_t seed, Eigen::Index n) {
  ptqm::detail::GaussianStream g(seed);
  return g.matrix(n);
}

}  // namespace fixtures
