#include "correlab/hamiltonian.hpp"
#include "correlab/theorem.hpp"

#include <gtest/gtest.h>

#include <memory>
#include <sstream>

using namespace correlab;

namespace {

ThermalState tfim_state(const Lattice& chain, double beta, double J, double h) {
  const auto H = build_hamiltonian(builtin_model("transverse_field_ising", chain, {{"J", J}, {"h", h}}), chain);
  return ThermalState(std::make_shared<const SpectralDecomposition>(eig_hermitian(H.matrix())), beta);
}

LocalOperator z_at(int l) { return pauli_on('Z', l); }

}  // namespace

TEST(TheoremCheck, SinglePointGrid) {
  const Lattice chain = Lattice::chain(5);
  const auto s = tfim_state(chain, 0.8, 1.0, 1.2);
  const auto rep = theorem_check(s, chain, pauli_on('Z', 0), z_at, {3});
  ASSERT_EQ(rep.points.size(), 1u);
  EXPECT_FALSE(rep.ordinary_fit.has_value());
  EXPECT_EQ(rep.points[0].g, 1.0);
  EXPECT_DOUBLE_EQ(rep.c_prime, rep.points[0].c_prime_ratio);
  EXPECT_DOUBLE_EQ(rep.c, rep.points[0].c_ratio);
  EXPECT_TRUE(rep.c_prime_finite());
}

TEST(TheoremCheck, CommutingCaseHasSmallerConstant) {
  // h = 0: every Z_l commutes with H, canonical equals ordinary, and g' >= g.
  const Lattice chain = Lattice::chain(8);
  const auto s = tfim_state(chain, 0.7, 1.0, 0.0);
  const auto rep = theorem_check(s, chain, pauli_on('Z', 0), z_at, {1, 2, 3, 4, 5});
  ASSERT_TRUE(rep.ordinary_fit.has_value());
  for (const auto& p : rep.points) {
    EXPECT_NEAR(p.canonical, p.ordinary, 1e-12);
    // Classical Ising chain: <Z_0 Z_l> = tanh(beta J)^l.
    EXPECT_NEAR(p.ordinary, std::pow(std::tanh(0.7), p.l), 1e-12);
  }
  EXPECT_NEAR(rep.xi, -1.0 / std::log(std::tanh(0.7)), 1e-10);
  EXPECT_LE(rep.c_prime, rep.c * (1 + 1e-12));
}

TEST(TheoremCheck, EnvelopeDominance) {
  const Lattice chain = Lattice::chain(8);
  const auto s = tfim_state(chain, 0.5, 1.0, 2.0);
  for (double mu : {0.3, 1.0, 3.0}) {
    TheoremOptions opt;
    opt.mu = mu;
    const auto rep = theorem_check(s, chain, pauli_on('Z', 0), z_at, {1, 2, 3, 4, 5, 6, 7}, opt);
    EXPECT_TRUE(rep.envelope_dominates());
    for (const auto& p : rep.points) {
      EXPECT_GE(p.g_prime, std::exp(-p.l / (4.0 * rep.xi)));
      EXPECT_GE(p.g_prime, std::exp(-mu * p.l / 2.0));
      EXPECT_GE(p.c_prime_ratio_xy, 0.0);
    }
    EXPECT_DOUBLE_EQ(rep.xi_prime_reference(), std::max(4.0 * rep.xi, 2.0 / mu));
  }
}

TEST(TheoremCheck, WorkersDoNotChangeOutput) {
  const Lattice chain = Lattice::chain(7);
  const auto s = tfim_state(chain, 0.5, 1.0, 2.0);
  TheoremOptions one, three;
  three.workers = 3;
  std::ostringstream a, b;
  write_csv(a, theorem_check(s, chain, pauli_on('Z', 0), z_at, {1, 2, 3, 4, 5, 6}, one));
  write_csv(b, theorem_check(s, chain, pauli_on('Z', 0), z_at, {1, 2, 3, 4, 5, 6}, three));
  EXPECT_EQ(a.str(), b.str());
}

TEST(TheoremCheck, RejectsDegenerateInputs) {
  const Lattice chain = Lattice::chain(4);
  const auto s = tfim_state(chain, 0.5, 1.0, 1.0);
  EXPECT_THROW(theorem_check(s, chain, pauli_on('Z', 0), z_at, {}), std::invalid_argument);
  EXPECT_THROW(theorem_check(s, chain, pauli_on('Z', 0), z_at, {1, 1}), std::invalid_argument);
  EXPECT_THROW(theorem_check(s, chain, pauli_on('Z', 0), z_at, {1, 9}), std::invalid_argument);
  const auto hot = tfim_state(chain, 0.0, 1.0, 1.0);
  EXPECT_THROW(theorem_check(hot, chain, pauli_on('Z', 0), z_at, {1, 2}), std::domain_error);
  TheoremOptions bad;
  bad.mu = 0.0;
  EXPECT_THROW(theorem_check(s, chain, pauli_on('Z', 0), z_at, {1, 2}, bad), std::domain_error);
}
