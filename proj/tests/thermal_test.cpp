#include "correlab/hamiltonian.hpp"
#include "correlab/thermal.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <memory>
#include <random>

using namespace correlab;

namespace {

ThermalState state_for(const Matrix& h, double beta) {
  return ThermalState(std::make_shared<const SpectralDecomposition>(eig_hermitian(h)), beta);
}

EmbeddedOperator op(const Matrix& m) { return EmbeddedOperator(std::vector<int>(1, static_cast<int>(m.rows())), m); }

}  // namespace

TEST(ThermalState, PartitionFunctionAndProbabilities) {
  std::mt19937_64 rng(71);
  const Matrix h = oracle::random_hermitian(6, rng);
  const auto s = state_for(h, 0.9);
  EXPECT_NEAR(s.probabilities().sum(), 1.0, 1e-14);
  const Matrix rho = oracle::gibbs(h, 0.9);
  const RealVector e = eigenvalues_hermitian(h);
  EXPECT_NEAR(s.log_partition(), std::log((-0.9 * (e.array() - e(0))).exp().sum()), 1e-13);
  const Matrix a = oracle::random_matrix(6, rng);
  EXPECT_LT(std::abs(expectation(s, op(a)) - (rho * a).trace()), 1e-12);
  EXPECT_THROW(state_for(h, -1.0), std::domain_error);
}

TEST(ThermalState, ZeroTemperatureLimitStaysFinite) {
  Matrix h = Matrix::Zero(2, 2);
  h.diagonal() << -1000, 1000;
  const auto s = state_for(h, 50.0);
  EXPECT_NEAR(s.probabilities()(0), 1.0, 1e-15);
  EXPECT_TRUE(std::isfinite(s.log_partition()));
}

TEST(Correlators, MatchBruteForceOracles) {
  std::mt19937_64 rng(73);
  for (int n : {4, 16}) {
    // Spectral radius 2 keeps the Simpson oracle (which cancels e^{bH} against e^{-bH}) well conditioned.
    Matrix h = oracle::random_hermitian(n, rng);
    h *= 2.0 / eigenvalues_hermitian(h).cwiseAbs().maxCoeff();
    const Matrix a = oracle::random_matrix(n, rng), b = oracle::random_matrix(n, rng);
    for (double beta : {0.3, 1.0, 2.5}) {
      const auto s = state_for(h, beta);
      const Matrix rho = oracle::gibbs(h, beta);
      EXPECT_LT(std::abs(ordinary_correlator(s, op(a), op(b)) - oracle::ordinary(rho, a, b)), 1e-11);
      const cplx can = oracle::canonical(h, beta, a, b);
      EXPECT_LT(std::abs(canonical_correlator(s, op(a), op(b)) - can), 1e-9) << n << ' ' << beta;
      const KMSFunction f(s, op(a), op(b));
      // The Taylor oracle loses digits like e^{Im z ||H||}, so compare relative to that scale.
      const double spread = eigenvalues_hermitian(h).cwiseAbs().maxCoeff();
      for (cplx z : {cplx(0.0, 0.0), cplx(0.7, 0.0), cplx(-1.2, 0.5 * beta), cplx(0.3, beta)})
        EXPECT_LT(std::abs(f(z) - oracle::kms(h, beta, a, b, z)), 1e-12 * std::exp(2.0 * z.imag() * spread) * a.norm() * b.norm()) << z;
    }
  }
}

TEST(Correlators, SpinChainExamples) {
  const Lattice chain = Lattice::chain(4);
  const auto H = build_hamiltonian(builtin_model("transverse_field_ising", chain, {{"J", 1.0}, {"h", 0.9}}), chain);
  const auto s = ThermalState(std::make_shared<const SpectralDecomposition>(eig_hermitian(H.matrix())), 1.0);
  const auto a = embed(pauli_on('Z', 0), chain), b = embed(pauli_on('Z', 3), chain);
  const Matrix rho = oracle::gibbs(oracle::tfim(4, 1.0, 0.9), 1.0);
  EXPECT_LT(std::abs(ordinary_correlator(s, a, b) - oracle::ordinary(rho, a.matrix(), b.matrix())), 1e-12);
  EXPECT_LT(std::abs(canonical_correlator(s, a, b) - oracle::canonical(oracle::tfim(4, 1.0, 0.9), 1.0, a.matrix(), b.matrix())), 1e-9);
}

TEST(KMS, BoundaryCondition) {
  std::mt19937_64 rng(79);
  const Matrix h = oracle::random_hermitian(8, rng);
  const Matrix a = oracle::random_matrix(8, rng), b = oracle::random_matrix(8, rng);
  const auto s = state_for(h, 1.3);
  const KMSFunction f(s, op(a), op(b));
  const Matrix rho = oracle::gibbs(h, 1.3);
  for (double t = -5.0; t <= 5.0; t += 0.5) {
    // F(t + i beta) = phi(tau_t(B) A)
    const Matrix bt = oracle::expm(cplx(0, t) * h) * b * oracle::expm(cplx(0, -t) * h);
    const cplx direct = (rho * bt * a).trace();
    EXPECT_LT(std::abs(f.on_upper_line(t) - direct), 1e-10 * std::max(1.0, std::abs(direct)));
  }
}

TEST(KMS, RejectsPointsOffTheStrip) {
  const auto s = state_for(oracle::pauli('Z'), 1.0);
  const KMSFunction f(s, op(oracle::pauli('X')), op(oracle::pauli('X')));
  EXPECT_THROW(f(cplx(0.0, -0.1)), std::domain_error);
  EXPECT_THROW(f(cplx(0.0, 1.1)), std::domain_error);
  EXPECT_NO_THROW(f.continued(cplx(0.0, 3.0)));
  EXPECT_THROW(kms_eval(s, op(oracle::pauli('X')), op(oracle::pauli('X')), cplx(0, 2)), std::domain_error);
}

TEST(Canonical, SymmetricAndPositive) {
  std::mt19937_64 rng(83);
  const Matrix h = oracle::random_hermitian(12, rng);
  const auto s = state_for(h, 0.8);
  for (int trial = 0; trial < 5; ++trial) {
    const Matrix a = oracle::random_hermitian(12, rng), b = oracle::random_hermitian(12, rng);
    const cplx ab = canonical_correlator(s, op(a), op(b));
    const cplx ba = canonical_correlator(s, op(b), op(a));
    EXPECT_LT(std::abs(ab - ba), 1e-12);
    EXPECT_LT(std::abs(ab.imag()), 1e-12);
    const cplx aa = canonical_correlator(s, op(a), op(a));
    EXPECT_GE(aa.real(), -1e-12);
    EXPECT_LT(std::abs(aa.imag()), 1e-12);
  }
}

TEST(Canonical, ClosedFormMatchesQuadrature) {
  std::mt19937_64 rng(89);
  const Matrix h = oracle::random_hermitian(16, rng);
  for (double beta : {0.5, 1.0, 3.0}) {
    const auto s = state_for(h, beta);
    const Matrix a = oracle::random_matrix(16, rng), b = oracle::random_matrix(16, rng);
    const KMSFunction f(s, op(a), op(b));
    EXPECT_LT(std::abs(f.canonical_closed_form() - f.canonical_quadrature()), 1e-8);
  }
}

TEST(Canonical, HighTemperatureLimit) {
  std::mt19937_64 rng(97);
  const int d = 8;
  const Matrix h = oracle::random_hermitian(d, rng);
  const Matrix a = oracle::random_matrix(d, rng), b = oracle::random_matrix(d, rng);
  const auto s = state_for(h, 1e-8);
  const cplx expect = (a * b).trace() / double(d) - a.trace() * b.trace() / double(d * d);
  EXPECT_LT(std::abs(canonical_correlator(s, op(a), op(b)) - expect), 1e-6);
  const auto s0 = state_for(h, 0.0);
  EXPECT_LT(std::abs(canonical_correlator(s0, op(a), op(b)) - expect), 1e-12);
  EXPECT_THROW(canonical_correlator(s0, op(a), op(b), CanonicalMethod::quadrature), std::domain_error);
}

TEST(Canonical, CommutingOperatorsReduceToOrdinary) {
  // Classical case: H, A, B all diagonal, so the canonical and ordinary correlators coincide.
  std::mt19937_64 rng(101);
  std::normal_distribution<double> g;
  Matrix h = Matrix::Zero(8, 8), a = Matrix::Zero(8, 8), b = Matrix::Zero(8, 8);
  for (int k = 0; k < 8; ++k) {
    h(k, k) = g(rng);
    a(k, k) = g(rng);
    b(k, k) = g(rng);
  }
  const auto s = state_for(h, 1.7);
  EXPECT_LT(std::abs(canonical_correlator(s, op(a), op(b)) - ordinary_correlator(s, op(a), op(b))), 1e-13);
}

TEST(Canonical, DegenerateLevelsUseTheLimitKernel) {
  Matrix h = Matrix::Zero(4, 4);
  h.diagonal() << 0, 0, 1, 1 + 1e-14;
  std::mt19937_64 rng(103);
  const Matrix a = oracle::random_matrix(4, rng), b = oracle::random_matrix(4, rng);
  const auto s = state_for(h, 2.0);
  EXPECT_LT(std::abs(canonical_correlator(s, op(a), op(b)) - oracle::canonical(h, 2.0, a, b)), 1e-9);
}
