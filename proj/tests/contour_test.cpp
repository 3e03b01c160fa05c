#include "correlab/contour.hpp"
#include "correlab/hamiltonian.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <memory>
#include <sstream>

using namespace correlab;

namespace {

ThermalState tfim_state(int n, double beta, double J = 1.0, double h = 1.0) {
  const Lattice chain = Lattice::chain(n);
  const auto H = build_hamiltonian(builtin_model("transverse_field_ising", chain, {{"J", J}, {"h", h}}), chain);
  return ThermalState(std::make_shared<const SpectralDecomposition>(eig_hermitian(H.matrix())), beta);
}

}  // namespace

TEST(Weight, Examples) {
  for (double b : {0.0, 0.3, 1.7}) EXPECT_NEAR(std::abs(weight(cplx(0.0, b), b) - 1.0), 0.0, 1e-15);
  EXPECT_EQ(weight(0.0, 0.0), cplx(1.0));
  EXPECT_NEAR(std::abs(weight(cplx(1.0, 1.0), 0.5)), std::exp(-0.25), 1e-15);
}

TEST(ResidueIdentity, Examples) {
  EXPECT_LT(residue_identity(1.0, 0.5, 8.0).error(), 1e-8);
  EXPECT_LT(residue_identity(2.0, 0.0).error(), 1e-8);
  EXPECT_LT(residue_identity(2.0, 2.0).error(), 1e-8);
  const auto coarse = residue_identity(0.2, 0.1, 10.0, 32);
  const auto fine = residue_identity(0.2, 0.1, 10.0, 64);
  EXPECT_LT(std::abs(coarse.value - fine.value), 1e-10);
}

TEST(ResidueIdentity, TruncationConverges) {
  for (double beta : {0.2, 1.0, 2.0})
    for (double frac : {0.0, 0.5, 1.0}) {
      const double b = frac * beta;
      const auto t8 = residue_identity(beta, b, 8.0), t16 = residue_identity(beta, b, 16.0);
      EXPECT_LT(std::abs(t8.value - t16.value), 1e-12) << beta << ' ' << b;
      EXPECT_LE(t8.error(), 1e-8 + t8.tail_bound);
    }
}

TEST(ResidueIdentity, RejectsBadArguments) {
  EXPECT_THROW(residue_identity(1.0, -0.1), std::domain_error);
  EXPECT_THROW(residue_identity(1.0, 1.1), std::domain_error);
  EXPECT_THROW(residue_identity(0.0, 0.0), std::domain_error);
  EXPECT_THROW(residue_identity(1.0, 0.5, 4.0), std::domain_error);
}

TEST(ResidueIdentity, MatchesBruteForceIntegrand) {
  // Plain trapezoid on a very fine grid of the combined integrand, b strictly inside.
  const double beta = 1.0, b = 0.5, T = 8.0;
  const int n = 400000;
  const double h = 2 * T / n;
  cplx sum = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double t = -T + k * h;
    const cplx w0 = std::exp(-cplx(t, 0) * cplx(t, 0) - b * b);
    const cplx wb = std::exp(-cplx(t, beta) * cplx(t, beta) - b * b);
    const cplx num = w0 * cplx(0, beta) + (w0 - wb) * cplx(t, -b);
    const cplx den = cplx(t, -b) * cplx(t, beta - b);
    sum += (k == 0 || k == n ? 0.5 : 1.0) * num / den;
  }
  const cplx ref = sum * h / cplx(0, 2 * kPi);
  EXPECT_LT(std::abs(residue_identity(beta, b, T).value - ref), 1e-8);
}

TEST(Contour, IdentityObservableHasZeroDirectTerm) {
  const auto s = tfim_state(4, 1.0);
  const Lattice chain = Lattice::chain(4);
  const auto d = contour_decomposition(s, EmbeddedOperator::identity(chain.local_dims()),
                                       embed(pauli_on('X', 2), chain), 0.5);
  EXPECT_LT(std::abs(d.direct), 1e-14);
  EXPECT_LT(d.reconstruction_error(), 1e-8);
}

TEST(Contour, ReconstructionUniformInB) {
  const int n = 6;
  const double beta = 1.0;
  const auto s = tfim_state(n, beta);
  const Lattice chain = Lattice::chain(n);
  for (double frac : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    for (double delta : {1e-6, 0.0}) {
      ContourOptions opt;
      opt.delta_b = delta;
      const auto d = contour_decomposition(s, chain, pauli_on('Z', 0), pauli_on('Z', 5), frac * beta, opt);
      EXPECT_LE(d.reconstruction_error(), 1e-6 * (1.0 + std::abs(d.direct))) << frac << ' ' << delta;
      if (delta == 0.0) EXPECT_EQ(d.b_offset, 0.0);
    }
  }
}

TEST(Contour, DirectTermMatchesOracle) {
  const int n = 4;
  const double beta = 1.3, b = 0.4;
  const auto s = tfim_state(n, beta, 1.0, 0.7);
  const Lattice chain = Lattice::chain(n);
  const auto d = contour_decomposition(s, chain, pauli_on('X', 0), pauli_on('Z', 3), b);
  const Matrix H = oracle::tfim(n, 1.0, 0.7);
  const std::vector<int> dims(n, 2);
  const Matrix a = oracle::embed(oracle::pauli('X'), {0}, dims), bm = oracle::embed(oracle::pauli('Z'), {3}, dims);
  const Matrix rho = oracle::gibbs(H, beta);
  const cplx ref = oracle::kms(H, beta, a, bm, cplx(0, b)) - (rho * a).trace() * (rho * bm).trace();
  EXPECT_LT(std::abs(d.direct - ref), 1e-12);
  EXPECT_LT(std::abs(d.reconstructed() - ref), 1e-6);
}

TEST(Contour, RandomOperatorsReconstruct) {
  std::mt19937_64 rng(109);
  const Matrix h = oracle::random_hermitian(8, rng);
  const auto s = ThermalState(std::make_shared<const SpectralDecomposition>(eig_hermitian(h)), 0.7);
  const std::vector<int> dims{8};
  const EmbeddedOperator a(dims, oracle::random_matrix(8, rng)), b(dims, oracle::random_matrix(8, rng));
  for (double frac : {0.1, 0.5, 0.9}) {
    const auto d = contour_decomposition(s, a, b, frac * 0.7);
    EXPECT_LE(d.reconstruction_error(), 1e-6 * (1.0 + std::abs(d.direct))) << frac;
  }
}

TEST(Contour, RejectsBadArguments) {
  const auto s = tfim_state(4, 1.0);
  const Lattice chain = Lattice::chain(4);
  EXPECT_THROW(contour_decomposition(s, chain, pauli_on('Z', 0), pauli_on('Z', 3), 1.5), std::domain_error);
  EXPECT_THROW(contour_decomposition(s, chain, pauli_on('Z', 0), pauli_on('Z', 3), -0.1), std::domain_error);
  EXPECT_THROW(contour_decomposition(s, chain, pauli_on('Z', 1), pauli_on('X', 1), 0.5), std::invalid_argument);
  ContourOptions opt;
  opt.T = 3.0;
  EXPECT_THROW(contour_decomposition(s, chain, pauli_on('Z', 0), pauli_on('Z', 3), 0.5, opt), std::domain_error);
}

TEST(Contour, DefaultTruncation) {
  EXPECT_EQ(default_truncation(1.0, 2.0, 23.7), 8.0);
  EXPECT_NEAR(default_truncation(1.0, 100.0, 2.0), 29.0, 1e-12);
}

TEST(ContourScan, TermOneDecaysWithDistance) {
  const int n = 8;
  const auto s = tfim_state(n, 1.0);
  const Lattice chain = Lattice::chain(n);
  const std::vector<int> ls{2, 3, 4, 5, 6, 7};
  const auto scan = contour_scan(s, chain, pauli_on('Z', 0), [](int l) { return pauli_on('Z', l); }, ls, 0.5, 1.0);
  ASSERT_EQ(scan.rows.size(), ls.size());
  EXPECT_LT(scan.max_relative_error(), 1e-6);
  std::vector<double> x, y;
  for (const auto& r : scan.rows) {
    x.push_back(r.l);
    y.push_back(std::abs(r.terms.term1));
  }
  std::ostringstream csv;
  write_csv(csv, scan);
  EXPECT_EQ(csv.str().substr(0, 2), "l,");
  // Slope of log|term1| against l, compared with -mu/2 + 0.1.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += std::log(y[i]);
    sxx += x[i] * x[i];
    sxy += x[i] * std::log(y[i]);
  }
  const double m = static_cast<double>(x.size());
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  EXPECT_LE(slope, -0.5 + 0.1);
}
