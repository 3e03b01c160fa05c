#include "correlab/interaction.hpp"
#include "correlab/lattice.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace correlab;

TEST(Lattice, RejectsBrokenMetrics) {
  EXPECT_THROW(Lattice({{0, 1}, {2, 0}}, {2, 2}), std::invalid_argument);            // asymmetric
  EXPECT_THROW(Lattice({{0, 0}, {0, 0}}, {2, 2}), std::invalid_argument);            // zero off-diagonal
  EXPECT_THROW(Lattice({{0, 1, 5}, {1, 0, 1}, {5, 1, 0}}, {2, 2, 2}), std::invalid_argument);  // triangle
  EXPECT_THROW(Lattice({{0}}, {1}), std::invalid_argument);                          // d_x < 2
  EXPECT_NO_THROW(Lattice({{0, 1.5}, {1.5, 0}}, {2, 3}));
}

TEST(Lattice, BallExamples) {
  const Lattice chain = Lattice::chain(9);
  EXPECT_EQ(ball(chain, {4}, 0.0), (SiteSet{4}));
  EXPECT_EQ(ball(chain, {4}, 2.5), (SiteSet{2, 3, 4, 5, 6}));
  EXPECT_EQ(ball(chain, chain.all_sites(), 1.7), chain.all_sites());
  EXPECT_THROW(ball(chain, {}, 1.0), std::domain_error);
  // d(y, X) < r is strict: r = 1 adds nothing on a unit-spaced chain.
  EXPECT_EQ(ball(chain, {4}, 1.0), (SiteSet{4}));
}

TEST(Lattice, BallIsMonotoneInRadius) {
  const Lattice grid = Lattice::grid(4, 3);
  for (const SiteSet& X : {SiteSet{0}, SiteSet{5}, SiteSet{1, 10}, SiteSet{0, 11}}) {
    SiteSet prev = ball(grid, X, 0.0);
    for (double r = 0.25; r <= 7.0; r += 0.25) {
      const SiteSet cur = ball(grid, X, r);
      EXPECT_TRUE(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
      EXPECT_TRUE(std::includes(cur.begin(), cur.end(), X.begin(), X.end()));
      prev = cur;
    }
  }
}

TEST(Lattice, ShellCountExamples) {
  const Lattice chain = Lattice::chain(9);
  EXPECT_EQ(shell_count(chain, {4}, 1), 2u);
  EXPECT_EQ(shell_count(chain, {0}, 1), 1u);
  EXPECT_EQ(shell_count(chain, chain.all_sites(), 3), 0u);
}

TEST(Lattice, ShellsTileTheBall) {
  const Lattice grid = Lattice::grid(4, 4);
  for (const SiteSet& Y : {SiteSet{0}, SiteSet{5, 6}, SiteSet{3, 12}}) {
    for (int R = 1; R <= 6; ++R) {
      std::size_t total = Y.size();
      for (int r = 1; r <= R; ++r) total += shell_count(grid, Y, r);
      EXPECT_EQ(total, ball(grid, Y, R + 0.5).size()) << "R = " << R;
    }
  }
}

TEST(Lattice, GrowthCertificateChain) {
  // Interior singleton balls on a chain: |B_r| <= 2r + 1 <= 2 (1 + r).
  const Lattice chain = Lattice::chain(41);
  std::vector<std::pair<SiteSet, double>> tests;
  for (double r : {0.5, 1.5, 2.5, 5.5, 10.5}) tests.push_back({{20}, r});
  const auto cert = certify_growth(chain, 1.0, tests);
  EXPECT_LE(cert.C, 2.0);
  EXPECT_TRUE(cert.holds());
  for (const auto& w : cert.witness_table) EXPECT_LE(static_cast<double>(w.ball_size), w.bound);
}

TEST(Lattice, GrowthCertificateLargeExponent) {
  const Lattice chain = Lattice::chain(21);
  std::vector<std::pair<SiteSet, double>> tests;
  for (double r = 1.0; r <= 9.0; r += 1.0) tests.push_back({{10}, r});
  EXPECT_LE(certify_growth(chain, 4.0, tests).C, 1.0);
}

TEST(Lattice, GrowthCertificateGrid) {
  const Lattice grid = Lattice::grid(21, 21);
  std::vector<std::pair<SiteSet, double>> tests;
  for (int r = 1; r <= 10; ++r) tests.push_back({{220}, static_cast<double>(r)});
  const auto cert = certify_growth(grid, 2.0, tests);
  EXPECT_LE(cert.C, 4.0);
  EXPECT_TRUE(cert.holds());
}

TEST(Interaction, TfimLocalityConstant) {
  const Lattice chain = Lattice::chain(5);
  const auto phi = builtin_model("transverse_field_ising", chain, {{"J", 1.0}, {"h", 1.0}});
  const auto cert = certify_locality(phi, chain, 1.0);
  // Interior site: two bonds (norm 1, |Z| = 2, diam 1) and one field term.
  const double interior = 4.0 * std::exp(1.0) + 1.0;
  EXPECT_NEAR(cert.per_site_sums[2], interior, 1e-12);
  EXPECT_NEAR(cert.v, 8.0 * std::exp(1.0) + 2.0, 1e-12);
  EXPECT_NEAR(cert.v, 23.746, 1e-3);
  EXPECT_TRUE(cert.holds());
}

TEST(Interaction, CertificateIsReproducible) {
  const Lattice chain = Lattice::chain(6);
  const auto phi = builtin_model("heisenberg_xxz", chain, {{"J", 0.7}, {"Delta", 1.3}, {"h", 0.2}});
  const auto cert = certify_locality(phi, chain, 0.8);
  for (int x = 0; x < 6; ++x)
    EXPECT_NEAR(locality_site_sum(phi, chain, x, 0.8), cert.per_site_sums[x], 1e-12 * cert.per_site_sums[x]);
}

TEST(Interaction, TrivialCertificates) {
  const Lattice chain = Lattice::chain(3);
  Interaction empty("empty", chain);
  EXPECT_EQ(certify_locality(empty, chain, 1.0).v, 0.0);
  Interaction single("single", chain);
  single.add_term({1}, 0.7 * pauli('X'));
  EXPECT_NEAR(certify_locality(single, chain, 1.0).v, 1.4, 1e-14);
  EXPECT_THROW(certify_locality(single, chain, 0.0), std::domain_error);
}

TEST(Interaction, BuiltinModels) {
  const auto two = builtin_model("transverse_field_ising", Lattice::chain(2), {{"J", 1.0}, {"h", 0.0}});
  ASSERT_EQ(two.terms().size(), 1u);
  EXPECT_EQ(two.terms().begin()->first, (SiteSet{0, 1}));
  EXPECT_TRUE(two.terms().begin()->second.isApprox(-kron(pauli('Z'), pauli('Z'))));

  const auto field = builtin_model("transverse_field_ising", Lattice::chain(3), {{"J", 0.0}, {"h", 1.0}});
  ASSERT_EQ(field.terms().size(), 3u);
  for (const auto& [Z, m] : field.terms()) {
    EXPECT_EQ(Z.size(), 1u);
    EXPECT_TRUE(m.isApprox(-pauli('X')));
  }

  const Couplings rb{{"J_min", 0.5}, {"J_max", 1.5}, {"h", 0.3}};
  EXPECT_EQ(serialize(builtin_model("random_bond_ising", Lattice::chain(6), rb, 11)),
            serialize(builtin_model("random_bond_ising", Lattice::chain(6), rb, 11)));
  EXPECT_NE(serialize(builtin_model("random_bond_ising", Lattice::chain(6), rb, 11)),
            serialize(builtin_model("random_bond_ising", Lattice::chain(6), rb, 12)));
  EXPECT_THROW(builtin_model("random_bond_ising", Lattice::chain(6), rb), std::invalid_argument);
  EXPECT_THROW(builtin_model("potts", Lattice::chain(3), {}), std::invalid_argument);
  EXPECT_THROW(builtin_model("transverse_field_ising", Lattice::chain(3), {{"J", 1.0}}), std::invalid_argument);
}

TEST(Interaction, RejectsBadTerms) {
  const Lattice chain = Lattice::chain(3);
  Interaction phi("t", chain);
  EXPECT_THROW(phi.add_term({1, 0}, kron(pauli('Z'), pauli('Z'))), std::invalid_argument);
  EXPECT_THROW(phi.add_term({0, 5}, kron(pauli('Z'), pauli('Z'))), std::invalid_argument);
  EXPECT_THROW(phi.add_term({0}, kron(pauli('Z'), pauli('Z'))), std::invalid_argument);
  Matrix nonherm(2, 2);
  nonherm << 0, 1, 0, 0;
  EXPECT_THROW(phi.add_term({0}, nonherm), std::invalid_argument);
}

TEST(Interaction, LocalitySweepIsParetoFront) {
  const Lattice chain = Lattice::chain(4);
  const auto phi = builtin_model("transverse_field_ising", chain, {{"J", 1.0}, {"h", 1.0}});
  const auto front = locality_sweep(phi, chain, {0.25, 0.5, 1.0, 2.0});
  // v grows with mu for a nearest-neighbour model, so every point is Pareto-optimal.
  ASSERT_EQ(front.size(), 4u);
  for (std::size_t i = 1; i < front.size(); ++i) EXPECT_GT(front[i].second, front[i - 1].second);
}
