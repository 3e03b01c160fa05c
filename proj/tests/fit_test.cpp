#include "correlab/fit.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace correlab;

TEST(FitDecay, RecoversExponentialExactly) {
  std::vector<std::pair<double, double>> pts;
  for (int l = 1; l <= 8; ++l) pts.emplace_back(l, 3.0 * std::exp(-l / 2.0));
  const auto f = fit_decay(pts);
  EXPECT_EQ(f.model, DecayModel::exponential);
  EXPECT_NEAR(f.scale, 2.0, 1e-12);
  EXPECT_NEAR(f.amplitude, 3.0, 1e-12);
  EXPECT_LT(f.residual, 1e-12);
  EXPECT_EQ(f.points, 8u);
}

TEST(FitDecay, RecoversPowerLawExactly) {
  std::vector<std::pair<double, double>> pts;
  for (int l = 1; l <= 10; ++l) pts.emplace_back(l, std::pow(l, -3.0));
  const auto f = fit_decay(pts, DecayModel::power);
  EXPECT_NEAR(f.scale, 3.0, 1e-12);
  EXPECT_NEAR(std::log(f.amplitude), 0.0, 1e-12);
  EXPECT_LT(f.residual, 1e-12);
  EXPECT_THROW(fit_decay({{0.0, 1.0}, {1.0, 0.5}, {2.0, 0.25}}, DecayModel::power), std::domain_error);
}

TEST(FitDecay, NoisyExponential) {
  std::mt19937_64 rng(113);
  std::uniform_real_distribution<double> u(-0.05, 0.05);
  std::vector<std::pair<double, double>> pts;
  for (int l = 1; l <= 10; ++l) pts.emplace_back(l, 2.0 * std::exp(-l / 1.5) * (1.0 + u(rng)));
  const auto f = fit_decay(pts);
  EXPECT_NEAR(f.scale, 1.5, 0.15 * 1.5);
  EXPECT_GT(f.residual, 0.0);
  EXPECT_LT(f.residual, 0.1);
}

TEST(FitDecay, ResidualIsRecomputable) {
  std::mt19937_64 rng(127);
  std::normal_distribution<double> g(0.0, 0.2);
  std::vector<std::pair<double, double>> pts;
  for (int l = 2; l <= 9; ++l) pts.emplace_back(l, std::exp(-0.7 * l + g(rng)));
  for (DecayModel m : {DecayModel::exponential, DecayModel::power}) {
    const auto f = fit_decay(pts, m);
    double worst = 0.0;
    for (const auto& [x, y] : pts) {
      const double model = m == DecayModel::exponential ? f.amplitude * std::exp(-x / f.scale)
                                                        : f.amplitude * std::pow(x, -f.scale);
      worst = std::max(worst, std::abs(std::log(y) - std::log(model)));
    }
    EXPECT_NEAR(f.residual, worst, 1e-12);
  }
}

TEST(FitDecay, NeedsThreeUsablePoints) {
  EXPECT_THROW(fit_decay({{1.0, 0.5}, {2.0, 0.25}}), std::domain_error);
  // Values at the floor are dropped before counting.
  EXPECT_THROW(fit_decay({{1.0, 0.5}, {2.0, 0.25}, {3.0, 1e-16}, {4.0, 0.0}}), std::domain_error);
  EXPECT_NO_THROW(fit_decay({{1.0, 0.5}, {2.0, 0.25}, {3.0, 0.125}, {4.0, 0.0}}));
  EXPECT_THROW(fit_decay({{1.0, 0.5}, {2.0, 0.5}, {3.0, 0.5}}), std::domain_error);
}

TEST(LogSlope, MatchesKnownRate) {
  std::vector<double> x, y;
  for (int l = 0; l < 6; ++l) {
    x.push_back(l);
    y.push_back(-4.0 * std::exp(-0.3 * l));
  }
  EXPECT_NEAR(log_slope(x, y), -0.3, 1e-12);
  EXPECT_THROW(log_slope({1.0, 2.0}, {1.0, 0.0}), std::domain_error);
}
