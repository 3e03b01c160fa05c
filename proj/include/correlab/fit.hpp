#pragma once

// Least-squares decay fits in log space.
//   exponential: y = a exp(-x / xi)
//   power:       y = a x^(-n)
// The residual is the largest absolute deviation in log y.

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace correlab {

enum class DecayModel { exponential, power };

inline const char* to_string(DecayModel m) { return m == DecayModel::exponential ? "exponential" : "power"; }

struct DecayFit {
  DecayModel model = DecayModel::exponential;
  double amplitude = 0.0;
  double scale = 0.0;     // xi for exponential, exponent n for power
  double residual = 0.0;  // max |log y - log fit|
  std::size_t points = 0;

  double operator()(double x) const {
    return model == DecayModel::exponential ? amplitude * std::exp(-x / scale) : amplitude * std::pow(x, -scale);
  }
};

/// Ordinary least-squares slope and intercept of y against x.
inline std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("linear fit needs at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("linear fit needs distinct abscissae");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

/// Slope of log|y| against x over points with |y| above `floor`.
inline double log_slope(const std::vector<double>& x, const std::vector<double>& y, double floor = 1e-15) {
  std::vector<double> xs, ls;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (std::abs(y[i]) <= floor) continue;
    xs.push_back(x[i]);
    ls.push_back(std::log(std::abs(y[i])));
  }
  if (xs.size() < 2) throw std::domain_error("fewer than two points above the noise floor");
  return linear_fit(xs, ls).first;
}

inline double fit_residual(const DecayFit& fit, const std::vector<std::pair<double, double>>& points,
                           double floor = 1e-15) {
  double worst = 0.0;
  for (const auto& [x, y] : points) {
    if (std::abs(y) <= floor) continue;
    worst = std::max(worst, std::abs(std::log(std::abs(y)) - std::log(fit(x))));
  }
  return worst;
}

/// Points with |y| <= floor are dropped; at least three must remain.
inline DecayFit fit_decay(const std::vector<std::pair<double, double>>& points,
                          DecayModel model = DecayModel::exponential, double floor = 1e-15) {
  std::vector<double> xs, ls;
  for (const auto& [x, y] : points) {
    if (std::abs(y) <= floor) continue;
    if (model == DecayModel::power && !(x > 0.0)) throw std::domain_error("power-law fit needs x > 0");
    xs.push_back(model == DecayModel::exponential ? x : std::log(x));
    ls.push_back(std::log(std::abs(y)));
  }
  if (xs.size() < 3)
    throw std::domain_error("decay fit needs at least 3 points above the noise floor, got " +
                            std::to_string(xs.size()));
  const auto [slope, intercept] = linear_fit(xs, ls);
  if (!(slope < 0.0)) throw std::domain_error("data do not decay (fitted log slope " + std::to_string(slope) + ")");
  DecayFit fit;
  fit.model = model;
  fit.amplitude = std::exp(intercept);
  fit.scale = model == DecayModel::exponential ? -1.0 / slope : -slope;
  fit.points = xs.size();
  fit.residual = fit_residual(fit, points, floor);
  return fit;
}

}  // namespace correlab
