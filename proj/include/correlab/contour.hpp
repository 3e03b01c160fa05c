#pragma once

// Contour representation of the imaginary-time two-point function.
//
// With w(z) = exp(-z^2 - b^2) and f = F_{A,B}, integrating f w / (z - ib)
// around the strip boundary gives
//
//   2 pi i (f(ib) - phi(A) phi(B)) = term1 + term2 + term3,
//
//   term1 =  int w(t + i beta) phi([A, tau_t(B)]) / (t + i beta - ib) dt
//   term2 =  int <A, tau_t(B)> w(t) / (t - ib) dt
//   term3 = -int <A, tau_t(B)> w(t + i beta) / (t + i beta - ib) dt
//
// over the real line. Substituting A = I leaves the scalar identity
//   (1/2 pi i) int [w(t) i beta + (w(t) - w(t + i beta))(t - ib)]
//                  / ((t - ib)(t + i beta - ib)) dt = 1.
//
// Every integrand has the form g(t) / (t - p) with a pole at p = ib or
// p = i(b - beta). When the pole sits close to the real axis the integral is
// split as int (g(t) - g(p)) / (t - p) dt + g(p) int dt / (t - p), the second
// piece done in closed form. A pole exactly on the axis (b = 0 or b = beta)
// is taken as the one-sided limit from inside the strip.

#include "correlab/lattice.hpp"
#include "correlab/parallel.hpp"
#include "correlab/quadrature.hpp"
#include "correlab/thermal.hpp"
#include "correlab/types.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace correlab {

inline cplx weight(cplx z, double b) { return std::exp(-z * z - b * b); }

struct ContourGrid {
  double T = 8.0;
  double panel_width = 0.5;
  std::size_t nodes_per_panel = 32;

  std::size_t panels() const {
    return static_cast<std::size_t>(std::ceil(2.0 * T / panel_width - 1e-9));
  }
  std::size_t total_nodes() const { return panels() * nodes_per_panel; }
};

namespace detail {

/// int_{-T}^{T} dt / (t - p). For real p, `side` = +1 means the pole is the
/// limit from above (p = x + i0), -1 from below.
inline cplx cauchy_log(double T, cplx p, int side) {
  if (p.imag() == 0.0) {
    const double x = p.real();
    if (std::abs(x) >= T) throw std::domain_error("pole outside the truncated line");
    return cplx(std::log((T - x) / (T + x)), side * kPi);
  }
  return std::log(cplx(T, 0.0) - p) - std::log(cplx(-T, 0.0) - p);
}

/// Composite Gauss-Legendre nodes and weights on [-T, T].
struct LineSamples {
  std::vector<double> t;
  std::vector<double> w;
};

inline LineSamples line_samples(const ContourGrid& grid) {
  const GaussLegendreRule rule = gauss_legendre(grid.nodes_per_panel);
  const std::size_t panels = grid.panels();
  const double h = 2.0 * grid.T / static_cast<double>(panels);
  LineSamples s;
  s.t.reserve(panels * rule.size());
  s.w.reserve(panels * rule.size());
  for (std::size_t p = 0; p < panels; ++p) {
    const double mid = -grid.T + h * (static_cast<double>(p) + 0.5);
    for (std::size_t k = 0; k < rule.size(); ++k) {
      s.t.push_back(mid + 0.5 * h * rule.nodes[k]);
      s.w.push_back(0.5 * h * rule.weights[k]);
    }
  }
  return s;
}

/// int_{-T}^{T} g(t) / (t - p) dt from samples g_k = g(t_k), with singularity
/// subtraction when |Im p| < `near`.
inline cplx cauchy_integral(const LineSamples& s, const std::vector<cplx>& g, cplx g_at_pole, cplx p, int side,
                            double T, double near) {
  const bool subtract = std::abs(p.imag()) < near;
  cplx sum = 0.0;
  for (std::size_t k = 0; k < s.t.size(); ++k) {
    const cplx d = cplx(s.t[k], 0.0) - p;
    if (subtract) {
      if (d != cplx{}) sum += s.w[k] * (g[k] - g_at_pole) / d;
    } else {
      sum += s.w[k] * g[k] / d;
    }
  }
  if (subtract) sum += g_at_pole * cauchy_log(T, p, side);
  return sum;
}

template <class G>
std::vector<cplx> sample(const LineSamples& s, const G& g) {
  std::vector<cplx> out(s.t.size());
  for (std::size_t k = 0; k < s.t.size(); ++k) out[k] = g(s.t[k]);
  return out;
}

inline void check_b(double beta, double b) {
  if (!(beta > 0.0)) throw std::domain_error("beta must be positive");
  if (b < 0.0 || b > beta)
    throw std::domain_error("b = " + std::to_string(b) + " lies outside [0, beta]");
}

}  // namespace detail

struct ResidueIdentityResult {
  cplx value;
  double tail_bound = 0.0;
  ContourGrid grid;

  double error() const { return std::abs(value - 1.0); }
};

/// Numerical value of the scalar identity on [-T, T] with a Gaussian tail bound.
inline ResidueIdentityResult residue_identity(double beta, double b, double T = 10.0,
                                              std::size_t nodes_per_panel = 32) {
  detail::check_b(beta, b);
  if (T < 5.0) throw std::domain_error("truncation T must be >= 5");
  ContourGrid grid;
  grid.T = T;
  grid.nodes_per_panel = nodes_per_panel;
  grid.panel_width = std::min(0.5, 8.0 / (2.0 * beta + 1.0));
  const double near = grid.panel_width;

  // Integrand = w(t)/(t - ib) - w(t + i beta)/(t - i(b - beta)); both residues are w(ib) = 1.
  const cplx p_low(0.0, b);
  const cplx p_high(0.0, b - beta);
  const detail::LineSamples s = detail::line_samples(grid);
  const auto g_low = detail::sample(s, [&](double t) { return weight(cplx(t, 0.0), b); });
  const auto g_high = detail::sample(s, [&](double t) { return weight(cplx(t, beta), b); });
  const cplx lower = detail::cauchy_integral(s, g_low, weight(p_low, b), p_low, +1, T, near);
  const cplx upper = detail::cauchy_integral(s, g_high, weight(p_high + cplx(0.0, beta), b), p_high, -1, T, near);

  ResidueIdentityResult out;
  out.grid = grid;
  out.value = (lower - upper) / (2.0 * kPi * kI);
  out.tail_bound = (std::exp(-b * b) + std::exp(beta * beta - b * b)) * std::exp(-T * T) / (2.0 * kPi * T * T);
  return out;
}

struct ContourOptions {
  double T = 8.0;
  std::size_t nodes_per_panel = 32;
  double panel_width = 0.0;  // 0: derived from the spectral width
  double delta_b = 1e-6;     // endpoint offset; 0 takes the one-sided limit
};

/// max(8, mu l / (2 v) + 4): keeps the split point mu l / 2v inside [-T, T].
inline double default_truncation(double mu, double l, double v) {
  return std::max(8.0, v > 0.0 ? mu * l / (2.0 * v) + 4.0 : 8.0);
}

struct ContourDecomposition {
  double b = 0.0;          // point actually evaluated
  double b_offset = 0.0;   // b - requested b
  cplx term1, term2, term3;
  cplx direct;             // f(ib) - phi(A) phi(B)
  double T = 0.0;
  std::size_t nodes = 0;

  cplx reconstructed() const { return (term1 + term2 + term3) / (2.0 * kPi * kI); }
  /// |term1 + term2 + term3 - 2 pi i direct|.
  double reconstruction_error() const { return std::abs(term1 + term2 + term3 - 2.0 * kPi * kI * direct); }
};

inline ContourDecomposition contour_decomposition(const KMSFunction& f, double spectral_width, double b,
                                                  const ContourOptions& opt = {}) {
  const double beta = f.beta();
  detail::check_b(beta, b);
  if (opt.T < 5.0) throw std::domain_error("truncation T must be >= 5");

  ContourDecomposition out;
  double be = b;
  if (opt.delta_b > 0.0) {
    if (2.0 * opt.delta_b >= beta) throw std::domain_error("delta_b is too large for this beta");
    be = std::clamp(b, opt.delta_b, beta - opt.delta_b);
  }
  out.b = be;
  out.b_offset = be - b;

  ContourGrid grid;
  grid.T = opt.T;
  grid.nodes_per_panel = opt.nodes_per_panel;
  grid.panel_width = opt.panel_width > 0.0 ? opt.panel_width
                                            : std::min(0.5, 8.0 / (spectral_width + 2.0 * beta + 1.0));
  const double near = std::min(grid.panel_width, 0.25);
  out.T = grid.T;
  out.nodes = grid.total_nodes();

  const cplx phase_product = f.phi_a() * f.phi_b();
  const cplx p_low(0.0, be);
  const cplx p_high(0.0, be - beta);
  const cplx f_ib = f.continued(p_low);
  const cplx f_below = f.continued(p_high);  // just outside the strip when be ~ beta

  const detail::LineSamples s = detail::line_samples(grid);
  const std::size_t n = s.t.size();
  std::vector<cplx> g1(n), g2(n), g3(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = s.t[k];
    const cplx f_real = f.on_real_line(t);
    const cplx f_upper = f.on_upper_line(t);
    const cplx w_low = weight(cplx(t, 0.0), be);
    const cplx w_high = weight(cplx(t, beta), be);
    g1[k] = w_high * (f_real - f_upper);
    g2[k] = (f_real - phase_product) * w_low;
    g3[k] = -(f_real - phase_product) * w_high;
  }

  out.term1 = detail::cauchy_integral(s, g1, f_below - f_ib, p_high, -1, grid.T, near);
  out.term2 = detail::cauchy_integral(s, g2, f_ib - phase_product, p_low, +1, grid.T, near);
  out.term3 = detail::cauchy_integral(s, g3, -(f_below - phase_product), p_high, -1, grid.T, near);
  out.direct = f_ib - phase_product;
  return out;
}

inline ContourDecomposition contour_decomposition(const ThermalState& state, const EmbeddedOperator& a,
                                                  const EmbeddedOperator& b_op, double b,
                                                  const ContourOptions& opt = {}) {
  const KMSFunction f(state, a, b_op);
  return contour_decomposition(f, state.spectral().spectral_width(), b, opt);
}

inline void require_disjoint(const SiteSet& x, const SiteSet& y) {
  for (int s : x)
    if (std::binary_search(y.begin(), y.end(), s))
      throw std::invalid_argument("supports " + format_sites(x) + " and " + format_sites(y) + " overlap");
}

inline ContourDecomposition contour_decomposition(const ThermalState& state, const Lattice& lattice,
                                                  const LocalOperator& a, const LocalOperator& b_op, double b,
                                                  const ContourOptions& opt = {}) {
  require_disjoint(a.support(), b_op.support());
  return contour_decomposition(state, embed(a, lattice), embed(b_op, lattice), b, opt);
}

struct ContourScanRow {
  double l = 0.0;
  ContourDecomposition terms;
  double envelope = 0.0;  // exp(-mu l / 2)
};

struct ContourScan {
  double b = 0.0;
  double mu = 0.0;
  std::vector<ContourScanRow> rows;

  double max_relative_error() const {
    double worst = 0.0;
    for (const auto& r : rows)
      worst = std::max(worst, r.terms.reconstruction_error() / (1.0 + std::abs(r.terms.direct)));
    return worst;
  }
};

/// Decomposition at a fixed b for B placed at each distance on the grid.
inline ContourScan contour_scan(const ThermalState& state, const Lattice& lattice, const LocalOperator& a,
                                const std::function<LocalOperator(int)>& b_at, const std::vector<int>& l_grid,
                                double b, double mu, const ContourOptions& opt = {}, std::size_t workers = 1) {
  if (l_grid.empty()) throw std::invalid_argument("contour scan needs a non-empty l-grid");
  const Matrix a_eig = correlab::to_eigenbasis(state.spectral(), embed(a, lattice).matrix());
  ContourScan scan;
  scan.b = b;
  scan.mu = mu;
  scan.rows.resize(l_grid.size());
  parallel_for(l_grid.size(), workers, [&](std::size_t i) {
    const LocalOperator bl = b_at(l_grid[i]);
    require_disjoint(a.support(), bl.support());
    const Matrix b_eig = correlab::to_eigenbasis(state.spectral(), embed(bl, lattice).matrix());
    const KMSFunction f(state, a_eig, b_eig);
    auto& row = scan.rows[i];
    row.l = lattice.distance(a.support(), bl.support());
    row.terms = contour_decomposition(f, state.spectral().spectral_width(), b, opt);
    row.envelope = std::exp(-mu * row.l / 2.0);
  });
  return scan;
}

inline void write_csv(std::ostream& os, const ContourScan& scan) {
  std::ostringstream line;
  line.precision(17);
  os << "l,b,abs_term1,abs_term2,abs_term3,abs_direct,reconstruction_error,envelope\n";
  for (const auto& r : scan.rows) {
    line.str("");
    line << r.l << ',' << r.terms.b << ',' << std::abs(r.terms.term1) << ',' << std::abs(r.terms.term2) << ','
         << std::abs(r.terms.term3) << ',' << std::abs(r.terms.direct) << ',' << r.terms.reconstruction_error()
         << ',' << r.envelope << '\n';
    os << line.str();
  }
}

}  // namespace correlab
