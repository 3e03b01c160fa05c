#pragma once

// End-to-end clustering check: fit the decay of ordinary correlators, then
// measure how canonical correlators sit under the envelope
//   g'(l) = max(g(l/4), e^{-mu l/2}).

#include "correlab/fit.hpp"
#include "correlab/lattice.hpp"
#include "correlab/operators.hpp"
#include "correlab/parallel.hpp"
#include "correlab/thermal.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace correlab {

struct TheoremPoint {
  int grid_l = 0;           // requested grid value
  double l = 0.0;           // d(X, Y) on the lattice
  double size_x = 0.0;      // |X|
  double size_y = 0.0;      // |Y|
  double norm_b = 0.0;
  double ordinary = 0.0;    // |<A,B>|
  double canonical = 0.0;   // |<<A,B>>|
  double g = 0.0;           // e^{-l/xi}, or 1 without a fit
  double g_prime = 0.0;
  double c_ratio = 0.0;         // ordinary / (||A|| ||B|| min(|X|,|Y|) g)
  double c_prime_ratio = 0.0;   // canonical / (||A|| ||B|| min(|X|^2,|Y|^2) g')
  double c_prime_ratio_xy = 0.0;  // canonical / (||A|| ||B|| |X| |Y| g')
};

struct TheoremReport {
  double beta = 0.0;
  double mu = 0.0;
  double norm_a = 0.0;
  std::vector<TheoremPoint> points;  // grid order
  std::optional<DecayFit> ordinary_fit;
  std::optional<DecayFit> canonical_fit;
  double xi = std::numeric_limits<double>::infinity();
  double c = 0.0;
  double c_prime = 0.0;
  double c_prime_xy = 0.0;

  /// max(4 xi, 2 / mu).
  double xi_prime_reference() const { return std::max(4.0 * xi, 2.0 / mu); }
  std::optional<double> xi_prime() const {
    if (canonical_fit) return canonical_fit->scale;
    return std::nullopt;
  }
  bool envelope_dominates() const {
    for (const auto& p : points) {
      const double gq = std::isfinite(xi) ? std::exp(-p.l / (4.0 * xi)) : 1.0;
      if (p.g_prime < gq || p.g_prime < std::exp(-mu * p.l / 2.0)) return false;
    }
    return true;
  }
  bool c_prime_finite() const { return std::isfinite(c_prime); }
};

struct TheoremOptions {
  double mu = 1.0;
  double fit_floor = 1e-15;
  std::size_t workers = 1;
};

/// A fixed; B placed by `b_at(l)` for each grid value.
inline TheoremReport theorem_check(const ThermalState& state, const Lattice& lattice, const LocalOperator& a,
                                   const std::function<LocalOperator(int)>& b_at, const std::vector<int>& l_grid,
                                   const TheoremOptions& opt = {}) {
  if (!(state.beta() > 0.0) || !std::isfinite(state.beta()))
    throw std::domain_error("theorem check needs 0 < beta < infinity");
  if (!(opt.mu > 0.0)) throw std::domain_error("mu must be positive");
  if (l_grid.empty()) throw std::invalid_argument("theorem check needs a non-empty l-grid");
  if (std::set<int>(l_grid.begin(), l_grid.end()).size() != l_grid.size())
    throw std::invalid_argument("l-grid contains duplicates");

  TheoremReport rep;
  rep.beta = state.beta();
  rep.mu = opt.mu;
  rep.norm_a = spectral_norm(a);
  const Matrix a_eig = correlab::to_eigenbasis(state.spectral(), embed(a, lattice).matrix());

  rep.points.resize(l_grid.size());
  std::vector<cplx> ordinary(l_grid.size()), canonical(l_grid.size());
  parallel_for(l_grid.size(), opt.workers, [&](std::size_t i) {
    const LocalOperator b = b_at(l_grid[i]);
    if (!lattice.contains(b.support()))
      throw std::invalid_argument("l = " + std::to_string(l_grid[i]) + " places B outside the lattice");
    const Matrix b_eig = correlab::to_eigenbasis(state.spectral(), embed(b, lattice).matrix());
    const KMSFunction f(state, a_eig, b_eig);
    auto& p = rep.points[i];
    p.grid_l = l_grid[i];
    p.l = lattice.distance(a.support(), b.support());
    p.size_x = static_cast<double>(a.support().size());
    p.size_y = static_cast<double>(b.support().size());
    p.norm_b = spectral_norm(b);
    ordinary[i] = f.ordinary();
    canonical[i] = f.canonical_closed_form();
  });

  std::vector<std::pair<double, double>> ord_pts, can_pts;
  for (std::size_t i = 0; i < rep.points.size(); ++i) {
    rep.points[i].ordinary = std::abs(ordinary[i]);
    rep.points[i].canonical = std::abs(canonical[i]);
    ord_pts.emplace_back(rep.points[i].l, rep.points[i].ordinary);
    can_pts.emplace_back(rep.points[i].l, rep.points[i].canonical);
  }
  const auto try_fit = [&](const auto& pts) -> std::optional<DecayFit> {
    try {
      return fit_decay(pts, DecayModel::exponential, opt.fit_floor);
    } catch (const std::domain_error&) {
      return std::nullopt;
    }
  };
  rep.ordinary_fit = try_fit(ord_pts);
  rep.canonical_fit = try_fit(can_pts);
  if (rep.ordinary_fit) rep.xi = rep.ordinary_fit->scale;

  for (auto& p : rep.points) {
    const double ab = rep.norm_a * p.norm_b;
    p.g = std::isfinite(rep.xi) ? std::exp(-p.l / rep.xi) : 1.0;
    const double g_quarter = std::isfinite(rep.xi) ? std::exp(-p.l / (4.0 * rep.xi)) : 1.0;
    p.g_prime = std::max(g_quarter, std::exp(-opt.mu * p.l / 2.0));
    p.c_ratio = p.ordinary / (ab * std::min(p.size_x, p.size_y) * p.g);
    const double min_sq = std::min(p.size_x * p.size_x, p.size_y * p.size_y);
    p.c_prime_ratio = p.canonical / (ab * min_sq * p.g_prime);
    p.c_prime_ratio_xy = p.canonical / (ab * p.size_x * p.size_y * p.g_prime);
    rep.c = std::max(rep.c, p.c_ratio);
    rep.c_prime = std::max(rep.c_prime, p.c_prime_ratio);
    rep.c_prime_xy = std::max(rep.c_prime_xy, p.c_prime_ratio_xy);
  }
  return rep;
}

inline void write_csv(std::ostream& os, const TheoremReport& rep) {
  std::ostringstream line;
  line.precision(17);
  os << "l,abs_ordinary,abs_canonical,g,g_prime,c_ratio,c_prime_ratio,c_prime_ratio_xy\n";
  for (const auto& p : rep.points) {
    line.str("");
    line << p.l << ',' << p.ordinary << ',' << p.canonical << ',' << p.g << ',' << p.g_prime << ',' << p.c_ratio
         << ',' << p.c_prime_ratio << ',' << p.c_prime_ratio_xy << '\n';
    os << line.str();
  }
}

}  // namespace correlab
