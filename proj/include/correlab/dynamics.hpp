#pragma once

// Heisenberg evolution tau_t(A) = e^{iHt} A e^{-iHt}, Lieb-Robinson commutator
// scans, local approximants A^r(t) = T_{B_r(X)}(tau_t(A)) and their time
// derivatives.

#include "correlab/hamiltonian.hpp"
#include "correlab/interaction.hpp"
#include "correlab/lattice.hpp"
#include "correlab/operators.hpp"
#include "correlab/parallel.hpp"
#include "correlab/spectral.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

namespace correlab {

enum class Continuation { forbid, allow };

class EvolutionContext {
 public:
  EvolutionContext(std::shared_ptr<const SpectralDecomposition> spectral, std::vector<int> dims)
      : spectral_(std::move(spectral)), dims_(std::move(dims)) {
    if (!spectral_) throw std::invalid_argument("evolution context needs a spectral decomposition");
    if (product_of_dims(dims_) != spectral_->source_dim)
      throw std::invalid_argument("window does not match the decomposition dimension");
  }

  static EvolutionContext from_hamiltonian(const EmbeddedOperator& h, const EigenOptions& opt = {}) {
    return {std::make_shared<const SpectralDecomposition>(eig_hermitian(h.matrix(), opt)), h.dims()};
  }

  const SpectralDecomposition& spectral() const { return *spectral_; }
  const std::shared_ptr<const SpectralDecomposition>& spectral_ptr() const { return spectral_; }
  const std::vector<int>& dims() const { return dims_; }

  Matrix to_eigenbasis(const EmbeddedOperator& a) const {
    check(a);
    return correlab::to_eigenbasis(*spectral_, a.matrix());
  }
  EmbeddedOperator from_eigenbasis(const Matrix& m) const {
    return {dims_, correlab::from_eigenbasis(*spectral_, m)};
  }

  /// (e^{izH} A e^{-izH}) in the eigenbasis: entries scaled by e^{iz(E_m - E_n)}.
  Matrix evolve_eigenbasis(const Matrix& a_eig, cplx z) const {
    const auto& e = spectral_->eigenvalues;
    const double e0 = spectral_->ground_energy();
    const Eigen::Index n = e.size();
    Vector left(n), right(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      left(k) = std::exp(kI * z * (e(k) - e0));
      right(k) = std::exp(-kI * z * (e(k) - e0));
    }
    return left.asDiagonal() * a_eig * right.asDiagonal();
  }

  /// i [H, tau_t(A)] in the eigenbasis, given tau_t(A) in the eigenbasis.
  Matrix time_derivative_eigenbasis(const Matrix& evolved_eig) const {
    const auto& e = spectral_->eigenvalues;
    Matrix out = evolved_eig;
    for (Eigen::Index col = 0; col < out.cols(); ++col)
      for (Eigen::Index row = 0; row < out.rows(); ++row) out(row, col) *= kI * (e(row) - e(col));
    return out;
  }

  EmbeddedOperator evolve(const EmbeddedOperator& a, double t) const {
    return from_eigenbasis(evolve_eigenbasis(to_eigenbasis(a), t));
  }

  /// Complex times are only meaningful inside thermal two-point functions;
  /// the caller must opt in.
  EmbeddedOperator evolve(const EmbeddedOperator& a, cplx z, Continuation flag) const {
    if (z.imag() != 0.0 && flag != Continuation::allow)
      throw std::domain_error("complex-time evolution requires Continuation::allow");
    return from_eigenbasis(evolve_eigenbasis(to_eigenbasis(a), z));
  }

 private:
  void check(const EmbeddedOperator& a) const {
    if (a.dims() != dims_) throw std::invalid_argument("operator window does not match the context");
  }

  std::shared_ptr<const SpectralDecomposition> spectral_;
  std::vector<int> dims_;
};

// ---------------------------------------------------------------------------
// Lieb-Robinson scan

struct LRRow {
  double t = 0.0;
  double l = 0.0;
  double lhs = 0.0;    // ||[B, tau_t(A)]||
  double shape = 0.0;  // ||A|| ||B|| min(|X|,|Y|) e^{-mu l} (e^{v|t|} - 1)
  double rhs = 0.0;    // c * shape
  bool violation = false;

  double ratio() const { return shape > 0.0 ? lhs / shape : (lhs > 0.0 ? std::numeric_limits<double>::infinity() : 0.0); }
};

struct LRMeasurement {
  std::vector<LRRow> rows;
  double c = 0.0;
  double mu = 0.0;
  double v = 0.0;
  double norm_a = 0.0;
  double norm_b = 0.0;
  /// Smallest c for which every row satisfies lhs <= c * shape.
  double empirical_c = 0.0;
  /// Absolute floor below which a commutator norm is treated as zero.
  double roundoff = 0.0;

  std::size_t violations() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.violation ? 1 : 0;
    return n;
  }
  std::size_t violations_at(double c_value) const {
    std::size_t n = 0;
    for (const auto& r : rows) n += exceeds(r.lhs, c_value * r.shape) ? 1 : 0;
    return n;
  }

  bool exceeds(double lhs, double rhs) const { return lhs > rhs * (1.0 + 1e-12) + roundoff; }
};

/// Floating-point noise of a norm computed through dense products in dimension `dim`.
inline double roundoff_floor(std::size_t dim, double scale) {
  return 64.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(dim) * scale;
}

/// lhs / shape; values at or below `floor` count as zero.
inline double empirical_constant(double lhs, double shape, double floor = 0.0) {
  if (lhs <= floor) return 0.0;
  if (shape > 0.0) return lhs / shape;
  return std::numeric_limits<double>::infinity();
}

inline LRMeasurement lr_commutator_scan(const EvolutionContext& ctx, const Lattice& lattice,
                                        const LocalOperator& a, const LocalOperator& b,
                                        std::span<const double> times, const LocalityCertificate& cert,
                                        double c, std::size_t workers = 1) {
  if (!(c > 0.0)) throw std::invalid_argument("LR constant c must be positive");
  const double l = lattice.distance(a.support(), b.support());
  if (!(l > 0.0)) throw std::invalid_argument("LR scan requires disjoint supports (l > 0)");
  LRMeasurement out;
  out.c = c;
  out.mu = cert.mu;
  out.v = cert.v;
  out.norm_a = spectral_norm(a);
  out.norm_b = spectral_norm(b);
  out.roundoff = roundoff_floor(ctx.spectral().source_dim, out.norm_a * out.norm_b);
  const double size_factor = static_cast<double>(std::min(a.support().size(), b.support().size()));

  const Matrix a_eig = ctx.to_eigenbasis(embed(a, lattice));
  const Matrix b_eig = ctx.to_eigenbasis(embed(b, lattice));
  out.rows.resize(times.size());
  parallel_for(times.size(), workers, [&](std::size_t i) {
    const double t = times[i];
    const Matrix evolved = ctx.evolve_eigenbasis(a_eig, t);
    const Matrix comm = b_eig * evolved - evolved * b_eig;
    LRRow row;
    row.t = t;
    row.l = l;
    row.lhs = spectral_norm(comm);
    row.shape = out.norm_a * out.norm_b * size_factor * std::exp(-cert.mu * l) * std::expm1(cert.v * std::abs(t));
    row.rhs = c * row.shape;
    row.violation = out.exceeds(row.lhs, row.rhs);
    out.rows[i] = row;
  });
  for (const auto& r : out.rows)
    out.empirical_c = std::max(out.empirical_c, empirical_constant(r.lhs, r.shape, out.roundoff));
  return out;
}

inline void write_csv(std::ostream& os, const LRMeasurement& m) {
  std::ostringstream line;
  line.precision(17);
  os << "t,l,lhs,rhs,ratio,violation\n";
  for (const auto& r : m.rows) {
    line.str("");
    line << r.t << ',' << r.l << ',' << r.lhs << ',' << r.rhs << ',' << r.ratio() << ','
         << (r.violation ? 1 : 0) << '\n';
    os << line.str();
  }
}

// ---------------------------------------------------------------------------
// Local approximants

/// A^r(t) = T_{B_r(X)}(tau_t(A)).
inline EmbeddedOperator local_approximant(const EvolutionContext& ctx, const Lattice& lattice,
                                          const LocalOperator& a, double r, double t) {
  if (r < 0.0) throw std::domain_error("approximant radius must be >= 0");
  const SiteSet region = ball(lattice, a.support(), r);
  return conditional_expectation(ctx.evolve(embed(a, lattice), t), region);
}

/// d/dt A^r(t) = T_{B_r(X)}(i [H, tau_t(A)]), evaluated exactly in the eigenbasis.
inline EmbeddedOperator approximant_derivative(const EvolutionContext& ctx, const Lattice& lattice,
                                               const LocalOperator& a, double r, double t) {
  if (r < 0.0) throw std::domain_error("approximant radius must be >= 0");
  const SiteSet region = ball(lattice, a.support(), r);
  const Matrix evolved = ctx.evolve_eigenbasis(ctx.to_eigenbasis(embed(a, lattice)), t);
  return conditional_expectation(ctx.from_eigenbasis(ctx.time_derivative_eigenbasis(evolved)), region);
}

struct DerivativeBound {
  double on_support = 0.0;   // v |Y| ||B||
  double off_support = 0.0;  // v ||B|| (e^{v eps} - 1) sum_r e^{-mu r} D(r)
  double shell_sum = 0.0;    // sum_r e^{-mu r} D(r) over the window
  double total() const { return on_support + off_support; }
};

/// Upper bound on ||d/dt B^r(t)|| for |t| < eps assembled from the interaction
/// certificate and the shell counts around Y.
inline DerivativeBound derivative_bound(const Lattice& lattice, const SiteSet& Y, double norm_b,
                                        double mu, double v, double eps) {
  DerivativeBound out;
  const int r_max = static_cast<int>(std::ceil(lattice.max_distance()));
  for (int r = 1; r <= r_max; ++r)
    out.shell_sum += std::exp(-mu * r) * static_cast<double>(shell_count(lattice, Y, r));
  out.on_support = v * static_cast<double>(Y.size()) * norm_b;
  out.off_support = v * norm_b * std::expm1(v * eps) * out.shell_sum;
  return out;
}

struct LocalityRow {
  double t = 0.0;
  double r = 0.0;
  double error = 0.0;        // ||tau_t(A) - A^r(t)||
  double approx_norm = 0.0;  // ||A^r(t)||
  double shape = 0.0;        // ||A|| |X|^p e^{-k mu r} (e^{v|t|} - 1)
  double leak = 0.0;         // max ||[A^r(t), P_y]|| over single-site Paulis outside the ball
};

struct LocalityScan {
  std::vector<LocalityRow> rows;  // ordered by (t, r)
  double mu = 0.0;
  double v = 0.0;
  double exponent_multiplier = 1.0;
  double norm_a = 0.0;
  double empirical_c = 0.0;
  double roundoff = 0.0;

  /// Error non-increasing in r at each t, within `slack`.
  bool monotone_in_r(double slack = 1e-12) const {
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (rows[i].t == rows[i - 1].t && rows[i].r > rows[i - 1].r && rows[i].error > rows[i - 1].error + slack)
        return false;
    return true;
  }
};

struct LocalityScanOptions {
  double exponent_multiplier = 1.0;  // 1: e^{-mu r}; 2: e^{-2 mu r}
  bool include_support_size = false;  // multiply the shape by |X|
  bool measure_leak = true;
  std::size_t workers = 1;
};

inline LocalityScan locality_scan(const EvolutionContext& ctx, const Lattice& lattice, const LocalOperator& a,
                                  std::span<const double> radii, std::span<const double> times,
                                  const LocalityCertificate& cert, const LocalityScanOptions& opt = {}) {
  LocalityScan out;
  out.mu = cert.mu;
  out.v = cert.v;
  out.exponent_multiplier = opt.exponent_multiplier;
  out.norm_a = spectral_norm(a);
  out.roundoff = roundoff_floor(ctx.spectral().source_dim, out.norm_a);
  const double size_factor = opt.include_support_size ? static_cast<double>(a.support().size()) : 1.0;
  const Matrix a_eig = ctx.to_eigenbasis(embed(a, lattice));
  std::vector<double> rs(radii.begin(), radii.end());
  std::sort(rs.begin(), rs.end());
  out.rows.resize(times.size() * rs.size());

  parallel_for(times.size(), opt.workers, [&](std::size_t ti) {
    const double t = times[ti];
    const EmbeddedOperator evolved = ctx.from_eigenbasis(ctx.evolve_eigenbasis(a_eig, t));
    for (std::size_t ri = 0; ri < rs.size(); ++ri) {
      const SiteSet region = ball(lattice, a.support(), rs[ri]);
      const EmbeddedOperator approx = conditional_expectation(evolved, region);
      LocalityRow row;
      row.t = t;
      row.r = rs[ri];
      row.error = spectral_norm((evolved - approx).matrix());
      row.approx_norm = spectral_norm(approx.matrix());
      row.shape = out.norm_a * size_factor * std::exp(-opt.exponent_multiplier * cert.mu * rs[ri]) *
                  std::expm1(cert.v * std::abs(t));
      if (opt.measure_leak) {
        for (std::size_t y = 0; y < lattice.size(); ++y) {
          if (std::binary_search(region.begin(), region.end(), static_cast<int>(y))) continue;
          if (lattice.local_dim(static_cast<int>(y)) != 2) continue;
          for (char p : {'X', 'Y', 'Z'}) {
            const Matrix comm = apply_local(pauli_on(p, static_cast<int>(y)), ctx.dims(), approx.matrix()) -
                                apply_local_right(approx.matrix(), pauli_on(p, static_cast<int>(y)), ctx.dims());
            row.leak = std::max(row.leak, comm.norm());
          }
        }
      }
      out.rows[ti * rs.size() + ri] = row;
    }
  });
  for (const auto& r : out.rows)
    out.empirical_c = std::max(out.empirical_c, empirical_constant(r.error, r.shape, out.roundoff));
  return out;
}

inline void write_csv(std::ostream& os, const LocalityScan& s) {
  std::ostringstream line;
  line.precision(17);
  os << "t,r,error,approx_norm,shape,ratio,leak\n";
  for (const auto& r : s.rows) {
    line.str("");
    line << r.t << ',' << r.r << ',' << r.error << ',' << r.approx_norm << ',' << r.shape << ','
         << empirical_constant(r.error, r.shape, s.roundoff) << ',' << r.leak << '\n';
    os << line.str();
  }
}

}  // namespace correlab
