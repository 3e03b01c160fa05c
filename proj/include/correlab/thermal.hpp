#pragma once

// Finite-volume Gibbs state, the KMS two-point function F_{A,B}(z) on the
// strip 0 <= Im z <= beta, and the ordinary and Kubo canonical correlators.
//
// All Gibbs weights use energies shifted by the ground energy.

#include "correlab/operators.hpp"
#include "correlab/quadrature.hpp"
#include "correlab/spectral.hpp"

#include <cmath>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace correlab {

class ThermalState {
 public:
  ThermalState(std::shared_ptr<const SpectralDecomposition> spectral, double beta)
      : spectral_(std::move(spectral)), beta_(beta) {
    if (!spectral_) throw std::invalid_argument("thermal state needs a spectral decomposition");
    if (!(beta >= 0.0) || !std::isfinite(beta))
      throw std::domain_error("beta must be finite and >= 0");
    const auto& e = spectral_->eigenvalues;
    const Eigen::Index n = e.size();
    shifted_ = e.array() - spectral_->ground_energy();
    boltzmann_.resize(n);
    for (Eigen::Index m = 0; m < n; ++m) boltzmann_(m) = std::exp(-beta_ * shifted_(m));
    const double z = boltzmann_.sum();
    log_partition_ = std::log(z);
    inv_partition_ = 1.0 / z;
    probabilities_ = boltzmann_ * inv_partition_;
    double emax = 0.0;
    for (Eigen::Index m = 0; m < n; ++m) emax = std::max(emax, std::abs(e(m)));
    degeneracy_threshold_ = 1e-10 * emax;
  }

  double beta() const { return beta_; }
  const SpectralDecomposition& spectral() const { return *spectral_; }
  const std::shared_ptr<const SpectralDecomposition>& spectral_ptr() const { return spectral_; }
  std::size_t dim() const { return spectral_->source_dim; }

  /// log Z with Z = sum_m exp(-beta (E_m - E_min)).
  double log_partition() const { return log_partition_; }
  const RealVector& shifted_energies() const { return shifted_; }
  const RealVector& probabilities() const { return probabilities_; }
  /// exp(-beta (E_m - E_min)), unnormalised.
  const RealVector& boltzmann() const { return boltzmann_; }
  double inv_partition() const { return inv_partition_; }
  double degeneracy_threshold() const { return degeneracy_threshold_; }

  Matrix to_eigenbasis(const EmbeddedOperator& a) const {
    check_dim(a);
    return correlab::to_eigenbasis(*spectral_, a.matrix());
  }

  void check_dim(const EmbeddedOperator& a) const {
    if (static_cast<std::size_t>(a.dim()) != dim())
      throw std::invalid_argument("operator dimension " + std::to_string(a.dim()) +
                                  " does not match the state dimension " + std::to_string(dim()));
  }

 private:
  std::shared_ptr<const SpectralDecomposition> spectral_;
  double beta_;
  RealVector shifted_;
  RealVector boltzmann_;
  RealVector probabilities_;
  double log_partition_ = 0.0;
  double inv_partition_ = 1.0;
  double degeneracy_threshold_ = 0.0;
};

namespace detail {

/// sum_m p_m <v_m| L^dagger R |v_m> = phi(L^dagger R), one GEMM per factor.
inline cplx thermal_bilinear(const ThermalState& state, const Matrix& left, const Matrix& right) {
  const auto& dec = state.spectral();
  const auto apply = [&](const Matrix& op) -> Matrix {
    if (is_diagonal(op)) return op.diagonal().asDiagonal() * dec.eigenvectors;
    if (dec.real_eigenvectors) return detail::times_real(op, *dec.real_eigenvectors);
    return op * dec.eigenvectors;
  };
  const Matrix rv = apply(right);
  const Matrix lv = (&left == &right) ? rv : apply(left);
  const auto& p = state.probabilities();
  cplx sum = 0.0;
  for (Eigen::Index m = 0; m < rv.cols(); ++m)
    if (p(m) != 0.0) sum += p(m) * lv.col(m).dot(rv.col(m));
  return sum;
}

}  // namespace detail

/// phi(A) = tr(rho A).
inline cplx expectation(const ThermalState& state, const EmbeddedOperator& a) {
  state.check_dim(a);
  const auto& dec = state.spectral();
  const auto& p = state.probabilities();
  const Matrix& m = a.matrix();
  cplx sum = 0.0;
  if (is_diagonal(m)) {
    const Vector d = m.diagonal();
    for (Eigen::Index k = 0; k < dec.eigenvectors.cols(); ++k) {
      if (p(k) == 0.0) continue;
      sum += p(k) * (dec.eigenvectors.col(k).cwiseAbs2().cast<cplx>().cwiseProduct(d)).sum();
    }
    return sum;
  }
  const Matrix av = dec.real_eigenvectors ? detail::times_real(m, *dec.real_eigenvectors)
                                          : Matrix(m * dec.eigenvectors);
  for (Eigen::Index k = 0; k < av.cols(); ++k)
    if (p(k) != 0.0) sum += p(k) * dec.eigenvectors.col(k).dot(av.col(k));
  return sum;
}

/// phi(AB) - phi(A) phi(B).
inline cplx ordinary_correlator(const ThermalState& state, const EmbeddedOperator& a,
                                const EmbeddedOperator& b) {
  state.check_dim(a);
  state.check_dim(b);
  const Matrix a_dag = a.matrix().adjoint();
  const cplx ab = detail::thermal_bilinear(state, a_dag, b.matrix());
  return ab - expectation(state, a) * expectation(state, b);
}

struct QuadratureOptions {
  std::size_t initial_nodes = 64;
  std::size_t max_nodes = 512;
  double tolerance = 1e-10;
};

enum class CanonicalMethod { closed_form, quadrature };

/// F_{A,B}(z) = (1/Z) sum_{mn} e^{-beta E_m} A_mn B_nm e^{iz(E_n - E_m)} for an
/// (A, B) pair already in the energy eigenbasis. Only the elementwise product
/// A_mn B_nm and the diagonals are retained.
class KMSFunction {
 public:
  KMSFunction(const ThermalState& state, const Matrix& a_eig, const Matrix& b_eig)
      : state_(state) {
    const Eigen::Index n = static_cast<Eigen::Index>(state.dim());
    if (a_eig.rows() != n || b_eig.rows() != n || a_eig.cols() != n || b_eig.cols() != n)
      throw std::invalid_argument("eigenbasis operators do not match the state dimension");
    product_ = a_eig.cwiseProduct(b_eig.transpose());
    const auto& p = state.probabilities();
    phi_a_ = (p.cast<cplx>().cwiseProduct(a_eig.diagonal())).sum();
    phi_b_ = (p.cast<cplx>().cwiseProduct(b_eig.diagonal())).sum();
  }

  KMSFunction(const ThermalState& state, const EmbeddedOperator& a, const EmbeddedOperator& b)
      : KMSFunction(state, state.to_eigenbasis(a), state.to_eigenbasis(b)) {}

  double beta() const { return state_.beta(); }
  cplx phi_a() const { return phi_a_; }
  cplx phi_b() const { return phi_b_; }

  /// F(z) for 0 <= Im z <= beta; outside the strip is a domain error.
  cplx operator()(cplx z) const {
    const double slack = 1e-12 * std::max(1.0, beta());
    if (z.imag() < -slack || z.imag() > beta() + slack) {
      std::ostringstream msg;
      msg << "z = " << z << " lies outside the strip 0 <= Im z <= " << beta();
      throw std::domain_error(msg.str());
    }
    return continued(z);
  }

  /// Entire continuation of F (finite dimension). Unbounded off the strip.
  cplx continued(cplx z) const {
    const double x = z.real();
    const double y = z.imag();
    const auto& e = state_.shifted_energies();
    const Eigen::Index n = e.size();
    Vector u(n), v(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      u(k) = std::exp(cplx(-(beta() - y) * e(k), -x * e(k)));
      v(k) = std::exp(cplx(-y * e(k), x * e(k)));
    }
    return state_.inv_partition() * (u.transpose() * (product_ * v)).value();
  }

  /// F(t) = phi(A tau_t(B)).
  cplx on_real_line(double t) const { return continued(cplx(t, 0.0)); }
  /// F(t + i beta) = phi(tau_t(B) A).
  cplx on_upper_line(double t) const { return continued(cplx(t, beta())); }

  /// <A, B> = phi(AB) - phi(A) phi(B).
  cplx ordinary() const { return continued(0.0) - phi_a_ * phi_b_; }

  /// (1/Z) sum A_mn B_nm K(E_m, E_n) - phi(A) phi(B) with the Duhamel kernel
  /// K = (e^{-beta E_n} - e^{-beta E_m}) / (beta (E_m - E_n)), taken as
  /// e^{-beta E_m} below the degeneracy threshold.
  cplx canonical_closed_form() const {
    const auto& e = state_.shifted_energies();
    const auto& w = state_.boltzmann();
    const double beta = state_.beta();
    const double deg = state_.degeneracy_threshold();
    const Eigen::Index n = e.size();
    cplx sum = 0.0;
    for (Eigen::Index col = 0; col < n; ++col) {
      for (Eigen::Index row = 0; row < n; ++row) {
        const double gap = std::abs(e(row) - e(col));
        double k;
        if (gap <= deg || beta == 0.0) {
          k = w(row);
        } else {
          const double x = beta * gap;
          k = std::max(w(row), w(col)) * (-std::expm1(-x) / x);
        }
        sum += product_(row, col) * k;
      }
    }
    return state_.inv_partition() * sum - phi_a_ * phi_b_;
  }

  /// (1/beta) int_0^beta F(ib) db - phi(A) phi(B), Gauss-Legendre with node
  /// doubling.
  cplx canonical_quadrature(const QuadratureOptions& opt = {}) const {
    if (!(beta() > 0.0)) throw std::domain_error("quadrature canonical correlator requires beta > 0");
    const auto integrand = [&](double b) { return continued(cplx(0.0, b)); };
    std::size_t nodes = opt.initial_nodes;
    cplx previous = integrate(integrand, 0.0, beta(), gauss_legendre(nodes));
    while (nodes < opt.max_nodes) {
      nodes *= 2;
      const cplx next = integrate(integrand, 0.0, beta(), gauss_legendre(nodes));
      const bool done = std::abs(next - previous) < opt.tolerance;
      previous = next;
      if (done) break;
    }
    return previous / beta() - phi_a_ * phi_b_;
  }

 private:
  ThermalState state_;
  Matrix product_;  // A_mn B_nm
  cplx phi_a_{};
  cplx phi_b_{};
};

inline cplx kms_eval(const ThermalState& state, const EmbeddedOperator& a, const EmbeddedOperator& b, cplx z) {
  const double slack = 1e-12 * std::max(1.0, state.beta());
  if (z.imag() < -slack || z.imag() > state.beta() + slack)
    throw std::domain_error("kms_eval: Im z must lie in [0, beta]");
  return KMSFunction(state, a, b)(z);
}

inline cplx canonical_correlator(const ThermalState& state, const EmbeddedOperator& a,
                                 const EmbeddedOperator& b,
                                 CanonicalMethod method = CanonicalMethod::closed_form,
                                 const QuadratureOptions& opt = {}) {
  if (method == CanonicalMethod::quadrature && !(state.beta() > 0.0))
    throw std::domain_error("quadrature canonical correlator requires beta > 0");
  const KMSFunction f(state, a, b);
  return method == CanonicalMethod::closed_form ? f.canonical_closed_form() : f.canonical_quadrature(opt);
}

}  // namespace correlab
