#pragma once

// Hermitian eigendecomposition and matrix functions.
//
// Small problems use a cyclic complex Jacobi sweep; larger ones fall through
// to Householder tridiagonalisation + implicit QL (Eigen). Real symmetric
// input is solved in real arithmetic and the eigenvectors kept real so that
// basis changes can run as real GEMMs.

#include "correlab/types.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace correlab {

struct SpectralDecomposition {
  RealVector eigenvalues;       // ascending
  Matrix eigenvectors;          // columns
  std::size_t source_dim = 0;
  std::optional<RealMatrix> real_eigenvectors;  // present when V is real

  double ground_energy() const { return eigenvalues.size() ? eigenvalues(0) : 0.0; }
  double spectral_width() const {
    return eigenvalues.size() ? eigenvalues(eigenvalues.size() - 1) - eigenvalues(0) : 0.0;
  }
};

enum class EigenMethod { automatic, jacobi, tridiagonal };

struct EigenOptions {
  EigenMethod method = EigenMethod::automatic;
  std::size_t jacobi_max_dim = 256;
  double hermitian_tol = 1e-10;
  double offdiag_tol = 1e-12;  // relative to ||H||_F
  int max_sweeps = 30;
};

namespace detail {

struct JacobiResult {
  RealVector values;
  Matrix vectors;
  int sweeps = 0;
};

inline double offdiag_norm(const Matrix& a) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (i != j) s += std::norm(a(i, j));
  return std::sqrt(s);
}

/// Cyclic Jacobi on a Hermitian matrix. Each (p,q) rotation first removes
/// the phase of a_pq, then applies the real symmetric Jacobi rotation.
inline JacobiResult jacobi_hermitian(Matrix a, bool want_vectors, double offdiag_tol,
                                     int max_sweeps) {
  const Eigen::Index n = a.rows();
  JacobiResult out;
  out.vectors = want_vectors ? Matrix::Identity(n, n) : Matrix();
  const double scale = a.norm();
  const double threshold = offdiag_tol * scale;
  const double skip = n > 1 ? threshold / static_cast<double>(n) : 0.0;

  for (int sweep = 0; sweep < max_sweeps && n > 1; ++sweep) {
    if (offdiag_norm(a) <= threshold) break;
    out.sweeps = sweep + 1;
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const cplx apq = a(p, q);
        const double mag = std::abs(apq);
        if (mag <= skip || mag == 0.0) continue;
        const cplx phase = apq / mag;  // e^{i phi}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double theta = (aqq - app) / (2.0 * mag);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        const cplx ph_conj = std::conj(phase);

        // A <- A G, with G_pp = c, G_pq = s, G_qp = -s e^{-i phi}, G_qq = c e^{-i phi}
        for (Eigen::Index k = 0; k < n; ++k) {
          const cplx akp = a(k, p);
          const cplx akq = a(k, q);
          a(k, p) = c * akp - s * ph_conj * akq;
          a(k, q) = s * akp + c * ph_conj * akq;
        }
        // A <- G^dagger A
        for (Eigen::Index k = 0; k < n; ++k) {
          const cplx apk = a(p, k);
          const cplx aqk = a(q, k);
          a(p, k) = c * apk - s * phase * aqk;
          a(q, k) = s * apk + c * phase * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = a(p, p).real();
        a(q, q) = a(q, q).real();
        if (want_vectors) {
          for (Eigen::Index k = 0; k < n; ++k) {
            const cplx vkp = out.vectors(k, p);
            const cplx vkq = out.vectors(k, q);
            out.vectors(k, p) = c * vkp - s * ph_conj * vkq;
            out.vectors(k, q) = s * vkp + c * ph_conj * vkq;
          }
        }
      }
    }
  }
  if (n > 1 && offdiag_norm(a) > threshold)
    throw std::runtime_error("Jacobi eigensolver did not converge in " +
                             std::to_string(max_sweeps) + " sweeps");
  out.values = a.diagonal().real();
  return out;
}

inline std::vector<Eigen::Index> ascending_order(const RealVector& values) {
  std::vector<Eigen::Index> order(values.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return values(i) < values(j); });
  return order;
}

inline void check_hermitian(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) throw std::invalid_argument("matrix is not square");
  const double defect = hermiticity_defect(m);
  if (defect > tol) {
    std::ostringstream msg;
    msg << "matrix is not Hermitian: ||m - m^dagger|| / ||m|| = " << defect;
    throw std::invalid_argument(msg.str());
  }
}

inline bool use_jacobi(const EigenOptions& opt, Eigen::Index n) {
  return opt.method == EigenMethod::jacobi ||
         (opt.method == EigenMethod::automatic && static_cast<std::size_t>(n) <= opt.jacobi_max_dim);
}

}  // namespace detail

/// Eigendecomposition of a Hermitian matrix. The input is symmetrised before
/// solving; a Hermiticity defect beyond the tolerance is an error.
inline SpectralDecomposition eig_hermitian(const Matrix& m, const EigenOptions& opt = {}) {
  detail::check_hermitian(m, opt.hermitian_tol);
  const Matrix h = 0.5 * (m + m.adjoint());
  const Eigen::Index n = h.rows();
  SpectralDecomposition dec;
  dec.source_dim = static_cast<std::size_t>(n);

  if (detail::use_jacobi(opt, n)) {
    auto res = detail::jacobi_hermitian(h, true, opt.offdiag_tol, opt.max_sweeps);
    const auto order = detail::ascending_order(res.values);
    dec.eigenvalues.resize(n);
    dec.eigenvectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
      dec.eigenvalues(k) = res.values(order[k]);
      dec.eigenvectors.col(k) = res.vectors.col(order[k]);
    }
    if (has_zero_imag(dec.eigenvectors)) dec.real_eigenvectors = dec.eigenvectors.real();
    return dec;
  }

  if (has_zero_imag(h)) {
    Eigen::SelfAdjointEigenSolver<RealMatrix> solver(h.real());
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
    dec.eigenvalues = solver.eigenvalues();
    dec.real_eigenvectors = solver.eigenvectors();
    dec.eigenvectors = dec.real_eigenvectors->cast<cplx>();
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
    if (solver.info() != Eigen::Success) throw std::runtime_error("eigensolver failed");
    dec.eigenvalues = solver.eigenvalues();
    dec.eigenvectors = solver.eigenvectors();
  }
  return dec;
}

/// Eigenvalues only (ascending). Same routing as eig_hermitian.
inline RealVector eigenvalues_hermitian(const Matrix& m, const EigenOptions& opt = {}) {
  detail::check_hermitian(m, opt.hermitian_tol);
  const Matrix h = 0.5 * (m + m.adjoint());
  RealVector values;
  if (detail::use_jacobi(opt, h.rows())) {
    values = detail::jacobi_hermitian(h, false, opt.offdiag_tol, opt.max_sweeps).values;
    std::sort(values.data(), values.data() + values.size());
  } else if (has_zero_imag(h)) {
    Eigen::SelfAdjointEigenSolver<RealMatrix> solver(h.real(), Eigen::EigenvaluesOnly);
    values = solver.eigenvalues();
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h, Eigen::EigenvaluesOnly);
    values = solver.eigenvalues();
  }
  return values;
}

namespace detail {

// Real matrix times complex matrix as two real GEMMs.
inline Matrix real_times(const RealMatrix& r, const Matrix& m) {
  const RealMatrix re = r * m.real();
  if (has_zero_imag(m)) return re.cast<cplx>();
  const RealMatrix im = r * m.imag();
  Matrix out(re.rows(), re.cols());
  out.real() = re;
  out.imag() = im;
  return out;
}

inline Matrix times_real(const Matrix& m, const RealMatrix& r) {
  const RealMatrix re = m.real() * r;
  if (has_zero_imag(m)) return re.cast<cplx>();
  const RealMatrix im = m.imag() * r;
  Matrix out(re.rows(), re.cols());
  out.real() = re;
  out.imag() = im;
  return out;
}

}  // namespace detail

/// V^dagger M V.
inline Matrix to_eigenbasis(const SpectralDecomposition& dec, const Matrix& m) {
  if (static_cast<std::size_t>(m.rows()) != dec.source_dim || m.rows() != m.cols())
    throw std::invalid_argument("operator dimension does not match the decomposition");
  if (dec.real_eigenvectors) {
    const RealMatrix& v = *dec.real_eigenvectors;
    if (is_diagonal(m)) {
      Matrix dv = v.cast<cplx>();
      for (Eigen::Index i = 0; i < m.rows(); ++i) dv.row(i) *= m(i, i);
      return detail::real_times(v.transpose(), dv);
    }
    return detail::times_real(detail::real_times(v.transpose(), m), v);
  }
  const Matrix& v = dec.eigenvectors;
  if (is_diagonal(m)) return v.adjoint() * (m.diagonal().asDiagonal() * v);
  return v.adjoint() * m * v;
}

/// V M V^dagger.
inline Matrix from_eigenbasis(const SpectralDecomposition& dec, const Matrix& m) {
  if (static_cast<std::size_t>(m.rows()) != dec.source_dim || m.rows() != m.cols())
    throw std::invalid_argument("operator dimension does not match the decomposition");
  if (dec.real_eigenvectors) {
    const RealMatrix& v = *dec.real_eigenvectors;
    return detail::times_real(detail::real_times(v, m), v.transpose());
  }
  return dec.eigenvectors * m * dec.eigenvectors.adjoint();
}

/// V diag(f(E)) V^dagger. A non-finite f value is an error naming the eigenvalue.
template <class F>
Matrix matrix_function(const SpectralDecomposition& dec, F&& f) {
  const Eigen::Index n = dec.eigenvalues.size();
  Vector fv(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const cplx value = static_cast<cplx>(f(dec.eigenvalues(k)));
    if (!std::isfinite(value.real()) || !std::isfinite(value.imag())) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "matrix function is not finite at eigenvalue " << dec.eigenvalues(k) << " (index "
          << k << ")";
      throw std::overflow_error(msg.str());
    }
    fv(k) = value;
  }
  if (dec.real_eigenvectors) {
    const RealMatrix& v = *dec.real_eigenvectors;
    Matrix scaled = v.cast<cplx>();
    for (Eigen::Index k = 0; k < n; ++k) scaled.col(k) *= fv(k);
    return detail::times_real(scaled, v.transpose());
  }
  return dec.eigenvectors * fv.asDiagonal() * dec.eigenvectors.adjoint();
}

inline void write_spectrum_csv(std::ostream& os, const SpectralDecomposition& dec) {
  os << "index,eigenvalue\n";
  std::ostringstream line;
  line.precision(17);
  for (Eigen::Index k = 0; k < dec.eigenvalues.size(); ++k) {
    line.str("");
    line << k << ',' << dec.eigenvalues(k) << '\n';
    os << line.str();
  }
}

}  // namespace correlab
