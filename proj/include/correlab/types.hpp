#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace correlab {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr cplx kI{0.0, 1.0};
inline constexpr double kPi = 3.14159265358979323846;

/// Sorted, duplicate-free list of site indices.
using SiteSet = std::vector<int>;

inline SiteSet normalize_sites(SiteSet sites) {
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  return sites;
}

inline bool is_sorted_unique(const SiteSet& sites) {
  return std::adjacent_find(sites.begin(), sites.end(),
                            [](int a, int b) { return a >= b; }) == sites.end();
}

inline bool subset_of(const SiteSet& inner, const SiteSet& outer) {
  return std::includes(outer.begin(), outer.end(), inner.begin(), inner.end());
}

inline std::string format_sites(const SiteSet& sites) {
  std::string out = "{";
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(sites[i]);
  }
  return out + "}";
}

/// Frobenius norm of m - m^dagger relative to the Frobenius norm of m.
inline double hermiticity_defect(const Matrix& m) {
  const double scale = m.norm();
  if (scale == 0.0) return 0.0;
  return (m - m.adjoint()).norm() / scale;
}

inline bool is_hermitian(const Matrix& m, double rel_tol = 1e-12) {
  return m.rows() == m.cols() && hermiticity_defect(m) <= rel_tol;
}

inline bool is_anti_hermitian(const Matrix& m, double rel_tol = 1e-12) {
  const double scale = m.norm();
  if (scale == 0.0) return true;
  return m.rows() == m.cols() && (m + m.adjoint()).norm() <= rel_tol * scale;
}

inline bool has_zero_imag(const Matrix& m) {
  return m.size() == 0 || m.imag().cwiseAbs().maxCoeff() == 0.0;
}

inline bool is_diagonal(const Matrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (i != j && m(i, j) != cplx{}) return false;
  return true;
}

inline std::size_t product_of_dims(const std::vector<int>& dims) {
  std::size_t p = 1;
  for (int d : dims) p *= static_cast<std::size_t>(d);
  return p;
}

}  // namespace correlab
