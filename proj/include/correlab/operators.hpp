#pragma once

// Local operators with tracked support, embedding into the window, norms,
// commutators and the Haar twirl onto a region.
//
// Tensor-order convention: sites ascending, the first site is the slowest
// varying index. Both LocalOperator (over its support) and EmbeddedOperator
// (over the whole window) use it.

#include "correlab/lattice.hpp"
#include "correlab/spectral.hpp"
#include "correlab/types.hpp"

#include <Eigen/QR>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace correlab {

/// A matrix acting on the tensor product over its (sorted) support.
class LocalOperator {
 public:
  LocalOperator(SiteSet support, Matrix matrix)
      : support_(std::move(support)), matrix_(std::move(matrix)) {
    if (!is_sorted_unique(support_))
      throw std::invalid_argument("operator support must be strictly ascending: " +
                                  format_sites(support_));
    if (matrix_.rows() != matrix_.cols()) throw std::invalid_argument("operator is not square");
  }

  const SiteSet& support() const { return support_; }
  const Matrix& matrix() const { return matrix_; }

 private:
  SiteSet support_;
  Matrix matrix_;
};

/// An operator on the full window Lambda.
class EmbeddedOperator {
 public:
  EmbeddedOperator(std::vector<int> dims, Matrix matrix)
      : dims_(std::move(dims)), matrix_(std::move(matrix)) {
    const auto dim = static_cast<Eigen::Index>(product_of_dims(dims_));
    if (matrix_.rows() != dim || matrix_.cols() != dim)
      throw std::invalid_argument("embedded operator dimension " + std::to_string(matrix_.rows()) +
                                  " does not match window dimension " + std::to_string(dim));
  }

  static EmbeddedOperator identity(const std::vector<int>& dims) {
    const auto dim = static_cast<Eigen::Index>(product_of_dims(dims));
    return EmbeddedOperator(dims, Matrix::Identity(dim, dim));
  }

  const std::vector<int>& dims() const { return dims_; }
  const Matrix& matrix() const { return matrix_; }
  Eigen::Index dim() const { return matrix_.rows(); }

  EmbeddedOperator adjoint() const { return {dims_, matrix_.adjoint()}; }

 private:
  std::vector<int> dims_;
  Matrix matrix_;
};

inline void require_same_window(const EmbeddedOperator& a, const EmbeddedOperator& b) {
  if (a.dims() != b.dims()) throw std::invalid_argument("operators live on different windows");
}

inline EmbeddedOperator operator+(const EmbeddedOperator& a, const EmbeddedOperator& b) {
  require_same_window(a, b);
  return {a.dims(), a.matrix() + b.matrix()};
}
inline EmbeddedOperator operator-(const EmbeddedOperator& a, const EmbeddedOperator& b) {
  require_same_window(a, b);
  return {a.dims(), a.matrix() - b.matrix()};
}
inline EmbeddedOperator operator*(const EmbeddedOperator& a, const EmbeddedOperator& b) {
  require_same_window(a, b);
  return {a.dims(), a.matrix() * b.matrix()};
}
inline EmbeddedOperator operator*(cplx s, const EmbeddedOperator& a) { return {a.dims(), s * a.matrix()}; }

namespace detail {

/// Index bookkeeping splitting the window into a region and its complement.
/// fibers[c * region_dim + r] is the full index with complement configuration
/// c and region configuration r.
struct RegionSplit {
  std::size_t region_dim = 1;
  std::size_t complement_dim = 1;
  std::vector<Eigen::Index> fibers;
};

inline RegionSplit split_window(const std::vector<int>& dims, const SiteSet& region) {
  const std::size_t n = dims.size();
  for (int x : region)
    if (x < 0 || static_cast<std::size_t>(x) >= n)
      throw std::invalid_argument("region " + format_sites(region) + " is not inside the window");
  std::vector<bool> in_region(n, false);
  for (int x : region) in_region[x] = true;

  std::vector<std::size_t> stride(n);
  std::size_t s = 1;
  for (std::size_t k = n; k-- > 0;) {
    stride[k] = s;
    s *= static_cast<std::size_t>(dims[k]);
  }
  const std::size_t full = s;

  RegionSplit split;
  for (std::size_t k = 0; k < n; ++k)
    (in_region[k] ? split.region_dim : split.complement_dim) *= static_cast<std::size_t>(dims[k]);
  split.fibers.assign(full, 0);

  for (std::size_t idx = 0; idx < full; ++idx) {
    std::size_t r = 0, c = 0, rem = idx;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t digit = rem / stride[k];
      rem %= stride[k];
      if (in_region[k])
        r = r * static_cast<std::size_t>(dims[k]) + digit;
      else
        c = c * static_cast<std::size_t>(dims[k]) + digit;
    }
    split.fibers[c * split.region_dim + r] = static_cast<Eigen::Index>(idx);
  }
  return split;
}

inline void check_local_dims(const LocalOperator& op, const std::vector<int>& dims) {
  for (int x : op.support())
    if (x < 0 || static_cast<std::size_t>(x) >= dims.size())
      throw std::invalid_argument("support " + format_sites(op.support()) +
                                  " is not contained in the window");
  std::size_t expect = 1;
  for (int x : op.support()) expect *= static_cast<std::size_t>(dims[x]);
  if (static_cast<std::size_t>(op.matrix().rows()) != expect)
    throw std::invalid_argument("operator dimension " + std::to_string(op.matrix().rows()) +
                                " does not match the product of local dimensions " +
                                std::to_string(expect) + " on " + format_sites(op.support()));
}

inline Matrix embed_matrix(const Matrix& local, const RegionSplit& split, Eigen::Index full) {
  Matrix out = Matrix::Zero(full, full);
  const auto rd = static_cast<Eigen::Index>(split.region_dim);
  for (std::size_t c = 0; c < split.complement_dim; ++c) {
    const Eigen::Index* f = split.fibers.data() + c * split.region_dim;
    for (Eigen::Index j = 0; j < rd; ++j)
      for (Eigen::Index i = 0; i < rd; ++i) out(f[i], f[j]) = local(i, j);
  }
  return out;
}

}  // namespace detail

inline EmbeddedOperator embed(const LocalOperator& op, const std::vector<int>& dims) {
  detail::check_local_dims(op, dims);
  const auto split = detail::split_window(dims, op.support());
  const auto full = static_cast<Eigen::Index>(product_of_dims(dims));
  return {dims, detail::embed_matrix(op.matrix(), split, full)};
}

inline EmbeddedOperator embed(const LocalOperator& op, const Lattice& lattice) {
  if (!lattice.contains(op.support()))
    throw std::invalid_argument("support " + format_sites(op.support()) +
                                " is not contained in the lattice");
  return embed(op, lattice.local_dims());
}

/// embed(L) * M without forming embed(L).
inline Matrix apply_local(const LocalOperator& op, const std::vector<int>& dims, const Matrix& m) {
  detail::check_local_dims(op, dims);
  const auto split = detail::split_window(dims, op.support());
  const auto rd = static_cast<Eigen::Index>(split.region_dim);
  Matrix out(m.rows(), m.cols());
  Matrix gathered(rd, m.cols());
  for (std::size_t c = 0; c < split.complement_dim; ++c) {
    const Eigen::Index* f = split.fibers.data() + c * split.region_dim;
    for (Eigen::Index r = 0; r < rd; ++r) gathered.row(r) = m.row(f[r]);
    const Matrix mixed = op.matrix() * gathered;
    for (Eigen::Index r = 0; r < rd; ++r) out.row(f[r]) = mixed.row(r);
  }
  return out;
}

/// M * embed(L) without forming embed(L).
inline Matrix apply_local_right(const Matrix& m, const LocalOperator& op,
                                const std::vector<int>& dims) {
  const LocalOperator adj(op.support(), op.matrix().adjoint());
  return apply_local(adj, dims, m.adjoint()).adjoint();
}

namespace detail {

inline double power_iteration_norm(const Matrix& m, bool& converged) {
  const Eigen::Index n = m.cols();
  Vector x = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
  // Deterministic, generic start vector.
  for (Eigen::Index i = 0; i < n; ++i) x(i) *= 1.0 + 0.1 * std::sin(1.0 + static_cast<double>(i));
  x.normalize();
  double lambda = 0.0;
  converged = false;
  const int max_iter = n > 512 ? 2000 : 10000;
  for (int it = 0; it < max_iter; ++it) {
    Vector y = m.adjoint() * (m * x);
    const double next = std::real(x.dot(y));
    const double ny = y.norm();
    if (ny == 0.0) {
      converged = true;
      return 0.0;
    }
    const double residual = (y - next * x).norm();
    x = y / ny;
    if (it > 2 && std::abs(next - lambda) <= 1e-14 * next && residual <= 1e-7 * next) {
      converged = true;
      return std::sqrt(next);
    }
    lambda = next;
  }
  return std::sqrt(lambda);
}

}  // namespace detail

/// Largest singular value. Hermitian and anti-Hermitian input is routed to the
/// eigensolver; anything else runs power iteration on M^dagger M with an
/// eigensolver fallback when it fails to converge.
inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  if (m.rows() != m.cols()) throw std::invalid_argument("spectral_norm expects a square matrix");
  const double fro = m.norm();
  if (fro == 0.0) return 0.0;
  if (is_hermitian(m, 1e-13)) {
    const RealVector ev = eigenvalues_hermitian(0.5 * (m + m.adjoint()));
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  }
  if (is_anti_hermitian(m, 1e-13)) {
    const Matrix h = kI * m;
    const RealVector ev = eigenvalues_hermitian(0.5 * (h + h.adjoint()));
    return std::max(std::abs(ev(0)), std::abs(ev(ev.size() - 1)));
  }
  bool converged = false;
  const double estimate = detail::power_iteration_norm(m, converged);
  if (converged) return estimate;
  const Matrix gram = m.adjoint() * m;
  const RealVector ev = eigenvalues_hermitian(0.5 * (gram + gram.adjoint()));
  return std::sqrt(std::max(0.0, ev(ev.size() - 1)));
}

inline double spectral_norm(const LocalOperator& op) { return spectral_norm(op.matrix()); }
inline double spectral_norm(const EmbeddedOperator& op) { return spectral_norm(op.matrix()); }

inline EmbeddedOperator commutator(const EmbeddedOperator& a, const EmbeddedOperator& b) {
  require_same_window(a, b);
  return {a.dims(), a.matrix() * b.matrix() - b.matrix() * a.matrix()};
}

/// Exact Haar average over product unitaries on the complement of `region`:
/// normalised partial trace over the complement, re-tensored with identity.
inline EmbeddedOperator conditional_expectation(const EmbeddedOperator& op, const SiteSet& region) {
  const SiteSet r = normalize_sites(region);
  const auto split = detail::split_window(op.dims(), r);
  if (split.complement_dim == 1) return op;
  const auto rd = static_cast<Eigen::Index>(split.region_dim);
  Matrix reduced = Matrix::Zero(rd, rd);
  for (std::size_t c = 0; c < split.complement_dim; ++c) {
    const Eigen::Index* f = split.fibers.data() + c * split.region_dim;
    for (Eigen::Index j = 0; j < rd; ++j)
      for (Eigen::Index i = 0; i < rd; ++i) reduced(i, j) += op.matrix()(f[i], f[j]);
  }
  reduced /= static_cast<double>(split.complement_dim);
  return {op.dims(), detail::embed_matrix(reduced, split, op.dim())};
}

/// Haar-random d x d unitary: QR of a complex Ginibre matrix with the phases
/// of R's diagonal moved into Q.
template <class Rng>
Matrix haar_unitary(int d, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
  Matrix g(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) g(i, j) = cplx(gauss(rng), gauss(rng));
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  for (int k = 0; k < d; ++k) {
    const double mag = std::abs(r(k, k));
    if (mag > 0.0) q.col(k) *= r(k, k) / mag;
  }
  return q;
}

/// Monte-Carlo estimate of the twirl: average of U A U^dagger over `samples`
/// independent product unitaries on the complement of `region`.
inline EmbeddedOperator sampled_twirl(const EmbeddedOperator& op, const SiteSet& region,
                                      std::size_t samples, std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("sampled_twirl needs at least one sample");
  const SiteSet r = normalize_sites(region);
  SiteSet complement;
  for (std::size_t x = 0; x < op.dims().size(); ++x)
    if (!std::binary_search(r.begin(), r.end(), static_cast<int>(x)))
      complement.push_back(static_cast<int>(x));
  if (complement.empty()) return op;

  std::mt19937_64 rng(seed);
  Matrix acc = Matrix::Zero(op.dim(), op.dim());
  for (std::size_t s = 0; s < samples; ++s) {
    Matrix m = op.matrix();
    for (int x : complement) {
      const LocalOperator u({x}, haar_unitary(op.dims()[x], rng));
      const LocalOperator u_dag({x}, u.matrix().adjoint());
      m = apply_local_right(apply_local(u, op.dims(), m), u_dag, op.dims());
    }
    acc += m;
  }
  return {op.dims(), acc / static_cast<double>(samples)};
}

// ---------------------------------------------------------------------------
// Pauli helpers

inline Matrix pauli(char name) {
  Matrix m(2, 2);
  switch (name) {
    case 'I': m << 1, 0, 0, 1; break;
    case 'X': m << 0, 1, 1, 0; break;
    case 'Y': m << 0, cplx(0, -1), cplx(0, 1), 0; break;
    case 'Z': m << 1, 0, 0, -1; break;
    default: throw std::invalid_argument(std::string("unknown Pauli operator '") + name + "'");
  }
  return m;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Product of single-site factors; factors on the same site multiply in the
/// order given.
inline LocalOperator site_product(std::vector<std::pair<int, Matrix>> factors) {
  if (factors.empty()) throw std::invalid_argument("empty operator product");
  std::stable_sort(factors.begin(), factors.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  SiteSet support;
  std::vector<Matrix> mats;
  for (auto& [site, m] : factors) {
    if (!support.empty() && support.back() == site) {
      mats.back() = mats.back() * m;
    } else {
      support.push_back(site);
      mats.push_back(m);
    }
  }
  Matrix out = mats.front();
  for (std::size_t k = 1; k < mats.size(); ++k) out = kron(out, mats[k]);
  return {support, out};
}

inline LocalOperator pauli_on(char name, int site) { return {{site}, pauli(name)}; }

// ---------------------------------------------------------------------------
// Golden-file format: text header, then little-endian float64 re/im pairs,
// row-major.
//
//   correlab-operator 1
//   support <sites...>
//   dims <local dims...>
//   rows <n>
//   data
//   <16 n^2 bytes>

inline void write_operator(std::ostream& os, const LocalOperator& op, const std::vector<int>& local_dims) {
  if (local_dims.size() != op.support().size())
    throw std::invalid_argument("one local dimension per support site is required");
  os << "correlab-operator 1\nsupport";
  for (int x : op.support()) os << ' ' << x;
  os << "\ndims";
  for (int d : local_dims) os << ' ' << d;
  os << "\nrows " << op.matrix().rows() << "\ndata\n";
  const auto put = [&](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    char buf[8];
    std::memcpy(buf, &bits, 8);
    os.write(buf, 8);
  };
  for (Eigen::Index i = 0; i < op.matrix().rows(); ++i)
    for (Eigen::Index j = 0; j < op.matrix().cols(); ++j) {
      put(op.matrix()(i, j).real());
      put(op.matrix()(i, j).imag());
    }
}

struct SerializedOperator {
  LocalOperator op;
  std::vector<int> local_dims;
};

inline SerializedOperator read_operator(std::istream& is) {
  std::string line;
  const auto expect_line = [&](const std::string& key) {
    if (!std::getline(is, line) || line.rfind(key, 0) != 0)
      throw std::runtime_error("operator file: expected '" + key + "'");
    return std::istringstream(line.substr(key.size()));
  };
  expect_line("correlab-operator 1");
  SiteSet support;
  std::vector<int> dims;
  {
    auto ss = expect_line("support");
    for (int x; ss >> x;) support.push_back(x);
  }
  {
    auto ss = expect_line("dims");
    for (int d; ss >> d;) dims.push_back(d);
  }
  Eigen::Index rows = 0;
  {
    auto ss = expect_line("rows");
    ss >> rows;
  }
  expect_line("data");
  if (static_cast<std::size_t>(rows) != product_of_dims(dims) || dims.size() != support.size())
    throw std::runtime_error("operator file: inconsistent header");
  Matrix m(rows, rows);
  const auto get = [&]() {
    char buf[8];
    if (!is.read(buf, 8)) throw std::runtime_error("operator file: truncated data");
    std::uint64_t bits;
    std::memcpy(&bits, buf, 8);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  };
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < rows; ++j) {
      const double re = get();
      const double im = get();
      m(i, j) = cplx(re, im);
    }
  return {LocalOperator(support, m), dims};
}

}  // namespace correlab
