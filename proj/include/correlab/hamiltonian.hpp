#pragma once

#include "correlab/interaction.hpp"
#include "correlab/operators.hpp"

#include <stdexcept>
#include <string>

namespace correlab {

inline constexpr std::size_t kDefaultDimensionCap = std::size_t{1} << 12;

/// H_Lambda = sum_Z Phi(Z), embedded.
inline EmbeddedOperator build_hamiltonian(const Interaction& phi, const Lattice& lattice,
                                          std::size_t dimension_cap = kDefaultDimensionCap) {
  if (phi.local_dims() != lattice.local_dims())
    throw std::invalid_argument("interaction was built for a different lattice");
  const std::size_t dim = lattice.hilbert_dim();
  if (dim > dimension_cap)
    throw std::length_error("window dimension " + std::to_string(dim) + " exceeds the cap " +
                            std::to_string(dimension_cap));
  const auto& dims = lattice.local_dims();
  Matrix h = Matrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (const auto& [Z, m] : phi.terms()) {
    const auto split = detail::split_window(dims, Z);
    const auto rd = static_cast<Eigen::Index>(split.region_dim);
    for (std::size_t c = 0; c < split.complement_dim; ++c) {
      const Eigen::Index* f = split.fibers.data() + c * split.region_dim;
      for (Eigen::Index j = 0; j < rd; ++j)
        for (Eigen::Index i = 0; i < rd; ++i) h(f[i], f[j]) += m(i, j);
    }
  }
  return {dims, h};
}

/// delta(A) = sum_Z [Phi(Z), A] on the window, i.e. [H, A].
///
/// Sign convention: tau_t(A) = e^{iHt} A e^{-iHt}, so
///   d/dt tau_t(A) = i [H, tau_t(A)] = i tau_t(delta(A)),
/// and delta(A)^dagger = -delta(A^dagger).
inline EmbeddedOperator derivation_delta(const EmbeddedOperator& a, const Interaction& phi) {
  if (phi.local_dims() != a.dims()) throw std::invalid_argument("interaction and operator windows differ");
  Matrix out = Matrix::Zero(a.dim(), a.dim());
  for (const auto& [Z, m] : phi.terms()) {
    const LocalOperator term(Z, m);
    out += apply_local(term, a.dims(), a.matrix()) - apply_local_right(a.matrix(), term, a.dims());
  }
  return {a.dims(), out};
}

}  // namespace correlab
