#pragma once

// Interactions Phi: finite site subsets -> Hermitian local matrices, the
// short-range certificate sum_{Z ∋ x} ||Phi(Z)|| |Z| exp(mu diam Z) <= v/2,
// and the built-in nearest-neighbour models.

#include "correlab/lattice.hpp"
#include "correlab/operators.hpp"
#include "correlab/types.hpp"

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace correlab {

class Interaction {
 public:
  Interaction(std::string name, const Lattice& lattice)
      : name_(std::move(name)), dims_(lattice.local_dims()) {}

  /// Adds Phi(Z) += m. Z is normalised to ascending order; m must follow the
  /// tensor order of the sorted Z.
  void add_term(SiteSet Z, const Matrix& m) {
    if (Z.empty()) throw std::invalid_argument("interaction term needs a nonempty support");
    if (!is_sorted_unique(Z))
      throw std::invalid_argument("interaction support must be strictly ascending: " + format_sites(Z));
    for (int x : Z)
      if (x < 0 || static_cast<std::size_t>(x) >= dims_.size())
        throw std::invalid_argument("interaction support " + format_sites(Z) +
                                    " is not a subset of the lattice");
    std::size_t expect = 1;
    for (int x : Z) expect *= static_cast<std::size_t>(dims_[x]);
    if (m.rows() != m.cols() || static_cast<std::size_t>(m.rows()) != expect)
      throw std::invalid_argument("interaction term on " + format_sites(Z) + " has wrong dimension");
    if (!is_hermitian(m, 1e-12))
      throw std::invalid_argument("interaction term on " + format_sites(Z) + " is not Hermitian");
    auto [it, inserted] = terms_.try_emplace(std::move(Z), m);
    if (!inserted) it->second += m;
  }

  const std::string& name() const { return name_; }
  const std::vector<int>& local_dims() const { return dims_; }
  const std::map<SiteSet, Matrix>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

 private:
  std::string name_;
  std::vector<int> dims_;
  std::map<SiteSet, Matrix> terms_;
};

struct LocalityCertificate {
  double mu = 0.0;
  double v = 0.0;
  std::vector<double> per_site_sums;

  bool holds() const {
    for (double s : per_site_sums)
      if (s > v / 2.0) return false;
    return true;
  }
};

inline double locality_site_sum(const Interaction& phi, const Lattice& lattice, int x, double mu) {
  double sum = 0.0;
  for (const auto& [Z, m] : phi.terms()) {
    if (!std::binary_search(Z.begin(), Z.end(), x)) continue;
    sum += spectral_norm(m) * static_cast<double>(Z.size()) * std::exp(mu * lattice.diameter(Z));
  }
  return sum;
}

/// Evaluates every per-site sum exactly; v is twice the largest.
inline LocalityCertificate certify_locality(const Interaction& phi, const Lattice& lattice, double mu) {
  if (!(mu > 0.0)) throw std::domain_error("mu must be positive");
  if (phi.local_dims() != lattice.local_dims())
    throw std::invalid_argument("interaction was built for a different lattice");
  LocalityCertificate cert;
  cert.mu = mu;
  std::vector<double> norms;
  norms.reserve(phi.terms().size());
  for (const auto& [Z, m] : phi.terms()) norms.push_back(spectral_norm(m));
  cert.per_site_sums.assign(lattice.size(), 0.0);
  std::size_t k = 0;
  for (const auto& [Z, m] : phi.terms()) {
    const double w = norms[k++] * static_cast<double>(Z.size()) * std::exp(mu * lattice.diameter(Z));
    for (int x : Z) cert.per_site_sums[x] += w;
  }
  for (double s : cert.per_site_sums) cert.v = std::max(cert.v, 2.0 * s);
  return cert;
}

/// (mu, v) pairs over a grid of mu, keeping only Pareto-optimal points
/// (larger mu is better, smaller v is better).
inline std::vector<std::pair<double, double>> locality_sweep(const Interaction& phi,
                                                             const Lattice& lattice,
                                                             std::vector<double> mus) {
  std::sort(mus.begin(), mus.end());
  std::vector<std::pair<double, double>> all;
  for (double mu : mus) all.emplace_back(mu, certify_locality(phi, lattice, mu).v);
  std::vector<std::pair<double, double>> front;
  for (std::size_t i = 0; i < all.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < all.size() && !dominated; ++j)
      dominated = j != i && all[j].first >= all[i].first && all[j].second <= all[i].second &&
                  (all[j].first > all[i].first || all[j].second < all[i].second);
    if (!dominated) front.push_back(all[i]);
  }
  return front;
}

using Couplings = std::map<std::string, double, std::less<>>;

namespace detail {

inline double require_coupling(const Couplings& params, std::string_view key, std::string_view model) {
  const auto it = params.find(key);
  if (it == params.end())
    throw std::invalid_argument("model " + std::string(model) + " requires coupling '" +
                                std::string(key) + "'");
  return it->second;
}

inline std::vector<std::pair<int, int>> nearest_neighbour_bonds(const Lattice& lattice) {
  std::vector<std::pair<int, int>> bonds;
  for (std::size_t i = 0; i < lattice.size(); ++i)
    for (std::size_t j = i + 1; j < lattice.size(); ++j)
      if (lattice.distance(static_cast<int>(i), static_cast<int>(j)) == 1.0)
        bonds.emplace_back(static_cast<int>(i), static_cast<int>(j));
  return bonds;
}

inline void require_qubits(const Lattice& lattice, std::string_view model) {
  for (int d : lattice.local_dims())
    if (d != 2) throw std::invalid_argument(std::string(model) + " requires local dimension 2");
}

}  // namespace detail

/// Built-in nearest-neighbour models on any lattice (bonds are pairs at
/// distance 1). Zero couplings produce no term.
///
///   transverse_field_ising: Phi({i,j}) = -J Z_i Z_j,  Phi({i}) = -h X_i         (J, h)
///   heisenberg_xxz:         Phi({i,j}) = J (X X + Y Y + Delta Z Z), Phi({i}) = -h Z_i
///                                                           (J, Delta; h optional)
///   random_bond_ising:      Phi({i,j}) = -J_ij Z_i Z_j with J_ij ~ U[J_min, J_max],
///                           Phi({i}) = -h X_i                   (J_min, J_max, h; seed)
inline Interaction builtin_model(std::string_view name, const Lattice& lattice, const Couplings& params,
                                 std::optional<std::uint64_t> seed = std::nullopt) {
  const Matrix zz = kron(pauli('Z'), pauli('Z'));
  Interaction phi(std::string(name), lattice);
  const auto bonds = detail::nearest_neighbour_bonds(lattice);

  if (name == "transverse_field_ising") {
    detail::require_qubits(lattice, name);
    const double J = detail::require_coupling(params, "J", name);
    const double h = detail::require_coupling(params, "h", name);
    if (J != 0.0)
      for (auto [i, j] : bonds) phi.add_term({i, j}, -J * zz);
    if (h != 0.0)
      for (std::size_t i = 0; i < lattice.size(); ++i) phi.add_term({static_cast<int>(i)}, -h * pauli('X'));
    return phi;
  }
  if (name == "heisenberg_xxz") {
    detail::require_qubits(lattice, name);
    const double J = detail::require_coupling(params, "J", name);
    const double delta = detail::require_coupling(params, "Delta", name);
    const auto hit = params.find("h");
    const double h = hit == params.end() ? 0.0 : hit->second;
    const Matrix bond = J * (kron(pauli('X'), pauli('X')) + kron(pauli('Y'), pauli('Y')) + delta * zz);
    if (J != 0.0)
      for (auto [i, j] : bonds) phi.add_term({i, j}, bond);
    if (h != 0.0)
      for (std::size_t i = 0; i < lattice.size(); ++i) phi.add_term({static_cast<int>(i)}, -h * pauli('Z'));
    return phi;
  }
  if (name == "random_bond_ising") {
    detail::require_qubits(lattice, name);
    if (!seed) throw std::invalid_argument("random_bond_ising requires an explicit seed");
    const double lo = detail::require_coupling(params, "J_min", name);
    const double hi = detail::require_coupling(params, "J_max", name);
    const double h = detail::require_coupling(params, "h", name);
    if (hi < lo) throw std::invalid_argument("random_bond_ising requires J_min <= J_max");
    std::mt19937_64 rng(*seed);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (auto [i, j] : bonds) {
      const double J = lo == hi ? lo : dist(rng);
      if (J != 0.0) phi.add_term({i, j}, -J * zz);
    }
    if (h != 0.0)
      for (std::size_t i = 0; i < lattice.size(); ++i) phi.add_term({static_cast<int>(i)}, -h * pauli('X'));
    return phi;
  }
  throw std::invalid_argument("unknown model '" + std::string(name) + "'");
}

/// Canonical text form: one line per term, sorted by support,
///   <site> <site> ... | re im re im ...   (row-major, %.17g)
inline std::string serialize(const Interaction& phi) {
  std::ostringstream os;
  os.precision(17);
  os << "# interaction " << phi.name() << '\n';
  for (const auto& [Z, m] : phi.terms()) {
    for (std::size_t k = 0; k < Z.size(); ++k) os << (k ? " " : "") << Z[k];
    os << " |";
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) os << ' ' << m(i, j).real() << ' ' << m(i, j).imag();
    os << '\n';
  }
  return os.str();
}

}  // namespace correlab
