#pragma once

// Finite metric lattices, balls and shells, and the polynomial-growth
// certificate |B_r(X)| <= C |X| (1 + r)^D.

#include "correlab/types.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace correlab {

/// A finite window of sites with a metric and per-site Hilbert dimensions.
/// Sites are the integers 0..size()-1.
class Lattice {
 public:
  Lattice(std::vector<std::vector<double>> distances, std::vector<int> local_dims,
          std::string geometry = "custom")
      : distances_(std::move(distances)),
        local_dims_(std::move(local_dims)),
        geometry_(std::move(geometry)) {
    const std::size_t n = local_dims_.size();
    if (n == 0) throw std::invalid_argument("lattice must have at least one site");
    if (distances_.size() != n)
      throw std::invalid_argument("distance table size does not match site count");
    for (const auto& row : distances_)
      if (row.size() != n) throw std::invalid_argument("distance table is not square");
    for (int d : local_dims_)
      if (d < 2) throw std::invalid_argument("local dimension must be >= 2");
    for (std::size_t x = 0; x < n; ++x) {
      if (distances_[x][x] != 0.0) throw std::invalid_argument("metric(x,x) must be 0");
      for (std::size_t y = x + 1; y < n; ++y) {
        if (!(distances_[x][y] > 0.0) || !std::isfinite(distances_[x][y]))
          throw std::invalid_argument("metric(x,y) must be positive and finite for x != y");
        if (distances_[x][y] != distances_[y][x])
          throw std::invalid_argument("metric must be symmetric");
      }
    }
    for (std::size_t x = 0; x < n; ++x)
      for (std::size_t y = 0; y < n; ++y)
        for (std::size_t z = 0; z < n; ++z)
          if (distances_[x][z] > distances_[x][y] + distances_[y][z] + 1e-12)
            throw std::invalid_argument("metric violates the triangle inequality at (" +
                                        std::to_string(x) + "," + std::to_string(y) + "," +
                                        std::to_string(z) + ")");
  }

  /// Open chain with unit spacing.
  static Lattice chain(int n, int local_dim = 2) {
    if (n < 1) throw std::invalid_argument("chain length must be >= 1");
    std::vector<std::vector<double>> d(n, std::vector<double>(n));
    for (int x = 0; x < n; ++x)
      for (int y = 0; y < n; ++y) d[x][y] = std::abs(x - y);
    return Lattice(std::move(d), std::vector<int>(n, local_dim), "chain");
  }

  /// Open width x height grid with Manhattan (graph) distance, row-major site order.
  static Lattice grid(int width, int height, int local_dim = 2) {
    if (width < 1 || height < 1) throw std::invalid_argument("grid extents must be >= 1");
    const int n = width * height;
    std::vector<std::vector<double>> d(n, std::vector<double>(n));
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        d[a][b] = std::abs(a % width - b % width) + std::abs(a / width - b / width);
    return Lattice(std::move(d), std::vector<int>(n, local_dim), "grid");
  }

  std::size_t size() const { return local_dims_.size(); }
  const std::string& geometry() const { return geometry_; }
  const std::vector<int>& local_dims() const { return local_dims_; }
  int local_dim(int x) const { return local_dims_.at(x); }

  double distance(int x, int y) const { return distances_.at(x).at(y); }

  /// d(y, X) = min over x in X.
  double distance(int y, const SiteSet& X) const {
    double best = std::numeric_limits<double>::infinity();
    for (int x : X) best = std::min(best, distance(y, x));
    return best;
  }

  /// d(X, Y) = min over pairs.
  double distance(const SiteSet& X, const SiteSet& Y) const {
    double best = std::numeric_limits<double>::infinity();
    for (int y : Y) best = std::min(best, distance(y, X));
    return best;
  }

  double diameter(const SiteSet& Z) const {
    double diam = 0.0;
    for (int a : Z)
      for (int b : Z) diam = std::max(diam, distance(a, b));
    return diam;
  }

  bool contains(const SiteSet& X) const {
    for (int x : X)
      if (x < 0 || static_cast<std::size_t>(x) >= size()) return false;
    return true;
  }

  /// Product of local dimensions over the whole window, saturating at SIZE_MAX.
  std::size_t hilbert_dim() const {
    std::size_t p = 1;
    for (int d : local_dims_) {
      if (p > std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(d))
        return std::numeric_limits<std::size_t>::max();
      p *= static_cast<std::size_t>(d);
    }
    return p;
  }

  std::size_t subsystem_dim(const SiteSet& X) const {
    std::size_t p = 1;
    for (int x : X) p *= static_cast<std::size_t>(local_dim(x));
    return p;
  }

  SiteSet all_sites() const {
    SiteSet s(size());
    for (std::size_t i = 0; i < size(); ++i) s[i] = static_cast<int>(i);
    return s;
  }

  double max_distance() const {
    double m = 0.0;
    for (const auto& row : distances_)
      for (double v : row) m = std::max(m, v);
    return m;
  }

 private:
  std::vector<std::vector<double>> distances_;
  std::vector<int> local_dims_;
  std::string geometry_;
};

inline void require_nonempty_subset(const Lattice& lattice, const SiteSet& X) {
  if (X.empty()) throw std::domain_error("site set must be nonempty");
  if (!lattice.contains(X))
    throw std::invalid_argument("site set " + format_sites(X) + " is not inside the lattice");
}

/// B_r(X) = {y : d(y, X) < r}, always including X itself.
inline SiteSet ball(const Lattice& lattice, const SiteSet& X, double r) {
  require_nonempty_subset(lattice, X);
  if (r < 0.0) throw std::domain_error("ball radius must be >= 0");
  const SiteSet centre = normalize_sites(X);
  SiteSet out;
  for (std::size_t y = 0; y < lattice.size(); ++y) {
    const int site = static_cast<int>(y);
    if (std::binary_search(centre.begin(), centre.end(), site) ||
        lattice.distance(site, centre) < r)
      out.push_back(site);
  }
  return out;
}

/// D(r) = |{z : d(z, Y) in (r-1, r]}| restricted to the window.
inline std::size_t shell_count(const Lattice& lattice, const SiteSet& Y, int r) {
  require_nonempty_subset(lattice, Y);
  if (r < 1) throw std::domain_error("shell index must be >= 1");
  std::size_t count = 0;
  for (std::size_t z = 0; z < lattice.size(); ++z) {
    const double d = lattice.distance(static_cast<int>(z), Y);
    if (d > r - 1 && d <= r) ++count;
  }
  return count;
}

struct GrowthWitness {
  SiteSet X;
  double r = 0.0;
  std::size_t ball_size = 0;
  double bound = 0.0;  // C |X| (1 + r)^D with the certified C
};

struct GrowthCertificate {
  double D = 0.0;
  double C = 0.0;
  std::vector<GrowthWitness> witness_table;

  bool holds() const {
    for (const auto& w : witness_table)
      if (static_cast<double>(w.ball_size) > w.bound) return false;
    return true;
  }
};

/// Smallest C (up to one ulp) for which every supplied (X, r) satisfies the
/// growth inequality. Per-witness C values are folded into their max.
inline GrowthCertificate certify_growth(const Lattice& lattice, double D,
                                        const std::vector<std::pair<SiteSet, double>>& tests) {
  if (D < 0.0) throw std::domain_error("growth exponent must be >= 0");
  if (tests.empty()) throw std::invalid_argument("growth certificate needs at least one witness");
  GrowthCertificate cert;
  cert.D = D;
  std::vector<double> denominators;
  for (const auto& [X, r] : tests) {
    const SiteSet b = ball(lattice, X, r);
    const SiteSet x = normalize_sites(X);
    const double den = static_cast<double>(x.size()) * std::pow(1.0 + r, D);
    cert.C = std::max(cert.C, static_cast<double>(b.size()) / den);
    cert.witness_table.push_back({x, r, b.size(), 0.0});
    denominators.push_back(den);
  }
  for (;;) {
    bool ok = true;
    for (std::size_t i = 0; i < denominators.size(); ++i) {
      cert.witness_table[i].bound = cert.C * denominators[i];
      ok = ok && static_cast<double>(cert.witness_table[i].ball_size) <= cert.witness_table[i].bound;
    }
    if (ok) break;
    cert.C = std::nextafter(cert.C, std::numeric_limits<double>::infinity());
  }
  return cert;
}

}  // namespace correlab
