#pragma once

// Experiment configuration: YAML in, validated struct out, canonical YAML back.
//
//   task: theorem_check            # lr_scan | locality_scan | correlators |
//                                  # contour | theorem_check | residue_identity
//   model:
//     name: transverse_field_ising # heisenberg_xxz | random_bond_ising (alias: tfim)
//     couplings: {J: 1.0, h: 2.0}
//     seed: 7                      # random_bond_ising only
//   lattice: {N: 12}
//   beta: [0.5]
//   observables: {A: "Z:0", B: "Z:0"}   # tasks with an l-grid translate B by l sites
//   l_grid: [1, 2, 3]
//   ...
//
// Unknown keys, duplicate keys and out-of-range values are errors naming the key.

#include "correlab/hamiltonian.hpp"
#include "correlab/interaction.hpp"
#include "correlab/lattice.hpp"
#include "correlab/operators.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace correlab::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& known_tasks() {
  static const std::vector<std::string> tasks{"lr_scan",       "locality_scan", "correlators",
                                              "contour",       "theorem_check", "residue_identity"};
  return tasks;
}

struct TimeGrid {
  double start = 0.0;
  double stop = 1.0;
  double step = 0.1;

  std::vector<double> values() const {
    std::vector<double> out;
    const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    for (long i = 0; i <= n; ++i) out.push_back(start + step * static_cast<double>(i));
    return out;
  }
  bool operator==(const TimeGrid&) const = default;
};

struct ExperimentConfig {
  std::string task;
  std::string model = "transverse_field_ising";
  std::map<std::string, double> couplings;
  std::optional<std::uint64_t> seed;
  int n_sites = 0;
  std::vector<double> beta{1.0};
  std::string observable_a = "Z:0";
  std::string observable_b = "Z:0";
  std::vector<int> l_grid;  // empty: 1 .. N - 1 - max site of B
  double mu = 1.0;
  double lr_constant = 2.0;  // c for lr_scan; the empirical c is always reported too
  double exponent_multiplier = 1.0;
  TimeGrid times{0.0, 1.0, 0.1};
  std::vector<double> radii{1.0, 2.0, 3.0};
  std::vector<double> b_fractions{0.0, 0.5, 1.0};  // b = fraction * beta
  double truncation = 0.0;                          // contour T; 0: automatic
  int nodes = 32;                                   // Gauss-Legendre nodes per panel
  double delta_b = 1e-6;
  double epsilon = 0.2;
  double tol_reconstruction = 1e-6;
  double tol_residue = 1e-8;
  double tol_kms = 1e-10;
  double tol_canonical = 1e-8;
  // Not part of the hash: they do not change results.
  std::string outdir;
  int workers = 0;

  bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

[[noreturn]] inline void fail(const std::string& key, const std::string& what, const YAML::Node* node = nullptr) {
  std::ostringstream msg;
  msg << key << ": " << what;
  if (node && node->Mark().line >= 0) msg << " (line " << node->Mark().line + 1 << ")";
  throw ConfigError(msg.str());
}

template <class T>
T scalar(const YAML::Node& n, const std::string& key) {
  if (!n.IsScalar()) fail(key, "expected a scalar", &n);
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    fail(key, "cannot parse '" + n.Scalar() + "'", &n);
  }
}

template <class T>
std::vector<T> list(const YAML::Node& n, const std::string& key) {
  if (n.IsScalar()) return {scalar<T>(n, key)};
  if (!n.IsSequence()) fail(key, "expected a list", &n);
  std::vector<T> out;
  for (std::size_t i = 0; i < n.size(); ++i) out.push_back(scalar<T>(n[i], key + "[" + std::to_string(i) + "]"));
  return out;
}

/// Keys of a mapping, rejecting duplicates and anything outside `allowed`.
inline std::vector<std::pair<std::string, YAML::Node>> entries(const YAML::Node& map, const std::string& prefix,
                                                               const std::set<std::string>& allowed) {
  if (!map.IsMap()) fail(prefix.empty() ? "config" : prefix, "expected a mapping", &map);
  std::vector<std::pair<std::string, YAML::Node>> out;
  std::map<std::string, int> seen;
  for (auto it = map.begin(); it != map.end(); ++it) {
    const std::string key = it->first.as<std::string>();
    const std::string full = prefix.empty() ? key : prefix + "." + key;
    const int line = it->first.Mark().line + 1;
    if (auto prev = seen.find(key); prev != seen.end())
      throw ConfigError(full + ": duplicate key at line " + std::to_string(line) + " (first defined at line " +
                        std::to_string(prev->second) + ")");
    seen[key] = line;
    if (!allowed.empty() && !allowed.count(key)) fail(full, "unknown key", &it->first);
    out.emplace_back(key, it->second);
  }
  return out;
}

inline void require_range(const std::string& key, double value, double lo, double hi, const std::string& range) {
  if (!(value >= lo && value <= hi) || !std::isfinite(value))
    throw ConfigError(key + " = " + std::to_string(value) + " is out of range; allowed " + range);
}

inline std::string canonical_model(const std::string& name) {
  if (name == "tfim" || name == "ising") return "transverse_field_ising";
  if (name == "xxz") return "heisenberg_xxz";
  return name;
}

}  // namespace detail

/// "Z:0" or "X:0 X:1": Pauli or identity factors on sites.
inline LocalOperator parse_observable(const std::string& spec, int shift = 0) {
  std::istringstream in(spec);
  std::string token;
  std::vector<std::pair<int, Matrix>> factors;
  while (in >> token) {
    const auto colon = token.find(':');
    if (colon == std::string::npos || colon != 1)
      throw ConfigError("observable '" + spec + "': expected tokens like Z:0");
    const char name = token[0];
    if (std::string("IXYZ").find(name) == std::string::npos)
      throw ConfigError("observable '" + spec + "': unknown operator '" + std::string(1, name) + "'");
    int site = 0;
    try {
      std::size_t used = 0;
      site = std::stoi(token.substr(2), &used);
      if (used != token.size() - 2) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ConfigError("observable '" + spec + "': bad site in '" + token + "'");
    }
    factors.emplace_back(site + shift, name == 'I' ? Matrix(Matrix::Identity(2, 2)) : pauli(name));
  }
  if (factors.empty()) throw ConfigError("observable spec is empty");
  return site_product(std::move(factors));
}

inline int max_site(const std::string& spec) {
  const auto op = parse_observable(spec);
  return op.support().back();
}

inline bool task_uses_l_grid(const std::string& task) {
  return task == "contour" || task == "theorem_check" || task == "correlators";
}

/// Default l-grid: every translation of B that stays on the chain and off A.
inline std::vector<int> default_l_grid(const ExperimentConfig& c) {
  const LocalOperator a = parse_observable(c.observable_a);
  const LocalOperator b = parse_observable(c.observable_b);
  std::vector<int> out;
  for (int l = 1; b.support().back() + l < c.n_sites; ++l) {
    bool overlap = false;
    for (int s : b.support())
      if (std::binary_search(a.support().begin(), a.support().end(), s + l)) overlap = true;
    if (!overlap) out.push_back(l);
  }
  return out;
}

inline ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError("syntax error at line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) throw ConfigError("config: expected a mapping at the top level");

  ExperimentConfig c;
  bool have_task = false, have_n = false, have_l_grid = false;
  const std::set<std::string> top{"task",    "model",       "lattice", "beta",       "observables", "l_grid",
                                  "locality", "times",      "radii",   "contour",    "tolerances",  "output",
                                  "run"};
  for (const auto& [key, node] : detail::entries(root, "", top)) {
    if (key == "task") {
      c.task = detail::scalar<std::string>(node, key);
      have_task = true;
    } else if (key == "model") {
      for (const auto& [k, v] : detail::entries(node, "model", {"name", "couplings", "seed"})) {
        if (k == "name") c.model = detail::canonical_model(detail::scalar<std::string>(v, "model.name"));
        if (k == "seed") c.seed = detail::scalar<std::uint64_t>(v, "model.seed");
        if (k == "couplings")
          for (const auto& [ck, cv] : detail::entries(v, "model.couplings", {}))
            c.couplings[ck] = detail::scalar<double>(cv, "model.couplings." + ck);
      }
    } else if (key == "lattice") {
      for (const auto& [k, v] : detail::entries(node, "lattice", {"N"})) {
        c.n_sites = detail::scalar<int>(v, "lattice.N");
        have_n = true;
      }
    } else if (key == "beta") {
      c.beta = detail::list<double>(node, "beta");
    } else if (key == "observables") {
      for (const auto& [k, v] : detail::entries(node, "observables", {"A", "B"}))
        (k == "A" ? c.observable_a : c.observable_b) = detail::scalar<std::string>(v, "observables." + k);
    } else if (key == "l_grid") {
      c.l_grid = detail::list<int>(node, "l_grid");
      have_l_grid = true;
    } else if (key == "locality") {
      for (const auto& [k, v] : detail::entries(node, "locality", {"mu", "c", "exponent_multiplier", "epsilon"})) {
        const double x = detail::scalar<double>(v, "locality." + k);
        if (k == "mu") c.mu = x;
        if (k == "c") c.lr_constant = x;
        if (k == "exponent_multiplier") c.exponent_multiplier = x;
        if (k == "epsilon") c.epsilon = x;
      }
    } else if (key == "times") {
      for (const auto& [k, v] : detail::entries(node, "times", {"start", "stop", "step"})) {
        const double x = detail::scalar<double>(v, "times." + k);
        (k == "start" ? c.times.start : k == "stop" ? c.times.stop : c.times.step) = x;
      }
    } else if (key == "radii") {
      c.radii = detail::list<double>(node, "radii");
    } else if (key == "contour") {
      for (const auto& [k, v] : detail::entries(node, "contour", {"b_fractions", "T", "nodes", "delta_b"})) {
        if (k == "b_fractions") c.b_fractions = detail::list<double>(v, "contour.b_fractions");
        if (k == "T") c.truncation = detail::scalar<double>(v, "contour.T");
        if (k == "nodes") c.nodes = detail::scalar<int>(v, "contour.nodes");
        if (k == "delta_b") c.delta_b = detail::scalar<double>(v, "contour.delta_b");
      }
    } else if (key == "tolerances") {
      for (const auto& [k, v] :
           detail::entries(node, "tolerances", {"reconstruction", "residue", "kms", "canonical"})) {
        const double x = detail::scalar<double>(v, "tolerances." + k);
        if (k == "reconstruction") c.tol_reconstruction = x;
        if (k == "residue") c.tol_residue = x;
        if (k == "kms") c.tol_kms = x;
        if (k == "canonical") c.tol_canonical = x;
      }
    } else if (key == "output") {
      for (const auto& [k, v] : detail::entries(node, "output", {"dir"}))
        c.outdir = detail::scalar<std::string>(v, "output.dir");
    } else if (key == "run") {
      for (const auto& [k, v] : detail::entries(node, "run", {"workers"}))
        c.workers = detail::scalar<int>(v, "run.workers");
    }
  }

  if (!have_task) throw ConfigError("task: required key is missing");
  if (std::find(known_tasks().begin(), known_tasks().end(), c.task) == known_tasks().end())
    throw ConfigError("task = '" + c.task +
                      "' is not one of lr_scan, locality_scan, correlators, contour, theorem_check, residue_identity");

  for (double b : c.beta) detail::require_range("beta", b, 1e-12, 1e3, "(0, 1000]");
  if (c.beta.empty()) throw ConfigError("beta: list must not be empty");
  for (double f : c.b_fractions) detail::require_range("contour.b_fractions", f, 0.0, 1.0, "[0, 1]");
  if (c.b_fractions.empty()) throw ConfigError("contour.b_fractions: list must not be empty");
  detail::require_range("contour.nodes", c.nodes, 4, 256, "[4, 256]");
  detail::require_range("contour.delta_b", c.delta_b, 0.0, 1e-2, "[0, 0.01]");
  if (c.truncation != 0.0) detail::require_range("contour.T", c.truncation, 5.0, 40.0, "0 (automatic) or [5, 40]");
  detail::require_range("locality.mu", c.mu, 1e-6, 50.0, "(0, 50]");
  detail::require_range("locality.exponent_multiplier", c.exponent_multiplier, 0.1, 4.0, "[0.1, 4]");
  detail::require_range("locality.epsilon", c.epsilon, 1e-6, 10.0, "(0, 10]");
  detail::require_range("locality.c", c.lr_constant, 1e-12, 1e12, "(0, 1e12]");
  for (const auto& [k, tol] : {std::pair{"tolerances.reconstruction", c.tol_reconstruction},
                               {"tolerances.residue", c.tol_residue},
                               {"tolerances.kms", c.tol_kms},
                               {"tolerances.canonical", c.tol_canonical}})
    detail::require_range(k, tol, 1e-16, 1.0, "[1e-16, 1]");
  detail::require_range("run.workers", c.workers, 0, 1024, "[0, 1024] (0: available parallelism)");

  if (c.task == "residue_identity") return c;  // no lattice needed

  if (!have_n) throw ConfigError("lattice.N: required key is missing");
  if (c.n_sites < 2) throw ConfigError("lattice.N = " + std::to_string(c.n_sites) + " is out of range; allowed [2, 12]");
  if (c.n_sites > 12)
    throw ConfigError("lattice.N = " + std::to_string(c.n_sites) +
                      " exceeds the dimension cap 2^12 (allowed [2, 12] for qubit chains)");

  // Model and couplings are checked by building the interaction once.
  try {
    builtin_model(c.model, Lattice::chain(c.n_sites),
                  Couplings(c.couplings.begin(), c.couplings.end()), c.seed);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("model: ") + e.what());
  }

  for (const auto& [key, spec] : {std::pair{"observables.A", c.observable_a}, {"observables.B", c.observable_b}}) {
    LocalOperator op = [&] {
      try {
        return parse_observable(spec);
      } catch (const std::exception& e) {
        throw ConfigError(std::string(key) + ": " + e.what());
      }
    }();
    if (op.support().front() < 0 || op.support().back() >= c.n_sites)
      throw ConfigError(std::string(key) + " = '" + spec + "' has sites outside [0, " +
                        std::to_string(c.n_sites - 1) + "]");
  }

  if (task_uses_l_grid(c.task)) {
    if (!have_l_grid) c.l_grid = default_l_grid(c);
    if (c.l_grid.empty()) throw ConfigError("l_grid: no admissible distances on this chain");
    const int top_b = max_site(c.observable_b);
    for (int l : c.l_grid)
      if (l < 0 || top_b + l >= c.n_sites)
        throw ConfigError("l_grid: l = " + std::to_string(l) + " moves B off the chain (allowed [0, " +
                          std::to_string(c.n_sites - 1 - top_b) + "])");
    if (std::set<int>(c.l_grid.begin(), c.l_grid.end()).size() != c.l_grid.size())
      throw ConfigError("l_grid: duplicate entries");
  } else if (have_l_grid) {
    throw ConfigError("l_grid: not used by task " + c.task);
  }

  if (c.task == "lr_scan" || c.task == "locality_scan") {
    detail::require_range("times.step", c.times.step, 1e-6, 100.0, "(0, 100]");
    if (!(c.times.stop >= c.times.start)) throw ConfigError("times: stop must be >= start");
    if (c.times.values().size() > 10000) throw ConfigError("times: more than 10000 points");
  }
  if (c.task == "locality_scan") {
    if (c.radii.empty()) throw ConfigError("radii: list must not be empty");
    for (double r : c.radii) detail::require_range("radii", r, 0.0, c.n_sites, "[0, N]");
  }
  return c;
}

/// Shortest decimal that round-trips.
inline std::string shortest(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline std::vector<std::string> shortest(const std::vector<double>& xs) {
  std::vector<std::string> out;
  for (double x : xs) out.push_back(shortest(x));
  return out;
}

/// Canonical YAML: fixed key order, shortest round-trip doubles, defaults written out.
inline std::string serialize(const ExperimentConfig& c, bool include_run_settings = true) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "task" << YAML::Value << c.task;
  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << c.model;
  out << YAML::Key << "couplings" << YAML::Value << YAML::Flow << YAML::BeginMap;
  for (const auto& [k, v] : c.couplings) out << YAML::Key << k << YAML::Value << shortest(v);
  out << YAML::EndMap;
  if (c.seed) out << YAML::Key << "seed" << YAML::Value << *c.seed;
  out << YAML::EndMap;
  if (c.n_sites != 0) {
    out << YAML::Key << "lattice" << YAML::Value << YAML::Flow << YAML::BeginMap << YAML::Key << "N"
        << YAML::Value << c.n_sites << YAML::EndMap;
  }
  out << YAML::Key << "beta" << YAML::Value << YAML::Flow << shortest(c.beta);
  out << YAML::Key << "observables" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "A" << YAML::Value << YAML::DoubleQuoted << c.observable_a;
  out << YAML::Key << "B" << YAML::Value << YAML::DoubleQuoted << c.observable_b;
  out << YAML::EndMap;
  if (task_uses_l_grid(c.task)) out << YAML::Key << "l_grid" << YAML::Value << YAML::Flow << c.l_grid;
  out << YAML::Key << "locality" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mu" << YAML::Value << shortest(c.mu);
  out << YAML::Key << "c" << YAML::Value << shortest(c.lr_constant);
  out << YAML::Key << "exponent_multiplier" << YAML::Value << shortest(c.exponent_multiplier);
  out << YAML::Key << "epsilon" << YAML::Value << shortest(c.epsilon);
  out << YAML::EndMap;
  out << YAML::Key << "times" << YAML::Value << YAML::Flow << YAML::BeginMap;
  out << YAML::Key << "start" << YAML::Value << shortest(c.times.start);
  out << YAML::Key << "stop" << YAML::Value << shortest(c.times.stop);
  out << YAML::Key << "step" << YAML::Value << shortest(c.times.step);
  out << YAML::EndMap;
  out << YAML::Key << "radii" << YAML::Value << YAML::Flow << shortest(c.radii);
  out << YAML::Key << "contour" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "b_fractions" << YAML::Value << YAML::Flow << shortest(c.b_fractions);
  out << YAML::Key << "T" << YAML::Value << shortest(c.truncation);
  out << YAML::Key << "nodes" << YAML::Value << c.nodes;
  out << YAML::Key << "delta_b" << YAML::Value << shortest(c.delta_b);
  out << YAML::EndMap;
  out << YAML::Key << "tolerances" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "reconstruction" << YAML::Value << shortest(c.tol_reconstruction);
  out << YAML::Key << "residue" << YAML::Value << shortest(c.tol_residue);
  out << YAML::Key << "kms" << YAML::Value << shortest(c.tol_kms);
  out << YAML::Key << "canonical" << YAML::Value << shortest(c.tol_canonical);
  out << YAML::EndMap;
  if (include_run_settings) {
    if (!c.outdir.empty())
      out << YAML::Key << "output" << YAML::Value << YAML::BeginMap << YAML::Key << "dir" << YAML::Value
          << c.outdir << YAML::EndMap;
    out << YAML::Key << "run" << YAML::Value << YAML::BeginMap << YAML::Key << "workers" << YAML::Value
        << c.workers << YAML::EndMap;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

/// 64-bit FNV-1a of the canonical serialization without run settings, as 16 hex digits.
inline std::string config_hash(const ExperimentConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : serialize(c, false)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace correlab::cli
