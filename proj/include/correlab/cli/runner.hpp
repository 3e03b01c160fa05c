#pragma once

// Task dispatch for one validated config, JSON records, CSV tables and
// gnuplot stubs. Output layout: <outdir>/<confighash>/{record.json, *.csv, plot.gp}.

#include "correlab/cli/config.hpp"
#include "correlab/contour.hpp"
#include "correlab/dynamics.hpp"
#include "correlab/fit.hpp"
#include "correlab/hamiltonian.hpp"
#include "correlab/parallel.hpp"
#include "correlab/theorem.hpp"
#include "correlab/thermal.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace correlab::cli {

using json = nlohmann::ordered_json;

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::string plot_x;
  std::vector<std::string> plot_y;
  std::string scale = "semilogy";  // linear | semilogy | loglog

  std::size_t column(const std::string& c) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == c) return i;
    throw std::invalid_argument("table " + name + " has no column " + c);
  }
};

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunResult {
  ExperimentConfig config;
  std::string hash;
  std::vector<Table> tables;
  json constants = json::object();
  std::vector<Check> checks;
  std::string error;  // non-empty when the task aborted

  bool passed() const {
    if (!error.empty()) return false;
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
};

struct RunOptions {
  std::size_t workers = 0;  // 0: config value, then available parallelism
  std::ostream* log = nullptr;
};

namespace detail {

inline std::string format_number(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

inline void write_table_csv(std::ostream& os, const Table& t) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_number(row[i]);
    os << '\n';
  }
}

inline json number(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

struct Model {
  Lattice lattice;
  Interaction phi;
  LocalityCertificate cert;
  EmbeddedOperator hamiltonian;
  std::shared_ptr<const SpectralDecomposition> spectral;
};

inline Model build_model(const ExperimentConfig& c, std::ostream* log) {
  const Lattice lattice = Lattice::chain(c.n_sites);
  Interaction phi = builtin_model(c.model, lattice, Couplings(c.couplings.begin(), c.couplings.end()), c.seed);
  LocalityCertificate cert = certify_locality(phi, lattice, c.mu);
  EmbeddedOperator h = build_hamiltonian(phi, lattice);
  if (log) *log << "diagonalising H (dim " << h.dim() << ")\n";
  auto spectral = std::make_shared<const SpectralDecomposition>(eig_hermitian(h.matrix()));
  return {lattice, std::move(phi), std::move(cert), std::move(h), std::move(spectral)};
}

inline Check check(std::string name, bool ok, std::string detail) { return {std::move(name), ok, std::move(detail)}; }

inline std::string sci(double x) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(3) << x;
  return os.str();
}

inline void run_lr_scan(const ExperimentConfig& c, std::size_t workers, RunResult& out, std::ostream* log) {
  const Model m = build_model(c, log);
  const EvolutionContext ctx(m.spectral, m.lattice.local_dims());
  const LocalOperator a = parse_observable(c.observable_a);
  const LocalOperator b = parse_observable(c.observable_b);
  const auto times = c.times.values();
  LRMeasurement lr = lr_commutator_scan(ctx, m.lattice, a, b, times, m.cert, c.lr_constant, workers);
  const double c_used = c.lr_constant;
  Table t{"lr_scan", {"t", "l", "lhs", "shape", "rhs", "ratio", "violation"}, {}, "t", {"lhs", "rhs"}};
  std::size_t violations = 0;
  for (const auto& r : lr.rows) {
    const bool bad = lr.exceeds(r.lhs, c_used * r.shape);
    violations += bad ? 1 : 0;
    t.rows.push_back({r.t, r.l, r.lhs, r.shape, c_used * r.shape, empirical_constant(r.lhs, r.shape, lr.roundoff), bad ? 1.0 : 0.0});
  }
  out.tables.push_back(std::move(t));
  out.constants["mu"] = m.cert.mu;
  out.constants["v"] = m.cert.v;
  out.constants["c"] = number(c_used);
  out.constants["empirical_c"] = number(lr.empirical_c);
  out.checks.push_back(check("locality_certificate", m.cert.holds(), "v = " + format_number(m.cert.v)));
  out.checks.push_back(check("lr_bound", violations == 0 && std::isfinite(c_used),
                             std::to_string(violations) + " rows exceed c * shape with c = " + format_number(c_used)));
}

inline void run_locality_scan(const ExperimentConfig& c, std::size_t workers, RunResult& out, std::ostream* log) {
  const Model m = build_model(c, log);
  const EvolutionContext ctx(m.spectral, m.lattice.local_dims());
  const LocalOperator a = parse_observable(c.observable_a);
  const auto times = c.times.values();
  LocalityScanOptions opt;
  opt.exponent_multiplier = c.exponent_multiplier;
  opt.workers = workers;
  const LocalityScan s = locality_scan(ctx, m.lattice, a, c.radii, times, m.cert, opt);
  Table t{"locality_scan", {"t", "r", "error", "approx_norm", "shape", "ratio", "leak"}, {}, "t", {"error", "shape"}};
  double leak = 0.0, scale = 1.0;
  for (const auto& r : s.rows) {
    t.rows.push_back({r.t, r.r, r.error, r.approx_norm, r.shape, empirical_constant(r.error, r.shape, s.roundoff), r.leak});
    leak = std::max(leak, r.leak);
    scale = std::max(scale, r.approx_norm);
  }
  out.tables.push_back(std::move(t));
  out.constants["mu"] = m.cert.mu;
  out.constants["v"] = m.cert.v;
  out.constants["empirical_c"] = number(s.empirical_c);
  out.constants["exponent_multiplier"] = c.exponent_multiplier;
  out.checks.push_back(check("locality_certificate", m.cert.holds(), "v = " + format_number(m.cert.v)));
  out.checks.push_back(check("error_monotone_in_r", s.monotone_in_r(1e-12), "slack 1e-12"));
  out.checks.push_back(check("approximant_support", leak <= 1e-10 * scale, "max leak " + sci(leak)));
  out.checks.push_back(check("finite_constant", std::isfinite(s.empirical_c), "c_emp = " + format_number(s.empirical_c)));
}

inline void run_correlators(const ExperimentConfig& c, std::size_t workers, RunResult& out, std::ostream* log) {
  const Model m = build_model(c, log);
  const LocalOperator a = parse_observable(c.observable_a);
  const Matrix a_eig = to_eigenbasis(*m.spectral, embed(a, m.lattice).matrix());
  const EvolutionContext ctx(m.spectral, m.lattice.local_dims());
  Table t{"correlators",
          {"beta", "l", "ordinary_re", "ordinary_im", "canonical_re", "canonical_im", "abs_ordinary",
           "abs_canonical", "closed_vs_quadrature", "kms_boundary_error"},
          {},
          "l",
          {"abs_ordinary", "abs_canonical"}};
  double worst_quad = 0.0, worst_kms = 0.0;
  for (double beta : c.beta) {
    const ThermalState state(m.spectral, beta);
    std::vector<std::vector<double>> rows(c.l_grid.size());
    parallel_for(c.l_grid.size(), workers, [&](std::size_t i) {
      const LocalOperator b = parse_observable(c.observable_b, c.l_grid[i]);
      const Matrix b_eig = to_eigenbasis(*m.spectral, embed(b, m.lattice).matrix());
      const KMSFunction f(state, a_eig, b_eig);
      const cplx ord = f.ordinary();
      const cplx can = f.canonical_closed_form();
      const cplx quad = f.canonical_quadrature();
      // phi(tau_t(B) A) summed directly over the evolved eigenbasis matrix.
      double kms = 0.0;
      for (double time : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
        const Matrix bt = ctx.evolve_eigenbasis(b_eig, time);
        cplx direct = 0.0;
        for (Eigen::Index k = 0; k < bt.rows(); ++k)
          direct += state.probabilities()(k) * (bt.row(k) * a_eig.col(k)).value();
        kms = std::max(kms, std::abs(f.on_upper_line(time) - direct));
      }
      rows[i] = {beta,       static_cast<double>(c.l_grid[i]), ord.real(), ord.imag(), can.real(), can.imag(),
                 std::abs(ord), std::abs(can), std::abs(can - quad), kms};
    });
    for (auto& r : rows) {
      worst_quad = std::max(worst_quad, r[8]);
      worst_kms = std::max(worst_kms, r[9]);
      t.rows.push_back(std::move(r));
    }
  }
  out.tables.push_back(std::move(t));
  out.constants["max_closed_vs_quadrature"] = worst_quad;
  out.constants["max_kms_boundary_error"] = worst_kms;
  out.checks.push_back(check("canonical_closed_form_vs_quadrature", worst_quad <= c.tol_canonical,
                             sci(worst_quad) + " <= " + sci(c.tol_canonical)));
  out.checks.push_back(check("kms_boundary", worst_kms <= c.tol_kms, sci(worst_kms) + " <= " + sci(c.tol_kms)));
}

inline void run_contour(const ExperimentConfig& c, std::size_t workers, RunResult& out, std::ostream* log) {
  const Model m = build_model(c, log);
  const LocalOperator a = parse_observable(c.observable_a);
  Table t{"contour",
          {"beta", "b_requested", "b", "l", "abs_term1", "abs_term2", "abs_term3", "abs_direct",
           "reconstruction_error", "relative_error", "envelope"},
          {},
          "l",
          {"abs_term1", "envelope"}};
  const std::function<LocalOperator(int)> b_at = [&](int l) { return parse_observable(c.observable_b, l); };
  double worst = 0.0;
  json slopes = json::array();
  bool slopes_ok = true;
  const int l_max = *std::max_element(c.l_grid.begin(), c.l_grid.end());
  for (double beta : c.beta) {
    const ThermalState state(m.spectral, beta);
    for (double frac : c.b_fractions) {
      ContourOptions opt;
      opt.T = c.truncation > 0.0 ? c.truncation : default_truncation(c.mu, l_max, m.cert.v);
      opt.nodes_per_panel = static_cast<std::size_t>(c.nodes);
      opt.delta_b = c.delta_b;
      if (log) *log << "contour beta = " << beta << " b = " << frac * beta << '\n';
      const ContourScan scan = contour_scan(state, m.lattice, a, b_at, c.l_grid, frac * beta, c.mu, opt, workers);
      std::vector<double> ls, t1;
      for (const auto& r : scan.rows) {
        const double rel = r.terms.reconstruction_error() / (1.0 + std::abs(r.terms.direct));
        worst = std::max(worst, rel);
        t.rows.push_back({beta, frac * beta, r.terms.b, r.l, std::abs(r.terms.term1), std::abs(r.terms.term2),
                          std::abs(r.terms.term3), std::abs(r.terms.direct), r.terms.reconstruction_error(), rel,
                          r.envelope});
        ls.push_back(r.l);
        t1.push_back(std::abs(r.terms.term1));
      }
      if (ls.size() >= 3) {
        try {
          const double slope = log_slope(ls, t1);
          slopes.push_back({{"beta", beta}, {"b", frac * beta}, {"term1_log_slope", slope}});
          if (slope > -c.mu / 2.0 + 0.1) slopes_ok = false;
        } catch (const std::domain_error&) {
          slopes.push_back({{"beta", beta}, {"b", frac * beta}, {"term1_log_slope", nullptr}});
        }
      }
    }
  }
  out.tables.push_back(std::move(t));
  out.constants["mu"] = c.mu;
  out.constants["v"] = m.cert.v;
  out.constants["delta_b"] = c.delta_b;
  out.constants["max_relative_reconstruction_error"] = worst;
  out.constants["term1_slopes"] = slopes;
  out.checks.push_back(check("reconstruction", worst <= c.tol_reconstruction,
                             sci(worst) + " <= " + sci(c.tol_reconstruction)));
  if (!slopes.empty())
    out.checks.push_back(check("term1_envelope", slopes_ok, "log|term1| slope <= -mu/2 + 0.1"));
}

inline void run_theorem_check(const ExperimentConfig& c, std::size_t workers, RunResult& out, std::ostream* log) {
  const Model m = build_model(c, log);
  const LocalOperator a = parse_observable(c.observable_a);
  Table t{"theorem_check",
          {"beta", "l", "abs_ordinary", "abs_canonical", "g", "g_prime", "c_ratio", "c_prime_ratio",
           "c_prime_ratio_xy"},
          {},
          "l",
          {"abs_ordinary", "abs_canonical", "g_prime"}};
  const std::function<LocalOperator(int)> b_at = [&](int l) { return parse_observable(c.observable_b, l); };
  json per_beta = json::array();
  bool finite = true, dominates = true;
  for (double beta : c.beta) {
    const ThermalState state(m.spectral, beta);
    TheoremOptions opt;
    opt.mu = c.mu;
    opt.workers = workers;
    if (log) *log << "theorem check beta = " << beta << '\n';
    const TheoremReport rep = theorem_check(state, m.lattice, a, b_at, c.l_grid, opt);
    for (const auto& p : rep.points)
      t.rows.push_back({beta, p.l, p.ordinary, p.canonical, p.g, p.g_prime, p.c_ratio, p.c_prime_ratio,
                        p.c_prime_ratio_xy});
    json entry = {{"beta", beta},
                  {"xi", number(rep.xi)},
                  {"ordinary_fit_residual", rep.ordinary_fit ? json(rep.ordinary_fit->residual) : json(nullptr)},
                  {"xi_prime", rep.xi_prime() ? number(*rep.xi_prime()) : json(nullptr)},
                  {"canonical_fit_residual", rep.canonical_fit ? json(rep.canonical_fit->residual) : json(nullptr)},
                  {"xi_prime_reference", number(rep.xi_prime_reference())},
                  {"c", number(rep.c)},
                  {"c_prime", number(rep.c_prime)},
                  {"c_prime_xy", number(rep.c_prime_xy)}};
    per_beta.push_back(std::move(entry));
    finite = finite && rep.c_prime_finite();
    dominates = dominates && rep.envelope_dominates();
  }
  out.tables.push_back(std::move(t));
  out.constants["mu"] = c.mu;
  out.constants["v"] = m.cert.v;
  out.constants["fit_model"] = "exponential";
  out.constants["per_beta"] = per_beta;
  out.checks.push_back(check("c_prime_finite", finite, "smallest c' on the grid is finite"));
  out.checks.push_back(check("envelope_dominance", dominates, "g' >= g(l/4) and g' >= exp(-mu l/2)"));
}

inline void run_residue_identity(const ExperimentConfig& c, RunResult& out) {
  Table t{"residue_identity", {"beta", "b", "value_re", "value_im", "error", "tail_bound"}, {}, "b", {"error"}};
  bool ok = true;
  double worst = 0.0;
  const double T = c.truncation > 0.0 ? c.truncation : 10.0;
  for (double beta : c.beta) {
    for (double frac : c.b_fractions) {
      const auto r = residue_identity(beta, frac * beta, T, static_cast<std::size_t>(c.nodes));
      t.rows.push_back({beta, frac * beta, r.value.real(), r.value.imag(), r.error(), r.tail_bound});
      ok = ok && r.error() <= c.tol_residue + r.tail_bound;
      worst = std::max(worst, r.error());
    }
  }
  t.scale = "linear";
  out.tables.push_back(std::move(t));
  out.constants["T"] = T;
  out.constants["max_error"] = worst;
  out.checks.push_back(check("residue_identity", ok, "max |value - 1| = " + sci(worst)));
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace detail

inline std::size_t resolve_workers(const ExperimentConfig& c, const RunOptions& opt) {
  if (opt.workers > 0) return opt.workers;
  if (c.workers > 0) return static_cast<std::size_t>(c.workers);
  return default_workers();
}

/// Runs the task. Exceptions from the task are captured in `error`.
inline RunResult execute(const ExperimentConfig& c, const RunOptions& opt = {}) {
  RunResult out;
  out.config = c;
  out.hash = config_hash(c);
  const std::size_t workers = resolve_workers(c, opt);
  try {
    if (c.task == "lr_scan") detail::run_lr_scan(c, workers, out, opt.log);
    else if (c.task == "locality_scan") detail::run_locality_scan(c, workers, out, opt.log);
    else if (c.task == "correlators") detail::run_correlators(c, workers, out, opt.log);
    else if (c.task == "contour") detail::run_contour(c, workers, out, opt.log);
    else if (c.task == "theorem_check") detail::run_theorem_check(c, workers, out, opt.log);
    else if (c.task == "residue_identity") detail::run_residue_identity(c, out);
    else throw ConfigError("unknown task " + c.task);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    out.error = e.what();
  }
  return out;
}

inline json table_json(const Table& t) {
  json rows = json::array();
  for (const auto& r : t.rows) {
    json row = json::array();
    for (double x : r) row.push_back(detail::number(x));
    rows.push_back(std::move(row));
  }
  return {{"columns", t.columns},
          {"rows", rows},
          {"plot", {{"x", t.plot_x}, {"y", t.plot_y}, {"scale", t.scale}}}};
}

inline json make_record(const RunResult& r) {
  json checks = json::array();
  for (const auto& c : r.checks) checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  json tables = json::object();
  for (const auto& t : r.tables) tables[t.name] = table_json(t);
  json rec = {{"config_hash", r.hash},
              {"timestamp", detail::utc_timestamp()},
              {"task", r.config.task},
              {"versions",
               {{"correlab", CORRELAB_VERSION},
                {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)}}},
              {"config", serialize(r.config, false)},
              {"passed", r.passed()},
              {"partial", !r.error.empty()},
              {"constants", r.constants},
              {"checks", checks},
              {"tables", tables}};
  if (!r.error.empty()) rec["error"] = r.error;
  return rec;
}

/// Two-column (or grouped) plot CSV plus a gnuplot stub for table `kind`.
/// Throws without writing anything if the table is missing or empty.
inline std::vector<std::filesystem::path> emit_plotdata(const json& record, const std::string& kind,
                                                        const std::filesystem::path& dir) {
  if (!record.contains("tables") || !record["tables"].contains(kind))
    throw std::invalid_argument("record has no table '" + kind + "'");
  const json& t = record["tables"][kind];
  if (t["rows"].empty()) throw std::invalid_argument("table '" + kind + "' is empty; nothing written");
  const auto columns = t["columns"].get<std::vector<std::string>>();
  const auto index = [&](const std::string& c) {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == c) return i;
    throw std::invalid_argument("table '" + kind + "' has no column '" + c + "'");
  };
  const std::string x = t["plot"]["x"].get<std::string>();
  const auto ys = t["plot"]["y"].get<std::vector<std::string>>();
  const std::string scale = t["plot"]["scale"].get<std::string>();
  std::vector<std::size_t> cols{index(x)};
  for (const auto& y : ys) cols.push_back(index(y));

  std::ostringstream csv;
  for (std::size_t i = 0; i < cols.size(); ++i) csv << (i ? "," : "") << columns[cols[i]];
  csv << '\n';
  for (const auto& row : t["rows"]) {
    for (std::size_t i = 0; i < cols.size(); ++i) {
      const json& v = row[cols[i]];
      csv << (i ? "," : "") << (v.is_null() ? std::string("nan") : detail::format_number(v.get<double>()));
    }
    csv << '\n';
  }

  std::ostringstream gp;
  gp << "set datafile separator ','\nset key autotitle columnhead\nset xlabel '" << x << "'\n";
  if (scale == "semilogy") gp << "set logscale y\n";
  if (scale == "loglog") gp << "set logscale xy\n";
  const std::string data = kind + "_plot.csv";
  gp << "plot ";
  for (std::size_t i = 0; i < ys.size(); ++i)
    gp << (i ? ", \\\n     " : "") << "'" << data << "' using 1:" << i + 2 << " with linespoints";
  gp << '\n';

  std::filesystem::create_directories(dir);
  const auto csv_path = dir / data;
  const auto gp_path = dir / "plot.gp";
  std::ofstream(csv_path, std::ios::binary) << csv.str();
  std::ofstream(gp_path, std::ios::binary) << gp.str();
  return {csv_path, gp_path};
}

/// Writes record.json, one CSV per table and the plot stub for the first table.
inline std::filesystem::path write_outputs(const RunResult& r, const std::filesystem::path& outdir) {
  const auto dir = outdir / r.hash;
  std::filesystem::create_directories(dir);
  const json rec = make_record(r);
  std::ofstream(dir / "record.json", std::ios::binary) << rec.dump(2) << '\n';
  for (const auto& t : r.tables) {
    std::ofstream os(dir / (t.name + ".csv"), std::ios::binary);
    detail::write_table_csv(os, t);
  }
  if (!r.tables.empty() && !r.tables.front().rows.empty()) emit_plotdata(rec, r.tables.front().name, dir);
  return dir;
}

inline std::string table_csv(const Table& t) {
  std::ostringstream os;
  detail::write_table_csv(os, t);
  return os.str();
}

}  // namespace correlab::cli
