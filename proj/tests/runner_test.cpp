#include "correlab/cli/runner.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace correlab::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("correlab_runner_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const Check* find_check(const RunResult& r, const std::string& name) {
  for (const auto& c : r.checks)
    if (c.name == name) return &c;
  return nullptr;
}

}  // namespace

TEST(Runner, ResidueIdentityTask) {
  const auto r = execute(parse_config("task: residue_identity\nbeta: [1.0]\n"));
  EXPECT_TRUE(r.error.empty()) << r.error;
  EXPECT_TRUE(r.passed());
  ASSERT_EQ(r.tables.size(), 1u);
  const auto& t = r.tables[0];
  for (const auto& row : t.rows) EXPECT_LT(std::abs(row[t.column("error")]), 1e-8);
}

TEST(Runner, IdentityObservablesGiveZeroCorrelators) {
  const auto c = parse_config(R"(task: correlators
model: {name: tfim, couplings: {J: 1, h: 0.5}}
lattice: {N: 4}
beta: [0.5, 1.0]
observables: {A: "I:0", B: "I:0"}
)");
  const auto r = execute(c);
  EXPECT_TRUE(r.passed()) << r.error;
  const auto& t = r.tables.at(0);
  for (const auto& row : t.rows) {
    EXPECT_LT(std::abs(row[t.column("abs_ordinary")]), 1e-13);
    EXPECT_LT(std::abs(row[t.column("abs_canonical")]), 1e-13);
  }
}

TEST(Runner, EveryTaskPassesOnSmallChains) {
  const std::string model = "model: {name: tfim, couplings: {J: 1, h: 1}}\nlattice: {N: 6}\n";
  for (const std::string body :
       {"task: lr_scan\nobservables: {A: \"Z:0\", B: \"Z:5\"}\ntimes: {start: 0, stop: 1, step: 0.1}\n",
        "task: locality_scan\nobservables: {A: \"Z:2\"}\ntimes: {start: 0, stop: 1, step: 0.25}\nradii: [1, 2]\n",
        "task: correlators\nbeta: [0.5]\n",
        "task: contour\nbeta: [1.0]\nobservables: {A: \"Z:0\", B: \"Z:0\"}\nl_grid: [3, 4, 5]\n",
        "task: theorem_check\nbeta: [0.5]\nmodel: {name: tfim, couplings: {J: 1, h: 2}}\n"}) {
    const std::string text = body.find("model:") != std::string::npos ? body + "lattice: {N: 6}\n" : model + body;
    const auto r = execute(parse_config(text));
    EXPECT_TRUE(r.passed()) << text << "\n" << r.error;
    for (const auto& ch : r.checks) EXPECT_TRUE(ch.passed) << ch.name << ": " << ch.detail;
    EXPECT_FALSE(r.tables.empty());
  }
}

TEST(Runner, TaskFailureIsReported) {
  // Forcing c far below the empirical constant must flag violations.
  const auto r = execute(parse_config(R"(task: lr_scan
model: {name: tfim, couplings: {J: 1, h: 1}}
lattice: {N: 4}
observables: {A: "Z:0", B: "Z:3"}
locality: {c: 1e-9}
times: {start: 0, stop: 1, step: 0.5}
)"));
  EXPECT_FALSE(r.passed());
  ASSERT_NE(find_check(r, "lr_bound"), nullptr);
  EXPECT_FALSE(find_check(r, "lr_bound")->passed);
}

TEST(Runner, OutputsAreDeterministic) {
  const auto c = parse_config(R"(task: theorem_check
model: {name: tfim, couplings: {J: 1, h: 2}}
lattice: {N: 7}
beta: [0.5, 1.0]
)");
  const fs::path d1 = scratch("det1"), d2 = scratch("det2");
  RunOptions one, many;
  one.workers = 1;
  many.workers = 3;
  const auto p1 = write_outputs(execute(c, one), d1);
  const auto p2 = write_outputs(execute(c, many), d2);
  EXPECT_EQ(p1.filename(), config_hash(c));
  for (const auto& entry : fs::directory_iterator(p1)) {
    if (entry.path().extension() != ".csv" && entry.path().extension() != ".gp") continue;
    EXPECT_EQ(slurp(entry.path()), slurp(p2 / entry.path().filename())) << entry.path();
  }
  const auto rec = json::parse(slurp(p1 / "record.json"));
  EXPECT_EQ(rec["config_hash"], config_hash(c));
  EXPECT_EQ(rec["task"], "theorem_check");
  EXPECT_TRUE(rec["passed"].get<bool>());
  EXPECT_TRUE(rec["tables"].contains("theorem_check"));
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST(Runner, PlotDataForEachKind) {
  const auto r = execute(parse_config(R"(task: lr_scan
model: {name: tfim, couplings: {J: 1, h: 1}}
lattice: {N: 4}
observables: {A: "Z:0", B: "Z:3"}
times: {start: 0, stop: 1, step: 0.25}
)"));
  const fs::path dir = scratch("plot");
  const auto files = emit_plotdata(make_record(r), "lr_scan", dir);
  ASSERT_EQ(files.size(), 2u);
  const std::string csv = slurp(files[0]);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,lhs,rhs");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  EXPECT_NE(slurp(files[1]).find("set logscale y"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Runner, EmptyOrMissingTableWritesNothing) {
  RunResult r;
  r.config = parse_config("task: residue_identity\nbeta: [1]\n");
  r.hash = config_hash(r.config);
  r.tables.push_back({"empty", {"x", "y"}, {}, "x", {"y"}});
  const auto rec = make_record(r);
  const fs::path dir = scratch("empty");
  EXPECT_THROW(emit_plotdata(rec, "empty", dir), std::invalid_argument);
  EXPECT_THROW(emit_plotdata(rec, "absent", dir), std::invalid_argument);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(Runner, AbortedTaskIsPartial) {
  // A on sites {0, 1} and B moved to site 1 overlap, so the contour task aborts.
  auto c = parse_config(R"(task: contour
model: {name: tfim, couplings: {J: 1, h: 1}}
lattice: {N: 3}
observables: {A: "Z:0 Z:1", B: "Z:0"}
l_grid: [1, 2]
)");
  const auto r = execute(c);
  EXPECT_FALSE(r.error.empty());
  EXPECT_FALSE(r.passed());
  const auto rec = make_record(r);
  EXPECT_TRUE(rec["partial"].get<bool>());
  EXPECT_FALSE(rec["passed"].get<bool>());
}
