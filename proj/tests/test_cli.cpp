#include "kmgl/evaluation.hpp"
#include "kmgl/io.hpp"
#include "test_util.hpp"

#include <cstdlib>
#include <random>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

using namespace kmgl;
namespace fs = std::filesystem;

namespace {

const fs::path& work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / ("kmgl_cli_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

struct Cleanup {
  ~Cleanup() { fs::remove_all(work_dir()); }
} cleanup;

int run(const std::string& args) {
  const char* exe = std::getenv("KMGL_CLI");
  REQUIRE_MESSAGE(exe != nullptr, "KMGL_CLI must point at the kmgl executable");
  const fs::path log = work_dir() / "last.log";
  const std::string cmd = std::string("\"") + exe + "\" " + args + " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string path(const std::string& name) { return (work_dir() / name).string(); }

std::string synth(const std::string& name, const std::string& extra = "") {
  const std::string out = path(name);
  if (!fs::exists(out)) REQUIRE(run("synth --nodes 10 --signals 90 --clusters 3 --seed 5 --out " + out + " " + extra) == 0);
  return out;
}

}  // namespace

TEST_CASE("synth writes a dataset and reruns are byte-identical") {
  const auto a = synth("ds_a");
  REQUIRE(run("synth --nodes 10 --signals 90 --clusters 3 --seed 5 --out " + path("ds_b")) == 0);
  for (const char* f : {"graph_0.csv", "graph_2.csv", "kernel_1.csv", "signals.csv", "assignment.csv", "meta.json"}) {
    CHECK(fs::exists(fs::path(a) / f));
    CHECK(io::read_file(fs::path(a) / f) == io::read_file(fs::path(path("ds_b")) / f));
  }
  CHECK_FALSE(fs::exists(fs::path(a) / "masks.csv"));
  const auto masked = synth("ds_masked", "--missing-rate 0.2");
  CHECK(fs::exists(fs::path(masked) / "masks.csv"));
}

TEST_CASE("fit writes results deterministically") {
  const auto ds = synth("ds_a");
  REQUIRE(run("fit " + ds + " --out " + path("res_a")) == 0);
  REQUIRE(run("fit " + ds + " --out " + path("res_b") + " --jobs 4") == 0);
  for (const char* f : {"assignment.csv", "graph_0.csv", "graph_1.csv", "graph_2.csv", "filtered_signals.csv",
                        "objective_trace.csv", "summary.json"}) {
    CHECK(io::read_file(fs::path(path("res_a")) / f) == io::read_file(fs::path(path("res_b")) / f));
  }
  const auto rec = io::import_results(path("res_a"));
  for (std::size_t i = 1; i < rec.objective_trace.size(); ++i)
    CHECK(rec.objective_trace[i] >= rec.objective_trace[i - 1] - 1e-9 * std::abs(rec.objective_trace[i - 1]));
}

TEST_CASE("fit on masked data") {
  const auto ds = synth("ds_masked", "--missing-rate 0.2");
  CHECK(run("fit " + ds + " --out " + path("res_masked")) == 0);
  CHECK(io::import_results(path("res_masked")).graphs.size() == 3);
}

TEST_CASE("K = 1 emits a single graph") {
  const auto ds = synth("ds_a");
  const std::string kernel = (fs::path(ds) / "kernel_0.csv").string();
  REQUIRE(run("fit " + ds + " --clusters 1 --kernel file:" + kernel + " --out " + path("res_k1")) == 0);
  CHECK(fs::exists(fs::path(path("res_k1")) / "graph_0.csv"));
  CHECK_FALSE(fs::exists(fs::path(path("res_k1")) / "graph_1.csv"));
}

TEST_CASE("eval scores perfect and shuffled results") {
  const auto ds_dir = synth("ds_a");
  const auto ds = io::import_dataset(ds_dir);
  io::FitRecord perfect;
  perfect.assignment = ds.truth_assignment;
  perfect.graphs = ds.truth_graphs;
  perfect.filtered = ds.signals.X;
  perfect.objective_trace = {0.0};
  io::export_results(path("res_perfect"), perfect);
  REQUIRE(run("eval " + path("res_perfect") + " " + ds_dir + " --out " + path("metrics_perfect.csv")) == 0);
  const std::string text = io::read_file(path("metrics_perfect.csv"));
  std::istringstream lines(text);
  std::string header, row;
  std::getline(lines, header);
  std::getline(lines, row);
  CHECK(header == io::metrics_header(3));
  CHECK(row.find(",1,1,1,1,1,") != std::string::npos);  // car, aps_mean, aps_c0..c2

  io::FitRecord shuffled = perfect;
  std::mt19937_64 rng(3);
  for (auto& a : shuffled.assignment) a = static_cast<int>(rng() % 3);
  const double c = car(shuffled.assignment, ds.truth_assignment, 3);
  CHECK(c >= 1.0 / 3.0);
  CHECK(c <= 0.5);
}

TEST_CASE("experiment output does not depend on --jobs") {
  const std::string common = "experiment --nodes 8 --signals 60 --axis snr --grid 0,15 --realizations 3 --seed 2";
  REQUIRE(run(common + " --jobs 1 --out " + path("exp1.csv")) == 0);
  REQUIRE(run(common + " --jobs 4 --out " + path("exp4.csv")) == 0);
  const std::string a = io::read_file(path("exp1.csv"));
  CHECK(a == io::read_file(path("exp4.csv")));
  CHECK(a.rfind("axis,value,realization,method,car,aps_mean,failed\n", 0) == 0);
}

TEST_CASE("exit codes") {
  const auto ds = synth("ds_a");
  CHECK(run("--help") == 0);
  CHECK(run("bogus") == 2);
  CHECK(run("synth --nodes 10 --clusters 0 --out " + path("bad")) == 2);
  CHECK(run("fit " + ds + " --gamma 0 --out " + path("bad")) == 2);
  CHECK(run("fit " + ds + " --kernel nope --out " + path("bad")) == 2);
  io::write_file_atomic(path("cfg.json"), R"({"not_a_key": 1})");
  CHECK(run("synth --config " + path("cfg.json") + " --out " + path("bad")) == 2);
  CHECK(run("fit " + path("missing_dir") + " --out " + path("bad")) == 4);
  // An indefinite kernel is a numerical failure.
  io::write_file_atomic(path("indef.csv"), "1,2,0,0,0,0,0,0,0,0\n2,1,0,0,0,0,0,0,0,0\n" + [] {
    std::string s;
    for (int i = 2; i < 10; ++i) {
      for (int j = 0; j < 10; ++j) s += std::string(j == 0 ? "" : ",") + (i == j ? "1" : "0");
      s += "\n";
    }
    return s;
  }());
  CHECK(run("fit " + ds + " --kernel file:" + path("indef.csv") + " --out " + path("bad")) == 3);
}
