#pragma once

#include "kmgl/clustering.hpp"
#include "kmgl/evaluation.hpp"
#include "kmgl/io.hpp"
#include "kmgl/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace kmgl::app {

namespace fs = std::filesystem;

/// Every setting of the `kmgl` tool. JSON config keys use the flag names with
/// dashes or underscores.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string out;
  int jobs = 1;

  // synth
  Eigen::Index nodes = 20;
  Eigen::Index signals = 500;
  int clusters = 3;
  double edge_prob = 0.3;
  double eta = 10.0;
  double snr = 15.0;
  double missing_rate = 0.0;

  // fit
  double alpha = 1e-2;
  double beta = 1e-2;
  double gamma = 1e-4;
  double epsilon = 1e-4;
  int restarts = 1;
  int max_rounds = 200;
  bool tied_alpha_beta = false;
  std::string kernel = "dataset";
  std::string coords;

  // experiment
  std::string axis = "clusters";
  std::vector<double> grid;
  int realizations = 10;
  std::vector<std::uint64_t> seeds;
  int kmeans_restarts = 10;

  FilterParams filter_params() const;
  SynthConfig synth_config() const;
  /// Throws Configuration on invalid values.
  void validate() const;
};

/// Overwrites fields present in `json_text`; unknown keys are rejected.
void apply_json_config(ExperimentConfig& cfg, const std::string& json_text);

/// Resolves a --kernel spec against a dataset:
///   dataset               kernel_<k>.csv from the dataset directory
///   diffusion:<eta>       (I + eta L)^{-1} of the dataset's graph_<k>.csv
///   file:<p1>[,<p2>...]   one shared kernel or one file per cluster
///   rbf:<bandwidth>       Gaussian RBF on --coords (default <dataset>/coords.csv)
std::vector<KernelOperator> resolve_kernels(const std::string& spec, const fs::path& dataset_dir,
                                            const SyntheticDataset& ds, int clusters, const std::string& coords);

/// Writes a synthetic dataset to cfg.out.
SyntheticDataset cmd_synth(const ExperimentConfig& cfg);

/// Best of cfg.restarts runs by final objective; restart r uses seed + r.
io::FitRecord fit_with_restarts(const SignalSet& data, const std::vector<KernelOperator>& kernels,
                                const ExperimentConfig& cfg, int clusters);

/// Fits the dataset in `dataset_dir` and writes the results to cfg.out.
io::FitRecord cmd_fit(const fs::path& dataset_dir, const ExperimentConfig& cfg);

MetricsRecord evaluate(const io::FitRecord& fit, const SyntheticDataset& ds);

/// Metrics for a results/dataset pair; appended as one CSV row (with header)
/// to cfg.out when set.
MetricsRecord cmd_eval(const fs::path& results_dir, const fs::path& dataset_dir, const ExperimentConfig& cfg);

struct ExperimentRow {
  std::string axis;
  double value = 0.0;
  int realization = 0;
  std::string method;
  double car = 0.0;
  double aps_mean = 0.0;  // NaN for methods without graphs
  bool failed = false;
};

/// Runs grid x realizations of synth -> fit (KMGL once, k-means best of
/// cfg.kmeans_restarts on zero-filled signals) -> metrics. Rows come back in
/// (value, realization, method) order regardless of cfg.jobs.
std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg);
std::string experiment_csv(const std::vector<ExperimentRow>& rows);

/// Writes experiment_csv() to cfg.out (a .csv path, or <dir>/experiment.csv).
std::vector<ExperimentRow> cmd_experiment(const ExperimentConfig& cfg);

/// Entry point of the `kmgl` executable; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace kmgl::app
