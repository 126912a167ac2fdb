#pragma once

#include "kmgl/clustering.hpp"
#include "kmgl/evaluation.hpp"
#include "kmgl/graph.hpp"
#include "kmgl/synth.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

namespace kmgl::io {

namespace fs = std::filesystem;

/// Shortest decimal that parses back to the same double.
std::string format_double(double value);

/// Writes `content` to a temporary sibling file and renames it over `path`.
void write_file_atomic(const fs::path& path, const std::string& content);
std::string read_file(const fs::path& path);

/// Headerless comma-separated matrix, one row per line.
std::string matrix_to_csv(const Eigen::MatrixXd& M);
void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& M);
Eigen::MatrixXd read_matrix_csv(const fs::path& path);

/// Graph as its full n x n adjacency matrix.
void write_graph_csv(const fs::path& path, const LaplacianGraph& g);
LaplacianGraph read_graph_csv(const fs::path& path);

/// One signal per row under the header s0,...,s{n-1}.
void write_signals_csv(const fs::path& path, const Eigen::MatrixXd& X);
Eigen::MatrixXd read_signals_csv(const fs::path& path);

void write_masks_csv(const fs::path& path, const std::vector<ObservationMask>& masks, Eigen::Index n);
std::vector<ObservationMask> read_masks_csv(const fs::path& path);

/// Single column with header "cluster".
void write_assignment_csv(const fs::path& path, const std::vector<int>& assignment);
std::vector<int> read_assignment_csv(const fs::path& path);

fs::path graph_file(const fs::path& dir, int k);
fs::path kernel_file(const fs::path& dir, int k);

/// Dataset directory: graph_<k>.csv, kernel_<k>.csv, signals.csv,
/// assignment.csv, masks.csv (when masked) and meta.json.
void export_dataset(const fs::path& dir, const SyntheticDataset& ds);
SyntheticDataset import_dataset(const fs::path& dir);

struct FitRecord {
  std::vector<int> assignment;
  std::vector<LaplacianGraph> graphs;
  Eigen::MatrixXd filtered;
  std::vector<double> objective_trace;
  double objective = 0.0;
  int rounds = 0;
  bool converged = false;
  int restart = 0;
  std::uint64_t seed = 0;
};

/// Results directory: assignment.csv, graph_<k>.csv, filtered_signals.csv,
/// objective_trace.csv (round,objective) and summary.json.
void export_results(const fs::path& dir, const FitRecord& record);
FitRecord import_results(const fs::path& dir);

std::string metrics_header(int clusters);
std::string metrics_row(const MetricsRecord& r);

}  // namespace kmgl::io
