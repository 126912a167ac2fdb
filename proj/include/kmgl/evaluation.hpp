#pragma once

#include "kmgl/graph.hpp"
#include "kmgl/kernel.hpp"
#include "kmgl/parallel.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace kmgl {

struct MetricsRecord {
  std::uint64_t seed = 0;
  int clusters = 0;
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  double snr_db = 0.0;
  double missing_rate = 0.0;
  double car = 0.0;
  std::vector<double> aps_per_cluster;
  double aps_mean = 0.0;
  int rounds = 0;
  bool converged = false;
};

/// Maximum-weight perfect matching on a square matrix (Hungarian method).
/// Returns col_for_row.
std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weights);

/// Predicted-label -> true-label map maximizing agreement; labels in [0, K).
std::vector<int> best_label_map(const std::vector<int>& pred, const std::vector<int>& truth, int clusters);

/// Clustering accuracy ratio under the best label map. `clusters` <= 0 infers
/// K from the largest label.
double car(const std::vector<int>& pred, const std::vector<int>& truth, int clusters = 0);

/// Average precision of ranking node pairs by predicted weight against the
/// true edge set (weight > 0). Tied scores form a single threshold.
double aps(const LaplacianGraph& predicted, const LaplacianGraph& truth);

/// Score-vector form of aps().
double average_precision(const Eigen::VectorXd& scores, const std::vector<bool>& positive);

/// APS of each true graph against the learned graph mapped to it by the CAR
/// label map; entry j belongs to true cluster j.
std::vector<double> aligned_aps(const std::vector<LaplacianGraph>& learned, const std::vector<LaplacianGraph>& truth,
                                const std::vector<int>& pred, const std::vector<int>& truth_assignment);

/// 10 log10( sum_c tr(K_c) / (K n sigma^2) ).
double snr_db(const std::vector<KernelOperator>& kernels, double sigma_eps, Eigen::Index n);
double snr_db(const std::vector<double>& kernel_traces, double sigma_eps, Eigen::Index n);

/// Noise standard deviation giving `target_db` under snr_db().
double sigma_for_snr(const std::vector<KernelOperator>& kernels, double target_db, Eigen::Index n);
double sigma_for_snr(const std::vector<double>& kernel_traces, double target_db, Eigen::Index n);

struct KMeansResult {
  std::vector<int> assignment;
  double inertia = 0.0;
  int iterations = 0;
  /// Within-cluster sum of squares after every centroid update.
  std::vector<double> inertia_history;
};

/// Lloyd's algorithm on the columns of X with seeded random-point
/// initialization. An empty cluster is reseeded with the point farthest from
/// its centroid.
KMeansResult kmeans(const Eigen::MatrixXd& X, int clusters, std::uint64_t seed, int max_iter = 300,
                    Execution exec = Execution::Parallel);

/// Best of `restarts` kmeans() runs by inertia; restart r uses mix_seed(seed, r).
KMeansResult kmeans_baseline(const Eigen::MatrixXd& X, int clusters, std::uint64_t seed, int max_iter = 300,
                             int restarts = 1, Execution exec = Execution::Parallel);

}  // namespace kmgl
