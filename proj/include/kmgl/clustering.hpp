#pragma once

#include "kmgl/filter.hpp"
#include "kmgl/graph.hpp"
#include "kmgl/graph_learning.hpp"
#include "kmgl/kernel.hpp"
#include "kmgl/signal_set.hpp"

#include <cstdint>
#include <vector>

namespace kmgl {

/// Output of one clustering run: the partition, one learned graph per
/// cluster, each signal filtered under its own cluster, and the score
///   sum_k [ sum_{x in cluster k} x^T M x_hat - gamma ||L_k||_F^2 ]
/// (M = I without masks).
struct ClusterState {
  std::vector<int> assignment;
  std::vector<LaplacianGraph> laplacians;
  Eigen::MatrixXd filtered;
  double objective = 0.0;
  /// Outer rounds executed.
  int iteration = 0;
  bool converged = false;
  /// Objective after the learning step of every round.
  std::vector<double> objective_trace;
  /// Number of empty-cluster repairs performed.
  int repairs = 0;
  /// Set when no signal carried any observed entry, so the partition is arbitrary.
  bool low_confidence = false;

  int clusters() const { return static_cast<int>(laplacians.size()); }
};

struct FitOptions {
  FilterParams filter;
  double gamma = 1e-4;
  int clusters = 2;
  std::uint64_t seed = 0;
  int max_outer_rounds = 200;
  /// epsilon, inner BCD cap and QP settings.
  BcdOptions bcd;
  Execution exec = Execution::Parallel;
};

/// Clusters `data` and learns one Laplacian per cluster. `kernels` holds
/// either one kernel shared by all clusters or one per cluster. Masks on
/// `data` switch to the masked filter and masked similarity.
///
/// Starts from a seeded random balanced partition, then alternates per-cluster
/// learning (warm-started from the previous round's graphs) with
/// reassignment until the partition is unchanged or `max_outer_rounds`.
/// A cluster left empty by reassignment receives the signal that fits its
/// current cluster worst.
ClusterState fit(const SignalSet& data, const std::vector<KernelOperator>& kernels, const FitOptions& opts);

/// fit() on a set that must carry masks.
ClusterState fit_masked(const SignalSet& data, const std::vector<KernelOperator>& kernels, const FitOptions& opts);

/// argmax_k x^T S_k x over the state's graphs; ties go to the lowest index.
int reassign(const Eigen::VectorXd& x, const ClusterState& state, const std::vector<KernelOperator>& kernels,
             const FilterParams& p);

/// argmax_k x^T M x_hat_k with x_hat_k from the masked filter.
int reassign_masked(const Eigen::VectorXd& x, const ObservationMask& mask, const ClusterState& state,
                    const std::vector<KernelOperator>& kernels, const FilterParams& p);

/// Similarity of every signal to every cluster (m x K), x^T M x_hat_k.
Eigen::MatrixXd similarity_matrix(const SignalSet& data, const std::vector<LaplacianGraph>& graphs,
                                  const std::vector<KernelOperator>& kernels, const FilterParams& p,
                                  Execution exec = Execution::Parallel);

/// Recomputes the clustering score from the stored filtered signals.
double objective(const ClusterState& state, const SignalSet& data, const FilterParams& p, double gamma);

/// Kernel used by cluster k (shared kernel when only one is supplied).
const KernelOperator& kernel_for(const std::vector<KernelOperator>& kernels, int k);

}  // namespace kmgl
