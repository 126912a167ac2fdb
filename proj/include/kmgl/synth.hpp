#pragma once

#include "kmgl/graph.hpp"
#include "kmgl/kernel.hpp"
#include "kmgl/signal_set.hpp"

#include <cstdint>
#include <vector>

namespace kmgl {

struct SynthConfig {
  Eigen::Index n = 20;
  Eigen::Index m = 500;
  int clusters = 3;
  double edge_prob = 0.3;
  double eta = 10.0;
  double snr_db = 15.0;
  double missing_rate = 0.0;
  std::uint64_t seed = 0;

  /// Throws Configuration on out-of-range parameters.
  void validate() const;
};

struct SyntheticDataset {
  SynthConfig config;
  double sigma_eps = 0.0;
  std::vector<LaplacianGraph> truth_graphs;
  std::vector<KernelOperator> kernels;
  /// Masks are present only when missing_rate > 0; unobserved entries of X
  /// are stored as zero.
  SignalSet signals;
  std::vector<int> truth_assignment;
};

/// Signals per cluster: m / K each, earlier clusters taking the remainder.
std::vector<Eigen::Index> cluster_sizes(Eigen::Index m, int clusters);

/// Draws K trace-normalized Erdos-Renyi graphs, their diffusion kernels
/// (I + eta L)^{-1}, and m zero-mean Gaussian signals with covariance
/// K_k + sigma^2 I, sigma chosen for the target SNR. Signals are stored
/// cluster by cluster. Entry i of a signal is observed with probability
/// 1 - missing_rate.
///
/// Seeds: cluster k draws its graph from mix_seed(seed, 3k), its signals from
/// mix_seed(seed, 3k + 1) and its masks from mix_seed(seed, 3k + 2). Masks use
/// one uniform draw per entry compared against missing_rate, so with a fixed
/// seed the missing sets are nested as the rate grows.
SyntheticDataset generate(const SynthConfig& config);

}  // namespace kmgl
