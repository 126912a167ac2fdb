#include "kmgl/synth.hpp"

#include "kmgl/error.hpp"
#include "kmgl/evaluation.hpp"
#include "kmgl/parallel.hpp"

#include <cmath>
#include <random>

namespace kmgl {

void SynthConfig::validate() const {
  if (n < 2) throw Error(ErrorKind::Configuration, "need at least two nodes");
  if (clusters < 1) throw Error(ErrorKind::Configuration, "need at least one cluster");
  if (m < clusters) throw Error(ErrorKind::Configuration, "need at least one signal per cluster");
  if (!(edge_prob > 0.0 && edge_prob <= 1.0)) throw Error(ErrorKind::Configuration, "edge probability must lie in (0, 1]");
  if (!(eta > 0.0)) throw Error(ErrorKind::Configuration, "eta must be positive");
  if (!std::isfinite(snr_db)) throw Error(ErrorKind::Configuration, "SNR must be finite");
  if (!(missing_rate >= 0.0 && missing_rate < 1.0)) {
    throw Error(ErrorKind::Configuration, "missing rate must lie in [0, 1)");
  }
}

std::vector<Eigen::Index> cluster_sizes(Eigen::Index m, int clusters) {
  std::vector<Eigen::Index> sizes(static_cast<std::size_t>(clusters), m / clusters);
  for (Eigen::Index k = 0; k < m % clusters; ++k) ++sizes[static_cast<std::size_t>(k)];
  return sizes;
}

SyntheticDataset generate(const SynthConfig& config) {
  config.validate();
  const Eigen::Index n = config.n;
  const int clusters = config.clusters;

  SyntheticDataset ds;
  ds.config = config;
  for (int k = 0; k < clusters; ++k) {
    const auto stream = static_cast<std::uint64_t>(3 * k);
    ds.truth_graphs.push_back(erdos_renyi(n, config.edge_prob, mix_seed(config.seed, stream)));
    ds.kernels.push_back(diffusion_kernel(ds.truth_graphs.back(), config.eta));
  }
  ds.sigma_eps = sigma_for_snr(ds.kernels, config.snr_db, n);
  const double noise_var = ds.sigma_eps * ds.sigma_eps;

  const auto sizes = cluster_sizes(config.m, clusters);
  ds.signals.X.resize(n, config.m);
  ds.truth_assignment.reserve(static_cast<std::size_t>(config.m));
  const bool masked = config.missing_rate > 0.0;
  if (masked) ds.signals.masks.reserve(static_cast<std::size_t>(config.m));

  Eigen::Index col = 0;
  for (int k = 0; k < clusters; ++k) {
    const Eigen::MatrixXd cov =
        ds.kernels[static_cast<std::size_t>(k)].matrix() + noise_var * Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd chol = precomputed_kernel(cov).cholesky_factor();

    std::mt19937_64 signal_rng(mix_seed(config.seed, static_cast<std::uint64_t>(3 * k + 1)));
    std::mt19937_64 mask_rng(mix_seed(config.seed, static_cast<std::uint64_t>(3 * k + 2)));
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(n);
    for (Eigen::Index s = 0; s < sizes[static_cast<std::size_t>(k)]; ++s, ++col) {
      for (Eigen::Index i = 0; i < n; ++i) z[i] = normal(signal_rng);
      ds.signals.X.col(col) = chol * z;
      ds.truth_assignment.push_back(k);
      if (masked) {
        std::vector<bool> observed(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
          const double u = static_cast<double>(mask_rng() >> 11) * 0x1.0p-53;
          observed[static_cast<std::size_t>(i)] = !(u < config.missing_rate);
          if (!observed[static_cast<std::size_t>(i)]) ds.signals.X(i, col) = 0.0;
        }
        ds.signals.masks.emplace_back(std::move(observed));
      }
    }
  }
  return ds;
}

}  // namespace kmgl
