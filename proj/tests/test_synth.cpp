#include "kmgl/evaluation.hpp"
#include "kmgl/synth.hpp"
#include "test_util.hpp"

#include <cmath>

using namespace kmgl;
using Eigen::MatrixXd;
using testutil::kind_of;

TEST_CASE("cluster sizes") {
  CHECK(cluster_sizes(500, 3) == std::vector<Eigen::Index>{167, 167, 166});
  CHECK(cluster_sizes(9, 3) == std::vector<Eigen::Index>{3, 3, 3});
  CHECK(cluster_sizes(5, 1) == std::vector<Eigen::Index>{5});
}

TEST_CASE("default configuration") {
  SynthConfig cfg;
  CHECK(cfg.n == 20);
  CHECK(cfg.m == 500);
  CHECK(cfg.clusters == 3);
  CHECK(cfg.edge_prob == 0.3);
  CHECK(cfg.eta == 10.0);
  CHECK(cfg.snr_db == 15.0);
  const auto ds = generate(cfg);
  CHECK(ds.signals.X.rows() == 20);
  CHECK(ds.signals.X.cols() == 500);
  CHECK_FALSE(ds.signals.has_masks());
  CHECK(ds.truth_graphs.size() == 3);
  for (const auto& g : ds.truth_graphs) CHECK(std::abs(g.trace() - 20.0) <= 1e-8);
  CHECK(snr_db(ds.kernels, ds.sigma_eps, 20) == doctest::Approx(15.0).epsilon(1e-12));
  // Signals are stored cluster by cluster.
  for (std::size_t i = 1; i < ds.truth_assignment.size(); ++i) CHECK(ds.truth_assignment[i] >= ds.truth_assignment[i - 1]);
  for (int k = 0; k < 3; ++k) {
    const auto expected = diffusion_kernel(ds.truth_graphs[static_cast<std::size_t>(k)], 10.0);
    CHECK((ds.kernels[static_cast<std::size_t>(k)].matrix() - expected.matrix()).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("identical seeds give identical data") {
  SynthConfig cfg;
  cfg.n = 10;
  cfg.m = 50;
  cfg.missing_rate = 0.3;
  cfg.seed = 12;
  const auto a = generate(cfg);
  const auto b = generate(cfg);
  CHECK(a.signals.X == b.signals.X);
  CHECK(a.signals.masks == b.signals.masks);
  for (std::size_t k = 0; k < a.truth_graphs.size(); ++k) CHECK(a.truth_graphs[k].weights() == b.truth_graphs[k].weights());
  cfg.seed = 13;
  CHECK(generate(cfg).signals.X != a.signals.X);
}

TEST_CASE("sample covariance matches the kernel in the low-noise limit") {
  SynthConfig cfg;
  cfg.n = 6;
  cfg.m = 50000;
  cfg.clusters = 1;
  cfg.snr_db = 200.0;
  cfg.seed = 4;
  const auto ds = generate(cfg);
  const MatrixXd& X = ds.signals.X;
  const MatrixXd S = X * X.transpose() / static_cast<double>(cfg.m);
  const MatrixXd& K = ds.kernels[0].matrix();
  for (Eigen::Index i = 0; i < 6; ++i) {
    for (Eigen::Index j = 0; j < 6; ++j) {
      const double se = std::sqrt((K(i, i) * K(j, j) + K(i, j) * K(i, j)) / static_cast<double>(cfg.m));
      CHECK(std::abs(S(i, j) - K(i, j)) <= 5.0 * se);
    }
  }
}

TEST_CASE("empirical SNR per cluster") {
  SynthConfig cfg;
  cfg.m = 600;
  cfg.seed = 8;
  for (double target : {0.0, 15.0}) {
    cfg.snr_db = target;
    const auto ds = generate(cfg);
    const double noise = ds.sigma_eps * ds.sigma_eps;
    const auto sizes = cluster_sizes(cfg.m, cfg.clusters);
    Eigen::Index col = 0;
    double total_signal = 0.0;
    for (int k = 0; k < cfg.clusters; ++k) {
      const Eigen::Index mk = sizes[static_cast<std::size_t>(k)];
      const double power = ds.signals.X.middleCols(col, mk).squaredNorm() / static_cast<double>(mk * cfg.n);
      total_signal += power - noise;
      col += mk;
    }
    const double snr = 10.0 * std::log10(total_signal / (cfg.clusters * noise));
    CHECK(std::abs(snr - target) <= 1.0);
  }
}

TEST_CASE("masks") {
  SynthConfig cfg;
  cfg.n = 12;
  cfg.m = 300;
  cfg.seed = 21;
  SUBCASE("r = 0 has no masks") { CHECK_FALSE(generate(cfg).signals.has_masks()); }
  SUBCASE("missing fraction, zeroed entries and nesting") {
    cfg.missing_rate = 0.2;
    const auto low = generate(cfg);
    cfg.missing_rate = 0.4;
    const auto high = generate(cfg);
    cfg.missing_rate = 0.0;
    const auto full = generate(cfg);
    double missing = 0.0;
    for (Eigen::Index c = 0; c < cfg.m; ++c) {
      const auto& ml = low.signals.masks[static_cast<std::size_t>(c)];
      const auto& mh = high.signals.masks[static_cast<std::size_t>(c)];
      for (Eigen::Index i = 0; i < cfg.n; ++i) {
        if (!ml.observed(i)) {
          missing += 1.0;
          CHECK_FALSE(mh.observed(i));
          CHECK(low.signals.X(i, c) == 0.0);
        } else {
          CHECK(low.signals.X(i, c) == full.signals.X(i, c));
        }
      }
    }
    const double total = static_cast<double>(cfg.m * cfg.n);
    const double se = std::sqrt(0.2 * 0.8 / total);
    CHECK(std::abs(missing / total - 0.2) <= 5.0 * se);
  }
}

TEST_CASE("configuration errors") {
  SynthConfig cfg;
  cfg.missing_rate = 1.0;
  CHECK(kind_of([&] { generate(cfg); }) == ErrorKind::Configuration);
  cfg = SynthConfig{};
  cfg.m = 2;
  CHECK(kind_of([&] { generate(cfg); }) == ErrorKind::Configuration);
  cfg = SynthConfig{};
  cfg.edge_prob = 0.0;
  CHECK(kind_of([&] { generate(cfg); }) == ErrorKind::Configuration);
  cfg = SynthConfig{};
  cfg.eta = -1.0;
  CHECK(kind_of([&] { generate(cfg); }) == ErrorKind::Configuration);
}
