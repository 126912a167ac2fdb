#include "kmgl/clustering.hpp"
#include "kmgl/evaluation.hpp"
#include "kmgl/parallel.hpp"
#include "kmgl/synth.hpp"
#include "oracles.hpp"

#include <doctest.h>

using namespace kmgl;
using Eigen::MatrixXd;

namespace {

struct ThreadGuard {
  explicit ThreadGuard(int t) : saved(num_threads()) { set_num_threads(t); }
  ~ThreadGuard() { set_num_threads(saved); }
  int saved;
};

SyntheticDataset dataset(double missing_rate, std::uint64_t seed) {
  SynthConfig cfg;
  cfg.n = 15;
  cfg.m = 120;
  cfg.clusters = 3;
  cfg.missing_rate = missing_rate;
  cfg.seed = seed;
  return generate(cfg);
}

}  // namespace

TEST_CASE("mix_seed separates streams") {
  CHECK(mix_seed(1, 0) != mix_seed(1, 1));
  CHECK(mix_seed(1, 0) != mix_seed(2, 0));
  CHECK(mix_seed(7, 3) == mix_seed(7, 3));
}

TEST_CASE("serial and parallel kernels agree bitwise") {
  ThreadGuard guard(4);
  std::mt19937_64 rng(11);
  const Eigen::Index n = 12;
  const auto k = precomputed_kernel(oracle::random_spd(n, rng));
  const auto g = laplacian_from_weights(oracle::random_weights(n, rng), n);
  const FilterParams p{0.3, 0.6};
  MatrixXd X(n, 90);
  std::vector<ObservationMask> masks;
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    X.col(c) = oracle::random_vector(n, rng);
    std::vector<bool> obs(static_cast<std::size_t>(n));
    for (auto&& o : obs) o = U(rng) < 0.7;
    masks.emplace_back(obs);
  }

  SUBCASE("low-pass batch") {
    const LowpassOperator op(k, g, p);
    CHECK(op.apply_all(X, Execution::Serial) == op.apply_all(X, Execution::Parallel));
  }
  SUBCASE("masked batch") {
    CHECK(masked_filter_all(X, masks, k, g, p, Execution::Serial) ==
          masked_filter_all(X, masks, k, g, p, Execution::Parallel));
  }
  SUBCASE("qp statistics") {
    const auto a = build_qp(X, 0.5, 1e-3, Execution::Serial);
    const auto b = build_qp(X, 0.5, 1e-3, Execution::Parallel);
    CHECK(a.z == b.z);
  }
  SUBCASE("similarity matrix") {
    const auto ds = dataset(0.0, 3);
    const auto masked = dataset(0.3, 3);
    for (const auto* d : {&ds, &masked}) {
      CHECK(similarity_matrix(d->signals, d->truth_graphs, d->kernels, p, Execution::Serial) ==
            similarity_matrix(d->signals, d->truth_graphs, d->kernels, p, Execution::Parallel));
    }
  }
  SUBCASE("kmeans") {
    const auto a = kmeans(X, 4, 9, 300, Execution::Serial);
    const auto b = kmeans(X, 4, 9, 300, Execution::Parallel);
    CHECK(a.assignment == b.assignment);
    CHECK(a.inertia == b.inertia);
  }
}

TEST_CASE("fit is identical for serial, parallel and any thread count") {
  for (double r : {0.0, 0.3}) {
    const auto ds = dataset(r, 5);
    FitOptions opts;
    opts.filter = {1e-2, 1e-2};
    opts.clusters = 3;
    opts.seed = 17;
    opts.exec = Execution::Serial;
    const auto reference = fit(ds.signals, ds.kernels, opts);
    for (int threads : {1, 2, 4}) {
      ThreadGuard guard(threads);
      opts.exec = Execution::Parallel;
      const auto got = fit(ds.signals, ds.kernels, opts);
      CHECK(got.assignment == reference.assignment);
      CHECK(got.objective_trace == reference.objective_trace);
      CHECK(got.filtered == reference.filtered);
      for (std::size_t c = 0; c < got.laplacians.size(); ++c)
        CHECK(got.laplacians[c].weights() == reference.laplacians[c].weights());
    }
  }
}
