#include "kmgl/filter.hpp"
#include "kmgl/graph.hpp"
#include "kmgl/kernel.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

#include <Eigen/Eigenvalues>

using namespace kmgl;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using testutil::kind_of;

namespace {

struct Instance {
  KernelOperator k;
  LaplacianGraph g;
  VectorXd x;
};

Instance random_instance(Eigen::Index n, std::mt19937_64& rng) {
  return {precomputed_kernel(oracle::random_spd(n, rng)), laplacian_from_weights(oracle::random_weights(n, rng), n),
          oracle::random_vector(n, rng)};
}

ObservationMask random_mask(Eigen::Index n, std::mt19937_64& rng, double keep = 0.5) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<bool> obs(static_cast<std::size_t>(n));
  for (auto&& o : obs) o = U(rng) < keep;
  return ObservationMask(obs);
}

MatrixXd dense_system(const Instance& t, const VectorXd& mask, const FilterParams& p) {
  return MatrixXd(mask.asDiagonal()) + p.alpha * oracle::inverse(t.k.matrix()) + p.beta * t.g.laplacian();
}

}  // namespace

TEST_CASE("lowpass filter examples") {
  std::mt19937_64 rng(1);
  SUBCASE("alpha = beta = 0 is the identity") {
    const auto t = random_instance(6, rng);
    CHECK(oracle::rel_err(lowpass_filter(t.x, t.k, t.g, {0.0, 0.0}), t.x) <= 1e-14);
  }
  SUBCASE("eigenvector of L with K = I") {
    const auto g = laplacian_from_weights(oracle::random_weights(6, rng), 6);
    const auto k = precomputed_kernel(MatrixXd::Identity(6, 6));
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(g.laplacian());
    const FilterParams p{0.3, 0.7};
    for (int i = 0; i < 6; ++i) {
      const VectorXd u = es.eigenvectors().col(i);
      const double lambda = es.eigenvalues()[i];
      CHECK(oracle::rel_err(lowpass_filter(u, k, g, p), VectorXd(u / (1.0 + p.alpha + p.beta * lambda))) <= 1e-10);
    }
  }
  SUBCASE("constant signal with K = I") {
    const auto g = laplacian_from_weights(oracle::random_weights(5, rng), 5);
    const auto k = precomputed_kernel(MatrixXd::Identity(5, 5));
    const VectorXd out = lowpass_filter(VectorXd::Ones(5), k, g, {0.25, 3.0});
    CHECK(oracle::rel_err(out, VectorXd::Constant(5, 1.0 / 1.25)) <= 1e-12);
  }
  SUBCASE("random instances against a dense solve") {
    for (int i = 0; i < 30; ++i) {
      const auto t = random_instance(5, rng);
      const FilterParams p{0.1 + (rng() % 100) / 50.0, 0.1 + (rng() % 100) / 50.0};
      const VectorXd expected = oracle::solve(dense_system(t, VectorXd::Ones(5), p), t.x);
      const VectorXd got = lowpass_filter(t.x, t.k, t.g, p);
      CHECK(oracle::rel_err(got, expected) <= 1e-8);
      CHECK(filter_residual(t.x, got, t.k, t.g, p) <= 1e-8 * t.x.lpNorm<Eigen::Infinity>());
    }
  }
  SUBCASE("invalid parameters") {
    const auto t = random_instance(3, rng);
    CHECK(kind_of([&] { lowpass_filter(t.x, t.k, t.g, {-1.0, 0.0}); }) == ErrorKind::Configuration);
    CHECK(kind_of([&] { lowpass_filter(VectorXd::Ones(4), t.k, t.g, {}); }) == ErrorKind::Dimension);
  }
}

TEST_CASE("filter spectrum lies in (0, 1]") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const auto t = random_instance(6, rng);
    const FilterParams p{(rng() % 10) / 5.0, (rng() % 10) / 5.0};
    const MatrixXd S = oracle::inverse(dense_system(t, VectorXd::Ones(6), p));
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (S + S.transpose()));
    CHECK(es.eigenvalues().minCoeff() > 0.0);
    CHECK(es.eigenvalues().maxCoeff() <= 1.0 + 1e-12);
  }
}

TEST_CASE("masked filter") {
  std::mt19937_64 rng(3);
  const FilterParams p{0.5, 0.5};
  SUBCASE("full mask equals the low-pass filter") {
    for (int i = 0; i < 20; ++i) {
      const auto t = random_instance(7, rng);
      const VectorXd a = masked_filter(t.x, ObservationMask::full(7), t.k, t.g, p);
      const VectorXd b = lowpass_filter(t.x, t.k, t.g, p);
      CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-12);
    }
  }
  SUBCASE("empty mask gives zero") {
    const auto t = random_instance(5, rng);
    CHECK(masked_filter(t.x, ObservationMask::empty(5), t.k, t.g, p).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("half observed against a dense solve") {
    for (int i = 0; i < 30; ++i) {
      const auto t = random_instance(5, rng);
      const auto m = random_mask(5, rng);
      const VectorXd expected =
          oracle::solve(dense_system(t, m.diagonal(), p), VectorXd(m.diagonal().cwiseProduct(t.x)));
      CHECK(oracle::rel_err(masked_filter(t.x, m, t.k, t.g, p), expected) <= 1e-8);
    }
  }
  SUBCASE("unobserved entries are ignored") {
    const auto t = random_instance(6, rng);
    const auto m = random_mask(6, rng);
    VectorXd y = t.x;
    for (Eigen::Index i = 0; i < 6; ++i)
      if (!m.observed(i)) y[i] += 100.0;
    CHECK(masked_filter(t.x, m, t.k, t.g, p) == masked_filter(y, m, t.k, t.g, p));
  }
  SUBCASE("output minimizes the masked convex problem") {
    for (int i = 0; i < 20; ++i) {
      const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 7);
      const auto t = random_instance(n, rng);
      const auto m = random_mask(n, rng);
      const VectorXd y = oracle::masked_minimizer(t.x, m.diagonal(), oracle::inverse(t.k.matrix()),
                                                  t.g.laplacian(), p.alpha, p.beta);
      CHECK(oracle::rel_err(masked_filter(t.x, m, t.k, t.g, p), y) <= 1e-6);
    }
  }
  SUBCASE("alpha = beta = 0 with a partial mask is singular") {
    const auto t = random_instance(4, rng);
    std::vector<bool> obs{true, false, true, true};
    CHECK(kind_of([&] { masked_filter(t.x, ObservationMask(obs), t.k, t.g, {0.0, 0.0}); }) ==
          ErrorKind::SingularFilter);
  }
}

TEST_CASE("batch filters match single-signal filters") {
  std::mt19937_64 rng(4);
  const auto t = random_instance(8, rng);
  const FilterParams p{0.2, 0.4};
  MatrixXd X(8, 12);
  std::vector<ObservationMask> masks;
  for (int c = 0; c < 12; ++c) {
    X.col(c) = oracle::random_vector(8, rng);
    masks.push_back(random_mask(8, rng, 0.7));
  }
  const LowpassOperator op(t.k, t.g, p);
  const MatrixXd all = op.apply_all(X);
  const MatrixXd masked = masked_filter_all(X, masks, t.k, t.g, p);
  for (int c = 0; c < 12; ++c) {
    CHECK(all.col(c) == lowpass_filter(X.col(c), t.k, t.g, p));
    CHECK(masked.col(c) == masked_filter(X.col(c), masks[static_cast<std::size_t>(c)], t.k, t.g, p));
  }
}

TEST_CASE("iterative reconstruction") {
  std::mt19937_64 rng(5);
  SUBCASE("full mask converges in one step") {
    const auto t = random_instance(6, rng);
    const FilterParams p{0.3, 0.3};
    const auto r = iterative_reconstruct(t.x, ObservationMask::full(6), t.k, t.g, p);
    CHECK(r.converged);
    CHECK(r.iterations <= 2);
    CHECK(oracle::rel_err(r.estimate, lowpass_filter(t.x, t.k, t.g, p)) <= 1e-12);
  }
  SUBCASE("limit equals the masked filter") {
    for (int i = 0; i < 20; ++i) {
      const auto t = random_instance(6, rng);
      const auto m = random_mask(6, rng, 0.6);
      const FilterParams p{1.0, 1.0};
      const double tol = 1e-10;
      const auto r = iterative_reconstruct(t.x, m, t.k, t.g, p, 100000, tol);
      CHECK(r.converged);
      CHECK((r.estimate - masked_filter(t.x, m, t.k, t.g, p)).lpNorm<Eigen::Infinity>() <= 10 * tol);
    }
  }
  SUBCASE("gap decreases monotonically at alpha = beta = 0.01") {
    for (int i = 0; i < 10; ++i) {
      const auto t = random_instance(6, rng);
      const auto m = random_mask(6, rng, 0.6);
      const auto r = iterative_reconstruct(t.x, m, t.k, t.g, {0.01, 0.01}, 200, 0.0);
      CHECK(r.gap_history.size() == static_cast<std::size_t>(r.iterations));
      for (std::size_t s = 1; s < r.gap_history.size(); ++s)
        CHECK(r.gap_history[s] <= r.gap_history[s - 1] * (1.0 + 1e-12) + 1e-300);
    }
  }
  SUBCASE("bad arguments") {
    const auto t = random_instance(3, rng);
    CHECK(kind_of([&] { iterative_reconstruct(t.x, ObservationMask::full(3), t.k, t.g, {1, 1}, 0); }) ==
          ErrorKind::Configuration);
    std::vector<bool> obs{true, false, true};
    CHECK(kind_of([&] { iterative_reconstruct(t.x, ObservationMask(obs), t.k, t.g, {0, 0}); }) ==
          ErrorKind::SingularFilter);
  }
}
