#include "kmgl/graph.hpp"

#include "kmgl/error.hpp"

#include <cmath>
#include <random>
#include <string>

namespace kmgl {

std::pair<Eigen::Index, Eigen::Index> EdgePairIndex::pair(Eigen::Index e) const {
  if (e < 0 || e >= size()) {
    throw Error(ErrorKind::Dimension, "edge index " + std::to_string(e) + " out of range");
  }
  Eigen::Index i = 0;
  Eigen::Index row_len = n_ - 1;
  while (e >= row_len) {
    e -= row_len;
    ++i;
    --row_len;
  }
  return {i, i + 1 + e};
}

Eigen::MatrixXd LaplacianGraph::adjacency() const {
  Eigen::MatrixXd W = -L_;
  W.diagonal().setZero();
  return W;
}

double LaplacianGraph::frobenius_sq() const {
  return L_.diagonal().squaredNorm() + 2.0 * w_.squaredNorm();
}

double LaplacianGraph::quadratic_form(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != n_) throw Error(ErrorKind::Dimension, "signal length does not match graph");
  double acc = 0.0;
  Eigen::Index e = 0;
  for (Eigen::Index i = 0; i < n_; ++i) {
    for (Eigen::Index j = i + 1; j < n_; ++j, ++e) {
      const double diff = x[i] - x[j];
      acc += w_[e] * diff * diff;
    }
  }
  return acc;
}

Eigen::Index LaplacianGraph::edge_count() const {
  return (w_.array() > 0.0).count();
}

LaplacianGraph laplacian_from_weights(const Eigen::VectorXd& w, Eigen::Index n) {
  if (n < 1) throw Error(ErrorKind::Dimension, "graph needs at least one node");
  if (w.size() != EdgePairIndex::pairs_for(n)) {
    throw Error(ErrorKind::Dimension, "expected " + std::to_string(EdgePairIndex::pairs_for(n)) +
                                          " edge weights, got " + std::to_string(w.size()));
  }
  for (Eigen::Index e = 0; e < w.size(); ++e) {
    if (!std::isfinite(w[e]) || w[e] < 0.0) {
      throw Error(ErrorKind::InvalidWeight, "weight " + std::to_string(e) + " is " + std::to_string(w[e]));
    }
  }

  LaplacianGraph g;
  g.n_ = n;
  g.w_ = w;
  g.L_ = Eigen::MatrixXd::Zero(n, n);
  Eigen::Index e = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j, ++e) {
      g.L_(i, j) = -w[e];
      g.L_(j, i) = -w[e];
    }
  }
  // Degrees summed in a fixed order per row so every row sums to zero up to
  // rounding of that single accumulation.
  for (Eigen::Index i = 0; i < n; ++i) {
    double d = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j != i) d -= g.L_(i, j);
    }
    g.L_(i, i) = d;
  }
  return g;
}

LaplacianGraph normalize_trace(const LaplacianGraph& g) {
  const double tr = g.trace();
  if (!(tr > 0.0)) throw Error(ErrorKind::DegenerateGraph, "cannot normalize a graph without edges");
  const double scale = static_cast<double>(g.nodes()) / tr;
  LaplacianGraph out = laplacian_from_weights(g.weights() * scale, g.nodes());
  out.normalized_ = true;
  return out;
}

LaplacianGraph erdos_renyi(Eigen::Index n, double p, std::uint64_t seed) {
  if (!(p > 0.0 && p <= 1.0)) throw Error(ErrorKind::Configuration, "edge probability must lie in (0, 1]");
  if (n < 2) throw Error(ErrorKind::Configuration, "Erdos-Renyi graph needs n >= 2");
  const Eigen::Index pairs = EdgePairIndex::pairs_for(n);
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::mt19937_64 rng(seed + static_cast<std::uint64_t>(attempt));
    Eigen::VectorXd w(pairs);
    bool any = false;
    for (Eigen::Index e = 0; e < pairs; ++e) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      w[e] = u < p ? 1.0 : 0.0;
      any = any || w[e] > 0.0;
    }
    if (any) return normalize_trace(laplacian_from_weights(w, n));
  }
  throw Error(ErrorKind::DegenerateGraph, "Erdos-Renyi draw produced no edges in 100 attempts");
}

LaplacianGraph uniform_graph(Eigen::Index n) {
  if (n < 2) throw Error(ErrorKind::Configuration, "uniform graph needs n >= 2");
  const Eigen::Index pairs = EdgePairIndex::pairs_for(n);
  return normalize_trace(laplacian_from_weights(Eigen::VectorXd::Ones(pairs), n));
}

LaplacianGraph graph_from_adjacency(const Eigen::MatrixXd& adjacency) {
  const Eigen::Index n = adjacency.rows();
  if (adjacency.cols() != n) throw Error(ErrorKind::Dimension, "adjacency matrix must be square");
  Eigen::VectorXd w(EdgePairIndex::pairs_for(n));
  Eigen::Index e = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (adjacency(i, i) != 0.0) throw Error(ErrorKind::InvalidWeight, "adjacency has a self-loop");
    for (Eigen::Index j = i + 1; j < n; ++j, ++e) {
      const double a = adjacency(i, j);
      const double b = adjacency(j, i);
      if (std::abs(a - b) > 1e-12 * std::max({1.0, std::abs(a), std::abs(b)})) {
        throw Error(ErrorKind::InvalidWeight, "adjacency matrix is not symmetric");
      }
      w[e] = a;
    }
  }
  return laplacian_from_weights(w, n);
}

}  // namespace kmgl
