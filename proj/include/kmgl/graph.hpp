#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <utility>

namespace kmgl {

/// Bijection between unordered node pairs (i < j) and a flat edge index.
/// Pairs are enumerated row-major over the strict upper triangle:
/// (0,1), (0,2), ..., (0,n-1), (1,2), ...
class EdgePairIndex {
 public:
  explicit EdgePairIndex(Eigen::Index n) : n_(n) {}

  Eigen::Index nodes() const { return n_; }
  Eigen::Index size() const { return n_ * (n_ - 1) / 2; }

  Eigen::Index flat(Eigen::Index i, Eigen::Index j) const {
    if (i > j) std::swap(i, j);
    return i * (2 * n_ - i - 1) / 2 + (j - i - 1);
  }

  std::pair<Eigen::Index, Eigen::Index> pair(Eigen::Index e) const;

  static Eigen::Index pairs_for(Eigen::Index n) { return n * (n - 1) / 2; }

 private:
  Eigen::Index n_;
};

/// Undirected weighted graph without self-loops, stored as its upper-triangle
/// edge weights together with the derived combinatorial Laplacian L = D - W.
class LaplacianGraph {
 public:
  LaplacianGraph() = default;

  Eigen::Index nodes() const { return n_; }
  const Eigen::VectorXd& weights() const { return w_; }
  const Eigen::MatrixXd& laplacian() const { return L_; }
  Eigen::VectorXd degrees() const { return L_.diagonal(); }
  Eigen::MatrixXd adjacency() const;

  double trace() const { return L_.trace(); }
  /// ||L||_F^2 = sum_i d_i^2 + 2 sum_e w_e^2.
  double frobenius_sq() const;
  /// x^T L x evaluated edge-wise as sum_e w_e (x_i - x_j)^2.
  double quadratic_form(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::Index edge_count() const;
  bool normalized() const { return normalized_; }

 private:
  friend LaplacianGraph laplacian_from_weights(const Eigen::VectorXd& w, Eigen::Index n);
  friend LaplacianGraph normalize_trace(const LaplacianGraph& g);

  Eigen::Index n_ = 0;
  Eigen::VectorXd w_;
  Eigen::MatrixXd L_;
  bool normalized_ = false;
};

/// Builds L = diag(W 1) - W. Throws InvalidWeight on negative or non-finite
/// weights and Dimension when w.size() != n(n-1)/2.
LaplacianGraph laplacian_from_weights(const Eigen::VectorXd& w, Eigen::Index n);

/// Rescales the weights so that trace(L) = n, i.e. sum of weights n/2.
LaplacianGraph normalize_trace(const LaplacianGraph& g);

/// Binary Erdos-Renyi graph, trace-normalized. A draw with no edges is retried
/// with seed + 1, up to 100 attempts.
LaplacianGraph erdos_renyi(Eigen::Index n, double p, std::uint64_t seed);

/// Complete graph with uniform weights 1/(n-1) (trace n).
LaplacianGraph uniform_graph(Eigen::Index n);

/// Reads the upper triangle of a symmetric adjacency matrix.
LaplacianGraph graph_from_adjacency(const Eigen::MatrixXd& adjacency);

}  // namespace kmgl
