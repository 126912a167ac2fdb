#pragma once

#include "kmgl/graph.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace kmgl {

inline constexpr double kDefaultJitter = 1e-10;

/// Symmetric positive-definite node kernel with a cached Cholesky factor.
///
/// All operations refer to the effective matrix K + jitter_applied * I, which
/// is what `matrix()` returns. `inverse()` is computed once at construction
/// from the factor; it exists for assembling the filter system and should not
/// be used for plain solves.
class KernelOperator {
 public:
  KernelOperator() = default;

  Eigen::Index nodes() const { return K_.rows(); }
  const Eigen::MatrixXd& matrix() const { return K_; }
  const Eigen::MatrixXd& inverse() const { return K_inv_; }
  double jitter_applied() const { return jitter_; }
  double trace() const { return K_.trace(); }

  /// K^{-1} x via two triangular solves.
  Eigen::VectorXd solve(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// C^{-1} x for the lower Cholesky factor C (K = C C^T).
  Eigen::VectorXd whiten(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  /// Lower-triangular factor C with K = C C^T.
  Eigen::MatrixXd cholesky_factor() const { return llt_.matrixL(); }

 private:
  friend KernelOperator precomputed_kernel(const Eigen::MatrixXd& M, double jitter_policy);

  Eigen::MatrixXd K_;
  Eigen::MatrixXd K_inv_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double jitter_ = 0.0;
};

/// x^T K^{-1} x through the cached factor: ||C^{-1} x||^2.
double quad_inv(const KernelOperator& k, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Symmetrizes M and factorizes it. On failure, jitter * I is added starting at
/// `jitter_policy` and growing by 10x up to 1e-4 * trace(M) / n.
KernelOperator precomputed_kernel(const Eigen::MatrixXd& M, double jitter_policy = kDefaultJitter);

/// K = (I + eta L)^{-1}, solved against the identity and symmetrized.
KernelOperator diffusion_kernel(const LaplacianGraph& g, double eta);

/// Gaussian RBF on node coordinates (one row per node):
/// K_ij = exp(-||p_i - p_j||^2 / (2 h^2)).
KernelOperator rbf_kernel(const Eigen::MatrixXd& coordinates, double bandwidth,
                          double jitter_policy = kDefaultJitter);

}  // namespace kmgl
