#include "kmgl/kernel.hpp"

#include "kmgl/error.hpp"

#include <cmath>
#include <optional>

namespace kmgl {

namespace {

// Cholesky that also rejects numerically singular pivots, which Eigen's LLT
// accepts as long as they stay positive.
std::optional<Eigen::LLT<Eigen::MatrixXd>> try_factorize(const Eigen::MatrixXd& A) {
  if (!A.allFinite()) return std::nullopt;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) return std::nullopt;
  const Eigen::VectorXd pivots = llt.matrixLLT().diagonal();
  const double max_diag = A.diagonal().cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < pivots.size(); ++i) {
    if (!(pivots[i] > 0.0) || pivots[i] * pivots[i] <= 1e-14 * max_diag) return std::nullopt;
  }
  return llt;
}

}  // namespace

Eigen::VectorXd KernelOperator::solve(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != nodes()) throw Error(ErrorKind::Dimension, "vector length does not match kernel");
  return llt_.solve(x);
}

Eigen::VectorXd KernelOperator::whiten(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != nodes()) throw Error(ErrorKind::Dimension, "vector length does not match kernel");
  return llt_.matrixL().solve(x);
}

double quad_inv(const KernelOperator& k, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != k.nodes()) throw Error(ErrorKind::Dimension, "vector length does not match kernel");
  return k.whiten(x).squaredNorm();
}

KernelOperator precomputed_kernel(const Eigen::MatrixXd& M, double jitter_policy) {
  if (M.rows() != M.cols()) throw Error(ErrorKind::Dimension, "kernel matrix must be square");
  if (M.rows() == 0) throw Error(ErrorKind::Dimension, "kernel matrix is empty");
  if (!M.allFinite()) throw Error(ErrorKind::InvalidKernel, "kernel matrix has non-finite entries");

  const Eigen::Index n = M.rows();
  const Eigen::MatrixXd sym = 0.5 * (M + M.transpose());

  KernelOperator k;
  auto llt = try_factorize(sym);
  double jitter = 0.0;
  if (!llt) {
    const double cap = 1e-4 * sym.trace() / static_cast<double>(n);
    for (jitter = jitter_policy; jitter <= cap * (1.0 + 1e-12); jitter *= 10.0) {
      llt = try_factorize(sym + jitter * Eigen::MatrixXd::Identity(n, n));
      if (llt) break;
    }
    if (!llt) throw Error(ErrorKind::InvalidKernel, "kernel is not positive definite after jitter escalation");
  }
  k.K_ = jitter > 0.0 ? Eigen::MatrixXd(sym + jitter * Eigen::MatrixXd::Identity(n, n)) : sym;
  k.llt_ = std::move(*llt);
  k.jitter_ = jitter;
  k.K_inv_ = k.llt_.solve(Eigen::MatrixXd::Identity(n, n));
  k.K_inv_ = 0.5 * (k.K_inv_ + k.K_inv_.transpose()).eval();
  return k;
}

KernelOperator diffusion_kernel(const LaplacianGraph& g, double eta) {
  if (!(eta > 0.0)) throw Error(ErrorKind::Configuration, "diffusion kernel needs eta > 0");
  const Eigen::Index n = g.nodes();
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) + eta * g.laplacian();
  auto llt = try_factorize(A);
  if (!llt) throw Error(ErrorKind::SingularKernel, "I + eta L could not be factorized");
  Eigen::MatrixXd K = llt->solve(Eigen::MatrixXd::Identity(n, n));
  K = 0.5 * (K + K.transpose()).eval();
  return precomputed_kernel(K);
}

KernelOperator rbf_kernel(const Eigen::MatrixXd& coordinates, double bandwidth, double jitter_policy) {
  if (!(bandwidth > 0.0)) throw Error(ErrorKind::Configuration, "RBF bandwidth must be positive");
  const Eigen::Index n = coordinates.rows();
  Eigen::MatrixXd K(n, n);
  const double denom = 2.0 * bandwidth * bandwidth;
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d2 = (coordinates.row(i) - coordinates.row(j)).squaredNorm();
      K(i, j) = K(j, i) = std::exp(-d2 / denom);
    }
  }
  return precomputed_kernel(K, jitter_policy);
}

}  // namespace kmgl
