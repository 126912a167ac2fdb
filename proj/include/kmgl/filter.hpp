#pragma once

#include "kmgl/graph.hpp"
#include "kmgl/kernel.hpp"
#include "kmgl/parallel.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <vector>

namespace kmgl {

/// Weights of the side-information (alpha) and smoothness (beta) penalties in
/// the low-pass filter S = (I + alpha K^{-1} + beta L)^{-1}.
struct FilterParams {
  double alpha = 1e-2;
  double beta = 1e-2;

  /// Throws Configuration for negative or non-finite weights.
  void validate() const;
  bool is_identity() const { return alpha == 0.0 && beta == 0.0; }
};

/// Diagonal 0/1 observation mask M; true entries are observed.
class ObservationMask {
 public:
  ObservationMask() = default;
  explicit ObservationMask(std::vector<bool> observed);

  static ObservationMask full(Eigen::Index n);
  static ObservationMask empty(Eigen::Index n);

  Eigen::Index size() const { return diag_.size(); }
  bool observed(Eigen::Index i) const { return diag_[i] != 0.0; }
  Eigen::Index observed_count() const;
  bool is_full() const { return observed_count() == size(); }
  /// Diagonal of M as doubles.
  const Eigen::VectorXd& diagonal() const { return diag_; }
  /// M x (unobserved entries zeroed).
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  friend bool operator==(const ObservationMask& a, const ObservationMask& b) { return a.diag_ == b.diag_; }

 private:
  Eigen::VectorXd diag_;
};

/// Factorized filter system (diag(m) + alpha K^{-1} + beta L). With m = 1 this
/// is the plain low-pass operator and can be reused for every signal of a
/// cluster.
class FilterSystem {
 public:
  FilterSystem(const Eigen::VectorXd& mask_diagonal, const KernelOperator& k, const LaplacianGraph& g,
               const FilterParams& p);

  /// Solves the system for right-hand side `rhs`.
  Eigen::VectorXd solve(const Eigen::Ref<const Eigen::VectorXd>& rhs) const;
  const Eigen::MatrixXd& matrix() const { return A_; }

 private:
  Eigen::MatrixXd A_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// Shared-factorization operator S = (I + alpha K^{-1} + beta L)^{-1} for the
/// fully observed inner loop.
class LowpassOperator {
 public:
  LowpassOperator(const KernelOperator& k, const LaplacianGraph& g, const FilterParams& p);

  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const { return system_.solve(x); }
  /// Filters every column of X.
  Eigen::MatrixXd apply_all(const Eigen::MatrixXd& X, Execution exec = Execution::Parallel) const;

 private:
  FilterSystem system_;
};

/// x_hat = (I + alpha K^{-1} + beta L)^{-1} x.
Eigen::VectorXd lowpass_filter(const Eigen::Ref<const Eigen::VectorXd>& x, const KernelOperator& k,
                               const LaplacianGraph& g, const FilterParams& p);

/// x_hat = (M + alpha K^{-1} + beta L)^{-1} M x. Throws SingularFilter when the
/// system is not positive definite (e.g. alpha = beta = 0 with a partial mask).
Eigen::VectorXd masked_filter(const Eigen::Ref<const Eigen::VectorXd>& x, const ObservationMask& m,
                              const KernelOperator& k, const LaplacianGraph& g, const FilterParams& p);

/// Filters column i of X with its own mask, one factorization per signal.
Eigen::MatrixXd masked_filter_all(const Eigen::MatrixXd& X, const std::vector<ObservationMask>& masks,
                                  const KernelOperator& k, const LaplacianGraph& g, const FilterParams& p,
                                  Execution exec = Execution::Parallel);

/// ||x - x_hat - alpha K^{-1} x_hat - beta L x_hat||_inf.
double filter_residual(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& x_hat,
                       const KernelOperator& k, const LaplacianGraph& g, const FilterParams& p);

struct ReconstructionResult {
  Eigen::VectorXd estimate;
  bool converged = false;
  int iterations = 0;
  /// ||x_hat^{t+1} - x_hat^t||_2 per iteration.
  std::vector<double> gap_history;
};

inline constexpr double kDefaultReconstructTol = 1e-8;
inline constexpr int kDefaultReconstructMaxIter = 1000;

/// Fixed-point inpainting: x^1 = M x, x_hat^t = S x^t,
/// x^{t+1} = x_hat^t + M (x^1 - x_hat^t). Stops when
/// ||x_hat^{t+1} - x_hat^t||_inf <= tol; on hitting max_iter the last iterate is
/// returned with converged = false.
ReconstructionResult iterative_reconstruct(const Eigen::Ref<const Eigen::VectorXd>& x, const ObservationMask& m,
                                           const KernelOperator& k, const LaplacianGraph& g, const FilterParams& p,
                                           int max_iter = kDefaultReconstructMaxIter,
                                           double tol = kDefaultReconstructTol);

}  // namespace kmgl
