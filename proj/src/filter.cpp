#include "kmgl/filter.hpp"

#include "kmgl/error.hpp"

#include <cmath>
#include <exception>
#include <utility>

namespace kmgl {

namespace {

void check_dims(Eigen::Index n, const KernelOperator& k, const LaplacianGraph& g) {
  if (k.nodes() != n || g.nodes() != n) {
    throw Error(ErrorKind::Dimension, "signal, kernel and graph sizes disagree");
  }
}

}  // namespace

void FilterParams::validate() const {
  if (!std::isfinite(alpha) || !std::isfinite(beta) || alpha < 0.0 || beta < 0.0) {
    throw Error(ErrorKind::Configuration, "alpha and beta must be finite and non-negative");
  }
}

ObservationMask::ObservationMask(std::vector<bool> observed) : diag_(static_cast<Eigen::Index>(observed.size())) {
  for (std::size_t i = 0; i < observed.size(); ++i) diag_[static_cast<Eigen::Index>(i)] = observed[i] ? 1.0 : 0.0;
}

ObservationMask ObservationMask::full(Eigen::Index n) {
  return ObservationMask(std::vector<bool>(static_cast<std::size_t>(n), true));
}

ObservationMask ObservationMask::empty(Eigen::Index n) {
  return ObservationMask(std::vector<bool>(static_cast<std::size_t>(n), false));
}

Eigen::Index ObservationMask::observed_count() const { return (diag_.array() != 0.0).count(); }

Eigen::VectorXd ObservationMask::apply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != size()) throw Error(ErrorKind::Dimension, "mask length does not match signal");
  return diag_.cwiseProduct(x);
}

FilterSystem::FilterSystem(const Eigen::VectorXd& mask_diagonal, const KernelOperator& k, const LaplacianGraph& g,
                           const FilterParams& p) {
  p.validate();
  const Eigen::Index n = mask_diagonal.size();
  check_dims(n, k, g);
  A_ = p.alpha * k.inverse() + p.beta * g.laplacian();
  A_.diagonal() += mask_diagonal;
  llt_.compute(A_);
  bool ok = llt_.info() == Eigen::Success;
  if (ok) {
    const double scale = A_.diagonal().cwiseAbs().maxCoeff();
    const Eigen::VectorXd pivots = llt_.matrixLLT().diagonal();
    for (Eigen::Index i = 0; i < n && ok; ++i) ok = pivots[i] > 0.0 && pivots[i] * pivots[i] > 1e-14 * scale;
  }
  if (!ok) throw Error(ErrorKind::SingularFilter, "filter system M + alpha K^-1 + beta L is not positive definite");
}

Eigen::VectorXd FilterSystem::solve(const Eigen::Ref<const Eigen::VectorXd>& rhs) const {
  if (rhs.size() != A_.rows()) throw Error(ErrorKind::Dimension, "right-hand side length mismatch");
  return llt_.solve(rhs);
}

LowpassOperator::LowpassOperator(const KernelOperator& k, const LaplacianGraph& g, const FilterParams& p)
    : system_(Eigen::VectorXd::Ones(g.nodes()), k, g, p) {}

Eigen::MatrixXd LowpassOperator::apply_all(const Eigen::MatrixXd& X, Execution exec) const {
  Eigen::MatrixXd out(X.rows(), X.cols());
  const Eigen::Index m = X.cols();
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (Eigen::Index i = 0; i < m; ++i) out.col(i) = system_.solve(X.col(i));
  } else {
    for (Eigen::Index i = 0; i < m; ++i) out.col(i) = system_.solve(X.col(i));
  }
  return out;
}

Eigen::VectorXd lowpass_filter(const Eigen::Ref<const Eigen::VectorXd>& x, const KernelOperator& k,
                               const LaplacianGraph& g, const FilterParams& p) {
  check_dims(x.size(), k, g);
  return LowpassOperator(k, g, p).apply(x);
}

Eigen::VectorXd masked_filter(const Eigen::Ref<const Eigen::VectorXd>& x, const ObservationMask& m,
                              const KernelOperator& k, const LaplacianGraph& g, const FilterParams& p) {
  check_dims(x.size(), k, g);
  if (m.size() != x.size()) throw Error(ErrorKind::Dimension, "mask length does not match signal");
  const FilterSystem system(m.diagonal(), k, g, p);
  return system.solve(m.apply(x));
}

Eigen::MatrixXd masked_filter_all(const Eigen::MatrixXd& X, const std::vector<ObservationMask>& masks,
                                  const KernelOperator& k, const LaplacianGraph& g, const FilterParams& p,
                                  Execution exec) {
  if (static_cast<Eigen::Index>(masks.size()) != X.cols()) {
    throw Error(ErrorKind::Dimension, "one mask per signal is required");
  }
  Eigen::MatrixXd out(X.rows(), X.cols());
  const Eigen::Index m = X.cols();
  if (exec == Execution::Parallel) {
    // Exceptions may not cross the OpenMP region; the first failure is
    // rethrown after the loop.
    std::exception_ptr failure;
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (Eigen::Index i = 0; i < m; ++i) {
      try {
        out.col(i) = masked_filter(X.col(i), masks[static_cast<std::size_t>(i)], k, g, p);
      } catch (...) {
#pragma omp critical(kmgl_masked_filter_failure)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    for (Eigen::Index i = 0; i < m; ++i) {
      out.col(i) = masked_filter(X.col(i), masks[static_cast<std::size_t>(i)], k, g, p);
    }
  }
  return out;
}

double filter_residual(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& x_hat,
                       const KernelOperator& k, const LaplacianGraph& g, const FilterParams& p) {
  check_dims(x.size(), k, g);
  const Eigen::VectorXd r = x - x_hat - p.alpha * k.solve(x_hat) - p.beta * (g.laplacian() * x_hat);
  return r.cwiseAbs().maxCoeff();
}

ReconstructionResult iterative_reconstruct(const Eigen::Ref<const Eigen::VectorXd>& x, const ObservationMask& m,
                                           const KernelOperator& k, const LaplacianGraph& g, const FilterParams& p,
                                           int max_iter, double tol) {
  check_dims(x.size(), k, g);
  if (m.size() != x.size()) throw Error(ErrorKind::Dimension, "mask length does not match signal");
  if (max_iter < 1) throw Error(ErrorKind::Configuration, "max_iter must be at least 1");
  if (p.is_identity() && !m.is_full()) {
    throw Error(ErrorKind::SingularFilter, "alpha = beta = 0 cannot reconstruct missing entries");
  }

  const LowpassOperator S(k, g, p);
  const Eigen::VectorXd observed = m.apply(x);
  Eigen::VectorXd current = observed;
  Eigen::VectorXd x_hat = S.apply(current);

  ReconstructionResult result;
  for (int t = 1; t <= max_iter; ++t) {
    current = x_hat + m.apply(observed - x_hat);
    Eigen::VectorXd next = S.apply(current);
    const Eigen::VectorXd delta = next - x_hat;
    result.gap_history.push_back(delta.norm());
    x_hat = std::move(next);
    result.iterations = t;
    if (delta.cwiseAbs().maxCoeff() <= tol) {
      result.converged = true;
      break;
    }
  }
  result.estimate = std::move(x_hat);
  return result;
}

}  // namespace kmgl
