#pragma once

#include "kmgl/filter.hpp"
#include "kmgl/graph.hpp"
#include "kmgl/kernel.hpp"
#include "kmgl/parallel.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace kmgl {

/// Laplacian estimation over edge weights w:
///   f(w) = beta z^T w + gamma ||L(w)||_F^2,  w >= 0, sum(w) = n / 2
/// where z_e = sum over the cluster's filtered signals of (x_i - x_j)^2.
struct QPProblem {
  Eigen::Index n = 0;
  Eigen::VectorXd z;
  double beta = 0.0;
  double gamma = 0.0;

  double target_sum() const { return 0.5 * static_cast<double>(n); }
  double objective(const Eigen::VectorXd& w) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& w) const;
  /// Exact Lipschitz constant of the gradient, 4 gamma n.
  double lipschitz() const { return 4.0 * gamma * static_cast<double>(n); }
};

/// Accumulates z edge by edge over the columns of `filtered` (n x m_k). Each
/// edge sums its signals in column order, so both execution paths agree
/// bitwise. Throws EmptyCluster for zero columns.
QPProblem build_qp(const Eigen::MatrixXd& filtered, double beta, double gamma,
                   Execution exec = Execution::Parallel);

/// Euclidean projection of v onto {w >= 0, sum(w) = target_sum}.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v, double target_sum);

struct QPOptions {
  int max_iter = 5000;
  double tol = 1e-8;
};

struct QPSolution {
  LaplacianGraph graph;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Projected gradient with backtracking from step 1/Lipschitz. `w0` is
/// projected onto the feasible set first; pass an empty vector for the
/// uniform start.
QPSolution solve_laplacian_qp(const QPProblem& q, const Eigen::VectorXd& w0 = {}, const QPOptions& opts = {});

/// ||w - P(w - grad f(w))||_inf, zero exactly at the KKT point.
double kkt_residual(const QPProblem& q, const Eigen::VectorXd& w);

struct BcdOptions {
  double epsilon = 1e-4;
  int max_outer = 100;
  QPOptions qp;
  /// Record the per-cluster objective after every half-step.
  bool track_objective = false;
  Execution exec = Execution::Parallel;
};

struct BcdResult {
  LaplacianGraph graph;
  /// Columns filtered under `graph`.
  Eigen::MatrixXd filtered;
  int iterations = 0;
  bool converged = false;
  /// Half-step objective values when tracking is enabled.
  std::vector<double> objective_history;
};

/// Per-cluster objective
///   sum ||M(x - x_hat)||^2 + alpha x_hat^T K^{-1} x_hat + beta x_hat^T L x_hat + gamma ||L||_F^2
/// with M = I when `masks` is null.
double cluster_objective(const Eigen::MatrixXd& X, const Eigen::MatrixXd& filtered, const KernelOperator& k,
                         const LaplacianGraph& g, const FilterParams& p, double gamma,
                         const std::vector<ObservationMask>* masks = nullptr);

/// Alternates filtering every signal (masked when `masks` is given) with the
/// Laplacian QP until ||L_new - L_old||_F <= epsilon. Starts from `initial`
/// or from the uniform complete graph.
BcdResult bcd_inner_loop(const Eigen::MatrixXd& X, const KernelOperator& k, const FilterParams& p, double gamma,
                         const BcdOptions& opts = {}, const std::optional<LaplacianGraph>& initial = std::nullopt,
                         const std::vector<ObservationMask>* masks = nullptr);

}  // namespace kmgl
