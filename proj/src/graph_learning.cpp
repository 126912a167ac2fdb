#include "kmgl/graph_learning.hpp"

#include "kmgl/error.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <functional>

namespace kmgl {

namespace {

Eigen::VectorXd degrees_of(const Eigen::VectorXd& w, Eigen::Index n) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(n);
  Eigen::Index e = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j, ++e) {
      d[i] += w[e];
      d[j] += w[e];
    }
  }
  return d;
}

void check_problem(const QPProblem& q) {
  if (q.n < 2) throw Error(ErrorKind::Dimension, "Laplacian QP needs at least two nodes");
  if (q.z.size() != EdgePairIndex::pairs_for(q.n)) throw Error(ErrorKind::Dimension, "z has the wrong length");
  if (!(q.gamma > 0.0) || !std::isfinite(q.gamma)) {
    throw Error(ErrorKind::Configuration, "gamma must be positive for the Laplacian QP");
  }
  if (!(q.beta >= 0.0) || !std::isfinite(q.beta)) throw Error(ErrorKind::Configuration, "beta must be non-negative");
}

}  // namespace

double QPProblem::objective(const Eigen::VectorXd& w) const {
  const Eigen::VectorXd d = degrees_of(w, n);
  return beta * z.dot(w) + gamma * (d.squaredNorm() + 2.0 * w.squaredNorm());
}

Eigen::VectorXd QPProblem::gradient(const Eigen::VectorXd& w) const {
  const Eigen::VectorXd d = degrees_of(w, n);
  Eigen::VectorXd g(w.size());
  Eigen::Index e = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j, ++e) {
      g[e] = beta * z[e] + gamma * (2.0 * (d[i] + d[j]) + 4.0 * w[e]);
    }
  }
  return g;
}

QPProblem build_qp(const Eigen::MatrixXd& filtered, double beta, double gamma, Execution exec) {
  if (filtered.cols() == 0) throw Error(ErrorKind::EmptyCluster, "cannot learn a graph from an empty cluster");
  const Eigen::Index n = filtered.rows();
  const EdgePairIndex index(n);
  const Eigen::Index pairs = index.size();
  const Eigen::Index m = filtered.cols();

  // Row-major copy so each edge walks two contiguous rows.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = filtered;
  QPProblem q;
  q.n = n;
  q.beta = beta;
  q.gamma = gamma;
  q.z.resize(pairs);

  auto edge_sum = [&](Eigen::Index e) {
    const auto [i, j] = index.pair(e);
    double acc = 0.0;
    for (Eigen::Index s = 0; s < m; ++s) {
      const double diff = rows(i, s) - rows(j, s);
      acc += diff * diff;
    }
    return acc;
  };

  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (Eigen::Index e = 0; e < pairs; ++e) q.z[e] = edge_sum(e);
  } else {
    for (Eigen::Index e = 0; e < pairs; ++e) q.z[e] = edge_sum(e);
  }
  return q;
}

Eigen::VectorXd project_simplex(const Eigen::VectorXd& v, double target_sum) {
  if (!(target_sum > 0.0)) throw Error(ErrorKind::Configuration, "simplex target sum must be positive");
  const Eigen::Index size = v.size();
  if (size == 0) throw Error(ErrorKind::Dimension, "cannot project an empty vector");

  std::vector<double> sorted(v.data(), v.data() + size);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double threshold = 0.0;
  for (Eigen::Index k = 0; k < size; ++k) {
    cumulative += sorted[static_cast<std::size_t>(k)];
    const double candidate = (cumulative - target_sum) / static_cast<double>(k + 1);
    if (sorted[static_cast<std::size_t>(k)] - candidate > 0.0) threshold = candidate;
  }
  return (v.array() - threshold).max(0.0).matrix();
}

double kkt_residual(const QPProblem& q, const Eigen::VectorXd& w) {
  const Eigen::VectorXd step = project_simplex(w - q.gradient(w), q.target_sum());
  return (w - step).cwiseAbs().maxCoeff();
}

QPSolution solve_laplacian_qp(const QPProblem& q, const Eigen::VectorXd& w0, const QPOptions& opts) {
  check_problem(q);
  const Eigen::Index pairs = q.z.size();
  const double target = q.target_sum();

  Eigen::VectorXd w = w0.size() == 0 ? Eigen::VectorXd::Constant(pairs, target / static_cast<double>(pairs))
                                     : project_simplex(w0, target);
  if (w.size() != pairs) throw Error(ErrorKind::Dimension, "initial weights have the wrong length");

  const double base_step = 1.0 / q.lipschitz();
  double f = q.objective(w);
  QPSolution sol;
  for (int it = 1; it <= opts.max_iter; ++it) {
    const Eigen::VectorXd grad = q.gradient(w);
    double step = base_step;
    Eigen::VectorXd candidate;
    double f_candidate = f;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
      candidate = project_simplex(w - step * grad, target);
      const Eigen::VectorXd dw = candidate - w;
      f_candidate = q.objective(candidate);
      const double model = f + grad.dot(dw) + dw.squaredNorm() / (2.0 * step);
      if (f_candidate <= model + 1e-15 * std::abs(f) && f_candidate <= f) {
        accepted = true;
        break;
      }
    }
    sol.iterations = it;
    if (!accepted) {
      // No representable decrease left: w is stationary to working precision.
      sol.converged = true;
      break;
    }
    const double change = (candidate - w).cwiseAbs().maxCoeff();
    w = std::move(candidate);
    f = f_candidate;
    if (change <= opts.tol) {
      sol.converged = true;
      break;
    }
  }
  sol.objective = f;
  sol.graph = laplacian_from_weights(w, q.n);
  return sol;
}

double cluster_objective(const Eigen::MatrixXd& X, const Eigen::MatrixXd& filtered, const KernelOperator& k,
                         const LaplacianGraph& g, const FilterParams& p, double gamma,
                         const std::vector<ObservationMask>* masks) {
  if (X.rows() != filtered.rows() || X.cols() != filtered.cols()) {
    throw Error(ErrorKind::Dimension, "signals and filtered signals differ in shape");
  }
  double total = gamma * g.frobenius_sq();
  for (Eigen::Index s = 0; s < X.cols(); ++s) {
    Eigen::VectorXd residual = X.col(s) - filtered.col(s);
    if (masks != nullptr) residual = (*masks)[static_cast<std::size_t>(s)].apply(residual);
    total += residual.squaredNorm() + p.alpha * quad_inv(k, filtered.col(s)) +
             p.beta * g.quadratic_form(filtered.col(s));
  }
  return total;
}

BcdResult bcd_inner_loop(const Eigen::MatrixXd& X, const KernelOperator& k, const FilterParams& p, double gamma,
                         const BcdOptions& opts, const std::optional<LaplacianGraph>& initial,
                         const std::vector<ObservationMask>* masks) {
  if (X.cols() == 0) throw Error(ErrorKind::EmptyCluster, "cannot learn a graph from an empty cluster");
  if (opts.max_outer < 1) throw Error(ErrorKind::Configuration, "max_outer must be at least 1");
  p.validate();
  const Eigen::Index n = X.rows();
  if (masks != nullptr && static_cast<Eigen::Index>(masks->size()) != X.cols()) {
    throw Error(ErrorKind::Dimension, "one mask per signal is required");
  }

  auto filter = [&](const LaplacianGraph& g) {
    if (masks != nullptr) return masked_filter_all(X, *masks, k, g, p, opts.exec);
    return LowpassOperator(k, g, p).apply_all(X, opts.exec);
  };

  BcdResult result;
  LaplacianGraph graph = initial ? *initial : uniform_graph(n);
  if (graph.nodes() != n) throw Error(ErrorKind::Dimension, "initial graph size mismatch");

  auto record = [&](const Eigen::MatrixXd& filtered, const LaplacianGraph& g) {
    if (!opts.track_objective) return;
    result.objective_history.push_back(cluster_objective(X, filtered, k, g, p, gamma, masks));
  };

  for (int it = 1; it <= opts.max_outer; ++it) {
    const Eigen::MatrixXd filtered = filter(graph);
    record(filtered, graph);
    const QPProblem q = build_qp(filtered, p.beta, gamma, opts.exec);
    QPSolution sol = solve_laplacian_qp(q, graph.weights(), opts.qp);
    record(filtered, sol.graph);
    const double change = (sol.graph.laplacian() - graph.laplacian()).norm();
    graph = std::move(sol.graph);
    result.iterations = it;
    if (change <= opts.epsilon) {
      result.converged = true;
      break;
    }
  }
  result.filtered = filter(graph);
  record(result.filtered, graph);
#ifndef NDEBUG
  for (std::size_t i = 1; i < result.objective_history.size(); ++i) {
    assert(result.objective_history[i] <=
           result.objective_history[i - 1] + 1e-10 * std::max(1.0, std::abs(result.objective_history[i - 1])));
  }
#endif
  result.graph = std::move(graph);
  return result;
}

}  // namespace kmgl
