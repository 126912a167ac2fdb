#include "kmgl/evaluation.hpp"

#include "kmgl/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <string>

namespace kmgl {

std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weights) {
  const int n = static_cast<int>(weights.rows());
  if (weights.cols() != n) throw Error(ErrorKind::Dimension, "assignment matrix must be square");
  if (n == 0) return {};
  // Shortest augmenting path Hungarian on cost = -weights, 1-based potentials.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<bool> used(n + 1, false);
    do {
      used[j0] = true;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = -weights(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col_for_row(n, -1);
  for (int j = 1; j <= n; ++j) col_for_row[p[j] - 1] = j - 1;
  return col_for_row;
}

namespace {

int infer_clusters(const std::vector<int>& pred, const std::vector<int>& truth) {
  int top = 0;
  for (int a : pred) top = std::max(top, a);
  for (int a : truth) top = std::max(top, a);
  return top + 1;
}

Eigen::MatrixXd confusion(const std::vector<int>& pred, const std::vector<int>& truth, int clusters) {
  if (pred.size() != truth.size()) throw Error(ErrorKind::Dimension, "label vectors differ in length");
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(clusters, clusters);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    if (pred[i] < 0 || pred[i] >= clusters || truth[i] < 0 || truth[i] >= clusters) {
      throw Error(ErrorKind::Dimension, "label out of range at position " + std::to_string(i));
    }
    c(pred[i], truth[i]) += 1.0;
  }
  return c;
}

}  // namespace

std::vector<int> best_label_map(const std::vector<int>& pred, const std::vector<int>& truth, int clusters) {
  return max_weight_assignment(confusion(pred, truth, clusters));
}

double car(const std::vector<int>& pred, const std::vector<int>& truth, int clusters) {
  if (pred.size() != truth.size()) throw Error(ErrorKind::Dimension, "label vectors differ in length");
  if (pred.empty()) throw Error(ErrorKind::Dimension, "no labels to compare");
  if (clusters <= 0) clusters = infer_clusters(pred, truth);
  const Eigen::MatrixXd c = confusion(pred, truth, clusters);
  const std::vector<int> map = max_weight_assignment(c);
  double correct = 0.0;
  for (int k = 0; k < clusters; ++k) correct += c(k, map[static_cast<std::size_t>(k)]);
  return correct / static_cast<double>(pred.size());
}

double average_precision(const Eigen::VectorXd& scores, const std::vector<bool>& positive) {
  if (static_cast<std::size_t>(scores.size()) != positive.size()) {
    throw Error(ErrorKind::Dimension, "scores and labels differ in length");
  }
  const auto total_pos = static_cast<double>(std::count(positive.begin(), positive.end(), true));
  if (total_pos == 0.0) throw Error(ErrorKind::DegenerateGraph, "ground truth has no positive pairs");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(scores.size()));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return scores[a] > scores[b]; });

  double ap = 0.0;
  double tp = 0.0;
  double seen = 0.0;
  double prev_recall = 0.0;
  std::size_t pos = 0;
  while (pos < order.size()) {
    const double score = scores[order[pos]];
    while (pos < order.size() && scores[order[pos]] == score) {
      tp += positive[static_cast<std::size_t>(order[pos])] ? 1.0 : 0.0;
      seen += 1.0;
      ++pos;
    }
    const double recall = tp / total_pos;
    ap += (recall - prev_recall) * (tp / seen);
    prev_recall = recall;
  }
  return ap;
}

double aps(const LaplacianGraph& predicted, const LaplacianGraph& truth) {
  if (predicted.nodes() != truth.nodes()) throw Error(ErrorKind::Dimension, "graphs differ in node count");
  const Eigen::VectorXd& w = truth.weights();
  std::vector<bool> positive(static_cast<std::size_t>(w.size()));
  for (Eigen::Index e = 0; e < w.size(); ++e) positive[static_cast<std::size_t>(e)] = w[e] > 0.0;
  return average_precision(predicted.weights(), positive);
}

std::vector<double> aligned_aps(const std::vector<LaplacianGraph>& learned, const std::vector<LaplacianGraph>& truth,
                                const std::vector<int>& pred, const std::vector<int>& truth_assignment) {
  if (learned.size() != truth.size()) throw Error(ErrorKind::Dimension, "learned and true cluster counts differ");
  const int clusters = static_cast<int>(truth.size());
  const std::vector<int> map = best_label_map(pred, truth_assignment, clusters);
  std::vector<double> out(truth.size(), 0.0);
  for (int k = 0; k < clusters; ++k) {
    const int t = map[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(t)] = aps(learned[static_cast<std::size_t>(k)], truth[static_cast<std::size_t>(t)]);
  }
  return out;
}

namespace {

std::vector<double> traces_of(const std::vector<KernelOperator>& kernels) {
  std::vector<double> t;
  t.reserve(kernels.size());
  for (const auto& k : kernels) t.push_back(k.trace());
  return t;
}

}  // namespace

double snr_db(const std::vector<double>& kernel_traces, double sigma_eps, Eigen::Index n) {
  if (!(sigma_eps > 0.0)) throw Error(ErrorKind::Configuration, "sigma_eps must be positive");
  if (kernel_traces.empty() || n < 1) throw Error(ErrorKind::Dimension, "need kernels and nodes for SNR");
  const double total = std::accumulate(kernel_traces.begin(), kernel_traces.end(), 0.0);
  const double denom = static_cast<double>(kernel_traces.size()) * static_cast<double>(n) * sigma_eps * sigma_eps;
  return 10.0 * std::log10(total / denom);
}

double snr_db(const std::vector<KernelOperator>& kernels, double sigma_eps, Eigen::Index n) {
  return snr_db(traces_of(kernels), sigma_eps, n);
}

double sigma_for_snr(const std::vector<double>& kernel_traces, double target_db, Eigen::Index n) {
  if (!std::isfinite(target_db)) throw Error(ErrorKind::Configuration, "SNR target must be finite");
  if (kernel_traces.empty() || n < 1) throw Error(ErrorKind::Dimension, "need kernels and nodes for SNR");
  const double total = std::accumulate(kernel_traces.begin(), kernel_traces.end(), 0.0);
  const double denom = static_cast<double>(kernel_traces.size()) * static_cast<double>(n) * std::pow(10.0, target_db / 10.0);
  return std::sqrt(total / denom);
}

double sigma_for_snr(const std::vector<KernelOperator>& kernels, double target_db, Eigen::Index n) {
  return sigma_for_snr(traces_of(kernels), target_db, n);
}

namespace {

double inertia_of(const Eigen::MatrixXd& X, const Eigen::MatrixXd& centroids, const std::vector<int>& assignment) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < X.cols(); ++i) {
    total += (X.col(i) - centroids.col(assignment[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return total;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& X, int clusters, std::uint64_t seed, int max_iter, Execution exec) {
  const Eigen::Index m = X.cols();
  if (clusters < 1) throw Error(ErrorKind::Configuration, "cluster count must be at least 1");
  if (m < clusters) throw Error(ErrorKind::Configuration, "k-means needs at least as many points as clusters");
  if (max_iter < 1) throw Error(ErrorKind::Configuration, "max_iter must be at least 1");

  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> pool(static_cast<std::size_t>(m));
  std::iota(pool.begin(), pool.end(), Eigen::Index{0});
  Eigen::MatrixXd centroids(X.rows(), clusters);
  for (int k = 0; k < clusters; ++k) {
    const auto span = static_cast<std::uint64_t>(m - k);
    const auto pick = static_cast<std::size_t>(k) + static_cast<std::size_t>(rng() % span);
    std::swap(pool[static_cast<std::size_t>(k)], pool[pick]);
    centroids.col(k) = X.col(pool[static_cast<std::size_t>(k)]);
  }

  KMeansResult result;
  std::vector<int> assignment(static_cast<std::size_t>(m), -1);
  std::vector<double> dist(static_cast<std::size_t>(m), 0.0);
  auto assign_point = [&](Eigen::Index i) {
    int best = 0;
    double best_d = (X.col(i) - centroids.col(0)).squaredNorm();
    for (int k = 1; k < clusters; ++k) {
      const double d = (X.col(i) - centroids.col(k)).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    assignment[static_cast<std::size_t>(i)] = best;
    dist[static_cast<std::size_t>(i)] = best_d;
  };

  for (int it = 1; it <= max_iter; ++it) {
    const std::vector<int> previous = assignment;
    if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static) num_threads(num_threads())
      for (Eigen::Index i = 0; i < m; ++i) assign_point(i);
    } else {
      for (Eigen::Index i = 0; i < m; ++i) assign_point(i);
    }

    std::vector<int> counts(static_cast<std::size_t>(clusters), 0);
    for (int a : assignment) ++counts[static_cast<std::size_t>(a)];
    for (int k = 0; k < clusters; ++k) {
      if (counts[static_cast<std::size_t>(k)] > 0) continue;
      Eigen::Index far = -1;
      for (Eigen::Index i = 0; i < m; ++i) {
        if (counts[static_cast<std::size_t>(assignment[static_cast<std::size_t>(i)])] <= 1) continue;
        if (far < 0 || dist[static_cast<std::size_t>(i)] > dist[static_cast<std::size_t>(far)]) far = i;
      }
      --counts[static_cast<std::size_t>(assignment[static_cast<std::size_t>(far)])];
      assignment[static_cast<std::size_t>(far)] = k;
      dist[static_cast<std::size_t>(far)] = 0.0;
      counts[static_cast<std::size_t>(k)] = 1;
    }

    centroids.setZero();
    for (Eigen::Index i = 0; i < m; ++i) centroids.col(assignment[static_cast<std::size_t>(i)]) += X.col(i);
    for (int k = 0; k < clusters; ++k) centroids.col(k) /= static_cast<double>(counts[static_cast<std::size_t>(k)]);

    result.iterations = it;
    result.inertia_history.push_back(inertia_of(X, centroids, assignment));
    if (assignment == previous) break;
  }
  result.assignment = std::move(assignment);
  result.inertia = result.inertia_history.back();
  return result;
}

KMeansResult kmeans_baseline(const Eigen::MatrixXd& X, int clusters, std::uint64_t seed, int max_iter, int restarts,
                             Execution exec) {
  if (restarts < 1) throw Error(ErrorKind::Configuration, "restarts must be at least 1");
  KMeansResult best;
  for (int r = 0; r < restarts; ++r) {
    KMeansResult run = kmeans(X, clusters, mix_seed(seed, static_cast<std::uint64_t>(r)), max_iter, exec);
    if (r == 0 || run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

}  // namespace kmgl
