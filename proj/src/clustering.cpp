#include "kmgl/clustering.hpp"

#include "kmgl/error.hpp"

#include <algorithm>
#include <exception>
#include <limits>
#include <optional>
#include <random>
#include <string>

namespace kmgl {

namespace {

std::vector<int> random_balanced_partition(Eigen::Index m, int clusters, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) order[static_cast<std::size_t>(i)] = i;
  for (Eigen::Index i = m - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
  }
  std::vector<int> assignment(static_cast<std::size_t>(m));
  for (Eigen::Index pos = 0; pos < m; ++pos) {
    assignment[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = static_cast<int>(pos % clusters);
  }
  return assignment;
}

std::vector<std::vector<Eigen::Index>> members_of(const std::vector<int>& assignment, int clusters) {
  std::vector<std::vector<Eigen::Index>> members(static_cast<std::size_t>(clusters));
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    members[static_cast<std::size_t>(assignment[i])].push_back(static_cast<Eigen::Index>(i));
  }
  return members;
}

int argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd>& scores) {
  int best = 0;
  for (Eigen::Index k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best]) best = static_cast<int>(k);
  }
  return best;
}

double similarity(const Eigen::Ref<const Eigen::VectorXd>& x, const Eigen::Ref<const Eigen::VectorXd>& x_hat,
                  const ObservationMask* mask) {
  if (mask == nullptr) return x.dot(x_hat);
  return mask->apply(x).dot(x_hat);
}

// Moves signals into empty clusters. Each empty cluster (ascending) takes the
// signal with the lowest similarity to its assigned cluster among clusters
// that would stay non-empty.
int repair_empty_clusters(std::vector<int>& assignment, const Eigen::MatrixXd& sims, int clusters) {
  std::vector<int> counts(static_cast<std::size_t>(clusters), 0);
  for (int a : assignment) ++counts[static_cast<std::size_t>(a)];
  int repairs = 0;
  for (int k = 0; k < clusters; ++k) {
    if (counts[static_cast<std::size_t>(k)] > 0) continue;
    Eigen::Index worst = -1;
    double worst_score = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      const int owner = assignment[i];
      if (counts[static_cast<std::size_t>(owner)] <= 1) continue;
      const double score = sims(static_cast<Eigen::Index>(i), owner);
      if (score < worst_score) {
        worst_score = score;
        worst = static_cast<Eigen::Index>(i);
      }
    }
    if (worst < 0) throw Error(ErrorKind::DegenerateClustering, "cluster " + std::to_string(k) + " stays empty");
    --counts[static_cast<std::size_t>(assignment[static_cast<std::size_t>(worst)])];
    assignment[static_cast<std::size_t>(worst)] = k;
    ++counts[static_cast<std::size_t>(k)];
    ++repairs;
  }
  return repairs;
}

void check_inputs(const SignalSet& data, const std::vector<KernelOperator>& kernels, int clusters) {
  data.validate();
  if (clusters < 1) throw Error(ErrorKind::Configuration, "cluster count must be at least 1");
  if (data.size() < clusters) {
    throw Error(ErrorKind::Configuration, "need at least as many signals as clusters (m = " +
                                              std::to_string(data.size()) + ", K = " + std::to_string(clusters) + ")");
  }
  if (kernels.size() != 1 && kernels.size() != static_cast<std::size_t>(clusters)) {
    throw Error(ErrorKind::Configuration, "supply one shared kernel or one kernel per cluster");
  }
  for (const auto& k : kernels) {
    if (k.nodes() != data.nodes()) throw Error(ErrorKind::Dimension, "kernel size does not match node count");
  }
}

}  // namespace

const KernelOperator& kernel_for(const std::vector<KernelOperator>& kernels, int k) {
  if (kernels.empty()) throw Error(ErrorKind::Configuration, "no kernels supplied");
  return kernels.size() == 1 ? kernels.front() : kernels.at(static_cast<std::size_t>(k));
}

Eigen::MatrixXd similarity_matrix(const SignalSet& data, const std::vector<LaplacianGraph>& graphs,
                                  const std::vector<KernelOperator>& kernels, const FilterParams& p,
                                  Execution exec) {
  const Eigen::Index m = data.size();
  const int clusters = static_cast<int>(graphs.size());
  Eigen::MatrixXd sims(m, clusters);

  if (!data.has_masks()) {
    std::vector<LowpassOperator> ops;
    ops.reserve(graphs.size());
    for (int k = 0; k < clusters; ++k) ops.emplace_back(kernel_for(kernels, k), graphs[static_cast<std::size_t>(k)], p);
    auto row = [&](Eigen::Index i) {
      for (int k = 0; k < clusters; ++k) sims(i, k) = data.X.col(i).dot(ops[static_cast<std::size_t>(k)].apply(data.X.col(i)));
    };
    if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static) num_threads(num_threads())
      for (Eigen::Index i = 0; i < m; ++i) row(i);
    } else {
      for (Eigen::Index i = 0; i < m; ++i) row(i);
    }
    return sims;
  }

  std::exception_ptr failure;
  auto row = [&](Eigen::Index i) {
    const ObservationMask& mask = data.masks[static_cast<std::size_t>(i)];
    for (int k = 0; k < clusters; ++k) {
      const Eigen::VectorXd x_hat = masked_filter(data.X.col(i), mask, kernel_for(kernels, k),
                                                  graphs[static_cast<std::size_t>(k)], p);
      sims(i, k) = similarity(data.X.col(i), x_hat, &mask);
    }
  };
  if (exec == Execution::Parallel) {
#pragma omp parallel for schedule(static) num_threads(num_threads())
    for (Eigen::Index i = 0; i < m; ++i) {
      try {
        row(i);
      } catch (...) {
#pragma omp critical(kmgl_similarity_failure)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
  } else {
    for (Eigen::Index i = 0; i < m; ++i) row(i);
  }
  return sims;
}

int reassign(const Eigen::VectorXd& x, const ClusterState& state, const std::vector<KernelOperator>& kernels,
             const FilterParams& p) {
  SignalSet single;
  single.X = x;
  return argmax_lowest(similarity_matrix(single, state.laplacians, kernels, p, Execution::Serial).row(0));
}

int reassign_masked(const Eigen::VectorXd& x, const ObservationMask& mask, const ClusterState& state,
                    const std::vector<KernelOperator>& kernels, const FilterParams& p) {
  SignalSet single;
  single.X = x;
  single.masks = {mask};
  single.validate();
  return argmax_lowest(similarity_matrix(single, state.laplacians, kernels, p, Execution::Serial).row(0));
}

double objective(const ClusterState& state, const SignalSet& data, const FilterParams& /*p*/, double gamma) {
  const Eigen::Index m = data.size();
  if (static_cast<Eigen::Index>(state.assignment.size()) != m || state.filtered.cols() != m ||
      (m > 0 && state.filtered.rows() != data.nodes())) {
    throw Error(ErrorKind::InternalConsistency, "cluster state does not match the data");
  }
  const int clusters = state.clusters();
  std::vector<double> per_cluster(static_cast<std::size_t>(clusters), 0.0);
  for (Eigen::Index i = 0; i < m; ++i) {
    const int k = state.assignment[static_cast<std::size_t>(i)];
    if (k < 0 || k >= clusters) throw Error(ErrorKind::InternalConsistency, "assignment index out of range");
    const ObservationMask* mask = data.has_masks() ? &data.masks[static_cast<std::size_t>(i)] : nullptr;
    per_cluster[static_cast<std::size_t>(k)] += similarity(data.X.col(i), state.filtered.col(i), mask);
  }
  double total = 0.0;
  for (int k = 0; k < clusters; ++k) {
    total += per_cluster[static_cast<std::size_t>(k)] - gamma * state.laplacians[static_cast<std::size_t>(k)].frobenius_sq();
  }
  return total;
}

ClusterState fit(const SignalSet& data, const std::vector<KernelOperator>& kernels, const FitOptions& opts) {
  const int clusters = opts.clusters;
  check_inputs(data, kernels, clusters);
  opts.filter.validate();
  if (opts.max_outer_rounds < 1) throw Error(ErrorKind::Configuration, "max_outer_rounds must be at least 1");

  const Eigen::Index m = data.size();
  BcdOptions bcd = opts.bcd;
  bcd.exec = opts.exec;

  ClusterState state;
  state.assignment = random_balanced_partition(m, clusters, opts.seed);
  state.filtered.resize(data.nodes(), m);
  std::vector<std::optional<LaplacianGraph>> warm(static_cast<std::size_t>(clusters));
  state.laplacians.resize(static_cast<std::size_t>(clusters));

  if (data.has_masks()) {
    state.low_confidence = std::all_of(data.masks.begin(), data.masks.end(),
                                       [](const ObservationMask& mk) { return mk.observed_count() == 0; });
  }

  for (int round = 1; round <= opts.max_outer_rounds; ++round) {
    const auto members = members_of(state.assignment, clusters);
    for (int k = 0; k < clusters; ++k) {
      const auto& idx = members[static_cast<std::size_t>(k)];
      if (idx.empty()) throw Error(ErrorKind::DegenerateClustering, "cluster " + std::to_string(k) + " is empty");
      const SignalSet part = data.select(idx);
      BcdResult learned = bcd_inner_loop(part.X, kernel_for(kernels, k), opts.filter, opts.gamma, bcd,
                                         warm[static_cast<std::size_t>(k)], data.has_masks() ? &part.masks : nullptr);
      for (std::size_t c = 0; c < idx.size(); ++c) state.filtered.col(idx[c]) = learned.filtered.col(static_cast<Eigen::Index>(c));
      warm[static_cast<std::size_t>(k)] = learned.graph;
      state.laplacians[static_cast<std::size_t>(k)] = std::move(learned.graph);
    }
    state.iteration = round;
    state.objective = objective(state, data, opts.filter, opts.gamma);
    state.objective_trace.push_back(state.objective);

    const Eigen::MatrixXd sims = similarity_matrix(data, state.laplacians, kernels, opts.filter, opts.exec);
    std::vector<int> next(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) next[static_cast<std::size_t>(i)] = argmax_lowest(sims.row(i));
    state.repairs += repair_empty_clusters(next, sims, clusters);

    if (next == state.assignment) {
      state.converged = true;
      break;
    }
    if (round < opts.max_outer_rounds) state.assignment = std::move(next);
  }
  return state;
}

ClusterState fit_masked(const SignalSet& data, const std::vector<KernelOperator>& kernels, const FitOptions& opts) {
  if (!data.has_masks()) throw Error(ErrorKind::Configuration, "fit_masked needs per-signal masks");
  return fit(data, kernels, opts);
}

}  // namespace kmgl
