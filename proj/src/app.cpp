#include "kmgl/app.hpp"

#include "kmgl/error.hpp"
#include "kmgl/parallel.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <exception>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

namespace kmgl::app {

namespace {

using json = nlohmann::json;

constexpr std::uint64_t kFitStream = 1;
constexpr std::uint64_t kKMeansStream = 2;

std::string normalize_key(std::string key) {
  for (char& c : key) {
    if (c == '-') c = '_';
  }
  return key;
}

double parse_number(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorKind::Configuration, "cannot parse " + what + " from '" + text + "'");
  }
}

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

FilterParams ExperimentConfig::filter_params() const {
  FilterParams p;
  p.alpha = alpha;
  p.beta = tied_alpha_beta ? alpha : beta;
  return p;
}

SynthConfig ExperimentConfig::synth_config() const {
  SynthConfig s;
  s.n = nodes;
  s.m = signals;
  s.clusters = clusters;
  s.edge_prob = edge_prob;
  s.eta = eta;
  s.snr_db = snr;
  s.missing_rate = missing_rate;
  s.seed = seed;
  return s;
}

void ExperimentConfig::validate() const {
  filter_params().validate();
  if (!(gamma > 0.0)) throw Error(ErrorKind::Configuration, "gamma must be positive");
  if (!(epsilon > 0.0)) throw Error(ErrorKind::Configuration, "epsilon must be positive");
  if (restarts < 1) throw Error(ErrorKind::Configuration, "restarts must be at least 1");
  if (max_rounds < 1) throw Error(ErrorKind::Configuration, "max-rounds must be at least 1");
  if (jobs < 1) throw Error(ErrorKind::Configuration, "jobs must be at least 1");
  if (realizations < 1) throw Error(ErrorKind::Configuration, "realizations must be at least 1");
  if (kmeans_restarts < 1) throw Error(ErrorKind::Configuration, "kmeans-restarts must be at least 1");
  if (axis != "clusters" && axis != "snr" && axis != "missing-rate") {
    throw Error(ErrorKind::Configuration, "axis must be one of clusters, snr, missing-rate");
  }
}

void apply_json_config(ExperimentConfig& cfg, const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Configuration, std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::Configuration, "config must be a JSON object");

  using Setter = std::function<void(const json&)>;
  const std::map<std::string, Setter> setters = {
      {"seed", [&](const json& v) { cfg.seed = v.get<std::uint64_t>(); }},
      {"out", [&](const json& v) { cfg.out = v.get<std::string>(); }},
      {"jobs", [&](const json& v) { cfg.jobs = v.get<int>(); }},
      {"nodes", [&](const json& v) { cfg.nodes = v.get<Eigen::Index>(); }},
      {"signals", [&](const json& v) { cfg.signals = v.get<Eigen::Index>(); }},
      {"clusters", [&](const json& v) { cfg.clusters = v.get<int>(); }},
      {"edge_prob", [&](const json& v) { cfg.edge_prob = v.get<double>(); }},
      {"eta", [&](const json& v) { cfg.eta = v.get<double>(); }},
      {"snr", [&](const json& v) { cfg.snr = v.get<double>(); }},
      {"missing_rate", [&](const json& v) { cfg.missing_rate = v.get<double>(); }},
      {"alpha", [&](const json& v) { cfg.alpha = v.get<double>(); }},
      {"beta", [&](const json& v) { cfg.beta = v.get<double>(); }},
      {"gamma", [&](const json& v) { cfg.gamma = v.get<double>(); }},
      {"epsilon", [&](const json& v) { cfg.epsilon = v.get<double>(); }},
      {"restarts", [&](const json& v) { cfg.restarts = v.get<int>(); }},
      {"max_rounds", [&](const json& v) { cfg.max_rounds = v.get<int>(); }},
      {"tied_alpha_beta", [&](const json& v) { cfg.tied_alpha_beta = v.get<bool>(); }},
      {"kernel", [&](const json& v) { cfg.kernel = v.get<std::string>(); }},
      {"coords", [&](const json& v) { cfg.coords = v.get<std::string>(); }},
      {"axis", [&](const json& v) { cfg.axis = v.get<std::string>(); }},
      {"grid", [&](const json& v) { cfg.grid = v.get<std::vector<double>>(); }},
      {"realizations", [&](const json& v) { cfg.realizations = v.get<int>(); }},
      {"seeds", [&](const json& v) { cfg.seeds = v.get<std::vector<std::uint64_t>>(); }},
      {"kmeans_restarts", [&](const json& v) { cfg.kmeans_restarts = v.get<int>(); }},
  };
  for (const auto& [key, value] : doc.items()) {
    const auto it = setters.find(normalize_key(key));
    if (it == setters.end()) throw Error(ErrorKind::Configuration, "unknown config key '" + key + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Configuration, "config key '" + key + "': " + e.what());
    }
  }
}

std::vector<KernelOperator> resolve_kernels(const std::string& spec, const fs::path& dataset_dir,
                                            const SyntheticDataset& ds, int clusters, const std::string& coords) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? std::string() : spec.substr(colon + 1);

  if (kind == "dataset") {
    if (static_cast<int>(ds.kernels.size()) == clusters) return ds.kernels;
    if (ds.kernels.size() == 1) return ds.kernels;
    throw Error(ErrorKind::Configuration, "dataset provides " + std::to_string(ds.kernels.size()) +
                                              " kernels but " + std::to_string(clusters) + " clusters were requested");
  }
  if (kind == "diffusion") {
    const double eta = parse_number(arg, "diffusion eta");
    if (ds.truth_graphs.empty()) throw Error(ErrorKind::Configuration, "diffusion kernel needs graph_<k>.csv files");
    if (ds.truth_graphs.size() != 1 && static_cast<int>(ds.truth_graphs.size()) != clusters) {
      throw Error(ErrorKind::Configuration, "number of prior graphs does not match the cluster count");
    }
    std::vector<KernelOperator> out;
    for (const auto& g : ds.truth_graphs) out.push_back(diffusion_kernel(g, eta));
    return out;
  }
  if (kind == "file") {
    const auto paths = split_commas(arg);
    if (paths.size() != 1 && static_cast<int>(paths.size()) != clusters) {
      throw Error(ErrorKind::Configuration, "file: needs one kernel path or one per cluster");
    }
    std::vector<KernelOperator> out;
    for (const auto& p : paths) out.push_back(precomputed_kernel(io::read_matrix_csv(p)));
    return out;
  }
  if (kind == "rbf") {
    const double bandwidth = parse_number(arg, "RBF bandwidth");
    const fs::path path = coords.empty() ? dataset_dir / "coords.csv" : fs::path(coords);
    const Eigen::MatrixXd points = io::read_matrix_csv(path);
    if (points.rows() != ds.config.n) {
      throw Error(ErrorKind::Schema, path.string() + ": expected one row per node");
    }
    return {rbf_kernel(points, bandwidth)};
  }
  throw Error(ErrorKind::Configuration, "unknown kernel spec '" + spec + "'");
}

SyntheticDataset cmd_synth(const ExperimentConfig& cfg) {
  if (cfg.out.empty()) throw Error(ErrorKind::Configuration, "--out is required");
  SyntheticDataset ds = generate(cfg.synth_config());
  io::export_dataset(cfg.out, ds);
  std::cout << "wrote dataset to " << cfg.out << ": n=" << ds.config.n << " m=" << ds.config.m
            << " K=" << ds.config.clusters << " p=" << ds.config.edge_prob << " eta=" << ds.config.eta
            << " snr_db=" << ds.config.snr_db << " sigma_eps=" << io::format_double(ds.sigma_eps)
            << " missing_rate=" << ds.config.missing_rate << " seed=" << ds.config.seed << "\n";
  return ds;
}

io::FitRecord fit_with_restarts(const SignalSet& data, const std::vector<KernelOperator>& kernels,
                                const ExperimentConfig& cfg, int clusters) {
  FitOptions opts;
  opts.filter = cfg.filter_params();
  opts.gamma = cfg.gamma;
  opts.clusters = clusters;
  opts.max_outer_rounds = cfg.max_rounds;
  opts.bcd.epsilon = cfg.epsilon;

  io::FitRecord best;
  bool have_best = false;
  for (int r = 0; r < cfg.restarts; ++r) {
    opts.seed = cfg.seed + static_cast<std::uint64_t>(r);
    ClusterState state = data.has_masks() ? fit_masked(data, kernels, opts) : fit(data, kernels, opts);
    if (have_best && !(state.objective > best.objective)) continue;
    best.assignment = std::move(state.assignment);
    best.graphs = std::move(state.laplacians);
    best.filtered = std::move(state.filtered);
    best.objective_trace = std::move(state.objective_trace);
    best.objective = state.objective;
    best.rounds = state.iteration;
    best.converged = state.converged;
    best.restart = r;
    best.seed = opts.seed;
    have_best = true;
  }
  return best;
}

io::FitRecord cmd_fit(const fs::path& dataset_dir, const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.out.empty()) throw Error(ErrorKind::Configuration, "--out is required");
  const SyntheticDataset ds = io::import_dataset(dataset_dir);
  const int clusters = cfg.clusters > 0 ? cfg.clusters : ds.config.clusters;
  const auto kernels = resolve_kernels(cfg.kernel, dataset_dir, ds, clusters, cfg.coords);
  io::FitRecord record = fit_with_restarts(ds.signals, kernels, cfg, clusters);
  io::export_results(cfg.out, record);
  std::cout << "fit " << dataset_dir.string() << ": K=" << clusters << " objective=" << io::format_double(record.objective)
            << " rounds=" << record.rounds << " converged=" << (record.converged ? 1 : 0)
            << " best_restart=" << record.restart << " -> " << cfg.out << "\n";
  return record;
}

MetricsRecord evaluate(const io::FitRecord& fit, const SyntheticDataset& ds) {
  const int clusters = ds.config.clusters;
  if (fit.assignment.size() != ds.truth_assignment.size()) {
    throw Error(ErrorKind::Schema, "results and dataset have different signal counts");
  }
  if (static_cast<int>(fit.graphs.size()) != clusters || static_cast<int>(ds.truth_graphs.size()) != clusters) {
    throw Error(ErrorKind::Schema, "results and dataset have different cluster counts");
  }
  MetricsRecord r;
  r.seed = ds.config.seed;
  r.clusters = clusters;
  r.n = ds.config.n;
  r.m = ds.config.m;
  r.snr_db = ds.kernels.empty() ? ds.config.snr_db : snr_db(ds.kernels, ds.sigma_eps, ds.config.n);
  r.missing_rate = ds.config.missing_rate;
  r.car = car(fit.assignment, ds.truth_assignment, clusters);
  r.aps_per_cluster = aligned_aps(fit.graphs, ds.truth_graphs, fit.assignment, ds.truth_assignment);
  double sum = 0.0;
  for (double a : r.aps_per_cluster) sum += a;
  r.aps_mean = sum / static_cast<double>(clusters);
  r.rounds = fit.rounds;
  r.converged = fit.converged;
  return r;
}

MetricsRecord cmd_eval(const fs::path& results_dir, const fs::path& dataset_dir, const ExperimentConfig& cfg) {
  const SyntheticDataset ds = io::import_dataset(dataset_dir);
  const io::FitRecord fit = io::import_results(results_dir);
  const MetricsRecord r = evaluate(fit, ds);
  const std::string text = io::metrics_header(r.clusters) + "\n" + io::metrics_row(r) + "\n";
  if (!cfg.out.empty()) {
    fs::path path = cfg.out;
    if (path.extension() != ".csv") path /= "metrics.csv";
    io::write_file_atomic(path, text);
  }
  std::cout << text;
  return r;
}

std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.grid.empty()) throw Error(ErrorKind::Configuration, "--grid must list at least one value");
  std::vector<std::uint64_t> seeds = cfg.seeds;
  if (seeds.empty()) {
    for (int r = 0; r < cfg.realizations; ++r) seeds.push_back(cfg.seed + static_cast<std::uint64_t>(r));
  }
  for (double v : cfg.grid) {
    if (cfg.axis == "clusters" && (v < 1.0 || v != std::floor(v))) {
      throw Error(ErrorKind::Configuration, "clusters grid values must be positive integers");
    }
    if (cfg.axis == "missing-rate" && !(v >= 0.0 && v < 1.0)) {
      throw Error(ErrorKind::Configuration, "missing-rate grid values must lie in [0, 1)");
    }
  }

  const int realizations = static_cast<int>(seeds.size());
  const int tasks = static_cast<int>(cfg.grid.size()) * realizations;
  std::vector<ExperimentRow> rows(static_cast<std::size_t>(tasks) * 2);

  auto run_task = [&](int t) {
    const double value = cfg.grid[static_cast<std::size_t>(t / realizations)];
    const int rep = t % realizations;
    ExperimentConfig local = cfg;
    local.seed = seeds[static_cast<std::size_t>(rep)];
    if (cfg.axis == "clusters") local.clusters = static_cast<int>(value);
    if (cfg.axis == "snr") local.snr = value;
    if (cfg.axis == "missing-rate") local.missing_rate = value;

    ExperimentRow kmgl_row{cfg.axis, value, rep, "kmgl", 0.0, std::numeric_limits<double>::quiet_NaN(), true};
    ExperimentRow kmeans_row{cfg.axis, value, rep, "kmeans", 0.0, std::numeric_limits<double>::quiet_NaN(), true};
    std::optional<SyntheticDataset> ds;
    try {
      ds = generate(local.synth_config());
    } catch (const std::exception& e) {
      std::cerr << "synth failed (" << cfg.axis << "=" << value << ", realization " << rep << "): " << e.what() << "\n";
    }
    if (ds) {
      try {
        ExperimentConfig fit_cfg = local;
        fit_cfg.seed = mix_seed(local.seed, kFitStream);
        const io::FitRecord fit = fit_with_restarts(ds->signals, ds->kernels, fit_cfg, local.clusters);
        const MetricsRecord m = evaluate(fit, *ds);
        kmgl_row.car = m.car;
        kmgl_row.aps_mean = m.aps_mean;
        kmgl_row.failed = false;
      } catch (const std::exception& e) {
        std::cerr << "kmgl failed (" << cfg.axis << "=" << value << ", realization " << rep << "): " << e.what()
                  << "\n";
      }
      try {
        const KMeansResult km = kmeans_baseline(ds->signals.zero_filled(), local.clusters,
                                                mix_seed(local.seed, kKMeansStream), 300, cfg.kmeans_restarts);
        kmeans_row.car = car(km.assignment, ds->truth_assignment, local.clusters);
        kmeans_row.failed = false;
      } catch (const std::exception& e) {
        std::cerr << "kmeans failed (" << cfg.axis << "=" << value << ", realization " << rep << "): " << e.what()
                  << "\n";
      }
    }
    rows[static_cast<std::size_t>(2 * t)] = kmgl_row;
    rows[static_cast<std::size_t>(2 * t + 1)] = kmeans_row;
  };

#pragma omp parallel for schedule(dynamic, 1) num_threads(cfg.jobs)
  for (int t = 0; t < tasks; ++t) run_task(t);
  return rows;
}

std::string experiment_csv(const std::vector<ExperimentRow>& rows) {
  std::string out = "axis,value,realization,method,car,aps_mean,failed\n";
  for (const auto& r : rows) {
    out += r.axis + "," + io::format_double(r.value) + "," + std::to_string(r.realization) + "," + r.method + "," +
           (r.failed ? std::string("nan") : io::format_double(r.car)) + "," +
           (std::isnan(r.aps_mean) ? std::string("nan") : io::format_double(r.aps_mean)) + "," +
           (r.failed ? "1" : "0") + "\n";
  }
  return out;
}

std::vector<ExperimentRow> cmd_experiment(const ExperimentConfig& cfg) {
  if (cfg.out.empty()) throw Error(ErrorKind::Configuration, "--out is required");
  const auto rows = run_experiment(cfg);
  fs::path path = cfg.out;
  if (path.extension() != ".csv") path /= "experiment.csv";
  io::write_file_atomic(path, experiment_csv(rows));

  // Per grid value means, for a quick look.
  std::cout << cfg.axis << ",method,mean_car,mean_aps,failed\n";
  for (double v : cfg.grid) {
    for (const char* method : {"kmgl", "kmeans"}) {
      double car_sum = 0.0, aps_sum = 0.0;
      int ok = 0, failed = 0;
      for (const auto& r : rows) {
        if (r.value != v || r.method != method) continue;
        if (r.failed) {
          ++failed;
          continue;
        }
        car_sum += r.car;
        aps_sum += std::isnan(r.aps_mean) ? 0.0 : r.aps_mean;
        ++ok;
      }
      const double denom = ok > 0 ? ok : 1;
      std::cout << io::format_double(v) << "," << method << "," << io::format_double(car_sum / denom) << ","
                << (std::string(method) == "kmgl" ? io::format_double(aps_sum / denom) : std::string("nan")) << ","
                << failed << "\n";
    }
  }
  std::cout << "wrote " << path.string() << "\n";
  return rows;
}

namespace {

void add_shared(CLI::App* sub, ExperimentConfig& cfg, std::string& config_path) {
  sub->add_option("--config", config_path, "JSON config file; flags override its fields");
  sub->add_option("--seed", cfg.seed, "Random seed");
  sub->add_option("--out", cfg.out, "Output directory");
  sub->add_option("--jobs", cfg.jobs, "Worker threads");
}

void add_synth_flags(CLI::App* sub, ExperimentConfig& cfg) {
  sub->add_option("--nodes", cfg.nodes, "Nodes per graph (n)");
  sub->add_option("--signals", cfg.signals, "Number of signals (m)");
  sub->add_option("--clusters", cfg.clusters, "Number of clusters (K)");
  sub->add_option("--edge-prob", cfg.edge_prob, "Erdos-Renyi edge probability");
  sub->add_option("--eta", cfg.eta, "Diffusion kernel eta");
  sub->add_option("--snr", cfg.snr, "Target SNR in dB");
  sub->add_option("--missing-rate", cfg.missing_rate, "Probability that an entry is unobserved");
}

void add_fit_flags(CLI::App* sub, ExperimentConfig& cfg, bool with_clusters) {
  sub->add_option("--alpha", cfg.alpha, "Side-information weight");
  sub->add_option("--beta", cfg.beta, "Smoothness weight");
  sub->add_option("--gamma", cfg.gamma, "Frobenius regularization of the Laplacians");
  sub->add_option("--epsilon", cfg.epsilon, "Inner loop tolerance on ||dL||_F");
  if (with_clusters) sub->add_option("--clusters", cfg.clusters, "Number of clusters (default: from dataset)");
  sub->add_option("--restarts", cfg.restarts, "Independent runs; the highest objective wins");
  sub->add_option("--max-rounds", cfg.max_rounds, "Cap on outer rounds");
  sub->add_option("--kernel", cfg.kernel, "dataset | diffusion:<eta> | file:<path>[,...] | rbf:<bandwidth>");
  sub->add_option("--coords", cfg.coords, "Node coordinate CSV for rbf kernels");
  sub->add_flag("--tied-alpha-beta", cfg.tied_alpha_beta, "Use beta = alpha");
}

std::string find_config_path(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--config" && i + 1 < argc) return argv[i + 1];
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  return {};
}

}  // namespace

int run_cli(int argc, char** argv) {
  ExperimentConfig cfg;
  std::string config_path;
  try {
    config_path = find_config_path(argc, argv);
    if (!config_path.empty()) apply_json_config(cfg, io::read_file(config_path));
  } catch (const Error& e) {
    std::cerr << "kmgl: " << e.what() << "\n";
    return exit_code(e.kind());
  }
  // fit infers K from the dataset unless --clusters or the config sets it.
  const bool clusters_from_config = !config_path.empty() && [&] {
    try {
      const auto doc = json::parse(io::read_file(config_path));
      return doc.contains("clusters");
    } catch (...) {
      return false;
    }
  }();

  CLI::App cli{"Joint clustering of graph signals and per-cluster graph learning with node-side kernels"};
  cli.require_subcommand(1);

  auto* synth = cli.add_subcommand("synth", "Generate a synthetic dataset");
  add_shared(synth, cfg, config_path);
  add_synth_flags(synth, cfg);

  std::string dataset_dir;
  auto* fit_cmd = cli.add_subcommand("fit", "Cluster a dataset and learn one graph per cluster");
  add_shared(fit_cmd, cfg, config_path);
  fit_cmd->add_option("dataset", dataset_dir, "Dataset directory")->required();
  add_fit_flags(fit_cmd, cfg, true);

  std::string results_dir;
  std::string eval_dataset_dir;
  auto* eval_cmd = cli.add_subcommand("eval", "Score a results directory against its dataset");
  add_shared(eval_cmd, cfg, config_path);
  eval_cmd->add_option("results", results_dir, "Results directory")->required();
  eval_cmd->add_option("dataset", eval_dataset_dir, "Dataset directory")->required();

  auto* exp_cmd = cli.add_subcommand("experiment", "Sweep one axis and record CAR/APS per realization");
  add_shared(exp_cmd, cfg, config_path);
  add_synth_flags(exp_cmd, cfg);
  add_fit_flags(exp_cmd, cfg, false);
  exp_cmd->add_option("--axis", cfg.axis, "clusters | snr | missing-rate");
  exp_cmd->add_option("--grid", cfg.grid, "Comma-separated axis values")->delimiter(',');
  exp_cmd->add_option("--realizations", cfg.realizations, "Realizations per grid value");
  exp_cmd->add_option("--seeds", cfg.seeds, "Explicit comma-separated seed list")->delimiter(',');
  exp_cmd->add_option("--kmeans-restarts", cfg.kmeans_restarts, "k-means restarts (best inertia kept)");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    set_num_threads(cfg.jobs);
    if (synth->parsed()) {
      cmd_synth(cfg);
    } else if (fit_cmd->parsed()) {
      if (fit_cmd->count("--clusters") == 0 && !clusters_from_config) cfg.clusters = 0;
      cmd_fit(dataset_dir, cfg);
    } else if (eval_cmd->parsed()) {
      cmd_eval(results_dir, eval_dataset_dir, cfg);
    } else if (exp_cmd->parsed()) {
      // Realizations are the parallel unit here; inner loops stay serial.
      set_num_threads(1);
      cmd_experiment(cfg);
    }
  } catch (const Error& e) {
    std::cerr << "kmgl: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "kmgl: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "kmgl: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace kmgl::app
