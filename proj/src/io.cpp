#include "kmgl/io.hpp"

#include "kmgl/error.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace kmgl::io {

namespace {

using json = nlohmann::json;

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
    std::size_t start = field.find_first_not_of(' ');
    out.push_back(start == std::string::npos ? std::string() : field.substr(start));
  }
  return out;
}

double parse_double(const std::string& token, const fs::path& path, std::size_t line) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorKind::Schema, path.string() + ":" + std::to_string(line) + ": not a number: '" + token + "'");
  }
  return value;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

Eigen::MatrixXd parse_rows(const std::vector<std::string>& lines, std::size_t first, const fs::path& path) {
  const std::size_t rows = lines.size() - first;
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  const std::size_t cols = split_line(lines[first]).size();
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const auto fields = split_line(lines[first + r]);
    if (fields.size() != cols) {
      throw Error(ErrorKind::Schema, path.string() + ":" + std::to_string(first + r + 1) + ": expected " +
                                         std::to_string(cols) + " fields, got " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = parse_double(fields[c], path, first + r + 1);
    }
  }
  return M;
}

std::string signal_header(Eigen::Index n) {
  std::string header;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i > 0) header += ',';
    header += "s" + std::to_string(i);
  }
  return header;
}

void check_signal_header(const std::string& line, const fs::path& path) {
  const auto fields = split_line(line);
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (fields[i] != "s" + std::to_string(i)) {
      throw Error(ErrorKind::Schema, path.string() + ": header must be s0,...,s{n-1}");
    }
  }
}

json read_json(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, path.string() + ": " + e.what());
  }
}

template <typename T>
T json_field(const json& j, const char* key, const fs::path& path) {
  if (!j.contains(key)) throw Error(ErrorKind::Schema, path.string() + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Schema, path.string() + ": field '" + key + "': " + e.what());
  }
}

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error(ErrorKind::InternalConsistency, "could not format a double");
  return std::string(buf, ptr);
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create directory " + path.parent_path().string() + ": " + ec.message());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "failed writing " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string matrix_to_csv(const Eigen::MatrixXd& M) {
  std::string out;
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    for (Eigen::Index c = 0; c < M.cols(); ++c) {
      if (c > 0) out += ',';
      out += format_double(M(r, c));
    }
    out += '\n';
  }
  return out;
}

void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& M) { write_file_atomic(path, matrix_to_csv(M)); }

Eigen::MatrixXd read_matrix_csv(const fs::path& path) { return parse_rows(read_lines(path), 0, path); }

void write_graph_csv(const fs::path& path, const LaplacianGraph& g) { write_matrix_csv(path, g.adjacency()); }

LaplacianGraph read_graph_csv(const fs::path& path) {
  try {
    return graph_from_adjacency(read_matrix_csv(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io || e.kind() == ErrorKind::Schema) throw;
    throw Error(ErrorKind::Schema, path.string() + ": " + e.what());
  }
}

void write_signals_csv(const fs::path& path, const Eigen::MatrixXd& X) {
  write_file_atomic(path, signal_header(X.rows()) + "\n" + matrix_to_csv(X.transpose()));
}

Eigen::MatrixXd read_signals_csv(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw Error(ErrorKind::Schema, path.string() + ": empty signal file");
  check_signal_header(lines[0], path);
  const Eigen::Index n = static_cast<Eigen::Index>(split_line(lines[0]).size());
  Eigen::MatrixXd rows = parse_rows(lines, 1, path);
  if (rows.size() == 0) return Eigen::MatrixXd(n, 0);
  if (rows.cols() != n) throw Error(ErrorKind::Schema, path.string() + ": row width does not match header");
  return rows.transpose();
}

void write_masks_csv(const fs::path& path, const std::vector<ObservationMask>& masks, Eigen::Index n) {
  std::string out = signal_header(n) + "\n";
  for (const auto& m : masks) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i > 0) out += ',';
      out += m.observed(i) ? '1' : '0';
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<ObservationMask> read_masks_csv(const fs::path& path) {
  const Eigen::MatrixXd M = read_signals_csv(path);
  std::vector<ObservationMask> masks;
  masks.reserve(static_cast<std::size_t>(M.cols()));
  for (Eigen::Index s = 0; s < M.cols(); ++s) {
    std::vector<bool> observed(static_cast<std::size_t>(M.rows()));
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      const double v = M(i, s);
      if (v != 0.0 && v != 1.0) throw Error(ErrorKind::Schema, path.string() + ": mask entries must be 0 or 1");
      observed[static_cast<std::size_t>(i)] = v == 1.0;
    }
    masks.emplace_back(std::move(observed));
  }
  return masks;
}

void write_assignment_csv(const fs::path& path, const std::vector<int>& assignment) {
  std::string out = "cluster\n";
  for (int a : assignment) out += std::to_string(a) + "\n";
  write_file_atomic(path, out);
}

std::vector<int> read_assignment_csv(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || split_line(lines[0]) != std::vector<std::string>{"cluster"}) {
    throw Error(ErrorKind::Schema, path.string() + ": expected header 'cluster'");
  }
  std::vector<int> out;
  out.reserve(lines.size() - 1);
  for (std::size_t l = 1; l < lines.size(); ++l) {
    int value = 0;
    const std::string& tok = lines[l];
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size() || value < 0) {
      throw Error(ErrorKind::Schema, path.string() + ":" + std::to_string(l + 1) + ": bad cluster label '" + tok + "'");
    }
    out.push_back(value);
  }
  return out;
}

fs::path graph_file(const fs::path& dir, int k) { return dir / ("graph_" + std::to_string(k) + ".csv"); }
fs::path kernel_file(const fs::path& dir, int k) { return dir / ("kernel_" + std::to_string(k) + ".csv"); }

void export_dataset(const fs::path& dir, const SyntheticDataset& ds) {
  const auto& cfg = ds.config;
  for (int k = 0; k < cfg.clusters; ++k) {
    write_graph_csv(graph_file(dir, k), ds.truth_graphs[static_cast<std::size_t>(k)]);
    write_matrix_csv(kernel_file(dir, k), ds.kernels[static_cast<std::size_t>(k)].matrix());
  }
  write_signals_csv(dir / "signals.csv", ds.signals.X);
  write_assignment_csv(dir / "assignment.csv", ds.truth_assignment);
  if (ds.signals.has_masks()) {
    write_masks_csv(dir / "masks.csv", ds.signals.masks, cfg.n);
  } else {
    std::error_code ec;
    fs::remove(dir / "masks.csv", ec);
  }
  json meta = {
      {"n", cfg.n},
      {"m", cfg.m},
      {"clusters", cfg.clusters},
      {"edge_prob", cfg.edge_prob},
      {"eta", cfg.eta},
      {"snr_db", cfg.snr_db},
      {"sigma_eps", ds.sigma_eps},
      {"missing_rate", cfg.missing_rate},
      {"seed", cfg.seed},
  };
  write_file_atomic(dir / "meta.json", meta.dump(2) + "\n");
}

SyntheticDataset import_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::Io, "dataset directory " + dir.string() + " does not exist");
  const fs::path meta_path = dir / "meta.json";
  const json meta = read_json(meta_path);

  SyntheticDataset ds;
  auto& cfg = ds.config;
  cfg.n = json_field<Eigen::Index>(meta, "n", meta_path);
  cfg.m = json_field<Eigen::Index>(meta, "m", meta_path);
  cfg.clusters = json_field<int>(meta, "clusters", meta_path);
  cfg.edge_prob = json_field<double>(meta, "edge_prob", meta_path);
  cfg.eta = json_field<double>(meta, "eta", meta_path);
  cfg.snr_db = json_field<double>(meta, "snr_db", meta_path);
  cfg.missing_rate = json_field<double>(meta, "missing_rate", meta_path);
  cfg.seed = json_field<std::uint64_t>(meta, "seed", meta_path);
  ds.sigma_eps = json_field<double>(meta, "sigma_eps", meta_path);

  ds.signals.X = read_signals_csv(dir / "signals.csv");
  if (ds.signals.X.rows() != cfg.n || ds.signals.X.cols() != cfg.m) {
    throw Error(ErrorKind::Schema, (dir / "signals.csv").string() + ": shape disagrees with meta.json");
  }
  ds.truth_assignment = read_assignment_csv(dir / "assignment.csv");
  if (static_cast<Eigen::Index>(ds.truth_assignment.size()) != cfg.m) {
    throw Error(ErrorKind::Schema, (dir / "assignment.csv").string() + ": length disagrees with meta.json");
  }
  if (fs::exists(dir / "masks.csv")) {
    ds.signals.masks = read_masks_csv(dir / "masks.csv");
    if (static_cast<Eigen::Index>(ds.signals.masks.size()) != cfg.m) {
      throw Error(ErrorKind::Schema, (dir / "masks.csv").string() + ": row count disagrees with meta.json");
    }
    ds.signals.validate();
  }
  for (int k = 0; k < cfg.clusters; ++k) {
    if (fs::exists(graph_file(dir, k))) ds.truth_graphs.push_back(read_graph_csv(graph_file(dir, k)));
    if (fs::exists(kernel_file(dir, k))) ds.kernels.push_back(precomputed_kernel(read_matrix_csv(kernel_file(dir, k))));
  }
  return ds;
}

void export_results(const fs::path& dir, const FitRecord& record) {
  write_assignment_csv(dir / "assignment.csv", record.assignment);
  for (std::size_t k = 0; k < record.graphs.size(); ++k) {
    write_graph_csv(graph_file(dir, static_cast<int>(k)), record.graphs[k]);
  }
  write_signals_csv(dir / "filtered_signals.csv", record.filtered);
  std::string trace = "round,objective\n";
  for (std::size_t r = 0; r < record.objective_trace.size(); ++r) {
    trace += std::to_string(r + 1) + "," + format_double(record.objective_trace[r]) + "\n";
  }
  write_file_atomic(dir / "objective_trace.csv", trace);
  json summary = {
      {"clusters", record.graphs.size()},
      {"objective", record.objective},
      {"rounds", record.rounds},
      {"converged", record.converged},
      {"restart", record.restart},
      {"seed", record.seed},
  };
  write_file_atomic(dir / "summary.json", summary.dump(2) + "\n");
}

FitRecord import_results(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::Io, "results directory " + dir.string() + " does not exist");
  const fs::path summary_path = dir / "summary.json";
  const json summary = read_json(summary_path);
  FitRecord r;
  const int clusters = json_field<int>(summary, "clusters", summary_path);
  r.objective = json_field<double>(summary, "objective", summary_path);
  r.rounds = json_field<int>(summary, "rounds", summary_path);
  r.converged = json_field<bool>(summary, "converged", summary_path);
  r.restart = json_field<int>(summary, "restart", summary_path);
  r.seed = json_field<std::uint64_t>(summary, "seed", summary_path);
  r.assignment = read_assignment_csv(dir / "assignment.csv");
  for (int k = 0; k < clusters; ++k) r.graphs.push_back(read_graph_csv(graph_file(dir, k)));
  r.filtered = read_signals_csv(dir / "filtered_signals.csv");

  const auto lines = read_lines(dir / "objective_trace.csv");
  if (lines.empty() || lines[0] != "round,objective") {
    throw Error(ErrorKind::Schema, (dir / "objective_trace.csv").string() + ": expected header 'round,objective'");
  }
  const Eigen::MatrixXd trace = parse_rows(lines, 1, dir / "objective_trace.csv");
  for (Eigen::Index i = 0; i < trace.rows(); ++i) r.objective_trace.push_back(trace(i, 1));
  return r;
}

std::string metrics_header(int clusters) {
  std::string h = "seed,K,n,m,snr_db,missing_rate,car,aps_mean";
  for (int k = 0; k < clusters; ++k) h += ",aps_c" + std::to_string(k);
  h += ",rounds,converged";
  return h;
}

std::string metrics_row(const MetricsRecord& r) {
  std::string row = std::to_string(r.seed) + "," + std::to_string(r.clusters) + "," + std::to_string(r.n) + "," +
                    std::to_string(r.m) + "," + format_double(r.snr_db) + "," + format_double(r.missing_rate) + "," +
                    format_double(r.car) + "," + format_double(r.aps_mean);
  for (double a : r.aps_per_cluster) row += "," + format_double(a);
  row += "," + std::to_string(r.rounds) + "," + (r.converged ? "1" : "0");
  return row;
}

}  // namespace kmgl::io
