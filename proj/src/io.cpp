#include "localsgd_lab/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

namespace localsgd_lab {

using Json = nlohmann::ordered_json;

namespace {

template <typename T>
void read_field(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

void reject_unknown(const Json& j, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!known.contains(key)) throw ConfigError("unknown config key '" + where + key + "'");
  }
}

Json real_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

ExperimentConfig config_from_json(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j,
                 {"algorithm", "gamma", "k", "n", "t", "batch_size", "warm_up", "seed", "easgd_alpha", "partition",
                  "x0", "sample_every", "problem"},
                 "");

  ExperimentConfig cfg;
  RunConfig& r = cfg.run;
  std::string algorithm(to_string(r.algorithm));
  std::string partition(to_string(r.partition));
  read_field(j, "algorithm", algorithm);
  read_field(j, "partition", partition);
  r.algorithm = parse_algorithm(algorithm);
  r.partition = parse_partition(partition);
  read_field(j, "gamma", r.gamma);
  if (r.algorithm == Algorithm::SSGD) r.k = 1;
  read_field(j, "k", r.k);
  read_field(j, "n", r.workers);
  read_field(j, "t", r.iterations);
  read_field(j, "batch_size", r.batch_size);
  read_field(j, "warm_up", r.warm_up);
  read_field(j, "seed", r.seed);
  read_field(j, "x0", r.x0);
  read_field(j, "sample_every", r.sample_every);
  if (j.contains("easgd_alpha") && !j.at("easgd_alpha").is_null()) {
    double alpha = 0.0;
    read_field(j, "easgd_alpha", alpha);
    r.easgd_alpha = alpha;
  }

  if (j.contains("problem")) {
    const Json& pj = j.at("problem");
    if (!pj.is_object()) throw ConfigError("config field 'problem' must be an object");
    reject_unknown(pj, {"kind", "b_param", "sigma", "dim", "samples", "classes", "data_seed", "l2", "csv"},
                   "problem.");
    ProblemConfig& p = cfg.problem;
    read_field(pj, "kind", p.kind);
    read_field(pj, "b_param", p.b_param);
    read_field(pj, "sigma", p.sigma);
    read_field(pj, "dim", p.dim);
    read_field(pj, "samples", p.samples);
    read_field(pj, "classes", p.classes);
    read_field(pj, "data_seed", p.data_seed);
    read_field(pj, "l2", p.l2);
    read_field(pj, "csv", p.csv);
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return config_from_json(buffer.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  const RunConfig& r = cfg.run;
  const ProblemConfig& p = cfg.problem;
  Json j;
  j["algorithm"] = std::string(to_string(r.algorithm));
  j["gamma"] = r.gamma;
  j["k"] = r.k;
  j["n"] = r.workers;
  j["t"] = r.iterations;
  j["batch_size"] = r.batch_size;
  j["warm_up"] = r.warm_up;
  j["seed"] = r.seed;
  j["easgd_alpha"] = r.effective_easgd_alpha();
  j["partition"] = std::string(to_string(r.partition));
  j["x0"] = r.x0;
  j["sample_every"] = r.sample_every;
  j["problem"] = Json{{"kind", p.kind},       {"b_param", p.b_param}, {"sigma", p.sigma},
                      {"dim", p.dim},         {"samples", p.samples}, {"classes", p.classes},
                      {"data_seed", p.data_seed}, {"l2", p.l2},       {"csv", p.csv}};
  return j.dump(2) + "\n";
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trace_to_csv(const MetricTrace& trace) {
  std::string out(kTraceHeader);
  out += '\n';
  for (const auto& row : trace) {
    out += std::to_string(row.t);
    for (double v : {row.epoch, row.loss, row.grad_norm_sq, row.drift, row.v_variance, row.delta_residual}) {
      out += ',';
      out += format_real(v);
    }
    out += ',';
    if (row.dist_to_opt) out += format_real(*row.dist_to_opt);
    out += '\n';
  }
  return out;
}

MetricTrace trace_from_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kTraceHeader) throw std::runtime_error("trace.csv: unexpected header");
  MetricTrace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      cells.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (cells.size() != 8) throw std::runtime_error("trace.csv: expected 8 columns, got " + std::to_string(cells.size()));
    MetricRow row;
    row.t = std::stoull(cells[0]);
    row.epoch = std::stod(cells[1]);
    row.loss = std::stod(cells[2]);
    row.grad_norm_sq = std::stod(cells[3]);
    row.drift = std::stod(cells[4]);
    row.v_variance = std::stod(cells[5]);
    row.delta_residual = std::stod(cells[6]);
    if (!cells[7].empty()) row.dist_to_opt = std::stod(cells[7]);
    trace.push_back(row);
  }
  return trace;
}

std::string summary_to_json(const RunResult& result, const Problem& p) {
  const ModelVector& x_hat = result.final_state.x_hat;
  const bool finite = x_hat.all_finite();
  Json j;
  j["algorithm"] = std::string(to_string(result.config.algorithm));
  j["final_loss"] = finite ? real_or_null(p.loss(x_hat)) : Json(nullptr);
  j["final_grad_norm_sq"] = finite ? real_or_null(grad_norm_sq(p, x_hat)) : Json(nullptr);
  const auto opt = p.optimum();
  j["final_dist_to_opt"] = (finite && opt) ? real_or_null(norm(vec_sub(x_hat, *opt))) : Json(nullptr);
  j["diverged"] = result.diverged;
  j["syncs"] = result.final_state.syncs;
  j["grad_evals"] = result.final_state.grad_evals;
  j["wall_ms"] = result.wall_ms;
  j["easgd_alpha"] = result.config.effective_easgd_alpha();
  if (result.diverged) j["divergence_reason"] = result.divergence_reason;
  return j.dump(2) + "\n";
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace

void write_run_outputs(const std::filesystem::path& dir, const ExperimentConfig& cfg, const RunResult& result,
                       const Problem& p) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());
  write_file(dir / "trace.csv", trace_to_csv(result.trace));
  write_file(dir / "summary.json", summary_to_json(result, p));
  write_file(dir / "config.json", config_to_json(cfg));
}

}  // namespace localsgd_lab
