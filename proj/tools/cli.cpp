#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "localsgd_lab/io.hpp"
#include "localsgd_lab/metrics.hpp"
#include "localsgd_lab/simulator.hpp"
#include "localsgd_lab/verify.hpp"

namespace localsgd_lab::cli {

namespace {

/// Flags shared by run, sweep and advise. Every flag that is given overrides
/// the config file; the rest keep the file's (or the built-in) values.
struct ConfigFlags {
  std::string config;
  std::string algo;
  std::string problem;
  std::string partition;
  std::string csv;
  double b_param = 0;
  double sigma = 0;
  double gamma = 0;
  double x0 = 0;
  double easgd_alpha = 0;
  double l2 = 0;
  std::size_t n = 0;
  std::size_t batch_size = 0;
  std::size_t dim = 0;
  std::size_t samples = 0;
  std::size_t classes = 0;
  std::uint64_t k = 0;
  std::uint64_t t = 0;
  std::uint64_t seed = 0;
  std::uint64_t data_seed = 0;
  std::uint64_t sample_every = 0;
  bool warm_up = false;

  void attach(CLI::App& app) {
    app.add_option("--config", config, "JSON config file");
    app.add_option("--algo", algo, "ssgd | localsgd | easgd | vrlsgd");
    app.add_option("--problem", problem, "quad | quadratic | least_squares | logistic");
    app.add_option("--b-param", b_param, "problem parameter b (quad) or center spread (quadratic)");
    app.add_option("--sigma", sigma, "gradient noise standard deviation");
    app.add_option("--n", n, "number of workers");
    app.add_option("--k", k, "communication period (default 10, or 1 for ssgd)");
    app.add_option("--gamma", gamma, "learning rate");
    app.add_option("--t", t, "local iterations per worker");
    app.add_option("--seed", seed, "sampling seed");
    app.add_option("--batch-size", batch_size, "mini-batch size");
    app.add_flag("--warm-up", warm_up, "one-step first period");
    app.add_option("--easgd-alpha", easgd_alpha, "EASGD moving rate (default 0.9/N)");
    app.add_option("--partition", partition, "identical | non_identical");
    app.add_option("--x0", x0, "initial value of every coordinate");
    app.add_option("--sample-every", sample_every, "metric cadence (0 = ceil(T/1000))");
    app.add_option("--dim", dim, "dimension (quadratic) or feature count (least_squares, logistic)");
    app.add_option("--samples", samples, "synthetic dataset size");
    app.add_option("--classes", classes, "synthetic dataset classes");
    app.add_option("--data-seed", data_seed, "synthetic dataset seed");
    app.add_option("--l2", l2, "l2 regularization (logistic)");
    app.add_option("--csv", csv, "dataset CSV instead of synthetic data");
  }

  ExperimentConfig resolve(const CLI::App& app) const {
    ExperimentConfig cfg = config.empty() ? ExperimentConfig{} : load_config(config);
    RunConfig& r = cfg.run;
    ProblemConfig& p = cfg.problem;
    auto given = [&](const char* flag) { return app.count(flag) > 0; };
    if (given("--algo")) r.algorithm = parse_algorithm(algo);
    if (given("--problem")) p.kind = problem;
    if (given("--b-param")) p.b_param = b_param;
    if (given("--sigma")) p.sigma = sigma;
    if (given("--n")) r.workers = n;
    if (given("--k")) {
      r.k = k;
    } else if (given("--algo") && r.algorithm == Algorithm::SSGD) {
      r.k = 1;
    }
    if (given("--gamma")) r.gamma = gamma;
    if (given("--t")) r.iterations = t;
    if (given("--seed")) r.seed = seed;
    if (given("--batch-size")) r.batch_size = batch_size;
    if (given("--warm-up")) r.warm_up = warm_up;
    if (given("--easgd-alpha")) r.easgd_alpha = easgd_alpha;
    if (given("--partition")) r.partition = parse_partition(partition);
    if (given("--x0")) r.x0 = x0;
    if (given("--sample-every")) r.sample_every = sample_every;
    if (given("--dim")) p.dim = dim;
    if (given("--samples")) p.samples = samples;
    if (given("--classes")) p.classes = classes;
    if (given("--data-seed")) p.data_seed = data_seed;
    if (given("--l2")) p.l2 = l2;
    if (given("--csv")) p.csv = csv;
    return cfg;
  }
};

/// LOCALSGD_LAB_THREADS, unless --threads was given; 0 means auto.
std::size_t thread_setting(const CLI::App& app, std::size_t flag_value) {
  if (app.count("--threads") > 0) return flag_value;
  if (const char* env = std::getenv("LOCALSGD_LAB_THREADS")) {
    try {
      return static_cast<std::size_t>(std::stoul(env));
    } catch (const std::exception&) {
      throw ConfigError(std::string("LOCALSGD_LAB_THREADS must be a non-negative integer, got '") + env + "'");
    }
  }
  return 1;
}

std::vector<std::string> split_values(const std::string& list) {
  std::vector<std::string> values;
  std::stringstream in(list);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) values.push_back(item);
  }
  if (values.empty()) throw ConfigError("--values must list at least one value");
  return values;
}

std::string csv_real(double v) { return std::isfinite(v) ? format_real(v) : std::string(); }

int report_run(const RunResult& result, const std::filesystem::path& dir, std::ostream& out, std::ostream& err) {
  if (result.diverged) {
    err << "diverged: " << result.divergence_reason << " (outputs in " << dir.string() << ")\n";
    return kExitDiverged;
  }
  out << "wrote " << (dir / "trace.csv").string() << ", summary.json, config.json\n";
  return kExitOk;
}

}  // namespace

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Deterministic simulator of VRL-SGD, Local SGD, EASGD and S-SGD"};
  app.require_subcommand(1);
  std::size_t threads = 1;
  app.add_option("--threads", threads, "worker threads (0 = auto; default from LOCALSGD_LAB_THREADS, else 1)");

  auto* run_cmd = app.add_subcommand("run", "run one experiment");
  ConfigFlags run_flags;
  run_flags.attach(*run_cmd);
  std::string run_out = "out";
  run_cmd->add_option("--out", run_out, "output directory");

  auto* sweep_cmd = app.add_subcommand("sweep", "one run per value of a parameter");
  ConfigFlags sweep_flags;
  sweep_flags.attach(*sweep_cmd);
  std::string axis;
  std::string values;
  std::string sweep_out = "sweep";
  sweep_cmd->add_option("--axis", axis, "k | gamma | n | b_param | batch_size | algorithm")->required();
  sweep_cmd->add_option("--values", values, "comma-separated values")->required();
  sweep_cmd->add_option("--out", sweep_out, "output directory");

  auto* verify_cmd = app.add_subcommand("verify", "check the algebraic identities and the reference oracle");
  bool quick = false;
  verify_cmd->add_flag("--quick", quick, "reduced matrix");

  auto* advise_cmd = app.add_subcommand("advise", "print the hyperparameter report");
  ConfigFlags advise_flags;
  advise_flags.attach(*advise_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);  // --help
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  }

  try {
    RunOptions options;
    options.threads = thread_setting(app, threads);

    if (*run_cmd) {
      const ExperimentConfig cfg = run_flags.resolve(*run_cmd);
      const RunResult result = run_experiment(cfg, options);
      const auto problem = make_problem(cfg.problem, cfg.run.workers, cfg.run.partition);
      write_run_outputs(run_out, cfg, result, *problem);
      return report_run(result, run_out, out, err);
    }

    if (*sweep_cmd) {
      const ExperimentConfig base = sweep_flags.resolve(*sweep_cmd);
      const SweepAxis which = parse_sweep_axis(axis);
      const auto list = split_values(values);
      // validate every point before spending time on any run
      for (const auto& v : list) apply_axis(base, which, v).run.validate();
      const auto points = sweep(base, which, list, options);
      const std::filesystem::path root(sweep_out);
      std::filesystem::create_directories(root);
      std::ostringstream table;
      table << "axis,value,dir,algorithm,n,k,gamma,b_param,batch_size,final_loss,final_grad_norm_sq,"
               "final_dist_to_opt,final_v_variance,diverged,syncs,grad_evals\n";
      bool any_diverged = false;
      for (const auto& point : points) {
        const std::string dir_name = std::string(to_string(which)) + "_" + point.value;
        const auto problem = make_problem(point.config.problem, point.config.run.workers, point.config.run.partition);
        write_run_outputs(root / dir_name, point.config, point.result, *problem);
        const RunResult& r = point.result;
        const RunConfig& c = point.config.run;
        const ModelVector& x_hat = r.final_state.x_hat;
        const bool finite = x_hat.all_finite();
        const auto opt = problem->optimum();
        const double nan = std::numeric_limits<double>::quiet_NaN();
        table << to_string(which) << ',' << point.value << ',' << dir_name << ',' << to_string(c.algorithm) << ','
              << c.workers << ',' << c.k << ',' << format_real(c.gamma) << ','
              << format_real(point.config.problem.b_param) << ',' << c.batch_size << ','
              << csv_real(finite ? problem->loss(x_hat) : nan) << ','
              << csv_real(finite ? grad_norm_sq(*problem, x_hat) : nan) << ','
              << csv_real(finite && opt ? norm(vec_sub(x_hat, *opt)) : nan) << ','
              << csv_real(r.trace.empty() ? nan : r.trace.back().v_variance) << ',' << (r.diverged ? 1 : 0) << ','
              << r.final_state.syncs << ',' << r.final_state.grad_evals << '\n';
        any_diverged = any_diverged || r.diverged;
      }
      std::ofstream file(root / "sweep.csv", std::ios::binary);
      if (!file) throw std::runtime_error("cannot write '" + (root / "sweep.csv").string() + "'");
      file << table.str();
      out << "wrote " << points.size() << " runs and " << (root / "sweep.csv").string() << "\n";
      return any_diverged ? kExitDiverged : kExitOk;
    }

    if (*verify_cmd) {
      bool all = true;
      auto print = [&](const IdentityCheck& c) {
        out << (c.pass ? "PASS " : "FAIL ") << c.name << "  worst=" << format_real(c.worst);
        if (c.tolerance > 0) out << " tol=" << format_real(c.tolerance);
        if (!c.detail.empty()) out << "  (" << c.detail << ")";
        out << "\n";
        all = all && c.pass;
      };
      out << "identities (" << (quick ? "quick" : "full") << " matrix)\n";
      for (const auto& c : run_identity_checks(quick)) print(c);
      out << "oracle agreement\n";
      for (const auto& c : run_oracle_checks(quick)) print(c);
      return all ? kExitOk : kExitCheckFailed;
    }

    if (*advise_cmd) {
      const ExperimentConfig cfg = advise_flags.resolve(*advise_cmd);
      // the pair problem only exists for two workers; its constants do not depend on N
      const std::size_t problem_workers = cfg.problem.kind == "quad" ? 2 : cfg.run.workers;
      const auto problem = make_problem(cfg.problem, problem_workers, cfg.run.partition);
      out << check_hyperparams(cfg.run, *problem).render();
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitConfigError;
}

}  // namespace localsgd_lab::cli
