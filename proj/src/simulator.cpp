#include "localsgd_lab/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <sstream>
#include <thread>

#include "localsgd_lab/optimizers.hpp"

namespace localsgd_lab {

namespace {

/// Runs body(i) for every worker i, spreading workers over `threads`
/// threads. Returns at the barrier; the lowest-id worker's exception, if
/// any, is rethrown.
void for_each_worker(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& body) {
  std::vector<std::exception_ptr> errors(n);
  auto guarded = [&](std::size_t i) {
    try {
      body(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) guarded(i);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (std::size_t tid = 0; tid < threads; ++tid) {
      pool.emplace_back([&, tid] {
        for (std::size_t i = tid; i < n; i += threads) guarded(i);
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::string format_g(double v, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

class Simulation {
 public:
  Simulation(const RunConfig& cfg, const Problem& p, const RunOptions& options, RunResult& result)
      : cfg_(cfg),
        p_(p),
        options_(options),
        result_(result),
        schedule_(cfg.k, cfg.iterations, cfg.warm_up),
        threads_(resolve_threads(options.threads, cfg.workers)),
        sample_every_(cfg.effective_sample_every()),
        iterations_per_epoch_(iterations_per_epoch(cfg, p)),
        optimum_(p.optimum()) {}

  void execute(GlobalState& state) {
    if (cfg_.algorithm == Algorithm::SSGD) {
      run_synchronous(state);
    } else {
      run_periodic(state);
    }
  }

 private:
  bool per_step() const { return options_.diagnostic || options_.record_trajectory; }
  bool checks_vrl() const { return options_.diagnostic && cfg_.algorithm == Algorithm::VRLSGD; }

  void diverge(std::string reason) {
    result_.diverged = true;
    result_.divergence_reason = std::move(reason);
  }

  MetricRow make_row(const GlobalState& state, double drift) const {
    MetricRow row;
    row.t = state.t;
    row.epoch = static_cast<double>(state.t) / iterations_per_epoch_;
    row.loss = p_.loss(state.x_hat);
    row.grad_norm_sq = grad_norm_sq(p_, state.x_hat);
    row.drift = drift;
    std::vector<ModelVector> vs;
    vs.reserve(state.workers.size());
    for (const auto& w : state.workers) vs.push_back(w.last_v);
    row.v_variance = v_variance(vs);
    row.delta_residual = delta_residual(state);
    if (optimum_) row.dist_to_opt = norm(vec_sub(state.x_hat, *optimum_));
    return row;
  }

  /// Appends a row unless the loss shows divergence; false when diverged.
  bool sample(const GlobalState& state, double drift) {
    MetricRow row = make_row(state, drift);
    if (!std::isfinite(row.loss) || row.loss > kDivergenceLoss || !std::isfinite(row.grad_norm_sq)) {
      diverge("loss " + format_g(row.loss) + " at t = " + std::to_string(state.t));
      return false;
    }
    result_.trace.push_back(std::move(row));
    return true;
  }

  void run_synchronous(GlobalState& state) {
    while (state.t < cfg_.iterations) {
      try {
        ssgd_step(state, p_, cfg_);
      } catch (const NumericalError& e) {
        diverge(e.what());
        return;
      }
      if (!state.x_hat.all_finite()) {
        diverge("non-finite model at t = " + std::to_string(state.t));
        return;
      }
      if (options_.record_trajectory) result_.trajectory.push_back(state.local_models());
      if (!sample(state, 0.0)) return;
    }
  }

  ModelVector local_step(WorkerState& w, std::uint64_t t) const {
    if (cfg_.algorithm == Algorithm::VRLSGD) return vrl_local_step(w, p_, cfg_, t);
    return local_sgd_step(w, p_, cfg_, t);
  }

  void synchronize(GlobalState& state) const {
    switch (cfg_.algorithm) {
      case Algorithm::VRLSGD: vrl_sync(state, cfg_, schedule_, options_.force_zero_delta); break;
      case Algorithm::LocalSGD: local_sgd_sync(state, schedule_); break;
      case Algorithm::EASGD: easgd_sync(state, cfg_, schedule_); break;
      case Algorithm::SSGD: break;
    }
  }

  void run_periodic(GlobalState& state) {
    const std::size_t n = state.workers.size();
    Diagnostics* diag = result_.diagnostics ? &*result_.diagnostics : nullptr;
    PeriodGradients current;
    PeriodGradients previous;
    std::vector<ModelVector> first_period{state.x_hat};
    bool first_period_open = true;

    while (state.t < cfg_.iterations) {
      const std::uint64_t t0 = state.t;
      std::uint64_t end = schedule_.next_sync_after(t0);
      if (per_step()) {
        end = t0 + 1;
      } else {
        end = std::min(end, (t0 / sample_every_ + 1) * sample_every_);
      }

      StepGradients step_grads(n);
      try {
        for_each_worker(n, threads_, [&](std::size_t i) {
          for (std::uint64_t tau = t0; tau < end; ++tau) {
            ModelVector g = local_step(state.workers[i], tau);
            if (diag) step_grads[i] = std::move(g);
          }
        });
      } catch (const NumericalError& e) {
        diverge(e.what());
        return;
      }
      state.grad_evals += n * cfg_.batch_size * (end - t0);
      state.t = end;
      for (const auto& w : state.workers) {
        if (!w.x.all_finite()) {
          diverge("non-finite local model on worker " + std::to_string(w.worker_id) + " at t = " +
                  std::to_string(end));
          return;
        }
      }

      const bool is_sync = schedule_.is_sync_point(end);
      const bool is_sample = is_sync || end % sample_every_ == 0;
      const ModelVector averaged = state.average_model();

      if (checks_vrl()) {
        const ModelVector mean_grad = vec_mean(step_grads);
        ModelVector recursion = state.x_hat;
        for (std::size_t c = 0; c < recursion.size(); ++c) recursion[c] -= cfg_.gamma * mean_grad[c];
        diag->max_averaged_update_residual =
            std::max(diag->max_averaged_update_residual, max_abs_diff(averaged, recursion));
        if (!options_.force_zero_delta) {
          for (std::size_t i = 0; i < n; ++i) {
            const ModelVector v = v_direct(step_grads[i], previous, i);
            diag->max_v_direct_diff = std::max(diag->max_v_direct_diff, max_abs_diff(v, state.workers[i].last_v));
          }
        }
        ++diag->steps_checked;
        current.push_back(std::move(step_grads));
      }
      if (diag && first_period_open && !is_sync) first_period.push_back(averaged);

      const double drift = is_sample ? worker_drift(state) : 0.0;
      if (is_sync) {
        const std::uint64_t period = schedule_.period_length_ending_at(end);
        synchronize(state);
        if (checks_vrl() && !options_.force_zero_delta) {
          diag->max_delta_sum = std::max(diag->max_delta_sum, delta_residual(state));
          for (std::size_t i = 0; i < n; ++i) {
            const ModelVector direct = delta_direct(current, i, period);
            diag->max_delta_direct_diff =
                std::max(diag->max_delta_direct_diff, max_abs_diff(direct, state.workers[i].delta));
          }
          ++diag->syncs_checked;
        }
        previous = std::move(current);
        current.clear();
        if (diag && first_period_open) {
          diag->c_constant = c_constant(p_, first_period);
          first_period_open = false;
          first_period.clear();
        }
      } else {
        state.x_hat = averaged;
      }

      if (options_.record_trajectory) result_.trajectory.push_back(state.local_models());
      if (is_sample && !sample(state, drift)) return;
    }
  }

  const RunConfig& cfg_;
  const Problem& p_;
  const RunOptions& options_;
  RunResult& result_;
  SyncSchedule schedule_;
  std::size_t threads_;
  std::uint64_t sample_every_;
  double iterations_per_epoch_;
  std::optional<ModelVector> optimum_;
};

}  // namespace

std::size_t resolve_threads(std::size_t requested, std::size_t workers) {
  std::size_t threads = requested;
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  return std::max<std::size_t>(1, std::min(threads, workers));
}

double iterations_per_epoch(const RunConfig& cfg, const Problem& p) {
  const std::size_t n = p.sample_count();
  if (n == 0) return 1.0;
  return static_cast<double>(n) / static_cast<double>(cfg.workers * cfg.batch_size);
}

RunResult run(const RunConfig& cfg, const Problem& p, const RunOptions& options) {
  cfg.validate();
  if (p.worker_count() != cfg.workers) {
    throw ConfigError("problem has " + std::to_string(p.worker_count()) + " workers but the run asks for " +
                      std::to_string(cfg.workers));
  }
  const auto start = std::chrono::steady_clock::now();
  RunResult result;
  result.config = cfg;
  if (options.diagnostic) result.diagnostics.emplace();

  GlobalState state = GlobalState::initial(ModelVector(p.dimension(), cfg.x0), cfg.workers, cfg.seed);
  if (options.record_trajectory) result.trajectory.push_back(state.local_models());

  Simulation sim(cfg, p, options, result);
  sim.execute(state);

  result.final_state = std::move(state);
  result.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return result;
}

RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  cfg.run.validate();
  const auto problem = make_problem(cfg.problem, cfg.run.workers, cfg.run.partition);
  return run(cfg.run, *problem, options);
}

// ---------------------------------------------------------------------------

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "k") return SweepAxis::K;
  if (name == "gamma") return SweepAxis::Gamma;
  if (name == "n" || name == "N" || name == "workers") return SweepAxis::Workers;
  if (name == "b_param" || name == "b-param") return SweepAxis::BParam;
  if (name == "batch_size" || name == "batch-size") return SweepAxis::BatchSize;
  if (name == "algorithm" || name == "algo") return SweepAxis::Algorithm;
  throw ConfigError("invalid sweep axis '" + std::string(name) +
                    "' (expected k, gamma, n, b_param, batch_size or algorithm)");
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::K: return "k";
    case SweepAxis::Gamma: return "gamma";
    case SweepAxis::Workers: return "n";
    case SweepAxis::BParam: return "b_param";
    case SweepAxis::BatchSize: return "batch_size";
    case SweepAxis::Algorithm: return "algorithm";
  }
  return "unknown";
}

namespace {

std::uint64_t parse_count(std::string_view value) {
  const std::string s(value);
  std::size_t used = 0;
  try {
    if (!s.empty() && s.front() == '-') throw std::invalid_argument("negative");
    const auto v = std::stoull(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("expected a non-negative integer, got '" + s + "'");
}

double parse_real(std::string_view value) {
  const std::string s(value);
  std::size_t used = 0;
  try {
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("expected a number, got '" + s + "'");
}

}  // namespace

ExperimentConfig apply_axis(const ExperimentConfig& base, SweepAxis axis, std::string_view value) {
  ExperimentConfig cfg = base;
  switch (axis) {
    case SweepAxis::K: cfg.run.k = parse_count(value); break;
    case SweepAxis::Gamma: cfg.run.gamma = parse_real(value); break;
    case SweepAxis::Workers: cfg.run.workers = parse_count(value); break;
    case SweepAxis::BParam: cfg.problem.b_param = parse_real(value); break;
    case SweepAxis::BatchSize: cfg.run.batch_size = parse_count(value); break;
    case SweepAxis::Algorithm:
      cfg.run.algorithm = parse_algorithm(value);
      if (cfg.run.algorithm == Algorithm::SSGD) cfg.run.k = 1;
      break;
  }
  return cfg;
}

std::vector<SweepPoint> sweep(const ExperimentConfig& base, SweepAxis axis, std::span<const std::string> values,
                              const RunOptions& options) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  std::vector<SweepPoint> points;
  points.reserve(values.size());
  for (const auto& value : values) {
    ExperimentConfig cfg = apply_axis(base, axis, value);
    RunResult result = run_experiment(cfg, options);
    points.push_back(SweepPoint{value, std::move(cfg), std::move(result)});
  }
  return points;
}

// ---------------------------------------------------------------------------

bool HyperparamReport::all_pass() const {
  return std::all_of(conditions.begin(), conditions.end(), [](const ConditionCheck& c) { return c.pass.value_or(true); });
}

std::string HyperparamReport::render() const {
  std::ostringstream out;
  out << "hyperparameter report (advisory only; runs are never blocked)\n";
  out << "  N = " << workers << ", T = " << iterations << ", k = " << k << ", gamma = " << format_g(gamma)
      << ", batch = " << batch_size << "\n";
  out << "  L = " << format_g(smoothness.value) << (smoothness.estimated ? " (estimated)" : " (analytic)")
      << ", sigma = " << format_g(sigma) << "\n";
  for (const auto& c : conditions) {
    const char* tag = !c.pass ? "[n/a ]" : (*c.pass ? "[pass]" : "[FAIL]");
    out << "  " << tag << " " << c.name << ": ";
    if (c.pass) {
      out << format_g(c.lhs) << (c.name.rfind("T >=", 0) == 0 ? " >= " : " <= ") << format_g(c.rhs) << "\n";
    } else {
      out << "needs sigma > 0\n";
    }
  }
  const double ratio = std::sqrt(static_cast<double>(iterations)) / std::pow(static_cast<double>(workers), 1.5);
  out << "  suggested k = floor(sqrt(T) / N^(3/2)) = floor(" << format_g(ratio, 4) << ") = " << suggested_k << "\n";
  out << "  suggested gamma = sqrt(b N) / (sigma sqrt(T)) = "
      << (suggested_gamma ? format_g(*suggested_gamma) : std::string("n/a (needs sigma > 0)")) << "\n";
  out << "  local sgd period bound T^(1/4) / N^(3/4) = " << format_g(local_sgd_k_bound, 3) << "\n";
  return out.str();
}

HyperparamReport check_hyperparams(const RunConfig& cfg, Smoothness smoothness, double sigma) {
  HyperparamReport r;
  r.workers = cfg.workers;
  r.iterations = cfg.iterations;
  r.k = cfg.k;
  r.gamma = cfg.gamma;
  r.batch_size = cfg.batch_size;
  r.smoothness = smoothness;
  r.sigma = sigma;

  const double L = smoothness.value;
  const double k = static_cast<double>(cfg.k);
  const double n = static_cast<double>(cfg.workers);
  const double t = static_cast<double>(cfg.iterations);
  const double g = cfg.gamma;

  r.conditions.push_back({"gamma <= 1/(2L)", g, 1.0 / (2.0 * L), g <= 1.0 / (2.0 * L)});
  const double period_term = 72.0 * k * k * g * g * L * L;
  r.conditions.push_back({"72 k^2 gamma^2 L^2 <= 1", period_term, 1.0, period_term <= 1.0});
  ConditionCheck horizon{"T >= 72 N^3 L^2 k^2 / sigma^2", t, 0.0, std::nullopt};
  if (sigma > 0.0) {
    horizon.rhs = 72.0 * n * n * n * L * L * k * k / (sigma * sigma);
    horizon.pass = t >= horizon.rhs;
  }
  r.conditions.push_back(horizon);

  if (sigma > 0.0 && cfg.iterations > 0) {
    r.suggested_gamma = std::sqrt(static_cast<double>(cfg.batch_size) * n) / (sigma * std::sqrt(t));
  }
  const double k_suggest = std::floor(std::sqrt(t) / std::pow(n, 1.5));
  r.suggested_k = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(k_suggest));
  r.local_sgd_k_bound = std::pow(t, 0.25) / std::pow(n, 0.75);
  return r;
}

HyperparamReport check_hyperparams(const RunConfig& cfg, const Problem& p) {
  Smoothness s;
  if (auto analytic = p.smoothness()) {
    s = *analytic;
  } else {
    const ModelVector x0(p.dimension(), cfg.x0);
    s = Smoothness{estimate_lipschitz(p, std::span<const ModelVector>(&x0, 1)), true};
  }
  return check_hyperparams(cfg, s, p.noise_sigma());
}

}  // namespace localsgd_lab
