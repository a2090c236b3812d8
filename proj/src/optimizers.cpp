#include "localsgd_lab/optimizers.hpp"

#include <stdexcept>

namespace localsgd_lab {

namespace {

ModelVector draw_gradient(const WorkerState& w, const Problem& p, const RunConfig& cfg, std::uint64_t t) {
  ModelVector g = p.stochastic_gradient(w.worker_id, w.x, w.rng.at(t), cfg.batch_size);
  if (!g.all_finite()) {
    throw NumericalError("worker " + std::to_string(w.worker_id) + ": non-finite gradient at iteration " +
                         std::to_string(t));
  }
  return g;
}

void require_sync_point(const GlobalState& state, const SyncSchedule& schedule, const char* who) {
  if (state.t != 0 && !schedule.is_sync_point(state.t)) {
    throw std::logic_error(std::string(who) + " called off-schedule at t = " + std::to_string(state.t));
  }
}

std::uint64_t completed_period(const GlobalState& state, const SyncSchedule& schedule) {
  return state.t == 0 ? schedule.k() : schedule.period_length_ending_at(state.t);
}

}  // namespace

ModelVector vrl_local_step(WorkerState& w, const Problem& p, const RunConfig& cfg, std::uint64_t t) {
  ModelVector g = draw_gradient(w, p, cfg, t);
  w.last_v = vec_sub(g, w.delta);
  for (std::size_t c = 0; c < w.x.size(); ++c) w.x[c] -= cfg.gamma * w.last_v[c];
  return g;
}

ModelVector local_sgd_step(WorkerState& w, const Problem& p, const RunConfig& cfg, std::uint64_t t) {
  ModelVector g = draw_gradient(w, p, cfg, t);
  w.last_v = g;
  for (std::size_t c = 0; c < w.x.size(); ++c) w.x[c] -= cfg.gamma * w.last_v[c];
  return g;
}

void vrl_sync(GlobalState& state, const RunConfig& cfg, const SyncSchedule& schedule, bool force_zero_delta) {
  require_sync_point(state, schedule, "vrl_sync");
  state.x_hat = state.average_model();
  const double scale = static_cast<double>(completed_period(state, schedule)) * cfg.gamma;
  for (auto& w : state.workers) {
    if (!force_zero_delta) {
      for (std::size_t c = 0; c < w.x.size(); ++c) w.delta[c] += (state.x_hat[c] - w.x[c]) / scale;
    }
    w.x = state.x_hat;
  }
  if (state.t != 0) ++state.syncs;
}

void local_sgd_sync(GlobalState& state, const SyncSchedule& schedule) {
  require_sync_point(state, schedule, "local_sgd_sync");
  state.x_hat = state.average_model();
  for (auto& w : state.workers) w.x = state.x_hat;
  if (state.t != 0) ++state.syncs;
}

void easgd_sync(GlobalState& state, const RunConfig& cfg, const SyncSchedule& schedule) {
  require_sync_point(state, schedule, "easgd_sync");
  const double alpha = cfg.effective_easgd_alpha();
  ModelVector pull(state.center.size());
  for (auto& w : state.workers) {
    const ModelVector diff = vec_sub(w.x, state.center);
    axpy_inplace(1.0, diff, pull);
    axpy_inplace(-alpha, diff, w.x);
  }
  axpy_inplace(alpha, pull, state.center);
  state.x_hat = state.average_model();
  if (state.t != 0) ++state.syncs;
}

void ssgd_step(GlobalState& state, const Problem& p, const RunConfig& cfg) {
  if (cfg.k != 1) throw ConfigError("ssgd requires k = 1");
  std::vector<ModelVector> grads;
  grads.reserve(state.workers.size());
  for (auto& w : state.workers) {
    w.x = state.x_hat;
    grads.push_back(draw_gradient(w, p, cfg, state.t));
    w.last_v = grads.back();
  }
  const ModelVector mean = vec_mean(grads);
  for (std::size_t c = 0; c < state.x_hat.size(); ++c) state.x_hat[c] -= cfg.gamma * mean[c];
  for (auto& w : state.workers) w.x = state.x_hat;
  ++state.t;
  ++state.syncs;
  state.grad_evals += state.workers.size() * cfg.batch_size;
}

void warm_up_init(GlobalState& state, const Problem& p, const RunConfig& cfg, WarmUpPath path) {
  if (state.t != 0) throw std::logic_error("warm_up_init requires t = 0");
  if (cfg.iterations == 0) return;
  if (path == WarmUpPath::ShortFirstPeriod) {
    for (auto& w : state.workers) vrl_local_step(w, p, cfg, 0);
    state.t = 1;
    state.grad_evals += state.workers.size() * cfg.batch_size;
    vrl_sync(state, cfg, SyncSchedule(cfg.k, cfg.iterations, true));
    return;
  }
  std::vector<ModelVector> grads;
  grads.reserve(state.workers.size());
  for (auto& w : state.workers) grads.push_back(draw_gradient(w, p, cfg, 0));
  const ModelVector mean = vec_mean(grads);
  for (std::size_t c = 0; c < state.x_hat.size(); ++c) state.x_hat[c] -= cfg.gamma * mean[c];
  for (std::size_t i = 0; i < state.workers.size(); ++i) {
    auto& w = state.workers[i];
    w.delta = vec_sub(grads[i], mean);
    w.last_v = grads[i];
    w.x = state.x_hat;
  }
  state.t = 1;
  ++state.syncs;
  state.grad_evals += state.workers.size() * cfg.batch_size;
}

ModelVector delta_direct(const PeriodGradients& period, std::size_t worker, std::size_t expected_length) {
  if (period.size() != expected_length || period.empty()) {
    throw std::invalid_argument("delta_direct: history holds " + std::to_string(period.size()) +
                                " steps, expected " + std::to_string(expected_length));
  }
  ModelVector sum(period.front().at(worker).size());
  for (const auto& step : period) {
    const ModelVector mean = vec_mean(step);
    for (std::size_t c = 0; c < sum.size(); ++c) sum[c] += step[worker][c] - mean[c];
  }
  return vec_scale(1.0 / static_cast<double>(period.size()), sum);
}

ModelVector v_direct(const ModelVector& current, const PeriodGradients& previous, std::size_t worker) {
  if (previous.empty()) return current;
  const double len = static_cast<double>(previous.size());
  const double n = static_cast<double>(previous.front().size());
  ModelVector own(current.size());
  ModelVector all(current.size());
  for (const auto& step : previous) {
    axpy_inplace(1.0, step.at(worker), own);
    for (const auto& g : step) axpy_inplace(1.0, g, all);
  }
  ModelVector v = current;
  for (std::size_t c = 0; c < v.size(); ++c) v[c] += -own[c] / len + all[c] / (n * len);
  return v;
}

}  // namespace localsgd_lab
