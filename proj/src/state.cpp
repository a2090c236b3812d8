#include "localsgd_lab/state.hpp"

namespace localsgd_lab {

GlobalState GlobalState::initial(const ModelVector& x0, std::size_t workers, std::uint64_t seed) {
  if (workers == 0) throw ConfigError("worker count must be at least 1");
  GlobalState s;
  s.x_hat = x0;
  s.center = x0;
  s.workers.reserve(workers);
  for (std::size_t i = 0; i < workers; ++i) {
    s.workers.push_back(WorkerState{i, x0, ModelVector(x0.size()), RngStream(seed, static_cast<std::uint32_t>(i)),
                                    ModelVector(x0.size())});
  }
  return s;
}

std::vector<ModelVector> GlobalState::local_models() const {
  std::vector<ModelVector> xs;
  xs.reserve(workers.size());
  for (const auto& w : workers) xs.push_back(w.x);
  return xs;
}

ModelVector GlobalState::average_model() const {
  const auto xs = local_models();
  return vec_mean(xs);
}

}  // namespace localsgd_lab
