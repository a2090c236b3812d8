#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "localsgd_lab/core.hpp"
#include "localsgd_lab/rng.hpp"

namespace localsgd_lab {

/// One worker's private state. Owned by exactly one thread between barriers.
struct WorkerState {
  std::size_t worker_id = 0;
  ModelVector x;      // local model x_i
  ModelVector delta;  // correction term, zero until the first synchronization
  RngStream rng;
  ModelVector last_v;  // gradient approximation used by the most recent local step
};

struct GlobalState {
  std::uint64_t t = 0;
  ModelVector x_hat;
  std::vector<WorkerState> workers;
  /// EASGD center variable; unused by the other algorithms.
  ModelVector center;
  std::uint64_t syncs = 0;
  std::uint64_t grad_evals = 0;

  /// All workers at x0 with zero corrections and the center at x0.
  static GlobalState initial(const ModelVector& x0, std::size_t workers, std::uint64_t seed);

  std::vector<ModelVector> local_models() const;
  /// Element-wise mean of the local models, ascending worker order.
  ModelVector average_model() const;
};

}  // namespace localsgd_lab
