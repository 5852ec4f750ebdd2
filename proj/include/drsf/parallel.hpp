#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace drsf {

// Resolves a worker-count knob: 0 means "use the hardware", anything else is
// taken literally (clamped to at least 1).
inline int resolve_workers(int workers) {
  if (workers > 0) return workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(task, worker) for task in [0, n_tasks). Tasks are claimed from an
// atomic counter, so scheduling is dynamic; callers must only combine
// per-worker results in order-independent ways (disjoint writes or
// commutative integer merges) to keep outputs identical across worker counts.
// The first exception thrown by any task is rethrown on the calling thread.
inline void parallel_for(int n_tasks, int workers,
                         const std::function<void(int, int)>& fn) {
  if (n_tasks <= 0) return;
  const int n_workers = std::min(resolve_workers(workers), n_tasks);
  if (n_workers <= 1) {
    for (int task = 0; task < n_tasks; ++task) fn(task, 0);
    return;
  }

  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto body = [&](int worker) {
    for (;;) {
      const int task = next.fetch_add(1);
      if (task >= n_tasks) return;
      try {
        fn(task, worker);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_workers) - 1);
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(body, w);
  body(0);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

inline void parallel_for(int n_tasks, int workers,
                         const std::function<void(int)>& fn) {
  parallel_for(n_tasks, workers, [&](int task, int) { fn(task); });
}

}  // namespace drsf
