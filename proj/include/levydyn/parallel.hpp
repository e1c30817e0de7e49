#pragma once

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

namespace levydyn {

// Parity refers to the 1-based time label k = index + 1.
enum class Parity { odd, even };

struct WorkPlan {
  Parity parity = Parity::odd;
  std::size_t workers = 1;
  std::vector<std::vector<std::size_t>> assignment;  // 0-based time indices per worker

  std::vector<std::size_t> indices() const;
};

WorkPlan schedule_parity(std::size_t m, Parity parity, std::size_t workers);

// Contiguous chunks of [0, count).
WorkPlan schedule_range(std::size_t count, std::size_t workers);

// Left-to-right summation in index order.
double reduce_sum(std::span<const double> partials);

template <class T>
using Snapshot = std::shared_ptr<const T>;

template <class T>
Snapshot<T> snapshot_broadcast(T value) {
  return std::make_shared<const T>(std::move(value));
}

class WorkerPool {
 public:
  explicit WorkerPool(std::size_t workers);
  ~WorkerPool();
  WorkerPool(const WorkerPool&) = delete;
  WorkerPool& operator=(const WorkerPool&) = delete;

  std::size_t size() const { return workers_; }

  // Worker w runs fn over plan.assignment[w]; returns after every worker is done.
  void run(const WorkPlan& plan, const std::function<void(std::size_t)>& fn);
  void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn);

 private:
  void worker_loop(std::size_t w);
  void run_assignment(std::size_t w);

  std::size_t workers_;
  std::vector<std::thread> threads_;
  std::mutex mutex_;
  std::condition_variable start_cv_, done_cv_;
  std::size_t generation_ = 0;
  std::size_t pending_ = 0;
  bool stop_ = false;
  const WorkPlan* plan_ = nullptr;
  const std::function<void(std::size_t)>* fn_ = nullptr;
  std::vector<std::exception_ptr> errors_;
};

std::size_t default_workers();

}  // namespace levydyn
