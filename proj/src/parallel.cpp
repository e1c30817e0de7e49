#include "levydyn/parallel.hpp"

#include <cmath>

#include "levydyn/errors.hpp"

namespace levydyn {

std::vector<std::size_t> WorkPlan::indices() const {
  std::vector<std::size_t> out;
  for (const auto& a : assignment) out.insert(out.end(), a.begin(), a.end());
  return out;
}

namespace {

WorkPlan chunk(std::vector<std::size_t> idx, std::size_t workers, Parity parity) {
  if (workers < 1) throw InvalidArgument("schedule: workers must be >= 1");
  WorkPlan plan;
  plan.parity = parity;
  plan.workers = workers;
  plan.assignment.resize(workers);
  const std::size_t total = idx.size();
  std::size_t pos = 0;
  for (std::size_t w = 0; w < workers; ++w) {
    std::size_t take = total / workers + (w < total % workers ? 1 : 0);
    plan.assignment[w].assign(idx.begin() + static_cast<std::ptrdiff_t>(pos),
                              idx.begin() + static_cast<std::ptrdiff_t>(pos + take));
    pos += take;
  }
  return plan;
}

}  // namespace

WorkPlan schedule_parity(std::size_t m, Parity parity, std::size_t workers) {
  std::vector<std::size_t> idx;
  for (std::size_t k = parity == Parity::odd ? 0 : 1; k < m; k += 2) idx.push_back(k);
  return chunk(std::move(idx), workers, parity);
}

WorkPlan schedule_range(std::size_t count, std::size_t workers) {
  std::vector<std::size_t> idx(count);
  for (std::size_t i = 0; i < count; ++i) idx[i] = i;
  return chunk(std::move(idx), workers, Parity::odd);
}

double reduce_sum(std::span<const double> partials) {
  double s = 0.0;
  for (double v : partials) {
    if (std::isnan(v)) throw NumericError("reduce_sum: NaN partial");
    s += v;
  }
  return s;
}

WorkerPool::WorkerPool(std::size_t workers) : workers_(workers < 1 ? 1 : workers) {
  errors_.resize(workers_);
  for (std::size_t w = 1; w < workers_; ++w) threads_.emplace_back([this, w] { worker_loop(w); });
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  start_cv_.notify_all();
  for (auto& t : threads_) t.join();
}

void WorkerPool::run_assignment(std::size_t w) {
  try {
    if (w < plan_->assignment.size())
      for (std::size_t idx : plan_->assignment[w]) (*fn_)(idx);
  } catch (...) {
    errors_[w] = std::current_exception();
  }
}

void WorkerPool::worker_loop(std::size_t w) {
  std::size_t seen = 0;
  for (;;) {
    {
      std::unique_lock lock(mutex_);
      start_cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
    }
    run_assignment(w);
    {
      std::lock_guard lock(mutex_);
      if (--pending_ == 0) done_cv_.notify_one();
    }
  }
}

void WorkerPool::run(const WorkPlan& plan, const std::function<void(std::size_t)>& fn) {
  if (plan.assignment.size() > workers_) throw InvalidArgument("pool: plan needs more workers");
  plan_ = &plan;
  fn_ = &fn;
  for (auto& e : errors_) e = nullptr;
  if (workers_ > 1) {
    {
      std::lock_guard lock(mutex_);
      pending_ = workers_ - 1;
      ++generation_;
    }
    start_cv_.notify_all();
  }
  run_assignment(0);
  if (workers_ > 1) {
    std::unique_lock lock(mutex_);
    done_cv_.wait(lock, [&] { return pending_ == 0; });
  }
  plan_ = nullptr;
  fn_ = nullptr;
  for (auto& e : errors_)
    if (e) std::rethrow_exception(e);
}

void WorkerPool::parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  WorkPlan plan = schedule_range(count, workers_);
  run(plan, fn);
}

std::size_t default_workers() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

}  // namespace levydyn
