#pragma once

// Persistent worker pool. Work is split into fixed chunks and reductions
// combine fixed-size blocks in index order, so the worker count never
// changes a result.

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <cstddef>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace stickymv {

inline constexpr std::size_t kReduceBlock = 1024;

class Executor {
 public:
  explicit Executor(unsigned threads = 1) : threads_(std::max(1u, threads)) {
    for (unsigned t = 1; t < threads_; ++t) workers_.emplace_back([this] { worker_loop(); });
  }

  ~Executor() {
    {
      std::lock_guard lk(mu_);
      stop_ = true;
      ++generation_;
    }
    cv_.notify_all();
    for (auto& w : workers_) w.join();
  }

  Executor(const Executor&) = delete;
  Executor& operator=(const Executor&) = delete;

  unsigned threads() const { return threads_; }

  // f(begin, end) over [0, n) in chunks of `grain`.
  template <class F>
  void parallel_for(std::size_t n, std::size_t grain, F&& f) {
    if (n == 0) return;
    grain = std::max<std::size_t>(grain, 1);
    const std::size_t chunks = (n + grain - 1) / grain;
    if (threads_ == 1 || chunks == 1) {
      for (std::size_t c = 0; c < chunks; ++c) f(c * grain, std::min(n, (c + 1) * grain));
      return;
    }
    std::function<void(std::size_t)> job = [&](std::size_t c) { f(c * grain, std::min(n, (c + 1) * grain)); };
    {
      std::lock_guard lk(mu_);
      job_ = &job;
      chunks_ = chunks;
      next_.store(0);
      pending_ = threads_ - 1;
      ++generation_;
    }
    cv_.notify_all();
    drain();
    std::unique_lock lk(mu_);
    done_cv_.wait(lk, [&] { return pending_ == 0; });
    job_ = nullptr;
  }

  // Sum of f(i) for i in [0, n); fixed blocks, then pairwise over blocks.
  template <class F>
  double sum(std::size_t n, F&& f) {
    const std::size_t blocks = (n + kReduceBlock - 1) / kReduceBlock;
    std::vector<double> partial(blocks, 0.0);
    parallel_for(blocks, 1, [&](std::size_t b0, std::size_t b1) {
      for (std::size_t b = b0; b < b1; ++b) {
        double s = 0.0;
        const std::size_t hi = std::min(n, (b + 1) * kReduceBlock);
        for (std::size_t i = b * kReduceBlock; i < hi; ++i) s += f(i);
        partial[b] = s;
      }
    });
    return pairwise_sum(partial.data(), partial.size());
  }

  static double pairwise_sum(const double* x, std::size_t n) {
    if (n == 0) return 0.0;
    if (n <= 8) {
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += x[i];
      return s;
    }
    const std::size_t h = n / 2;
    return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
  }

 private:
  void drain() {
    for (;;) {
      const std::size_t c = next_.fetch_add(1);
      if (c >= chunks_) break;
      (*job_)(c);
    }
  }

  void worker_loop() {
    std::size_t seen = 0;
    for (;;) {
      {
        std::unique_lock lk(mu_);
        cv_.wait(lk, [&] { return generation_ != seen; });
        seen = generation_;
        if (stop_) return;
      }
      drain();
      {
        std::lock_guard lk(mu_);
        --pending_;
      }
      done_cv_.notify_one();
    }
  }

  unsigned threads_;
  std::vector<std::thread> workers_;
  std::mutex mu_;
  std::condition_variable cv_, done_cv_;
  std::function<void(std::size_t)>* job_ = nullptr;
  std::size_t chunks_ = 0;
  std::atomic<std::size_t> next_{0};
  unsigned pending_ = 0;
  std::size_t generation_ = 0;
  bool stop_ = false;
};

}  // namespace stickymv
