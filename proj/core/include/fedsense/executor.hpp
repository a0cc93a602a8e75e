#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace fedsense {

/// Runs index-addressed task batches either serially or on a small thread
/// group. Tasks must write only to their own output slot; under that
/// contract results are identical for any thread count.
class Executor {
 public:
  explicit Executor(int threads = 1) : threads_(threads < 1 ? 1 : threads) {}

  int threads() const { return threads_; }

  void parallel_for(int n, const std::function<void(int)>& task) const {
    if (n <= 0) return;
    if (threads_ == 1 || n == 1) {
      for (int i = 0; i < n; ++i) task(i);
      return;
    }
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        if (failed.load(std::memory_order_relaxed)) return;
        try {
          task(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true, std::memory_order_relaxed);
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    int workers = std::min(threads_, n);
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

 private:
  int threads_;
};

}  // namespace fedsense
