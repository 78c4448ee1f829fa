#include "degrade/parallel.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace degrade {

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("DEGRADE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

void parallel_chunks(int nchunks, int nthreads,
                     const std::function<void(int)>& work) {
  if (nchunks <= 0) return;
  nthreads = std::min(resolve_threads(nthreads), nchunks);
  if (nthreads <= 1) {
    for (int c = 0; c < nchunks; ++c) work(c);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto runner = [&] {
    for (;;) {
      const int c = next.fetch_add(1);
      if (c >= nchunks) return;
      try {
        work(c);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (int t = 0; t < nthreads; ++t) pool.emplace_back(runner);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace degrade
