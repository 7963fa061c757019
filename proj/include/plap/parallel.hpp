#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace plap {

/// Run body(i) for i in [0, n) on up to `jobs` threads (0: hardware count).
/// The first exception thrown by any body is rethrown after all workers join.
template <class Body>
void parallel_for(long n, Body&& body, unsigned jobs = 0) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<long>(jobs, std::max(1L, n)));
  if (jobs <= 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr err;
  std::mutex mu;
  auto worker = [&] {
    for (long i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!err) err = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace plap
