#include "fusionette/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>

#include "fusionette/kernels.hpp"

namespace fusionette {

std::size_t hardware_threads() {
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

std::size_t thread_cap_from_env(std::size_t fallback) {
  const char* raw = std::getenv("FUSIONETTE_THREADS");
  if (!raw || !*raw) return fallback;
  try {
    const long v = std::stol(raw);
    return v >= 1 ? static_cast<std::size_t>(v) : fallback;
  } catch (const std::exception&) {
    return fallback;
  }
}

std::vector<std::exception_ptr> run_jobs(std::size_t jobs, std::size_t workers,
                                         const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(jobs);
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(jobs, 1));
  if (workers == 1) {
    for (std::size_t j = 0; j < jobs; ++j) {
      try {
        fn(j);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
    return errors;
  }
  const int per_worker = static_cast<int>(std::max<std::size_t>(1, hardware_threads() / workers));
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      kernels::KernelThreadScope scope(per_worker);
      for (std::size_t j = next++; j < jobs; j = next++) {
        try {
          fn(j);
        } catch (...) {
          errors[j] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  return errors;
}

}  // namespace fusionette
