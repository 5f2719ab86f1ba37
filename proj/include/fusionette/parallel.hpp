#pragma once

#include <cstddef>
#include <exception>
#include <functional>
#include <vector>

namespace fusionette {

/// Hardware threads available to this process (at least 1).
std::size_t hardware_threads();

/// Reads FUSIONETTE_THREADS; returns `fallback` when unset or invalid.
std::size_t thread_cap_from_env(std::size_t fallback);

/// Runs fn(0) .. fn(jobs - 1) on up to `workers` std::threads. Each worker
/// limits the GEMM kernels to its share of the hardware threads. Exceptions
/// are captured per job; the returned vector holds nullptr for jobs that
/// succeeded.
std::vector<std::exception_ptr> run_jobs(std::size_t jobs, std::size_t workers,
                                         const std::function<void(std::size_t)>& fn);

}  // namespace fusionette
