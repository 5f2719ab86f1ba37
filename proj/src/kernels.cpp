#include "fusionette/kernels.hpp"

#include <algorithm>
#include <cassert>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fusionette::kernels {

namespace {

#ifdef _OPENMP
thread_local int t_threads = omp_get_max_threads();
#else
thread_local int t_threads = 1;
#endif

// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::size_t kParallelWork = 1u << 15;

int threads_for(std::size_t work) {
  return work >= kParallelWork ? std::max(1, t_threads) : 1;
}

// c_row[0..n) = sum_k a_row[k] * b[k, 0..n), accumulated in increasing k.
inline void row_times_matrix(const double* a_row, std::size_t a_stride,
                             const double* b, std::size_t k, std::size_t n,
                             double* c_row) {
  std::fill(c_row, c_row + n, 0.0);
  for (std::size_t p = 0; p < k; ++p) {
    const double av = a_row[p * a_stride];
    const double* b_row = b + p * n;
    for (std::size_t j = 0; j < n; ++j) {
      c_row[j] += av * b_row[j];
    }
  }
}

}  // namespace

int kernel_threads() { return t_threads; }

void set_kernel_threads(int threads) { t_threads = std::max(1, threads); }

KernelThreadScope::KernelThreadScope(int threads) : previous_(t_threads) {
  set_kernel_threads(threads);
}

KernelThreadScope::~KernelThreadScope() { t_threads = previous_; }

void gemm_nn(std::size_t batch, std::size_t m, std::size_t k, std::size_t n,
             std::span<const double> a, std::span<const double> b,
             std::span<double> c) {
  assert(a.size() >= batch * m * k && b.size() >= batch * k * n &&
         c.size() >= batch * m * n);
  const auto rows = static_cast<std::ptrdiff_t>(batch * m);
  const int nt = threads_for(batch * m * k * n);
#pragma omp parallel for num_threads(nt) schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const std::size_t bi = static_cast<std::size_t>(r) / m;
    row_times_matrix(a.data() + static_cast<std::size_t>(r) * k, 1,
                     b.data() + bi * k * n, k, n,
                     c.data() + static_cast<std::size_t>(r) * n);
  }
}

void gemm_nt(std::size_t batch, std::size_t m, std::size_t k, std::size_t n,
             std::span<const double> a, std::span<const double> b,
             std::span<double> c) {
  assert(a.size() >= batch * m * k && b.size() >= batch * n * k &&
         c.size() >= batch * m * n);
  // Transpose B once so the inner loop streams contiguous memory; the
  // per-element summation order is unchanged.
  std::vector<double> bt(batch * k * n);
  for (std::size_t bi = 0; bi < batch; ++bi) {
    const double* src = b.data() + bi * n * k;
    double* dst = bt.data() + bi * k * n;
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t p = 0; p < k; ++p) {
        dst[p * n + j] = src[j * k + p];
      }
    }
  }
  gemm_nn(batch, m, k, n, a, bt, c);
}

void gemm_tn(std::size_t batch, std::size_t m, std::size_t k, std::size_t n,
             std::span<const double> a, std::span<const double> b,
             std::span<double> c) {
  assert(a.size() >= batch * k * m && b.size() >= batch * k * n &&
         c.size() >= batch * m * n);
  const auto rows = static_cast<std::ptrdiff_t>(batch * m);
  const int nt = threads_for(batch * m * k * n);
#pragma omp parallel for num_threads(nt) schedule(static)
  for (std::ptrdiff_t r = 0; r < rows; ++r) {
    const std::size_t bi = static_cast<std::size_t>(r) / m;
    const std::size_t i = static_cast<std::size_t>(r) % m;
    row_times_matrix(a.data() + bi * k * m + i, m, b.data() + bi * k * n, k, n,
                     c.data() + static_cast<std::size_t>(r) * n);
  }
}

namespace reference {

void gemm_nn(std::size_t batch, std::size_t m, std::size_t k, std::size_t n,
             std::span<const double> a, std::span<const double> b,
             std::span<double> c) {
  for (std::size_t bi = 0; bi < batch; ++bi) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
          s += a[bi * m * k + i * k + p] * b[bi * k * n + p * n + j];
        }
        c[bi * m * n + i * n + j] = s;
      }
    }
  }
}

void gemm_nt(std::size_t batch, std::size_t m, std::size_t k, std::size_t n,
             std::span<const double> a, std::span<const double> b,
             std::span<double> c) {
  for (std::size_t bi = 0; bi < batch; ++bi) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
          s += a[bi * m * k + i * k + p] * b[bi * n * k + j * k + p];
        }
        c[bi * m * n + i * n + j] = s;
      }
    }
  }
}

void gemm_tn(std::size_t batch, std::size_t m, std::size_t k, std::size_t n,
             std::span<const double> a, std::span<const double> b,
             std::span<double> c) {
  for (std::size_t bi = 0; bi < batch; ++bi) {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t p = 0; p < k; ++p) {
          s += a[bi * k * m + p * m + i] * b[bi * k * n + p * n + j];
        }
        c[bi * m * n + i * n + j] = s;
      }
    }
  }
}

}  // namespace reference

}  // namespace fusionette::kernels
