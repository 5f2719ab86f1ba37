#pragma once

// Dense row-major GEMM kernels.
//
// Every kernel comes in a batched form: `batch` independent products laid out
// back to back in memory. The OpenMP kernels split work by output row only, so
// each output element is accumulated by a single thread in increasing k order.
// That makes the result bitwise identical to the serial reference regardless of
// the thread count.

#include <cstddef>
#include <span>

namespace fusionette::kernels {

/// C[b] = A[b] * B[b];  A: m x k, B: k x n, C: m x n.
void gemm_nn(std::size_t batch, std::size_t m, std::size_t k, std::size_t n,
             std::span<const double> a, std::span<const double> b,
             std::span<double> c);

/// C[b] = A[b] * B[b]^T;  A: m x k, B: n x k, C: m x n.
void gemm_nt(std::size_t batch, std::size_t m, std::size_t k, std::size_t n,
             std::span<const double> a, std::span<const double> b,
             std::span<double> c);

/// C[b] = A[b]^T * B[b];  A: k x m, B: k x n, C: m x n.
void gemm_tn(std::size_t batch, std::size_t m, std::size_t k, std::size_t n,
             std::span<const double> a, std::span<const double> b,
             std::span<double> c);

/// Serial triple-loop implementations kept as the reference for the kernels
/// above. Not used on any production path.
namespace reference {

void gemm_nn(std::size_t batch, std::size_t m, std::size_t k, std::size_t n,
             std::span<const double> a, std::span<const double> b,
             std::span<double> c);
void gemm_nt(std::size_t batch, std::size_t m, std::size_t k, std::size_t n,
             std::span<const double> a, std::span<const double> b,
             std::span<double> c);
void gemm_tn(std::size_t batch, std::size_t m, std::size_t k, std::size_t n,
             std::span<const double> a, std::span<const double> b,
             std::span<double> c);

}  // namespace reference

/// Number of OpenMP threads the kernels may use on the calling thread.
/// Thread-local, so concurrent training runs can each be limited to one.
int kernel_threads();
void set_kernel_threads(int threads);

/// Restores the previous kernel thread count on scope exit.
class KernelThreadScope {
 public:
  explicit KernelThreadScope(int threads);
  ~KernelThreadScope();
  KernelThreadScope(const KernelThreadScope&) = delete;
  KernelThreadScope& operator=(const KernelThreadScope&) = delete;

 private:
  int previous_;
};

}  // namespace fusionette::kernels
