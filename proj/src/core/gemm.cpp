#include "core/gemm.hpp"

#include <cblas-openblas.h>
#include <cstdlib>
#include <malloc.h>
#include <mutex>

extern "C" void openblas_set_num_threads(int);

namespace nlr {

namespace {

// OpenBLAS does not recognize some virtualized CPU model strings and falls
// back to a generic kernel an order of magnitude slower. If the host
// supports AVX-512 (or AVX2), pick the matching kernel family explicitly
// unless the user already chose one. OpenBLAS reads OPENBLAS_CORETYPE in its
// own load-time constructor, so this must run even earlier; priority 101
// puts it ahead of default-priority constructors in this module's
// init_array, which runs before the statically linked BLAS initializer.
__attribute__((constructor(101))) void preinit_blas_env() {
#if defined(__x86_64__)
  if (std::getenv("OPENBLAS_CORETYPE") == nullptr) {
    __builtin_cpu_init();
    if (__builtin_cpu_supports("avx512f"))
      setenv("OPENBLAS_CORETYPE", "SKYLAKEX", 0);
    else if (__builtin_cpu_supports("avx2"))
      setenv("OPENBLAS_CORETYPE", "HASWELL", 0);
  }
#endif
  // Large tensors churn through mmap/munmap otherwise; keep them on the
  // regular heap and stop the allocator from returning it between
  // iterations so the pages get reused.
  mallopt(M_MMAP_THRESHOLD, 512 * 1024 * 1024);
  mallopt(M_TRIM_THRESHOLD, 512 * 1024 * 1024);
}

std::once_flag init_flag;

// Threads are pinned to 1: the engine's determinism contract requires a
// fixed summation order.
void init_blas() { openblas_set_num_threads(1); }

}  // namespace

void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          double alpha, const double* a, std::size_t lda, const double* b, std::size_t ldb,
          double beta, double* c, std::size_t ldc) {
  std::call_once(init_flag, init_blas);
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, static_cast<blasint>(m),
              static_cast<blasint>(n), static_cast<blasint>(k), alpha, a,
              static_cast<blasint>(lda), b, static_cast<blasint>(ldb), beta, c,
              static_cast<blasint>(ldc));
}

}  // namespace nlr
