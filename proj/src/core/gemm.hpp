#pragma once

#include <cstddef>

namespace nlr {

// Row-major double GEMM: C = alpha * op(A) * op(B) + beta * C.
// Thin wrapper over the BLAS backend; all heavy linear algebra in the engine
// funnels through here. Deterministic (single-threaded backend).
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k,
          double alpha, const double* a, std::size_t lda, const double* b, std::size_t ldb,
          double beta, double* c, std::size_t ldc);

}  // namespace nlr
