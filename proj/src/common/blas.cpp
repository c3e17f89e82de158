#include "rba/common/blas.hpp"

#include <cblas.h>

#include <cstdlib>

namespace rba {

namespace {

// OpenBLAS picks its kernel from OPENBLAS_CORETYPE in a library constructor,
// and its DYNAMIC_ARCH detection does not recognize masked cloud CPUs (it
// falls back to the generic Prescott kernel). Run before that constructor and
// select the AVX-512 kernel when the hardware has it. Threading is pinned to
// one BLAS thread; batching across collocation chunks is handled above BLAS.
__attribute__((constructor(101))) void configure_blas_env() {
  if (__builtin_cpu_supports("avx512f")) setenv("OPENBLAS_CORETYPE", "SKYLAKEX", 0);
  setenv("OPENBLAS_NUM_THREADS", "1", 0);
}

}  // namespace

void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a,
          int lda, const double* b, int ldb, double beta, double* c, int ldc) {
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb, beta, c,
              ldc);
}

}  // namespace rba
