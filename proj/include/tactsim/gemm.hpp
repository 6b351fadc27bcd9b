#pragma once

namespace tactsim {

/// C[M x N] = A[M x K] * B[K x N] (+= when accumulate), all row-major with
/// the given leading strides. Parallel work splits over rows of C only, so
/// results are bitwise identical for any thread count.
void sgemm(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
           int ldc, bool accumulate);

/// dst[C x R] = transpose of src[R x C], contiguous rows.
void transpose(const float* src, int rows, int cols, float* dst);

}  // namespace tactsim
