#include "tactsim/gemm.hpp"

#include <algorithm>

#if defined(__AVX512F__) || defined(__AVX2__)
#include <immintrin.h>
#endif

namespace tactsim {

namespace {

// Reference path, also used for edge tiles. Each C element accumulates over k
// in order, matching the lane-wise order of the vector kernels.
void tile_scalar(int mr, int nr, int k, const float* a, int lda, const float* b, int ldb, float* c,
                 int ldc, bool accumulate) {
    for (int i = 0; i < mr; ++i) {
        for (int j = 0; j < nr; ++j) {
            float s = accumulate ? c[i * ldc + j] : 0.0f;
            for (int p = 0; p < k; ++p) s += a[i * lda + p] * b[p * ldb + j];
            c[i * ldc + j] = s;
        }
    }
}

#if defined(__AVX512F__)

constexpr int kTileN = 32;

void tile_8xN(int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc,
              bool accumulate) {
    __m512 r[8][2];
    for (int i = 0; i < 8; ++i) {
        if (accumulate) {
            r[i][0] = _mm512_loadu_ps(c + i * ldc);
            r[i][1] = _mm512_loadu_ps(c + i * ldc + 16);
        } else {
            r[i][0] = _mm512_setzero_ps();
            r[i][1] = _mm512_setzero_ps();
        }
    }
    for (int p = 0; p < k; ++p) {
        const __m512 b0 = _mm512_loadu_ps(b + static_cast<std::size_t>(p) * ldb);
        const __m512 b1 = _mm512_loadu_ps(b + static_cast<std::size_t>(p) * ldb + 16);
        for (int i = 0; i < 8; ++i) {
            const __m512 ai = _mm512_set1_ps(a[i * static_cast<std::size_t>(lda) + p]);
            r[i][0] = _mm512_fmadd_ps(ai, b0, r[i][0]);
            r[i][1] = _mm512_fmadd_ps(ai, b1, r[i][1]);
        }
    }
    for (int i = 0; i < 8; ++i) {
        _mm512_storeu_ps(c + i * ldc, r[i][0]);
        _mm512_storeu_ps(c + i * ldc + 16, r[i][1]);
    }
}

#elif defined(__AVX2__)

constexpr int kTileN = 16;

void tile_8xN(int k, const float* a, int lda, const float* b, int ldb, float* c, int ldc,
              bool accumulate) {
    __m256 r[8][2];
    for (int i = 0; i < 8; ++i) {
        if (accumulate) {
            r[i][0] = _mm256_loadu_ps(c + i * ldc);
            r[i][1] = _mm256_loadu_ps(c + i * ldc + 8);
        } else {
            r[i][0] = _mm256_setzero_ps();
            r[i][1] = _mm256_setzero_ps();
        }
    }
    for (int p = 0; p < k; ++p) {
        const __m256 b0 = _mm256_loadu_ps(b + static_cast<std::size_t>(p) * ldb);
        const __m256 b1 = _mm256_loadu_ps(b + static_cast<std::size_t>(p) * ldb + 8);
        for (int i = 0; i < 8; ++i) {
            const __m256 ai = _mm256_set1_ps(a[i * static_cast<std::size_t>(lda) + p]);
            r[i][0] = _mm256_fmadd_ps(ai, b0, r[i][0]);
            r[i][1] = _mm256_fmadd_ps(ai, b1, r[i][1]);
        }
    }
    for (int i = 0; i < 8; ++i) {
        _mm256_storeu_ps(c + i * ldc, r[i][0]);
        _mm256_storeu_ps(c + i * ldc + 8, r[i][1]);
    }
}

#else
constexpr int kTileN = 0;
#endif

}  // namespace

void sgemm(int m, int n, int k, const float* a, int lda, const float* b, int ldb, float* c,
           int ldc, bool accumulate) {
    const int row_blocks = (m + 7) / 8;
#pragma omp parallel for schedule(static)
    for (int blk = 0; blk < row_blocks; ++blk) {
        const int i0 = blk * 8;
        const int mr = std::min(8, m - i0);
        const float* arow = a + static_cast<std::size_t>(i0) * lda;
        float* crow = c + static_cast<std::size_t>(i0) * ldc;
        int j0 = 0;
#if defined(__AVX512F__) || defined(__AVX2__)
        if (mr == 8) {
            for (; j0 + kTileN <= n; j0 += kTileN)
                tile_8xN(k, arow, lda, b + j0, ldb, crow + j0, ldc, accumulate);
        }
#endif
        if (j0 < n) tile_scalar(mr, n - j0, k, arow, lda, b + j0, ldb, crow + j0, ldc, accumulate);
    }
}

void transpose(const float* src, int rows, int cols, float* dst) {
    constexpr int kBlock = 32;
    for (int i0 = 0; i0 < rows; i0 += kBlock)
        for (int j0 = 0; j0 < cols; j0 += kBlock) {
            const int i1 = std::min(rows, i0 + kBlock);
            const int j1 = std::min(cols, j0 + kBlock);
            for (int i = i0; i < i1; ++i)
                for (int j = j0; j < j1; ++j)
                    dst[static_cast<std::size_t>(j) * rows + i] =
                        src[static_cast<std::size_t>(i) * cols + j];
        }
}

}  // namespace tactsim
