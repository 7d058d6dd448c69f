#pragma once

#include <cstddef>

namespace depthhead {

// Small row-major matrix kernels. Loop orders are chosen so the innermost
// loop runs over contiguous memory and auto-vectorizes; every output element
// is accumulated by a single sequential reduction, which keeps results
// independent of the worker count used by callers that split over rows.

// C[m x n] += A[m x k] * B[k x n]
template <typename T>
void gemm_nn(const T* a, const T* b, T* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const T* arow = a + static_cast<std::size_t>(i) * k;
        T* crow = c + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const T s = arow[p];
            if (s == T{0}) continue;
            const T* brow = b + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += s * brow[j];
        }
    }
}

// C[m x n] += A[k x m]^T * B[k x n]
template <typename T>
void gemm_tn(const T* a, const T* b, T* c, int m, int k, int n) {
    for (int p = 0; p < k; ++p) {
        const T* arow = a + static_cast<std::size_t>(p) * m;
        const T* brow = b + static_cast<std::size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            const T s = arow[i];
            if (s == T{0}) continue;
            T* crow = c + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) crow[j] += s * brow[j];
        }
    }
}

}  // namespace depthhead
