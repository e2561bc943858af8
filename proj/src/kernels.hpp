#pragma once

// Reductions with a fixed number of partial sums. The summation order depends
// only on the length, so results are reproducible while still vectorizing.

#include <cstddef>

namespace batchfact::kernels {

inline constexpr std::ptrdiff_t lanes = 8;

template <typename T>
inline T dot(const T* x, const T* y, std::ptrdiff_t n) {
    T acc[lanes] = {};
    std::ptrdiff_t i = 0;
    for (; i + lanes <= n; i += lanes)
        for (std::ptrdiff_t l = 0; l < lanes; ++l)
            acc[l] += x[i + l] * y[i + l];
    T s(0);
    for (; i < n; ++i)
        s += x[i] * y[i];
    for (std::ptrdiff_t l = 0; l < lanes; ++l)
        s += acc[l];
    return s;
}

// the three entries of the 2x2 Gram block of columns x and y in one pass
template <typename T>
inline void gram2(const T* x, const T* y, std::ptrdiff_t n, T& xx, T& xy, T& yy) {
    T axx[lanes] = {}, axy[lanes] = {}, ayy[lanes] = {};
    std::ptrdiff_t i = 0;
    for (; i + lanes <= n; i += lanes)
        for (std::ptrdiff_t l = 0; l < lanes; ++l) {
            const T a = x[i + l];
            const T b = y[i + l];
            axx[l] += a * a;
            axy[l] += a * b;
            ayy[l] += b * b;
        }
    T sxx(0), sxy(0), syy(0);
    for (; i < n; ++i) {
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
        syy += y[i] * y[i];
    }
    for (std::ptrdiff_t l = 0; l < lanes; ++l) {
        sxx += axx[l];
        sxy += axy[l];
        syy += ayy[l];
    }
    xx = sxx;
    xy = sxy;
    yy = syy;
}

// [x, y] <- [x, y] * [[c, s], [-s, c]]
template <typename T>
inline void rotate(T* x, T* y, std::ptrdiff_t n, T c, T s) {
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const T a = x[i];
        const T b = y[i];
        x[i] = c * a - s * b;
        y[i] = s * a + c * b;
    }
}

} // namespace batchfact::kernels
