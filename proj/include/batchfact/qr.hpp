#pragma once

//
// Householder QR of single matrices and batches.
//
// The factorization is organized panel-wise: the reflectors of a panel of
// `panel_width` columns are computed and applied within the panel, then
// applied one at a time (vector form) to the trailing columns before moving
// on to the next panel. Q is accumulated explicitly in reduced (m x n) form.
//

#include <span>
#include <vector>

#include <batchfact/batch.hpp>
#include <batchfact/matrix.hpp>

namespace batchfact {

inline constexpr index_t default_panel_width = 16;

template <typename T>
struct Reflector {
    std::vector<T> v; // v[0] == 1
    T tau = T(0);
    T beta = T(0);    // (I - tau v v^T) x = beta e_1
};

template <typename T>
struct QrResult {
    Matrix<T> Q; // m x n, orthonormal columns
    Matrix<T> R; // n x n, upper triangular with explicit zeros below
};

// Reflector mapping x onto beta e_1 with beta = -sign(x_1) ||x||.
// If x(2:) is zero the identity reflector (tau = 0) is returned.
template <typename T>
Reflector<T> householder_vector(std::span<const T> x);

template <typename T>
QrResult<T> qr(const Matrix<T>& A, index_t panel_width = default_panel_width);

// only the triangular factor, without accumulating Q
template <typename T>
Matrix<T> qr_r(const Matrix<T>& A, index_t panel_width = default_panel_width);

template <typename T>
std::vector<QrResult<T>> batch_qr(const MatrixBatch<T>& batch, index_t panel_width = default_panel_width,
                                  std::size_t threads = 0);

} // namespace batchfact
