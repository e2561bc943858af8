#pragma once

//
// Randomized truncated SVD built from the batched primitives:
//
//   Y = A Omega          (Omega: n x (k+p) Gaussian)
//   Y = Q R_y            range basis
//   B = Q^T A
//   B^T = Q_B R_B
//   R_B^T = U_R S V_R^T  (one-sided Jacobi, V accumulated)
//   U = Q U_R,  V = Q_B V_R
//
// The result has k+p columns; callers truncate further if they need to.
//

#include <cstdint>
#include <vector>

#include <batchfact/jacobi.hpp>
#include <batchfact/matrix.hpp>

namespace batchfact {

template <typename T>
struct RsvdOptions {
    index_t k = 1;
    index_t p = 8;
    std::uint64_t seed = 0;
    // reserved for subspace iteration; only 0 is supported
    int q_iterations = 0;
    JacobiOptions<T> inner = {};

    index_t samples() const noexcept { return k + p; }
};

template <typename T>
struct TruncatedSvd {
    Matrix<T> U;          // m x (k+p)
    std::vector<T> S;     // descending
    Matrix<T> V;          // n x (k+p)
    bool converged = false;

    Matrix<T> reconstruct() const;
};

// orthonormal basis Q (m x samples) of the sampled range of A
template <typename T>
Matrix<T> range_finder(const Matrix<T>& A, index_t samples, std::uint64_t seed);

template <typename T>
TruncatedSvd<T> rsvd(const Matrix<T>& A, const RsvdOptions<T>& opts);

// entry i uses the seed opts.seed ^ i
template <typename T>
std::vector<TruncatedSvd<T>> batch_rsvd(const MatrixBatch<T>& batch, const RsvdOptions<T>& opts,
                                        std::size_t threads = 0);

} // namespace batchfact
