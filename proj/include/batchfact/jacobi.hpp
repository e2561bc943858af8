#pragma once

//
// One-sided Jacobi SVD of small matrices.
//
// Column pairs are orthogonalized by plane rotations until every pair is
// orthogonal to the requested tolerance. Two visiting orders are offered:
// the serial row-cyclic order (pairs i < j one at a time) and the round-robin
// order, in which each of the n-1 steps of a sweep is a perfect matching of
// the columns. The round-robin order only fixes the visit order; each matrix
// is still processed by a single thread.
//

#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include <batchfact/batch.hpp>
#include <batchfact/matrix.hpp>

namespace batchfact {

enum class ordering_t { serial, round_robin };

template <typename T>
constexpr T default_jacobi_tolerance() {
    return std::is_same_v<T, float> ? T(1e-6) : T(1e-14);
}

template <typename T>
struct JacobiOptions {
    T tolerance = default_jacobi_tolerance<T>();
    int max_sweeps = 30;
    ordering_t ordering = ordering_t::serial;
    bool accumulate_v = false;
};

template <typename T>
struct SvdResult {
    Matrix<T> U;                // m x n, orthonormal columns
    std::vector<T> sigma;       // descending, >= 0
    std::optional<Matrix<T>> V; // n x n when requested
    bool converged = false;
    int sweeps = 0;
    std::size_t rotations = 0;
    // largest scaled off-diagonal measure encountered in each sweep
    std::vector<T> sweep_offdiag;
};

struct PairSchedule {
    index_t n = 0;
    std::vector<std::vector<std::pair<index_t, index_t>>> steps; // each pair stored as (min, max)
};

// Rotation [[c, s], [-s, c]] that diagonalizes [[g_pp, g_pq], [g_pq, g_qq]]
template <typename T>
std::pair<T, T> jacobi_rotation(T g_pp, T g_pq, T g_qq);

// max over column pairs of |a_i^T a_j| / (||a_i|| ||a_j||); zero columns contribute 0
template <typename T>
T off_orthogonality(const Matrix<T>& A);

// circle method: index 0 fixed, 1..n-1 rotate by one position per step
PairSchedule round_robin_schedule(index_t n);

template <typename T>
SvdResult<T> svd(const Matrix<T>& A, const JacobiOptions<T>& opts = {});

template <typename T>
std::vector<SvdResult<T>> batch_svd(const MatrixBatch<T>& batch, const JacobiOptions<T>& opts = {},
                                    std::size_t threads = 0);

namespace detail {

// Turns an orthogonalized working matrix into an SvdResult: sigma from column
// norms, stable descending sort, unit columns, Gram-Schmidt completion of
// zero columns. V (if given) receives the same column permutation.
template <typename T>
void extract_svd(Matrix<T> W, std::optional<Matrix<T>> V, SvdResult<T>& out);

} // namespace detail

} // namespace batchfact
