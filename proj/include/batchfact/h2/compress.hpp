#pragma once

//
// Algebraic compression of an H2 matrix: a truncation phase that computes a
// new nested basis level by level (leaf SVDs, then SVDs of the stacked
// [T_c1 E_c1; T_c2 E_c2] matrices), followed by a projection phase that moves
// every coupling matrix into the new basis, S~ = T_t S T_s^T.
//

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <batchfact/h2/h2matrix.hpp>

namespace batchfact::h2 {

enum class truncation_svd_t { full, randomized };

struct TruncationOptions {
    truncation_svd_t svd = truncation_svd_t::full;
    index_t samples = 32;       // randomized: k + p
    index_t oversampling = 8;   // randomized: p
    std::uint64_t seed = 0;     // node i uses seed ^ i
};

template <typename T>
struct ProjectionTree {
    std::vector<Matrix<T>> proj; // per basis node: new rank x old rank
};

template <typename T>
struct Truncation {
    BasisTree<T> basis;
    ProjectionTree<T> projection;
};

// number of leading singular values with sigma_i >= eps * sigma_1, at least 1
template <typename T>
index_t truncation_rank(std::span<const T> sigma, double eps);

// Left singular vectors and singular values of M (any shape), descending.
template <typename T>
std::pair<Matrix<T>, std::vector<T>> left_svd(const Matrix<T>& M, const TruncationOptions& opts,
                                              std::uint64_t seed);

template <typename T>
Truncation<T> truncate_basis(const H2Matrix<T>& H, double eps, const TruncationOptions& opts = {},
                             std::size_t threads = 0);

template <typename T>
MatrixTree<T> project_coupling(const H2Matrix<T>& H, const ProjectionTree<T>& P, std::size_t threads = 0);

template <typename T>
struct CompressResult {
    H2Matrix<T> H;
    ProjectionTree<T> projection;
    std::vector<index_t> ranks_before, ranks_after; // per level
    double truncation_seconds = 0, projection_seconds = 0;
};

template <typename T>
CompressResult<T> compress(const H2Matrix<T>& H, double eps, const TruncationOptions& opts = {},
                           std::size_t threads = 0);

//
// sqrt(sum_i |(A - B) x_i|^2 / sum_i |A x_i|^2) over `samples` standard
// Gaussian vectors x_i, an estimate of |A - B|_F / |A|_F.
//
template <typename T>
double estimate_relative_error(const H2Matrix<T>& A, const H2Matrix<T>& B, int samples = 30,
                               std::uint64_t seed = 0, std::size_t threads = 0);

//
// Consistency of a compressed basis with the basis it came from: the largest
// of |U~_t^T U~_t - I|_F and |U~_t^T U_t - T_t|_F / |T_t|_F over all nodes,
// with both bases expanded through their transfer matrices.
//
template <typename T>
double compressed_nesting_residual(const H2Matrix<T>& original, const H2Matrix<T>& compressed,
                                   const ProjectionTree<T>& P, std::size_t threads = 0);

} // namespace batchfact::h2
