#pragma once

//
// One-sided block Jacobi SVD.
//
// Pairs of block columns A_ij = [A_i, A_j] (m x 2k) are orthogonalized per
// sweep in round-robin order over the block indices, either
//
//   gram   : G = A_ij^T A_ij = V L V^T, A_ij <- A_ij V
//   direct : A_ij = Q R, R = U_R S V_R^T, A_ij <- Q U_R S
//
// The convergence estimate of a pair is the scaled off-diagonal of G (or of
// R^T R, which equals G);
// a matrix has converged once the largest estimate over a sweep is below the
// tolerance. Pairs already below the tolerance are left untouched.
//

#include <vector>

#include <batchfact/jacobi.hpp>
#include <batchfact/matrix.hpp>

namespace batchfact {

enum class block_method_t { gram, direct };

template <typename T>
constexpr T default_block_tolerance() {
    return std::is_same_v<T, float> ? T(1e-5) : T(1e-13);
}

template <typename T>
struct BlockJacobiOptions {
    index_t block_width = 32;
    block_method_t method = block_method_t::direct;
    T tolerance = default_block_tolerance<T>();
    int max_sweeps = 30;
    bool accumulate_v = false;
    // options of the SVD of each 2k x 2k Gram matrix / triangular factor
    JacobiOptions<T> inner = {};
};

// max_{i != j} |G_ij| / sqrt(|G_ii| |G_jj|); +inf if a nonzero entry meets a zero scale
template <typename T>
T scaled_offdiag(const Matrix<T>& G);

//
// Per-matrix iteration state; one sweep at a time so that batch drivers can
// stop iterating on converged entries.
//
template <typename T>
class BlockJacobiSolver {
public:
    BlockJacobiSolver(const Matrix<T>& A, const BlockJacobiOptions<T>& opts);

    // one sweep over all block-column pairs; returns the sweep's estimate e
    T sweep();

    bool converged() const noexcept { return converged_; }
    int sweeps() const noexcept { return static_cast<int>(history_.size()); }
    const std::vector<T>& history() const noexcept { return history_; }

    // current working matrix with padding stripped (m x n)
    Matrix<T> working_matrix() const;

    SvdResult<T> result() const;

private:
    void process_pair(index_t bi, index_t bj, T& e);

    BlockJacobiOptions<T> opts_;
    index_t m_ = 0, n_ = 0;  // original shape
    index_t k_ = 0;          // effective block width
    index_t nblocks_ = 0;
    Matrix<T> W_;            // padded working matrix
    std::optional<Matrix<T>> V_;
    PairSchedule schedule_;
    std::vector<T> history_;
    std::size_t rotations_ = 0;
    bool converged_ = false;
};

template <typename T>
SvdResult<T> block_svd(const Matrix<T>& A, const BlockJacobiOptions<T>& opts = {});

// Entries that have converged are excluded from further sweeps.
template <typename T>
std::vector<SvdResult<T>> batch_block_svd(const MatrixBatch<T>& batch, const BlockJacobiOptions<T>& opts = {},
                                          std::size_t threads = 0);

} // namespace batchfact
