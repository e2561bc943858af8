#pragma once

//
// Symmetric H2 matrices of the exponential covariance kernel.
//
// The basis tree stores explicit bases U only at the leaves; every other node
// is reached through transfer matrices E (child rank x parent rank), so that
// the basis of a node t with children c1, c2 is
//
//   U_t = [ U_c1 E_c1 ]
//         [ U_c2 E_c2 ]
//
// Blocks of the matrix tree are either dense kernel blocks between two leaves
// or admissible blocks A_ts ~ U_t S_ts U_s^T.
//

#include <cstddef>
#include <span>
#include <vector>

#include <batchfact/h2/geometry.hpp>
#include <batchfact/matrix.hpp>

namespace batchfact::h2 {

struct H2Params {
    double ell = 0.1;
    index_t cheb_order = 8;
    double eta = 1.0;
    index_t leaf_size = 64;
};

template <typename T>
struct BasisTree {
    std::vector<Matrix<T>> U;   // per node; points x rank at leaves, empty elsewhere
    std::vector<Matrix<T>> E;   // per node; rank x parent rank, empty at the root
    std::vector<index_t> rank;  // per node
};

enum class block_kind { dense, lowrank };

template <typename T>
struct Block {
    int t = -1, s = -1;     // row and column cluster
    block_kind kind = block_kind::dense;
    Matrix<T> M;            // dense: |t| x |s| kernel block; lowrank: coupling S, rank_t x rank_s
};

template <typename T>
struct MatrixTree {
    std::vector<Block<T>> blocks;
    // block ids grouped by row cluster, in traversal order
    std::vector<std::vector<std::size_t>> by_row;
};

template <typename T>
struct H2Matrix {
    H2Params params;
    ClusterTree tree;
    BasisTree<T> basis;
    MatrixTree<T> blocks;

    index_t size() const noexcept { return tree.size(); }
};

// max(diam t, diam s) <= eta * dist(t, s), on bounding boxes
bool admissible(const BoundingBox& t, const BoundingBox& s, double eta) noexcept;

// Chebyshev tensor grid of a node: cheb_order^2 points on its bounding box,
// point a = (ix, iy) stored at a = ix * order + iy
std::vector<Point> interpolation_points(const BoundingBox& box, index_t order);

// tensor Lagrange polynomials of the grid on `box`, evaluated at pts
// (pts.size() x order^2)
template <typename T>
Matrix<T> lagrange_matrix(const BoundingBox& box, index_t order, std::span<const Point> pts);

template <typename T>
H2Matrix<T> build_h2(std::span<const Point> pts, const H2Params& params, std::size_t threads = 0);

// y = A x with x and y in the original point order
template <typename T>
std::vector<T> h2_matvec(const H2Matrix<T>& H, std::span<const T> x, std::size_t threads = 0);

// dense kernel matrix in the original point order
template <typename T>
Matrix<T> kernel_matrix(std::span<const Point> pts, double ell);

// the H2 operator materialized column by column through matvecs
template <typename T>
Matrix<T> to_dense(const H2Matrix<T>& H, std::size_t threads = 0);

// basis of a node expanded through the transfer matrices (tree order rows)
template <typename T>
Matrix<T> explicit_basis(const H2Matrix<T>& H, int node);

// Largest relative Frobenius difference, over inner nodes, between the
// interpolation basis evaluated directly at the node's points and the same
// basis expanded from the leaves through the transfer matrices.
template <typename T>
double nested_basis_residual(const H2Matrix<T>& H, std::size_t threads = 0);

struct MemoryReport {
    std::size_t dense_bytes = 0;
    std::size_t basis_bytes = 0;    // leaf bases and transfer matrices
    std::size_t coupling_bytes = 0;

    std::size_t lowrank_bytes() const noexcept { return basis_bytes + coupling_bytes; }
    std::size_t total_bytes() const noexcept { return dense_bytes + lowrank_bytes(); }
};

// The basis only counts when some block uses it.
template <typename T>
MemoryReport memory_report(const H2Matrix<T>& H);

// largest rank per level, root level first
template <typename T>
std::vector<index_t> level_ranks(const H2Matrix<T>& H);

} // namespace batchfact::h2
