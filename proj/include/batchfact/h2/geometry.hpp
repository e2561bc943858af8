#pragma once

//
// Point sets in the plane and their KD cluster tree.
//

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <batchfact/matrix.hpp>

namespace batchfact::h2 {

struct Point {
    double x = 0, y = 0;
    double operator[](int axis) const noexcept { return axis == 0 ? x : y; }
    bool operator==(const Point&) const = default;
};

double distance(const Point& p, const Point& q) noexcept;

struct BoundingBox {
    std::array<double, 2> lo{0, 0}, hi{0, 0};

    static BoundingBox of(std::span<const Point> pts);
    double width(int axis) const noexcept { return hi[axis] - lo[axis]; }
    double diameter() const noexcept;
    bool contains(const Point& p) const noexcept;
};

// Euclidean distance between two boxes; 0 when they touch or overlap
double distance(const BoundingBox& a, const BoundingBox& b) noexcept;

// exp(-|p - q| / ell)
double exp_kernel(const Point& p, const Point& q, double ell);

// cos(pi (2i + 1) / (2 order)), i = 0..order-1, on [-1, 1]
std::vector<double> chebyshev_grid(index_t order);

// Regular ceil(sqrt(n)) x ceil(sqrt(n)) grid of cell centres in the unit
// square (first n cells, row by row), each point moved by an independent
// uniform offset in [-jitter, jitter] grid spacings per coordinate.
std::vector<Point> perturbed_grid(index_t n, std::uint64_t seed, double jitter = 0.25);

struct ClusterNode {
    index_t begin = 0, end = 0; // interval in tree order
    BoundingBox box;
    int level = 0;
    int parent = -1;
    std::array<int, 2> child{-1, -1};

    index_t size() const noexcept { return end - begin; }
    bool is_leaf() const noexcept { return child[0] < 0; }
};

//
// Binary KD tree. A node with more than leaf_size points is split along the
// wider axis of its bounding box at the mean coordinate. If the mean leaves a
// side empty the median is used; if all coordinates along the axis coincide
// the interval is halved by index.
//
class ClusterTree {
public:
    ClusterTree() = default;
    ClusterTree(std::span<const Point> pts, index_t leaf_size);

    const std::vector<ClusterNode>& nodes() const noexcept { return nodes_; }
    const ClusterNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
    // node ids per level, root level first
    const std::vector<std::vector<int>>& levels() const noexcept { return levels_; }
    int depth() const noexcept { return static_cast<int>(levels_.size()); }
    std::vector<int> leaves() const;

    // points in tree order
    const std::vector<Point>& points() const noexcept { return points_; }
    // perm()[k] = original index of the k-th point in tree order
    const std::vector<index_t>& perm() const noexcept { return perm_; }
    index_t leaf_size() const noexcept { return leaf_size_; }
    index_t size() const noexcept { return static_cast<index_t>(points_.size()); }

private:
    int split(int id);

    std::vector<ClusterNode> nodes_;
    std::vector<std::vector<int>> levels_;
    std::vector<Point> points_;
    std::vector<index_t> perm_;
    index_t leaf_size_ = 1;
};

inline ClusterTree build_cluster_tree(std::span<const Point> pts, index_t leaf_size) {
    return ClusterTree(pts, leaf_size);
}

} // namespace batchfact::h2
