#include <batchfact/h2/geometry.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include <batchfact/random.hpp>

namespace batchfact::h2 {

double distance(const Point& p, const Point& q) noexcept {
    return std::hypot(p.x - q.x, p.y - q.y);
}

BoundingBox BoundingBox::of(std::span<const Point> pts) {
    BoundingBox b;
    if (pts.empty())
        return b;
    constexpr double inf = std::numeric_limits<double>::infinity();
    b.lo = {inf, inf};
    b.hi = {-inf, -inf};
    for (const auto& p : pts)
        for (int a = 0; a < 2; ++a) {
            b.lo[a] = std::min(b.lo[a], p[a]);
            b.hi[a] = std::max(b.hi[a], p[a]);
        }
    return b;
}

double BoundingBox::diameter() const noexcept {
    return std::hypot(width(0), width(1));
}

bool BoundingBox::contains(const Point& p) const noexcept {
    return p.x >= lo[0] && p.x <= hi[0] && p.y >= lo[1] && p.y <= hi[1];
}

double distance(const BoundingBox& a, const BoundingBox& b) noexcept {
    double d2 = 0;
    for (int k = 0; k < 2; ++k) {
        const double gap = std::max({0.0, a.lo[k] - b.hi[k], b.lo[k] - a.hi[k]});
        d2 += gap * gap;
    }
    return std::sqrt(d2);
}

double exp_kernel(const Point& p, const Point& q, double ell) {
    return std::exp(-distance(p, q) / ell);
}

std::vector<double> chebyshev_grid(index_t order) {
    if (order < 1)
        throw std::invalid_argument("chebyshev_grid: order must be >= 1");
    std::vector<double> x(static_cast<std::size_t>(order));
    for (index_t i = 0; i < order; ++i) {
        // the middle node of an odd order is exactly 0
        if (2 * i + 1 == order)
            x[i] = 0.0;
        else
            x[i] = std::cos(std::numbers::pi * double(2 * i + 1) / double(2 * order));
    }
    return x;
}

std::vector<Point> perturbed_grid(index_t n, std::uint64_t seed, double jitter) {
    if (n < 1)
        throw std::invalid_argument("perturbed_grid: n must be >= 1");
    auto side = static_cast<index_t>(std::ceil(std::sqrt(double(n))));
    while (side * side < n)
        ++side;
    const double h = 1.0 / double(side);
    const CounterRng rng(seed);

    std::vector<Point> pts(static_cast<std::size_t>(n));
    for (index_t k = 0; k < n; ++k) {
        const index_t i = k % side, j = k / side;
        const double dx = (2 * rng.uniform(2 * std::uint64_t(k)) - 1) * jitter * h;
        const double dy = (2 * rng.uniform(2 * std::uint64_t(k) + 1) - 1) * jitter * h;
        pts[k] = {(double(i) + 0.5) * h + dx, (double(j) + 0.5) * h + dy};
    }
    return pts;
}

ClusterTree::ClusterTree(std::span<const Point> pts, index_t leaf_size) : leaf_size_(leaf_size) {
    if (leaf_size < 1)
        throw std::invalid_argument("build_cluster_tree: leaf_size must be >= 1");
    if (pts.empty())
        throw std::invalid_argument("build_cluster_tree: empty point set");

    points_.assign(pts.begin(), pts.end());
    perm_.resize(points_.size());
    std::iota(perm_.begin(), perm_.end(), index_t(0));

    ClusterNode root;
    root.begin = 0;
    root.end = size();
    root.box = BoundingBox::of(points_);
    nodes_.push_back(root);

    // breadth first, so node ids are grouped by level
    std::vector<int> frontier{0};
    while (!frontier.empty()) {
        levels_.push_back(frontier);
        std::vector<int> next;
        for (const int id : frontier)
            if (nodes_[id].size() > leaf_size_) {
                const int c = split(id);
                next.push_back(c);
                next.push_back(c + 1);
            }
        frontier = std::move(next);
    }
}

int ClusterTree::split(int id) {
    const ClusterNode nd = nodes_[id];
    const int axis = nd.box.width(0) >= nd.box.width(1) ? 0 : 1;
    const auto first = nd.begin, last = nd.end;

    // partition points and permutation together
    std::vector<index_t> order(static_cast<std::size_t>(last - first));
    std::iota(order.begin(), order.end(), first);
    auto coord = [&](index_t k) { return points_[k][axis]; };

    index_t mid;
    if (nd.box.width(axis) == 0.0) {
        mid = first + (last - first) / 2;
    } else {
        double mean = 0;
        for (index_t k = first; k < last; ++k)
            mean += coord(k);
        mean /= double(last - first);
        auto it = std::stable_partition(order.begin(), order.end(), [&](index_t k) { return coord(k) < mean; });
        mid = first + (it - order.begin());
        if (mid == first || mid == last) {
            std::stable_sort(order.begin(), order.end(), [&](index_t a, index_t b) { return coord(a) < coord(b); });
            mid = first + (last - first) / 2;
        }
    }

    std::vector<Point> p(order.size());
    std::vector<index_t> q(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) {
        p[k] = points_[order[k]];
        q[k] = perm_[order[k]];
    }
    std::copy(p.begin(), p.end(), points_.begin() + first);
    std::copy(q.begin(), q.end(), perm_.begin() + first);

    const int c = static_cast<int>(nodes_.size());
    for (int s = 0; s < 2; ++s) {
        ClusterNode ch;
        ch.begin = s == 0 ? first : mid;
        ch.end = s == 0 ? mid : last;
        ch.level = nd.level + 1;
        ch.parent = id;
        ch.box = BoundingBox::of(std::span<const Point>(points_).subspan(ch.begin, ch.end - ch.begin));
        nodes_.push_back(ch);
    }
    nodes_[id].child = {c, c + 1};
    return c;
}

std::vector<int> ClusterTree::leaves() const {
    std::vector<int> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].is_leaf())
            out.push_back(static_cast<int>(i));
    return out;
}

} // namespace batchfact::h2
