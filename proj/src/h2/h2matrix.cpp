#include <batchfact/h2/h2matrix.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <batchfact/batch.hpp>

namespace batchfact::h2 {

namespace {

// centre and half width of the interpolation interval along one axis
void axis_frame(const BoundingBox& box, int axis, double& centre, double& half) {
    centre = 0.5 * (box.lo[axis] + box.hi[axis]);
    half = 0.5 * box.width(axis);
    if (half <= 0.0)
        half = 0.5 * std::max(box.diameter(), 1e-12);
}

struct Lagrange1d {
    std::vector<double> nodes, weights;

    explicit Lagrange1d(index_t order) : nodes(chebyshev_grid(order)), weights(nodes.size()) {
        for (index_t j = 0; j < order; ++j) {
            const double w = std::sin(std::numbers::pi * double(2 * j + 1) / double(2 * order));
            weights[j] = j % 2 == 0 ? w : -w;
        }
    }

    // barycentric evaluation of all basis polynomials at xi in [-1, 1] coordinates
    void eval(double xi, double* out) const {
        const std::size_t n = nodes.size();
        for (std::size_t j = 0; j < n; ++j)
            if (xi == nodes[j]) {
                std::fill(out, out + n, 0.0);
                out[j] = 1.0;
                return;
            }
        double sum = 0;
        for (std::size_t j = 0; j < n; ++j) {
            out[j] = weights[j] / (xi - nodes[j]);
            sum += out[j];
        }
        for (std::size_t j = 0; j < n; ++j)
            out[j] /= sum;
    }
};

void dual_traversal(const ClusterTree& tree, double eta, int t, int s, std::vector<Block<double>>& out) {
    const auto& nt = tree.node(t);
    const auto& ns = tree.node(s);
    if (admissible(nt.box, ns.box, eta)) {
        out.push_back({t, s, block_kind::lowrank, {}});
    } else if (nt.is_leaf() && ns.is_leaf()) {
        out.push_back({t, s, block_kind::dense, {}});
    } else if (nt.is_leaf()) {
        for (const int c : ns.child)
            dual_traversal(tree, eta, t, c, out);
    } else if (ns.is_leaf()) {
        for (const int c : nt.child)
            dual_traversal(tree, eta, c, s, out);
    } else {
        for (const int ct : nt.child)
            for (const int cs : ns.child)
                dual_traversal(tree, eta, ct, cs, out);
    }
}

std::span<const Point> node_points(const ClusterTree& tree, int id) {
    const auto& nd = tree.node(id);
    return std::span<const Point>(tree.points()).subspan(nd.begin, nd.size());
}

} // namespace

bool admissible(const BoundingBox& t, const BoundingBox& s, double eta) noexcept {
    return std::max(t.diameter(), s.diameter()) <= eta * distance(t, s);
}

std::vector<Point> interpolation_points(const BoundingBox& box, index_t order) {
    const auto x = chebyshev_grid(order);
    double cx, hx, cy, hy;
    axis_frame(box, 0, cx, hx);
    axis_frame(box, 1, cy, hy);
    std::vector<Point> pts;
    pts.reserve(static_cast<std::size_t>(order * order));
    for (index_t i = 0; i < order; ++i)
        for (index_t j = 0; j < order; ++j)
            pts.push_back({cx + hx * x[i], cy + hy * x[j]});
    return pts;
}

template <typename T>
Matrix<T> lagrange_matrix(const BoundingBox& box, index_t order, std::span<const Point> pts) {
    const Lagrange1d lag(order);
    double cx, hx, cy, hy;
    axis_frame(box, 0, cx, hx);
    axis_frame(box, 1, cy, hy);

    const auto np = static_cast<index_t>(pts.size());
    Matrix<T> L(np, order * order);
    std::vector<double> lx(static_cast<std::size_t>(order)), ly(static_cast<std::size_t>(order));
    for (index_t k = 0; k < np; ++k) {
        lag.eval((pts[k].x - cx) / hx, lx.data());
        lag.eval((pts[k].y - cy) / hy, ly.data());
        for (index_t i = 0; i < order; ++i)
            for (index_t j = 0; j < order; ++j)
                L(k, i * order + j) = static_cast<T>(lx[i] * ly[j]);
    }
    return L;
}

template <typename T>
H2Matrix<T> build_h2(std::span<const Point> pts, const H2Params& params, std::size_t threads) {
    if (!(params.ell > 0) || params.cheb_order < 1 || !(params.eta > 0) || params.leaf_size < 1)
        throw std::invalid_argument("build_h2: ell, cheb_order, eta and leaf_size must be positive");

    H2Matrix<T> H;
    H.params = params;
    H.tree = ClusterTree(pts, params.leaf_size);
    const auto& tree = H.tree;
    const auto nnodes = tree.nodes().size();
    const index_t order = params.cheb_order;
    const index_t r = order * order;

    auto& B = H.basis;
    B.U.assign(nnodes, Matrix<T>());
    B.E.assign(nnodes, Matrix<T>());
    B.rank.assign(nnodes, r);
    parallel_for(
        nnodes,
        [&](std::size_t id) {
            const auto& nd = tree.node(static_cast<int>(id));
            if (nd.is_leaf())
                B.U[id] = lagrange_matrix<T>(nd.box, order, node_points(tree, static_cast<int>(id)));
            if (nd.parent >= 0)
                B.E[id] = lagrange_matrix<T>(tree.node(nd.parent).box, order, interpolation_points(nd.box, order));
        },
        threads);

    std::vector<Block<double>> shape;
    dual_traversal(tree, params.eta, 0, 0, shape);

    auto& M = H.blocks;
    M.blocks.resize(shape.size());
    M.by_row.assign(nnodes, {});
    for (std::size_t b = 0; b < shape.size(); ++b) {
        M.blocks[b].t = shape[b].t;
        M.blocks[b].s = shape[b].s;
        M.blocks[b].kind = shape[b].kind;
        M.by_row[shape[b].t].push_back(b);
    }

    parallel_for(
        M.blocks.size(),
        [&](std::size_t b) {
            auto& blk = M.blocks[b];
            std::vector<Point> pt, ps;
            if (blk.kind == block_kind::dense) {
                const auto a = node_points(tree, blk.t), c = node_points(tree, blk.s);
                pt.assign(a.begin(), a.end());
                ps.assign(c.begin(), c.end());
            } else {
                pt = interpolation_points(tree.node(blk.t).box, order);
                ps = interpolation_points(tree.node(blk.s).box, order);
            }
            blk.M = Matrix<T>(static_cast<index_t>(pt.size()), static_cast<index_t>(ps.size()));
            for (std::size_t j = 0; j < ps.size(); ++j)
                for (std::size_t i = 0; i < pt.size(); ++i)
                    blk.M(static_cast<index_t>(i), static_cast<index_t>(j)) =
                        static_cast<T>(exp_kernel(pt[i], ps[j], params.ell));
        },
        threads);
    return H;
}

template <typename T>
std::vector<T> h2_matvec(const H2Matrix<T>& H, std::span<const T> x, std::size_t threads) {
    const index_t n = H.size();
    if (static_cast<index_t>(x.size()) != n)
        throw dimension_error("h2_matvec: vector length " + std::to_string(x.size()) + " does not match size " +
                              std::to_string(n));
    const auto& tree = H.tree;
    const auto& B = H.basis;
    const auto nnodes = tree.nodes().size();
    const auto& perm = tree.perm();

    std::vector<T> xt(static_cast<std::size_t>(n));
    for (index_t k = 0; k < n; ++k)
        xt[k] = x[perm[k]];

    // upward pass
    std::vector<std::vector<T>> xhat(nnodes);
    for (int l = tree.depth() - 1; l >= 0; --l) {
        const auto& ids = tree.levels()[l];
        parallel_for(
            ids.size(),
            [&](std::size_t k) {
                const int id = ids[k];
                const auto& nd = tree.node(id);
                if (nd.is_leaf()) {
                    xhat[id] = matvec(B.U[id], std::span<const T>(xt).subspan(nd.begin, nd.size()), op_t::transposed);
                } else {
                    std::vector<T> acc(static_cast<std::size_t>(B.rank[id]), T(0));
                    for (const int c : nd.child) {
                        const auto part = matvec(B.E[c], std::span<const T>(xhat[c]), op_t::transposed);
                        for (std::size_t i = 0; i < acc.size(); ++i)
                            acc[i] += part[i];
                    }
                    xhat[id] = std::move(acc);
                }
            },
            threads);
    }

    // couplings
    std::vector<std::vector<T>> yhat(nnodes);
    parallel_for(
        nnodes,
        [&](std::size_t t) {
            std::vector<T> acc(static_cast<std::size_t>(B.rank[t]), T(0));
            for (const auto b : H.blocks.by_row[t]) {
                const auto& blk = H.blocks.blocks[b];
                if (blk.kind != block_kind::lowrank)
                    continue;
                const auto part = matvec(blk.M, std::span<const T>(xhat[blk.s]));
                for (std::size_t i = 0; i < acc.size(); ++i)
                    acc[i] += part[i];
            }
            yhat[t] = std::move(acc);
        },
        threads);

    // downward pass
    for (int l = 1; l < tree.depth(); ++l) {
        const auto& ids = tree.levels()[l];
        parallel_for(
            ids.size(),
            [&](std::size_t k) {
                const int id = ids[k];
                const auto part = matvec(B.E[id], std::span<const T>(yhat[tree.node(id).parent]));
                for (std::size_t i = 0; i < part.size(); ++i)
                    yhat[id][i] += part[i];
            },
            threads);
    }

    // leaves: expand and add the dense blocks
    std::vector<T> yt(static_cast<std::size_t>(n), T(0));
    const auto leaves = tree.leaves();
    parallel_for(
        leaves.size(),
        [&](std::size_t k) {
            const int id = leaves[k];
            const auto& nd = tree.node(id);
            auto y = matvec(B.U[id], std::span<const T>(yhat[id]));
            for (const auto b : H.blocks.by_row[id]) {
                const auto& blk = H.blocks.blocks[b];
                if (blk.kind != block_kind::dense)
                    continue;
                const auto& ns = tree.node(blk.s);
                const auto part = matvec(blk.M, std::span<const T>(xt).subspan(ns.begin, ns.size()));
                for (std::size_t i = 0; i < part.size(); ++i)
                    y[i] += part[i];
            }
            std::copy(y.begin(), y.end(), yt.begin() + nd.begin);
        },
        threads);

    std::vector<T> out(static_cast<std::size_t>(n));
    for (index_t k = 0; k < n; ++k)
        out[perm[k]] = yt[k];
    return out;
}

template <typename T>
Matrix<T> kernel_matrix(std::span<const Point> pts, double ell) {
    const auto n = static_cast<index_t>(pts.size());
    Matrix<T> K(n, n);
    for (index_t j = 0; j < n; ++j)
        for (index_t i = 0; i < n; ++i)
            K(i, j) = static_cast<T>(exp_kernel(pts[i], pts[j], ell));
    return K;
}

template <typename T>
Matrix<T> to_dense(const H2Matrix<T>& H, std::size_t threads) {
    const index_t n = H.size();
    Matrix<T> A(n, n);
    parallel_for(
        static_cast<std::size_t>(n),
        [&](std::size_t j) {
            std::vector<T> e(static_cast<std::size_t>(n), T(0));
            e[j] = T(1);
            const auto col = h2_matvec(H, std::span<const T>(e), 1);
            std::copy(col.begin(), col.end(), A.col(static_cast<index_t>(j)).begin());
        },
        threads);
    return A;
}

template <typename T>
Matrix<T> explicit_basis(const H2Matrix<T>& H, int node) {
    const auto& nd = H.tree.node(node);
    if (nd.is_leaf())
        return H.basis.U[node];
    Matrix<T> out(nd.size(), H.basis.rank[node]);
    for (const int c : nd.child) {
        const auto part = multiply(explicit_basis(H, c), H.basis.E[c]);
        out.set_block(H.tree.node(c).begin - nd.begin, 0, part);
    }
    return out;
}

template <typename T>
double nested_basis_residual(const H2Matrix<T>& H, std::size_t threads) {
    const auto& tree = H.tree;
    const index_t order = H.params.cheb_order;
    for (const auto r : H.basis.rank)
        if (r != order * order)
            throw std::invalid_argument("nested_basis_residual: basis is not an interpolation basis");

    // explicit bases of the level below, reused by the next level up
    std::vector<Matrix<T>> below(tree.nodes().size());
    std::vector<double> worst(tree.nodes().size(), 0.0);
    for (int l = tree.depth() - 1; l >= 0; --l) {
        const auto& ids = tree.levels()[l];
        parallel_for(
            ids.size(),
            [&](std::size_t k) {
                const int id = ids[k];
                const auto& nd = tree.node(id);
                if (nd.is_leaf()) {
                    below[id] = H.basis.U[id];
                    return;
                }
                Matrix<T> nested(nd.size(), H.basis.rank[id]);
                for (const int c : nd.child) {
                    nested.set_block(tree.node(c).begin - nd.begin, 0, multiply(below[c], H.basis.E[c]));
                    below[c] = Matrix<T>();
                }
                const auto direct = lagrange_matrix<T>(nd.box, order, node_points(tree, id));
                worst[id] = double(frobenius_diff(direct, nested)) / double(frobenius(direct));
                below[id] = std::move(nested);
            },
            threads);
    }
    return *std::max_element(worst.begin(), worst.end());
}

template <typename T>
MemoryReport memory_report(const H2Matrix<T>& H) {
    MemoryReport r;
    bool any_lowrank = false;
    for (const auto& blk : H.blocks.blocks) {
        const auto bytes = static_cast<std::size_t>(blk.M.size()) * sizeof(T);
        if (blk.kind == block_kind::dense) {
            r.dense_bytes += bytes;
        } else {
            r.coupling_bytes += bytes;
            any_lowrank = true;
        }
    }
    if (any_lowrank) {
        for (const auto& U : H.basis.U)
            r.basis_bytes += static_cast<std::size_t>(U.size()) * sizeof(T);
        for (const auto& E : H.basis.E)
            r.basis_bytes += static_cast<std::size_t>(E.size()) * sizeof(T);
    }
    return r;
}

template <typename T>
std::vector<index_t> level_ranks(const H2Matrix<T>& H) {
    std::vector<index_t> out;
    for (const auto& ids : H.tree.levels()) {
        index_t r = 0;
        for (const int id : ids)
            r = std::max(r, H.basis.rank[id]);
        out.push_back(r);
    }
    return out;
}

#define BATCHFACT_INSTANTIATE(T)                                                                          \
    template Matrix<T> lagrange_matrix<T>(const BoundingBox&, index_t, std::span<const Point>);           \
    template H2Matrix<T> build_h2<T>(std::span<const Point>, const H2Params&, std::size_t);               \
    template std::vector<T> h2_matvec<T>(const H2Matrix<T>&, std::span<const T>, std::size_t);            \
    template Matrix<T> kernel_matrix<T>(std::span<const Point>, double);                                  \
    template Matrix<T> to_dense<T>(const H2Matrix<T>&, std::size_t);                                      \
    template Matrix<T> explicit_basis<T>(const H2Matrix<T>&, int);                                        \
    template double nested_basis_residual<T>(const H2Matrix<T>&, std::size_t);                            \
    template MemoryReport memory_report<T>(const H2Matrix<T>&);                                           \
    template std::vector<index_t> level_ranks<T>(const H2Matrix<T>&);

BATCHFACT_INSTANTIATE(float)
BATCHFACT_INSTANTIATE(double)

} // namespace batchfact::h2
