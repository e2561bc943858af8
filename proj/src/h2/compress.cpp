#include <batchfact/h2/compress.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include <batchfact/batch.hpp>
#include <batchfact/jacobi.hpp>
#include <batchfact/random.hpp>
#include <batchfact/rsvd.hpp>

namespace batchfact::h2 {

template <typename T>
index_t truncation_rank(std::span<const T> sigma, double eps) {
    if (sigma.empty() || !(sigma[0] > T(0)))
        return 1;
    const double cut = eps * double(sigma[0]);
    index_t k = 0;
    while (k < static_cast<index_t>(sigma.size()) && double(sigma[k]) >= cut)
        ++k;
    return std::max<index_t>(k, 1);
}

template <typename T>
std::pair<Matrix<T>, std::vector<T>> left_svd(const Matrix<T>& M, const TruncationOptions& opts,
                                              std::uint64_t seed) {
    const index_t m = M.rows(), n = M.cols();
    if (opts.svd == truncation_svd_t::randomized && opts.samples <= std::min(m, n)) {
        RsvdOptions<T> ro;
        ro.p = std::min(opts.oversampling, opts.samples - 1);
        ro.k = opts.samples - ro.p;
        ro.seed = seed;
        auto r = rsvd(M, ro);
        return {std::move(r.U), std::move(r.S)};
    }
    if (m >= n) {
        auto s = svd(M);
        return {std::move(s.U), std::move(s.sigma)};
    }
    JacobiOptions<T> jo;
    jo.accumulate_v = true;
    auto s = svd(M.transpose(), jo);
    return {std::move(*s.V), std::move(s.sigma)};
}

template <typename T>
Truncation<T> truncate_basis(const H2Matrix<T>& H, double eps, const TruncationOptions& opts,
                             std::size_t threads) {
    if (!(eps > 0))
        throw std::invalid_argument("truncate_basis: eps must be positive");
    if (opts.svd == truncation_svd_t::randomized && (opts.samples < 1 || opts.oversampling < 0))
        throw std::invalid_argument("truncate_basis: samples >= 1 and oversampling >= 0 required");

    const auto& tree = H.tree;
    const auto& old = H.basis;
    const auto nnodes = tree.nodes().size();

    Truncation<T> out;
    auto& B = out.basis;
    auto& P = out.projection.proj;
    B.U.assign(nnodes, Matrix<T>());
    B.E.assign(nnodes, Matrix<T>());
    B.rank.assign(nnodes, 0);
    P.assign(nnodes, Matrix<T>());

    for (int l = tree.depth() - 1; l >= 0; --l) {
        const auto& ids = tree.levels()[l];
        parallel_for(
            ids.size(),
            [&](std::size_t k) {
                const int id = ids[k];
                const auto& nd = tree.node(id);
                const auto seed = derive_seed(opts.seed, static_cast<std::uint64_t>(id));
                if (nd.is_leaf()) {
                    const auto& U = old.U[id];
                    auto [Q, sigma] = left_svd(U, opts, seed);
                    const index_t r = truncation_rank<T>(sigma, eps);
                    B.U[id] = Q.columns(0, r);
                    P[id] = multiply(B.U[id], U, op_t::transposed);
                    B.rank[id] = r;
                    return;
                }
                // TE = [T_c1 E_c1; T_c2 E_c2]
                const int c1 = nd.child[0], c2 = nd.child[1];
                const index_t k1 = B.rank[c1], k2 = B.rank[c2];
                Matrix<T> TE(k1 + k2, old.rank[id]);
                TE.set_block(0, 0, multiply(P[c1], old.E[c1]));
                TE.set_block(k1, 0, multiply(P[c2], old.E[c2]));

                auto [Q, sigma] = left_svd(TE, opts, seed);
                const index_t r = truncation_rank<T>(sigma, eps);
                const auto Qr = Q.columns(0, r);
                B.E[c1] = Qr.block(0, 0, k1, r);
                B.E[c2] = Qr.block(k1, 0, k2, r);
                P[id] = multiply(Qr, TE, op_t::transposed);
                B.rank[id] = r;
            },
            threads);
    }
    return out;
}

template <typename T>
MatrixTree<T> project_coupling(const H2Matrix<T>& H, const ProjectionTree<T>& P, std::size_t threads) {
    const auto nnodes = H.tree.nodes().size();
    if (P.proj.size() != nnodes)
        throw dimension_error("project_coupling: projection tree does not match the cluster tree");

    for (const auto& blk : H.blocks.blocks)
        if (blk.kind == block_kind::lowrank &&
            (P.proj[blk.t].cols() != blk.M.rows() || P.proj[blk.s].cols() != blk.M.cols()))
            throw dimension_error("project_coupling: rank mismatch at block (" + std::to_string(blk.t) + ", " +
                                  std::to_string(blk.s) + ")");

    MatrixTree<T> out;
    out.blocks.resize(H.blocks.blocks.size());
    out.by_row = H.blocks.by_row;
    parallel_for(
        out.blocks.size(),
        [&](std::size_t b) {
            const auto& blk = H.blocks.blocks[b];
            auto& dst = out.blocks[b];
            dst.t = blk.t;
            dst.s = blk.s;
            dst.kind = blk.kind;
            if (blk.kind == block_kind::dense) {
                dst.M = blk.M;
                return;
            }
            dst.M = multiply(multiply(P.proj[blk.t], blk.M), P.proj[blk.s], op_t::normal, op_t::transposed);
        },
        threads);
    return out;
}

template <typename T>
CompressResult<T> compress(const H2Matrix<T>& H, double eps, const TruncationOptions& opts, std::size_t threads) {
    using clock = std::chrono::steady_clock;
    CompressResult<T> res;
    res.ranks_before = level_ranks(H);

    const auto t0 = clock::now();
    auto trunc = truncate_basis(H, eps, opts, threads);
    const auto t1 = clock::now();
    auto blocks = project_coupling(H, trunc.projection, threads);
    const auto t2 = clock::now();

    res.H.params = H.params;
    res.H.tree = H.tree;
    res.H.basis = std::move(trunc.basis);
    res.H.blocks = std::move(blocks);
    res.projection = std::move(trunc.projection);
    res.ranks_after = level_ranks(res.H);
    res.truncation_seconds = std::chrono::duration<double>(t1 - t0).count();
    res.projection_seconds = std::chrono::duration<double>(t2 - t1).count();
    return res;
}

template <typename T>
double estimate_relative_error(const H2Matrix<T>& A, const H2Matrix<T>& B, int samples, std::uint64_t seed,
                               std::size_t threads) {
    if (A.size() != B.size())
        throw dimension_error("estimate_relative_error: operator sizes differ");
    if (samples < 1)
        throw std::invalid_argument("estimate_relative_error: samples must be >= 1");

    const index_t n = A.size();
    double num = 0, den = 0;
    for (int i = 0; i < samples; ++i) {
        const auto x = gaussian_matrix<T>(n, 1, derive_seed(seed, static_cast<std::uint64_t>(i)));
        const auto ya = h2_matvec(A, x.col(0), threads);
        const auto yb = h2_matvec(B, x.col(0), threads);
        for (index_t k = 0; k < n; ++k) {
            const double d = double(ya[k]) - double(yb[k]);
            num += d * d;
            den += double(ya[k]) * double(ya[k]);
        }
    }
    return den > 0 ? std::sqrt(num / den) : std::sqrt(num);
}

template <typename T>
double compressed_nesting_residual(const H2Matrix<T>& original, const H2Matrix<T>& compressed,
                                   const ProjectionTree<T>& P, std::size_t threads) {
    const auto& tree = original.tree;
    const auto nnodes = tree.nodes().size();
    if (compressed.tree.nodes().size() != nnodes || P.proj.size() != nnodes)
        throw dimension_error("compressed_nesting_residual: trees do not match");

    // explicit bases of the level below, both old and new
    std::vector<Matrix<T>> u_old(nnodes), u_new(nnodes);
    std::vector<double> worst(nnodes, 0.0);
    for (int l = tree.depth() - 1; l >= 0; --l) {
        const auto& ids = tree.levels()[l];
        parallel_for(
            ids.size(),
            [&](std::size_t k) {
                const int id = ids[k];
                const auto& nd = tree.node(id);
                if (nd.is_leaf()) {
                    u_old[id] = original.basis.U[id];
                    u_new[id] = compressed.basis.U[id];
                } else {
                    Matrix<T> a(nd.size(), original.basis.rank[id]);
                    Matrix<T> b(nd.size(), compressed.basis.rank[id]);
                    for (const int c : nd.child) {
                        const index_t row = tree.node(c).begin - nd.begin;
                        a.set_block(row, 0, multiply(u_old[c], original.basis.E[c]));
                        b.set_block(row, 0, multiply(u_new[c], compressed.basis.E[c]));
                        u_old[c] = Matrix<T>();
                        u_new[c] = Matrix<T>();
                    }
                    u_old[id] = std::move(a);
                    u_new[id] = std::move(b);
                }
                const auto orth = double(orthogonality_error(u_new[id]));
                const auto proj = multiply(u_new[id], u_old[id], op_t::transposed);
                const auto& Tn = P.proj[id];
                const double rel = double(frobenius_diff(proj, Tn)) / std::max(double(frobenius(Tn)), 1e-300);
                worst[id] = std::max(orth, rel);
            },
            threads);
    }
    return *std::max_element(worst.begin(), worst.end());
}

#define BATCHFACT_INSTANTIATE(T)                                                                          \
    template index_t truncation_rank<T>(std::span<const T>, double);                                      \
    template std::pair<Matrix<T>, std::vector<T>> left_svd<T>(const Matrix<T>&, const TruncationOptions&, \
                                                              std::uint64_t);                             \
    template Truncation<T> truncate_basis<T>(const H2Matrix<T>&, double, const TruncationOptions&,        \
                                             std::size_t);                                                \
    template MatrixTree<T> project_coupling<T>(const H2Matrix<T>&, const ProjectionTree<T>&, std::size_t); \
    template CompressResult<T> compress<T>(const H2Matrix<T>&, double, const TruncationOptions&,          \
                                           std::size_t);                                                  \
    template double estimate_relative_error<T>(const H2Matrix<T>&, const H2Matrix<T>&, int,               \
                                               std::uint64_t, std::size_t);                               \
    template double compressed_nesting_residual<T>(const H2Matrix<T>&, const H2Matrix<T>&,                \
                                                   const ProjectionTree<T>&, std::size_t);

BATCHFACT_INSTANTIATE(float)
BATCHFACT_INSTANTIATE(double)

} // namespace batchfact::h2
