#include <batchfact/block_jacobi.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <batchfact/batch.hpp>
#include <batchfact/qr.hpp>

namespace batchfact {

template <typename T>
T scaled_offdiag(const Matrix<T>& G) {
    const index_t n = G.rows();
    if (G.cols() != n)
        throw dimension_error("scaled_offdiag: matrix is not square");

    std::vector<T> d(static_cast<std::size_t>(n));
    for (index_t i = 0; i < n; ++i)
        d[i] = std::sqrt(std::abs(G(i, i)));

    T worst(0);
    for (index_t j = 0; j < n; ++j)
        for (index_t i = 0; i < n; ++i) {
            if (i == j || G(i, j) == T(0))
                continue;
            const T scale = d[i] * d[j];
            if (scale == T(0))
                return std::numeric_limits<T>::infinity();
            worst = std::max(worst, std::abs(G(i, j)) / scale);
        }
    return worst;
}

template <typename T>
BlockJacobiSolver<T>::BlockJacobiSolver(const Matrix<T>& A, const BlockJacobiOptions<T>& opts)
    : opts_(opts), m_(A.rows()), n_(A.cols()) {
    if (n_ < 1 || m_ < n_)
        throw dimension_error("block_svd: requires rows >= cols >= 1, got " + std::to_string(m_) + "x" +
                              std::to_string(n_));
    if (opts.block_width < 1 || !(opts.tolerance > T(0)) || opts.max_sweeps < 1)
        throw std::invalid_argument("block_svd: block_width >= 1, tolerance > 0 and max_sweeps >= 1 required");

    // a block wider than half the matrix degenerates to a single pair
    k_ = std::min(opts.block_width, std::max<index_t>(1, (n_ + 1) / 2));
    nblocks_ = 2 * ((n_ + 2 * k_ - 1) / (2 * k_));

    W_ = Matrix<T>(m_, nblocks_ * k_);
    W_.set_block(0, 0, A);
    if (opts.accumulate_v)
        V_ = Matrix<T>::identity(nblocks_ * k_);
    schedule_ = round_robin_schedule(nblocks_);

    opts_.inner.accumulate_v = opts.method == block_method_t::gram || opts.accumulate_v;
}

template <typename T>
void BlockJacobiSolver<T>::process_pair(index_t bi, index_t bj, T& e) {
    // zero columns (padding in particular) take no part in the update
    std::vector<index_t> cols;
    cols.reserve(static_cast<std::size_t>(2 * k_));
    for (const index_t b : {bi, bj})
        for (index_t c = b * k_; c < (b + 1) * k_; ++c) {
            const auto col = W_.col(c);
            if (std::any_of(col.begin(), col.end(), [](T x) { return x != T(0); }))
                cols.push_back(c);
        }
    const auto r = static_cast<index_t>(cols.size());
    if (r < 2)
        return;

    Matrix<T> Aij(m_, r);
    for (index_t c = 0; c < r; ++c)
        std::copy_n(W_.col(cols[c]).begin(), m_, Aij.col(c).begin());

    Matrix<T> updated;
    Matrix<T> rotation; // applied to V

    if (opts_.method == block_method_t::gram) {
        const auto G = syrk(Aij);
        const T el = scaled_offdiag(G);
        e = std::max(e, el);
        if (el < opts_.tolerance)
            return;
        auto s = svd(G, opts_.inner);
        updated = multiply(Aij, *s.V);
        rotation = std::move(*s.V);
    } else {
        auto f = qr(Aij);
        // R^T R = A_ij^T A_ij, so this is the Gram measure without forming the Gram matrix from A
        const T el = scaled_offdiag(syrk(f.R));
        e = std::max(e, el);
        if (el < opts_.tolerance)
            return;
        auto s = svd(f.R, opts_.inner);
        updated = multiply(f.Q, scale_columns<T>(s.U, s.sigma));
        if (s.V)
            rotation = std::move(*s.V);
    }
    ++rotations_;

    for (index_t c = 0; c < r; ++c)
        std::copy_n(updated.col(c).begin(), m_, W_.col(cols[c]).begin());

    if (V_) {
        const index_t nv = V_->rows();
        Matrix<T> Vij(nv, r);
        for (index_t c = 0; c < r; ++c)
            std::copy_n(V_->col(cols[c]).begin(), nv, Vij.col(c).begin());
        const auto Vnew = multiply(Vij, rotation);
        for (index_t c = 0; c < r; ++c)
            std::copy_n(Vnew.col(c).begin(), nv, V_->col(cols[c]).begin());
    }
}

template <typename T>
T BlockJacobiSolver<T>::sweep() {
    T e(0);
    for (const auto& step : schedule_.steps)
        for (const auto& [bi, bj] : step)
            process_pair(bi, bj, e);
    history_.push_back(e);
    converged_ = e < opts_.tolerance;
    return e;
}

template <typename T>
Matrix<T> BlockJacobiSolver<T>::working_matrix() const {
    return W_.columns(0, n_);
}

template <typename T>
SvdResult<T> BlockJacobiSolver<T>::result() const {
    SvdResult<T> out;
    out.converged = converged_;
    out.sweeps = sweeps();
    out.rotations = rotations_;
    out.sweep_offdiag = history_;

    // padding columns are never touched, so they are still the trailing ones
    std::optional<Matrix<T>> V;
    if (V_)
        V = V_->block(0, 0, n_, n_);
    detail::extract_svd(working_matrix(), std::move(V), out);
    return out;
}

template <typename T>
SvdResult<T> block_svd(const Matrix<T>& A, const BlockJacobiOptions<T>& opts) {
    BlockJacobiSolver<T> solver(A, opts);
    while (!solver.converged() && solver.sweeps() < opts.max_sweeps)
        solver.sweep();
    return solver.result();
}

template <typename T>
std::vector<SvdResult<T>> batch_block_svd(const MatrixBatch<T>& batch, const BlockJacobiOptions<T>& opts,
                                          std::size_t threads) {
    const std::size_t count = batch.count();

    std::vector<std::optional<BlockJacobiSolver<T>>> solvers(count);
    std::vector<std::exception_ptr> errors(count);
    auto guarded = [&](std::size_t i, auto&& fn) {
        try {
            fn();
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    auto rethrow_first = [&] {
        for (std::size_t i = 0; i < count; ++i)
            if (errors[i]) {
                try {
                    std::rethrow_exception(errors[i]);
                } catch (const std::exception& ex) {
                    throw batch_error(i, ex.what());
                }
            }
    };

    parallel_for(count, [&](std::size_t i) { guarded(i, [&] { solvers[i].emplace(batch[i], opts); }); }, threads);
    rethrow_first();

    // per-entry convergence flags; converged entries sit out later sweeps
    std::vector<char> active(count, 1);
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        std::vector<std::size_t> work;
        for (std::size_t i = 0; i < count; ++i)
            if (active[i])
                work.push_back(i);
        if (work.empty())
            break;

        parallel_for(work.size(), [&](std::size_t w) { guarded(work[w], [&] { solvers[work[w]]->sweep(); }); },
                     threads);
        rethrow_first();
        for (const auto i : work)
            active[i] = !solvers[i]->converged();
    }

    std::vector<SvdResult<T>> out(count);
    parallel_for(count, [&](std::size_t i) { guarded(i, [&] { out[i] = solvers[i]->result(); }); }, threads);
    rethrow_first();
    return out;
}

#define BATCHFACT_INSTANTIATE(T)                                                                     \
    template T scaled_offdiag<T>(const Matrix<T>&);                                                  \
    template class BlockJacobiSolver<T>;                                                             \
    template SvdResult<T> block_svd<T>(const Matrix<T>&, const BlockJacobiOptions<T>&);              \
    template std::vector<SvdResult<T>> batch_block_svd<T>(const MatrixBatch<T>&,                     \
                                                          const BlockJacobiOptions<T>&, std::size_t);

BATCHFACT_INSTANTIATE(float)
BATCHFACT_INSTANTIATE(double)

} // namespace batchfact
