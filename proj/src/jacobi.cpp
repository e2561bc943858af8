#include <batchfact/jacobi.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "kernels.hpp"

namespace batchfact {

template <typename T>
std::pair<T, T> jacobi_rotation(T g_pp, T g_pq, T g_qq) {
    if (g_pq == T(0))
        return {T(1), T(0)};
    const T zeta = (g_qq - g_pp) / (T(2) * g_pq);
    // hypot keeps sqrt(1 + zeta^2) finite for huge zeta
    const T t = std::copysign(T(1), zeta) / (std::abs(zeta) + std::hypot(T(1), zeta));
    const T c = T(1) / std::sqrt(T(1) + t * t);
    return {c, c * t};
}

template <typename T>
T off_orthogonality(const Matrix<T>& A) {
    const index_t n = A.cols();
    std::vector<T> norms(static_cast<std::size_t>(n));
    for (index_t j = 0; j < n; ++j)
        norms[j] = norm2<T>(A.col(j));

    T worst(0);
    for (index_t j = 1; j < n; ++j) {
        if (norms[j] == T(0))
            continue;
        for (index_t i = 0; i < j; ++i) {
            if (norms[i] == T(0))
                continue;
            const T c = std::abs(dot<T>(A.col(i), A.col(j))) / (norms[i] * norms[j]);
            worst = std::max(worst, c);
        }
    }
    return worst;
}

PairSchedule round_robin_schedule(index_t n) {
    if (n < 2 || n % 2 != 0)
        throw std::invalid_argument("round_robin_schedule: n must be even and >= 2, got " + std::to_string(n));

    PairSchedule sched;
    sched.n = n;
    sched.steps.reserve(static_cast<std::size_t>(n - 1));

    std::vector<index_t> pos(static_cast<std::size_t>(n));
    std::iota(pos.begin(), pos.end(), index_t(0));

    for (index_t step = 0; step < n - 1; ++step) {
        std::vector<std::pair<index_t, index_t>> pairs;
        pairs.reserve(static_cast<std::size_t>(n / 2));
        for (index_t i = 0; i < n / 2; ++i) {
            const index_t a = pos[i];
            const index_t b = pos[n - 1 - i];
            pairs.emplace_back(std::min(a, b), std::max(a, b));
        }
        sched.steps.push_back(std::move(pairs));
        // keep position 0 fixed, rotate the rest by one
        std::rotate(pos.begin() + 1, pos.end() - 1, pos.end());
    }
    return sched;
}

namespace detail {

template <typename T>
void extract_svd(Matrix<T> W, std::optional<Matrix<T>> V, SvdResult<T>& out) {
    const index_t m = W.rows();
    const index_t n = W.cols();

    std::vector<T> norms(static_cast<std::size_t>(n));
    for (index_t j = 0; j < n; ++j)
        norms[j] = norm2<T>(W.col(j));

    std::vector<index_t> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), index_t(0));
    std::stable_sort(order.begin(), order.end(), [&](index_t a, index_t b) { return norms[a] > norms[b]; });

    out.U = Matrix<T>(m, n);
    out.sigma.resize(static_cast<std::size_t>(n));
    index_t nonzero = 0;
    for (index_t k = 0; k < n; ++k) {
        const index_t j = order[k];
        const T s = norms[j];
        out.sigma[k] = s;
        if (s > T(0)) {
            auto src = W.col(j);
            auto dst = out.U.col(k);
            for (index_t i = 0; i < m; ++i)
                dst[i] = src[i] / s;
            ++nonzero;
        }
    }

    // complete the columns of zero singular values from canonical vectors
    index_t candidate = 0;
    for (index_t k = nonzero; k < n; ++k) {
        auto u = out.U.col(k);
        for (; candidate < m; ++candidate) {
            std::fill(u.begin(), u.end(), T(0));
            u[candidate] = T(1);
            for (int pass = 0; pass < 2; ++pass)
                for (index_t p = 0; p < k; ++p) {
                    const auto q = out.U.col(p);
                    const T h = dot<T>(q, u);
                    for (index_t i = 0; i < m; ++i)
                        u[i] -= h * q[i];
                }
            const T nrm = norm2<T>(u);
            if (nrm > T(0.5)) {
                for (auto& x : u)
                    x /= nrm;
                ++candidate;
                break;
            }
        }
    }

    if (V) {
        Matrix<T> Vs(V->rows(), n);
        for (index_t k = 0; k < n; ++k) {
            const auto src = V->col(order[k]);
            std::copy(src.begin(), src.end(), Vs.col(k).begin());
        }
        out.V = std::move(Vs);
    } else {
        out.V.reset();
    }
}

} // namespace detail

namespace {

//
// Sweeps over the columns of W until a full sweep performs no rotation.
// A pair is rotated only if |g_pq| > tol * sqrt(g_pp) * sqrt(g_qq).
//
template <typename T>
void orthogonalize(Matrix<T>& W, Matrix<T>* V, const JacobiOptions<T>& opts, SvdResult<T>& out) {
    const index_t m = W.rows();
    const index_t n = W.cols();
    const index_t vrows = V ? V->rows() : 0;
    const T tol = opts.tolerance;

    std::size_t rotations = 0;
    T worst(0);
    auto visit = [&](index_t p, index_t q) {
        T* ap = W.data() + p * m;
        T* aq = W.data() + q * m;
        T gpp, gpq, gqq;
        kernels::gram2(ap, aq, m, gpp, gpq, gqq);
        if (gpp == T(0) || gqq == T(0))
            return;
        const T scale = std::sqrt(gpp) * std::sqrt(gqq);
        worst = std::max(worst, std::abs(gpq) / scale);
        if (std::abs(gpq) <= tol * scale)
            return;
        const auto [c, s] = jacobi_rotation(gpp, gpq, gqq);
        kernels::rotate(ap, aq, m, c, s);
        if (V)
            kernels::rotate(V->data() + p * vrows, V->data() + q * vrows, vrows, c, s);
        ++rotations;
    };

    std::optional<PairSchedule> sched;
    if (opts.ordering == ordering_t::round_robin && n >= 2)
        sched = round_robin_schedule(n);

    out.converged = false;
    out.sweeps = 0;
    out.rotations = 0;
    out.sweep_offdiag.clear();
    for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
        rotations = 0;
        worst = T(0);
        if (sched) {
            for (const auto& step : sched->steps)
                for (const auto& [p, q] : step)
                    visit(p, q);
        } else {
            for (index_t p = 0; p + 1 < n; ++p)
                for (index_t q = p + 1; q < n; ++q)
                    visit(p, q);
        }
        ++out.sweeps;
        out.rotations += rotations;
        out.sweep_offdiag.push_back(worst);
        if (rotations == 0) {
            out.converged = true;
            break;
        }
    }
}

} // namespace

template <typename T>
SvdResult<T> svd(const Matrix<T>& A, const JacobiOptions<T>& opts) {
    const index_t m = A.rows();
    const index_t n = A.cols();
    if (n < 1 || m < n)
        throw dimension_error("svd: requires rows >= cols >= 1, got " + std::to_string(m) + "x" + std::to_string(n));
    if (!(opts.tolerance > T(0)) || opts.max_sweeps < 1)
        throw std::invalid_argument("svd: tolerance must be > 0 and max_sweeps >= 1");

    // the round-robin schedule needs an even column count
    const bool pad = opts.ordering == ordering_t::round_robin && n % 2 != 0;
    const index_t nw = pad ? n + 1 : n;

    Matrix<T> W(m, nw);
    W.set_block(0, 0, A);

    std::optional<Matrix<T>> V;
    if (opts.accumulate_v)
        V = Matrix<T>::identity(nw);

    SvdResult<T> out;
    orthogonalize(W, V ? &*V : nullptr, opts, out);

    if (pad) {
        // the padding column is zero and never rotated
        W = W.columns(0, n);
        if (V)
            V = V->block(0, 0, n, n);
    }
    detail::extract_svd(std::move(W), std::move(V), out);
    return out;
}

template <typename T>
std::vector<SvdResult<T>> batch_svd(const MatrixBatch<T>& batch, const JacobiOptions<T>& opts, std::size_t threads) {
    return batch_apply(batch, [&opts](const Matrix<T>& A) { return svd(A, opts); }, threads);
}

#define BATCHFACT_INSTANTIATE(T)                                                                     \
    template std::pair<T, T> jacobi_rotation<T>(T, T, T);                                            \
    template T off_orthogonality<T>(const Matrix<T>&);                                               \
    template SvdResult<T> svd<T>(const Matrix<T>&, const JacobiOptions<T>&);                         \
    template std::vector<SvdResult<T>> batch_svd<T>(const MatrixBatch<T>&, const JacobiOptions<T>&,  \
                                                    std::size_t);                                    \
    template void detail::extract_svd<T>(Matrix<T>, std::optional<Matrix<T>>, SvdResult<T>&);

BATCHFACT_INSTANTIATE(float)
BATCHFACT_INSTANTIATE(double)

} // namespace batchfact
