#include <batchfact/rsvd.hpp>

#include <string>

#include <batchfact/batch.hpp>
#include <batchfact/qr.hpp>
#include <batchfact/random.hpp>

namespace batchfact {

template <typename T>
Matrix<T> TruncatedSvd<T>::reconstruct() const {
    return multiply(scale_columns<T>(U, S), V, op_t::normal, op_t::transposed);
}

namespace {

template <typename T>
void validate(const Matrix<T>& A, const RsvdOptions<T>& opts) {
    if (opts.k < 1 || opts.p < 0)
        throw std::invalid_argument("rsvd: requires k >= 1 and p >= 0");
    if (opts.samples() > std::min(A.rows(), A.cols()))
        throw dimension_error("rsvd: k + p = " + std::to_string(opts.samples()) + " exceeds min(m, n) of a " +
                              std::to_string(A.rows()) + "x" + std::to_string(A.cols()) + " matrix");
    if (opts.q_iterations != 0)
        throw std::invalid_argument("rsvd: subspace iteration is not supported (q_iterations must be 0)");
}

} // namespace

template <typename T>
Matrix<T> range_finder(const Matrix<T>& A, index_t samples, std::uint64_t seed) {
    const auto omega = gaussian_matrix<T>(A.cols(), samples, seed);
    const auto Y = multiply(A, omega);
    return qr(Y).Q;
}

template <typename T>
TruncatedSvd<T> rsvd(const Matrix<T>& A, const RsvdOptions<T>& opts) {
    validate(A, opts);

    const auto Q = range_finder(A, opts.samples(), opts.seed);
    const auto B = multiply(Q, A, op_t::transposed, op_t::normal);
    const auto fb = qr(B.transpose());

    auto inner = opts.inner;
    inner.accumulate_v = true;
    auto s = svd(fb.R.transpose(), inner);

    TruncatedSvd<T> out;
    out.U = multiply(Q, s.U);
    out.V = multiply(fb.Q, *s.V);
    out.S = std::move(s.sigma);
    out.converged = s.converged;
    return out;
}

template <typename T>
std::vector<TruncatedSvd<T>> batch_rsvd(const MatrixBatch<T>& batch, const RsvdOptions<T>& opts,
                                        std::size_t threads) {
    std::vector<std::size_t> idx(batch.count());
    for (std::size_t i = 0; i < idx.size(); ++i)
        idx[i] = i;
    return batch_apply(
        std::span<const std::size_t>(idx),
        [&](std::size_t i) {
            auto o = opts;
            o.seed = opts.seed ^ static_cast<std::uint64_t>(i);
            return rsvd(batch[i], o);
        },
        threads);
}

#define BATCHFACT_INSTANTIATE(T)                                                                     \
    template struct TruncatedSvd<T>;                                                                 \
    template Matrix<T> range_finder<T>(const Matrix<T>&, index_t, std::uint64_t);                    \
    template TruncatedSvd<T> rsvd<T>(const Matrix<T>&, const RsvdOptions<T>&);                       \
    template std::vector<TruncatedSvd<T>> batch_rsvd<T>(const MatrixBatch<T>&, const RsvdOptions<T>&, \
                                                        std::size_t);

BATCHFACT_INSTANTIATE(float)
BATCHFACT_INSTANTIATE(double)

} // namespace batchfact
