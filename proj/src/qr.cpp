#include <batchfact/qr.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace batchfact {

namespace {

//
// In-place reflector generation on x = (alpha, x2...). On return x[0] holds
// beta and x[1:] holds v[1:] (v[0] == 1 implied). Returns tau.
//
template <typename T>
T make_reflector(T* x, index_t len) {
    const T alpha = x[0];
    T xnorm2(0);
    for (index_t i = 1; i < len; ++i)
        xnorm2 += x[i] * x[i];
    if (xnorm2 == T(0))
        return T(0);

    const T beta = -std::copysign(std::sqrt(alpha * alpha + xnorm2), alpha);
    const T tau = (beta - alpha) / beta;
    const T scale = T(1) / (alpha - beta);
    for (index_t i = 1; i < len; ++i)
        x[i] *= scale;
    x[0] = beta;
    return tau;
}

// y <- (I - tau v v^T) y with v = (1, v[1:])
template <typename T>
void apply_reflector(const T* v, T tau, T* y, index_t len) {
    if (tau == T(0))
        return;
    T w = y[0];
    for (index_t i = 1; i < len; ++i)
        w += v[i] * y[i];
    w *= tau;
    y[0] -= w;
    for (index_t i = 1; i < len; ++i)
        y[i] -= w * v[i];
}

//
// Panel-wise factorization of W in place: R in the upper triangle, reflector
// tails below the diagonal. Returns the taus.
//
template <typename T>
std::vector<T> factor_in_place(Matrix<T>& W, index_t panel_width) {
    const index_t m = W.rows();
    const index_t n = W.cols();
    std::vector<T> tau(static_cast<std::size_t>(n), T(0));

    for (index_t j0 = 0; j0 < n; j0 += panel_width) {
        const index_t jend = std::min(j0 + panel_width, n);

        // factor the panel
        for (index_t j = j0; j < jend; ++j) {
            T* x = &W(j, j);
            tau[j] = make_reflector(x, m - j);
            for (index_t c = j + 1; c < jend; ++c)
                apply_reflector(x, tau[j], &W(j, c), m - j);
        }

        // apply the panel's reflectors to the trailing sub-matrix
        for (index_t c = jend; c < n; ++c)
            for (index_t j = j0; j < jend; ++j)
                apply_reflector(&W(j, j), tau[j], &W(j, c), m - j);
    }
    return tau;
}

template <typename T>
Matrix<T> extract_r(const Matrix<T>& W) {
    const index_t n = W.cols();
    Matrix<T> R(n, n);
    for (index_t j = 0; j < n; ++j)
        for (index_t i = 0; i <= j; ++i)
            R(i, j) = W(i, j);
    return R;
}

template <typename T>
void check_shape(const Matrix<T>& A, index_t panel_width) {
    if (A.rows() < A.cols())
        throw dimension_error("qr: requires rows >= cols, got " + std::to_string(A.rows()) + "x" +
                              std::to_string(A.cols()));
    if (panel_width < 1)
        throw std::invalid_argument("qr: panel_width must be >= 1");
}

} // namespace

template <typename T>
Reflector<T> householder_vector(std::span<const T> x) {
    if (x.empty())
        throw std::invalid_argument("householder_vector: empty vector");
    Reflector<T> h;
    h.v.assign(x.begin(), x.end());
    h.tau = make_reflector(h.v.data(), static_cast<index_t>(h.v.size()));
    if (h.tau == T(0)) {
        h.beta = x[0];
        std::fill(h.v.begin() + 1, h.v.end(), T(0));
    } else {
        h.beta = h.v[0];
    }
    h.v[0] = T(1);
    return h;
}

template <typename T>
QrResult<T> qr(const Matrix<T>& A, index_t panel_width) {
    check_shape(A, panel_width);
    const index_t m = A.rows();
    const index_t n = A.cols();

    Matrix<T> W = A;
    const auto tau = factor_in_place(W, panel_width);

    QrResult<T> res;
    res.R = extract_r(W);

    // Q = H_0 H_1 ... H_{n-1} I(:, 0:n), accumulated backwards
    res.Q = Matrix<T>::identity(m, n);
    for (index_t j = n - 1; j >= 0; --j)
        for (index_t c = j; c < n; ++c)
            apply_reflector(&W(j, j), tau[j], &res.Q(j, c), m - j);
    return res;
}

template <typename T>
Matrix<T> qr_r(const Matrix<T>& A, index_t panel_width) {
    check_shape(A, panel_width);
    Matrix<T> W = A;
    factor_in_place(W, panel_width);
    return extract_r(W);
}

template <typename T>
std::vector<QrResult<T>> batch_qr(const MatrixBatch<T>& batch, index_t panel_width, std::size_t threads) {
    return batch_apply(batch, [panel_width](const Matrix<T>& A) { return qr(A, panel_width); }, threads);
}

#define BATCHFACT_INSTANTIATE(T)                                                                     \
    template Reflector<T> householder_vector<T>(std::span<const T>);                                 \
    template QrResult<T> qr<T>(const Matrix<T>&, index_t);                                           \
    template Matrix<T> qr_r<T>(const Matrix<T>&, index_t);                                           \
    template std::vector<QrResult<T>> batch_qr<T>(const MatrixBatch<T>&, index_t, std::size_t);

BATCHFACT_INSTANTIATE(float)
BATCHFACT_INSTANTIATE(double)

} // namespace batchfact
