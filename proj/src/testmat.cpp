#include <batchfact/testmat.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <batchfact/qr.hpp>
#include <batchfact/random.hpp>

namespace batchfact {

std::vector<double> spectrum(const SpectrumSpec& spec) {
    if (spec.n < 0)
        throw std::invalid_argument("spectrum: n must be >= 0");

    if (spec.mode == spectrum_mode_t::explicit_values) {
        if (static_cast<index_t>(spec.values.size()) != spec.n)
            throw std::invalid_argument("spectrum: expected " + std::to_string(spec.n) + " explicit values");
        if (!std::is_sorted(spec.values.rbegin(), spec.values.rend()) ||
            std::any_of(spec.values.begin(), spec.values.end(), [](double v) { return v < 0; }))
            throw std::invalid_argument("spectrum: explicit values must be non-negative and descending");
        return spec.values;
    }

    const index_t rank = spec.effective_rank();
    if (rank > spec.n || !(spec.cond >= 1.0))
        throw std::invalid_argument("spectrum: requires rank <= n and cond >= 1");

    std::vector<double> s(static_cast<std::size_t>(spec.n), 0.0);
    for (index_t i = 0; i < rank; ++i) {
        const double frac = rank > 1 ? double(i) / double(rank - 1) : 0.0;
        s[i] = spec.mode == spectrum_mode_t::geometric ? std::pow(spec.cond, -frac)
                                                        : 1.0 - frac * (1.0 - 1.0 / spec.cond);
    }
    return s;
}

template <typename T>
Matrix<T> random_orthonormal(index_t m, index_t n, std::uint64_t seed) {
    if (m < n)
        throw dimension_error("random_orthonormal: requires m >= n");
    auto f = qr(gaussian_matrix<T>(m, n, seed));
    for (index_t j = 0; j < n; ++j)
        if (f.R(j, j) < T(0))
            for (auto& v : f.Q.col(j))
                v = -v;
    return std::move(f.Q);
}

template <typename T>
TestMatrix<T> make_matrix(index_t m, const SpectrumSpec& spec, std::uint64_t seed) {
    const index_t n = spec.n;
    if (m < n)
        throw dimension_error("make_matrix: requires m >= n");
    const auto sigma = spectrum(spec);

    // assembled in double regardless of T
    const auto P = random_orthonormal<double>(m, n, seed);
    const auto Q = random_orthonormal<double>(n, n, mix64(derive_seed(seed, 0x5eedULL)));
    const auto Ad = multiply(scale_columns<double>(P, sigma), Q, op_t::normal, op_t::transposed);

    TestMatrix<T> out;
    out.A = Matrix<T>(m, n);
    for (index_t i = 0; i < Ad.size(); ++i)
        out.A.data()[i] = static_cast<T>(Ad.data()[i]);
    out.sigma.assign(sigma.begin(), sigma.end());
    return out;
}

template Matrix<float> random_orthonormal<float>(index_t, index_t, std::uint64_t);
template Matrix<double> random_orthonormal<double>(index_t, index_t, std::uint64_t);
template TestMatrix<float> make_matrix<float>(index_t, const SpectrumSpec&, std::uint64_t);
template TestMatrix<double> make_matrix<double>(index_t, const SpectrumSpec&, std::uint64_t);

} // namespace batchfact
