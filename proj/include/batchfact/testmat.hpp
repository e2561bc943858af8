#pragma once

//
// Test matrices with a prescribed singular spectrum, A = P diag(sigma) Q^T
// with random orthonormal P and Q. The prescribed sigma is returned along
// with A and serves as the reference for SVD tests.
//

#include <cstdint>
#include <vector>

#include <batchfact/matrix.hpp>

namespace batchfact {

enum class spectrum_mode_t { geometric, arithmetic, explicit_values };

struct SpectrumSpec {
    index_t n = 0;
    spectrum_mode_t mode = spectrum_mode_t::geometric;
    double cond = 1.0;
    index_t rank = -1;          // < 0 means full rank
    std::vector<double> values; // explicit_values mode only

    index_t effective_rank() const noexcept { return rank < 0 ? n : rank; }
};

// sigma_1 = 1, sigma_rank = 1/cond, zeros beyond rank (explicit mode: the values)
std::vector<double> spectrum(const SpectrumSpec& spec);

// Q factor of a Gaussian m x n matrix with columns signed so that diag(R) > 0
template <typename T>
Matrix<T> random_orthonormal(index_t m, index_t n, std::uint64_t seed);

template <typename T>
struct TestMatrix {
    Matrix<T> A;
    std::vector<T> sigma; // the exact spectrum used to build A
};

template <typename T>
TestMatrix<T> make_matrix(index_t m, const SpectrumSpec& spec, std::uint64_t seed);

} // namespace batchfact
