#pragma once

//
// Counter-based random numbers: the value at position i of stream `seed` is a
// pure function of (seed, i), so generated matrices do not depend on the
// order or the thread in which entries are produced.
//

#include <cstdint>

#include <batchfact/matrix.hpp>

namespace batchfact {

class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

    std::uint64_t bits(std::uint64_t counter) const noexcept;

    // uniform on the open interval (0, 1)
    double uniform(std::uint64_t counter) const noexcept;

    // standard normal via Box-Muller on counters 2i and 2i+1
    double normal(std::uint64_t index) const noexcept;

    std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
};

// splitmix64 finalizer
std::uint64_t mix64(std::uint64_t x) noexcept;

// seed of a derived, independent stream
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) noexcept {
    return seed ^ salt;
}

// i.i.d. standard normal entries; entry (i, j) uses counter i + j * rows
template <typename T>
Matrix<T> gaussian_matrix(index_t rows, index_t cols, std::uint64_t seed);

} // namespace batchfact
