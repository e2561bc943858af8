#include <batchfact/random.hpp>

#include <cmath>
#include <numbers>

namespace batchfact {

std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t CounterRng::bits(std::uint64_t counter) const noexcept {
    return mix64(mix64(seed_) ^ (counter * 0xd1b54a32d192ed03ULL));
}

double CounterRng::uniform(std::uint64_t counter) const noexcept {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t index) const noexcept {
    const double u1 = uniform(2 * index);
    const double u2 = uniform(2 * index + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

template <typename T>
Matrix<T> gaussian_matrix(index_t rows, index_t cols, std::uint64_t seed) {
    Matrix<T> G(rows, cols);
    const CounterRng rng(seed);
    for (index_t i = 0; i < G.size(); ++i)
        G.data()[i] = static_cast<T>(rng.normal(static_cast<std::uint64_t>(i)));
    return G;
}

template Matrix<float> gaussian_matrix<float>(index_t, index_t, std::uint64_t);
template Matrix<double> gaussian_matrix<double>(index_t, index_t, std::uint64_t);

} // namespace batchfact
