#include <doctest.h>

#include <cmath>
#include <numeric>

#include <batchfact/jacobi.hpp>
#include <batchfact/random.hpp>
#include <batchfact/rsvd.hpp>
#include <batchfact/testmat.hpp>

using namespace batchfact;

namespace {

Matrix<double> low_rank(index_t m, index_t n, index_t k, std::uint64_t seed) {
    const auto X = gaussian_matrix<double>(m, k, seed);
    const auto Y = gaussian_matrix<double>(n, k, ~seed);
    return multiply(X, Y, op_t::normal, op_t::transposed);
}

double rel_error(const Matrix<double>& A, const TruncatedSvd<double>& r) {
    return frobenius_diff(A, r.reconstruct()) / frobenius(A);
}

// optimal rank-k error from the prescribed spectrum
double tail_norm(const std::vector<double>& sigma, std::size_t k) {
    double s = 0;
    for (std::size_t i = k; i < sigma.size(); ++i)
        s += sigma[i] * sigma[i];
    return std::sqrt(s);
}

} // namespace

TEST_CASE("gaussian matrix") {
    CHECK(gaussian_matrix<double>(2, 2, 17) == gaussian_matrix<double>(2, 2, 17));
    CHECK(gaussian_matrix<double>(2, 2, 17) != gaussian_matrix<double>(2, 2, 18));
    CHECK(gaussian_matrix<double>(0, 5, 1).empty());

    const auto x = gaussian_matrix<double>(1000, 1, 123);
    const auto c = x.col(0);
    const double mean = std::accumulate(c.begin(), c.end(), 0.0) / 1000;
    double var = 0;
    for (const double v : c)
        var += (v - mean) * (v - mean);
    var /= 999;
    CHECK(std::abs(mean) <= 0.1);
    CHECK(std::abs(var - 1) <= 0.15);

    // entries depend only on the position, not on the matrix shape
    const auto a = gaussian_matrix<double>(6, 1, 5), b = gaussian_matrix<double>(6, 3, 5);
    CHECK(a == b.columns(0, 1));
}

TEST_CASE("rsvd of an exact low rank matrix") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto A = low_rank(60, 40, 7, seed);
        RsvdOptions<double> o;
        o.k = 7;
        o.p = 0;
        o.seed = seed;
        const auto r = rsvd(A, o);
        CHECK(r.U.cols() == 7);
        CHECK(r.V.cols() == 7);
        CHECK(rel_error(A, r) <= 1e-12);
    }
}

TEST_CASE("rsvd of an explicit diagonal") {
    Matrix<double> A(10, 10);
    for (index_t i = 0; i < 10; ++i)
        A(i, i) = std::pow(10.0, -double(i));
    RsvdOptions<double> o;
    o.k = 4;
    o.p = 3;
    o.seed = 3;
    const auto r = rsvd(A, o);
    REQUIRE(r.S.size() == 7);
    for (index_t i = 0; i < 4; ++i)
        CHECK(r.S[i] == doctest::Approx(A(i, i)).epsilon(1e-6));
}

TEST_CASE("rsvd error on a slowly decaying spectrum") {
    SpectrumSpec spec{64, spectrum_mode_t::explicit_values, 1, -1, {}};
    for (int i = 1; i <= 64; ++i)
        spec.values.push_back(1.0 / i);
    const auto tm = make_matrix<double>(80, spec, 11);
    const double opt = tail_norm(spectrum(spec), 16);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        RsvdOptions<double> o;
        o.k = 16;
        o.p = 8;
        o.seed = seed;
        const auto r = rsvd(tm.A, o);
        CHECK(frobenius_diff(tm.A, r.reconstruct()) <= 10 * opt);
    }
}

TEST_CASE("range finder quality on geometric decay") {
    const auto tm = make_matrix<double>(70, {50, spectrum_mode_t::geometric, 1e8, -1, {}}, 4);
    const index_t k = 10;
    const double opt = tail_norm(std::vector<double>(tm.sigma.begin(), tm.sigma.end()), k);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto Q = range_finder(tm.A, k + 8, seed);
        CHECK(orthogonality_error(Q) <= 1e-13);
        auto R = tm.A;
        gemm(-1.0, Q, op_t::normal, multiply(Q, tm.A, op_t::transposed), op_t::normal, 1.0, R);
        CHECK(frobenius(R) <= 10 * opt);
    }
}

TEST_CASE("rsvd factors are orthonormal and sorted") {
    const auto A = gaussian_matrix<double>(50, 30, 8);
    RsvdOptions<double> o;
    o.k = 10;
    o.p = 5;
    const auto r = rsvd(A, o);
    CHECK(orthogonality_error(r.U) <= 1e-12);
    CHECK(orthogonality_error(r.V) <= 1e-12);
    CHECK(std::is_sorted(r.S.rbegin(), r.S.rend()));
    CHECK(r.S.back() >= 0.0);
}

TEST_CASE("rsvd agrees with the full svd on rapid decay") {
    const auto tm = make_matrix<double>(64, {64, spectrum_mode_t::geometric, 1e60, -1, {}}, 2);
    const auto full = svd(tm.A);
    RsvdOptions<double> o;
    o.k = 10;
    o.p = 8;
    const auto r = rsvd(tm.A, o);
    for (index_t i = 0; i < 10; ++i)
        CHECK(std::abs(r.S[i] - full.sigma[i]) <= 1e-8 * full.sigma[0]);
}

TEST_CASE("rsvd argument errors") {
    const auto A = gaussian_matrix<double>(10, 6, 1);
    RsvdOptions<double> o;
    o.k = 5;
    o.p = 2;
    CHECK_THROWS(rsvd(A, o));
    o.k = 0;
    o.p = 1;
    CHECK_THROWS(rsvd(A, o));
    o.k = 2;
    o.q_iterations = 1;
    CHECK_THROWS(rsvd(A, o));
}

TEST_CASE("batch rsvd") {
    SUBCASE("exact rank entries") {
        MatrixBatch<double> b;
        for (std::uint64_t i = 0; i < 8; ++i)
            b.push_back(low_rank(40, 30, 5, i));
        RsvdOptions<double> o;
        o.k = 5;
        o.p = 2;
        o.seed = 77;
        const auto out = batch_rsvd(b, o);
        for (std::size_t i = 0; i < b.count(); ++i) {
            CHECK(rel_error(b[i], out[i]) <= 1e-12);
            auto oi = o;
            oi.seed = derive_seed(o.seed, i);
            CHECK(out[i].S == rsvd(b[i], oi).S);
        }
    }
    SUBCASE("empty") {
        CHECK(batch_rsvd(MatrixBatch<double>{}, RsvdOptions<double>{}).empty());
    }
}
