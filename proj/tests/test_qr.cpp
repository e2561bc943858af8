#include <doctest.h>

#include <cmath>
#include <limits>

#include <batchfact/qr.hpp>
#include <batchfact/random.hpp>
#include <batchfact/testmat.hpp>

using namespace batchfact;

namespace {

// x - tau v (v^T x)
std::vector<double> reflect(const Reflector<double>& h, const std::vector<double>& x) {
    double vx = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        vx += h.v[i] * x[i];
    auto y = x;
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] -= h.tau * h.v[i] * vx;
    return y;
}

template <typename T>
void check_factors(const Matrix<T>& A, const QrResult<T>& f, double resid_tol, double orth_tol) {
    REQUIRE(f.Q.rows() == A.rows());
    REQUIRE(f.Q.cols() == A.cols());
    REQUIRE(f.R.rows() == A.cols());
    REQUIRE(f.R.cols() == A.cols());
    const double nrm = frobenius(A);
    CHECK(double(frobenius_diff(A, multiply(f.Q, f.R))) <= resid_tol * nrm);
    CHECK(double(orthogonality_error(f.Q)) <= orth_tol);
    for (index_t j = 0; j < f.R.cols(); ++j)
        for (index_t i = j + 1; i < f.R.rows(); ++i)
            REQUIRE(f.R(i, j) == T(0));
}

} // namespace

TEST_CASE("householder vector examples") {
    SUBCASE("already collinear with e1") {
        const std::vector<double> x{5, 0, 0};
        const auto h = householder_vector<double>(x);
        CHECK(h.tau == 0.0);
        CHECK(std::abs(h.beta) == 5.0);
        CHECK(reflect(h, x) == x);
    }
    SUBCASE("opposite sign convention") {
        const std::vector<double> x{3, 4};
        const auto h = householder_vector<double>(x);
        CHECK(h.v[0] == 1.0);
        CHECK(h.beta == doctest::Approx(-5.0).epsilon(1e-15));
        const auto y = reflect(h, x);
        CHECK(y[0] == doctest::Approx(-5.0).epsilon(1e-15));
        CHECK(std::abs(y[1]) <= 1e-15);
    }
    SUBCASE("zero vector") {
        const std::vector<double> x{0, 0};
        const auto h = householder_vector<double>(x);
        CHECK(h.tau == 0.0);
        CHECK(reflect(h, x) == x);
    }
    SUBCASE("empty vector") {
        CHECK_THROWS_AS(householder_vector<double>(std::vector<double>{}), std::invalid_argument);
    }
}

TEST_CASE("qr examples") {
    SUBCASE("identity") {
        for (index_t pw : {1, 2, 3, 16}) {
            const auto f = qr(Matrix<double>::identity(4), pw);
            CHECK(f.Q == Matrix<double>::identity(4));
            CHECK(f.R == Matrix<double>::identity(4));
        }
    }
    SUBCASE("single column") {
        const auto f = qr(Matrix<double>::from_rows({{3}, {4}}));
        CHECK(std::abs(f.R(0, 0)) == doctest::Approx(5.0).epsilon(1e-15));
        const double s = f.R(0, 0) > 0 ? 1.0 : -1.0;
        CHECK(s * f.Q(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
        CHECK(s * f.Q(1, 0) == doctest::Approx(0.8).epsilon(1e-15));
    }
    SUBCASE("random 64x32, panel width 16") {
        const auto A = gaussian_matrix<double>(64, 32, 11);
        check_factors(A, qr(A, 16), 1e-14, 1e-14);
    }
    SUBCASE("shape and argument errors") {
        CHECK_THROWS_AS(qr(Matrix<double>(2, 3)), dimension_error);
        CHECK_THROWS_AS(qr(Matrix<double>(3, 2), 0), std::invalid_argument);
    }
}

TEST_CASE("qr stability bounds over conditioning and panel widths") {
    const double eps = std::numeric_limits<double>::epsilon();
    for (const double cond : {1.0, 1e3, 1e7})
        for (index_t pw : {1, 5, 16, 40})
            for (std::uint64_t seed = 0; seed < 5; ++seed) {
                const index_t m = 50, n = 24;
                const auto A = make_matrix<double>(m, {n, spectrum_mode_t::geometric, cond, -1, {}}, seed).A;
                check_factors(A, qr(A, pw), 100.0 * n * eps, 100.0 * n * eps);
            }
}

TEST_CASE("qr in single precision") {
    const auto A = gaussian_matrix<float>(40, 20, 3);
    const double eps = std::numeric_limits<float>::epsilon();
    check_factors(A, qr(A), 100.0 * 20 * eps, 100.0 * 20 * eps);
}

TEST_CASE("zero columns give identity reflectors") {
    auto A = gaussian_matrix<double>(10, 4, 5);
    for (index_t i = 0; i < 10; ++i)
        A(i, 1) = 0.0;
    const auto f = qr(A);
    for (index_t i = 0; i < 4; ++i)
        CHECK(f.R(i, 1) == 0.0);
    check_factors(A, f, 1e-14, 1e-14);
}

TEST_CASE("batch qr") {
    SUBCASE("identities") {
        MatrixBatch<double> b;
        for (int i = 0; i < 3; ++i)
            b.push_back(Matrix<double>::identity(5));
        for (const auto& f : batch_qr(b)) {
            CHECK(f.Q == Matrix<double>::identity(5));
            CHECK(f.R == Matrix<double>::identity(5));
        }
    }
    SUBCASE("empty") {
        CHECK(batch_qr(MatrixBatch<double>{}).empty());
    }
    SUBCASE("1000 random 64x32") {
        MatrixBatch<double> b;
        for (std::uint64_t i = 0; i < 1000; ++i)
            b.push_back(gaussian_matrix<double>(64, 32, derive_seed(99, i)));
        const auto out = batch_qr(b);
        double worst = 0;
        for (std::size_t i = 0; i < b.count(); ++i)
            worst = std::max(worst, frobenius_diff(b[i], multiply(out[i].Q, out[i].R)) / frobenius(b[i]));
        CHECK(worst <= 1e-13);
    }
    SUBCASE("errors carry the entry index") {
        MatrixBatch<double> b;
        b.push_back(Matrix<double>::identity(3));
        b.push_back(Matrix<double>(2, 3));
        CHECK_THROWS_AS(batch_qr(b), batch_error);
    }
}
