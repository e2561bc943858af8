#include <doctest.h>

#include <cmath>
#include <limits>

#include <batchfact/block_jacobi.hpp>
#include <batchfact/qr.hpp>
#include <batchfact/random.hpp>
#include <batchfact/testmat.hpp>

using namespace batchfact;

namespace {

template <typename T>
double max_rel_diff(const std::vector<T>& a, const std::vector<T>& b) {
    REQUIRE(a.size() == b.size());
    double w = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        w = std::max(w, std::abs(double(a[i]) - double(b[i])) / std::max(std::abs(double(b[i])), 1e-300));
    return w;
}

// ||(I - Q Q^T) B||_F / ||B||_F for orthonormal Q
double projection_residual(const Matrix<double>& Q, const Matrix<double>& B) {
    auto R = B;
    gemm(-1.0, Q, op_t::normal, multiply(Q, B, op_t::transposed), op_t::normal, 1.0, R);
    return frobenius(R) / frobenius(B);
}

} // namespace

TEST_CASE("scaled off-diagonal examples") {
    CHECK(scaled_offdiag(Matrix<double>::from_rows({{4, 0}, {0, 9}})) == 0.0);
    CHECK(scaled_offdiag(Matrix<double>::from_rows({{4, 2}, {2, 9}})) == doctest::Approx(1.0 / 3).epsilon(1e-15));
    auto G = Matrix<double>::identity(3);
    G(0, 2) = G(2, 0) = 1e-16;
    CHECK(scaled_offdiag(G) == 1e-16);
    CHECK(scaled_offdiag(Matrix<double>::from_rows({{0, 0}, {0, 1}})) == 0.0);
    CHECK(std::isinf(scaled_offdiag(Matrix<double>::from_rows({{0, 1}, {1, 1}}))));
    CHECK_THROWS_AS(scaled_offdiag(Matrix<double>(2, 3)), dimension_error);
}

TEST_CASE("identity converges in one sweep without rotations") {
    for (const auto method : {block_method_t::gram, block_method_t::direct}) {
        BlockJacobiOptions<double> o;
        o.block_width = 16;
        o.method = method;
        const auto s = block_svd(Matrix<double>::identity(64), o);
        CHECK(s.converged);
        CHECK(s.sweeps == 1);
        CHECK(s.rotations == 0);
        CHECK(s.sigma == std::vector<double>(64, 1.0));
    }
}

TEST_CASE("direct method on an ill-conditioned 128x128") {
    const auto tm = make_matrix<double>(128, {128, spectrum_mode_t::geometric, 1e7, -1, {}}, 42);
    BlockJacobiOptions<double> o;
    o.method = block_method_t::direct;
    const auto s = block_svd(tm.A, o);
    CHECK(s.converged);
    CHECK(max_rel_diff(s.sigma, tm.sigma) <= 1e-9);
}

TEST_CASE("single precision, cond 1e7") {
    const auto tm = make_matrix<float>(128, {128, spectrum_mode_t::geometric, 1e7, -1, {}}, 42);
    BlockJacobiOptions<float> o;

    SUBCASE("direct converges") {
        o.method = block_method_t::direct;
        const auto s = block_svd(tm.A, o);
        CHECK(s.converged);
        CHECK(orthogonality_error(s.U) <= 1e-4f);
    }
    SUBCASE("gram converges or reports failure cleanly") {
        o.method = block_method_t::gram;
        const auto s = block_svd(tm.A, o);
        REQUIRE(s.sigma.size() == 128);
        for (const float v : s.sigma)
            CHECK(std::isfinite(v));
        if (s.converged) {
            double worst = 0;
            for (std::size_t i = 0; i < s.sigma.size(); ++i)
                worst = std::max(worst, std::abs(double(s.sigma[i]) - double(tm.sigma[i])));
            CHECK(worst <= 1e-4 * tm.sigma[0]);
        }
    }
    SUBCASE("sweep cap gives a clean non-converged result") {
        o.method = block_method_t::gram;
        o.max_sweeps = 1;
        const auto s = block_svd(tm.A, o);
        CHECK_FALSE(s.converged);
        CHECK(s.sweeps == 1);
        CHECK(s.sigma.size() == 128);
    }
}

TEST_CASE("global orthogonality after convergence") {
    for (const auto method : {block_method_t::gram, block_method_t::direct})
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
            const auto A = make_matrix<double>(96, {80, spectrum_mode_t::geometric, 1e4, -1, {}}, seed).A;
            BlockJacobiOptions<double> o;
            o.method = method;
            o.block_width = 8;
            BlockJacobiSolver<double> solver(A, o);
            while (!solver.converged() && solver.sweeps() < o.max_sweeps)
                solver.sweep();
            REQUIRE(solver.converged());
            CHECK(off_orthogonality(solver.working_matrix()) <= 10 * o.tolerance);
        }
}

TEST_CASE("a gram update preserves the frobenius norm") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto A = gaussian_matrix<double>(40, 16, seed);
        BlockJacobiOptions<double> o;
        o.method = block_method_t::gram;
        o.block_width = 8; // one block pair, one update per sweep
        BlockJacobiSolver<double> solver(A, o);
        solver.sweep();
        const double before = frobenius(A), after = frobenius(solver.working_matrix());
        CHECK(std::abs(before - after) <= 1e-13 * before);
    }
}

TEST_CASE("a direct update keeps the column span") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto A = gaussian_matrix<double>(40, 16, seed);
        BlockJacobiOptions<double> o;
        o.method = block_method_t::direct;
        o.block_width = 8;
        BlockJacobiSolver<double> solver(A, o);
        solver.sweep();
        const auto W = solver.working_matrix();
        CHECK(projection_residual(qr(A).Q, W) <= 1e-12);
        CHECK(projection_residual(qr(W).Q, A) <= 1e-12);
    }
}

TEST_CASE("a single gram block pair matches plain jacobi") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto A = make_matrix<double>(40, {20, spectrum_mode_t::geometric, 1e3, -1, {}}, seed).A;
        BlockJacobiOptions<double> o;
        o.method = block_method_t::gram;
        o.block_width = 10;
        const auto s = block_svd(A, o);
        CHECK(s.converged);
        CHECK(max_rel_diff(s.sigma, svd(A).sigma) <= 1e-10);
    }
}

TEST_CASE("accumulated V reconstructs the input") {
    const auto A = make_matrix<double>(50, {37, spectrum_mode_t::geometric, 1e5, -1, {}}, 9).A;
    for (const auto method : {block_method_t::gram, block_method_t::direct}) {
        BlockJacobiOptions<double> o;
        o.method = method;
        o.block_width = 6;
        o.accumulate_v = true;
        const auto s = block_svd(A, o);
        REQUIRE(s.V);
        const auto R = multiply(scale_columns<double>(s.U, s.sigma), *s.V, op_t::normal, op_t::transposed);
        CHECK(frobenius_diff(A, R) <= 1e-13 * frobenius(A));
        CHECK(orthogonality_error(*s.V) <= 100 * 37 * std::numeric_limits<double>::epsilon());
    }
}

TEST_CASE("shape errors") {
    CHECK_THROWS_AS(block_svd(Matrix<double>(3, 4)), dimension_error);
}

TEST_CASE("batch block svd") {
    SUBCASE("identities") {
        MatrixBatch<double> b;
        for (int i = 0; i < 4; ++i)
            b.push_back(Matrix<double>::identity(32));
        BlockJacobiOptions<double> o;
        o.block_width = 8;
        for (const auto& s : batch_block_svd(b, o)) {
            CHECK(s.converged);
            CHECK(s.sweeps == 1);
        }
    }
    SUBCASE("a non-converging entry does not affect the others") {
        MatrixBatch<float> b;
        b.push_back(make_matrix<float>(64, {64, spectrum_mode_t::geometric, 10.0f, -1, {}}, 1).A);
        b.push_back(make_matrix<float>(128, {128, spectrum_mode_t::geometric, 1e7, -1, {}}, 42).A);
        b.push_back(make_matrix<float>(64, {64, spectrum_mode_t::geometric, 10.0f, -1, {}}, 2).A);
        BlockJacobiOptions<float> o;
        o.method = block_method_t::gram;
        o.max_sweeps = 2;
        const auto out = batch_block_svd(b, o);
        CHECK(out[0].converged);
        CHECK_FALSE(out[1].converged);
        CHECK(out[2].converged);
        CHECK(out[0].sigma == block_svd(b[0], o).sigma);
    }
}
