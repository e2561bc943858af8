#include <doctest.h>

#include <atomic>
#include <stdexcept>

#include <batchfact/batch.hpp>
#include <batchfact/jacobi.hpp>
#include <batchfact/random.hpp>

using namespace batchfact;

TEST_CASE("batch_apply maps every entry") {
    MatrixBatch<double> b;
    for (int i = 0; i < 3; ++i)
        b.push_back(Matrix<double>::identity(4));
    const auto out = batch_apply(b, [](const Matrix<double>& A) { return syrk(A); });
    REQUIRE(out.size() == 3);
    for (const auto& G : out)
        CHECK(G == Matrix<double>::identity(4));
}

TEST_CASE("batch_apply on an empty batch") {
    const MatrixBatch<double> b;
    const auto out = batch_apply(b, [](const Matrix<double>& A) { return syrk(A); });
    CHECK(out.empty());
}

TEST_CASE("batch_apply reports the failing index") {
    MatrixBatch<double> b;
    b.push_back(Matrix<double>(3, 2));
    b.push_back(Matrix<double>(2, 3));
    b.push_back(Matrix<double>(2, 3));
    try {
        batch_apply(b, [](const Matrix<double>& A) {
            if (A.rows() < A.cols())
                throw std::invalid_argument("wide");
            return A;
        });
        FAIL("expected batch_error");
    } catch (const batch_error& e) {
        CHECK(e.index() == 1);
    }
}

TEST_CASE("parallel_for visits each index once") {
    for (std::size_t threads : {1u, 2u, 5u}) {
        std::vector<std::atomic<int>> hits(97);
        parallel_for(hits.size(), [&](std::size_t i) { hits[i]++; }, threads);
        for (const auto& h : hits)
            CHECK(h.load() == 1);
    }
}

TEST_CASE("batch results do not depend on the worker count") {
    MatrixBatch<double> b;
    for (std::uint64_t i = 0; i < 24; ++i)
        b.push_back(gaussian_matrix<double>(20, 12, i));
    const auto ref = batch_svd(b, {}, 1);
    for (std::size_t threads : {2u, 3u, 8u}) {
        const auto out = batch_svd(b, {}, threads);
        for (std::size_t i = 0; i < b.count(); ++i) {
            CHECK(out[i].U == ref[i].U);
            CHECK(out[i].sigma == ref[i].sigma);
        }
    }
}

TEST_CASE("thread count configuration") {
    set_num_threads(3);
    CHECK(num_threads() == 3);
    set_num_threads(0);
    CHECK(num_threads() >= 1);
}
