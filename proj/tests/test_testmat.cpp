#include <doctest.h>

#include <cmath>

#include <batchfact/jacobi.hpp>
#include <batchfact/testmat.hpp>

using namespace batchfact;

TEST_CASE("spectrum shapes") {
    const auto g = spectrum({5, spectrum_mode_t::geometric, 1e4, -1, {}});
    REQUIRE(g.size() == 5);
    CHECK(g[0] == 1.0);
    CHECK(g[2] == doctest::Approx(1e-2).epsilon(1e-14));
    CHECK(g[4] == doctest::Approx(1e-4).epsilon(1e-14));

    const auto a = spectrum({3, spectrum_mode_t::arithmetic, 5, -1, {}});
    CHECK(a[0] == 1.0);
    CHECK(a[1] == doctest::Approx(0.6));
    CHECK(a[2] == doctest::Approx(0.2));

    const auto r = spectrum({6, spectrum_mode_t::geometric, 100, 3, {}});
    CHECK(r[2] == doctest::Approx(1e-2));
    CHECK(r[3] == 0.0);
    CHECK(r[5] == 0.0);

    CHECK(spectrum({4, spectrum_mode_t::geometric, 1, -1, {}}) == std::vector<double>(4, 1.0));
    CHECK_THROWS(spectrum({4, spectrum_mode_t::geometric, 0.5, -1, {}}));
    CHECK_THROWS(spectrum({4, spectrum_mode_t::geometric, 2, 5, {}}));
}

TEST_CASE("random orthonormal") {
    CHECK(orthogonality_error(random_orthonormal<double>(3, 3, 4)) <= 1e-14);
    const auto Q = random_orthonormal<double>(5, 2, 4);
    for (index_t j = 0; j < 2; ++j)
        CHECK(std::abs(norm2<double>(Q.col(j)) - 1) <= 1e-14);
    CHECK(random_orthonormal<double>(7, 4, 9) == random_orthonormal<double>(7, 4, 9));
    CHECK_THROWS_AS(random_orthonormal<double>(2, 3, 1), dimension_error);
}

TEST_CASE("make matrix examples") {
    SUBCASE("explicit values") {
        const auto tm = make_matrix<double>(5, {3, spectrum_mode_t::explicit_values, 1, -1, {5, 3, 1}}, 1);
        const auto s = svd(tm.A);
        CHECK(tm.sigma == std::vector<double>{5, 3, 1});
        for (int i = 0; i < 3; ++i)
            CHECK(s.sigma[i] == doctest::Approx(tm.sigma[i]).epsilon(1e-13));
    }
    SUBCASE("flat spectrum gives orthonormal columns") {
        const auto tm = make_matrix<double>(9, {6, spectrum_mode_t::geometric, 1, -1, {}}, 2);
        CHECK(orthogonality_error(tm.A) <= 1e-14);
    }
    SUBCASE("half rank") {
        const auto tm = make_matrix<double>(20, {20, spectrum_mode_t::geometric, 1e3, 10, {}}, 3);
        const auto s = svd(tm.A);
        int above = 0;
        for (const double v : s.sigma)
            above += v > 1e-12 * s.sigma[0];
        CHECK(above == 10);
    }
    SUBCASE("shape errors") {
        CHECK_THROWS_AS(make_matrix<double>(3, {4, spectrum_mode_t::geometric, 1, -1, {}}, 1), dimension_error);
    }
}

TEST_CASE("generated spectra are recovered by the jacobi svd") {
    for (const double cond : {1.0, 1e2, 1e5, 1e8})
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const index_t n = 16 + index_t(seed) * 4;
            const auto tm = make_matrix<double>(n + 3, {n, spectrum_mode_t::geometric, cond, -1, {}}, seed);
            const auto s = svd(tm.A);
            REQUIRE(s.converged);
            for (index_t i = 0; i < n; ++i)
                CHECK(std::abs(s.sigma[i] - tm.sigma[i]) <= 1e-12 * cond * tm.sigma[i]);
            // the smallest singular value carries a relative error of order eps * cond
            if (cond <= 1e5)
                CHECK(s.sigma[0] / s.sigma[n - 1] == doctest::Approx(cond).epsilon(1e-10));
        }
}
