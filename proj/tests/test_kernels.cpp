#include <doctest.h>

#include <cmath>
#include <vector>

#include "causalcal/kernels.hpp"
#include "causalcal/rng.hpp"

using namespace causalcal;

namespace {

std::vector<double> random_vec(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return v;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar dot and sum match exact small cases") {
    const double a[] = {1.0, 2.0, 3.0};
    const double b[] = {4.0, 5.0, 6.0};
    CHECK(kernels::scalar::dot(a, b, 3) == 32.0);
    CHECK(kernels::scalar::sum(a, 3) == 6.0);
}

TEST_CASE("scalar axpy") {
    const double x[] = {1.0, 2.0, 3.0};
    double y[] = {10.0, 10.0, 10.0};
    kernels::scalar::axpy(2.0, x, y, 3);
    CHECK(y[0] == 12.0);
    CHECK(y[1] == 14.0);
    CHECK(y[2] == 16.0);
}

TEST_CASE("avx2 variants agree with the scalar reference") {
    if (!kernels::avx2::supported()) return;  // nothing to compare on this machine
    for (const std::size_t n : {std::size_t{1},  std::size_t{3},  std::size_t{4},
                                std::size_t{15}, std::size_t{16}, std::size_t{17},
                                std::size_t{1000}, std::size_t{1003}}) {
        const auto a = random_vec(n, 100 + n);
        const auto b = random_vec(n, 200 + n);
        const double ds = kernels::scalar::dot(a.data(), b.data(), n);
        const double dv = kernels::avx2::dot(a.data(), b.data(), n);
        CHECK(std::abs(ds - dv) <= 1e-12 * (1.0 + std::abs(ds)));

        const double ss = kernels::scalar::sum(a.data(), n);
        const double sv = kernels::avx2::sum(a.data(), n);
        CHECK(std::abs(ss - sv) <= 1e-12 * (1.0 + std::abs(ss)));

        auto ys = random_vec(n, 300 + n);
        auto yv = ys;
        kernels::scalar::axpy(0.37, a.data(), ys.data(), n);
        kernels::avx2::axpy(0.37, a.data(), yv.data(), n);
        for (std::size_t i = 0; i < n; ++i)
            CHECK(std::abs(ys[i] - yv[i]) <= 1e-14 * (1.0 + std::abs(ys[i])));
    }
}

TEST_CASE("runtime dispatch can be forced to scalar and back") {
    const auto original = kernels::active_isa();
    kernels::force_isa(kernels::Isa::Scalar);
    CHECK(kernels::active_isa() == kernels::Isa::Scalar);
    const double a[] = {1.0, 2.0};
    CHECK(kernels::dot(a, a, 2) == 5.0);
    kernels::force_isa(original);
}

}  // TEST_SUITE
