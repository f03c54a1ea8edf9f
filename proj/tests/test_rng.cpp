#include <doctest.h>

#include <cmath>

#include "causalcal/rng.hpp"

using namespace causalcal;

TEST_SUITE("rng") {

TEST_CASE("fixed seed reproduces the stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("mix_seed separates streams") {
    CHECK(mix_seed(1, 0) != mix_seed(1, 1));
    CHECK(mix_seed(1, 0) != mix_seed(2, 0));
    Rng a(mix_seed(7, 0)), b(mix_seed(7, 1));
    CHECK(a.next_u64() != b.next_u64());
}

TEST_CASE("uniform doubles stay in range") {
    Rng rng(3);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.next_double();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        const double v = rng.next_double_open();
        CHECK(v > 0.0);
        CHECK(v <= 1.0);
    }
}

TEST_CASE("below is bounded and covers small ranges") {
    Rng rng(11);
    bool seen[5] = {};
    for (int i = 0; i < 1000; ++i) {
        const auto x = rng.below(5);
        CHECK(x < 5);
        seen[x] = true;
    }
    for (bool s : seen) CHECK(s);
}

TEST_CASE("normal draws match N(0,1) moments") {
    Rng rng(123);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sum2 += x * x;
    }
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}

TEST_CASE("shuffle permutes") {
    Rng rng(9);
    int vals[10];
    for (int i = 0; i < 10; ++i) vals[i] = i;
    rng.shuffle(vals, 10);
    long mask = 0;
    for (int v : vals) mask |= 1L << v;
    CHECK(mask == (1L << 10) - 1);
}

}  // TEST_SUITE
