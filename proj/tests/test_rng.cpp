#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>
#include <vector>

#include "coact/rng.hpp"

using namespace coact;

TEST_CASE("identical seeds replay identical streams") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        REQUIRE(a.next_u64() == b.next_u64());
    }
    Rng c(42), d(43);
    int same = 0;
    for (int i = 0; i < 64; ++i) same += c.next_u64() == d.next_u64();
    REQUIRE(same == 0);
}

TEST_CASE("derive_seed separates stages and items") {
    std::set<std::uint64_t> seeds;
    for (std::uint64_t t = 1; t <= 8; ++t) {
        seeds.insert(derive_seed(7, "iteration", t));
        seeds.insert(derive_seed(7, "oracle", t));
    }
    REQUIRE(seeds.size() == 16);
    REQUIRE(derive_seed(7, "iteration", 1) == derive_seed(7, "iteration", 1));
}

TEST_CASE("uniform lands in [0,1) with sane mean") {
    Rng rng(1);
    double sum = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    REQUIRE(std::abs(sum / n - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST_CASE("uniform_int covers the range without bias") {
    Rng rng(2);
    std::vector<int> counts(7, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i) ++counts[rng.uniform_int(7)];
    for (int c : counts) {
        double p = 1.0 / 7.0;
        REQUIRE(std::abs(c / static_cast<double>(n) - p) < 3.0 * std::sqrt(p * (1 - p) / n));
    }
}

TEST_CASE("normal has zero mean unit variance") {
    Rng rng(3);
    double sum = 0.0, sq = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    REQUIRE(std::abs(sum / n) < 3.0 / std::sqrt(static_cast<double>(n)));
    REQUIRE(std::abs(sq / n - 1.0) < 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("geometric mean matches the configured mean") {
    Rng rng(4);
    double sum = 0.0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        int g = rng.geometric(4.0);
        REQUIRE(g >= 1);
        sum += g;
    }
    // sd of geometric(p=1/4) is sqrt(12); three standard errors.
    REQUIRE(std::abs(sum / n - 4.0) < 3.0 * std::sqrt(12.0 / n));
    REQUIRE(Rng(5).geometric(1.0) == 1);
}

TEST_CASE("sample_indices draws distinct indices") {
    Rng rng(6);
    auto idx = rng.sample_indices(10, 10);
    std::set<std::size_t> unique(idx.begin(), idx.end());
    REQUIRE(unique.size() == 10);
    auto few = rng.sample_indices(100, 5);
    REQUIRE(few.size() == 5);
    REQUIRE(std::set<std::size_t>(few.begin(), few.end()).size() == 5);
}
