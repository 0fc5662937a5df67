#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>

#include "rmv/cadlag.hpp"
#include "rmv/rng.hpp"
#include "test_support.hpp"

using namespace rmv;

TEST_CASE("right-continuous lookup") {
    auto p = CadlagPath::make({0.0, 0.5}, {{1.0}, {2.0}}, 1.0);
    CHECK(p.at(0.0)[0] == 1.0);
    CHECK(p.at(0.5)[0] == 2.0);  // value jumps at the breakpoint itself
    CHECK(p.at(0.5 - 1e-12)[0] == 1.0);
    CHECK(p.at(1.0)[0] == 2.0);
    CHECK_THROWS_AS(p.at(1.5), std::out_of_range);
}

TEST_CASE("sup norm and total variation on known paths") {
    auto c = CadlagPath::constant({3.0, 4.0}, 1.0);
    CHECK(sup_norm(c) == doctest::Approx(5.0));
    CHECK(total_variation(c) == 0.0);

    auto zigzag = CadlagPath::make({0.0, 0.3, 0.6}, {{0.0}, {1.0}, {0.0}}, 1.0);
    CHECK(total_variation(zigzag) == doctest::Approx(2.0));
    CHECK(sup_norm(zigzag) == doctest::Approx(1.0));
}

TEST_CASE("total variation equals the partition supremum for step paths") {
    CounterRng rng(41, 0, 0, RngChannel::misc);
    auto p = testing::random_step_path(rng, 1.0, 20, 2.0, 2);
    const double tv = total_variation(p);
    // any partition's increment sum is bounded by tv; the breakpoint partition attains it
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> part{0.0};
        for (int j = 0; j < 15; ++j) {
            const double t = rng.next_uniform();
            if (t > part.back()) part.push_back(t);
        }
        part.push_back(1.0);
        double s = 0.0;
        for (std::size_t j = 1; j < part.size(); ++j) s += dist(p.at(part[j]), p.at(part[j - 1]));
        CHECK(s <= tv + 1e-12);
    }
}

TEST_CASE("pairing integral telescopes for constant integrands") {
    CounterRng rng(43, 0, 0, RngChannel::misc);
    auto k = testing::random_step_path(rng, 1.0, 15, 1.5, 2);
    auto f = CadlagPath::constant({2.0, -1.0}, 1.0);
    const double got = pairing_integral(f, k, 1.0);
    const double expected = dot({2.0, -1.0}, k.at(1.0) - k.at(0.0));
    CHECK(got == doctest::Approx(expected).epsilon(1e-12));

    auto flat = CadlagPath::constant({0.5, 0.5}, 1.0);
    CHECK(pairing_integral(f, flat, 1.0) == 0.0);
}

TEST_CASE("pairing integral matches direct summation") {
    CounterRng rng(47, 0, 0, RngChannel::misc);
    for (int trial = 0; trial < 30; ++trial) {
        auto f = testing::random_step_path(rng, 1.0, 10, 1.0, 1);
        auto k = testing::random_step_path(rng, 1.0, 10, 1.0, 1);
        const double t = rng.next_uniform();
        double direct = 0.0;
        for (std::size_t j = 1; j < k.times.size(); ++j) {
            if (k.times[j] > t) break;
            direct += f.at(k.times[j])[0] * (k.values[j][0] - k.values[j - 1][0]);
        }
        CHECK(pairing_integral(f, k, t) == doctest::Approx(direct).epsilon(1e-13));
    }
}

TEST_CASE("pairing integral is additive over disjoint intervals") {
    CounterRng rng(53, 0, 0, RngChannel::misc);
    auto f = testing::random_step_path(rng, 1.0, 12, 1.0, 1);
    auto k = testing::random_step_path(rng, 1.0, 12, 1.0, 1);
    const double full = pairing_integral(f, k, 1.0);
    const double mid = 0.37;
    double tail = 0.0;
    for (std::size_t j = 1; j < k.times.size(); ++j) {
        if (k.times[j] <= mid) continue;
        tail += f.at(k.times[j])[0] * (k.values[j][0] - k.values[j - 1][0]);
    }
    CHECK(pairing_integral(f, k, mid) + tail == doctest::Approx(full).epsilon(1e-12));
}

TEST_CASE("uniform distance on merged grids") {
    auto p = CadlagPath::make({0.0, 0.4}, {{0.0}, {1.0}}, 1.0);
    auto q = CadlagPath::make({0.0, 0.6}, {{0.0}, {1.0}}, 1.0);
    CHECK(uniform_distance(p, p) == 0.0);
    CHECK(uniform_distance(p, q) == doctest::Approx(1.0));  // they disagree on [0.4, 0.6)

    auto shifted = CadlagPath::make({0.0, 0.4}, {{2.0}, {3.0}}, 1.0);
    CHECK(uniform_distance(p, shifted) == doctest::Approx(2.0));
}

TEST_CASE("csv round trip is exact") {
    CounterRng rng(59, 0, 0, RngChannel::misc);
    auto p = testing::random_step_path(rng, 1.0, 12, 3.0, 3);
    const std::string file = "cadlag_roundtrip_test.csv";
    write_path_csv(file, p);
    auto q = read_path_csv(file, 1.0);
    REQUIRE(q.times.size() == p.times.size());
    for (std::size_t j = 0; j < p.times.size(); ++j) {
        CHECK(q.times[j] == p.times[j]);
        CHECK(dist(q.values[j], p.values[j]) == 0.0);
    }
    std::remove(file.c_str());
}

TEST_CASE("construction validates shape") {
    CHECK_THROWS_AS(CadlagPath::make({0.1}, {{1.0}}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(CadlagPath::make({0.0, 0.5}, {{1.0}}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(CadlagPath::make({0.0, 2.0}, {{1.0}, {1.0}}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(CadlagPath::make({0.0, 0.5}, {{1.0}, {1.0, 2.0}}, 1.0),
                    std::invalid_argument);
}
