#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <thread>

#include "rmv/drivers.hpp"
#include "rmv/rng.hpp"

using namespace rmv;

TEST_CASE("identical keys reproduce identical draws") {
    CounterRng a(42, 7, 3, RngChannel::brownian);
    CounterRng b(42, 7, 3, RngChannel::brownian);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u32() == b.next_u32());

    CounterRng c(42, 7, 3, RngChannel::jump);
    bool all_equal = true;
    CounterRng a2(42, 7, 3, RngChannel::brownian);
    for (int i = 0; i < 100; ++i)
        if (a2.next_u32() != c.next_u32()) all_equal = false;
    CHECK_FALSE(all_equal);  // channels are disjoint counter ranges
}

TEST_CASE("draws are independent of thread schedule") {
    std::vector<double> serial(64), threaded(64);
    for (int i = 0; i < 64; ++i) {
        CounterRng rng(9, static_cast<std::uint64_t>(i), 0, RngChannel::brownian);
        serial[i] = rng.next_normal();
    }
    std::vector<std::thread> pool;
    for (int t = 0; t < 8; ++t)
        pool.emplace_back([&, t] {
            for (int i = t; i < 64; i += 8) {
                CounterRng rng(9, static_cast<std::uint64_t>(i), 0, RngChannel::brownian);
                threaded[i] = rng.next_normal();
            }
        });
    for (auto& th : pool) th.join();
    CHECK(serial == threaded);
}

TEST_CASE("uniforms and normals have the right moments") {
    CounterRng rng(123, 0, 0, RngChannel::misc);
    const int n = 100000;
    double su = 0.0, su2 = 0.0, sn = 0.0, sn2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.next_uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
        su += u;
        su2 += u * u;
        const double z = rng.next_normal();
        sn += z;
        sn2 += z * z;
    }
    CHECK(std::abs(su / n - 0.5) < 4.0 / std::sqrt(12.0 * n));
    CHECK(std::abs(su2 / n - 1.0 / 3.0) < 0.01);
    CHECK(std::abs(sn / n) < 4.0 / std::sqrt(static_cast<double>(n)));
    CHECK(std::abs(sn2 / n - 1.0) < 0.02);
}

TEST_CASE("poisson counts match the rate") {
    CounterRng rng(321, 0, 0, RngChannel::jump);
    const int n = 100000;
    const double lambda = 2.0;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += rng.next_poisson(lambda);
    // mean lambda, variance lambda
    CHECK(std::abs(s / n - lambda) < 4.0 * std::sqrt(lambda / n));
    CHECK_THROWS_AS(rng.next_poisson(-1.0), std::invalid_argument);
}

TEST_CASE("gauss-legendre integrates polynomials exactly") {
    Vec nodes, weights;
    gauss_legendre(64, nodes, weights);
    double s0 = 0.0, s2 = 0.0, s6 = 0.0;
    for (int q = 0; q < 64; ++q) {
        s0 += weights[q];
        s2 += weights[q] * nodes[q] * nodes[q];
        s6 += weights[q] * std::pow(nodes[q], 6);
    }
    CHECK(s0 == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(s2 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(s6 == doctest::Approx(2.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("inverse normal cdf inverts the cdf") {
    auto cdf = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
    for (double p : {0.001, 0.01, 0.25, 0.5, 0.75, 0.99, 0.999})
        CHECK(cdf(inv_norm_cdf(p)) == doctest::Approx(p).epsilon(1e-8));
    CHECK_THROWS_AS(inv_norm_cdf(0.0), std::invalid_argument);
}

TEST_CASE("brownian increments scale with dt") {
    CounterRng rng(55, 0, 0, RngChannel::brownian);
    const int n = 50000;
    const double dt = 0.01;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const Vec w = brownian_increments(rng, dt, 1);
        s += w[0];
        s2 += w[0] * w[0];
    }
    CHECK(std::abs(s / n) < 4.0 * std::sqrt(dt / n));
    CHECK(std::abs(s2 / n - dt) < 4.0 * dt * std::sqrt(2.0 / n));
}

TEST_CASE("compound poisson jumps: count, times, marks") {
    auto marks = MarkDistribution::two_point({-1.0}, {1.0}, 0.5);
    CounterRng jump_rng(77, 0, 0, RngChannel::jump);
    CounterRng mark_rng(77, 0, 0, RngChannel::mark);
    const int reps = 20000;
    double count = 0.0, mark_sum = 0.0;
    for (int r = 0; r < reps; ++r) {
        CounterRng jr(77, static_cast<std::uint64_t>(r), 0, RngChannel::jump);
        CounterRng mr(77, static_cast<std::uint64_t>(r), 0, RngChannel::mark);
        const auto events = poisson_jumps(jr, mr, 0.0, 1.0, 2.0, marks);
        count += events.size();
        for (const auto& e : events) {
            CHECK(e.time >= 0.0);
            CHECK(e.time <= 1.0);
            mark_sum += e.mark[0];
        }
        for (std::size_t j = 1; j < events.size(); ++j)
            CHECK(events[j].time >= events[j - 1].time);
    }
    CHECK(std::abs(count / reps - 2.0) < 4.0 * std::sqrt(2.0 / reps));
    CHECK(std::abs(mark_sum / count) < 0.05);

    CounterRng quiet_j(77, 0, 0, RngChannel::jump), quiet_m(77, 0, 0, RngChannel::mark);
    CHECK(poisson_jumps(quiet_j, quiet_m, 0.0, 1.0, 0.0, marks).empty());
}

TEST_CASE("mark expectations: exact sums and quadrature") {
    auto two = MarkDistribution::two_point({-1.0}, {2.0}, 0.25);
    auto id = [](const Vec& z) { return z; };
    CHECK(two.expectation(id, 1)[0] == doctest::Approx(-0.25));

    auto gauss = MarkDistribution::gaussian({0.5}, 1.5);
    CHECK(gauss.expectation(id, 1)[0] == doctest::Approx(0.5).epsilon(1e-8));
    auto sq = [](const Vec& z) -> Vec { return {z[0] * z[0]}; };
    CHECK(gauss.expectation(sq, 1)[0] == doctest::Approx(0.25 + 2.25).epsilon(1e-8));

    auto ball2 = MarkDistribution::uniform_ball(2, 1.0);
    CHECK(std::abs(ball2.expectation(id, 2)[0]) < 0.02);
    auto r2 = [](const Vec& z) -> Vec { return {norm2(z)}; };
    // E|Z|^2 = r^2 * d/(d+2) for the uniform ball
    CHECK(ball2.expectation(r2, 1)[0] == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("compensated jump sums are centered") {
    auto marks = MarkDistribution::two_point({-1.0}, {1.0}, 0.5);
    auto beta = [](const Vec& z) { return z; };
    const int reps = 20000;
    double s = 0.0;
    for (int r = 0; r < reps; ++r) {
        CounterRng jr(88, static_cast<std::uint64_t>(r), 0, RngChannel::jump);
        CounterRng mr(88, static_cast<std::uint64_t>(r), 0, RngChannel::mark);
        const auto events = poisson_jumps(jr, mr, 0.0, 1.0, 3.0, marks);
        s += compensated_jump_sum(beta, events, 1.0, 3.0, marks, 1)[0];
    }
    // symmetric marks: compensator vanishes, sum is a centered random walk
    CHECK(std::abs(s / reps) < 4.0 * std::sqrt(3.0 / reps));

    const std::vector<JumpEvent> none;
    auto zero = [](const Vec&) -> Vec { return {0.0}; };
    CHECK(compensated_jump_sum(zero, none, 1.0, 3.0, marks, 1)[0] == 0.0);
}

TEST_CASE("brownian and jump channels are uncorrelated") {
    const int n = 20000;
    double sxy = 0.0, sx = 0.0, sy = 0.0, sx2 = 0.0, sy2 = 0.0;
    for (int i = 0; i < n; ++i) {
        CounterRng b(99, static_cast<std::uint64_t>(i), 0, RngChannel::brownian);
        CounterRng j(99, static_cast<std::uint64_t>(i), 0, RngChannel::jump);
        const double x = b.next_normal();
        const double y = j.next_uniform();
        sx += x;
        sy += y;
        sxy += x * y;
        sx2 += x * x;
        sy2 += y * y;
    }
    const double corr = (sxy / n - sx / n * sy / n) /
                        std::sqrt((sx2 / n - sx / n * sx / n) * (sy2 / n - sy / n * sy / n));
    CHECK(std::abs(corr) < 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("halton sequences are equidistributed") {
    double s = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) s += halton(static_cast<std::uint64_t>(i), 2);
    CHECK(std::abs(s / n - 0.5) < 0.01);
}
