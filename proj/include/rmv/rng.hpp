#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "rmv/common.hpp"

namespace rmv {

/// Philox4x32-10 counter-based generator. A draw is a pure function of
/// (key, counter), so substreams keyed by (stream id, context, channel)
/// are reproducible under any thread schedule.
struct Philox4x32 {
    static constexpr std::uint32_t kM0 = 0xD2511F53u;
    static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kW0 = 0x9E3779B9u;
    static constexpr std::uint32_t kW1 = 0xBB67AE85u;

    static std::array<std::uint32_t, 4> block(std::uint64_t key, std::array<std::uint32_t, 4> ctr) {
        std::uint32_t k0 = static_cast<std::uint32_t>(key);
        std::uint32_t k1 = static_cast<std::uint32_t>(key >> 32);
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
            const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
            const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
            const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
            const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
            ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
            k0 += kW0;
            k1 += kW1;
        }
        return ctr;
    }
};

/// RNG channels; disjoint counter ranges keep Brownian and Poisson draws independent.
enum class RngChannel : std::uint32_t {
    brownian = 0,
    jump = 1,
    mark = 2,
    initial = 3,
    misc = 4,
};

/// Sequential view over the counter space of one (seed, stream, context, channel) cell.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream, std::uint32_t context, RngChannel channel)
        : seed_(seed), stream_(stream), context_(context),
          channel_(static_cast<std::uint32_t>(channel)) {}

    std::uint32_t next_u32() {
        if (pos_ == 4) refill();
        return buf_[pos_++];
    }

    /// Uniform in (0,1), 53-bit mantissa from two words.
    double next_uniform() {
        const std::uint64_t hi = next_u32();
        const std::uint64_t lo = next_u32();
        const std::uint64_t bits = (hi << 32) | lo;
        return static_cast<double>(bits >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double th = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(th);
        have_spare_ = true;
        return r * std::cos(th);
    }

    Vec next_normals(std::size_t n) {
        Vec v(n);
        for (auto& x : v) x = next_normal();
        return v;
    }

    /// Poisson count by CDF inversion; intended for finite-activity intensities.
    int next_poisson(double lambda) {
        if (lambda < 0.0) throw std::invalid_argument("next_poisson: negative rate");
        if (lambda == 0.0) return 0;
        if (lambda > 700.0) throw std::invalid_argument("next_poisson: rate too large for inversion");
        const double u = next_uniform();
        double p = std::exp(-lambda);
        double cdf = p;
        int k = 0;
        while (u > cdf && k < 100000) {
            ++k;
            p *= lambda / k;
            cdf += p;
        }
        return k;
    }

private:
    void refill() {
        buf_ = Philox4x32::block(seed_, {static_cast<std::uint32_t>(stream_),
                                         static_cast<std::uint32_t>(stream_ >> 32), mix_context(),
                                         block_++});
        pos_ = 0;
    }

    std::uint32_t mix_context() const { return context_ ^ (channel_ << 27); }

    std::uint64_t seed_, stream_;
    std::uint32_t context_, channel_;
    std::uint32_t block_ = 0;
    std::array<std::uint32_t, 4> buf_{};
    int pos_ = 4;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

/// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration on P_n.
inline void gauss_legendre(int n, Vec& nodes, Vec& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            pp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
        weights[n - 1 - i] = weights[i];
    }
}

/// Halton low-discrepancy point, one coordinate.
inline double halton(std::uint64_t index, int base) {
    double f = 1.0, r = 0.0;
    std::uint64_t i = index + 1;
    while (i > 0) {
        f /= base;
        r += f * static_cast<double>(i % base);
        i /= base;
    }
    return r;
}

inline int prime_base(int k) {
    static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
    if (k < 0 || k >= 12) throw std::invalid_argument("prime_base: dimension too large");
    return primes[k];
}

}  // namespace rmv
