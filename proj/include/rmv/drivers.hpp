#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmv/common.hpp"
#include "rmv/rng.hpp"

namespace rmv {

/// Inverse standard normal CDF (Acklam's rational approximation, ~1e-9).
inline double inv_norm_cdf(double p) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("inv_norm_cdf: p outside (0,1)");
    const double plow = 0.02425;
    if (p < plow) {
        const double q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - plow) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    const double q = p - 0.5;
    const double r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

enum class MarkKind { two_point, gaussian, uniform_ball, discrete };

/// Named jump-mark distribution on R^d \ {0}. Expectations against a test
/// function use exact summation for atomic marks, 64-node Gauss-Legendre in
/// 1D, and frozen Halton nodes beyond, keeping the Euler compensator
/// deterministic for a given seed.
struct MarkDistribution {
    MarkKind kind = MarkKind::two_point;
    int d = 1;
    std::vector<Vec> atoms;  // two_point / discrete
    Vec probs;
    Vec mean;       // gaussian
    double sd = 1.0;
    double radius = 1.0;  // uniform_ball

    static MarkDistribution two_point(Vec lo_atom, Vec hi_atom, double p_hi) {
        MarkDistribution m;
        m.kind = MarkKind::two_point;
        m.d = static_cast<int>(lo_atom.size());
        m.atoms = {std::move(lo_atom), std::move(hi_atom)};
        m.probs = {1.0 - p_hi, p_hi};
        return m;
    }
    static MarkDistribution discrete(std::vector<Vec> atoms, Vec probs) {
        if (atoms.empty() || atoms.size() != probs.size())
            throw std::invalid_argument("discrete marks: atoms/probs mismatch");
        double s = 0.0;
        for (double p : probs) s += p;
        if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("discrete marks: probs must sum to 1");
        MarkDistribution m;
        m.kind = MarkKind::discrete;
        m.d = static_cast<int>(atoms.front().size());
        m.atoms = std::move(atoms);
        m.probs = std::move(probs);
        return m;
    }
    static MarkDistribution gaussian(Vec mean, double sd) {
        MarkDistribution m;
        m.kind = MarkKind::gaussian;
        m.d = static_cast<int>(mean.size());
        m.mean = std::move(mean);
        m.sd = sd;
        return m;
    }
    static MarkDistribution uniform_ball(int d, double radius) {
        MarkDistribution m;
        m.kind = MarkKind::uniform_ball;
        m.d = d;
        m.radius = radius;
        return m;
    }

    Vec sample(CounterRng& rng) const {
        switch (kind) {
            case MarkKind::two_point:
            case MarkKind::discrete: {
                const double u = rng.next_uniform();
                double cum = 0.0;
                for (std::size_t i = 0; i < atoms.size(); ++i) {
                    cum += probs[i];
                    if (u <= cum) return atoms[i];
                }
                return atoms.back();
            }
            case MarkKind::gaussian: {
                Vec z = rng.next_normals(static_cast<std::size_t>(d));
                for (int c = 0; c < d; ++c) z[c] = mean[c] + sd * z[c];
                return z;
            }
            case MarkKind::uniform_ball: {
                Vec z = rng.next_normals(static_cast<std::size_t>(d));
                const double n = std::max(norm(z), 1e-300);
                const double r = radius * std::pow(rng.next_uniform(), 1.0 / d);
                return (r / n) * z;
            }
        }
        throw std::logic_error("unreachable");
    }

    /// E[f(Z)] for vector-valued f; d_out is the output dimension.
    Vec expectation(const std::function<Vec(const Vec&)>& f, int d_out) const {
        Vec acc(d_out, 0.0);
        switch (kind) {
            case MarkKind::two_point:
            case MarkKind::discrete:
                for (std::size_t i = 0; i < atoms.size(); ++i) axpy(acc, probs[i], f(atoms[i]));
                return acc;
            case MarkKind::gaussian:
                if (d == 1) {
                    Vec nodes, weights;
                    gauss_legendre(64, nodes, weights);
                    const double lo = mean[0] - 8.0 * sd, hi = mean[0] + 8.0 * sd;
                    for (int q = 0; q < 64; ++q) {
                        const double z = 0.5 * (hi - lo) * nodes[q] + 0.5 * (hi + lo);
                        const double pdf = std::exp(-0.5 * (z - mean[0]) * (z - mean[0]) / (sd * sd)) /
                                           (sd * std::sqrt(2.0 * 3.14159265358979323846));
                        axpy(acc, 0.5 * (hi - lo) * weights[q] * pdf, f({z}));
                    }
                    return acc;
                } else {
                    const int nodes = 10000;
                    for (int q = 0; q < nodes; ++q) {
                        Vec z(d);
                        for (int c = 0; c < d; ++c)
                            z[c] = mean[c] + sd * inv_norm_cdf(halton(q, prime_base(c)));
                        axpy(acc, 1.0 / nodes, f(z));
                    }
                    return acc;
                }
            case MarkKind::uniform_ball:
                if (d == 1) {
                    Vec nodes, weights;
                    gauss_legendre(64, nodes, weights);
                    for (int q = 0; q < 64; ++q)
                        axpy(acc, 0.5 * weights[q], f({radius * nodes[q]}));
                    return acc;
                } else {
                    const int nodes = 10000;
                    for (int q = 0; q < nodes; ++q) {
                        Vec g(d);
                        for (int c = 0; c < d; ++c)
                            g[c] = inv_norm_cdf(halton(q, prime_base(c)));
                        const double n = std::max(norm(g), 1e-300);
                        const double r =
                            radius * std::pow(halton(q, prime_base(d)), 1.0 / d);
                        axpy(acc, 1.0 / nodes, f((r / n) * g));
                    }
                    return acc;
                }
        }
        throw std::logic_error("unreachable");
    }
};

/// Finite-activity driver setup: Brownian dimension plus a compound-Poisson
/// jump part with total rate `intensity`.
struct NoiseConfig {
    int brownian_dim = 1;
    double intensity = 0.0;
    MarkDistribution marks;
    std::uint64_t seed = 0;
};

struct JumpEvent {
    double time;
    Vec mark;
};

inline Vec brownian_increments(CounterRng& rng, double dt, int m) {
    if (!(dt > 0.0)) throw std::invalid_argument("brownian_increments: dt must be positive");
    Vec v = rng.next_normals(static_cast<std::size_t>(m));
    const double s = std::sqrt(dt);
    for (double& x : v) x *= s;
    return v;
}

/// Jumps of a compound Poisson process on [t0, t0+dt): Poisson count, uniform
/// times, marks from the mark sampler. Sorted by time.
inline std::vector<JumpEvent> poisson_jumps(CounterRng& jump_rng, CounterRng& mark_rng, double t0,
                                            double dt, double intensity,
                                            const MarkDistribution& marks) {
    if (!(dt > 0.0)) throw std::invalid_argument("poisson_jumps: dt must be positive");
    std::vector<JumpEvent> events;
    if (intensity <= 0.0) return events;
    const int count = jump_rng.next_poisson(intensity * dt);
    events.reserve(count);
    for (int i = 0; i < count; ++i)
        events.push_back({t0 + dt * jump_rng.next_uniform(), marks.sample(mark_rng)});
    std::sort(events.begin(), events.end(),
              [](const JumpEvent& a, const JumpEvent& b) { return a.time < b.time; });
    return events;
}

/// sum_j beta(z_j) - dt * intensity * E[beta(Z)], the compensated jump
/// contribution of one Euler step.
inline Vec compensated_jump_sum(const std::function<Vec(const Vec&)>& beta,
                                const std::vector<JumpEvent>& jumps, double dt, double intensity,
                                const MarkDistribution& marks, int d_out) {
    Vec acc(d_out, 0.0);
    for (const auto& j : jumps) acc += beta(j.mark);
    if (intensity > 0.0) axpy(acc, -dt * intensity, marks.expectation(beta, d_out));
    return acc;
}

}  // namespace rmv
