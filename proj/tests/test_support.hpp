#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "rmv/cadlag.hpp"
#include "rmv/common.hpp"
#include "rmv/convex.hpp"
#include "rmv/domain.hpp"
#include "rmv/rng.hpp"

namespace rmv::testing {

/// Random 1D step path on [0,T]; values bounded by `amp`, jump sizes at least
/// `min_jump` so a fine enough adaptive partition resolves every breakpoint.
inline CadlagPath random_step_path_1d(CounterRng& rng, double T, int max_steps, double amp,
                                      double min_jump, double start) {
    std::vector<double> times{0.0};
    std::vector<Vec> values{{start}};
    const int steps = 2 + static_cast<int>(rng.next_uniform() * (max_steps - 2));
    for (int j = 0; j < steps; ++j) {
        const double t = T * rng.next_uniform();
        if (t <= times.back() || t >= T) continue;
        double v = amp * (2.0 * rng.next_uniform() - 1.0);
        if (std::abs(v - values.back()[0]) < min_jump)
            v = values.back()[0] + (v >= values.back()[0] ? min_jump : -min_jump);
        times.push_back(t);
        values.push_back({v});
    }
    // keep breakpoints sorted (times were appended monotonically by the filter)
    return CadlagPath::make(std::move(times), std::move(values), T);
}

inline CadlagPath random_step_path(CounterRng& rng, double T, int max_steps, double amp, int d) {
    std::vector<double> times{0.0};
    std::vector<Vec> values{Vec(d, 0.0)};
    const int steps = 2 + static_cast<int>(rng.next_uniform() * (max_steps - 2));
    for (int j = 0; j < steps; ++j) {
        const double t = T * rng.next_uniform();
        if (t <= times.back() || t >= T) continue;
        Vec v(d);
        for (auto& c : v) c = amp * (2.0 * rng.next_uniform() - 1.0);
        times.push_back(t);
        values.push_back(std::move(v));
    }
    return CadlagPath::make(std::move(times), std::move(values), T);
}

/// Reflection at a single lower barrier l: x_t = y_t + max(0, -min_{s<=t}(y_s - l)).
inline double one_sided_oracle(const CadlagPath& y, double t, double l) {
    double run_min = 0.0;
    for (std::size_t j = 0; j < y.times.size(); ++j) {
        if (y.times[j] > t) break;
        run_min = std::min(run_min, y.values[j][0] - l);
    }
    return y.at(t)[0] + std::max(0.0, -run_min);
}

/// Two-sided moving interval [l_t, u_t]: the grid recursion clips the
/// unconstrained increment step by step.
inline std::vector<double> clipping_oracle(const CadlagPath& y, const std::vector<double>& grid,
                                           const std::function<double(double)>& lo,
                                           const std::function<double(double)>& hi) {
    std::vector<double> x;
    x.reserve(grid.size());
    double cur = std::clamp(y.at(0.0)[0], lo(0.0), hi(0.0));
    x.push_back(cur);
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double t = grid[i];
        cur = std::clamp(cur + y.at(t)[0] - y.at(grid[i - 1])[0], lo(t), hi(t));
        x.push_back(cur);
    }
    return x;
}

/// Exact equal-size squared transport cost by factorial enumeration, k <= 8.
inline double brute_force_w2_sq(const std::vector<Vec>& A, const std::vector<Vec>& B) {
    const int k = static_cast<int>(A.size());
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (int i = 0; i < k; ++i) {
            const double d = dist(A[i], B[perm[i]]);
            total += d * d;
        }
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / k;
}

/// Gap of the two-solution comparison estimate: RHS minus LHS where
///   LHS = |x_t - x'_t|^2
///   RHS = |y_t - y'_t|^2 + 2 sup_{s<=t} d_H(D_s, D'_s) (|k|_t + |k'|_t)
///         + 2 int_0^t <y_t - y_s + y'_s - y'_t, d(k_s - k'_s)>.
/// Nonnegative (up to tolerance) whenever both tuples solve their problems.
inline double comparison_estimate_gap(const CadlagPath& x, const CadlagPath& y, const CadlagPath& k,
                                      const DomainFamily& fam, const CadlagPath& x2,
                                      const CadlagPath& y2, const CadlagPath& k2,
                                      const DomainFamily& fam2, double t) {
    const double lhs = norm2(x.at(t) - x2.at(t));
    double dh = 0.0;
    {
        std::vector<double> bts = fam.times;
        bts.insert(bts.end(), fam2.times.begin(), fam2.times.end());
        std::sort(bts.begin(), bts.end());
        bts.erase(std::unique(bts.begin(), bts.end()), bts.end());
        for (double s : bts) {
            if (s > t) break;
            dh = std::max(dh, hausdorff(fam.at(s), fam2.at(s)));
        }
    }
    double var_k = 0.0, var_k2 = 0.0;
    for (std::size_t j = 1; j < k.times.size(); ++j) {
        if (k.times[j] > t) break;
        var_k += dist(k.values[j], k.values[j - 1]);
    }
    for (std::size_t j = 1; j < k2.times.size(); ++j) {
        if (k2.times[j] > t) break;
        var_k2 += dist(k2.values[j], k2.values[j - 1]);
    }
    double cross = 0.0;
    {
        const Vec yt = y.at(t), y2t = y2.at(t);
        std::vector<double> jt = merge_times(k, k2);
        for (std::size_t j = 1; j < jt.size(); ++j) {
            const double s = jt[j];
            if (s > t) break;
            const Vec f = yt - y.at(s) + y2.at(s) - y2t;
            const Vec dk =
                (k.at(s) - k.at(jt[j - 1])) - (k2.at(s) - k2.at(jt[j - 1]));
            cross += dot(f, dk);
        }
    }
    const double rhs = norm2(y.at(t) - y2.at(t)) + 2.0 * dh * (var_k + var_k2) + 2.0 * cross;
    return rhs - lhs;
}

}  // namespace rmv::testing
