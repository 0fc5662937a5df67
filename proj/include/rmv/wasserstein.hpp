#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "rmv/cadlag.hpp"
#include "rmv/common.hpp"

namespace rmv {

enum class TransportMethod { sort, assignment, sinkhorn };

struct TransportResult {
    double distance = 0.0;
    std::vector<int> plan;  // B index matched to each A index; empty for sinkhorn
    TransportMethod method = TransportMethod::assignment;
    bool certified = false;
};

/// Exact assignment cap; above it the entropic fallback runs uncertified.
constexpr int kAssignmentCap = 512;

namespace detail {

/// Jonker-Volgenant style shortest augmenting path; minimizes the total cost
/// of a square assignment. O(n^3) worst case.
inline double solve_assignment(const Mat& cost, std::vector<int>& row_to_col) {
    const int n = cost.rows;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = -1;
            double delta = inf;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    row_to_col.assign(n, -1);
    double total = 0.0;
    for (int j = 1; j <= n; ++j) {
        if (p[j] > 0) {
            row_to_col[p[j] - 1] = j - 1;
            total += cost(p[j] - 1, j - 1);
        }
    }
    return total;
}

inline double sinkhorn_cost(const Mat& cost) {
    const int n = cost.rows;
    std::vector<double> entries(cost.a);
    std::nth_element(entries.begin(), entries.begin() + entries.size() / 2, entries.end());
    const double eps = std::max(1e-12, 0.01 * entries[entries.size() / 2]);
    Mat K(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) K(i, j) = std::exp(-cost(i, j) / eps);
    std::vector<double> a(n, 1.0), b(n, 1.0);
    const double marg = 1.0 / n;
    for (int it = 0; it < 500; ++it) {
        for (int i = 0; i < n; ++i) {
            double s = 0.0;
            for (int j = 0; j < n; ++j) s += K(i, j) * b[j];
            a[i] = marg / std::max(s, 1e-300);
        }
        for (int j = 0; j < n; ++j) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += K(i, j) * a[i];
            b[j] = marg / std::max(s, 1e-300);
        }
    }
    double transport = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) transport += a[i] * K(i, j) * b[j] * cost(i, j);
    return transport;
}

inline TransportResult from_cost_matrix(const Mat& cost, int k) {
    TransportResult res;
    if (k <= kAssignmentCap) {
        const double total = solve_assignment(cost, res.plan);
        res.distance = std::sqrt(total / k);
        res.method = TransportMethod::assignment;
        res.certified = true;
    } else {
        res.distance = std::sqrt(sinkhorn_cost(cost));
        res.method = TransportMethod::sinkhorn;
        res.certified = false;
    }
    return res;
}

}  // namespace detail

/// Second-order Wasserstein distance between uniform point clouds of equal
/// size. Sorting in 1D, exact assignment up to the cap, entropic beyond.
inline TransportResult w2_point_clouds(const std::vector<Vec>& A, const std::vector<Vec>& B) {
    if (A.empty() || A.size() != B.size())
        throw std::invalid_argument("w2_point_clouds: equal nonempty sizes required");
    const int k = static_cast<int>(A.size());
    const int d = static_cast<int>(A.front().size());
    for (const auto& p : B)
        if (static_cast<int>(p.size()) != d)
            throw std::invalid_argument("w2_point_clouds: dimension mismatch");

    if (d == 1) {
        std::vector<int> ia(k), ib(k);
        std::iota(ia.begin(), ia.end(), 0);
        std::iota(ib.begin(), ib.end(), 0);
        std::sort(ia.begin(), ia.end(), [&](int x, int y) { return A[x][0] < A[y][0]; });
        std::sort(ib.begin(), ib.end(), [&](int x, int y) { return B[x][0] < B[y][0]; });
        TransportResult res;
        res.plan.assign(k, -1);
        double total = 0.0;
        for (int i = 0; i < k; ++i) {
            res.plan[ia[i]] = ib[i];
            const double diff = A[ia[i]][0] - B[ib[i]][0];
            total += diff * diff;
        }
        res.distance = std::sqrt(total / k);
        res.method = TransportMethod::sort;
        res.certified = true;
        return res;
    }

    Mat cost(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            const double dij = dist(A[i], B[j]);
            cost(i, j) = dij * dij;
        }
    return detail::from_cost_matrix(cost, k);
}

inline double path_sup_distance(const CadlagPath& p, const CadlagPath& q, double t) {
    double s = dist(p.at(t), q.at(t));
    for (double u : merge_times(p, q)) {
        if (u > t) break;
        s = std::max(s, dist(p.at(u), q.at(u)));
    }
    return s;
}

/// W2 on path space up to time t with sup-metric cost.
inline TransportResult w2_paths(const std::vector<CadlagPath>& A, const std::vector<CadlagPath>& B,
                                double t) {
    if (A.empty() || A.size() != B.size())
        throw std::invalid_argument("w2_paths: equal nonempty sizes required");
    const int k = static_cast<int>(A.size());
    Mat cost(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
            const double dij = path_sup_distance(A[i], B[j], t);
            cost(i, j) = dij * dij;
        }
    return detail::from_cost_matrix(cost, k);
}

/// Index-coupling upper bound (1/k sum sup-distance^2)^{1/2}; always at least
/// the optimal path-space distance.
inline double w2_upper_sup(const std::vector<CadlagPath>& A, const std::vector<CadlagPath>& B) {
    if (A.empty() || A.size() != B.size())
        throw std::invalid_argument("w2_upper_sup: equal nonempty sizes required");
    double total = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i) {
        const double s = path_sup_distance(A[i], B[i], A[i].horizon);
        total += s * s;
    }
    return std::sqrt(total / static_cast<double>(A.size()));
}

/// Exact 1D W2 between uniform samples of possibly different sizes via the
/// quantile-function coupling. Diagnostic helper.
inline double w2_quantile_1d(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("w2_quantile_1d: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const std::size_t na = a.size(), nb = b.size();
    std::size_t ia = 0, ib = 0;
    double q = 0.0, total = 0.0;
    while (ia < na && ib < nb) {
        const double qa = static_cast<double>(ia + 1) / na;
        const double qb = static_cast<double>(ib + 1) / nb;
        const double next = std::min(qa, qb);
        const double diff = a[ia] - b[ib];
        total += (next - q) * diff * diff;
        q = next;
        if (qa <= next + 1e-15) ++ia;
        if (qb <= next + 1e-15) ++ib;
    }
    return std::sqrt(total);
}

}  // namespace rmv
