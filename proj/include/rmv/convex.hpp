#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "rmv/common.hpp"
#include "rmv/rng.hpp"

namespace rmv {

class ProjectionError : public std::runtime_error {
public:
    ProjectionError(const std::string& what, double residual)
        : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
          residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

constexpr double kProjTol = 1e-10;
constexpr int kProjMaxIter = 10000;

class ConvexSet;

struct Ball {
    Vec center;
    double radius = 0.0;
};

struct Box {
    Vec lo, hi;
};

/// H-representation <a_j, x> <= b_j with unit normals; vertices and the
/// Chebyshev ball are enumerated once at construction.
struct Polytope {
    Mat normals;   // m x d, unit rows
    Vec offsets;   // m
    std::vector<Vec> vertices;
    Vec cheb_center;
    double cheb_radius = 0.0;
};

struct Intersection {
    std::vector<ConvexSet> members;
};

namespace detail {

inline void combinations(int m, int s, const std::function<void(const std::vector<int>&)>& visit) {
    std::vector<int> idx(s);
    std::function<void(int, int)> rec = [&](int start, int k) {
        if (k == s) {
            visit(idx);
            return;
        }
        for (int i = start; i <= m - (s - k); ++i) {
            idx[k] = i;
            rec(i + 1, k + 1);
        }
    };
    if (s == 0) {
        visit({});
        return;
    }
    rec(0, 0);
}

/// A unit vector orthogonal to the given rows (rows x d, rows < d), or nullopt
/// if the rows are rank deficient.
inline std::optional<Vec> null_direction(const Mat& rows) {
    const int d = rows.cols;
    Mat A = rows;
    std::vector<int> pivot_col;
    int r = 0;
    for (int c = 0; c < d && r < A.rows; ++c) {
        int piv = r;
        for (int i = r + 1; i < A.rows; ++i)
            if (std::abs(A(i, c)) > std::abs(A(piv, c))) piv = i;
        if (std::abs(A(piv, c)) < 1e-12) continue;
        if (piv != r)
            for (int j = 0; j < d; ++j) std::swap(A(r, j), A(piv, j));
        for (int i = 0; i < A.rows; ++i) {
            if (i == r) continue;
            const double f = A(i, c) / A(r, c);
            for (int j = c; j < d; ++j) A(i, j) -= f * A(r, j);
        }
        pivot_col.push_back(c);
        ++r;
    }
    if (r < A.rows) return std::nullopt;  // rank deficient
    // pick a free column, set it to 1, back-substitute pivots
    int free_col = -1;
    for (int c = 0; c < d; ++c) {
        bool is_pivot = false;
        for (int p : pivot_col) is_pivot |= (p == c);
        if (!is_pivot) {
            free_col = c;
            break;
        }
    }
    if (free_col < 0) return std::nullopt;
    Vec u(d, 0.0);
    u[free_col] = 1.0;
    for (int i = r - 1; i >= 0; --i) {
        const int pc = pivot_col[i];
        double s = 0.0;
        for (int j = pc + 1; j < d; ++j) s += A(i, j) * u[j];
        u[pc] = -s / A(i, pc);
    }
    const double n = norm(u);
    if (n < 1e-14) return std::nullopt;
    return (1.0 / n) * u;
}

}  // namespace detail

class ConvexSet {
public:
    using Variant = std::variant<Ball, Box, Polytope, Intersection>;

    const Variant& body() const { return body_; }
    int dim() const { return dim_; }

    static ConvexSet make_ball(Vec center, double radius);
    static ConvexSet make_box(Vec lo, Vec hi);
    /// Halfspaces <a_j, x> <= b_j; normals are normalized (offsets rescaled) here.
    static ConvexSet make_polytope(Mat normals, Vec offsets);
    static ConvexSet make_intersection(std::vector<ConvexSet> members);

private:
    ConvexSet(Variant v, int d) : body_(std::move(v)), dim_(d) {}
    Variant body_;
    int dim_ = 0;
};

inline Vec project(const ConvexSet& set, const Vec& y);
inline double signed_margin(const ConvexSet& set, const Vec& x);
inline double bounding_radius(const ConvexSet& set);
inline std::pair<Vec, double> chebyshev(const ConvexSet& set);

namespace detail {

/// Cheap feasibility measure; lower bound on the true distance, exact enough
/// for convergence checks.
inline double violation(const ConvexSet& set, const Vec& x) {
    return std::max(0.0, -signed_margin(set, x));
}

inline Vec project_ball(const Ball& b, const Vec& y) {
    const Vec r = y - b.center;
    const double n = norm(r);
    if (n <= b.radius) return y;
    return b.center + (b.radius / n) * r;
}

inline Vec project_box(const Box& b, const Vec& y) {
    Vec x = y;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], b.lo[i], b.hi[i]);
    return x;
}

/// Exact metric projection by KKT active-set enumeration: the projection is
/// y - sum lambda_j a_j over some tight set with lambda >= 0.
inline Vec project_polytope(const Polytope& p, const Vec& y) {
    const int m = p.normals.rows;
    const int d = p.normals.cols;
    bool feasible = true;
    for (int j = 0; j < m; ++j) {
        double s = 0.0;
        for (int c = 0; c < d; ++c) s += p.normals(j, c) * y[c];
        if (s > p.offsets[j]) {
            feasible = false;
            break;
        }
    }
    if (feasible) return y;

    Vec best;
    double best_cost = std::numeric_limits<double>::infinity();
    const double ftol = 1e-9;
    for (int s = 1; s <= std::min(m, d); ++s) {
        detail::combinations(m, s, [&](const std::vector<int>& S) {
            // A_S A_S^T lambda = A_S y - b_S ; x = y - A_S^T lambda
            Mat G(s, s);
            Vec rhs(s);
            for (int i = 0; i < s; ++i) {
                for (int j = 0; j < s; ++j) {
                    double g = 0.0;
                    for (int c = 0; c < d; ++c) g += p.normals(S[i], c) * p.normals(S[j], c);
                    G(i, j) = g;
                }
                double v = -p.offsets[S[i]];
                for (int c = 0; c < d; ++c) v += p.normals(S[i], c) * y[c];
                rhs[i] = v;
            }
            auto lam = solve_linear(G, rhs);
            if (!lam) return;
            for (double l : *lam)
                if (l < -ftol) return;
            Vec x = y;
            for (int i = 0; i < s; ++i)
                for (int c = 0; c < d; ++c) x[c] -= (*lam)[i] * p.normals(S[i], c);
            for (int j = 0; j < m; ++j) {
                double v = -p.offsets[j];
                for (int c = 0; c < d; ++c) v += p.normals(j, c) * x[c];
                if (v > ftol) return;
            }
            const double cost = norm2(x - y);
            if (cost < best_cost) {
                best_cost = cost;
                best = x;
            }
        });
        if (!best.empty()) break;  // smallest valid active set is the projection
    }
    if (best.empty()) throw ProjectionError("polytope projection: no KKT point found", 1.0);
    return best;
}

/// Constraint active at the current iterate: either a sphere |p - c|^2 = r^2
/// or a hyperplane <n, p> = o.
struct ActiveConstraint {
    bool is_ball = false;
    Vec center;
    double radius = 0.0;
    Vec normal;
    double offset = 0.0;
};

inline void collect_active(const ConvexSet& set, const Vec& x, double tol,
                           std::vector<ActiveConstraint>& out) {
    std::visit(
        [&](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, Ball>) {
                if (std::abs(dist(x, b.center) - b.radius) <= tol)
                    out.push_back({true, b.center, b.radius, {}, 0.0});
            } else if constexpr (std::is_same_v<T, Box>) {
                for (std::size_t c = 0; c < b.lo.size(); ++c) {
                    Vec e(x.size(), 0.0);
                    if (std::abs(x[c] - b.lo[c]) <= tol) {
                        e[c] = -1.0;
                        out.push_back({false, {}, 0.0, e, -b.lo[c]});
                    } else if (std::abs(b.hi[c] - x[c]) <= tol) {
                        e[c] = 1.0;
                        out.push_back({false, {}, 0.0, e, b.hi[c]});
                    }
                }
            } else if constexpr (std::is_same_v<T, Polytope>) {
                for (int j = 0; j < b.normals.rows; ++j) {
                    double s = -b.offsets[j];
                    for (int c = 0; c < b.normals.cols; ++c) s += b.normals(j, c) * x[c];
                    if (std::abs(s) <= tol) {
                        Vec n(static_cast<std::size_t>(b.normals.cols));
                        for (int c = 0; c < b.normals.cols; ++c) n[c] = b.normals(j, c);
                        out.push_back({false, {}, 0.0, std::move(n), b.offsets[j]});
                    }
                }
            } else {
                for (const auto& mem : b.members) collect_active(mem, x, tol, out);
            }
        },
        set.body());
}

/// Lagrange-Newton refinement of an almost-converged projection. Solves the
/// KKT system of min |p - y|^2 over the constraints active at x, dropping
/// constraints whose multiplier comes out negative. Returns nothing if the
/// Newton solve breaks down; KKT with lambda >= 0 plus feasibility certifies
/// the exact projection, so a successful polish needs no further check.
inline std::optional<Vec> polish_intersection(const Intersection& in, const Vec& y, Vec x) {
    const int d = static_cast<int>(y.size());
    std::vector<ActiveConstraint> act;
    for (const auto& mem : in.members)
        collect_active(mem, x, 1e-5 * (1.0 + norm(x)), act);
    if (act.empty() || static_cast<int>(act.size()) > 4 * d) return std::nullopt;

    for (int round = 0; round < static_cast<int>(act.size()) + 1 && !act.empty(); ++round) {
        const int m = static_cast<int>(act.size());
        Vec p = x, lam(m, 0.0);
        bool converged = false;
        for (int it = 0; it < 50; ++it) {
            // residual F = [p - y + sum lam_i g_i'(p); g_i(p)]
            Vec F(static_cast<std::size_t>(d + m), 0.0);
            double hess = 0.0;  // sum over active balls of 2 lam_i
            Mat G(m, d);        // constraint gradients
            for (int i = 0; i < m; ++i) {
                if (act[i].is_ball) {
                    for (int c = 0; c < d; ++c) G(i, c) = 2.0 * (p[c] - act[i].center[c]);
                    F[d + i] = norm2(p - act[i].center) - act[i].radius * act[i].radius;
                    hess += 2.0 * lam[i];
                } else {
                    for (int c = 0; c < d; ++c) G(i, c) = act[i].normal[c];
                    F[d + i] = dot(act[i].normal, p) - act[i].offset;
                }
            }
            for (int c = 0; c < d; ++c) {
                F[c] = p[c] - y[c];
                for (int i = 0; i < m; ++i) F[c] += lam[i] * G(i, c);
            }
            double fnorm = 0.0;
            for (double v : F) fnorm = std::max(fnorm, std::abs(v));
            if (fnorm <= 1e-13 * (1.0 + norm(y))) {
                converged = true;
                break;
            }
            Mat J(d + m, d + m);
            for (int c = 0; c < d; ++c) J(c, c) = 1.0 + hess;
            for (int i = 0; i < m; ++i)
                for (int c = 0; c < d; ++c) {
                    J(c, d + i) = G(i, c);
                    J(d + i, c) = G(i, c);
                }
            auto delta = solve_linear(J, -1.0 * F);
            if (!delta) return std::nullopt;
            for (int c = 0; c < d; ++c) p[c] += (*delta)[c];
            for (int i = 0; i < m; ++i) lam[i] += (*delta)[d + i];
        }
        if (!converged) return std::nullopt;

        int worst = -1;
        for (int i = 0; i < m; ++i)
            if (lam[i] < -1e-9 && (worst < 0 || lam[i] < lam[worst])) worst = i;
        if (worst >= 0) {
            act.erase(act.begin() + worst);
            continue;
        }
        double viol = 0.0;
        for (const auto& mem : in.members) viol = std::max(viol, violation(mem, p));
        if (viol > kProjTol) return std::nullopt;
        return p;
    }
    return std::nullopt;
}

/// Dykstra's alternating projections; converges to the metric projection onto
/// the intersection of convex members. Near nonsmooth corners the alternating
/// scheme slows to O(1/k), so a stalled run is finished off by a
/// Lagrange-Newton polish on the active constraints.
inline Vec project_intersection(const Intersection& in, const Vec& y) {
    const std::size_t n = in.members.size();
    Vec x = y;
    std::vector<Vec> corr(n, zeros(y.size()));
    double resid = std::numeric_limits<double>::infinity();
    for (int it = 0; it < kProjMaxIter; ++it) {
        const Vec x_before = x;
        for (std::size_t i = 0; i < n; ++i) {
            const Vec z = x + corr[i];
            const Vec xi = project(in.members[i], z);
            corr[i] = z - xi;
            x = xi;
        }
        double viol = 0.0;
        for (const auto& mem : in.members) viol = std::max(viol, violation(mem, x));
        resid = viol;
        if (dist(x, x_before) < 1e-14 && viol <= kProjTol) return x;
        if (it >= 100 && dist(x, x_before) < 1e-8 * (1.0 + norm(x))) break;  // corner stall
    }
    if (auto polished = polish_intersection(in, y, x)) return *polished;
    if (resid <= kProjTol) return x;
    throw ProjectionError("Dykstra projection did not converge", resid);
}

}  // namespace detail

inline Vec project(const ConvexSet& set, const Vec& y) {
    if (static_cast<int>(y.size()) != set.dim())
        throw std::invalid_argument("project: dimension mismatch");
    return std::visit(
        [&](const auto& b) -> Vec {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, Ball>) return detail::project_ball(b, y);
            else if constexpr (std::is_same_v<T, Box>) return detail::project_box(b, y);
            else if constexpr (std::is_same_v<T, Polytope>) return detail::project_polytope(b, y);
            else return detail::project_intersection(b, y);
        },
        set.body());
}

inline double distance(const ConvexSet& set, const Vec& y) { return dist(y, project(set, y)); }

inline bool contains(const ConvexSet& set, const Vec& y, double tol = kProjTol) {
    return signed_margin(set, y) >= -tol;
}

/// Lower bound on the inner distance to the boundary; negative outside.
/// Exact for Ball and Box, facet-wise for Polytope, min over members for
/// Intersection.
inline double signed_margin(const ConvexSet& set, const Vec& x) {
    return std::visit(
        [&](const auto& b) -> double {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, Ball>) {
                return b.radius - dist(x, b.center);
            } else if constexpr (std::is_same_v<T, Box>) {
                double m = std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i < b.lo.size(); ++i)
                    m = std::min({m, x[i] - b.lo[i], b.hi[i] - x[i]});
                return m;
            } else if constexpr (std::is_same_v<T, Polytope>) {
                double m = std::numeric_limits<double>::infinity();
                for (int j = 0; j < b.normals.rows; ++j) {
                    double s = -b.offsets[j];
                    for (int c = 0; c < b.normals.cols; ++c) s += b.normals(j, c) * x[c];
                    m = std::min(m, -s);
                }
                return m;
            } else {
                double m = std::numeric_limits<double>::infinity();
                for (const auto& mem : b.members) m = std::min(m, signed_margin(mem, x));
                return m;
            }
        },
        set.body());
}

inline double bounding_radius(const ConvexSet& set) {
    return std::visit(
        [&](const auto& b) -> double {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, Ball>) {
                return norm(b.center) + b.radius;
            } else if constexpr (std::is_same_v<T, Box>) {
                double s = 0.0;
                for (std::size_t i = 0; i < b.lo.size(); ++i)
                    s += std::max(b.lo[i] * b.lo[i], b.hi[i] * b.hi[i]);
                return std::sqrt(s);
            } else if constexpr (std::is_same_v<T, Polytope>) {
                double r = 0.0;
                for (const auto& v : b.vertices) r = std::max(r, norm(v));
                return r;
            } else {
                double r = std::numeric_limits<double>::infinity();
                for (const auto& mem : b.members) r = std::min(r, bounding_radius(mem));
                return r;
            }
        },
        set.body());
}

/// Support function h(u) = sup_{x in set} <u, x>; exact for Ball/Box/Polytope,
/// iteratively converged for Intersection via projected ascent.
inline double support(const ConvexSet& set, const Vec& u) {
    return std::visit(
        [&](const auto& b) -> double {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, Ball>) {
                return dot(u, b.center) + b.radius;
            } else if constexpr (std::is_same_v<T, Box>) {
                double s = 0.0;
                for (std::size_t i = 0; i < b.lo.size(); ++i)
                    s += u[i] > 0.0 ? u[i] * b.hi[i] : u[i] * b.lo[i];
                return s;
            } else if constexpr (std::is_same_v<T, Polytope>) {
                double s = -std::numeric_limits<double>::infinity();
                for (const auto& v : b.vertices) s = std::max(s, dot(u, v));
                return s;
            } else {
                auto [x, margin] = chebyshev(set);
                (void)margin;
                double step = 2.0 * bounding_radius(set);
                double best = dot(u, x);
                for (int it = 0; it < 400; ++it) {
                    x = project(set, x + step * u);
                    const double v = dot(u, x);
                    if (v > best) {
                        if (v - best < 1e-12 * (1.0 + std::abs(best))) {
                            best = v;
                            break;
                        }
                        best = v;
                    } else {
                        step *= 0.5;
                        if (step < 1e-12) break;
                    }
                }
                return best;
            }
        },
        set.body());
}

/// Interior point with the largest margin the search can certify.
inline std::pair<Vec, double> chebyshev(const ConvexSet& set) {
    return std::visit(
        [&](const auto& b) -> std::pair<Vec, double> {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, Ball>) {
                return {b.center, b.radius};
            } else if constexpr (std::is_same_v<T, Box>) {
                Vec c(b.lo.size());
                double m = std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i < b.lo.size(); ++i) {
                    c[i] = 0.5 * (b.lo[i] + b.hi[i]);
                    m = std::min(m, 0.5 * (b.hi[i] - b.lo[i]));
                }
                return {c, m};
            } else if constexpr (std::is_same_v<T, Polytope>) {
                return {b.cheb_center, b.cheb_radius};
            } else {
                // concave maximization of the min member margin by subgradient ascent
                Vec x = zeros(static_cast<std::size_t>(set.dim()));
                for (const auto& mem : b.members) {
                    auto [c, m] = chebyshev(mem);
                    (void)m;
                    axpy(x, 1.0 / static_cast<double>(b.members.size()), c);
                }
                Vec best = x;
                double best_m = signed_margin(set, x);
                const double R = bounding_radius(set);
                for (int k = 1; k <= 800; ++k) {
                    // subgradient of the tightest member margin
                    double worst = std::numeric_limits<double>::infinity();
                    Vec g = zeros(x.size());
                    for (const auto& mem : b.members) {
                        const double m = signed_margin(mem, x);
                        if (m < worst) {
                            worst = m;
                            // finite-difference gradient of the member margin
                            const double h = 1e-7 * (1.0 + R);
                            for (std::size_t i = 0; i < x.size(); ++i) {
                                Vec xp = x;
                                xp[i] += h;
                                g[i] = (signed_margin(mem, xp) - m) / h;
                            }
                        }
                    }
                    const double gn = norm(g);
                    if (gn < 1e-12) break;
                    axpy(x, (R / (gn * k)), g);
                    const double m = signed_margin(set, x);
                    if (m > best_m) {
                        best_m = m;
                        best = x;
                    }
                }
                return {best, best_m};
            }
        },
        set.body());
}

/// Deterministic direction grid used for the support-function Hausdorff
/// distance: 2 in d=1, 64 on the circle, 512 quasi-uniform on the sphere,
/// seeded Monte Carlo beyond.
inline std::vector<Vec> direction_grid(int d) {
    std::vector<Vec> dirs;
    if (d == 1) {
        dirs.push_back({1.0});
        dirs.push_back({-1.0});
    } else if (d == 2) {
        for (int k = 0; k < 64; ++k) {
            const double th = 2.0 * std::numbers::pi * k / 64.0;
            dirs.push_back({std::cos(th), std::sin(th)});
        }
    } else if (d == 3) {
        const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
        const int n = 512;
        for (int k = 0; k < n; ++k) {
            const double z = 1.0 - 2.0 * (k + 0.5) / n;
            const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
            const double th = golden * k;
            dirs.push_back({r * std::cos(th), r * std::sin(th), z});
        }
    } else {
        CounterRng rng(0x5d1ce5u, 0, 0, RngChannel::misc);
        for (int k = 0; k < 4096; ++k) {
            Vec u = rng.next_normals(static_cast<std::size_t>(d));
            const double n = norm(u);
            if (n < 1e-12) continue;
            dirs.push_back((1.0 / n) * u);
        }
    }
    return dirs;
}

/// Hausdorff distance between convex bodies as the sup of support-function
/// gaps over a direction grid (an identity for convex bodies).
inline double hausdorff(const ConvexSet& a, const ConvexSet& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("hausdorff: dimension mismatch");
    double h = 0.0;
    for (const auto& u : direction_grid(a.dim()))
        h = std::max(h, std::abs(support(a, u) - support(b, u)));
    return h;
}

inline ConvexSet ConvexSet::make_ball(Vec center, double radius) {
    if (center.empty()) throw std::invalid_argument("ball: empty center");
    if (!(radius > 0.0)) throw std::invalid_argument("ball: radius must be positive");
    const int d = static_cast<int>(center.size());
    return ConvexSet(Ball{std::move(center), radius}, d);
}

inline ConvexSet ConvexSet::make_box(Vec lo, Vec hi) {
    if (lo.empty() || lo.size() != hi.size()) throw std::invalid_argument("box: bad bounds");
    for (std::size_t i = 0; i < lo.size(); ++i)
        if (!(lo[i] < hi[i])) throw std::invalid_argument("box: lo < hi required componentwise");
    const int d = static_cast<int>(lo.size());
    return ConvexSet(Box{std::move(lo), std::move(hi)}, d);
}

inline ConvexSet ConvexSet::make_polytope(Mat normals, Vec offsets) {
    const int m = normals.rows;
    const int d = normals.cols;
    if (m == 0 || d == 0 || static_cast<int>(offsets.size()) != m)
        throw std::invalid_argument("polytope: bad halfspace data");
    for (int j = 0; j < m; ++j) {
        double n2 = 0.0;
        for (int c = 0; c < d; ++c) n2 += normals(j, c) * normals(j, c);
        const double n = std::sqrt(n2);
        if (n < 1e-12) throw std::invalid_argument("polytope: zero normal");
        for (int c = 0; c < d; ++c) normals(j, c) /= n;
        offsets[j] /= n;
    }
    if (matrix_rank(normals) < d)
        throw std::invalid_argument("polytope: unbounded (normals do not span)");
    // recession cone {u : Au <= 0} must be trivial; its extreme rays lie on
    // d-1 tight facets, so checking those null directions is exact
    detail::combinations(m, d - 1, [&](const std::vector<int>& S) {
        Mat rows(d - 1, d);
        for (int i = 0; i < d - 1; ++i)
            for (int c = 0; c < d; ++c) rows(i, c) = normals(S[i], c);
        auto u = detail::null_direction(rows);
        if (!u) return;
        for (int sign = 0; sign < 2; ++sign) {
            const Vec dir = sign ? -1.0 * (*u) : *u;
            bool in_cone = true;
            for (int j = 0; j < m && in_cone; ++j) {
                double s = 0.0;
                for (int c = 0; c < d; ++c) s += normals(j, c) * dir[c];
                in_cone = s <= 1e-10;
            }
            if (in_cone) throw std::invalid_argument("polytope: unbounded recession direction");
        }
    });

    Polytope p;
    p.normals = std::move(normals);
    p.offsets = std::move(offsets);
    detail::combinations(m, d, [&](const std::vector<int>& S) {
        Mat A(d, d);
        Vec rhs(d);
        for (int i = 0; i < d; ++i) {
            for (int c = 0; c < d; ++c) A(i, c) = p.normals(S[i], c);
            rhs[i] = p.offsets[S[i]];
        }
        auto x = solve_linear(A, rhs);
        if (!x) return;
        for (int j = 0; j < m; ++j) {
            double s = -p.offsets[j];
            for (int c = 0; c < d; ++c) s += p.normals(j, c) * (*x)[c];
            if (s > 1e-9) return;
        }
        for (const auto& v : p.vertices)
            if (dist(v, *x) < 1e-9) return;
        p.vertices.push_back(*x);
    });
    if (p.vertices.empty()) throw std::invalid_argument("polytope: empty feasible set");

    // Chebyshev center: vertex enumeration of {(x,r): <a_j,x> + r <= b_j, r >= 0,
    // |x_i| <= R0} in d+1 dimensions, maximizing r
    double R0 = 1.0;
    for (const auto& v : p.vertices) R0 = std::max(R0, norm(v) + 1.0);
    const int mc = m + 1 + 2 * d;
    Mat C(mc, d + 1);
    Vec cb(mc);
    for (int j = 0; j < m; ++j) {
        for (int c = 0; c < d; ++c) C(j, c) = p.normals(j, c);
        C(j, d) = 1.0;
        cb[j] = p.offsets[j];
    }
    C(m, d) = -1.0;
    cb[m] = 0.0;
    for (int i = 0; i < d; ++i) {
        C(m + 1 + 2 * i, i) = 1.0;
        cb[m + 1 + 2 * i] = R0;
        C(m + 2 + 2 * i, i) = -1.0;
        cb[m + 2 + 2 * i] = R0;
    }
    double best_r = -1.0;
    Vec best_c;
    detail::combinations(mc, d + 1, [&](const std::vector<int>& S) {
        Mat A(d + 1, d + 1);
        Vec rhs(d + 1);
        for (int i = 0; i <= d; ++i) {
            for (int c = 0; c <= d; ++c) A(i, c) = C(S[i], c);
            rhs[i] = cb[S[i]];
        }
        auto x = solve_linear(A, rhs);
        if (!x) return;
        for (int j = 0; j < mc; ++j) {
            double s = -cb[j];
            for (int c = 0; c <= d; ++c) s += C(j, c) * (*x)[c];
            if (s > 1e-9) return;
        }
        if ((*x)[d] > best_r) {
            best_r = (*x)[d];
            best_c = Vec(x->begin(), x->begin() + d);
        }
    });
    if (best_r <= 1e-10) throw std::invalid_argument("polytope: empty interior");
    p.cheb_center = std::move(best_c);
    p.cheb_radius = best_r;
    return ConvexSet(std::move(p), d);
}

inline ConvexSet ConvexSet::make_intersection(std::vector<ConvexSet> members) {
    if (members.empty()) throw std::invalid_argument("intersection: no members");
    const int d = members.front().dim();
    for (const auto& m : members)
        if (m.dim() != d) throw std::invalid_argument("intersection: dimension mismatch");
    ConvexSet set(Intersection{std::move(members)}, d);
    auto [c, margin] = chebyshev(set);
    (void)c;
    if (margin <= 1e-10) throw std::invalid_argument("intersection: empty interior");
    return set;
}

}  // namespace rmv
