#pragma once

#include <map>
#include <vector>

#include "rmv/cadlag.hpp"
#include "rmv/domain.hpp"
#include "rmv/rng.hpp"

namespace rmv {

struct SolutionResiduals {
    double max_violation = 0.0;  // constraint d(x_t, D_t)
    double max_vi = 0.0;         // pairing integral over the test-path family
    double measured_c = 0.0;     // |k|_T / (sup|y|^2 + sup|a|^2 + 1)
};

struct SkorokhodSolution {
    CadlagPath x;       // reflected path on the partition
    CadlagPath k;       // reflection term, x = y + k on the grid
    CadlagPath y_grid;  // input frozen on the partition (the y^n actually solved)
    std::vector<double> partition;
    double k_variation = 0.0;
    SolutionResiduals residuals;
};

struct SolveOptions {
    std::uint64_t test_path_seed = 0x5eed;
    int random_test_paths = 32;
    double tol_active = 1e-7;
};

/// Adaptive partition: advance by 1/n or stop earlier at the first time where
/// the input, the anchor, or the domain (in Hausdorff metric) has moved by at
/// least 1/n since the previous grid point. Exact on step representations.
inline std::vector<double> build_partition(const CadlagPath& y, const DomainFamily& family,
                                           const CadlagPath& a, int n) {
    if (n <= 0) throw std::invalid_argument("build_partition: n must be positive");
    const double T = family.horizon;
    const double h = 1.0 / n;

    std::vector<double> events = y.times;
    events.insert(events.end(), a.times.begin(), a.times.end());
    events.insert(events.end(), family.times.begin(), family.times.end());
    std::sort(events.begin(), events.end());
    events.erase(std::unique(events.begin(), events.end()), events.end());

    auto piece_index = [&](double t) {
        auto it = std::upper_bound(family.times.begin(), family.times.end(), t);
        return static_cast<std::size_t>(it - family.times.begin()) - 1;
    };
    std::map<std::pair<std::size_t, std::size_t>, double> dh_memo;
    auto dh = [&](double s, double t) {
        auto key = std::minmax(piece_index(s), piece_index(t));
        if (key.first == key.second) return 0.0;
        auto it = dh_memo.find(key);
        if (it != dh_memo.end()) return it->second;
        const double v = hausdorff(family.pieces[key.first], family.pieces[key.second]);
        dh_memo.emplace(key, v);
        return v;
    };

    std::vector<double> grid{0.0};
    double tp = 0.0;
    while (tp < T) {
        const double limit = std::min(tp + h, T);
        double next = limit;
        auto it = std::upper_bound(events.begin(), events.end(), tp);
        for (; it != events.end() && *it <= limit; ++it) {
            const double u = *it;
            if (dh(tp, u) >= h || dist(y.at(tp), y.at(u)) >= h || dist(a.at(tp), a.at(u)) >= h) {
                next = u;
                break;
            }
        }
        grid.push_back(next);
        tp = next;
    }
    return grid;
}

namespace detail {

inline std::vector<CadlagPath> standard_test_paths(const CadlagPath& x, const CadlagPath& a,
                                                   const DomainFamily& family,
                                                   const std::vector<double>& grid,
                                                   const SolveOptions& opts) {
    std::vector<CadlagPath> zs;
    zs.push_back(restrict_to_grid(a, grid));

    const double R = bounding_radius(family.at(0.0));
    for (int p = 0; p < opts.random_test_paths; ++p) {
        CounterRng rng(opts.test_path_seed, static_cast<std::uint64_t>(p), 0, RngChannel::misc);
        // random step path with a handful of levels, projected into each D_t
        Vec w = rng.next_normals(static_cast<std::size_t>(family.dim()));
        w = (R / std::max(1.0, norm(w))) * w;
        std::vector<Vec> vals;
        vals.reserve(grid.size());
        for (double t : grid) {
            if (rng.next_uniform() < 0.1) {
                w = rng.next_normals(static_cast<std::size_t>(family.dim()));
                w = (R * rng.next_uniform() / std::max(1e-12, norm(w))) * w;
            }
            vals.push_back(project(family.at(t), w));
        }
        zs.push_back(CadlagPath::make(grid, std::move(vals), family.horizon));
    }

    // the solution pulled halfway toward the anchor stays inside by convexity
    std::vector<Vec> vals;
    vals.reserve(grid.size());
    for (double t : grid) vals.push_back(a.at(t) + 0.5 * (x.at(t) - a.at(t)));
    zs.push_back(CadlagPath::make(grid, std::move(vals), family.horizon));
    return zs;
}

inline double max_running_pairing(const CadlagPath& x, const CadlagPath& z, const CadlagPath& k) {
    double run = 0.0, worst = 0.0;
    for (std::size_t j = 1; j < k.times.size(); ++j) {
        const double t = k.times[j];
        run += dot(x.at(t) - z.at(t), k.values[j] - k.values[j - 1]);
        worst = std::max(worst, run);
    }
    return worst;
}

}  // namespace detail

/// One-step projection scheme on the adaptive partition:
///   x_i = Pi_{D_{t_i}}(x_{i-1} + y_{t_i} - y_{t_{i-1}}),  k = x - y.
inline SkorokhodSolution solve_skorokhod(const CadlagPath& y, const DomainFamily& family, int n,
                                         const SolveOptions& opts = {}) {
    const auto rep = validate(family);
    if (!rep.ok) {
        std::string msg = "solve: domain family failed validation";
        for (const auto& m : rep.messages) msg += "; " + m;
        throw std::invalid_argument(msg);
    }
    if (!contains(family.at(0.0), y.at(0.0), 1e-9))
        throw std::invalid_argument("solve: y_0 is not in D_0");

    const CadlagPath anchor = family.anchor ? *family.anchor : auto_anchor(family);
    const std::vector<double> grid = build_partition(y, family, anchor, n);

    std::vector<Vec> xs, ks;
    xs.reserve(grid.size());
    ks.reserve(grid.size());
    Vec x = y.at(0.0);
    xs.push_back(x);
    ks.push_back(zeros(x.size()));
    double k_var = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const Vec step = y.at(grid[i]) - y.at(grid[i - 1]);
        const Vec x_new = project(family.at(grid[i]), x + step);
        xs.push_back(x_new);
        ks.push_back(x_new - y.at(grid[i]));
        k_var += dist(ks.back(), ks[ks.size() - 2]);
        x = x_new;
    }

    SkorokhodSolution sol;
    sol.partition = grid;
    sol.x = CadlagPath::make(grid, std::move(xs), family.horizon);
    sol.k = CadlagPath::make(grid, std::move(ks), family.horizon);
    sol.y_grid = restrict_to_grid(y, grid);
    sol.k_variation = k_var;

    for (std::size_t i = 0; i < grid.size(); ++i)
        sol.residuals.max_violation =
            std::max(sol.residuals.max_violation,
                     std::max(0.0, -signed_margin(family.at(grid[i]), sol.x.values[i])));
    const auto test_paths = detail::standard_test_paths(sol.x, anchor, family, grid, opts);
    for (const auto& z : test_paths)
        sol.residuals.max_vi =
            std::max(sol.residuals.max_vi, detail::max_running_pairing(sol.x, z, sol.k));
    const double bracket =
        sup_norm(sol.y_grid) * sup_norm(sol.y_grid) + sup_norm(anchor) * sup_norm(anchor) + 1.0;
    sol.residuals.measured_c = sol.k_variation / bracket;
    return sol;
}

struct VerifyReport {
    double additivity_residual = 0.0;  // max |x - y - k| on the grid
    double constraint_residual = 0.0;  // max d(x_t, D_t)
    double pairing_residual = 0.0;     // max over test paths of the running pairing sum
    bool pass = false;
};

inline VerifyReport verify(const SkorokhodSolution& sol, const CadlagPath& y,
                           const DomainFamily& family, const std::vector<CadlagPath>& test_paths,
                           double tol_active = 1e-7) {
    VerifyReport rep;
    for (std::size_t i = 0; i < sol.partition.size(); ++i) {
        const double t = sol.partition[i];
        rep.additivity_residual =
            std::max(rep.additivity_residual, dist(sol.x.values[i], y.at(t) + sol.k.values[i]));
        rep.constraint_residual = std::max(
            rep.constraint_residual, std::max(0.0, -signed_margin(family.at(t), sol.x.values[i])));
    }
    for (const auto& z : test_paths) {
        for (double t : sol.partition)
            if (signed_margin(family.at(t), z.at(t)) < -tol_active)
                throw std::invalid_argument("verify: test path leaves the domain");
        rep.pairing_residual =
            std::max(rep.pairing_residual, detail::max_running_pairing(sol.x, z, sol.k));
    }
    const double tol_vi = 1e-8 * (1.0 + sol.k_variation);
    rep.pass = rep.additivity_residual <= 1e-9 && rep.constraint_residual <= kProjTol * 10 &&
               rep.pairing_residual <= tol_vi;
    return rep;
}

struct RefinementRow {
    int n = 0;
    double dist_to_finest = 0.0;
    double k_variation = 0.0;
};

inline std::vector<RefinementRow> refinement_study(const CadlagPath& y, const DomainFamily& family,
                                                   std::vector<int> n_list) {
    std::sort(n_list.begin(), n_list.end());
    std::vector<SkorokhodSolution> sols;
    sols.reserve(n_list.size());
    for (int n : n_list) sols.push_back(solve_skorokhod(y, family, n));
    std::vector<RefinementRow> rows;
    for (std::size_t i = 0; i < sols.size(); ++i)
        rows.push_back({n_list[i], uniform_distance(sols[i].x, sols.back().x),
                        sols[i].k_variation});
    return rows;
}

}  // namespace rmv
