#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmv/cadlag.hpp"
#include "rmv/coefficients.hpp"
#include "rmv/common.hpp"
#include "rmv/convex.hpp"
#include "rmv/domain.hpp"
#include "rmv/drivers.hpp"
#include "rmv/measure.hpp"
#include "rmv/rng.hpp"
#include "rmv/skorokhod.hpp"
#include "rmv/wasserstein.hpp"

namespace rmv {

/// Top byte of a particle stream id separates experiment phases so their
/// driver draws never collide.
enum class StreamPhase : std::uint64_t {
    system = 1,
    picard = 2,
    chaos = 3,
    stability = 4,
};

inline std::uint64_t particle_stream(StreamPhase phase, std::uint64_t rep, std::uint64_t particle) {
    return (static_cast<std::uint64_t>(phase) << 48) | (rep << 28) | particle;
}

struct SimOptions {
    double T = 1.0;
    int steps = 100;
    int threads = 1;
    /// Brownian draws per step. A run with refine 2R at n steps and one with
    /// refine R at 2n steps consume identical normal draws, which couples the
    /// two discretizations pathwise.
    int brownian_refine = 1;
    std::uint64_t seed = 0;
};

/// Step-start measures, one per Euler step, for runs driven by a frozen flow.
struct LawFlow {
    std::vector<EmpiricalMeasure> per_step;
};

struct SystemTrajectory {
    std::vector<double> grid;
    std::vector<CadlagPath> X;  // particle paths
    std::vector<CadlagPath> K;  // cumulative projection corrections
    std::vector<double> k_variation;
    double max_violation = 0.0;
    double max_vi = 0.0;
};

namespace detail {

inline std::vector<std::vector<JumpEvent>> draw_horizon_jumps(
    const NoiseConfig& noise, const SimOptions& opts, const std::vector<std::uint64_t>& streams) {
    std::vector<std::vector<JumpEvent>> all(streams.size());
    if (noise.intensity <= 0.0) return all;
    const std::uint64_t seed = opts.seed ^ noise.seed;
    for (std::size_t i = 0; i < streams.size(); ++i) {
        CounterRng jump_rng(seed, streams[i], 0, RngChannel::jump);
        CounterRng mark_rng(seed, streams[i], 0, RngChannel::mark);
        all[i] = poisson_jumps(jump_rng, mark_rng, 0.0, opts.T, noise.intensity, noise.marks);
    }
    return all;
}

}  // namespace detail

/// One reflected Euler step for every particle. Coefficients are evaluated at
/// the step start against `mu`; the Brownian, jump, and compensator
/// contributions are aggregated and a single projection onto D_{t+dt} closes
/// the step. Jumps are the events of this particle falling in (t, t+dt].
inline void euler_reflect_step(std::vector<Vec>& state, std::vector<Vec>& reflection,
                               std::vector<double>& k_variation, std::vector<double>& violation,
                               const CoefficientSet& cs, const DomainFamily& family,
                               const NoiseConfig& noise, const EmpiricalMeasure& mu,
                               const std::vector<std::vector<JumpEvent>>& horizon_jumps,
                               const std::vector<std::uint64_t>& streams, int step,
                               const SimOptions& opts) {
    const double dt = opts.T / opts.steps;
    const double t0 = step * dt;
    const double t1 = (step + 1 == opts.steps) ? opts.T : t0 + dt;
    const int R = opts.brownian_refine;
    const std::uint64_t seed = opts.seed ^ noise.seed;
    const ConvexSet target = family.at(t1);

    parallel_for(state.size(), opts.threads, [&](std::size_t i) {
        const Vec x0 = state[i];
        Vec u = x0;
        axpy(u, dt, cs.drift(t0, x0, mu));

        Vec dw(static_cast<std::size_t>(cs.m), 0.0);
        for (int r = 0; r < R; ++r) {
            CounterRng rng(seed, streams[i], static_cast<std::uint32_t>(step * R + r),
                           RngChannel::brownian);
            axpy(dw, std::sqrt(dt / R), rng.next_normals(static_cast<std::size_t>(cs.m)));
        }
        u += matvec(cs.diffusion(t0, x0, mu), dw);

        if (noise.intensity > 0.0) {
            for (const auto& j : horizon_jumps[i])
                if (j.time > t0 && j.time <= t1) u += cs.jump(t0, x0, mu, j.mark);
            auto beta = [&](const Vec& z) { return cs.jump(t0, x0, mu, z); };
            axpy(u, -dt * noise.intensity, noise.marks.expectation(beta, cs.d));
        }

        const Vec xn = project(target, u);
        const Vec dk = xn - u;
        k_variation[i] += norm(dk);
        reflection[i] += dk;
        violation[i] = std::max(violation[i], std::max(0.0, -signed_margin(target, xn)));
        state[i] = xn;
    });
}

/// Simulates N interacting particles (frozen == nullptr, each step uses the
/// current empirical measure including the particle's own position) or N
/// conditionally independent copies driven by a frozen law flow.
inline SystemTrajectory simulate_particles(const std::vector<Vec>& initial,
                                           const CoefficientSet& cs, const DomainFamily& family,
                                           const NoiseConfig& noise, const SimOptions& opts,
                                           const std::vector<std::uint64_t>& streams,
                                           const LawFlow* frozen = nullptr) {
    const std::size_t N = initial.size();
    if (N == 0 || streams.size() != N)
        throw std::invalid_argument("simulate: initial states and streams must match");
    if (opts.steps < 1 || !(opts.T > 0.0)) throw std::invalid_argument("simulate: bad grid");
    if (frozen && frozen->per_step.size() != static_cast<std::size_t>(opts.steps))
        throw std::invalid_argument("simulate: frozen flow length mismatch");
    for (const auto& x : initial)
        if (!contains(family.at(0.0), x, 1e-9))
            throw std::invalid_argument("simulate: initial state outside D_0");

    const double dt = opts.T / opts.steps;
    std::vector<double> grid(static_cast<std::size_t>(opts.steps) + 1);
    for (int s = 0; s <= opts.steps; ++s) grid[s] = (s == opts.steps) ? opts.T : s * dt;

    const auto jumps = detail::draw_horizon_jumps(noise, opts, streams);
    std::vector<Vec> state = initial;
    std::vector<Vec> reflection(N, zeros(static_cast<std::size_t>(cs.d)));
    std::vector<double> k_variation(N, 0.0), violation(N, 0.0);

    std::vector<std::vector<Vec>> xs(N), ks(N);
    for (std::size_t i = 0; i < N; ++i) {
        xs[i].reserve(grid.size());
        ks[i].reserve(grid.size());
        xs[i].push_back(state[i]);
        ks[i].push_back(reflection[i]);
    }

    for (int s = 0; s < opts.steps; ++s) {
        std::vector<double> flat;
        const EmpiricalMeasure* mu;
        EmpiricalMeasure self = [&] {
            if (frozen) return frozen->per_step[static_cast<std::size_t>(s)];
            flat.reserve(N * cs.d);
            for (const auto& x : state) flat.insert(flat.end(), x.begin(), x.end());
            return EmpiricalMeasure(std::move(flat), static_cast<int>(N), cs.d);
        }();
        mu = &self;

        euler_reflect_step(state, reflection, k_variation, violation, cs, family, noise, *mu,
                           jumps, streams, s, opts);
        for (std::size_t i = 0; i < N; ++i) {
            for (double v : state[i])
                if (!std::isfinite(v))
                    throw std::runtime_error("simulate: non-finite state, particle " +
                                             std::to_string(i) + " step " + std::to_string(s));
            xs[i].push_back(state[i]);
            ks[i].push_back(reflection[i]);
        }
    }

    SystemTrajectory traj;
    traj.grid = grid;
    traj.X.reserve(N);
    traj.K.reserve(N);
    for (std::size_t i = 0; i < N; ++i) {
        traj.X.push_back(CadlagPath::make(grid, std::move(xs[i]), opts.T));
        traj.K.push_back(CadlagPath::make(grid, std::move(ks[i]), opts.T));
        traj.max_violation = std::max(traj.max_violation, violation[i]);
    }
    traj.k_variation = std::move(k_variation);

    const CadlagPath anchor =
        restrict_to_grid(family.anchor ? *family.anchor : auto_anchor(family), grid);
    for (std::size_t i = 0; i < N; ++i)
        traj.max_vi =
            std::max(traj.max_vi, detail::max_running_pairing(traj.X[i], anchor, traj.K[i]));
    return traj;
}

namespace detail {

/// Paths flattened to values on a shared grid, row i = path i.
inline std::vector<std::vector<double>> flatten_on_grid(const std::vector<CadlagPath>& paths,
                                                        const std::vector<double>& grid) {
    std::vector<std::vector<double>> out(paths.size());
    for (std::size_t i = 0; i < paths.size(); ++i) {
        out[i].reserve(grid.size() * paths[i].dim());
        for (double t : grid) {
            const Vec v = paths[i].at(t);
            out[i].insert(out[i].end(), v.begin(), v.end());
        }
    }
    return out;
}

inline double sup_sq(const std::vector<double>& a, const std::vector<double>& b, std::size_t g,
                     std::size_t d) {
    double worst = 0.0;
    for (std::size_t s = 0; s < g; ++s) {
        double acc = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            const double diff = a[s * d + c] - b[s * d + c];
            acc += diff * diff;
        }
        worst = std::max(worst, acc);
    }
    return worst;
}

/// Path-law W2 with sup cost on a shared grid. Exact assignment up to the
/// cap, index-coupling upper bound beyond.
inline std::pair<double, std::string> path_law_distance(const std::vector<CadlagPath>& A,
                                                        const std::vector<CadlagPath>& B,
                                                        const std::vector<double>& grid, int d) {
    const int M = static_cast<int>(A.size());
    const auto fa = flatten_on_grid(A, grid);
    const auto fb = flatten_on_grid(B, grid);
    const std::size_t g = grid.size(), dd = static_cast<std::size_t>(d);
    if (M <= kAssignmentCap) {
        Mat cost(M, M);
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < M; ++j) cost(i, j) = sup_sq(fa[i], fb[j], g, dd);
        std::vector<int> plan;
        const double total = solve_assignment(cost, plan);
        return {std::sqrt(total / M), "assignment"};
    }
    double total = 0.0;
    for (int i = 0; i < M; ++i) total += sup_sq(fa[i], fb[i], g, dd);
    return {std::sqrt(total / M), "index_upper_bound"};
}

inline LawFlow flow_from_paths(const std::vector<CadlagPath>& paths, int steps, int d) {
    LawFlow flow;
    flow.per_step.reserve(static_cast<std::size_t>(steps));
    for (int s = 0; s < steps; ++s) {
        std::vector<double> flat;
        flat.reserve(paths.size() * static_cast<std::size_t>(d));
        for (const auto& p : paths) {
            const Vec& v = p.values[static_cast<std::size_t>(s)];
            flat.insert(flat.end(), v.begin(), v.end());
        }
        flow.per_step.emplace_back(std::move(flat), static_cast<int>(paths.size()), d);
    }
    return flow;
}

}  // namespace detail

struct PicardOptions {
    int max_iters = 8;
    double tol = 1e-3;
};

struct PicardResult {
    std::vector<CadlagPath> paths;  // final iterate
    LawFlow flow;                   // its step-start measures
    std::vector<double> grid;
    std::vector<double> trace;  // W_T between consecutive path laws
    std::vector<std::string> trace_method;
    bool converged = false;
    bool contraction_warning = false;
    int iterations = 0;
};

/// Fixed-point iteration on the law: freeze the flow, simulate M independent
/// copies on shared driver draws, rebuild the flow from the copies, repeat.
/// The trace should decay geometrically; three non-decreasing entries in a
/// row raise the contraction warning.
inline PicardResult picard_solve(const CoefficientSet& cs, const DomainFamily& family,
                                 const NoiseConfig& noise, const std::vector<Vec>& initial,
                                 const SimOptions& opts, const PicardOptions& popts = {}) {
    std::vector<std::uint64_t> streams(initial.size());
    for (std::size_t i = 0; i < streams.size(); ++i)
        streams[i] = particle_stream(StreamPhase::picard, 0, i);

    PicardResult res;
    std::vector<CadlagPath> prev;
    prev.reserve(initial.size());
    for (const auto& x : initial) prev.push_back(CadlagPath::constant(x, opts.T));

    LawFlow flow;
    flow.per_step.assign(static_cast<std::size_t>(opts.steps),
                         EmpiricalMeasure::from_points(initial));

    for (int k = 0; k < popts.max_iters; ++k) {
        SystemTrajectory traj =
            simulate_particles(initial, cs, family, noise, opts, streams, &flow);
        res.grid = traj.grid;
        auto [w, method] = detail::path_law_distance(prev, traj.X, traj.grid, cs.d);
        res.trace.push_back(w);
        res.trace_method.push_back(method);
        flow = detail::flow_from_paths(traj.X, opts.steps, cs.d);
        prev = std::move(traj.X);
        res.iterations = k + 1;
        if (w <= popts.tol) {
            res.converged = true;
            break;
        }
    }
    for (std::size_t k = 2; k < res.trace.size(); ++k)
        if (res.trace[k - 2] <= res.trace[k - 1] && res.trace[k - 1] <= res.trace[k])
            res.contraction_warning = true;
    res.paths = std::move(prev);
    res.flow = std::move(flow);
    return res;
}

using InitialSampler = std::function<Vec(CounterRng&)>;

inline std::vector<Vec> sample_initial(const InitialSampler& sampler, const ConvexSet& d0, int count,
                                       std::uint64_t seed, StreamPhase phase, std::uint64_t rep) {
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        CounterRng rng(seed, particle_stream(phase, rep, static_cast<std::uint64_t>(i)), 0,
                       RngChannel::initial);
        out.push_back(project(d0, sampler(rng)));
    }
    return out;
}

struct ChaosRow {
    int N = 0;
    int rep = 0;
    double err_sq = 0.0;  // mean over particles of sup^2 coupling distance
};

struct ChaosWRow {
    int N = 0;
    int rep = 0;
    double t = 0.0;
    double coupled_w = 0.0;      // W2(interacting cloud, reference sample)
    double independent_w = 0.0;  // W2(frozen-flow cloud, reference sample)
};

struct ChaosResult {
    PicardResult reference;
    std::vector<ChaosRow> rows;
    std::vector<ChaosWRow> w_rows;
};

/// Coupled comparison behind the particle-limit estimate: the interacting
/// system and the frozen-flow copies share initial states and driver draws
/// particle by particle, so their gap isolates the measure argument.
inline ChaosResult coupled_chaos_run(const CoefficientSet& cs, const DomainFamily& family,
                                     const NoiseConfig& noise, const std::vector<int>& N_list,
                                     int reps, int ref_paths, const SimOptions& opts,
                                     const PicardOptions& popts, const InitialSampler& sampler,
                                     const std::vector<double>& probe_times) {
    ChaosResult result;
    const std::uint64_t seed = opts.seed ^ noise.seed;

    {
        const auto init =
            sample_initial(sampler, family.at(0.0), ref_paths, seed, StreamPhase::picard, 0);
        SimOptions ref_opts = opts;
        result.reference = picard_solve(cs, family, noise, init, ref_opts, popts);
    }

    std::vector<std::size_t> probe_idx;
    for (double t : probe_times) {
        std::size_t best = 0;
        for (std::size_t g = 1; g < result.reference.grid.size(); ++g)
            if (std::abs(result.reference.grid[g] - t) <
                std::abs(result.reference.grid[best] - t))
                best = g;
        probe_idx.push_back(best);
    }

    struct Job {
        int N, rep;
    };
    std::vector<Job> jobs;
    for (int N : N_list)
        for (int r = 0; r < reps; ++r) jobs.push_back({N, r});
    result.rows.resize(jobs.size());
    std::vector<std::vector<ChaosWRow>> wrows(jobs.size());

    parallel_for(jobs.size(), opts.threads, [&](std::size_t j) {
        const int N = jobs[j].N, rep = jobs[j].rep;
        SimOptions jopts = opts;
        jopts.threads = 1;
        const auto init = sample_initial(sampler, family.at(0.0), N, seed, StreamPhase::chaos,
                                         static_cast<std::uint64_t>(rep));
        std::vector<std::uint64_t> streams(static_cast<std::size_t>(N));
        for (int i = 0; i < N; ++i)
            streams[i] = particle_stream(StreamPhase::chaos, static_cast<std::uint64_t>(rep),
                                         static_cast<std::uint64_t>(i));
        const auto sys = simulate_particles(init, cs, family, noise, jopts, streams);
        const auto lim =
            simulate_particles(init, cs, family, noise, jopts, streams, &result.reference.flow);

        double err = 0.0;
        for (int i = 0; i < N; ++i) {
            double sup = 0.0;
            for (std::size_t g = 0; g < sys.grid.size(); ++g)
                sup = std::max(sup, dist(sys.X[i].values[g], lim.X[i].values[g]));
            err += sup * sup;
        }
        result.rows[j] = {N, rep, err / N};

        for (std::size_t p = 0; p < probe_idx.size(); ++p) {
            const std::size_t g = probe_idx[p];
            ChaosWRow row;
            row.N = N;
            row.rep = rep;
            row.t = result.reference.grid[g];
            if (cs.d == 1) {
                std::vector<double> ref_s, sys_s, lim_s;
                for (const auto& path : result.reference.paths) ref_s.push_back(path.values[g][0]);
                for (int i = 0; i < N; ++i) {
                    sys_s.push_back(sys.X[i].values[g][0]);
                    lim_s.push_back(lim.X[i].values[g][0]);
                }
                row.coupled_w = w2_quantile_1d(sys_s, ref_s);
                row.independent_w = w2_quantile_1d(lim_s, ref_s);
            } else {
                const int k = std::min(N, kAssignmentCap);
                std::vector<Vec> ref_s, sys_s, lim_s;
                for (int i = 0; i < k; ++i) {
                    ref_s.push_back(result.reference.paths[i].values[g]);
                    sys_s.push_back(sys.X[i].values[g]);
                    lim_s.push_back(lim.X[i].values[g]);
                }
                row.coupled_w = w2_point_clouds(sys_s, ref_s).distance;
                row.independent_w = w2_point_clouds(lim_s, ref_s).distance;
            }
            wrows[j].push_back(row);
        }
    });
    for (auto& rows : wrows)
        result.w_rows.insert(result.w_rows.end(), rows.begin(), rows.end());
    return result;
}

struct StabilityRow {
    int n = 0;
    double err_sq = 0.0;  // mean over particles of sup^2 distance to the unperturbed run
};

struct StabilityResult {
    std::vector<StabilityRow> rows;
    double dt_floor_sq = 0.0;  // pathwise gap between dt and dt/2 on shared draws
};

/// Convergence of perturbed systems to the unperturbed one as the
/// perturbation scale 1/n vanishes. All runs share driver draws; the dt floor
/// bounds how much of the remaining gap is discretization.
inline StabilityResult stability_run(const std::function<CoefficientSet(double)>& coeffs_for_scale,
                                     const DomainFamily& family, const NoiseConfig& noise,
                                     const std::vector<int>& n_list, int N, const SimOptions& opts,
                                     const InitialSampler& sampler, bool perturb_initial = true) {
    const std::uint64_t seed = opts.seed ^ noise.seed;
    const auto base_init =
        sample_initial(sampler, family.at(0.0), N, seed, StreamPhase::stability, 0);
    std::vector<std::uint64_t> streams(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i)
        streams[i] = particle_stream(StreamPhase::stability, 0, static_cast<std::uint64_t>(i));

    const CoefficientSet cs0 = coeffs_for_scale(0.0);
    const auto base = simulate_particles(base_init, cs0, family, noise, opts, streams);

    StabilityResult result;
    for (int n : n_list) {
        const double scale = 1.0 / n;
        std::vector<Vec> init = base_init;
        if (perturb_initial) {
            const ConvexSet d0 = family.at(0.0);
            for (int i = 0; i < N; ++i) {
                CounterRng rng(seed, streams[i], 1, RngChannel::misc);
                Vec xi = rng.next_normals(static_cast<std::size_t>(cs0.d));
                axpy(init[i], scale, xi);
                init[i] = project(d0, init[i]);
            }
        }
        const auto run = simulate_particles(init, coeffs_for_scale(scale), family, noise, opts,
                                            streams);
        double err = 0.0;
        for (int i = 0; i < N; ++i) {
            double sup = 0.0;
            for (std::size_t g = 0; g < run.grid.size(); ++g)
                sup = std::max(sup, dist(run.X[i].values[g], base.X[i].values[g]));
            err += sup * sup;
        }
        result.rows.push_back({n, err / N});
    }

    // dt floor: same normals consumed at refine 2 on n steps and refine 1 on
    // 2n steps, compared on the coarse grid.
    SimOptions coarse = opts;
    coarse.brownian_refine = 2 * opts.brownian_refine;
    SimOptions fine = opts;
    fine.steps = 2 * opts.steps;
    const auto run_c = simulate_particles(base_init, cs0, family, noise, coarse, streams);
    const auto run_f = simulate_particles(base_init, cs0, family, noise, fine, streams);
    double err = 0.0;
    for (int i = 0; i < N; ++i) {
        double sup = 0.0;
        for (std::size_t g = 0; g < run_c.grid.size(); ++g)
            sup = std::max(sup, dist(run_c.X[i].values[g], run_f.X[i].values[2 * g]));
        err += sup * sup;
    }
    result.dt_floor_sq = err / N;
    return result;
}

}  // namespace rmv
