#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmv/config.hpp"
#include "rmv/mckean.hpp"
#include "rmv/skorokhod.hpp"
#include "rmv/wasserstein.hpp"

namespace rmv {

inline constexpr const char* kVersion = "0.1.0";

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

struct RateRow {
    double n = 0.0;
    double value = 0.0;
    double stderr_ = 0.0;
};

/// Weighted least squares of log(value) on log(n); weights from the
/// delta-method variance (stderr/value)^2, unweighted when stderrs are zero.
/// CI is slope +- 1.96 se.
inline RateFit fit_rate(const std::vector<RateRow>& rows) {
    if (rows.size() < 3) throw std::invalid_argument("fit_rate: need at least 3 rows");
    std::vector<double> x, y, w;
    for (const auto& r : rows) {
        if (!(r.value > 0.0) || !(r.n > 0.0))
            throw std::invalid_argument("fit_rate: values and sizes must be positive");
        x.push_back(std::log(r.n));
        y.push_back(std::log(r.value));
        const double se_log = r.stderr_ > 0.0 ? r.stderr_ / r.value : 0.0;
        w.push_back(se_log > 0.0 ? 1.0 / (se_log * se_log) : -1.0);
    }
    bool weighted = true;
    for (double wi : w)
        if (wi <= 0.0) weighted = false;
    if (!weighted) std::fill(w.begin(), w.end(), 1.0);

    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sw += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
        sxx += w[i] * x[i] * x[i];
        sxy += w[i] * x[i] * y[i];
    }
    const double det = sw * sxx - sx * sx;
    if (std::abs(det) < 1e-14) throw std::invalid_argument("fit_rate: degenerate design");
    RateFit fit;
    fit.slope = (sw * sxy - sx * sy) / det;
    fit.intercept = (sxx * sy - sx * sxy) / det;
    if (weighted) {
        fit.slope_se = std::sqrt(sw / det);
    } else {
        double rss = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - fit.intercept - fit.slope * x[i];
            rss += r * r;
        }
        const double s2 = rss / std::max<std::size_t>(1, x.size() - 2);
        fit.slope_se = std::sqrt(s2 * sw / det);
    }
    fit.ci_lo = fit.slope - 1.96 * fit.slope_se;
    fit.ci_hi = fit.slope + 1.96 * fit.slope_se;
    return fit;
}

namespace detail {

class CsvWriter {
public:
    CsvWriter(const std::string& file, const std::vector<std::string>& header) : out_(file, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot write " + file);
        for (std::size_t i = 0; i < header.size(); ++i)
            out_ << (i ? "," : "") << header[i];
        out_ << "\n";
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i)
            out_ << (i ? "," : "") << cells[i];
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

inline std::string fd(double v) { return format_double(v); }
inline std::string fi(long long v) { return std::to_string(v); }

}  // namespace detail

/// Manifest: run metadata plus named pass/fail checks, written as flat
/// key = value text. A run fails (nonzero exit) iff any hard check fails.
class Manifest {
public:
    void set(const std::string& key, const std::string& value) {
        lines_.push_back(key + " = " + value);
    }
    void set(const std::string& key, double value) { set(key, format_double(value)); }
    void check(const std::string& name, bool pass, bool hard = true) {
        lines_.push_back("check." + name + " = " + (pass ? "pass" : "fail"));
        if (!pass && hard) failed_ = true;
    }
    bool failed() const { return failed_; }
    void write(const std::string& file) const {
        std::ofstream out(file, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + file);
        for (const auto& l : lines_) out << l << "\n";
    }

private:
    std::vector<std::string> lines_;
    bool failed_ = false;
};

namespace detail {

inline std::string hex64(std::uint64_t v) {
    std::ostringstream ss;
    ss << std::hex << v;
    return ss.str();
}

inline void stamp(Manifest& man, const ExperimentConfig& ec) {
    man.set("experiment", ec.kind);
    man.set("version", kVersion);
    man.set("config_hash", hex64(ec.config_hash));
    man.set("seed", fi(static_cast<long long>(ec.seed)));
    man.set("threads", fi(ec.threads));
}

inline std::vector<Vec> read_cloud_csv(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open cloud file: " + file);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty cloud file: " + file);
    std::vector<Vec> pts;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        Vec row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        pts.push_back(std::move(row));
    }
    if (pts.empty()) throw std::runtime_error("cloud file has no points: " + file);
    return pts;
}

/// Multi-path CSV: columns t,id,v1..vd; rows grouped by id.
inline std::vector<CadlagPath> read_paths_csv(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open path file: " + file);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty path file: " + file);
    std::map<long long, std::pair<std::vector<double>, std::vector<Vec>>> groups;
    double horizon = 0.0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        Vec row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() < 3) throw std::runtime_error("bad path row: " + line);
        auto& g = groups[static_cast<long long>(row[1])];
        g.first.push_back(row[0]);
        g.second.emplace_back(row.begin() + 2, row.end());
        horizon = std::max(horizon, row[0]);
    }
    std::vector<CadlagPath> paths;
    for (auto& [id, g] : groups)
        paths.push_back(CadlagPath::make(std::move(g.first), std::move(g.second), horizon));
    return paths;
}

inline int run_skorokhod(const ExperimentConfig& ec, const std::string& out) {
    Manifest man;
    stamp(man, ec);
    if (ec.path_file.empty()) throw ConfigError("skorokhod.path_file is required");
    const CadlagPath y = read_path_csv(ec.path_file, ec.T);
    const auto sol = solve_skorokhod(y, ec.family, ec.n);

    CsvWriter csv(out + "/skorokhod_solution.csv", [&] {
        std::vector<std::string> h{"t"};
        for (int c = 1; c <= ec.d; ++c) h.push_back("x" + std::to_string(c));
        for (int c = 1; c <= ec.d; ++c) h.push_back("k" + std::to_string(c));
        return h;
    }());
    for (std::size_t j = 0; j < sol.partition.size(); ++j) {
        std::vector<std::string> cells{fd(sol.partition[j])};
        for (double v : sol.x.values[j]) cells.push_back(fd(v));
        for (double v : sol.k.values[j]) cells.push_back(fd(v));
        csv.row(cells);
    }

    man.set("n", fi(ec.n));
    man.set("partition_points", fi(static_cast<long long>(sol.partition.size())));
    man.set("k_variation", sol.k_variation);
    man.set("max_violation", sol.residuals.max_violation);
    man.set("max_vi", sol.residuals.max_vi);
    man.set("measured_c", sol.residuals.measured_c);
    man.check("constraint", sol.residuals.max_violation <= 10 * kProjTol);
    man.check("variational_inequality",
              sol.residuals.max_vi <= 1e-8 * (1.0 + sol.k_variation));

    if (!ec.refine_list.empty()) {
        const auto rows = refinement_study(y, ec.family, ec.refine_list);
        CsvWriter ref(out + "/skorokhod_refinement.csv", {"n", "dist_to_finest", "k_variation"});
        for (const auto& r : rows) ref.row({fi(r.n), fd(r.dist_to_finest), fd(r.k_variation)});
    }
    man.write(out + "/manifest.txt");
    return man.failed() ? 1 : 0;
}

inline std::vector<std::string> traj_header(int d) {
    std::vector<std::string> h{"t", "particle"};
    for (int c = 1; c <= d; ++c) h.push_back("x" + std::to_string(c));
    for (int c = 1; c <= d; ++c) h.push_back("k" + std::to_string(c));
    return h;
}

inline void write_trajectories(const std::string& file, const SystemTrajectory& traj, int d) {
    CsvWriter csv(file, traj_header(d));
    for (std::size_t g = 0; g < traj.grid.size(); ++g)
        for (std::size_t i = 0; i < traj.X.size(); ++i) {
            std::vector<std::string> cells{fd(traj.grid[g]), fi(static_cast<long long>(i))};
            for (double v : traj.X[i].values[g]) cells.push_back(fd(v));
            for (double v : traj.K[i].values[g]) cells.push_back(fd(v));
            csv.row(cells);
        }
}

inline int run_simulate(const ExperimentConfig& ec, const std::string& out) {
    Manifest man;
    stamp(man, ec);
    SimOptions opts{ec.T, ec.steps, ec.threads, 1, ec.seed};
    const std::uint64_t seed = ec.seed ^ ec.noise.seed;
    const auto init =
        sample_initial(ec.initial, ec.family.at(0.0), ec.N, seed, StreamPhase::system, 0);
    std::vector<std::uint64_t> streams(static_cast<std::size_t>(ec.N));
    for (int i = 0; i < ec.N; ++i)
        streams[i] = particle_stream(StreamPhase::system, 0, static_cast<std::uint64_t>(i));
    const auto traj = simulate_particles(init, ec.coeffs, ec.family, ec.noise, opts, streams);
    write_trajectories(out + "/trajectories.csv", traj, ec.d);

    double kv = 0.0;
    for (double v : traj.k_variation) kv = std::max(kv, v);
    man.set("N", fi(ec.N));
    man.set("steps", fi(ec.steps));
    man.set("max_k_variation", kv);
    man.set("max_violation", traj.max_violation);
    man.set("max_vi", traj.max_vi);
    man.check("constraint", traj.max_violation <= 10 * kProjTol);
    man.check("variational_inequality", traj.max_vi <= 1e-8 * (1.0 + kv));
    man.write(out + "/manifest.txt");
    return man.failed() ? 1 : 0;
}

inline int run_picard(const ExperimentConfig& ec, const std::string& out) {
    Manifest man;
    stamp(man, ec);
    SimOptions opts{ec.T, ec.steps, ec.threads, 1, ec.seed};
    const std::uint64_t seed = ec.seed ^ ec.noise.seed;
    const auto init =
        sample_initial(ec.initial, ec.family.at(0.0), ec.M, seed, StreamPhase::picard, 0);
    PicardOptions popts{ec.picard_max_iters, ec.picard_tol};
    const auto res = picard_solve(ec.coeffs, ec.family, ec.noise, init, opts, popts);

    CsvWriter csv(out + "/picard_trace.csv", {"iter", "w", "method"});
    for (std::size_t k = 0; k < res.trace.size(); ++k)
        csv.row({fi(static_cast<long long>(k)), fd(res.trace[k]), res.trace_method[k]});
    write_trajectories(out + "/picard_paths.csv", [&] {
        SystemTrajectory t;
        t.grid = res.grid;
        t.X = res.paths;
        t.K.assign(res.paths.size(),
                   restrict_to_grid(CadlagPath::constant(zeros(ec.d), ec.T), res.grid));
        return t;
    }(), ec.d);

    man.set("M", fi(ec.M));
    man.set("iterations", fi(res.iterations));
    man.set("final_trace", res.trace.empty() ? 0.0 : res.trace.back());
    man.check("converged", res.converged);
    man.check("contraction", !res.contraction_warning, false);
    man.write(out + "/manifest.txt");
    return man.failed() ? 1 : 0;
}

inline int run_chaos(const ExperimentConfig& ec, const std::string& out) {
    Manifest man;
    stamp(man, ec);
    SimOptions opts{ec.T, ec.steps, ec.threads, 1, ec.seed};
    PicardOptions popts{ec.picard_max_iters, ec.picard_tol};
    std::vector<double> probes = ec.probe_times;
    if (probes.empty()) probes = {0.25 * ec.T, 0.5 * ec.T, 0.75 * ec.T, ec.T};
    const auto res = coupled_chaos_run(ec.coeffs, ec.family, ec.noise, ec.N_list, ec.reps, ec.M,
                                       opts, popts, ec.initial, probes);

    // aggregate per N
    std::vector<RateRow> table;
    for (int N : ec.N_list) {
        double sum = 0.0, sum2 = 0.0;
        int count = 0;
        for (const auto& r : res.rows)
            if (r.N == N) {
                sum += r.err_sq;
                sum2 += r.err_sq * r.err_sq;
                ++count;
            }
        const double mean = sum / count;
        const double var = std::max(0.0, sum2 / count - mean * mean);
        const double se = count > 1 ? std::sqrt(var / (count - 1)) : 0.0;
        table.push_back({static_cast<double>(N), mean, se});
    }

    CsvWriter csv(out + "/chaos_table.csv", {"N", "error", "stderr"});
    for (const auto& r : table)
        csv.row({fi(static_cast<long long>(r.n)), fd(r.value), fd(r.stderr_)});
    CsvWriter wcsv(out + "/chaos_w.csv", {"N", "rep", "t", "coupled_w", "independent_w"});
    for (const auto& r : res.w_rows)
        wcsv.row({fi(r.N), fi(r.rep), fd(r.t), fd(r.coupled_w), fd(r.independent_w)});
    CsvWriter rcsv(out + "/chaos_reps.csv", {"N", "rep", "err_sq"});
    for (const auto& r : res.rows) rcsv.row({fi(r.N), fi(r.rep), fd(r.err_sq)});

    bool decreasing = true;
    for (std::size_t i = 1; i < table.size(); ++i)
        if (!(table[i].value < table[i - 1].value -
                                  (table[i].stderr_ + table[i - 1].stderr_)))
            decreasing = false;
    const RateFit fit = fit_rate(table);
    man.set("M", fi(ec.M));
    man.set("reps", fi(ec.reps));
    man.set("slope", fit.slope);
    man.set("slope_se", fit.slope_se);
    man.set("slope_ci_lo", fit.ci_lo);
    man.set("slope_ci_hi", fit.ci_hi);
    man.set("picard_iterations", fi(res.reference.iterations));
    man.check("reference_converged", res.reference.converged, false);
    man.check("monotone_decrease", decreasing);
    man.write(out + "/manifest.txt");
    return man.failed() ? 1 : 0;
}

inline int run_stability(const ExperimentConfig& ec, const std::string& out) {
    Manifest man;
    stamp(man, ec);
    SimOptions opts{ec.T, ec.steps, ec.threads, 1, ec.seed};
    auto coeffs_for_scale = [&](double scale) {
        ParamMap params = ec.coeff_params;
        params["perturb_scale"] = scale * ec.stability_amp;
        params["perturb_freq"] = ec.stability_freq;
        return make_coefficients(ec.coeff_family, ec.d, ec.noise.brownian_dim, params);
    };
    const auto res = stability_run(coeffs_for_scale, ec.family, ec.noise, ec.n_list, ec.N, opts,
                                   ec.initial, ec.stability_perturb_initial);

    CsvWriter csv(out + "/stability_table.csv", {"n", "err_sq"});
    for (const auto& r : res.rows) csv.row({fi(r.n), fd(r.err_sq)});

    bool nonincreasing = true;
    for (std::size_t i = 1; i < res.rows.size(); ++i)
        if (res.rows[i].err_sq > res.rows[i - 1].err_sq * 1.0000001) nonincreasing = false;
    man.set("N", fi(ec.N));
    man.set("dt_floor_sq", res.dt_floor_sq);
    man.set("final_err_sq", res.rows.empty() ? 0.0 : res.rows.back().err_sq);
    man.check("nonincreasing", nonincreasing);
    man.check("final_below_10x_floor",
              res.rows.empty() || res.rows.back().err_sq <= 10.0 * res.dt_floor_sq);
    man.write(out + "/manifest.txt");
    return man.failed() ? 1 : 0;
}

inline int run_wasserstein(const ExperimentConfig& ec, const std::string& out) {
    Manifest man;
    stamp(man, ec);
    if (ec.w_a_file.empty() || ec.w_b_file.empty())
        throw ConfigError("wasserstein.a_file and wasserstein.b_file are required");
    TransportResult res;
    if (ec.w_mode == "cloud") {
        res = w2_point_clouds(read_cloud_csv(ec.w_a_file), read_cloud_csv(ec.w_b_file));
    } else {
        const auto pa = read_paths_csv(ec.w_a_file);
        const auto pb = read_paths_csv(ec.w_b_file);
        const double t = std::max(pa.front().horizon, pb.front().horizon);
        res = w2_paths(pa, pb, t);
    }
    const char* method = res.method == TransportMethod::sort        ? "sort"
                         : res.method == TransportMethod::assignment ? "assignment"
                                                                     : "sinkhorn";
    std::cout << "distance = " << format_double(res.distance) << "\n"
              << "method = " << method << "\n"
              << "certified = " << (res.certified ? "true" : "false") << "\n";
    man.set("distance", res.distance);
    man.set("method", method);
    man.set("certified", res.certified ? "true" : "false");
    man.write(out + "/manifest.txt");
    return 0;
}

}  // namespace detail

/// Runs one experiment: artifacts land in the output directory, a manifest
/// records metadata and per-check results, nonzero status on any hard check
/// failure.
inline int run_experiment(const ExperimentConfig& ec) {
    std::filesystem::create_directories(ec.out_dir);
    const std::string out = ec.out_dir;
    if (ec.kind == "skorokhod") return detail::run_skorokhod(ec, out);
    if (ec.kind == "simulate") return detail::run_simulate(ec, out);
    if (ec.kind == "picard") return detail::run_picard(ec, out);
    if (ec.kind == "chaos") return detail::run_chaos(ec, out);
    if (ec.kind == "stability") return detail::run_stability(ec, out);
    if (ec.kind == "wasserstein") return detail::run_wasserstein(ec, out);
    throw ConfigError("unknown experiment kind: " + ec.kind);
}

}  // namespace rmv
