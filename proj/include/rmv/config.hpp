#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmv/cadlag.hpp"
#include "rmv/coefficients.hpp"
#include "rmv/common.hpp"
#include "rmv/convex.hpp"
#include "rmv/domain.hpp"
#include "rmv/drivers.hpp"
#include "rmv/mckean.hpp"

namespace rmv {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Flat INI-style config: [section] headers, key = value lines, '#' or ';'
/// comments. Keys may be dotted (piece.0.kind). Values are scalars or
/// comma-separated vectors. Line numbers are kept for diagnostics.
class ConfigFile {
public:
    struct Entry {
        std::string value;
        int line = 0;
        mutable bool used = false;
    };

    static ConfigFile parse_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return parse_text(ss.str(), path);
    }

    static ConfigFile parse_text(const std::string& text, const std::string& label = "<config>") {
        ConfigFile cfg;
        cfg.label_ = label;
        std::istringstream in(text);
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find_first_of("#;");
            if (hash != std::string::npos) line.erase(hash);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw ConfigError(label + ":" + std::to_string(lineno) +
                                      ": unterminated section header");
                section = trim(line.substr(1, line.size() - 2));
                if (section.empty())
                    throw ConfigError(label + ":" + std::to_string(lineno) + ": empty section name");
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(label + ":" + std::to_string(lineno) + ": expected key = value");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty())
                throw ConfigError(label + ":" + std::to_string(lineno) + ": empty key");
            const std::string full = section.empty() ? key : section + "." + key;
            if (cfg.entries_.count(full))
                throw ConfigError(label + ":" + std::to_string(lineno) + ": duplicate key " + full);
            cfg.entries_[full] = {value, lineno, false};
        }
        return cfg;
    }

    bool has(const std::string& key) const { return entries_.count(key) != 0; }

    const std::string& require(const std::string& key) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) throw ConfigError(label_ + ": missing required field " + key);
        it->second.used = true;
        return it->second.value;
    }

    std::string get(const std::string& key, const std::string& fallback) const {
        auto it = entries_.find(key);
        if (it == entries_.end()) return fallback;
        it->second.used = true;
        return it->second.value;
    }

    double require_double(const std::string& key) const { return to_double(key, require(key)); }
    double get_double(const std::string& key, double fallback) const {
        return has(key) ? require_double(key) : fallback;
    }
    long long require_int(const std::string& key) const { return to_int(key, require(key)); }
    long long get_int(const std::string& key, long long fallback) const {
        return has(key) ? require_int(key) : fallback;
    }

    Vec require_vec(const std::string& key) const {
        const std::string& raw = require(key);
        Vec out;
        std::istringstream ss(raw);
        std::string tok;
        while (std::getline(ss, tok, ',')) out.push_back(to_double(key, trim(tok)));
        if (out.empty()) throw field_error(key, "expected at least one number");
        return out;
    }

    std::vector<int> require_int_list(const std::string& key) const {
        const std::string& raw = require(key);
        std::vector<int> out;
        std::istringstream ss(raw);
        std::string tok;
        while (std::getline(ss, tok, ','))
            out.push_back(static_cast<int>(to_int(key, trim(tok))));
        if (out.empty()) throw field_error(key, "expected at least one integer");
        return out;
    }

    /// FNV hash over sorted semantic key=value pairs. Output location and
    /// thread count do not change results, so they are excluded.
    std::uint64_t semantic_hash() const {
        std::uint64_t h = 0xcbf29ce484222325ull;
        for (const auto& [key, entry] : entries_) {
            if (key.rfind("output.", 0) == 0 || key == "experiment.threads") continue;
            h = fnv1a(h, key);
            h = fnv1a(h, "=");
            h = fnv1a(h, entry.value);
        }
        return h;
    }

    std::vector<std::string> unused_keys() const {
        std::vector<std::string> out;
        for (const auto& [key, entry] : entries_) {
            if (!entry.used) out.push_back(key);
        }
        return out;
    }

    const std::map<std::string, Entry>& entries() const { return entries_; }
    const std::string& label() const { return label_; }

    /// Numeric parameters of one section (used for coefficient families).
    ParamMap section_params(const std::string& section,
                            const std::vector<std::string>& skip = {}) const {
        ParamMap out;
        const std::string prefix = section + ".";
        for (const auto& [key, entry] : entries_) {
            if (key.rfind(prefix, 0) != 0) continue;
            const std::string short_key = key.substr(prefix.size());
            if (std::find(skip.begin(), skip.end(), short_key) != skip.end()) continue;
            out[short_key] = to_double(key, entry.value);
            entry.used = true;
        }
        return out;
    }

private:
    static std::string trim(const std::string& s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return "";
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    }

    ConfigError field_error(const std::string& key, const std::string& what) const {
        auto it = entries_.find(key);
        const std::string loc =
            it == entries_.end() ? label_ : label_ + ":" + std::to_string(it->second.line);
        return ConfigError(loc + ": field " + key + ": " + what);
    }

    double to_double(const std::string& key, const std::string& raw) const {
        try {
            std::size_t pos = 0;
            const double v = std::stod(raw, &pos);
            if (pos != raw.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw field_error(key, "not a number: '" + raw + "'");
        }
    }

    long long to_int(const std::string& key, const std::string& raw) const {
        try {
            std::size_t pos = 0;
            const long long v = std::stoll(raw, &pos);
            if (pos != raw.size()) throw std::invalid_argument("");
            return v;
        } catch (const std::exception&) {
            throw field_error(key, "not an integer: '" + raw + "'");
        }
    }

    std::map<std::string, Entry> entries_;
    std::string label_;
};

namespace detail {

inline ConvexSet parse_set(const ConfigFile& cfg, const std::string& prefix) {
    const std::string kind = cfg.require(prefix + ".kind");
    if (kind == "ball") {
        return ConvexSet::make_ball(cfg.require_vec(prefix + ".center"),
                                    cfg.require_double(prefix + ".radius"));
    }
    if (kind == "box") {
        return ConvexSet::make_box(cfg.require_vec(prefix + ".lo"),
                                   cfg.require_vec(prefix + ".hi"));
    }
    if (kind == "polytope") {
        std::vector<Vec> rows;
        Vec offsets;
        for (int r = 0; cfg.has(prefix + ".normal." + std::to_string(r)); ++r) {
            rows.push_back(cfg.require_vec(prefix + ".normal." + std::to_string(r)));
            offsets.push_back(cfg.require_double(prefix + ".offset." + std::to_string(r)));
        }
        if (rows.empty())
            throw ConfigError(cfg.label() + ": polytope " + prefix + " has no facets");
        Mat normals(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != rows.front().size())
                throw ConfigError(cfg.label() + ": ragged polytope normals at " + prefix);
            for (std::size_t c = 0; c < rows[r].size(); ++c)
                normals(static_cast<int>(r), static_cast<int>(c)) = rows[r][c];
        }
        return ConvexSet::make_polytope(std::move(normals), std::move(offsets));
    }
    if (kind == "intersection") {
        std::vector<ConvexSet> members;
        for (int j = 0; cfg.has(prefix + ".member." + std::to_string(j) + ".kind"); ++j)
            members.push_back(parse_set(cfg, prefix + ".member." + std::to_string(j)));
        if (members.empty())
            throw ConfigError(cfg.label() + ": intersection " + prefix + " has no members");
        return ConvexSet::make_intersection(std::move(members));
    }
    throw ConfigError(cfg.label() + ": unknown set kind '" + kind + "' at " + prefix);
}

}  // namespace detail

inline DomainFamily parse_domain(const ConfigFile& cfg) {
    const double T = cfg.require_double("domain.horizon");
    std::vector<double> times;
    std::vector<ConvexSet> pieces;
    for (int p = 0; cfg.has("domain.piece." + std::to_string(p) + ".kind"); ++p) {
        const std::string prefix = "domain.piece." + std::to_string(p);
        times.push_back(cfg.get_double(prefix + ".t_start", p == 0 ? 0.0 : -1.0));
        pieces.push_back(detail::parse_set(cfg, prefix));
    }
    if (pieces.empty()) throw ConfigError(cfg.label() + ": [domain] has no pieces");
    for (std::size_t p = 1; p < times.size(); ++p)
        if (times[p] < 0.0)
            throw ConfigError(cfg.label() + ": domain.piece." + std::to_string(p) +
                              ".t_start missing");
    std::optional<CadlagPath> anchor;
    if (cfg.has("domain.anchor_file"))
        anchor = read_path_csv(cfg.require("domain.anchor_file"), T);
    return DomainFamily::make(T, std::move(times), std::move(pieces), std::move(anchor));
}

inline MarkDistribution parse_marks(const ConfigFile& cfg) {
    const std::string kind = cfg.get("noise.mark.kind", "two_point");
    if (kind == "two_point")
        return MarkDistribution::two_point(cfg.require_vec("noise.mark.lo"),
                                           cfg.require_vec("noise.mark.hi"),
                                           cfg.get_double("noise.mark.p_hi", 0.5));
    if (kind == "gaussian")
        return MarkDistribution::gaussian(cfg.require_vec("noise.mark.mean"),
                                          cfg.require_double("noise.mark.sd"));
    if (kind == "uniform_ball")
        return MarkDistribution::uniform_ball(
            static_cast<int>(cfg.require_int("noise.mark.dim")),
            cfg.require_double("noise.mark.radius"));
    if (kind == "discrete") {
        std::vector<Vec> atoms;
        Vec probs;
        for (int a = 0; cfg.has("noise.mark.atom." + std::to_string(a)); ++a) {
            atoms.push_back(cfg.require_vec("noise.mark.atom." + std::to_string(a)));
            probs.push_back(cfg.require_double("noise.mark.prob." + std::to_string(a)));
        }
        return MarkDistribution::discrete(std::move(atoms), std::move(probs));
    }
    throw ConfigError(cfg.label() + ": unknown mark kind '" + kind + "'");
}

inline NoiseConfig parse_noise(const ConfigFile& cfg, int d) {
    NoiseConfig noise;
    noise.brownian_dim = static_cast<int>(cfg.get_int("noise.brownian_dim", d));
    noise.intensity = cfg.get_double("noise.intensity", 0.0);
    if (noise.intensity < 0.0)
        throw ConfigError(cfg.label() + ": noise.intensity must be nonnegative");
    if (noise.intensity > 0.0) noise.marks = parse_marks(cfg);
    noise.seed = static_cast<std::uint64_t>(cfg.get_int("noise.seed", 0));
    return noise;
}

/// Initial-law sampler from [initial]: point, uniform_box, or gaussian.
/// Samples are projected into D_0 by the caller.
inline InitialSampler parse_initial(const ConfigFile& cfg, int d) {
    const std::string kind = cfg.get("initial.kind", "point");
    if (kind == "point") {
        Vec x = cfg.has("initial.value") ? cfg.require_vec("initial.value") : zeros(d);
        if (static_cast<int>(x.size()) != d)
            throw ConfigError(cfg.label() + ": initial.value has wrong dimension");
        return [x](CounterRng&) { return x; };
    }
    if (kind == "uniform_box") {
        const Vec lo = cfg.require_vec("initial.lo"), hi = cfg.require_vec("initial.hi");
        if (static_cast<int>(lo.size()) != d || static_cast<int>(hi.size()) != d)
            throw ConfigError(cfg.label() + ": initial box has wrong dimension");
        return [lo, hi](CounterRng& rng) {
            Vec x(lo.size());
            for (std::size_t c = 0; c < x.size(); ++c)
                x[c] = lo[c] + (hi[c] - lo[c]) * rng.next_uniform();
            return x;
        };
    }
    if (kind == "gaussian") {
        const Vec mean = cfg.has("initial.mean") ? cfg.require_vec("initial.mean") : zeros(d);
        const double sd = cfg.get_double("initial.sd", 1.0);
        if (static_cast<int>(mean.size()) != d)
            throw ConfigError(cfg.label() + ": initial.mean has wrong dimension");
        return [mean, sd](CounterRng& rng) {
            Vec x = rng.next_normals(mean.size());
            for (std::size_t c = 0; c < x.size(); ++c) x[c] = mean[c] + sd * x[c];
            return x;
        };
    }
    throw ConfigError(cfg.label() + ": unknown initial kind '" + kind + "'");
}

inline CoefficientSet parse_coefficients(const ConfigFile& cfg, int d, int m) {
    const std::string family = cfg.require("coefficients.family");
    const ParamMap params = cfg.section_params("coefficients", {"family"});
    return make_coefficients(family, d, m, params);
}

/// Everything an experiment run needs, resolved and validated.
struct ExperimentConfig {
    std::string kind;
    std::uint64_t seed = 0;
    int threads = 1;
    std::string out_dir = "out";
    std::uint64_t config_hash = 0;

    DomainFamily family;
    int d = 1;

    // simulation experiments
    CoefficientSet coeffs;
    std::string coeff_family;
    ParamMap coeff_params;
    NoiseConfig noise;
    InitialSampler initial;
    double T = 1.0;
    int steps = 100;
    int N = 0;
    std::vector<int> N_list;
    int M = 0;
    int reps = 1;
    std::vector<int> n_list;
    int picard_max_iters = 8;
    double picard_tol = 1e-3;
    std::vector<double> probe_times;

    // stability experiment
    double stability_amp = 1.0;
    double stability_freq = 3.0;
    bool stability_perturb_initial = true;

    // wasserstein experiment
    std::string w_a_file, w_b_file;
    std::string w_mode = "cloud";

    // skorokhod experiment
    std::string path_file;
    int n = 32;
    std::vector<int> refine_list;
};

inline ExperimentConfig load_experiment(const ConfigFile& cfg) {
    ExperimentConfig ec;
    ec.kind = cfg.require("experiment.kind");
    static const std::vector<std::string> kinds = {"skorokhod", "simulate",  "picard",
                                                   "chaos",     "stability", "wasserstein"};
    if (std::find(kinds.begin(), kinds.end(), ec.kind) == kinds.end())
        throw ConfigError(cfg.label() + ": unknown experiment kind '" + ec.kind + "'");
    ec.seed = static_cast<std::uint64_t>(cfg.require_int("experiment.seed"));
    ec.threads = static_cast<int>(cfg.get_int("experiment.threads", 1));
    ec.out_dir = cfg.get("output.dir", "out");
    ec.config_hash = cfg.semantic_hash();
    if (ec.kind == "wasserstein") {
        ec.w_a_file = cfg.get("wasserstein.a_file", "");
        ec.w_b_file = cfg.get("wasserstein.b_file", "");
        ec.w_mode = cfg.get("wasserstein.mode", "cloud");
        if (ec.w_mode != "cloud" && ec.w_mode != "path")
            throw ConfigError(cfg.label() + ": wasserstein.mode must be cloud or path");
        return ec;
    }

    ec.family = parse_domain(cfg);
    ec.d = ec.family.dim();
    ec.T = ec.family.horizon;

    if (ec.kind == "skorokhod") {
        ec.path_file = cfg.get("skorokhod.path_file", "");
        ec.n = static_cast<int>(cfg.get_int("skorokhod.n", 32));
        if (cfg.has("skorokhod.refine_list"))
            ec.refine_list = cfg.require_int_list("skorokhod.refine_list");
        return ec;
    }

    ec.noise = parse_noise(cfg, ec.d);
    ec.coeff_family = cfg.require("coefficients.family");
    ec.coeff_params = cfg.section_params("coefficients", {"family"});
    ec.coeffs = make_coefficients(ec.coeff_family, ec.d, ec.noise.brownian_dim, ec.coeff_params);
    ec.initial = parse_initial(cfg, ec.d);
    ec.steps = static_cast<int>(cfg.require_int("numerics.steps"));
    if (ec.steps < 1) throw ConfigError(cfg.label() + ": numerics.steps must be positive");
    ec.N = static_cast<int>(cfg.get_int("numerics.N", 0));
    if (cfg.has("numerics.N_list")) ec.N_list = cfg.require_int_list("numerics.N_list");
    ec.M = static_cast<int>(cfg.get_int("numerics.M", 0));
    ec.reps = static_cast<int>(cfg.get_int("numerics.reps", 1));
    if (cfg.has("numerics.n_list")) ec.n_list = cfg.require_int_list("numerics.n_list");
    ec.picard_max_iters = static_cast<int>(cfg.get_int("numerics.picard_max_iters", 8));
    ec.picard_tol = cfg.get_double("numerics.picard_tol", 1e-3);
    if (cfg.has("numerics.probe_times")) ec.probe_times = cfg.require_vec("numerics.probe_times");

    if (ec.kind == "simulate" || ec.kind == "stability") {
        if (ec.N < 1) throw ConfigError(cfg.label() + ": numerics.N required and positive");
    }
    if (ec.kind == "picard") {
        if (ec.M < 2) throw ConfigError(cfg.label() + ": numerics.M must be at least 2");
    }
    if (ec.kind == "chaos") {
        if (ec.N_list.size() < 2 ||
            !std::is_sorted(ec.N_list.begin(), ec.N_list.end()))
            throw ConfigError(cfg.label() + ": numerics.N_list must be ascending, length >= 2");
        if (ec.M == 0) ec.M = 4 * ec.N_list.back();
    }
    if (ec.kind == "stability") {
        if (ec.n_list.empty())
            throw ConfigError(cfg.label() + ": numerics.n_list required for stability");
        ec.stability_amp = cfg.get_double("stability.amp", 1.0);
        ec.stability_freq = cfg.get_double("stability.freq", 3.0);
        ec.stability_perturb_initial = cfg.get_int("stability.perturb_initial", 1) != 0;
    }
    return ec;
}

}  // namespace rmv
