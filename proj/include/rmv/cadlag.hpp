#pragma once

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rmv/common.hpp"

namespace rmv {

/// Piecewise-constant right-continuous path on [0,T]: value values[j] holds on
/// [times[j], times[j+1]). The value at T is the last piece's value, so the
/// terminal left limit matches by construction.
struct CadlagPath {
    std::vector<double> times;  // sorted, times[0] == 0
    std::vector<Vec> values;
    double horizon = 0.0;

    static CadlagPath make(std::vector<double> times, std::vector<Vec> values, double horizon) {
        if (times.empty() || times.size() != values.size())
            throw std::invalid_argument("path: times/values mismatch");
        if (times.front() != 0.0) throw std::invalid_argument("path: must start at t=0");
        if (!std::is_sorted(times.begin(), times.end()))
            throw std::invalid_argument("path: times not sorted");
        if (times.back() > horizon) throw std::invalid_argument("path: breakpoint beyond horizon");
        const std::size_t d = values.front().size();
        for (const auto& v : values)
            if (v.size() != d) throw std::invalid_argument("path: inconsistent dimension");
        return CadlagPath{std::move(times), std::move(values), horizon};
    }

    static CadlagPath constant(Vec v, double horizon) { return make({0.0}, {std::move(v)}, horizon); }

    int dim() const { return static_cast<int>(values.front().size()); }

    /// Right-continuous lookup: the piece whose interval contains t.
    const Vec& at(double t) const {
        if (t < 0.0 || t > horizon) throw std::out_of_range("path: t outside [0,T]");
        auto it = std::upper_bound(times.begin(), times.end(), t);
        return values[static_cast<std::size_t>(it - times.begin()) - 1];
    }
};

inline double sup_norm(const CadlagPath& p) {
    double s = 0.0;
    for (const auto& v : p.values) s = std::max(s, norm(v));
    return s;
}

/// For step functions the total variation is the sum of jump sizes.
inline double total_variation(const CadlagPath& p) {
    double s = 0.0;
    for (std::size_t j = 1; j < p.values.size(); ++j) s += dist(p.values[j], p.values[j - 1]);
    return s;
}

/// Stieltjes pairing sum_{jump times u <= t} <f_u, dk_u> with the integrand
/// evaluated at the jump time (not the left limit).
inline double pairing_integral(const CadlagPath& f, const CadlagPath& k, double t) {
    if (f.dim() != k.dim()) throw std::invalid_argument("pairing_integral: dimension mismatch");
    double s = 0.0;
    for (std::size_t j = 1; j < k.times.size(); ++j) {
        if (k.times[j] > t) break;
        s += dot(f.at(k.times[j]), k.values[j] - k.values[j - 1]);
    }
    return s;
}

inline std::vector<double> merge_times(const CadlagPath& p, const CadlagPath& q) {
    std::vector<double> m;
    m.reserve(p.times.size() + q.times.size());
    std::merge(p.times.begin(), p.times.end(), q.times.begin(), q.times.end(),
               std::back_inserter(m));
    m.erase(std::unique(m.begin(), m.end()), m.end());
    return m;
}

inline double uniform_distance(const CadlagPath& p, const CadlagPath& q) {
    if (p.horizon != q.horizon) throw std::invalid_argument("uniform_distance: horizon mismatch");
    if (p.dim() != q.dim()) throw std::invalid_argument("uniform_distance: dimension mismatch");
    double s = 0.0;
    for (double t : merge_times(p, q)) s = std::max(s, dist(p.at(t), q.at(t)));
    return s;
}

/// Freeze a path on a grid (the y^n of the solver's discretization).
inline CadlagPath restrict_to_grid(const CadlagPath& p, const std::vector<double>& grid) {
    std::vector<Vec> vals;
    vals.reserve(grid.size());
    for (double t : grid) vals.push_back(p.at(t));
    return CadlagPath::make(grid, std::move(vals), p.horizon);
}

/// CSV format: header "t,v1,..,vd", one row per breakpoint.
inline CadlagPath read_path_csv(const std::string& file, double horizon) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open path file: " + file);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty path file: " + file);
    std::vector<double> times;
    std::vector<Vec> values;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        Vec row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (row.size() < 2) throw std::runtime_error("bad path row: " + line);
        times.push_back(row[0]);
        values.emplace_back(row.begin() + 1, row.end());
    }
    return CadlagPath::make(std::move(times), std::move(values), horizon);
}

inline void write_path_csv(const std::string& file, const CadlagPath& p,
                           const std::string& value_prefix = "v") {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write path file: " + file);
    out << "t";
    for (int i = 1; i <= p.dim(); ++i) out << "," << value_prefix << i;
    out << "\n";
    for (std::size_t j = 0; j < p.times.size(); ++j) {
        out << format_double(p.times[j]);
        for (double v : p.values[j]) out << "," << format_double(v);
        out << "\n";
    }
}

}  // namespace rmv
