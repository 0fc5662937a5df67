#pragma once

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "rmv/common.hpp"

namespace rmv {

/// Uniform atomic measure on k support points in R^d. The mean is computed at
/// construction so coefficient evaluations stay O(1) per particle and the
/// snapshot can be shared read-only across worker threads.
class EmpiricalMeasure {
public:
    EmpiricalMeasure(std::vector<double> flat, int k, int d)
        : pts_(std::move(flat)), k_(k), d_(d) {
        if (k_ < 1 || d_ < 1 || static_cast<int>(pts_.size()) != k_ * d_)
            throw std::invalid_argument("empirical measure: bad support data");
        // sorted accumulation keeps the mean invariant under relabeling of the
        // support points (exact exchangeability of particle systems)
        mean_.assign(d_, 0.0);
        std::vector<double> column(static_cast<std::size_t>(k_));
        for (int c = 0; c < d_; ++c) {
            for (int i = 0; i < k_; ++i) column[i] = pts_[static_cast<std::size_t>(i) * d_ + c];
            std::sort(column.begin(), column.end());
            double s = 0.0;
            for (double v : column) s += v;
            mean_[c] = s / k_;
        }
    }

    static EmpiricalMeasure from_points(const std::vector<Vec>& points) {
        if (points.empty()) throw std::invalid_argument("empirical measure: no points");
        const int d = static_cast<int>(points.front().size());
        std::vector<double> flat;
        flat.reserve(points.size() * d);
        for (const auto& p : points) {
            if (static_cast<int>(p.size()) != d)
                throw std::invalid_argument("empirical measure: ragged points");
            flat.insert(flat.end(), p.begin(), p.end());
        }
        return EmpiricalMeasure(std::move(flat), static_cast<int>(points.size()), d);
    }

    int size() const { return k_; }
    int dim() const { return d_; }
    double at(int i, int c) const { return pts_[static_cast<std::size_t>(i) * d_ + c]; }
    Vec point(int i) const {
        return Vec(pts_.begin() + static_cast<std::size_t>(i) * d_,
                   pts_.begin() + static_cast<std::size_t>(i + 1) * d_);
    }
    const Vec& mean() const { return mean_; }

    std::vector<Vec> points() const {
        std::vector<Vec> out;
        out.reserve(k_);
        for (int i = 0; i < k_; ++i) out.push_back(point(i));
        return out;
    }

private:
    std::vector<double> pts_;
    int k_ = 0, d_ = 0;
    Vec mean_;
};

}  // namespace rmv
