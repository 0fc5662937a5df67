#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rmv/cadlag.hpp"
#include "rmv/convex.hpp"

namespace rmv {

struct ValidationReport {
    bool ok = false;
    double anchor_margin = 0.0;
    bool terminal_continuity = false;  // D_T = D_{T^-}
    std::vector<std::string> messages;
};

/// Time-dependent domain t -> D_t, piecewise constant in time and
/// right-continuous; pieces[j] holds on [times[j], times[j+1]).
struct DomainFamily {
    double horizon = 0.0;
    std::vector<double> times;
    std::vector<ConvexSet> pieces;
    std::optional<CadlagPath> anchor;
    double anchor_margin = 0.0;

    static DomainFamily make(double horizon, std::vector<double> times,
                             std::vector<ConvexSet> pieces,
                             std::optional<CadlagPath> anchor = std::nullopt) {
        if (times.empty() || times.size() != pieces.size())
            throw std::invalid_argument("domain family: times/pieces mismatch");
        if (times.front() != 0.0) throw std::invalid_argument("domain family: must start at t=0");
        if (!std::is_sorted(times.begin(), times.end()))
            throw std::invalid_argument("domain family: times not sorted");
        if (times.back() > horizon)
            throw std::invalid_argument("domain family: breakpoint beyond horizon");
        const int d = pieces.front().dim();
        for (const auto& p : pieces)
            if (p.dim() != d) throw std::invalid_argument("domain family: dimension mismatch");
        DomainFamily f;
        f.horizon = horizon;
        f.times = std::move(times);
        f.pieces = std::move(pieces);
        f.anchor = std::move(anchor);
        return f;
    }

    int dim() const { return pieces.front().dim(); }

    const ConvexSet& at(double t) const {
        if (t < 0.0 || t > horizon) throw std::out_of_range("domain family: t outside [0,T]");
        auto it = std::upper_bound(times.begin(), times.end(), t);
        return pieces[static_cast<std::size_t>(it - times.begin()) - 1];
    }
};

/// Piecewise-constant interior path from per-piece Chebyshev centers.
inline CadlagPath auto_anchor(const DomainFamily& family) {
    std::vector<Vec> centers;
    centers.reserve(family.pieces.size());
    for (const auto& piece : family.pieces) {
        auto [c, margin] = chebyshev(piece);
        if (margin <= 0.0) throw std::invalid_argument("auto_anchor: piece has empty interior");
        centers.push_back(std::move(c));
    }
    return CadlagPath::make(family.times, std::move(centers), family.horizon);
}

/// Checks the piecewise structure, the terminal continuity D_T = D_{T^-}, and
/// the anchor margin inf_t d(A_t, boundary D_t), evaluated at breakpoints
/// (exact for piecewise-constant families and anchors).
inline ValidationReport validate(const DomainFamily& family) {
    ValidationReport rep;
    rep.terminal_continuity = true;
    if (family.times.back() == family.horizon && family.pieces.size() >= 2) {
        const auto& last = family.pieces.back();
        const auto& prev = family.pieces[family.pieces.size() - 2];
        if (hausdorff(last, prev) > 1e-12) {
            rep.terminal_continuity = false;
            rep.messages.push_back("terminal continuity violated: domain jumps exactly at T");
        }
    } else if (family.times.back() == family.horizon && family.pieces.size() == 1) {
        // single piece starting at T would leave [0,T) uncovered; make() forbids it
    }

    CadlagPath anchor = family.anchor ? *family.anchor : auto_anchor(family);
    double margin = std::numeric_limits<double>::infinity();
    std::vector<double> probe_times = family.times;
    for (double t : anchor.times) probe_times.push_back(t);
    std::sort(probe_times.begin(), probe_times.end());
    probe_times.erase(std::unique(probe_times.begin(), probe_times.end()), probe_times.end());
    for (double t : probe_times) {
        const double m = signed_margin(family.at(t), anchor.at(t));
        margin = std::min(margin, m);
    }
    rep.anchor_margin = margin;
    if (!(margin > 0.0)) rep.messages.push_back("anchor is not strictly interior to every piece");
    rep.ok = rep.terminal_continuity && margin > 0.0;
    return rep;
}

/// sup_s d_H(D_s, D'_s) over the merged breakpoint grid.
inline double hausdorff_modulus(const DomainFamily& a, const DomainFamily& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("hausdorff_modulus: dimension mismatch");
    if (a.horizon != b.horizon) throw std::invalid_argument("hausdorff_modulus: horizon mismatch");
    std::vector<double> grid = a.times;
    grid.insert(grid.end(), b.times.begin(), b.times.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    double h = 0.0;
    for (double t : grid) h = std::max(h, hausdorff(a.at(t), b.at(t)));
    return h;
}

}  // namespace rmv
