#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>

#include "rmv/common.hpp"
#include "rmv/drivers.hpp"
#include "rmv/measure.hpp"
#include "rmv/wasserstein.hpp"

namespace rmv {

/// Coefficient model (b, sigma, beta) with measure dependence. Instances come
/// from the builtin registry; declared constants are advisory bounds checked
/// by lipschitz_probe.
struct CoefficientSet {
    std::string name;
    int d = 1;  // state dimension
    int m = 1;  // Brownian dimension
    double gamma_declared = 0.0;
    double delta_declared = 0.0;
    std::function<Vec(double, const Vec&, const EmpiricalMeasure&)> drift;
    std::function<Mat(double, const Vec&, const EmpiricalMeasure&)> diffusion;  // d x m
    std::function<Vec(double, const Vec&, const EmpiricalMeasure&, const Vec&)> jump;
    bool measure_dependent = true;
};

using ParamMap = std::map<std::string, double>;

inline double param(const ParamMap& p, const std::string& key, double fallback) {
    auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

namespace detail {

inline Mat diag_sigma(int d, int m, double s) {
    Mat sig(d, m);
    for (int i = 0; i < std::min(d, m); ++i) sig(i, i) = s;
    return sig;
}

}  // namespace detail

/// Builtin coefficient families:
///   zero               : b = sigma = beta = 0
///   linear             : b = a*mean(mu) + c*x + b0,    sigma = s*I, beta = g*z
///   mean_reverting_mf  : b = theta*(mean(mu) - x),     sigma = s*I, beta = g*z
///   bounded_kernel     : b_c = (alpha/k) sum_j sin(omega*(x_c - y_jc)),
///                        sigma = s*I, beta = g*z
/// Every family accepts perturb_scale / perturb_freq adding
/// perturb_scale * sin(perturb_freq * x) to the drift, componentwise.
inline CoefficientSet make_coefficients(const std::string& family, int d, int m,
                                        const ParamMap& params) {
    CoefficientSet cs;
    cs.name = family;
    cs.d = d;
    cs.m = m;
    cs.gamma_declared = param(params, "gamma", 1.0);
    cs.delta_declared = param(params, "delta", 1.0);
    const double s = param(params, "sigma", 0.0);
    const double g = param(params, "jump_scale", 0.0);
    const double pscale = param(params, "perturb_scale", 0.0);
    const double pfreq = param(params, "perturb_freq", 3.0);

    auto perturb = [pscale, pfreq](Vec& b, const Vec& x) {
        if (pscale == 0.0) return;
        for (std::size_t c = 0; c < b.size(); ++c) b[c] += pscale * std::sin(pfreq * x[c]);
    };

    cs.diffusion = [d, m, s](double, const Vec&, const EmpiricalMeasure&) {
        return detail::diag_sigma(d, m, s);
    };
    cs.jump = [g](double, const Vec&, const EmpiricalMeasure&, const Vec& z) { return g * z; };

    if (family == "zero") {
        cs.measure_dependent = false;
        cs.drift = [d, perturb](double, const Vec& x, const EmpiricalMeasure&) {
            Vec b(d, 0.0);
            perturb(b, x);
            return b;
        };
    } else if (family == "linear") {
        const double a = param(params, "a", 0.0);
        const double c = param(params, "c", 0.0);
        const double b0 = param(params, "b0", 0.0);
        cs.measure_dependent = a != 0.0;
        cs.drift = [a, c, b0, perturb](double, const Vec& x, const EmpiricalMeasure& mu) {
            Vec b(x.size());
            const Vec& mean = mu.mean();
            for (std::size_t i = 0; i < x.size(); ++i) b[i] = a * mean[i] + c * x[i] + b0;
            perturb(b, x);
            return b;
        };
    } else if (family == "mean_reverting_mf") {
        const double theta = param(params, "theta", 1.0);
        cs.measure_dependent = true;
        cs.drift = [theta, perturb](double, const Vec& x, const EmpiricalMeasure& mu) {
            Vec b(x.size());
            const Vec& mean = mu.mean();
            for (std::size_t i = 0; i < x.size(); ++i) b[i] = theta * (mean[i] - x[i]);
            perturb(b, x);
            return b;
        };
    } else if (family == "bounded_kernel") {
        const double alpha = param(params, "alpha", 1.0);
        const double omega = param(params, "omega", 1.0);
        cs.measure_dependent = true;
        cs.drift = [alpha, omega, perturb](double, const Vec& x, const EmpiricalMeasure& mu) {
            Vec b(x.size(), 0.0);
            const int k = mu.size();
            // sorted accumulation: drift invariant under relabeling of atoms
            std::vector<double> terms(static_cast<std::size_t>(k));
            for (std::size_t c = 0; c < x.size(); ++c) {
                for (int j = 0; j < k; ++j)
                    terms[j] = std::sin(omega * (x[c] - mu.at(j, static_cast<int>(c))));
                std::sort(terms.begin(), terms.end());
                double s = 0.0;
                for (double v : terms) s += v;
                b[c] = alpha * s / k;
            }
            perturb(b, x);
            return b;
        };
    } else {
        throw std::invalid_argument("unknown coefficient family: " + family);
    }
    return cs;
}

struct LipschitzEstimate {
    double gamma_hat = 0.0;  // max sampled quotient over (x, mu) perturbations
    double delta_hat = 0.0;  // max sampled (|b|+|sigma|)/(1+|x|)
    bool exceeds_declared = false;
};

/// Sampled difference quotients over random (x, x', mu, mu') with W computed
/// exactly on small clouds. Advisory only.
inline LipschitzEstimate lipschitz_probe(const CoefficientSet& cs, const NoiseConfig& noise,
                                         double radius, int budget, std::uint64_t seed = 7) {
    LipschitzEstimate est;
    CounterRng rng(seed, 0, 0, RngChannel::misc);
    const int cloud = 8;
    auto rand_point = [&](double r) {
        Vec x(cs.d);
        for (auto& v : x) v = r * (2.0 * rng.next_uniform() - 1.0);
        return x;
    };
    auto frob = [](const Mat& a, const Mat& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < a.a.size(); ++i) {
            const double diff = a.a[i] - b.a[i];
            s += diff * diff;
        }
        return std::sqrt(s);
    };
    for (int it = 0; it < budget; ++it) {
        const Vec x = rand_point(radius), xp = rand_point(radius);
        std::vector<Vec> pa, pb;
        for (int i = 0; i < cloud; ++i) {
            pa.push_back(rand_point(radius));
            pb.push_back(pa.back());
            axpy(pb.back(), 0.3, rand_point(radius));
        }
        const auto mu = EmpiricalMeasure::from_points(pa);
        const auto mup = EmpiricalMeasure::from_points(pb);
        const double w = w2_point_clouds(pa, pb).distance;
        const double denom = dist(x, xp) + w;
        if (denom < 1e-12) continue;

        const double t = rng.next_uniform();
        const double db = dist(cs.drift(t, x, mu), cs.drift(t, xp, mup));
        const double ds = frob(cs.diffusion(t, x, mu), cs.diffusion(t, xp, mup));
        est.gamma_hat = std::max(est.gamma_hat, std::sqrt(db * db + ds * ds) / denom);

        if (noise.intensity > 0.0) {
            auto sq_diff = [&](const Vec& z) -> Vec {
                const double dj = dist(cs.jump(t, x, mu, z), cs.jump(t, xp, mup, z));
                return {dj * dj};
            };
            const double l2 =
                std::sqrt(noise.intensity * noise.marks.expectation(sq_diff, 1)[0]);
            est.gamma_hat = std::max(est.gamma_hat, l2 / denom);
        }

        double snorm = 0.0;
        const Mat sig = cs.diffusion(t, x, mu);
        for (double v : sig.a) snorm += v * v;
        est.delta_hat = std::max(
            est.delta_hat, (norm(cs.drift(t, x, mu)) + std::sqrt(snorm)) / (1.0 + norm(x)));
    }
    est.exceeds_declared = est.gamma_hat > cs.gamma_declared + 1e-9;
    return est;
}

}  // namespace rmv
