#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "cabb/loss.hpp"
#include "cabb/solver.hpp"

namespace cabb {

/// Brute-force reference minimizer. Deliberately slow and simple; exists
/// only to certify the analytic solver.
struct OracleConfig {
    int grid_points = 10000;
    int refine_passes = 3;
    double omega_span = 16.0;

    void validate() const {
        if (grid_points < 100) throw std::invalid_argument("OracleConfig: grid_points >= 100");
        if (refine_passes < 0) throw std::invalid_argument("OracleConfig: refine_passes >= 0");
        if (!(omega_span > 0.0)) throw std::invalid_argument("OracleConfig: omega_span > 0");
    }
};

struct OracleResult1 {
    double omega = 0.0;
    double objective = 0.0;
};

struct OracleResult2 {
    double delta = 0.0;
    double omega = 0.0;
    double objective = 0.0;
};

namespace detail {

template <class F>
std::pair<double, double> grid_min_log(F&& f, double lo, double hi, int n) {
    // log-spaced scan of [lo, hi], returns (argmin, min)
    const double llo = std::log(lo);
    const double lhi = std::log(hi);
    double best_x = lo, best_v = f(lo);
    for (int i = 1; i < n; ++i) {
        const double x = std::exp(llo + (lhi - llo) * i / (n - 1));
        const double v = f(x);
        if (v < best_v) {
            best_v = v;
            best_x = x;
        }
    }
    return {best_x, best_v};
}

} // namespace detail

inline OracleResult1 oracle_O1(double omegaP, double omegaHat, double a1, double b1,
                               const HuberParam& beta, const OracleConfig& cfg = {}) {
    cfg.validate();
    const double omega0 = b1 - a1;
    if (!(omega0 > 0.0) || !(omegaP > 0.0)) throw std::invalid_argument("oracle_O1: bad bounds");
    const XiFn f{omegaHat, omegaP, beta};
    auto obj = [&f](double w) { return f.value(w); };

    double lo = omega0;
    double hi = cfg.omega_span * std::max({omega0, omegaHat, omegaP, 1.0});
    auto [bx, bv] = detail::grid_min_log(obj, lo, hi, cfg.grid_points);
    double half = (std::log(hi) - std::log(lo)) / (cfg.grid_points - 1);
    for (int pass = 0; pass < cfg.refine_passes; ++pass) {
        const double wlo = std::max(omega0, bx * std::exp(-half));
        const double whi = std::max(wlo * (1 + 1e-15), bx * std::exp(half));
        auto [rx, rv] = detail::grid_min_log(obj, wlo, whi, cfg.grid_points);
        if (rv < bv) {
            bx = rx;
            bv = rv;
        }
        half /= 100.0;
    }
    return {bx, bv};
}

inline OracleResult2 oracle_O2(double deltaP, double omegaP, double a2, double b2,
                               const HuberParam& beta, const OracleConfig& cfg = {}) {
    cfg.validate();
    if (!(b2 > a2) || !(omegaP > 0.0)) throw std::invalid_argument("oracle_O2: bad bounds");
    const double omega0 = b2 - a2;
    // Parameterize the feasible set exactly by the two nonnegative
    // extensions (l, r) of the crop edges: delta = (a2 - l + b2 + r)/2,
    // omega = omega0 + l + r.
    auto obj = [&](double l, double r) {
        const double delta = (a2 - l + b2 + r) / 2;
        const double omega = omega0 + l + r;
        return huber(delta - deltaP, beta) + huber(std::log(omega) - std::log(omegaP), beta);
    };
    const int n = std::max(32, static_cast<int>(std::sqrt(static_cast<double>(cfg.grid_points))));
    const double scale = std::max({1.0, std::abs(deltaP), omegaP, omega0});
    const double ext_max = cfg.omega_span * scale;
    const double ext_min = 1e-9 * scale;

    auto axis_value = [&](int i, double lo, double hi) {
        // i in [0, n): 0 maps to exactly lo, the rest log-spaced up to hi
        if (i == 0) return lo;
        const double l0 = std::log(std::max(lo, ext_min));
        const double l1 = std::log(hi);
        return std::exp(l0 + (l1 - l0) * i / (n - 1));
    };

    double bl = 0.0, br = 0.0, bv = obj(0.0, 0.0);
    auto scan = [&](double llo, double lhi, double rlo, double rhi) {
        for (int i = 0; i < n; ++i) {
            const double l = axis_value(i, llo, lhi);
            for (int j = 0; j < n; ++j) {
                const double r = axis_value(j, rlo, rhi);
                const double v = obj(l, r);
                if (v < bv) {
                    bv = v;
                    bl = l;
                    br = r;
                }
            }
        }
    };
    scan(0.0, ext_max, 0.0, ext_max);
    double window = ext_max;
    for (int pass = 0; pass < cfg.refine_passes; ++pass) {
        window /= 50.0;
        scan(std::max(0.0, bl - window), bl + window, std::max(0.0, br - window), br + window);
    }
    return {(a2 - bl + b2 + br) / 2, omega0 + bl + br, bv};
}

} // namespace cabb
