#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cabb/geometry.hpp"
#include "cabb/loss.hpp"

namespace cabb {

enum class DimKind { Singleton, LeftOpen, RightOpen, BothOpen };

inline const char* to_string(DimKind k) {
    switch (k) {
        case DimKind::Singleton: return "singleton";
        case DimKind::LeftOpen: return "left-open";
        case DimKind::RightOpen: return "right-open";
        case DimKind::BothOpen: return "both-open";
    }
    return "?";
}

/// Per-dimension feasible-set classification. For the open cases (a, b)
/// parameterize the single-variable subproblem: left/right-open carry
/// (a1, b1) with omega0 = b1 - a1 > 0, both-open carries (a2, b2).
struct DimCase {
    DimKind kind = DimKind::Singleton;
    double a = 0.0;
    double b = 0.0;
    double delta_g = 0.0;
    double omega_g = 1.0;
};

struct SolverConfig {
    HuberParam beta{1.0};
    double eps = 1e-7;        // relative bisection width
    double omega_cap = 16.0;  // safety multiplier bounding candidate search
};

struct CabbSolution {
    Delta delta_star;
    double loss = 0.0;
    std::array<DimKind, 2> per_dim_case{DimKind::Singleton, DimKind::Singleton};
    Vec2 grad_delta{0.0, 0.0};
    Vec2 grad_omega{0.0, 0.0};
};

/// Classifies one dimension's feasible set given the cropped ground truth
/// (center cG, size dG in crop coordinates), the crop size dC and the anchor.
inline DimCase classify_dimension(double cG, double dG, double dC, double cA, double dA) {
    if (!(dG > 0.0) || !(dC > 0.0) || !(dA > 0.0))
        throw std::invalid_argument("classify_dimension: sizes must be positive");
    const double tol = 1e-9 * std::max(1.0, dC);
    if (cG - dG / 2 < -tol || cG + dG / 2 > dC + tol)
        throw std::invalid_argument("classify_dimension: cropped box outside crop");

    DimCase r;
    r.delta_g = (cG - cA) / dA;
    r.omega_g = dG / dA;
    const bool left_open = cG <= dG / 2;        // cropped box reaches the crop's low edge
    const bool right_open = cG >= dC - dG / 2;  // cropped box reaches the crop's high edge
    if (!left_open && !right_open) {
        r.kind = DimKind::Singleton;
    } else if (right_open && !left_open) {
        r.kind = DimKind::RightOpen;
        r.a = r.delta_g - r.omega_g / 2;
        r.b = (dC - cA) / dA;
    } else if (left_open && !right_open) {
        r.kind = DimKind::LeftOpen;
        r.a = -cA / dA;
        r.b = r.delta_g + r.omega_g / 2;
    } else {
        r.kind = DimKind::BothOpen;
        r.a = -cA / dA;
        r.b = (dC - cA) / dA;
    }
    return r;
}

/// Objective of the single-variable subproblem and its monotone surrogates.
struct XiFn {
    double omega_hat;
    double omega_p;
    HuberParam beta;

    static double guard(double w) { return std::max(w, 1e-12); }

    double value(double w) const {
        w = guard(w);
        return huber((w - omega_hat) / 2, beta) + huber(std::log(w) - std::log(omega_p), beta);
    }
    double prime(double w) const {
        w = guard(w);
        return 0.5 * huber_prime((w - omega_hat) / 2, beta) +
               huber_prime(std::log(w) - std::log(omega_p), beta) / w;
    }
    double eta(double w) const {
        w = guard(w);
        return huber_prime(std::log(w) - std::log(omega_p), beta) / w;
    }
    double sigma(double w) const { return guard(w) * prime(w); }
};

inline double xi(double omega, double omegaP, double omegaHat, const HuberParam& beta) {
    if (!(omega > 0.0) || !(omegaP > 0.0))
        throw std::invalid_argument("xi: omega must be positive");
    return XiFn{omegaHat, omegaP, beta}.value(omega);
}
inline double xi_prime(double omega, double omegaP, double omegaHat, const HuberParam& beta) {
    if (!(omega > 0.0) || !(omegaP > 0.0))
        throw std::invalid_argument("xi_prime: omega must be positive");
    return XiFn{omegaHat, omegaP, beta}.prime(omega);
}
inline double eta(double omega, double omegaP, const HuberParam& beta) {
    if (!(omega > 0.0) || !(omegaP > 0.0))
        throw std::invalid_argument("eta: omega must be positive");
    return XiFn{0.0, omegaP, beta}.eta(omega);
}
inline double sigma_fn(double omega, double omegaP, double omegaHat, const HuberParam& beta) {
    if (!(omega > 0.0) || !(omegaP > 0.0))
        throw std::invalid_argument("sigma_fn: omega must be positive");
    return XiFn{omegaHat, omegaP, beta}.sigma(omega);
}

/// Locates the minimum of an objective on [lo, hi] through an increasing,
/// continuous function phi that shares the sign of the objective's
/// derivative. Endpoint rules: lo if phi(lo) >= 0, hi if phi(hi) <= 0,
/// otherwise bisection to the sign change. Empty intervals yield no result.
template <class Phi>
std::optional<double> find_min(double lo, double hi, Phi&& phi, double eps_rel) {
    if (lo > hi) return std::nullopt;
    if (phi(lo) >= 0.0) return lo;
    if (phi(hi) <= 0.0) return hi;
    const double eps = eps_rel * std::max(1.0, std::abs(lo) + std::abs(hi));
    while (hi - lo >= eps) {
        const double m = (lo + hi) / 2;
        if (phi(m) >= 0.0)
            hi = m;
        else
            lo = m;
    }
    return (lo + hi) / 2;
}

/// Globally minimizes xi(w) subject to w >= b1 - a1.
inline double solve_O1(double omegaP, double omegaHat, double a1, double b1,
                       const SolverConfig& cfg) {
    const double omega0 = b1 - a1;
    if (!(omega0 > 0.0)) throw std::invalid_argument("solve_O1: requires b1 > a1");
    if (!(omegaP > 0.0)) throw std::invalid_argument("solve_O1: omegaP must be positive");
    if (omega0 <= 1e-9) throw std::invalid_argument("solve_O1: degenerate omega0");
    const XiFn f{omegaHat, omegaP, cfg.beta};
    const double beta = cfg.beta.beta;
    const double cap = cfg.omega_cap * std::max({1.0, omega0, omegaHat, omegaP});
    auto dphi = [&f](double w) { return f.prime(w); };
    auto sphi = [&f](double w) { return f.sigma(w); };

    std::vector<double> cands{omega0};
    auto add = [&](std::optional<double> c) {
        if (c) cands.push_back(*c);
    };

    if (std::max(omega0, omegaHat) < omegaP) {
        // xi' strictly increasing here; the bisection point is the global optimum.
        if (auto r = find_min(std::max(omega0, omegaHat), std::min(omegaP, cap), dphi, cfg.eps))
            return *r;
    } else if (std::max(omega0, omegaP) < omegaHat) {
        cands.push_back(omegaHat);
        const double emb = std::exp(std::min(beta, 1.0)) * omegaP;  // e^min{beta,1} * wP
        const double eb = std::exp(beta) * omegaP;                  // e^beta * wP
        const double e1 = std::exp(1.0) * omegaP;                   // e * wP
        const double hi_cap = std::min(omegaHat, cap);
        add(find_min(std::max(omega0, omegaP), std::min(emb, hi_cap), dphi, cfg.eps));
        add(find_min(std::max({omega0, 2 * std::sqrt(beta), omegaHat - 2 * beta, eb}), hi_cap,
                     dphi, cfg.eps));
        const double j_lo = std::max({omega0, omegaHat - 2 * beta, e1});
        const double j_hi = std::min(eb, hi_cap);
        if (omegaHat <= 4 * std::sqrt(2.0)) {
            add(find_min(j_lo, j_hi, sphi, cfg.eps));
        } else {
            const double disc = std::sqrt(1.0 - 32.0 / (omegaHat * omegaHat));
            const double nu1 = omegaHat / 4 * (1.0 - disc);
            const double nu2 = omegaHat / 4 * (1.0 + disc);
            add(find_min(j_lo, std::min(j_hi, nu1), sphi, cfg.eps));
            add(find_min(std::max(j_lo, nu2), j_hi, sphi, cfg.eps));
        }
    }
    // The strict branch guards leave the boundary cases omegaHat == omegaP,
    // omegaHat == omega0 etc. to the candidate scan; the unconstrained
    // minimizers are free candidates whenever feasible.
    if (omegaHat >= omega0) cands.push_back(omegaHat);
    if (omegaP >= omega0) cands.push_back(omegaP);

    double best = cands.front();
    double best_v = f.value(best);
    for (double c : cands) {
        const double v = f.value(c);
        if (v < best_v) {
            best = c;
            best_v = v;
        }
    }
    return best;
}

/// Minimizes huber(delta - deltaP) + huber(log w - log wP) subject to
/// delta - w/2 <= a2 and delta + w/2 >= b2.
inline std::pair<double, double> solve_O2(double deltaP, double omegaP, double a2, double b2,
                                          const SolverConfig& cfg) {
    if (!(b2 > a2)) throw std::invalid_argument("solve_O2: requires b2 > a2");
    if (!(omegaP > 0.0)) throw std::invalid_argument("solve_O2: omegaP must be positive");
    const double what1 = 2 * (deltaP - a2);
    const double what2 = 2 * (b2 - deltaP);
    if (omegaP >= std::max(what1, what2)) return {deltaP, omegaP};

    const double w1 = solve_O1(omegaP, what1, a2, b2, cfg);
    const double w2 = solve_O1(omegaP, what2, a2, b2, cfg);
    const double v1 = XiFn{what1, omegaP, cfg.beta}.value(w1);
    const double v2 = XiFn{what2, omegaP, cfg.beta}.value(w2);
    if (v1 <= v2) return {a2 + w1 / 2, w1};
    return {b2 - w2 / 2, w2};
}

namespace detail {

/// Per-dimension pieces of a CABB instance expressed in crop coordinates.
struct DimProblem {
    DimCase dc;
    double delta_p;
    double omega_p;
};

inline std::array<DimProblem, 2> split_dims(const Delta& p, const Box& gOriginal,
                                            const Box& anchor, const CropRect& crop,
                                            const std::optional<CropRect>& image_extent) {
    check_positive_dims(anchor, "cabb_loss");
    check_omega(p, "cabb_loss");
    auto cropped = crop_box(gOriginal, crop);
    if (!cropped) throw std::invalid_argument("cabb_loss: box does not intersect crop");

    std::array<DimProblem, 2> out;
    for (int d = 0; d < 2; ++d) {
        // shift so the crop's low edge is at 0
        const double cG = cropped->center[d] - crop.origin[d];
        const double dG = cropped->dims[d];
        const double dC = crop.extent[d];
        const double cA = anchor.center[d] - crop.origin[d];
        const double dA = anchor.dims[d];
        if (dG <= 1e-9 * std::max(1.0, dC))
            throw std::invalid_argument("cabb_loss: degenerate cropped box");
        DimCase dc = classify_dimension(cG, dG, dC, cA, dA);
        if (image_extent) {
            // A side touching the crop boundary is only genuinely open when the
            // original box extends beyond it; if it demonstrably ended inside
            // the crop (and strictly inside the image) the side stays fixed.
            const double tol = 1e-9 * std::max(1.0, dC);
            const bool left_closed = gOriginal.low(d) >= crop.low(d) - tol &&
                                     gOriginal.low(d) > image_extent->low(d) + tol;
            const bool right_closed = gOriginal.high(d) <= crop.high(d) + tol &&
                                      gOriginal.high(d) < image_extent->high(d) - tol;
            DimKind k = dc.kind;
            if (k == DimKind::LeftOpen && left_closed) k = DimKind::Singleton;
            if (k == DimKind::RightOpen && right_closed) k = DimKind::Singleton;
            if (k == DimKind::BothOpen) {
                if (left_closed && right_closed)
                    k = DimKind::Singleton;
                else if (left_closed)
                    k = DimKind::RightOpen;
                else if (right_closed)
                    k = DimKind::LeftOpen;
            }
            if (k != dc.kind) {
                DimCase r;
                r.kind = k;
                r.delta_g = dc.delta_g;
                r.omega_g = dc.omega_g;
                if (k == DimKind::RightOpen) {
                    r.a = r.delta_g - r.omega_g / 2;
                    r.b = (dC - cA) / dA;
                } else if (k == DimKind::LeftOpen) {
                    r.a = -cA / dA;
                    r.b = r.delta_g + r.omega_g / 2;
                }
                dc = r;
            }
        }
        out[d] = DimProblem{dc, p.delta[d], p.omega[d]};
    }
    return out;
}

inline std::pair<double, double> solve_dim(const DimProblem& dp, const SolverConfig& cfg) {
    switch (dp.dc.kind) {
        case DimKind::Singleton:
            return {dp.dc.delta_g, dp.dc.omega_g};
        case DimKind::RightOpen: {
            const double what = 2 * (dp.delta_p - dp.dc.a);
            const double w = solve_O1(dp.omega_p, what, dp.dc.a, dp.dc.b, cfg);
            return {dp.dc.a + w / 2, w};
        }
        case DimKind::LeftOpen: {
            const double what = 2 * (dp.dc.b - dp.delta_p);
            const double w = solve_O1(dp.omega_p, what, dp.dc.a, dp.dc.b, cfg);
            return {dp.dc.b - w / 2, w};
        }
        case DimKind::BothOpen:
            return solve_O2(dp.delta_p, dp.omega_p, dp.dc.a, dp.dc.b, cfg);
    }
    throw std::logic_error("solve_dim: unreachable");
}

} // namespace detail

/// Evaluates the crop-aware loss: per dimension, finds the feasible encoding
/// closest to the prediction, then scores the prediction against it. The
/// gradient treats the inner minimizer as a constant.
inline CabbSolution cabb_loss(const Delta& p, const Box& gOriginal, const Box& anchor,
                              const CropRect& crop, const SolverConfig& cfg,
                              const std::optional<CropRect>& image_extent = std::nullopt) {
    const auto dims = detail::split_dims(p, gOriginal, anchor, crop, image_extent);
    CabbSolution sol;
    for (int d = 0; d < 2; ++d) {
        auto [ds, ws] = detail::solve_dim(dims[d], cfg);
        sol.delta_star.delta[d] = ds;
        sol.delta_star.omega[d] = ws;
        sol.per_dim_case[d] = dims[d].dc.kind;
    }
    sol.loss = l_bb(p, sol.delta_star, cfg.beta);
    auto [gd, gw] = l_bb_grad(p, sol.delta_star, cfg.beta);
    sol.grad_delta = gd;
    sol.grad_omega = gw;
    return sol;
}

} // namespace cabb
