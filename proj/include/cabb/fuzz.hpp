#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <string>

#include "cabb/geometry.hpp"
#include "cabb/oracle.hpp"
#include "cabb/random.hpp"
#include "cabb/solver.hpp"

namespace cabb {

/// One solvable CABB instance; the unit of fuzzing, replay and benchmarking.
struct CabbInstance {
    Box gt;
    Box anchor;
    CropRect crop;
    Delta pred;
    double beta = 1.0;

    std::string to_text() const {
        char buf[512];
        std::snprintf(buf, sizeof buf,
                      "gt=%.17g,%.17g,%.17g,%.17g anchor=%.17g,%.17g,%.17g,%.17g "
                      "crop=%.17g,%.17g pred=%.17g,%.17g,%.17g,%.17g beta=%.17g",
                      gt.center[0], gt.center[1], gt.dims[0], gt.dims[1], anchor.center[0],
                      anchor.center[1], anchor.dims[0], anchor.dims[1], crop.extent[0],
                      crop.extent[1], pred.delta[0], pred.delta[1], pred.omega[0], pred.omega[1],
                      beta);
        return buf;
    }
};

/// Generates an instance whose per-dimension classification matches `kinds`.
/// Which crop edges the cropped box touches fully determines the case, so we
/// pick the cropped geometry first and extend the original box outward on
/// the open sides.
inline CabbInstance random_instance(Rng& rng, std::array<DimKind, 2> kinds, double beta) {
    CabbInstance inst;
    inst.beta = beta;
    for (int d = 0; d < 2; ++d) {
        const double dC = log_uniform(rng, 50.0, 1000.0);
        inst.crop.origin[d] = 0.0;
        inst.crop.extent[d] = dC;

        double lo, hi;
        switch (kinds[d]) {
            case DimKind::Singleton:
                lo = uniform_real(rng, 0.02, 0.55) * dC;
                hi = uniform_real(rng, lo / dC + 0.05, 0.98) * dC;
                break;
            case DimKind::LeftOpen:
                lo = 0.0;
                hi = uniform_real(rng, 0.05, 0.95) * dC;
                break;
            case DimKind::RightOpen:
                lo = uniform_real(rng, 0.05, 0.95) * dC;
                hi = dC;
                break;
            case DimKind::BothOpen:
            default:
                lo = 0.0;
                hi = dC;
                break;
        }
        double glo = lo, ghi = hi;
        if (lo <= 0.0) glo -= exponential(rng, dC / 2);
        if (hi >= dC) ghi += exponential(rng, dC / 2);
        inst.gt.center[d] = (glo + ghi) / 2;
        inst.gt.dims[d] = ghi - glo;

        const double dG = hi - lo;
        const double omega_g = log_uniform(rng, 1e-2, 1e2);
        inst.anchor.dims[d] = dG / omega_g;
        inst.anchor.center[d] = (lo + hi) / 2 + uniform_real(rng, -1.0, 1.0) * dG;

        const double delta_g = ((lo + hi) / 2 - inst.anchor.center[d]) / inst.anchor.dims[d];
        inst.pred.delta[d] = delta_g + uniform_real(rng, -2.0, 2.0);
        inst.pred.omega[d] = omega_g * log_uniform(rng, 0.05, 20.0);
    }
    return inst;
}

/// Cycles through all 16 per-dimension kind combinations so a fuzz run of
/// any length covers every case.
inline std::array<DimKind, 2> stratified_kinds(std::size_t index) {
    static constexpr DimKind kAll[4] = {DimKind::Singleton, DimKind::LeftOpen, DimKind::RightOpen,
                                        DimKind::BothOpen};
    return {kAll[index % 4], kAll[(index / 4) % 4]};
}

struct CertifyResult {
    double solver_objective[2] = {0.0, 0.0};
    double oracle_objective[2] = {0.0, 0.0};
    double worst_gap = 0.0;          // max over dims of solver - oracle
    double feasibility_error = 0.0;  // max constraint violation of delta_star
    CabbSolution solution;
};

inline double dim_objective(double dp, double wp, double ds, double ws, const HuberParam& beta) {
    return huber(dp - ds, beta) + huber(std::log(wp) - std::log(ws), beta);
}

/// Compares the analytic solver with the brute-force oracle dimension by
/// dimension and measures constraint violations of the returned minimizer.
inline CertifyResult certify(const CabbInstance& inst, const SolverConfig& scfg,
                             const OracleConfig& ocfg) {
    CertifyResult r;
    r.solution = cabb_loss(inst.pred, inst.gt, inst.anchor, inst.crop, scfg);
    const auto dims = detail::split_dims(inst.pred, inst.gt, inst.anchor, inst.crop, std::nullopt);
    for (int d = 0; d < 2; ++d) {
        const auto& dc = dims[d].dc;
        const double dp = inst.pred.delta[d];
        const double wp = inst.pred.omega[d];
        const double ds = r.solution.delta_star.delta[d];
        const double ws = r.solution.delta_star.omega[d];
        r.solver_objective[d] = dim_objective(dp, wp, ds, ws, scfg.beta);

        switch (dc.kind) {
            case DimKind::Singleton: {
                r.oracle_objective[d] = dim_objective(dp, wp, dc.delta_g, dc.omega_g, scfg.beta);
                r.feasibility_error = std::max(
                    r.feasibility_error,
                    std::max(std::abs(ds - dc.delta_g), std::abs(ws - dc.omega_g)));
                break;
            }
            case DimKind::RightOpen: {
                const double what = 2 * (dp - dc.a);
                r.oracle_objective[d] = oracle_O1(wp, what, dc.a, dc.b, scfg.beta, ocfg).objective;
                r.feasibility_error =
                    std::max(r.feasibility_error, std::abs((ds - ws / 2) - dc.a));
                r.feasibility_error = std::max(r.feasibility_error, dc.b - (ds + ws / 2));
                break;
            }
            case DimKind::LeftOpen: {
                const double what = 2 * (dc.b - dp);
                r.oracle_objective[d] = oracle_O1(wp, what, dc.a, dc.b, scfg.beta, ocfg).objective;
                r.feasibility_error =
                    std::max(r.feasibility_error, std::abs((ds + ws / 2) - dc.b));
                r.feasibility_error = std::max(r.feasibility_error, (ds - ws / 2) - dc.a);
                break;
            }
            case DimKind::BothOpen: {
                r.oracle_objective[d] = oracle_O2(dp, wp, dc.a, dc.b, scfg.beta, ocfg).objective;
                r.feasibility_error = std::max(r.feasibility_error, (ds - ws / 2) - dc.a);
                r.feasibility_error = std::max(r.feasibility_error, dc.b - (ds + ws / 2));
                break;
            }
        }
        r.worst_gap = std::max(r.worst_gap, r.solver_objective[d] - r.oracle_objective[d]);
    }
    return r;
}

struct GradCheckResult {
    double max_rel_error = 0.0;
    bool stable = true;  // false if a probe straddled a case switch or kink
};

/// Central-difference check of the envelope gradient. A probe pair counts as
/// unstable when the per-dimension case changes, the inner minimizer jumps,
/// or an outer Huber argument sits within 10h of its kink.
inline GradCheckResult grad_check(const CabbInstance& inst, const SolverConfig& cfg, double h) {
    GradCheckResult r;
    const CabbSolution base = cabb_loss(inst.pred, inst.gt, inst.anchor, inst.crop, cfg);
    const double beta = cfg.beta.beta;

    auto eval = [&](const Delta& p) { return cabb_loss(p, inst.gt, inst.anchor, inst.crop, cfg); };
    auto probe = [&](int coord, bool is_omega) {
        Delta hi_p = inst.pred, lo_p = inst.pred;
        if (is_omega) {
            hi_p.omega[coord] += h;
            lo_p.omega[coord] -= h;
        } else {
            hi_p.delta[coord] += h;
            lo_p.delta[coord] -= h;
        }
        const CabbSolution hi = eval(hi_p);
        const CabbSolution lo = eval(lo_p);
        const double fd = (hi.loss - lo.loss) / (2 * h);
        const double an = is_omega ? base.grad_omega[coord] : base.grad_delta[coord];

        bool stable = hi.per_dim_case[coord] == lo.per_dim_case[coord] &&
                      hi.per_dim_case[coord] == base.per_dim_case[coord];
        const double jump =
            std::max(std::abs(hi.delta_star.delta[coord] - lo.delta_star.delta[coord]),
                     std::abs(hi.delta_star.omega[coord] - lo.delta_star.omega[coord]));
        if (jump > 50 * h * std::max(1.0, std::abs(base.delta_star.omega[coord]))) stable = false;
        for (const CabbSolution* s : {&base, &hi, &lo}) {
            const double z1 = inst.pred.delta[coord] - s->delta_star.delta[coord];
            const double z2 =
                std::log(inst.pred.omega[coord]) - std::log(s->delta_star.omega[coord]);
            if (std::abs(std::abs(z1) - beta) < 10 * h) stable = false;
            if (std::abs(std::abs(z2) - beta) < 10 * h) stable = false;
        }
        const double err = std::abs(an - fd) / std::max(1.0, std::abs(fd));
        if (stable)
            r.max_rel_error = std::max(r.max_rel_error, err);
        else
            r.stable = false;
    };
    for (int d = 0; d < 2; ++d) {
        probe(d, false);
        if (inst.pred.omega[d] > 2 * h) probe(d, true);
    }
    return r;
}

} // namespace cabb
