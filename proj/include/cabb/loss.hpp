#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "cabb/geometry.hpp"

namespace cabb {

struct HuberParam {
    double beta = 1.0;

    explicit HuberParam(double b = 1.0) : beta(b) {
        if (!(b > 0.0)) throw std::invalid_argument("HuberParam: beta must be positive");
    }
};

/// Huber (smooth-L1) norm: z^2/(2b) for |z| <= b, |z| - b/2 otherwise.
inline double huber(double z, const HuberParam& beta) {
    const double az = std::abs(z);
    if (az <= beta.beta) return z * z / (2 * beta.beta);
    return az - beta.beta / 2;
}

/// Derivative of the Huber norm, a clamp of z/beta to [-1, 1].
inline double huber_prime(double z, const HuberParam& beta) {
    return std::max(std::min(z / beta.beta, 1.0), -1.0);
}

inline void check_omega(const Delta& p, const char* who) {
    if (!(p.omega[0] > 0.0) || !(p.omega[1] > 0.0))
        throw std::invalid_argument(std::string(who) + ": omega must be positive");
}

/// Standard per-box regression loss: sum over dimensions of the Huber terms
/// on the center offset difference and the log size-ratio difference.
inline double l_bb(const Delta& p, const Delta& g, const HuberParam& beta) {
    check_omega(p, "l_bb");
    check_omega(g, "l_bb");
    double s = 0.0;
    for (int d = 0; d < 2; ++d) {
        s += huber(p.delta[d] - g.delta[d], beta);
        s += huber(std::log(p.omega[d]) - std::log(g.omega[d]), beta);
    }
    return s;
}

/// Gradient of l_bb in the prediction, g held constant.
/// Returns (d/d delta_P, d/d omega_P).
inline std::pair<Vec2, Vec2> l_bb_grad(const Delta& p, const Delta& g, const HuberParam& beta) {
    check_omega(p, "l_bb_grad");
    check_omega(g, "l_bb_grad");
    Vec2 gd, gw;
    for (int d = 0; d < 2; ++d) {
        gd[d] = huber_prime(p.delta[d] - g.delta[d], beta);
        gw[d] = huber_prime(std::log(p.omega[d]) - std::log(g.omega[d]), beta) / p.omega[d];
    }
    return {gd, gw};
}

} // namespace cabb
