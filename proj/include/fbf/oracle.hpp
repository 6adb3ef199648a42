#pragma once

#include <stdexcept>

#include "fbf/problems.hpp"

namespace fbf {

// Truncated-boundary shooting solver used to cross-validate the
// free-boundary results. Deliberately independent of bvp_core: it
// integrates the original third-order equations as a 3-state IVP with
// fixed-step RK4 and brackets the missing initial condition.
struct ShootingConfig {
    double eta_infinity = 10.0;
    int rk4_steps = 20000;
    double bracket_lo = 0.05;
    double bracket_hi = 1.5;
    double secant_tol = 1e-12;

    void validate() const;
};

struct DivergentShot : std::runtime_error {
    double blowup_eta;
    DivergentShot(const std::string& what, double eta)
        : std::runtime_error(what), blowup_eta(eta) {}
};

struct BracketFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Integrates from (f, f', f'')(0) = (0, 0, s) to eta_infinity and returns
// the far-field miss f'(eta_infinity) - 1. Throws DivergentShot when the
// state blows up along the way.
double shoot(Family family, double p, double s, const ShootingConfig& cfg);

// Bisection to a 1e-4 bracket, then secant to secant_tol, on s -> shoot(s).
// Returns s* = f''(0). Throws BracketFailure when shoot(lo) and shoot(hi)
// do not change sign.
double solve_truncated(Family family, double p, const ShootingConfig& cfg);

}  // namespace fbf
