#include "fbf/oracle.hpp"

#include <array>
#include <cmath>

namespace fbf {

namespace {

constexpr double kBlowupLimit = 1e6;
constexpr double kPowerFloor = 1e-14;
constexpr double kBisectionWidth = 1e-4;

using State = std::array<double, 3>;  // (f, f', f'')

// f''' of the original third-order equation.
double third_derivative(Family family, double p, const State& y) {
    const double mag = std::max(std::abs(y[2]), kPowerFloor);
    if (family == Family::Problem1) {
        const double u3 = std::max(y[2], kPowerFloor);
        return -0.5 * y[0] * std::pow(u3, 2.0 - p);
    }
    const double sgn = y[2] < 0.0 ? -1.0 : 1.0;
    return -y[0] * sgn * std::pow(mag, 2.0 - p) / (p * (p + 1.0));
}

State derivative(Family family, double p, const State& y) {
    return {y[1], y[2], third_derivative(family, p, y)};
}

}  // namespace

void ShootingConfig::validate() const {
    if (!(eta_infinity > 0.0)) throw std::invalid_argument("eta_infinity must be > 0");
    if (rk4_steps < 100) throw std::invalid_argument("rk4_steps must be >= 100");
    if (!(bracket_lo < bracket_hi)) throw std::invalid_argument("bracket must have lo < hi");
    if (!(secant_tol > 0.0)) throw std::invalid_argument("secant_tol must be > 0");
}

double shoot(Family family, double p, double s, const ShootingConfig& cfg) {
    cfg.validate();
    State y = {0.0, 0.0, s};
    const double h = cfg.eta_infinity / cfg.rk4_steps;
    for (int i = 0; i < cfg.rk4_steps; ++i) {
        const State k1 = derivative(family, p, y);
        State y2;
        for (int j = 0; j < 3; ++j) y2[j] = y[j] + 0.5 * h * k1[j];
        const State k2 = derivative(family, p, y2);
        for (int j = 0; j < 3; ++j) y2[j] = y[j] + 0.5 * h * k2[j];
        const State k3 = derivative(family, p, y2);
        for (int j = 0; j < 3; ++j) y2[j] = y[j] + h * k3[j];
        const State k4 = derivative(family, p, y2);
        for (int j = 0; j < 3; ++j) {
            y[j] += (h / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        if (std::abs(y[1]) > kBlowupLimit || std::abs(y[2]) > kBlowupLimit ||
            !std::isfinite(y[1]) || !std::isfinite(y[2])) {
            throw DivergentShot("divergent shot at eta = " + std::to_string((i + 1) * h),
                                (i + 1) * h);
        }
    }
    return y[1] - 1.0;
}

double solve_truncated(Family family, double p, const ShootingConfig& cfg) {
    cfg.validate();
    double lo = cfg.bracket_lo;
    double hi = cfg.bracket_hi;
    double flo = shoot(family, p, lo, cfg);
    double fhi = shoot(family, p, hi, cfg);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if (flo * fhi > 0.0) {
        throw BracketFailure("bracket failure: no sign change on [" + std::to_string(lo) +
                             ", " + std::to_string(hi) + "]");
    }

    while (hi - lo > kBisectionWidth) {
        const double mid = 0.5 * (lo + hi);
        const double fmid = shoot(family, p, mid, cfg);
        if (fmid == 0.0) return mid;
        if (flo * fmid < 0.0) {
            hi = mid;
            fhi = fmid;
        } else {
            lo = mid;
            flo = fmid;
        }
    }

    // secant refinement from the bracket endpoints
    double s0 = lo, f0 = flo;
    double s1 = hi, f1 = fhi;
    for (int iter = 0; iter < 100; ++iter) {
        if (f1 == f0) break;
        const double s2 = s1 - f1 * (s1 - s0) / (f1 - f0);
        if (!std::isfinite(s2)) break;
        s0 = s1;
        f0 = f1;
        s1 = s2;
        if (std::abs(s1 - s0) < cfg.secant_tol) break;
        f1 = shoot(family, p, s1, cfg);
    }
    return s1;
}

}  // namespace fbf
