#include "fbf/sweep.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <optional>
#include <stdexcept>

namespace fbf {

void SweepPlan::validate() const {
    config.validate();
    if (epsilons.empty()) throw std::invalid_argument("epsilon list must be non-empty");
    for (std::size_t i = 0; i < epsilons.size(); ++i) {
        if (!(epsilons[i] > 0.0)) throw std::invalid_argument("epsilons must be > 0");
        if (i > 0 && !(epsilons[i] < epsilons[i - 1])) {
            throw std::invalid_argument("epsilons must be strictly decreasing");
        }
    }
}

std::vector<double> default_epsilon_sequence() {
    return {1e-1, 1e-2, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10};
}

std::vector<SweepRow> run_sweep(const SweepPlan& plan) {
    plan.validate();
    std::vector<SweepRow> rows;
    rows.reserve(plan.epsilons.size());

    std::optional<SolutionGrid> warm;
    for (double eps : plan.epsilons) {
        ExtendedBlasiusSpec spec = plan.spec_base;
        spec.epsilon = eps;
        FbfResult result;
        try {
            result = solve_fbf(spec, plan.config, warm);
        } catch (const FbfSolveError& e) {
            throw SweepError(std::string("sweep failed at epsilon = ") +
                                 std::to_string(eps) + ": " + e.what(),
                             std::move(rows), eps);
        }
        rows.push_back({eps, result.eta_eps, result.fpp0, result.report.newton_iterations,
                        result.report.final_mesh_points});
        if (plan.policy == WarmStartPolicy::Chain) {
            warm = std::move(result.grid);
        }
    }
    return rows;
}

std::pair<double, int> convergence_summary(const std::vector<SweepRow>& rows) {
    if (rows.size() < 2) throw std::invalid_argument("convergence_summary needs >= 2 rows");
    const double a = rows[rows.size() - 2].fpp0;
    const double b = rows.back().fpp0;

    // Count agreeing leading decimal digits via fixed-point text.
    char sa[32], sb[32];
    std::snprintf(sa, sizeof sa, "%.15f", a);
    std::snprintf(sb, sizeof sb, "%.15f", b);
    const char* da = std::strchr(sa, '.');
    const char* db = std::strchr(sb, '.');
    int digits = 0;
    if (da && db && std::strncmp(sa, sb, da - sa) == 0 && (da - sa) == (db - sb)) {
        for (++da, ++db; *da && *db && *da == *db; ++da, ++db) ++digits;
    }
    return {b, digits};
}

}  // namespace fbf
