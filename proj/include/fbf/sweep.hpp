#pragma once

#include <utility>
#include <vector>

#include "fbf/problems.hpp"

namespace fbf {

enum class WarmStartPolicy { Chain, Cold };

// A decreasing-epsilon continuation plan. Under Chain, each solve warm-starts
// from the previous converged grid; under Cold every solve starts from the
// coarse initial iterate.
struct SweepPlan {
    ExtendedBlasiusSpec spec_base;  // epsilon field ignored
    std::vector<double> epsilons;   // strictly decreasing, all > 0
    SolverConfig config;
    WarmStartPolicy policy = WarmStartPolicy::Chain;

    void validate() const;
};

struct SweepRow {
    double epsilon;
    double eta_eps;
    double fpp0;
    int newton_iterations;
    int mesh_points;

    bool operator==(const SweepRow&) const = default;
};

// A failed solve mid-sweep: carries the rows completed so far and the
// epsilon that failed.
struct SweepError : std::runtime_error {
    std::vector<SweepRow> partial_rows;
    double failed_epsilon;
    SweepError(const std::string& what, std::vector<SweepRow> rows, double eps)
        : std::runtime_error(what), partial_rows(std::move(rows)), failed_epsilon(eps) {}
};

// The nine epsilon values of the reference continuation run for Problem1
// (note the skip from 1e-2 to 1e-4).
std::vector<double> default_epsilon_sequence();

std::vector<SweepRow> run_sweep(const SweepPlan& plan);

// Limit estimate (last row's f''(0)) and the count of leading decimal
// digits on which the last two rows' f''(0) agree.
std::pair<double, int> convergence_summary(const std::vector<SweepRow>& rows);

}  // namespace fbf
