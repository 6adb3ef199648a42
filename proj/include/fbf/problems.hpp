#pragma once

#include <array>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "fbf/bvp_core.hpp"

namespace fbf {

enum class Family { Problem1, Problem2 };

// Parameters of one extended-Blasius free-boundary solve. Problem1 is the
// power-law-exponent extension (valid for 1 <= P < 2, P = 2 is non-unique);
// Problem2 is the power-law-viscosity extension (P > 0). Both reduce to the
// classical Blasius problem at P = 1. epsilon is the assigned value of f''
// at the free boundary.
struct ExtendedBlasiusSpec {
    Family family = Family::Problem1;
    double p_exponent = 1.0;
    double epsilon = 1e-6;
    // Use the literal printed form of the Problem2 third component instead
    // of the corrected one; kept for comparison runs.
    bool paper_literal_rhs = false;

    void validate() const;  // throws std::domain_error naming the violated bound
};

// One physical-domain sample of the similarity solution.
struct FbfSample {
    double eta;
    double f;
    double fp;
    double fpp;
};

// Converged free-boundary solve: free boundary eta_eps, missing initial
// condition f''(0), physical-domain samples, and solver diagnostics.
struct FbfResult {
    double eta_eps = 0.0;
    double fpp0 = 0.0;
    std::vector<FbfSample> samples;
    SolveReport report;
    SolutionGrid grid;  // normalized-domain solution, reusable as a warm start
};

// Right-hand side of the normalized 4-state free-boundary system for
// Problem1: u = (f, f', f'', eta_eps) on theta in [0,1].
std::array<double, 4> exblasius1_rhs(double theta, std::span<const double> u, double p);

// Problem2 counterpart. The corrected third component is
//   -u4 * u1 * sign(u3) * |u3|^(2-P) / (P*(P+1));
// with paper_literal the printed denominator
//   (P+1) * ((P-1)*|u3|^(P-2) + |u3|^(P-1))
// is used instead.
std::array<double, 4> exblasius2_rhs(double theta, std::span<const double> u, double p,
                                     bool paper_literal = false);

// Boundary residuals (f(0), f'(0), f'(1) - 1, f''(1) - eps); the free
// boundary is the constant fourth state and needs no residual of its own.
std::array<double, 4> fbf_boundary_residual(std::span<const double> u_left,
                                            std::span<const double> u_right, double eps);

// The coarse starting iterate (theta, 2 + theta, theta, 1).
std::array<double, 4> initial_iterate(double theta);

// Wires the family's rhs and the free-boundary conditions into a 4-state
// OdeBvpProblem at spec.epsilon.
OdeBvpProblem build_problem(const ExtendedBlasiusSpec& spec);

// Default starting grid: the initial iterate on a uniform mesh.
SolutionGrid default_initial_grid(int num_nodes = 11);

// Full free-boundary solve, from warm_start when given, else from the
// default initial grid. Throws FbfSolveError on a non-converged solve.
FbfResult solve_fbf(const ExtendedBlasiusSpec& spec, const SolverConfig& config,
                    const std::optional<SolutionGrid>& warm_start = std::nullopt);

struct FbfSolveError : std::runtime_error {
    SolveReport report;
    FbfSolveError(const std::string& what, SolveReport rep)
        : std::runtime_error(what), report(std::move(rep)) {}
};

}  // namespace fbf
