#pragma once

#include <array>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace fbf {

using Vec = std::vector<double>;

// A nonlinear first-order two-point BVP on theta in [0,1] with separated
// boundary conditions. This is the solver's only view of a problem.
struct OdeBvpProblem {
    int dimension = 0;
    // du/dtheta = rhs(theta, u); writes `dimension` values into du.
    std::function<void(double theta, std::span<const double> u, std::span<double> du)> rhs;
    // n boundary residuals from the left and right end states.
    std::function<void(std::span<const double> u_left, std::span<const double> u_right,
                       std::span<double> res)> bc;
};

// Partition of [0,1]; nodes strictly increasing with endpoints exactly 0 and 1.
struct Mesh {
    std::vector<double> nodes;

    int num_nodes() const { return static_cast<int>(nodes.size()); }
    int num_intervals() const { return num_nodes() - 1; }
    double h(int i) const { return nodes[i + 1] - nodes[i]; }

    static Mesh uniform(int num_nodes);
    void validate(int max_mesh_points) const;  // throws std::invalid_argument
};

// Mesh plus one n-vector of state per node, stored flat (node-major).
struct SolutionGrid {
    Mesh mesh;
    int dimension = 0;
    Vec states;  // size dimension * mesh.num_nodes()

    double* node(int i) { return states.data() + static_cast<std::size_t>(i) * dimension; }
    const double* node(int i) const {
        return states.data() + static_cast<std::size_t>(i) * dimension;
    }
    std::span<const double> node_span(int i) const { return {node(i), static_cast<std::size_t>(dimension)}; }
    int num_unknowns() const { return dimension * mesh.num_nodes(); }
    void validate() const;
};

struct SolverConfig {
    double newton_tol = 1e-10;      // max-norm of Newton step and residual
    double residual_tol = 1e-8;     // collocation defect tolerance
    int max_newton_iters = 50;
    double damping_min = 1.0 / 1024.0;  // 2^-10
    double fd_jacobian_step = 1e-7;     // scaled by (1 + |u_j|)
    int max_mesh_points = 2000;
    int max_refinements = 12;

    void validate() const;
};

// One Newton iteration's line search: the residual norms of rejected trial
// steps (in the order tried), the accepted step's norm, and its damping.
struct NewtonIterTrace {
    std::vector<double> rejected_norms;
    double accepted_norm = 0.0;
    double damping = 1.0;
};

struct SolveReport {
    bool converged = false;
    int newton_iterations = 0;
    int final_mesh_points = 0;
    double max_residual = 0.0;
    std::string failure_reason;  // "newton_stall", "singular_jacobian",
                                 // "mesh_budget_exhausted", "refinement_budget_exhausted"
    std::vector<NewtonIterTrace> trace;
};

// Dense row-major square matrix, sized n x n.
struct DenseMatrix {
    int n = 0;
    Vec a;

    explicit DenseMatrix(int size) : n(size), a(static_cast<std::size_t>(size) * size, 0.0) {}
    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * n + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * n + j]; }
};

// Collocation residual of the 3-stage Lobatto IIIA (Simpson/MIRK) scheme:
// for each interval the n defect equations
//   y_{i+1} - y_i - h/6 (f_i + 4 f_mid + f_{i+1}),
//   y_mid = (y_i + y_{i+1})/2 - h/8 (f_{i+1} - f_i),
// concatenated with the n boundary residuals. A grid solves the discrete
// problem iff this vector is (numerically) zero.
Vec assemble_residual(const OdeBvpProblem& problem, const SolutionGrid& grid);

// Serial reference for the OpenMP interval loop in assemble_residual;
// kept for testing, produces bit-identical output.
Vec assemble_residual_serial(const OdeBvpProblem& problem, const SolutionGrid& grid);

// Forward-difference Jacobian of assemble_residual. Column j uses step
// scaled by (1 + |u_j|). Exploits the local collocation stencil: only the
// rows touched by unknown j are recomputed; columns fill in parallel.
DenseMatrix finite_difference_jacobian(const OdeBvpProblem& problem, const SolutionGrid& grid,
                                       double step);

// Naive serial reference: perturbs each unknown and re-assembles the full
// residual. Bit-identical to finite_difference_jacobian.
DenseMatrix finite_difference_jacobian_serial(const OdeBvpProblem& problem,
                                              const SolutionGrid& grid, double step);

// Damped Newton on assemble_residual. Full step first; on residual-norm
// increase the damping factor halves down to damping_min. Converged when
// both the step max-norm and the residual max-norm fall below newton_tol.
// Returns the last iterate and a report either way.
std::pair<SolutionGrid, SolveReport> newton_solve(const OdeBvpProblem& problem,
                                                  const SolutionGrid& initial,
                                                  const SolverConfig& config);

// Max-norm defect of the interval's quartic collocation interpolant against
// the ODE, sampled at the half-interval midpoints (the interval midpoint is
// a collocation point, where the defect vanishes identically).
Vec interval_defects(const OdeBvpProblem& problem, const SolutionGrid& grid);

// Bisects every interval whose defect exceeds residual_tol; returns the old
// mesh unchanged when all intervals pass. Throws when the refined mesh would
// exceed max_mesh_points.
Mesh refine_mesh(const OdeBvpProblem& problem, const SolutionGrid& grid,
                 const SolverConfig& config);

// Evaluates the per-interval quartic interpolant of a (converged) grid.
class CollocationInterpolant {
public:
    CollocationInterpolant(const OdeBvpProblem& problem, const SolutionGrid& grid);
    // Writes the n interpolated state values at theta into u.
    void eval(double theta, std::span<double> u) const;
    // Writes du/dtheta of the interpolant at theta into du.
    void eval_derivative(double theta, std::span<double> du) const;

private:
    int dim_;
    std::vector<double> nodes_;
    // per interval: n quartics, monomial coefficients in local s = (theta - theta_i)/h
    std::vector<std::array<double, 5>> coeffs_;  // [interval * dim + comp]
};

// Alternates newton_solve and refine_mesh, carrying the converged solution
// onto each refined mesh with the collocation interpolant, until the defect
// passes everywhere or a budget is hit.
std::pair<SolutionGrid, SolveReport> solve_bvp(const OdeBvpProblem& problem,
                                               const SolutionGrid& initial,
                                               const SolverConfig& config);

// Dense LU with partial pivoting; solves a x = b in place. Returns false on
// a (numerically) singular pivot.
bool lu_solve(DenseMatrix& a, Vec& b);

double max_norm(const Vec& v);

}  // namespace fbf
