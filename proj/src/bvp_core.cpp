#include "fbf/bvp_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

namespace fbf {

namespace {

constexpr int kSparseSolveThreshold = 600;  // unknowns; dense LU below, SparseLU above

struct NonFiniteResidual : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check_finite(std::span<const double> v, int interval) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw NonFiniteResidual("non-finite residual in interval " +
                                    std::to_string(interval));
        }
    }
}

// One interval's n defect equations into out. Scratch must hold 4n doubles.
void interval_residual(const OdeBvpProblem& problem, const SolutionGrid& grid, int i,
                       double* scratch, double* out) {
    const int n = problem.dimension;
    const double* yl = grid.node(i);
    const double* yr = grid.node(i + 1);
    const double tl = grid.mesh.nodes[i];
    const double tr = grid.mesh.nodes[i + 1];
    const double h = tr - tl;

    std::span<double> fl(scratch, n);
    std::span<double> fr(scratch + n, n);
    std::span<double> ym(scratch + 2 * n, n);
    std::span<double> fm(scratch + 3 * n, n);

    problem.rhs(tl, {yl, static_cast<std::size_t>(n)}, fl);
    problem.rhs(tr, {yr, static_cast<std::size_t>(n)}, fr);
    for (int k = 0; k < n; ++k) {
        ym[k] = 0.5 * (yl[k] + yr[k]) - (h / 8.0) * (fr[k] - fl[k]);
    }
    problem.rhs(0.5 * (tl + tr), ym, fm);
    for (int k = 0; k < n; ++k) {
        out[k] = yr[k] - yl[k] - (h / 6.0) * (fl[k] + 4.0 * fm[k] + fr[k]);
    }
    check_finite({out, static_cast<std::size_t>(n)}, i);
}

void bc_residual(const OdeBvpProblem& problem, const SolutionGrid& grid, double* out) {
    const int n = problem.dimension;
    const int nn = grid.mesh.num_nodes();
    problem.bc(grid.node_span(0), grid.node_span(nn - 1), {out, static_cast<std::size_t>(n)});
}

Vec assemble_impl(const OdeBvpProblem& problem, const SolutionGrid& grid, bool parallel) {
    const int n = problem.dimension;
    const int ni = grid.mesh.num_intervals();
    Vec res(static_cast<std::size_t>(n) * grid.mesh.num_nodes());

    if (parallel && ni >= 64) {
#pragma omp parallel
        {
            Vec scratch(4 * static_cast<std::size_t>(n));
#pragma omp for schedule(static)
            for (int i = 0; i < ni; ++i) {
                interval_residual(problem, grid, i, scratch.data(),
                                  res.data() + static_cast<std::size_t>(i) * n);
            }
        }
    } else {
        Vec scratch(4 * static_cast<std::size_t>(n));
        for (int i = 0; i < ni; ++i) {
            interval_residual(problem, grid, i, scratch.data(),
                              res.data() + static_cast<std::size_t>(i) * n);
        }
    }
    bc_residual(problem, grid, res.data() + static_cast<std::size_t>(ni) * n);
    return res;
}

// Rows of the residual touched by the unknowns of mesh node i.
void rows_for_node(int i, int num_nodes, int n, std::vector<int>& intervals, bool& bc) {
    intervals.clear();
    if (i > 0) intervals.push_back(i - 1);
    if (i < num_nodes - 1) intervals.push_back(i);
    bc = (i == 0 || i == num_nodes - 1);
    (void)n;
}

struct JacobianEntry {
    int row, col;
    double value;
};

// Sparse-aware forward-difference Jacobian: perturbing one unknown only
// changes the residual rows of its two adjacent intervals (plus the BC rows
// for the end nodes), so only those are recomputed. The recomputed rows go
// through the same arithmetic as a full assembly, so entries match the
// naive all-columns version bit for bit.
std::vector<JacobianEntry> jacobian_entries(const OdeBvpProblem& problem,
                                            const SolutionGrid& grid, double step) {
    if (step <= 0.0) throw std::invalid_argument("fd step must be positive");
    const int n = problem.dimension;
    const int nn = grid.mesh.num_nodes();
    const int ni = nn - 1;
    const int total = n * nn;

    const Vec base = assemble_impl(problem, grid, true);
    std::vector<std::vector<JacobianEntry>> per_col(total);

#pragma omp parallel
    {
        SolutionGrid work = grid;
        Vec scratch(4 * static_cast<std::size_t>(n));
        Vec row(n), bcrow(n);
        std::vector<int> intervals;
#pragma omp for schedule(static)
        for (int j = 0; j < total; ++j) {
            const int node = j / n;
            const double uj = grid.states[j];
            const double hj = std::max(step * std::abs(uj), 1e-10);

            bool bc_hit = false;
            rows_for_node(node, nn, n, intervals, bc_hit);

            work.states[j] = uj + hj;
            auto& col = per_col[j];
            for (int iv : intervals) {
                interval_residual(problem, work, iv, scratch.data(), row.data());
                for (int k = 0; k < n; ++k) {
                    const double d = (row[k] - base[static_cast<std::size_t>(iv) * n + k]) / hj;
                    if (d != 0.0) col.push_back({iv * n + k, j, d});
                }
            }
            if (bc_hit) {
                bc_residual(problem, work, bcrow.data());
                for (int k = 0; k < n; ++k) {
                    const double d = (bcrow[k] - base[static_cast<std::size_t>(ni) * n + k]) / hj;
                    if (d != 0.0) col.push_back({ni * n + k, j, d});
                }
            }
            work.states[j] = uj;
        }
    }

    std::vector<JacobianEntry> entries;
    for (auto& col : per_col) {
        entries.insert(entries.end(), col.begin(), col.end());
    }
    return entries;
}

// Solves J d = -r. Returns false on a singular factorization.
bool newton_step(const OdeBvpProblem& problem, const SolutionGrid& grid,
                 const SolverConfig& config, const Vec& residual, Vec& delta) {
    const int total = grid.num_unknowns();
    std::vector<JacobianEntry> entries;
    try {
        entries = jacobian_entries(problem, grid, config.fd_jacobian_step);
    } catch (const NonFiniteResidual&) {
        // shrink the step once by 10x, then give up
        entries = jacobian_entries(problem, grid, config.fd_jacobian_step / 10.0);
    }

    if (total <= kSparseSolveThreshold) {
        DenseMatrix a(total);
        for (const auto& e : entries) a(e.row, e.col) = e.value;
        delta.assign(residual.begin(), residual.end());
        for (double& x : delta) x = -x;
        return lu_solve(a, delta);
    }

    using Triplet = Eigen::Triplet<double>;
    std::vector<Triplet> trips;
    trips.reserve(entries.size());
    for (const auto& e : entries) trips.emplace_back(e.row, e.col, e.value);
    Eigen::SparseMatrix<double> a(total, total);
    a.setFromTriplets(trips.begin(), trips.end());
    a.makeCompressed();

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.analyzePattern(a);
    lu.factorize(a);
    if (lu.info() != Eigen::Success) return false;

    Eigen::VectorXd b(total);
    for (int i = 0; i < total; ++i) b[i] = -residual[i];
    Eigen::VectorXd x = lu.solve(b);
    if (lu.info() != Eigen::Success) return false;
    delta.resize(total);
    for (int i = 0; i < total; ++i) delta[i] = x[i];
    return std::all_of(delta.begin(), delta.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

Mesh Mesh::uniform(int num_nodes) {
    Mesh m;
    m.nodes.resize(num_nodes);
    for (int i = 0; i < num_nodes; ++i) {
        m.nodes[i] = static_cast<double>(i) / (num_nodes - 1);
    }
    m.nodes.front() = 0.0;
    m.nodes.back() = 1.0;
    return m;
}

void Mesh::validate(int max_mesh_points) const {
    if (nodes.size() < 2) throw std::invalid_argument("mesh needs at least 2 nodes");
    if (nodes.front() != 0.0 || nodes.back() != 1.0) {
        throw std::invalid_argument("mesh endpoints must be exactly 0 and 1");
    }
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        if (!(nodes[i] > nodes[i - 1])) {
            throw std::invalid_argument("mesh nodes must be strictly increasing");
        }
    }
    if (static_cast<int>(nodes.size()) > max_mesh_points) {
        throw std::invalid_argument("mesh exceeds max_mesh_points");
    }
}

void SolutionGrid::validate() const {
    if (dimension < 1) throw std::invalid_argument("grid dimension must be positive");
    if (states.size() != static_cast<std::size_t>(dimension) * mesh.num_nodes()) {
        throw std::invalid_argument("states length must equal dimension * node count");
    }
}

void SolverConfig::validate() const {
    if (newton_tol <= 0 || residual_tol <= 0 || fd_jacobian_step <= 0) {
        throw std::invalid_argument("tolerances must be strictly positive");
    }
    if (max_newton_iters < 1 || max_mesh_points < 2 || max_refinements < 0) {
        throw std::invalid_argument("iteration/mesh budgets out of range");
    }
    if (!(damping_min > 0.0 && damping_min <= 1.0)) {
        throw std::invalid_argument("damping_min must lie in (0, 1]");
    }
}

double l2_norm(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double max_norm(const Vec& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

Vec assemble_residual(const OdeBvpProblem& problem, const SolutionGrid& grid) {
    return assemble_impl(problem, grid, true);
}

Vec assemble_residual_serial(const OdeBvpProblem& problem, const SolutionGrid& grid) {
    return assemble_impl(problem, grid, false);
}

DenseMatrix finite_difference_jacobian(const OdeBvpProblem& problem, const SolutionGrid& grid,
                                       double step) {
    DenseMatrix jac(grid.num_unknowns());
    for (const auto& e : jacobian_entries(problem, grid, step)) {
        jac(e.row, e.col) = e.value;
    }
    return jac;
}

DenseMatrix finite_difference_jacobian_serial(const OdeBvpProblem& problem,
                                              const SolutionGrid& grid, double step) {
    if (step <= 0.0) throw std::invalid_argument("fd step must be positive");
    const int total = grid.num_unknowns();
    const Vec base = assemble_residual_serial(problem, grid);
    DenseMatrix jac(total);
    SolutionGrid work = grid;
    for (int j = 0; j < total; ++j) {
        const double uj = grid.states[j];
        const double hj = std::max(step * std::abs(uj), 1e-10);
        work.states[j] = uj + hj;
        const Vec pert = assemble_residual_serial(problem, work);
        for (int i = 0; i < total; ++i) {
            jac(i, j) = (pert[i] - base[i]) / hj;
        }
        work.states[j] = uj;
    }
    return jac;
}

bool lu_solve(DenseMatrix& a, Vec& b) {
    const int n = a.n;
    std::vector<int> piv(n);
    for (int k = 0; k < n; ++k) {
        int p = k;
        double pmax = std::abs(a(k, k));
        for (int i = k + 1; i < n; ++i) {
            const double v = std::abs(a(i, k));
            if (v > pmax) {
                pmax = v;
                p = i;
            }
        }
        if (pmax == 0.0 || !std::isfinite(pmax)) return false;
        piv[k] = p;
        if (p != k) {
            for (int j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
            std::swap(b[k], b[p]);
        }
        const double inv = 1.0 / a(k, k);
        for (int i = k + 1; i < n; ++i) {
            const double l = a(i, k) * inv;
            if (l == 0.0) continue;
            a(i, k) = l;
            for (int j = k + 1; j < n; ++j) a(i, j) -= l * a(k, j);
            b[i] -= l * b[k];
        }
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int j = i + 1; j < n; ++j) s -= a(i, j) * b[j];
        b[i] = s / a(i, i);
        if (!std::isfinite(b[i])) return false;
    }
    return true;
}

std::pair<SolutionGrid, SolveReport> newton_solve(const OdeBvpProblem& problem,
                                                  const SolutionGrid& initial,
                                                  const SolverConfig& config) {
    initial.validate();
    config.validate();

    SolutionGrid grid = initial;
    SolveReport report;
    report.final_mesh_points = grid.mesh.num_nodes();

    Vec residual = assemble_residual(problem, grid);
    double rnorm = max_norm(residual);
    double rmerit = l2_norm(residual);
    report.max_residual = rnorm;

    Vec delta;
    for (int iter = 0; iter < config.max_newton_iters; ++iter) {
        report.newton_iterations = iter + 1;
        if (!newton_step(problem, grid, config, residual, delta)) {
            report.failure_reason = "singular_jacobian";
            return {grid, report};
        }

        // Damped line search: accept the first trial that does not increase
        // the residual norm, halving down to damping_min.
        double lambda = 1.0;
        SolutionGrid trial = grid;
        bool accepted = false;
        NewtonIterTrace iter_trace;
        while (true) {
            for (int j = 0; j < grid.num_unknowns(); ++j) {
                trial.states[j] = grid.states[j] + lambda * delta[j];
            }
            Vec trial_res;
            double tmerit = std::numeric_limits<double>::infinity();
            try {
                trial_res = assemble_residual(problem, trial);
                tmerit = l2_norm(trial_res);
            } catch (const NonFiniteResidual&) {
                // fall through and halve
            }
            if (!trial_res.empty() && (tmerit <= rmerit || rmerit <= config.newton_tol)) {
                grid = trial;
                residual = std::move(trial_res);
                rmerit = tmerit;
                rnorm = max_norm(residual);
                accepted = true;
                iter_trace.accepted_norm = tmerit;
                iter_trace.damping = lambda;
                break;
            }
            iter_trace.rejected_norms.push_back(tmerit);
            lambda *= 0.5;
            if (lambda < config.damping_min) break;
        }
        report.trace.push_back(std::move(iter_trace));
        if (!accepted) {
            report.failure_reason = "newton_stall";
            report.max_residual = rnorm;
            return {grid, report};
        }

        const double step_norm = lambda * max_norm(delta);
        report.max_residual = rnorm;
        if (step_norm <= config.newton_tol && rnorm <= config.newton_tol) {
            report.converged = true;
            return {grid, report};
        }
    }
    report.failure_reason = "newton_stall";
    return {grid, report};
}

CollocationInterpolant::CollocationInterpolant(const OdeBvpProblem& problem,
                                               const SolutionGrid& grid)
    : dim_(grid.dimension), nodes_(grid.mesh.nodes) {
    const int n = dim_;
    const int ni = grid.mesh.num_intervals();
    coeffs_.resize(static_cast<std::size_t>(ni) * n);

    Vec fl(n), fr(n), ym(n);
    for (int i = 0; i < ni; ++i) {
        const double* yl = grid.node(i);
        const double* yr = grid.node(i + 1);
        const double h = grid.mesh.h(i);
        problem.rhs(nodes_[i], grid.node_span(i), fl);
        problem.rhs(nodes_[i + 1], grid.node_span(i + 1), fr);
        for (int k = 0; k < n; ++k) {
            ym[k] = 0.5 * (yl[k] + yr[k]) - (h / 8.0) * (fr[k] - fl[k]);
        }
        // Quartic p(s) on local s in [0,1] matching
        //   p(0)=yl, p(1)=yr, p(1/2)=ym, p'(0)=h fl, p'(1)=h fr.
        for (int k = 0; k < n; ++k) {
            const double a0 = yl[k];
            const double a1 = h * fl[k];
            const double d1 = yr[k] - a0 - a1;
            const double d2 = ym[k] - a0 - 0.5 * a1;
            const double d3 = h * fr[k] - a1;
            const double a4 = 16.0 * d2 + 2.0 * d3 - 8.0 * d1;
            const double a3 = 14.0 * d1 - 32.0 * d2 - 3.0 * d3;
            const double a2 = d1 - a3 - a4;
            coeffs_[static_cast<std::size_t>(i) * n + k] = {a0, a1, a2, a3, a4};
        }
    }
}

void CollocationInterpolant::eval(double theta, std::span<double> u) const {
    const int ni = static_cast<int>(nodes_.size()) - 1;
    int i = static_cast<int>(std::upper_bound(nodes_.begin(), nodes_.end(), theta) -
                             nodes_.begin()) - 1;
    i = std::clamp(i, 0, ni - 1);
    const double h = nodes_[i + 1] - nodes_[i];
    const double s = (theta - nodes_[i]) / h;
    for (int k = 0; k < dim_; ++k) {
        const auto& c = coeffs_[static_cast<std::size_t>(i) * dim_ + k];
        u[k] = c[0] + s * (c[1] + s * (c[2] + s * (c[3] + s * c[4])));
    }
}

void CollocationInterpolant::eval_derivative(double theta, std::span<double> du) const {
    const int ni = static_cast<int>(nodes_.size()) - 1;
    int i = static_cast<int>(std::upper_bound(nodes_.begin(), nodes_.end(), theta) -
                             nodes_.begin()) - 1;
    i = std::clamp(i, 0, ni - 1);
    const double h = nodes_[i + 1] - nodes_[i];
    const double s = (theta - nodes_[i]) / h;
    for (int k = 0; k < dim_; ++k) {
        const auto& c = coeffs_[static_cast<std::size_t>(i) * dim_ + k];
        du[k] = (c[1] + s * (2.0 * c[2] + s * (3.0 * c[3] + s * 4.0 * c[4]))) / h;
    }
}

Vec interval_defects(const OdeBvpProblem& problem, const SolutionGrid& grid) {
    const int n = grid.dimension;
    const int ni = grid.mesh.num_intervals();
    const CollocationInterpolant interp(problem, grid);

    Vec defects(ni, 0.0);
    Vec u(n), du(n), f(n);
    for (int i = 0; i < ni; ++i) {
        const double h = grid.mesh.h(i);
        double worst = 0.0;
        for (double s : {0.25, 0.75}) {
            const double theta = grid.mesh.nodes[i] + s * h;
            interp.eval(theta, u);
            interp.eval_derivative(theta, du);
            problem.rhs(theta, u, f);
            for (int k = 0; k < n; ++k) {
                worst = std::max(worst, std::abs(du[k] - f[k]));
            }
        }
        defects[i] = worst;
    }
    return defects;
}

Mesh refine_mesh(const OdeBvpProblem& problem, const SolutionGrid& grid,
                 const SolverConfig& config) {
    const Vec defects = interval_defects(problem, grid);
    Mesh refined;
    refined.nodes.reserve(grid.mesh.nodes.size() * 2);
    bool changed = false;
    for (int i = 0; i < grid.mesh.num_intervals(); ++i) {
        refined.nodes.push_back(grid.mesh.nodes[i]);
        if (defects[i] > config.residual_tol) {
            refined.nodes.push_back(0.5 * (grid.mesh.nodes[i] + grid.mesh.nodes[i + 1]));
            changed = true;
        }
    }
    refined.nodes.push_back(1.0);
    if (!changed) return grid.mesh;
    if (refined.num_nodes() > config.max_mesh_points) {
        throw std::runtime_error("mesh_budget_exhausted");
    }
    refined.validate(config.max_mesh_points);
    return refined;
}

std::pair<SolutionGrid, SolveReport> solve_bvp(const OdeBvpProblem& problem,
                                               const SolutionGrid& initial,
                                               const SolverConfig& config) {
    SolutionGrid grid = initial;
    SolveReport total;

    for (int round = 0; round <= config.max_refinements; ++round) {
        auto [solved, rep] = newton_solve(problem, grid, config);
        total.newton_iterations += rep.newton_iterations;
        total.final_mesh_points = rep.final_mesh_points;
        total.max_residual = rep.max_residual;
        grid = std::move(solved);
        if (!rep.converged) {
            // Stall recovery: a Newton stall with the residual already below
            // residual_tol means the mesh is too coarse to polish a strongly
            // nonlinear interval (typically the free-boundary edge). Bisect
            // the intervals carrying the stuck residual and retry.
            if (rep.failure_reason == "newton_stall" &&
                rep.max_residual <= config.residual_tol && round < config.max_refinements) {
                const Vec residual = assemble_residual(problem, grid);
                const int n = grid.dimension;
                Mesh stall_mesh;
                stall_mesh.nodes.reserve(grid.mesh.nodes.size() * 2);
                bool any = false;
                for (int i = 0; i < grid.mesh.num_intervals(); ++i) {
                    stall_mesh.nodes.push_back(grid.mesh.nodes[i]);
                    double worst = 0.0;
                    for (int k = 0; k < n; ++k) {
                        worst = std::max(worst,
                                         std::abs(residual[static_cast<std::size_t>(i) * n + k]));
                    }
                    if (worst > config.newton_tol) {
                        stall_mesh.nodes.push_back(
                            0.5 * (grid.mesh.nodes[i] + grid.mesh.nodes[i + 1]));
                        any = true;
                    }
                }
                stall_mesh.nodes.push_back(1.0);
                if (any && stall_mesh.num_nodes() <= config.max_mesh_points) {
                    const CollocationInterpolant interp(problem, grid);
                    SolutionGrid next;
                    next.mesh = std::move(stall_mesh);
                    next.dimension = grid.dimension;
                    next.states.resize(static_cast<std::size_t>(grid.dimension) *
                                       next.mesh.num_nodes());
                    for (int i = 0; i < next.mesh.num_nodes(); ++i) {
                        interp.eval(next.mesh.nodes[i],
                                    {next.node(i), static_cast<std::size_t>(grid.dimension)});
                    }
                    grid = std::move(next);
                    total.final_mesh_points = grid.mesh.num_nodes();
                    continue;
                }
            }
            total.converged = false;
            total.failure_reason = rep.failure_reason + " (refinement round " +
                                   std::to_string(round) + ")";
            return {grid, total};
        }

        const Vec defects = interval_defects(problem, grid);
        const double worst = max_norm(defects);
        total.max_residual = std::max(rep.max_residual, worst);
        if (worst <= config.residual_tol) {
            total.converged = true;
            return {grid, total};
        }
        if (round == config.max_refinements) {
            total.converged = false;
            total.failure_reason = "refinement_budget_exhausted";
            return {grid, total};
        }

        Mesh refined;
        try {
            refined = refine_mesh(problem, grid, config);
        } catch (const std::runtime_error&) {
            total.converged = false;
            total.failure_reason = "mesh_budget_exhausted (refinement round " +
                                   std::to_string(round) + ")";
            return {grid, total};
        }

        // carry the solution over with the collocation interpolant
        const CollocationInterpolant interp(problem, grid);
        SolutionGrid next;
        next.mesh = refined;
        next.dimension = grid.dimension;
        next.states.resize(static_cast<std::size_t>(grid.dimension) * refined.num_nodes());
        for (int i = 0; i < refined.num_nodes(); ++i) {
            interp.eval(refined.nodes[i], {next.node(i), static_cast<std::size_t>(grid.dimension)});
        }
        grid = std::move(next);
        total.final_mesh_points = refined.num_nodes();
    }
    return {grid, total};
}

}  // namespace fbf
