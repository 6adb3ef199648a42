// Times the OpenMP residual/Jacobian assembly kernels against the serial
// reference implementations on a refined free-boundary grid.

#include <chrono>
#include <cstdio>

#include "fbf/problems.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double time_ms(int reps, const std::function<void()>& body) {
    body();  // warm up
    const auto start = Clock::now();
    for (int i = 0; i < reps; ++i) body();
    const auto stop = Clock::now();
    return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

}  // namespace

int main() {
    fbf::ExtendedBlasiusSpec spec;
    spec.family = fbf::Family::Problem1;
    spec.p_exponent = 1.5;
    spec.epsilon = 1e-6;

    fbf::SolverConfig config;
    const auto result = fbf::solve_fbf(spec, config);
    const fbf::SolutionGrid& grid = result.grid;
    const auto problem = fbf::build_problem(spec);

    std::printf("grid: %d nodes, %d unknowns\n", grid.mesh.num_nodes(), grid.num_unknowns());

    const double res_par = time_ms(200, [&] { fbf::assemble_residual(problem, grid); });
    const double res_ser = time_ms(200, [&] { fbf::assemble_residual_serial(problem, grid); });
    std::printf("residual assembly:  openmp %8.4f ms   serial %8.4f ms   speedup %.2fx\n",
                res_par, res_ser, res_ser / res_par);

    const double step = config.fd_jacobian_step;
    const double jac_par =
        time_ms(5, [&] { fbf::finite_difference_jacobian(problem, grid, step); });
    const double jac_ser =
        time_ms(1, [&] { fbf::finite_difference_jacobian_serial(problem, grid, step); });
    std::printf("fd jacobian:        openmp %8.4f ms   serial %8.4f ms   speedup %.2fx\n",
                jac_par, jac_ser, jac_ser / jac_par);
    return 0;
}
