// Command-line front end: single solves, epsilon-continuation sweeps,
// shooting-oracle comparisons, and SVG solution plots.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fbf/io.hpp"
#include "fbf/oracle.hpp"
#include "fbf/problems.hpp"
#include "fbf/sweep.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitSolver = 3;
constexpr int kExitOracle = 4;
constexpr int kExitIo = 5;

struct Options {
    std::string command;
    int family = 1;
    double p = 1.5;
    std::string eps_arg = "1e-6";
    std::string out_path;
    std::string format = "csv";
    std::string warm_start = "chain";
    bool paper_literal = false;
    fbf::SolverConfig config;
};

std::vector<double> parse_eps_list(const std::string& arg) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= arg.size()) {
        const std::size_t pos = arg.find(',', start);
        const std::string tok = arg.substr(start, pos - start);
        if (tok.empty()) throw std::invalid_argument("empty epsilon entry");
        std::size_t used = 0;
        out.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument("bad epsilon: " + tok);
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

fbf::ExtendedBlasiusSpec make_spec(const Options& opt, double eps) {
    fbf::ExtendedBlasiusSpec spec;
    spec.family = opt.family == 1 ? fbf::Family::Problem1 : fbf::Family::Problem2;
    spec.p_exponent = opt.p;
    spec.epsilon = eps;
    spec.paper_literal_rhs = opt.paper_literal;
    spec.validate();
    return spec;
}

std::string fmt9(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

int count_agreeing_decimals(double a, double b) {
    char sa[32], sb[32];
    std::snprintf(sa, sizeof sa, "%.15f", a);
    std::snprintf(sb, sizeof sb, "%.15f", b);
    const char* da = std::strchr(sa, '.');
    const char* db = std::strchr(sb, '.');
    if (!da || !db || (da - sa) != (db - sb) || std::strncmp(sa, sb, da - sa) != 0) return 0;
    int digits = 0;
    for (++da, ++db; *da && *db && *da == *db; ++da, ++db) ++digits;
    return digits;
}

void write_or_print(const Options& opt, const std::string& text) {
    if (opt.out_path.empty()) {
        std::cout << text;
    } else {
        fbf::write_text_file(opt.out_path, text);
    }
}

int cmd_solve(const Options& opt) {
    const auto eps_list = parse_eps_list(opt.eps_arg);
    if (eps_list.size() != 1) {
        std::cerr << "solve takes a single epsilon\n";
        return kExitUsage;
    }
    const auto spec = make_spec(opt, eps_list[0]);
    const auto result = fbf::solve_fbf(spec, opt.config);

    std::cout << "eta_eps = " << fmt9(result.eta_eps) << "\n"
              << "fpp0    = " << fmt9(result.fpp0) << "\n";

    const std::vector<fbf::SweepRow> rows = {{spec.epsilon, result.eta_eps, result.fpp0,
                                              result.report.newton_iterations,
                                              result.report.final_mesh_points}};
    if (!opt.out_path.empty() || opt.format == "json") {
        write_or_print(opt, opt.format == "json" ? fbf::sweep_rows_to_json(rows)
                                                 : fbf::sweep_rows_to_csv(rows));
    }
    return kExitOk;
}

int cmd_sweep(const Options& opt) {
    auto eps_list = parse_eps_list(opt.eps_arg);
    fbf::SweepPlan plan;
    plan.spec_base = make_spec(opt, eps_list.front());
    plan.epsilons = eps_list;
    plan.config = opt.config;
    plan.policy = opt.warm_start == "cold" ? fbf::WarmStartPolicy::Cold
                                           : fbf::WarmStartPolicy::Chain;

    std::vector<fbf::SweepRow> rows;
    std::string comment;
    int status = kExitOk;
    try {
        rows = fbf::run_sweep(plan);
    } catch (const fbf::SweepError& e) {
        rows = e.partial_rows;
        comment = "sweep failed at epsilon = " + fmt9(e.failed_epsilon);
        std::cerr << e.what() << "\n";
        status = kExitSolver;
    }

    write_or_print(opt, opt.format == "json" ? fbf::sweep_rows_to_json(rows)
                                             : fbf::sweep_rows_to_csv(rows, comment));
    if (rows.size() >= 2) {
        const auto [limit, digits] = fbf::convergence_summary(rows);
        std::cout << "fpp0 limit estimate = " << fmt9(limit) << " (" << digits
                  << " stabilized decimal digits)\n";
    }
    return status;
}

int cmd_compare(const Options& opt) {
    const auto spec = make_spec(opt, 1e-8);

    fbf::ShootingConfig shoot_cfg;
    double oracle_value = 0.0;
    try {
        oracle_value = fbf::solve_truncated(spec.family, spec.p_exponent, shoot_cfg);
    } catch (const std::exception& e) {
        std::cerr << "oracle failure: " << e.what() << "\n";
        return kExitOracle;
    }

    // chain down to 1e-8 for robustness at small epsilon; the free boundary
    // can reach eta ~ 175 (family 2, P < 1), so allow a larger mesh budget
    fbf::SweepPlan plan;
    plan.spec_base = spec;
    plan.epsilons = {1e-2, 1e-4, 1e-6, 1e-8};
    plan.config = opt.config;
    plan.config.max_mesh_points = std::max(plan.config.max_mesh_points, 4000);
    plan.config.max_refinements = std::max(plan.config.max_refinements, 16);
    const auto rows = fbf::run_sweep(plan);
    const double fbf_value = rows.back().fpp0;

    const double diff = std::abs(fbf_value - oracle_value);
    std::cout << "fpp0 (free-boundary, eps = 1e-8)  = " << fmt9(fbf_value) << "\n"
              << "fpp0 (shooting, eta_inf = 10)     = " << fmt9(oracle_value) << "\n"
              << "absolute difference               = " << fmt9(diff) << "\n"
              << "agreeing decimal digits           = "
              << count_agreeing_decimals(fbf_value, oracle_value) << "\n";
    return kExitOk;
}

int cmd_plot(const Options& opt) {
    const auto eps_list = parse_eps_list(opt.eps_arg);
    if (eps_list.size() != 1) {
        std::cerr << "plot takes a single epsilon\n";
        return kExitUsage;
    }
    const auto spec = make_spec(opt, eps_list[0]);
    const auto result = fbf::solve_fbf(spec, opt.config);

    fbf::PlotSeries f{"f", {}, {}}, fp{"df/deta", {}, {}}, fpp{"d2f/deta2", {}, {}};
    for (const auto& s : result.samples) {
        f.x.push_back(s.eta);
        f.y.push_back(s.f);
        fp.x.push_back(s.eta);
        fp.y.push_back(s.fp);
        fpp.x.push_back(s.eta);
        fpp.y.push_back(s.fpp);
    }
    const std::string title = "Extended Blasius problem " +
                              std::to_string(opt.family) + ", P = " + fmt9(opt.p) +
                              ", eps = " + fmt9(spec.epsilon);
    const std::string svg = fbf::render_svg_chart({f, fp, fpp}, "eta", title);
    const std::string path = opt.out_path.empty() ? "fbf_plot.svg" : opt.out_path;
    fbf::write_text_file(path, svg);
    std::cout << "wrote " << path << " (eta_eps = " << fmt9(result.eta_eps) << ")\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Free-boundary solver for two extended Blasius problems"};
    app.require_subcommand(1);

    Options opt;
    for (const char* name : {"solve", "sweep", "compare", "plot"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--family", opt.family, "problem family (1 or 2)")
            ->required()
            ->check(CLI::IsMember({1, 2}));
        sub->add_option("--p", opt.p, "power-law exponent P")->required();
        auto* eps = sub->add_option("--eps", opt.eps_arg,
                                    "epsilon, or comma-separated list for sweep");
        if (std::string(name) != "compare") eps->required();
        sub->add_option("--out", opt.out_path, "output file path");
        sub->add_option("--format", opt.format, "csv or json")
            ->check(CLI::IsMember({"csv", "json", "svg"}));
        sub->add_option("--newton-tol", opt.config.newton_tol, "Newton tolerance");
        sub->add_option("--residual-tol", opt.config.residual_tol, "defect tolerance");
        sub->add_option("--warm-start", opt.warm_start, "chain or cold")
            ->check(CLI::IsMember({"chain", "cold"}));
        sub->add_flag("--paper-literal-rhs", opt.paper_literal,
                      "use the uncorrected Problem2 right-hand side");
        sub->callback([&opt, name] { opt.command = name; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (opt.command == "solve") return cmd_solve(opt);
        if (opt.command == "sweep") return cmd_sweep(opt);
        if (opt.command == "compare") return cmd_compare(opt);
        return cmd_plot(opt);
    } catch (const std::domain_error& e) {
        std::cerr << "parameter error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const fbf::FbfSolveError& e) {
        std::cerr << "solver failure: " << e.what()
                  << " (iterations = " << e.report.newton_iterations
                  << ", mesh points = " << e.report.final_mesh_points
                  << ", max residual = " << e.report.max_residual << ")\n";
        return kExitSolver;
    } catch (const fbf::SweepError& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::ios_base::failure& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    }
}
