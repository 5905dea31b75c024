// mshear: minimum-shear covariance steering from the command line.

#include <iostream>

#include <CLI11.hpp>

#include "mshear/cli/commands.hpp"

int main(int argc, char** argv) {
    using namespace mshear::cli;

    CLI::App app{"Minimum-shear covariance steering: shooting solver, baseline, simulation, verification, figures"};
    app.require_subcommand(1);

    SolveOptions solve;
    auto* solve_cmd = app.add_subcommand("solve", "Solve the boundary value problem for a problem file");
    solve_cmd->add_option("--input", solve.input, "Problem file (JSON)")->required();
    solve_cmd->add_option("--output", solve.output, "Trajectory output (one JSON record per line)")->required();
    solve_cmd->add_option("--svg", solve.svg, "Also render the two-panel figure (n = 2 only)");
    solve_cmd->add_option("--steps", solve.steps, "RK4 steps on [0, 1] (overrides the file)");
    solve_cmd->add_option("--theta", solve.theta, "Surrogate sharpness (overrides the file)");

    std::string baseline_input;
    auto* baseline_cmd = app.add_subcommand("baseline", "Constant-control baseline log(Phi) and its cost");
    baseline_cmd->add_option("--input", baseline_input, "Problem file (JSON)")->required();

    std::string sim_input;
    std::string sim_output;
    auto* sim_cmd = app.add_subcommand("simulate", "Integrate forward from Sigma0 and Lambda0 without shooting");
    sim_cmd->add_option("--input", sim_input, "Initial-value file (JSON: theta, sigma0, lambda0, steps)")->required();
    sim_cmd->add_option("--output", sim_output, "Trajectory output (one JSON record per line)")->required();

    VerifyOptions verify;
    auto* verify_cmd = app.add_subcommand("verify", "Re-check conserved quantities of a trajectory file");
    verify_cmd->add_option("--trajectory", verify.trajectory, "Trajectory file")->required();
    verify_cmd->add_option("--tol", verify.tol, "Single tolerance replacing every default threshold");

    FigureOptions figure;
    auto* figure_cmd = app.add_subcommand("figure", "Render a planar trajectory as a two-panel SVG");
    figure_cmd->add_option("--trajectory", figure.trajectory, "Trajectory file")->required();
    figure_cmd->add_option("--svg", figure.svg, "SVG output path")->required();
    figure_cmd->add_option("--frames", figure.frames, "Number of ellipses drawn")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kInvalidInput;
    }

    if (*solve_cmd) return cmd_solve(solve, std::cout, std::cerr);
    if (*baseline_cmd) return cmd_baseline(baseline_input, std::cout, std::cerr);
    if (*sim_cmd) return cmd_simulate(sim_input, sim_output, std::cout, std::cerr);
    if (*verify_cmd) return cmd_verify(verify, std::cout, std::cerr);
    if (*figure_cmd) return cmd_figure(figure, std::cout, std::cerr);
    return kInvalidInput;
}
