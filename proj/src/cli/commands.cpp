#include "mshear/cli/commands.hpp"

#include <fstream>
#include <ostream>

#include <json.hpp>

#include "mshear/cli/problem_io.hpp"
#include "mshear/cli/svg_figure.hpp"
#include "mshear/cli/trajectory_io.hpp"

namespace mshear::cli {

namespace {

using ordered_json = nlohmann::ordered_json;

constexpr int kMultistartExtra = 3;

ordered_json report_json(const VerificationReport& rep) {
    ordered_json checks = ordered_json::array();
    for (const auto& c : rep.checks) {
        ordered_json j;
        j["name"] = c.name;
        j["value"] = c.value;
        j["threshold"] = c.threshold;
        j["passed"] = c.passed;
        if (c.advisory) j["advisory"] = true;
        if (c.node) j["node"] = *c.node;
        checks.push_back(std::move(j));
    }
    return checks;
}

ordered_json matrix_json(const Eigen::MatrixXd& m) {
    ordered_json rows = ordered_json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_text(const std::string& path, const std::string& what, const auto& writer) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InputError("cannot open " + what + " '" + path + "' for writing");
    writer(os);
    if (!os) throw InputError("failed writing " + what + " '" + path + "'");
}

std::vector<TrajectoryRecord> load_records(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open trajectory file '" + path + "'");
    return read_records(in);
}

ordered_json drift_json(const SpectrumDrift<double>& d) {
    ordered_json j;
    j["a"] = d.a;
    j["m"] = d.m;
    j["l"] = d.l;
    return j;
}

// Maps library errors onto the exit-code contract; anything else propagates.
template <typename Body>
int guarded(std::ostream& out, std::ostream& err, Body&& body) {
    try {
        return body();
    } catch (const ConvergenceFailure& e) {
        ordered_json j;
        j["status"] = "not_converged";
        j["best_residual"] = e.best_residual();
        out << j.dump(2) << '\n';
        err << "error: " << e.what() << '\n';
        return kNotConverged;
    } catch (const StepFailure& e) {
        err << "error: integration failure at t = " << e.time() << ": " << e.what() << '\n';
        return kIntegrationFailed;
    } catch (const IterationFailure& e) {
        err << "error: integration failure: " << e.what() << '\n';
        return kIntegrationFailed;
    } catch (const ValidationError& e) {
        err << "error: invalid input: " << e.what() << '\n';
        return kInvalidInput;
    }
}

}  // namespace

int cmd_solve(const SolveOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(out, err, [&] {
        ProblemFile f = parse_problem(load_json(opts.input));
        if (opts.steps) {
            if (*opts.steps < 1) throw InputError("--steps must be a positive integer");
            f.steps = *opts.steps;
        }
        if (opts.theta) {
            if (!(*opts.theta > 0)) throw InputError("--theta must be positive");
            f.theta = *opts.theta;
        }
        f.shooting.integrator.steps = f.steps;
        const ProblemInstanced inst = make_instance(f);

        const Solutiond sol = f.seed ? solve_bvp_multistart(inst, f.shooting, *f.seed, kMultistartExtra)
                                     : solve_bvp(inst, f.shooting);
        const auto records = make_records(sol.trajectory, f.theta);
        write_text(opts.output, "trajectory output", [&](std::ostream& os) { write_records(os, records); });
        if (opts.svg) {
            if (inst.dim() == 2) {
                const std::string svg = render_figure(records);
                write_text(*opts.svg, "SVG output", [&](std::ostream& os) { os << svg; });
            } else {
                err << "warning: --svg ignored, figure rendering needs n = 2 (got n = " << inst.dim() << ")\n";
            }
        }

        const VerificationReport rep = verify_solution(sol, inst);
        ordered_json j;
        j["status"] = rep.passed() ? "converged" : "verification_failed";
        j["n"] = inst.dim();
        j["theta"] = f.theta;
        j["steps"] = f.steps;
        j["cost"] = sol.cost;
        j["closed_form_cost"] = sol.closed_form_cost;
        j["baseline_cost"] = sol.baseline_cost;
        j["residual_norm"] = sol.residual_norm;
        j["iterations"] = sol.outer_iterations;
        j["spectrum_drift"] = drift_json(spectrum_drift(sol.trajectory));
        j["determinant_drift"] = determinant_drift(sol.trajectory);
        j["lambda0"] = matrix_json(sol.lambda0.matrix());
        j["checks"] = report_json(rep);
        j["warnings"] = sol.warnings;
        out << j.dump(2) << '\n';
        for (const auto& w : sol.warnings) err << "warning: " << w << '\n';
        if (!rep.passed()) {
            for (const auto& c : rep.checks)
                if (!c.passed && !c.advisory) err << "verification failed: " << c.name << " = " << c.value << '\n';
            return static_cast<int>(kVerificationFailed);
        }
        return static_cast<int>(kSuccess);
    });
}

int cmd_baseline(const std::string& input, std::ostream& out, std::ostream& err) {
    return guarded(out, err, [&] {
        const ProblemFile f = parse_problem(load_json(input));
        const ProblemInstanced inst = make_instance(f);
        const Baseline<double> base = constant_control_baseline(inst);
        const Eigen::MatrixXd e = expm_sym(base.control.sym()).matrix();
        const double feasibility = relative_error(Eigen::MatrixXd(e * inst.sigma0().matrix() * e), inst.sigma1().matrix());

        ordered_json j;
        j["phi"] = matrix_json(base.phi.matrix());
        j["a_const"] = matrix_json(base.control.matrix());
        j["trace_a_const"] = base.raw_trace;
        j["cost"] = base.cost;
        j["feasibility_residual"] = feasibility;
        out << j.dump(2) << '\n';
        return static_cast<int>(kSuccess);
    });
}

int cmd_simulate(const std::string& input, const std::string& output, std::ostream& out, std::ostream& err) {
    return guarded(out, err, [&] {
        const SimulationFile f = parse_simulation(load_json(input));
        const SpdMatrixd sigma0(f.sigma0);
        const CostParamsd params(f.theta);
        IntegratorConfig cfg;
        cfg.steps = f.steps;
        const auto parts = shooting::initial_lax(SymMatrixd(f.lambda0), sigma0);
        const Trajectoryd traj = integrate(sigma0, parts.sym, parts.skew, params, cfg);
        const auto records = make_records(traj, f.theta);
        write_text(output, "trajectory output", [&](std::ostream& os) { write_records(os, records); });

        ordered_json j;
        j["n"] = sigma0.dim();
        j["theta"] = f.theta;
        j["steps"] = f.steps;
        j["spectrum_drift"] = drift_json(spectrum_drift(traj));
        j["determinant_drift"] = determinant_drift(traj);
        j["cost"] = cost_quadrature(traj, params);
        out << j.dump(2) << '\n';
        return static_cast<int>(kSuccess);
    });
}

int cmd_verify(const VerifyOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(out, err, [&] {
        if (opts.tol && !(*opts.tol > 0)) throw InputError("--tol must be positive");
        const auto records = load_records(opts.trajectory);
        const RecordTolerances tol = opts.tol ? RecordTolerances::uniform(*opts.tol) : RecordTolerances{};
        const VerificationReport rep = verify_records(records, tol);

        ordered_json j;
        j["records"] = records.size();
        j["passed"] = rep.passed();
        j["checks"] = report_json(rep);
        out << j.dump(2) << '\n';
        for (const auto& c : rep.checks)
            if (!c.passed)
                err << "check failed: " << c.name << " = " << c.value << " (threshold " << c.threshold << ") at node "
                    << c.node.value_or(0) << '\n';
        return static_cast<int>(rep.passed() ? kSuccess : kVerificationFailed);
    });
}

int cmd_figure(const FigureOptions& opts, std::ostream& out, std::ostream& err) {
    return guarded(out, err, [&] {
        if (opts.frames < 2) throw InputError("--frames must be at least 2");
        const auto records = load_records(opts.trajectory);
        const std::string svg = render_figure(records, opts.frames);
        write_text(opts.svg, "SVG output", [&](std::ostream& os) { os << svg; });
        ordered_json j;
        j["svg"] = opts.svg;
        j["frames"] = opts.frames;
        j["records"] = records.size();
        out << j.dump(2) << '\n';
        return static_cast<int>(kSuccess);
    });
}

}  // namespace mshear::cli
