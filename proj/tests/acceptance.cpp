// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mshear/cli/commands.hpp"
#include "mshear/cli/trajectory_io.hpp"
#include "mshear/steering.hpp"
#include "test_support.hpp"

namespace {

using namespace mshear;
using testing::Rng;

struct Outcome {
    int id;
    std::string name;
    bool passed;
    std::string detail;
};

std::vector<Outcome> outcomes;

void report(int id, const std::string& name, bool passed, const std::string& detail) {
    outcomes.push_back({id, name, passed, detail});
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

struct Run {
    ProblemInstanced inst;
    std::optional<Solutiond> sol;
    std::string error;
};

// 1-3, 10, 11: twenty random matched-determinant instances.
void solved_instances() {
    Rng rng(20240611);
    std::vector<Run> runs;
    for (int k = 0; k < 20; ++k) {
        const Eigen::Index n = 2 + k % 2;
        const double theta = (k / 2) % 2 ? 5.0 : 1.0;
        Run r{testing::random_instance(rng, n, theta, 50.0), std::nullopt, {}};
        try {
            r.sol = solve_bvp(r.inst);
        } catch (const std::exception& e) {
            r.error = e.what();
        }
        runs.push_back(std::move(r));
    }

    int converged = 0;
    double drift = 0, det = 0, boundary = 0, coercive = INFINITY, gap = 0;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const Run& r = runs[k];
        if (!r.sol) {
            std::printf("       run %2zu: n=%ld failed: %s\n", k, static_cast<long>(r.inst.dim()), r.error.c_str());
            continue;
        }
        ++converged;
        const auto& traj = r.sol->trajectory;
        const auto& p = r.inst.params();
        const double quad = cost_quadrature(traj, p);
        const double bnd = relative_error(traj.states.back().sigma.matrix(), r.inst.sigma1().matrix());
        drift = std::max(drift, spectrum_drift(traj).a);
        det = std::max(det, determinant_drift(traj));
        boundary = std::max(boundary, bnd);
        coercive = std::min(coercive, quad - attention_lower_bound(traj));
        gap = std::max(gap, std::abs(quad - closed_form_cost(traj, p)) / closed_form_cost(traj, p));
        std::printf("       run %2zu: n=%ld theta=%g iters=%d residual=%.2e cost=%.6f baseline=%.6f\n", k,
                    static_cast<long>(r.inst.dim()), p.theta(), r.sol->outer_iterations, bnd, quad,
                    r.sol->baseline_cost);
    }
    const bool all = converged == static_cast<int>(runs.size());
    const std::string conv = fmt("%.0f/20 converged, ", converged);
    report(1, "isospectrality", all && drift < 1e-8, conv + fmt("max driftA = %.3e (< 1e-8)", drift));
    report(2, "volume preservation", all && det < 1e-8, conv + fmt("max det drift = %.3e (< 1e-8)", det));
    report(3, "boundary match", all && boundary <= 1e-8, conv + fmt("max residual = %.3e (<= 1e-8)", boundary));
    report(10, "coercivity bound", all && coercive >= -1e-10,
           conv + fmt("min J - (1/n) int tr A^2 = %.3e (>= -1e-10)", coercive));
    report(11, "closed-form cost consistency", all && gap < 1e-8, conv + fmt("max relative gap = %.3e (< 1e-8)", gap));
}

void sandwich() {
    Rng rng(4);
    const double thetas[] = {0.5, 1.0, 5.0, 20.0};
    double worst = INFINITY;
    for (int k = 0; k < 1000; ++k) {
        const Eigen::Index n = 2 + k % 5;
        const double theta = thetas[(k / 5) % 4];
        const TracelessSymd a(testing::random_traceless(rng, n, 0.5 + k % 7));
        const double g = soft_diameter(a, CostParamsd(theta));
        const double f = spectral_diameter(a);
        const double r = std::sqrt(2.0 * attention_cost(a));
        const double rn = static_cast<double>(n);
        worst = std::min({worst, g - f, f + 2.0 * std::log(rn) / theta - g, r - f, std::sqrt(rn) * f - r});
    }
    report(4, "sandwich inequalities", worst >= -1e-12, fmt("1000 samples, min slack = %.3e (>= -1e-12)", worst));
}

void gradient() {
    Rng rng(5);
    const double h = 1e-5;
    double worst = 0;
    for (int k = 0; k < 200; ++k) {
        const Eigen::Index n = 2 + k % 5;
        const CostParamsd p(k % 3 == 0 ? 0.5 : (k % 3 == 1 ? 1.0 : 5.0));
        const Eigen::MatrixXd a = testing::random_traceless(rng, n);
        Eigen::MatrixXd dir = testing::random_traceless(rng, n);
        dir /= dir.norm();
        const double fd =
            (soft_diameter(TracelessSymd(a + h * dir), p) - soft_diameter(TracelessSymd(a - h * dir), p)) / (2 * h);
        const double an = soft_diameter_gradient(TracelessSymd(a), p).matrix().cwiseProduct(dir).sum();
        worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(an), 1e-3));
    }
    report(5, "gradient oracle", worst < 1e-6, fmt("200 pairs, max relative error = %.3e (< 1e-6)", worst));
}

void inversion() {
    Rng rng(6);
    double worst_a = 0, worst_m = 0;
    int repeated = 0;
    for (int k = 0; k < 100; ++k) {
        const Eigen::Index n = 2 + k % 3;
        const CostParamsd p(k % 2 ? 1.0 : 5.0);
        Eigen::MatrixXd a = testing::random_traceless(rng, n);
        Eigen::MatrixXd m = testing::random_traceless(rng, n);
        if (k % 5 == 0) {
            // Deliberately repeated eigenvalues in both A and M.
            const Eigen::MatrixXd q = testing::random_orthogonal(rng, n);
            Eigen::VectorXd l = Eigen::VectorXd::Constant(n, 0.5);
            l(0) = -0.5 * static_cast<double>(n - 1);
            a = q * l.asDiagonal() * q.transpose();
            m = -2.0 * q * l.asDiagonal() * q.transpose();
            ++repeated;
        }
        const TracelessSymd at(a), mt(m);
        worst_a = std::max(worst_a, (control_from_momentum(momentum_from_control(at, p), p).matrix() - a).norm());
        worst_m = std::max(worst_m, (momentum_from_control(control_from_momentum(mt, p), p).matrix() - m).norm());
    }
    report(6, "momentum inversion roundtrip", worst_a < 1e-9 && worst_m < 1e-9,
           fmt("100 samples (%.0f repeated), A->M->A %.3e, M->A->M %.3e (< 1e-9)", repeated, worst_a, worst_m));
}

void lyapunov() {
    Rng rng(7);
    double worst = 0;
    for (int k = 0; k < 100; ++k) {
        const Eigen::Index n = 2 + k % 5;
        const Eigen::MatrixXd sigma = testing::random_spd(rng, n);
        const Eigen::MatrixXd ds = testing::random_symmetric(rng, n);
        const Eigen::MatrixXd a = lyapunov_control(SpdMatrixd(sigma), SymMatrixd(ds)).matrix();
        worst = std::max(worst, relative_error(Eigen::MatrixXd(a * sigma + sigma * a), ds));
    }
    report(7, "super-operator correctness", worst < 1e-10, fmt("100 pairs, max relative error = %.3e (< 1e-10)", worst));
}

void baseline() {
    Rng rng(8);
    double push = 0, trace = 0;
    for (int k = 0; k < 100; ++k) {
        const ProblemInstanced inst = testing::random_instance(rng, 2 + k % 4, 1.0);
        const Baseline<double> b = constant_control_baseline(inst);
        const Eigen::MatrixXd phi = b.phi.matrix();
        push = std::max(push, relative_error(Eigen::MatrixXd(phi * inst.sigma0().matrix() * phi), inst.sigma1().matrix()));
        trace = std::max(trace, std::abs(b.raw_trace));
    }
    report(8, "baseline feasibility", push < 1e-9 && trace < 1e-9,
           fmt("100 pairs, pushforward %.3e, |tr log Phi| %.3e (< 1e-9)", push, trace));
}

void commuting() {
    const Eigen::MatrixXd s0 = Eigen::Vector2d(2.0, 0.5).asDiagonal();
    const Eigen::MatrixXd s1 = Eigen::Vector2d(0.5, 2.0).asDiagonal();
    const ProblemInstanced inst(SpdMatrixd(s0), SpdMatrixd(s1), CostParamsd(5.0));
    const Solutiond sol = solve_bvp(inst);
    const Eigen::MatrixXd expected = Eigen::Vector2d(-0.693147, 0.693147).asDiagonal();
    double control = 0;
    for (const auto& a : sol.trajectory.controls)
        control = std::max(control, (a.matrix() - expected).cwiseAbs().maxCoeff());
    const double gap = std::abs(sol.cost - sol.baseline_cost);
    report(9, "commuting-case oracle", control < 1e-6 && gap < 1e-8,
           fmt("max |A_t - diag(-0.693147, 0.693147)| = %.3e (< 1e-6), |J - J_base| = %.3e (< 1e-8)", control, gap));
}

void equivariance() {
    Rng rng(12);
    double worst = 0;
    for (int k = 0; k < 4; ++k) {
        const Eigen::Index n = 2 + k % 2;
        const ProblemInstanced inst = testing::random_instance(rng, n, k < 2 ? 1.0 : 5.0);
        const Eigen::MatrixXd q = testing::random_orthogonal(rng, n);
        const ProblemInstanced rot(SpdMatrixd(q * inst.sigma0().matrix() * q.transpose()),
                                   SpdMatrixd(q * inst.sigma1().matrix() * q.transpose()), inst.params());
        const double a = solve_bvp(inst).cost;
        const double b = solve_bvp(rot).cost;
        worst = std::max(worst, std::abs(a - b) / a);
    }
    report(12, "pipeline equivariance", worst < 1e-6, fmt("4 instances, max relative cost change = %.3e (< 1e-6)", worst));
}

void integrator_order() {
    // A strongly rotating extremal keeps the step error well above rounding.
    Rng rng(13);
    const SpdMatrixd s0(testing::random_unimodular_spd(rng, 3, 10.0));
    const TracelessSymd m0(testing::random_traceless(rng, 3, 3.0));
    const SkewMatrixd omega(testing::gaussian(rng, 3, 3) * 4.0);
    const CostParamsd p(1.0);
    auto endpoint = [&](int steps) {
        IntegratorConfig cfg;
        cfg.steps = steps;
        return integrate_endpoint(s0, m0, omega, p, cfg);
    };
    const Eigen::MatrixXd ref = endpoint(16000);
    double lo = INFINITY, hi = 0;
    std::ostringstream detail;
    for (int n : {250, 500, 1000, 2000}) {
        const double err = (endpoint(n) - ref).norm();
        const double scaled = err * std::pow(static_cast<double>(n), 4);
        lo = std::min(lo, scaled);
        hi = std::max(hi, scaled);
        char buf[64];
        std::snprintf(buf, sizeof buf, "e(%d)=%.2e ", n, err);
        detail << buf;
    }
    report(13, "integrator order", hi / lo <= 2.0, detail.str() + fmt("spread of e*N^4 = %.3f (<= 2)", hi / lo));
}

void cli_roundtrip() {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "mshear_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string input = (dir / "commuting.json").string();
    const std::string traj = (dir / "commuting.jsonl").string();
    const std::string svg = (dir / "commuting.svg").string();
    std::ofstream(input) << R"({"theta": 5, "sigma0": [[2, 0], [0, 0.5]], "sigma1": [[0.5, 0], [0, 2]]})";

    std::ostringstream out, err;
    const int solve = cli::cmd_solve({input, traj, {}, {}, {}}, out, err);
    const int verify = cli::cmd_verify({traj, {}}, out, err);
    const int figure = cli::cmd_figure({traj, svg, 12}, out, err);

    double flat = INFINITY;
    if (solve == 0) {
        std::ifstream in(traj);
        flat = 0;
        for (const auto& r : cli::read_records(in)) {
            flat = std::max(flat, std::abs(r.eigs_a(0) + 0.693147));
            flat = std::max(flat, std::abs(r.eigs_a(1) - 0.693147));
        }
    }
    fs::remove_all(dir);
    report(14, "CLI round-trip", solve == 0 && verify == 0 && figure == 0 && flat < 1e-6,
           fmt("solve/verify/figure exit %.0f/%.0f/%.0f, ", solve, verify, figure) +
               fmt("max |eig - (+-0.693147)| = %.3e (< 1e-6)", flat));
}

}  // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    solved_instances();
    sandwich();
    gradient();
    inversion();
    lyapunov();
    baseline();
    commuting();
    equivariance();
    integrator_order();
    cli_roundtrip();
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    std::sort(outcomes.begin(), outcomes.end(), [](const Outcome& a, const Outcome& b) { return a.id < b.id; });
    int failures = 0;
    for (const auto& o : outcomes) {
        std::printf("[%s] %2d %-30s %s\n", o.passed ? "PASS" : "FAIL", o.id, o.name.c_str(), o.detail.c_str());
        if (!o.passed) ++failures;
    }
    std::printf("%d of %zu criteria failed, %.1f s\n", failures, outcomes.size(), secs);
    return failures == 0 ? 0 : 1;
}
