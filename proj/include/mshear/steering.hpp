#ifndef MSHEAR_STEERING_HPP
#define MSHEAR_STEERING_HPP

// Boundary-value layer: the Gaussian transport map and constant-control
// baseline, the shooting residual over the initial costate Lambda_0, a
// Levenberg-Marquardt outer solve, and the post-solve verification report.

#include <cmath>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mshear/dynamics.hpp"
#include "mshear/spectral_cost.hpp"
#include "mshear/symmat.hpp"

namespace mshear {

/// Boundary covariances of equal determinant plus the cost sharpness.
template <typename Scalar>
class ProblemInstance {
public:
    ProblemInstance(SpdMatrix<Scalar> sigma0, SpdMatrix<Scalar> sigma1, CostParams<Scalar> params,
                    Scalar det_eps = Scalar(1e-9))
        : sigma0_(std::move(sigma0)), sigma1_(std::move(sigma1)), params_(params) {
        using std::abs;
        using std::exp;
        if (sigma0_.dim() != sigma1_.dim()) throw ValidationError("ProblemInstance: Sigma0 and Sigma1 dimensions differ");
        const Scalar ratio = exp(logdet_spd(sigma0_) - logdet_spd(sigma1_));
        if (!(abs(ratio - Scalar(1)) <= det_eps)) {
            std::ostringstream os;
            os << "ProblemInstance: determinant invariant violated, |det(Sigma0)/det(Sigma1) - 1| = "
               << abs(ratio - Scalar(1)) << " exceeds " << det_eps;
            throw ValidationError(os.str());
        }
    }

    Index dim() const { return sigma0_.dim(); }
    const SpdMatrix<Scalar>& sigma0() const { return sigma0_; }
    const SpdMatrix<Scalar>& sigma1() const { return sigma1_; }
    const CostParams<Scalar>& params() const { return params_; }

private:
    SpdMatrix<Scalar> sigma0_;
    SpdMatrix<Scalar> sigma1_;
    CostParams<Scalar> params_;
};

struct ShootingConfig {
    double residual_tol = 1e-8;
    int max_outer_iter = 100;
    double fd_step = 1e-6;
    double lm_damping_init = 1e-3;
    double lm_damping_min = 1e-12;
    double lm_damping_max = 1e8;
    double cost_slack = 1e-6;
    IntegratorConfig integrator{};

    void validate() const {
        if (!(residual_tol > 0) || !(fd_step > 0) || !(lm_damping_init > 0) || !(lm_damping_min > 0) ||
            !(lm_damping_min <= lm_damping_max) || max_outer_iter < 1 || !(cost_slack >= 0))
            throw ValidationError("ShootingConfig: tolerances must be positive and damping bounds ordered");
        integrator.validate();
    }
};

template <typename Scalar>
struct Solution {
    SymMatrix<Scalar> lambda0;
    Trajectory<Scalar> trajectory;
    Scalar cost;              // quadrature of g_theta(A_t)^2
    Scalar closed_form_cost;  // g_theta(A_0)^2
    Scalar residual_norm;
    int outer_iterations;
    Scalar baseline_cost;
    std::vector<std::string> warnings;
};

/// Phi = S1^{1/2} (S1^{1/2} S0 S1^{1/2})^{-1/2} S1^{1/2}, the SPD map with Phi S0 Phi = S1.
template <typename Scalar>
SpdMatrix<Scalar> gaussian_transport_map(const SpdMatrix<Scalar>& sigma0, const SpdMatrix<Scalar>& sigma1) {
    if (sigma0.dim() != sigma1.dim()) throw ValidationError("gaussian_transport_map: dimension mismatch");
    const Matrix<Scalar> r1 = sqrtm_spd(sigma1).matrix();
    const SpdMatrix<Scalar> inner(r1 * sigma0.matrix() * r1);
    return SpdMatrix<Scalar>(r1 * invsqrtm_spd(inner).matrix() * r1);
}

template <typename Scalar>
struct Baseline {
    SpdMatrix<Scalar> phi;
    TracelessSym<Scalar> control;  // log(Phi), projected traceless
    Scalar raw_trace;              // tr(log Phi) before projection
    Scalar cost;                   // g_theta(A)^2
};

/// Constant control A = log(Phi) on [0, 1].
template <typename Scalar>
Baseline<Scalar> constant_control_baseline(const ProblemInstance<Scalar>& inst) {
    SpdMatrix<Scalar> phi = gaussian_transport_map(inst.sigma0(), inst.sigma1());
    const SymMatrix<Scalar> log_phi = logm_spd(phi);
    TracelessSym<Scalar> a(log_phi);
    const Scalar g = soft_diameter(a, inst.params());
    return Baseline<Scalar>{std::move(phi), std::move(a), log_phi.trace(), g * g};
}

namespace shooting {

template <typename Scalar>
Index packed_size(Index n) {
    return n * (n + 1) / 2;
}

/// Upper triangle, row-major.
template <typename Scalar>
Vector<Scalar> pack(const Matrix<Scalar>& s) {
    const Index n = s.rows();
    Vector<Scalar> v(packed_size<Scalar>(n));
    Index k = 0;
    for (Index i = 0; i < n; ++i)
        for (Index j = i; j < n; ++j) v(k++) = s(i, j);
    return v;
}

template <typename Scalar>
SymMatrix<Scalar> unpack(const Vector<Scalar>& v, Index n) {
    Matrix<Scalar> s(n, n);
    Index k = 0;
    for (Index i = 0; i < n; ++i)
        for (Index j = i; j < n; ++j) {
            s(i, j) = v(k);
            s(j, i) = v(k);
            ++k;
        }
    return SymMatrix<Scalar>(s);
}

/// Components of L_0 = Lambda_0 Sigma_0.
template <typename Scalar>
SplitParts<Scalar> initial_lax(const SymMatrix<Scalar>& lambda0, const SpdMatrix<Scalar>& sigma0) {
    return split(Matrix<Scalar>(lambda0.matrix() * sigma0.matrix()));
}

/// Relative residual vector whose Euclidean norm equals ||S - S1||_F / ||S1||_F.
template <typename Scalar>
Vector<Scalar> terminal_residual(const Matrix<Scalar>& sigma_end, const SpdMatrix<Scalar>& sigma1) {
    using std::sqrt;
    const Index n = sigma1.dim();
    const Scalar scale = sigma1.matrix().norm();
    const Matrix<Scalar> diff = sigma_end - sigma1.matrix();
    Vector<Scalar> r(packed_size<Scalar>(n));
    Index k = 0;
    for (Index i = 0; i < n; ++i)
        for (Index j = i; j < n; ++j) r(k++) = (i == j ? Scalar(1) : sqrt(Scalar(2))) * diff(i, j) / scale;
    return r;
}

}  // namespace shooting

/// Integrates the extremal from (Sigma0, Lambda0 Sigma0) and returns the scaled
/// upper-triangular mismatch of Sigma(1) against Sigma1.
template <typename Scalar>
Vector<Scalar> shooting_residual(const SymMatrix<Scalar>& lambda0, const ProblemInstance<Scalar>& inst,
                                 const ShootingConfig& cfg = {}) {
    if (lambda0.dim() != inst.dim()) throw ValidationError("shooting_residual: Lambda0 dimension mismatch");
    const auto parts = shooting::initial_lax(lambda0, inst.sigma0());
    const Matrix<Scalar> end =
        integrate_endpoint(inst.sigma0(), parts.sym, parts.skew, inst.params(), cfg.integrator);
    return shooting::terminal_residual(end, inst.sigma1());
}

/// Lambda_0 whose traceless symmetric Lax part matches the baseline momentum:
/// 1/2 (Sigma0 Lambda0 + Lambda0 Sigma0) = momentum_from_control(log Phi).
template <typename Scalar>
SymMatrix<Scalar> baseline_costate(const ProblemInstance<Scalar>& inst) {
    const Baseline<Scalar> base = constant_control_baseline(inst);
    const TracelessSym<Scalar> m = momentum_from_control(base.control, inst.params());
    return lyapunov_control(inst.sigma0(), SymMatrix<Scalar>(Scalar(2) * m.matrix()));
}

/// Levenberg-Marquardt shooting over the n(n+1)/2 entries of Lambda_0.
///
/// The Jacobian is by forward differences and the damping is Marquardt-scaled
/// (diag(J^T J)), which also absorbs the one-dimensional gauge
/// Lambda_0 -> Lambda_0 + c Sigma_0^{-1}. Throws ConvergenceFailure after
/// max_outer_iter trial steps.
template <typename Scalar>
Solution<Scalar> solve_bvp(const ProblemInstance<Scalar>& inst, const ShootingConfig& cfg = {},
                           const std::optional<SymMatrix<Scalar>>& initial_lambda0 = std::nullopt) {
    using std::abs;
    using std::max;
    using std::min;
    cfg.validate();
    const Index n = inst.dim();
    const Baseline<Scalar> base = constant_control_baseline(inst);

    Vector<Scalar> x = shooting::pack<Scalar>((initial_lambda0 ? *initial_lambda0 : baseline_costate(inst)).matrix());
    if (x.size() != shooting::packed_size<Scalar>(n))
        throw ValidationError("solve_bvp: initial Lambda0 dimension mismatch");
    auto residual = [&](const Vector<Scalar>& v) { return shooting_residual(shooting::unpack(v, n), inst, cfg); };

    const Index k = x.size();
    auto jacobian = [&](const Vector<Scalar>& v, const Vector<Scalar>& r0) {
        Matrix<Scalar> jac(r0.size(), k);
        for (Index j = 0; j < k; ++j) {
            const Scalar h = Scalar(cfg.fd_step) * max(Scalar(1), Scalar(abs(v(j))));
            Vector<Scalar> vp = v;
            vp(j) += h;
            try {
                jac.col(j) = (residual(vp) - r0) / h;
            } catch (const StepFailure&) {
                vp(j) = v(j) - h;
                jac.col(j) = (r0 - residual(vp)) / h;
            }
        }
        return jac;
    };

    Vector<Scalar> r = residual(x);
    Scalar damping = Scalar(cfg.lm_damping_init);
    int iterations = 0;
    Matrix<Scalar> jac;
    bool need_jacobian = true;

    while (r.norm() > Scalar(cfg.residual_tol)) {
        if (iterations >= cfg.max_outer_iter) {
            std::ostringstream os;
            os << "solve_bvp: shooting did not converge in " << cfg.max_outer_iter
               << " iterations (best residual " << r.norm() << ")";
            std::vector<double> best(static_cast<std::size_t>(k));
            for (Index j = 0; j < k; ++j) best[static_cast<std::size_t>(j)] = static_cast<double>(x(j));
            throw ConvergenceFailure(os.str(), static_cast<double>(r.norm()), std::move(best));
        }
        ++iterations;
        if (need_jacobian) {
            jac = jacobian(x, r);
            need_jacobian = false;
        }
        const Matrix<Scalar> jtj = jac.transpose() * jac;
        const Vector<Scalar> jtr = jac.transpose() * r;
        Vector<Scalar> scale = jtj.diagonal();
        const Scalar floor_scale = max(Scalar(1e-12) * scale.maxCoeff(), std::numeric_limits<Scalar>::min());
        scale = scale.cwiseMax(floor_scale);

        Matrix<Scalar> normal = jtj;
        normal.diagonal() += damping * scale;
        const Vector<Scalar> delta = normal.ldlt().solve(-jtr);

        bool accepted = false;
        if (delta.allFinite()) {
            try {
                const Vector<Scalar> trial = x + delta;
                const Vector<Scalar> r_new = residual(trial);
                const Scalar predicted = r.squaredNorm() - (r + jac * delta).squaredNorm();
                const Scalar actual = r.squaredNorm() - r_new.squaredNorm();
                if (predicted > Scalar(0) && actual / predicted > Scalar(1e-4)) {
                    x = trial;
                    r = r_new;
                    accepted = true;
                }
            } catch (const StepFailure&) {
            } catch (const IterationFailure&) {
            }
        }
        if (accepted) {
            damping = max(Scalar(cfg.lm_damping_min), damping / Scalar(3));
            need_jacobian = true;
        } else {
            damping = min(Scalar(cfg.lm_damping_max), damping * Scalar(2));
        }
    }

    Solution<Scalar> sol{shooting::unpack(x, n),
                         {},
                         Scalar(0),
                         Scalar(0),
                         Scalar(0),
                         iterations,
                         base.cost,
                         {}};
    const auto parts = shooting::initial_lax(sol.lambda0, inst.sigma0());
    sol.trajectory = integrate(inst.sigma0(), parts.sym, parts.skew, inst.params(), cfg.integrator);
    sol.cost = cost_quadrature(sol.trajectory, inst.params());
    sol.closed_form_cost = closed_form_cost(sol.trajectory, inst.params());
    sol.residual_norm = relative_error(sol.trajectory.states.back().sigma.matrix(), inst.sigma1().matrix());
    if (sol.cost > sol.baseline_cost + Scalar(cfg.cost_slack)) {
        std::ostringstream os;
        os << "extremal cost " << sol.cost << " exceeds constant-control baseline " << sol.baseline_cost;
        sol.warnings.push_back(os.str());
    }
    return sol;
}

/// Runs solve_bvp from the baseline costate and from `extra_starts` random
/// perturbations of it, returning the lowest-cost converged solution.
template <typename Scalar>
Solution<Scalar> solve_bvp_multistart(const ProblemInstance<Scalar>& inst, const ShootingConfig& cfg,
                                      std::uint64_t seed, int extra_starts, Scalar perturbation = Scalar(0.25)) {
    const SymMatrix<Scalar> init = baseline_costate(inst);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::optional<Solution<Scalar>> best;
    std::optional<ConvergenceFailure> last_failure;
    const Scalar scale = perturbation * std::max(Scalar(1), Scalar(init.matrix().norm()));
    for (int s = 0; s <= extra_starts; ++s) {
        SymMatrix<Scalar> start = init;
        if (s > 0) {
            Matrix<Scalar> noise(inst.dim(), inst.dim());
            for (Index i = 0; i < noise.size(); ++i) noise(i) = Scalar(normal(rng));
            start = SymMatrix<Scalar>(init.matrix() + scale * Scalar(0.5) * (noise + noise.transpose()));
        }
        try {
            Solution<Scalar> sol = solve_bvp<Scalar>(inst, cfg, start);
            if (!best || sol.cost < best->cost) best = std::move(sol);
        } catch (const ConvergenceFailure& e) {
            last_failure = e;
        } catch (const StepFailure&) {
        }
    }
    if (!best) {
        if (last_failure) throw *last_failure;
        throw ConvergenceFailure("solve_bvp_multistart: no start converged", -1.0, {});
    }
    return std::move(*best);
}

struct VerifyTolerances {
    double boundary = 1e-8;
    double determinant = 1e-8;
    double drift = 1e-8;
    double stationarity = 1e-9;
    double cost_gap = 1e-8;
    double cost_slack = 1e-6;
    double coercivity_slack = 1e-10;
    double costate_symmetry = 1e-7;
};

struct Check {
    std::string name;
    double value;
    double threshold;
    bool passed;
    bool advisory;  // reported, but does not fail the report
    std::optional<std::size_t> node{};  // grid node of the worst value, when meaningful
};

struct VerificationReport {
    std::vector<Check> checks;

    bool passed() const {
        for (const auto& c : checks)
            if (!c.passed && !c.advisory) return false;
        return true;
    }
    const Check* find(const std::string& name) const {
        for (const auto& c : checks)
            if (c.name == name) return &c;
        return nullptr;
    }
};

/// Re-derives every conserved quantity from a solution's trajectory.
template <typename Scalar>
VerificationReport verify_solution(const Solution<Scalar>& sol, const ProblemInstance<Scalar>& inst,
                                   const VerifyTolerances& tol = {}) {
    using std::abs;
    const auto& traj = sol.trajectory;
    const CostParams<Scalar>& p = inst.params();
    VerificationReport rep;
    auto add = [&](std::string name, Scalar value, double threshold, bool passed, bool advisory = false) {
        rep.checks.push_back(Check{std::move(name), static_cast<double>(value), threshold, passed, advisory});
    };

    const Scalar boundary = relative_error(traj.states.back().sigma.matrix(), inst.sigma1().matrix());
    add("boundary_match", boundary, tol.boundary, boundary <= Scalar(tol.boundary));

    const Scalar det = determinant_drift(traj);
    add("determinant_constancy", det, tol.determinant, det <= Scalar(tol.determinant));

    const SpectrumDrift<Scalar> drift = spectrum_drift(traj);
    add("spectrum_drift_a", drift.a, tol.drift, drift.a <= Scalar(tol.drift));
    add("spectrum_drift_m", drift.m, tol.drift, drift.m <= Scalar(tol.drift));
    add("spectrum_drift_l", drift.l, tol.drift, drift.l <= Scalar(tol.drift));

    const Scalar stat = stationarity_residual(traj, p);
    add("stationarity", stat, tol.stationarity, stat <= Scalar(tol.stationarity));

    const Scalar quad = cost_quadrature(traj, p);
    const Scalar closed = closed_form_cost(traj, p);
    const Scalar gap = abs(quad - closed) / std::max(closed, std::numeric_limits<Scalar>::min());
    add("cost_closed_form_gap", gap, tol.cost_gap, gap <= Scalar(tol.cost_gap));

    const Scalar excess = quad - sol.baseline_cost;
    add("cost_vs_baseline", excess, tol.cost_slack, excess <= Scalar(tol.cost_slack), true);

    const Scalar coercive = quad - attention_lower_bound(traj);
    add("coercivity", coercive, -tol.coercivity_slack, coercive >= -Scalar(tol.coercivity_slack));

    // Lambda_t = L_t Sigma_t^{-1}, with tr(L)/n constant along the flow.
    const Index n = inst.dim();
    const Scalar c = (sol.lambda0.matrix() * inst.sigma0().matrix()).trace() / Scalar(n);
    Scalar skew(0);
    for (const auto& s : traj.states) {
        const Matrix<Scalar> l = s.lax() + c * Matrix<Scalar>::Identity(n, n);
        const Matrix<Scalar> lam = l * inverse_spd(s.sigma).matrix();
        const Scalar rel = Scalar(0.5) * (lam - lam.transpose()).norm() / std::max(Scalar(1), Scalar(lam.norm()));
        skew = std::max(skew, rel);
    }
    add("costate_symmetry", skew, tol.costate_symmetry, skew < Scalar(tol.costate_symmetry));
    return rep;
}

using ProblemInstanced = ProblemInstance<double>;
using Solutiond = Solution<double>;

}  // namespace mshear

#endif  // MSHEAR_STEERING_HPP
