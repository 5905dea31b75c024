#ifndef MSHEAR_DYNAMICS_HPP
#define MSHEAR_DYNAMICS_HPP

// Extremal ODE system on (Sigma, M) with Omega held constant:
//   dSigma/dt = A Sigma + Sigma A
//   dM/dt     = Omega A - A Omega
//   A         = control_from_momentum(M)
// integrated by fixed-step RK4 on [0, 1], plus isospectrality diagnostics,
// the Lyapunov right inverse, and the cost quadrature.

#include <cmath>
#include <complex>
#include <functional>
#include <sstream>
#include <vector>

#include "mshear/spectral_cost.hpp"
#include "mshear/symmat.hpp"

namespace mshear {

enum class ControlMode {
    full_inversion,     // invert M -> A at every right-hand-side evaluation
    spectral_matching,  // invert once at t = 0, then reuse the eigenvalues in M_t's eigenbasis
};

struct IntegratorConfig {
    int steps = 1000;
    ControlMode control_mode = ControlMode::full_inversion;
    InversionConfig inversion{};

    void validate() const {
        if (steps < 1) throw ValidationError("IntegratorConfig: steps must be >= 1");
        inversion.validate();
    }
};

template <typename Scalar>
struct ExtremalState {
    SpdMatrix<Scalar> sigma;
    TracelessSym<Scalar> m;
    SkewMatrix<Scalar> omega;

    ExtremalState(SpdMatrix<Scalar> s, TracelessSym<Scalar> mm, SkewMatrix<Scalar> w)
        : sigma(std::move(s)), m(std::move(mm)), omega(std::move(w)) {
        if (sigma.dim() != m.dim() || sigma.dim() != omega.dim())
            throw ValidationError("ExtremalState: Sigma, M and Omega must share one dimension");
    }

    Index dim() const { return sigma.dim(); }

    /// Lax variable without its (constant) scalar trace part.
    Matrix<Scalar> lax() const { return m.matrix() + omega.matrix(); }
};

template <typename Scalar>
struct NodeDiagnostics {
    Scalar det_sigma;
    Scalar g_theta;
    Vector<Scalar> eig_a;  // ascending
    Vector<Scalar> eig_m;  // ascending
};

template <typename Scalar>
struct Trajectory {
    std::vector<Scalar> times;
    std::vector<ExtremalState<Scalar>> states;
    std::vector<TracelessSym<Scalar>> controls;
    std::vector<NodeDiagnostics<Scalar>> diagnostics;
    // Largest Frobenius norm of the per-step symmetry correction applied to Sigma.
    Scalar max_symmetry_correction = Scalar(0);

    std::size_t size() const { return times.size(); }
    Index dim() const { return states.empty() ? 0 : states.front().dim(); }
};

template <typename Scalar>
struct Tangent {
    SymMatrix<Scalar> dsigma;
    SymMatrix<Scalar> dm;
};

/// Right-hand side of the extremal system for a given control.
template <typename Scalar>
Tangent<Scalar> vector_field(const Matrix<Scalar>& sigma, const Matrix<Scalar>& omega, const Matrix<Scalar>& a) {
    return Tangent<Scalar>{SymMatrix<Scalar>(a * sigma + sigma * a), SymMatrix<Scalar>(omega * a - a * omega)};
}

template <typename Scalar>
Tangent<Scalar> vector_field(const ExtremalState<Scalar>& s, const CostParams<Scalar>& p,
                             const InversionConfig& cfg = {}) {
    const TracelessSym<Scalar> a = control_from_momentum(s.m, p, cfg);
    return vector_field<Scalar>(s.sigma.matrix(), s.omega.matrix(), a.matrix());
}

/// Solves A Sigma + Sigma A = dSigma in Sigma's eigenbasis:
/// A = V [D_ij / (s_i + s_j)] V^T with D = V^T dSigma V.
template <typename Scalar>
SymMatrix<Scalar> lyapunov_control(const SpdMatrix<Scalar>& sigma, const SymMatrix<Scalar>& dsigma) {
    if (sigma.dim() != dsigma.dim()) throw ValidationError("lyapunov_control: dimension mismatch");
    const auto eig = sym_eig(sigma.sym());
    Matrix<Scalar> d = eig.vectors.transpose() * dsigma.matrix() * eig.vectors;
    const Index n = sigma.dim();
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) d(i, j) /= eig.values(i) + eig.values(j);
    return SymMatrix<Scalar>(eig.vectors * d * eig.vectors.transpose());
}

namespace detail {

/// Maps M to A. In spectral-matching mode the eigenvalues solved at t = 0 are
/// reattached to the eigenvectors of the running M (ascending mu order).
template <typename Scalar>
class ControlLaw {
public:
    ControlLaw(const TracelessSym<Scalar>& m0, const CostParams<Scalar>& p, const IntegratorConfig& cfg)
        : params_(p), cfg_(cfg) {
        if (cfg.control_mode == ControlMode::spectral_matching) {
            const auto eig = sym_eig(m0.sym());
            lambda_ = spectral::invert_momentum(eig.values, p.theta(), cfg.inversion);
        }
    }

    Matrix<Scalar> operator()(const Matrix<Scalar>& m) const {
        if (cfg_.control_mode == ControlMode::full_inversion)
            return control_from_momentum(TracelessSym<Scalar>(m), params_, cfg_.inversion).matrix();
        const auto eig = sym_eig(SymMatrix<Scalar>(m));
        Matrix<Scalar> a = eig.vectors * lambda_.asDiagonal() * eig.vectors.transpose();
        return TracelessSym<Scalar>(a).matrix();
    }

private:
    CostParams<Scalar> params_;
    IntegratorConfig cfg_;
    Vector<Scalar> lambda_;
};

template <typename Scalar>
void require_stage_spd(const Matrix<Scalar>& sigma, Scalar time) {
    Eigen::LLT<Matrix<Scalar>> llt(Scalar(0.5) * (sigma + sigma.transpose()));
    if (llt.info() != Eigen::Success || !sigma.allFinite()) {
        std::ostringstream os;
        os << "integrate: Sigma lost positive definiteness near t = " << time;
        throw StepFailure(os.str(), static_cast<double>(time));
    }
}

template <typename Scalar>
SpdMatrix<Scalar> checked_node(const Matrix<Scalar>& sigma, Scalar time) {
    try {
        return SpdMatrix<Scalar>(sigma);
    } catch (const ValidationError&) {
        std::ostringstream os;
        os << "integrate: Sigma lost positive definiteness at t = " << time;
        throw StepFailure(os.str(), static_cast<double>(time));
    }
}

/// Drives classical RK4 over the uniform grid, calling `visit(k, t, sigma, m, a)`
/// at every node with the control evaluated there.
template <typename Scalar, typename Visit>
Scalar rk4_sweep(const SpdMatrix<Scalar>& sigma0, const TracelessSym<Scalar>& m0, const SkewMatrix<Scalar>& omega,
                 const CostParams<Scalar>& p, const IntegratorConfig& cfg, Visit&& visit) {
    cfg.validate();
    if (sigma0.dim() != m0.dim() || sigma0.dim() != omega.dim())
        throw ValidationError("integrate: Sigma0, M0 and Omega dimensions differ");
    const ControlLaw<Scalar> law(m0, p, cfg);
    const Matrix<Scalar>& w = omega.matrix();
    const Scalar h = Scalar(1) / Scalar(cfg.steps);

    Matrix<Scalar> sigma = sigma0.matrix();
    Matrix<Scalar> m = m0.matrix();
    Matrix<Scalar> a = law(m);
    Scalar max_correction(0);

    auto rhs = [&](const Matrix<Scalar>& s, const Matrix<Scalar>& a_stage, Matrix<Scalar>& ds, Matrix<Scalar>& dm) {
        ds = a_stage * s + s * a_stage;
        dm = w * a_stage - a_stage * w;
    };

    visit(0, Scalar(0), sigma, m, a);
    Matrix<Scalar> k1s, k1m, k2s, k2m, k3s, k3m, k4s, k4m;
    for (int k = 0; k < cfg.steps; ++k) {
        const Scalar t = Scalar(k) * h;
        rhs(sigma, a, k1s, k1m);

        Matrix<Scalar> s2 = sigma + Scalar(0.5) * h * k1s;
        Matrix<Scalar> m2 = m + Scalar(0.5) * h * k1m;
        require_stage_spd(s2, t + Scalar(0.5) * h);
        rhs(s2, law(m2), k2s, k2m);

        Matrix<Scalar> s3 = sigma + Scalar(0.5) * h * k2s;
        Matrix<Scalar> m3 = m + Scalar(0.5) * h * k2m;
        require_stage_spd(s3, t + Scalar(0.5) * h);
        rhs(s3, law(m3), k3s, k3m);

        Matrix<Scalar> s4 = sigma + h * k3s;
        Matrix<Scalar> m4 = m + h * k3m;
        require_stage_spd(s4, t + h);
        rhs(s4, law(m4), k4s, k4m);

        sigma += (h / Scalar(6)) * (k1s + Scalar(2) * k2s + Scalar(2) * k3s + k4s);
        m += (h / Scalar(6)) * (k1m + Scalar(2) * k2m + Scalar(2) * k3m + k4m);

        const Matrix<Scalar> sym = Scalar(0.5) * (sigma + sigma.transpose());
        max_correction = std::max(max_correction, Scalar((sym - sigma).norm()));
        sigma = sym;
        m = TracelessSym<Scalar>(m).matrix();

        // Last node is pinned to t = 1 exactly.
        const Scalar t_next = (k + 1 == cfg.steps) ? Scalar(1) : Scalar(k + 1) * h;
        a = law(m);
        visit(k + 1, t_next, sigma, m, a);
    }
    return max_correction;
}

}  // namespace detail

/// Fixed-step RK4 integration of the extremal system from (Sigma0, M0, Omega).
/// Throws StepFailure when Sigma stops being positive definite.
template <typename Scalar>
Trajectory<Scalar> integrate(const SpdMatrix<Scalar>& sigma0, const TracelessSym<Scalar>& m0,
                             const SkewMatrix<Scalar>& omega, const CostParams<Scalar>& p,
                             const IntegratorConfig& cfg = {}) {
    Trajectory<Scalar> traj;
    const auto n_nodes = static_cast<std::size_t>(cfg.steps) + 1;
    traj.times.reserve(n_nodes);
    traj.states.reserve(n_nodes);
    traj.controls.reserve(n_nodes);
    traj.diagnostics.reserve(n_nodes);

    traj.max_symmetry_correction = detail::rk4_sweep<Scalar>(
        sigma0, m0, omega, p, cfg,
        [&](int, Scalar t, const Matrix<Scalar>& sigma, const Matrix<Scalar>& m, const Matrix<Scalar>& a) {
            SpdMatrix<Scalar> s = detail::checked_node<Scalar>(sigma, t);
            TracelessSym<Scalar> control(a);
            TracelessSym<Scalar> mom(m);
            NodeDiagnostics<Scalar> d;
            d.det_sigma = sym_eig(s.sym()).values.prod();
            d.eig_a = sym_eig(control.sym()).values;
            d.eig_m = sym_eig(mom.sym()).values;
            d.g_theta = spectral::soft_diameter(d.eig_a, p.theta());
            traj.times.push_back(t);
            traj.states.emplace_back(std::move(s), std::move(mom), omega);
            traj.controls.push_back(std::move(control));
            traj.diagnostics.push_back(std::move(d));
        });
    return traj;
}

/// Terminal Sigma(1) only; skips per-node bookkeeping.
template <typename Scalar>
Matrix<Scalar> integrate_endpoint(const SpdMatrix<Scalar>& sigma0, const TracelessSym<Scalar>& m0,
                                  const SkewMatrix<Scalar>& omega, const CostParams<Scalar>& p,
                                  const IntegratorConfig& cfg = {}) {
    Matrix<Scalar> last;
    const int steps = cfg.steps;
    detail::rk4_sweep<Scalar>(sigma0, m0, omega, p, cfg,
                              [&](int k, Scalar t, const Matrix<Scalar>& sigma, const Matrix<Scalar>&,
                                  const Matrix<Scalar>&) {
                                  if (k == steps) {
                                      detail::checked_node<Scalar>(sigma, t);
                                      last = sigma;
                                  }
                              });
    return last;
}

/// Characteristic polynomial coefficients c_0..c_{n-1} of a square matrix
/// (det(xI - L) = x^n + c_{n-1} x^{n-1} + ... + c_0), by Faddeev-LeVerrier.
template <typename Scalar>
Vector<Scalar> charpoly_coefficients(const Matrix<Scalar>& l) {
    const Index n = l.rows();
    Vector<Scalar> c = Vector<Scalar>::Zero(n);
    Matrix<Scalar> mk = Matrix<Scalar>::Zero(n, n);
    Scalar ck(1);  // c_n
    for (Index k = 1; k <= n; ++k) {
        mk = l * mk + ck * Matrix<Scalar>::Identity(n, n);
        ck = -(l * mk).trace() / Scalar(k);
        c(n - k) = ck;
    }
    return c;
}

template <typename Scalar>
struct SpectrumDrift {
    Scalar a;
    Scalar m;
    Scalar l;
};

/// Maximum over the grid of the sup-distance to t = 0 of the sorted spectra of
/// A_t and M_t, and of the characteristic polynomial coefficients of M_t + Omega.
template <typename Scalar>
SpectrumDrift<Scalar> spectrum_drift(const Trajectory<Scalar>& traj) {
    SpectrumDrift<Scalar> drift{Scalar(0), Scalar(0), Scalar(0)};
    if (traj.size() == 0) return drift;
    const Vector<Scalar> a0 = sym_eig(traj.controls.front().sym()).values;
    const Vector<Scalar> m0 = sym_eig(traj.states.front().m.sym()).values;
    const Vector<Scalar> l0 = charpoly_coefficients<Scalar>(traj.states.front().lax());
    for (std::size_t k = 1; k < traj.size(); ++k) {
        const Vector<Scalar> ak = sym_eig(traj.controls[k].sym()).values;
        const Vector<Scalar> mk = sym_eig(traj.states[k].m.sym()).values;
        const Vector<Scalar> lk = charpoly_coefficients<Scalar>(traj.states[k].lax());
        drift.a = std::max(drift.a, (ak - a0).cwiseAbs().maxCoeff());
        drift.m = std::max(drift.m, (mk - m0).cwiseAbs().maxCoeff());
        drift.l = std::max(drift.l, (lk - l0).cwiseAbs().maxCoeff());
    }
    return drift;
}

/// Composite Simpson on a uniform grid (trapezoid when the interval count is odd).
template <typename Scalar>
Scalar uniform_quadrature(const std::vector<Scalar>& values, Scalar a = Scalar(0), Scalar b = Scalar(1)) {
    const std::size_t n = values.empty() ? 0 : values.size() - 1;
    if (n == 0) return Scalar(0);
    const Scalar h = (b - a) / Scalar(n);
    Scalar acc(0);
    if (n % 2 == 0) {
        acc = values.front() + values.back();
        for (std::size_t i = 1; i < n; ++i) acc += (i % 2 == 1 ? Scalar(4) : Scalar(2)) * values[i];
        return acc * h / Scalar(3);
    }
    acc = Scalar(0.5) * (values.front() + values.back());
    for (std::size_t i = 1; i < n; ++i) acc += values[i];
    return acc * h;
}

/// J_theta = int_0^1 g_theta(A_t)^2 dt by quadrature over the trajectory grid.
template <typename Scalar>
Scalar cost_quadrature(const Trajectory<Scalar>& traj, const CostParams<Scalar>& p) {
    std::vector<Scalar> integrand;
    integrand.reserve(traj.size());
    for (const auto& a : traj.controls) {
        const Scalar g = soft_diameter(a, p);
        integrand.push_back(g * g);
    }
    return uniform_quadrature(integrand);
}

/// g_theta(A_0)^2, which equals J_theta along an isospectral extremal.
template <typename Scalar>
Scalar closed_form_cost(const Trajectory<Scalar>& traj, const CostParams<Scalar>& p) {
    const Scalar g = soft_diameter(traj.controls.front(), p);
    return g * g;
}

/// (1/n) int_0^1 tr(A_t^2) dt, the lower bound J_theta must dominate.
template <typename Scalar>
Scalar attention_lower_bound(const Trajectory<Scalar>& traj) {
    std::vector<Scalar> integrand;
    integrand.reserve(traj.size());
    for (const auto& a : traj.controls) integrand.push_back(attention_cost(a) / Scalar(a.dim()));
    return uniform_quadrature(integrand);
}

/// Largest relative deviation |det(Sigma_t)/det(Sigma_0) - 1| over the grid.
template <typename Scalar>
Scalar determinant_drift(const Trajectory<Scalar>& traj) {
    using std::abs;
    Scalar worst(0);
    if (traj.size() == 0) return worst;
    const Scalar d0 = traj.diagnostics.front().det_sigma;
    for (const auto& d : traj.diagnostics) worst = std::max(worst, Scalar(abs(d.det_sigma / d0 - Scalar(1))));
    return worst;
}

/// Largest ||g_theta(A_t) G_theta(A_t) + M_t||_F over the grid.
template <typename Scalar>
Scalar stationarity_residual(const Trajectory<Scalar>& traj, const CostParams<Scalar>& p,
                             std::size_t* worst_node = nullptr) {
    Scalar worst(0);
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const Matrix<Scalar> r = traj.states[k].m.matrix() - momentum_from_control(traj.controls[k], p).matrix();
        const Scalar v = r.norm();
        if (v > worst) {
            worst = v;
            if (worst_node) *worst_node = k;
        }
    }
    return worst;
}

using Trajectoryd = Trajectory<double>;
using ExtremalStated = ExtremalState<double>;

}  // namespace mshear

#endif  // MSHEAR_DYNAMICS_HPP
