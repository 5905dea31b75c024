#ifndef MSHEAR_SPECTRAL_COST_HPP
#define MSHEAR_SPECTRAL_COST_HPP

// Spectral cost layer: attention cost tr(A^2), spectral diameter, the
// log-sum-exp surrogate g_theta with its gradient, and the momentum map
// A -> M = -g_theta(A) G_theta(A) together with its inverse.

#include <cmath>
#include <limits>
#include <sstream>

#include "mshear/symmat.hpp"

namespace mshear {

/// Surrogate sharpness theta > 0.
template <typename Scalar>
class CostParams {
public:
    explicit CostParams(Scalar theta) : theta_(theta) {
        if (!(theta > Scalar(0)) || !std::isfinite(static_cast<double>(theta)))
            throw ValidationError("CostParams: theta must be positive and finite");
    }
    Scalar theta() const { return theta_; }

private:
    Scalar theta_;
};

/// Projected Newton settings for the momentum inversion.
struct InversionConfig {
    double grad_tol = 1e-12;  // scaled by max(1, ||mu||)
    int max_iter = 200;
    double backtrack_factor = 0.5;

    void validate() const {
        if (!(grad_tol > 0) || max_iter < 1 || !(backtrack_factor > 0 && backtrack_factor < 1))
            throw ValidationError("InversionConfig: grad_tol > 0, max_iter >= 1, backtrack_factor in (0,1) required");
    }
};

namespace spectral {

/// Shifted log-sum-exp pieces of a spectrum under sharpness theta.
/// upper = (1/theta) log sum exp(theta (l_i - l_max)), lower likewise for -l;
/// p and q are the corresponding softmax weights.
template <typename Scalar>
struct SoftMax {
    Scalar spread;  // l_max - l_min
    Scalar upper;
    Scalar lower;
    Vector<Scalar> p;
    Vector<Scalar> q;

    Scalar g() const { return spread + upper + lower; }
    Vector<Scalar> h() const { return p - q; }
};

template <typename Scalar>
SoftMax<Scalar> softmax(const Vector<Scalar>& lambda, Scalar theta) {
    using std::exp;
    using std::log;
    const Scalar hi = lambda.maxCoeff();
    const Scalar lo = lambda.minCoeff();
    SoftMax<Scalar> s;
    s.spread = hi - lo;
    s.p = (theta * (lambda.array() - hi)).exp().matrix();
    s.q = (-theta * (lambda.array() - lo)).exp().matrix();
    const Scalar sp = s.p.sum();
    const Scalar sq = s.q.sum();
    s.upper = log(sp) / theta;
    s.lower = log(sq) / theta;
    s.p /= sp;
    s.q /= sq;
    return s;
}

/// g_theta evaluated on a spectrum.
template <typename Scalar>
Scalar soft_diameter(const Vector<Scalar>& lambda, Scalar theta) {
    return softmax(lambda, theta).g();
}

/// Solve mu = -g(lambda) h(lambda), sum(lambda) = 0, for lambda.
///
/// This is the first-order condition of the strictly convex problem
///   minimize 1/2 g(lambda)^2 + <mu, lambda>  subject to  sum(lambda) = 0,
/// solved with Newton steps on the KKT system and Armijo backtracking.
/// Component i of the result pairs with mu(i).
template <typename Scalar>
Vector<Scalar> invert_momentum(const Vector<Scalar>& mu_in, Scalar theta, const InversionConfig& cfg = {}) {
    using std::abs;
    using std::sqrt;
    cfg.validate();
    const Index n = mu_in.size();
    const Vector<Scalar> mu = (mu_in.array() - mu_in.mean()).matrix();
    const Scalar mu_norm = mu.norm();
    const Scalar tol = Scalar(cfg.grad_tol) * std::max(Scalar(1), mu_norm);
    if (mu_norm == Scalar(0)) return Vector<Scalar>::Zero(n);

    auto objective = [&](const Vector<Scalar>& l) {
        const Scalar g = soft_diameter(l, theta);
        return Scalar(0.5) * g * g + mu.dot(l);
    };
    // Gradient of the objective projected onto the zero-sum subspace.
    auto projected_gradient = [&](const SoftMax<Scalar>& s) {
        Vector<Scalar> grad = s.g() * s.h() + mu;
        return Vector<Scalar>((grad.array() - grad.mean()).matrix());
    };

    auto run = [&](Vector<Scalar> lambda, Vector<Scalar>& out) -> bool {
        bool polished = false;
        for (int it = 0; it < cfg.max_iter; ++it) {
            const SoftMax<Scalar> s = softmax(lambda, theta);
            const Vector<Scalar> grad = projected_gradient(s);
            const Scalar gnorm = grad.norm();
            if (gnorm <= tol && polished) {
                out = lambda;
                return true;
            }
            const Scalar g = s.g();
            const Vector<Scalar> h = s.h();
            Matrix<Scalar> hess = h * h.transpose();
            hess += g * theta * Matrix<Scalar>(s.p.asDiagonal()) - g * theta * s.p * s.p.transpose();
            hess += g * theta * Matrix<Scalar>(s.q.asDiagonal()) - g * theta * s.q * s.q.transpose();

            // Gradient-scaled regularization: far from the optimum the softmax
            // saturates and curvature along interior eigenvalues vanishes.
            hess.diagonal().array() += gnorm / (Scalar(1) + lambda.norm());

            Matrix<Scalar> kkt = Matrix<Scalar>::Zero(n + 1, n + 1);
            kkt.topLeftCorner(n, n) = hess;
            kkt.block(0, n, n, 1).setOnes();
            kkt.block(n, 0, 1, n).setOnes();
            Vector<Scalar> rhs = Vector<Scalar>::Zero(n + 1);
            rhs.head(n) = -grad;
            Vector<Scalar> dir = kkt.fullPivLu().solve(rhs).head(n);
            dir.array() -= dir.mean();
            if (!dir.allFinite()) return false;

            // Full Newton step when it at least halves the gradient; this is the
            // local regime, where objective differences sink below rounding.
            const Vector<Scalar> full = lambda + dir;
            const Scalar full_gnorm = projected_gradient(softmax(full, theta)).norm();
            if (gnorm <= tol) {
                // One polishing step past the tolerance, kept only if it helps.
                polished = true;
                if (full_gnorm < gnorm) lambda = full;
                continue;
            }
            if (full_gnorm <= Scalar(0.5) * gnorm) {
                lambda = full;
                continue;
            }
            const Scalar f0 = objective(lambda);
            const Scalar slope = grad.dot(dir);
            Scalar step(1);
            bool accepted = false;
            for (int bt = 0; bt < 60; ++bt) {
                const Vector<Scalar> trial = lambda + step * dir;
                if (objective(trial) <= f0 + Scalar(1e-4) * step * slope) {
                    lambda = trial;
                    accepted = true;
                    break;
                }
                step *= Scalar(cfg.backtrack_factor);
            }
            if (!accepted) return false;
        }
        return false;
    };

    // Start on the ray -c mu (eigenvalue order reversed against mu), with c
    // minimizing the convex objective along it: phi'(c) = -g h.mu - |mu|^2.
    auto slope_along = [&](Scalar c) {
        const SoftMax<Scalar> s = softmax(Vector<Scalar>(-c * mu), theta);
        return -s.g() * s.h().dot(mu) - mu_norm * mu_norm;
    };
    Scalar c_lo(0);
    Scalar c_hi = Scalar(1) / (mu_norm + Scalar(1));
    for (int k = 0; k < 200 && slope_along(c_hi) < Scalar(0); ++k) {
        c_lo = c_hi;
        c_hi *= Scalar(2);
    }
    for (int k = 0; k < 40 && c_hi - c_lo > Scalar(1e-3) * c_hi; ++k) {
        const Scalar mid = Scalar(0.5) * (c_lo + c_hi);
        (slope_along(mid) < Scalar(0) ? c_lo : c_hi) = mid;
    }

    Vector<Scalar> result;
    const Vector<Scalar> start = -Scalar(0.5) * (c_lo + c_hi) * mu;
    if (run(start, result)) return result;
    if (run(Vector<Scalar>::Zero(n), result)) return result;
    std::ostringstream os;
    os << "control_from_momentum: Newton iteration did not reach gradient tolerance " << tol << " within "
       << cfg.max_iter << " iterations";
    throw IterationFailure(os.str());
}

}  // namespace spectral

template <typename Scalar>
Scalar attention_cost(const TracelessSym<Scalar>& a) {
    return a.matrix().squaredNorm();
}

template <typename Scalar>
Scalar spectral_diameter(const TracelessSym<Scalar>& a) {
    const auto eig = sym_eig(a.sym());
    return eig.values(eig.values.size() - 1) - eig.values(0);
}

/// g_theta(A) = (1/theta) log tr e^{theta A} + (1/theta) log tr e^{-theta A}.
template <typename Scalar>
Scalar soft_diameter(const TracelessSym<Scalar>& a, const CostParams<Scalar>& p) {
    return spectral::soft_diameter(sym_eig(a.sym()).values, p.theta());
}

/// G_theta(A) = e^{theta A}/tr e^{theta A} - e^{-theta A}/tr e^{-theta A}, projected traceless.
template <typename Scalar>
TracelessSym<Scalar> soft_diameter_gradient(const TracelessSym<Scalar>& a, const CostParams<Scalar>& p) {
    const auto eig = sym_eig(a.sym());
    const auto s = spectral::softmax(eig.values, p.theta());
    const Vector<Scalar> h = s.h();
    return TracelessSym<Scalar>(eig.vectors * h.asDiagonal() * eig.vectors.transpose());
}

/// M = -g_theta(A) G_theta(A).
template <typename Scalar>
TracelessSym<Scalar> momentum_from_control(const TracelessSym<Scalar>& a, const CostParams<Scalar>& p) {
    const auto eig = sym_eig(a.sym());
    const auto s = spectral::softmax(eig.values, p.theta());
    const Vector<Scalar> mu = -s.g() * s.h();
    return TracelessSym<Scalar>(eig.vectors * mu.asDiagonal() * eig.vectors.transpose());
}

/// Inverse of momentum_from_control: A shares M's eigenvectors, with eigenvalues
/// solving the per-eigenvalue stationarity system under sum(lambda) = 0.
template <typename Scalar>
TracelessSym<Scalar> control_from_momentum(const TracelessSym<Scalar>& m, const CostParams<Scalar>& p,
                                           const InversionConfig& cfg = {}) {
    const auto eig = sym_eig(m.sym());
    const Vector<Scalar> lambda = spectral::invert_momentum(eig.values, p.theta(), cfg);
    return TracelessSym<Scalar>(eig.vectors * lambda.asDiagonal() * eig.vectors.transpose());
}

using CostParamsd = CostParams<double>;

}  // namespace mshear

#endif  // MSHEAR_SPECTRAL_COST_HPP
