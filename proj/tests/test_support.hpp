#ifndef MSHEAR_TEST_SUPPORT_HPP
#define MSHEAR_TEST_SUPPORT_HPP

// Random instance generators and independent reference computations shared by
// the unit tests and the acceptance binary. The references deliberately avoid
// the library's Jacobi solver and go through Eigen's own solvers instead.

#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "mshear/steering.hpp"

namespace mshear::testing {

using Rng = std::mt19937_64;

inline Eigen::MatrixXd gaussian(Rng& rng, Eigen::Index r, Eigen::Index c) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Eigen::MatrixXd m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = nd(rng);
    return m;
}

inline Eigen::MatrixXd random_orthogonal(Rng& rng, Eigen::Index n) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian(rng, n, n));
    Eigen::MatrixXd q = qr.householderQ();
    if (q.determinant() < 0) q.col(0) *= -1.0;
    return q;
}

inline Eigen::MatrixXd random_symmetric(Rng& rng, Eigen::Index n, double scale = 1.0) {
    const Eigen::MatrixXd g = gaussian(rng, n, n);
    return 0.5 * scale * (g + g.transpose());
}

inline Eigen::MatrixXd random_traceless(Rng& rng, Eigen::Index n, double scale = 1.0) {
    Eigen::MatrixXd s = random_symmetric(rng, n, scale);
    s.diagonal().array() -= s.trace() / static_cast<double>(n);
    return s;
}

// SPD with unit determinant and condition number at most max_cond.
inline Eigen::MatrixXd random_unimodular_spd(Rng& rng, Eigen::Index n, double max_cond = 50.0) {
    std::uniform_real_distribution<double> u(0.0, std::log(max_cond));
    Eigen::VectorXd logs(n);
    for (Eigen::Index i = 0; i < n; ++i) logs(i) = u(rng);
    logs(0) = 0.0;
    logs(n - 1) = u(rng);  // at least one spread draw, never exceeding max_cond
    logs.array() -= logs.mean();
    const Eigen::MatrixXd q = random_orthogonal(rng, n);
    return q * logs.array().exp().matrix().asDiagonal() * q.transpose();
}

inline Eigen::MatrixXd random_spd(Rng& rng, Eigen::Index n) {
    const Eigen::MatrixXd g = gaussian(rng, n, n);
    return g * g.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
}

inline Eigen::VectorXd reference_eigenvalues(const Eigen::MatrixXd& s) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(s, Eigen::EigenvaluesOnly).eigenvalues();
}

// g_theta from traces of matrix exponentials, without any eigendecomposition.
inline double reference_soft_diameter(const Eigen::MatrixXd& a, double theta) {
    const Eigen::MatrixXd up = (theta * a).exp();
    const Eigen::MatrixXd down = (-theta * a).exp();
    return (std::log(up.trace()) + std::log(down.trace())) / theta;
}

// Gradient of g_theta: normalized exponentials exp(theta A)/tr - exp(-theta A)/tr.
inline Eigen::MatrixXd reference_soft_gradient(const Eigen::MatrixXd& a, double theta) {
    const Eigen::MatrixXd up = (theta * a).exp();
    const Eigen::MatrixXd down = (-theta * a).exp();
    return up / up.trace() - down / down.trace();
}

inline double frob_rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return (a - b).norm() / std::max(1.0, b.norm());
}

inline ProblemInstanced random_instance(Rng& rng, Eigen::Index n, double theta, double max_cond = 50.0) {
    return ProblemInstanced(SpdMatrixd(random_unimodular_spd(rng, n, max_cond)),
                            SpdMatrixd(random_unimodular_spd(rng, n, max_cond)), CostParamsd(theta));
}

}  // namespace mshear::testing

#endif
