#include <cmath>

#include <gtest/gtest.h>

#include "mshear/dynamics.hpp"
#include "test_support.hpp"

namespace mshear {
namespace {

using testing::Rng;

struct Extremal {
    SpdMatrixd sigma0;
    TracelessSymd m0;
    SkewMatrixd omega;
};

Extremal random_extremal(Rng& rng, Eigen::Index n, double scale = 1.0) {
    return Extremal{SpdMatrixd(testing::random_unimodular_spd(rng, n, 10.0)),
                    TracelessSymd(testing::random_traceless(rng, n, scale)),
                    SkewMatrixd(testing::gaussian(rng, n, n) * scale)};
}

TEST(VectorField, ZeroMomentumIsStationary) {
    Rng rng(1);
    const ExtremalStated s(SpdMatrixd(testing::random_spd(rng, 3)), TracelessSymd::zero(3),
                           SkewMatrixd(testing::gaussian(rng, 3, 3)));
    const auto t = vector_field(s, CostParamsd(2.0));
    EXPECT_LT(t.dsigma.matrix().norm(), 1e-15);
    EXPECT_LT(t.dm.matrix().norm(), 1e-15);
}

TEST(VectorField, ZeroOmegaFreezesMomentum) {
    Rng rng(2);
    const ExtremalStated s(SpdMatrixd(testing::random_spd(rng, 3)), TracelessSymd(testing::random_traceless(rng, 3)),
                           SkewMatrixd::zero(3));
    const auto t = vector_field(s, CostParamsd(2.0));
    EXPECT_EQ(t.dm.matrix().norm(), 0.0);
    EXPECT_GT(t.dsigma.matrix().norm(), 0.0);
}

TEST(VectorField, PreservesVolumeToFirstOrder) {
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 2 + trial % 4;
        const Eigen::MatrixXd sigma = testing::random_spd(rng, n);
        const ExtremalStated s(SpdMatrixd(sigma), TracelessSymd(testing::random_traceless(rng, n)),
                               SkewMatrixd(testing::gaussian(rng, n, n)));
        const auto t = vector_field(s, CostParamsd(1.0));
        // d/dt log det Sigma = tr(Sigma^{-1} dSigma) = 2 tr A = 0.
        EXPECT_NEAR((sigma.inverse() * t.dsigma.matrix()).trace(), 0.0, 1e-11);
        EXPECT_NEAR(t.dm.matrix().trace(), 0.0, 1e-12);
    }
}

TEST(ExtremalState, RejectsMixedDimensions) {
    EXPECT_THROW(ExtremalStated(SpdMatrixd::identity(2), TracelessSymd::zero(3), SkewMatrixd::zero(2)),
                 ValidationError);
}

TEST(Integrate, ZeroMomentumGivesConstantTrajectory) {
    Rng rng(4);
    const SpdMatrixd s0(testing::random_spd(rng, 3));
    IntegratorConfig cfg;
    cfg.steps = 50;
    const auto traj = integrate(s0, TracelessSymd::zero(3), SkewMatrixd::zero(3), CostParamsd(5.0), cfg);
    ASSERT_EQ(traj.size(), 51u);
    EXPECT_EQ(traj.times.front(), 0.0);
    EXPECT_EQ(traj.times.back(), 1.0);
    for (const auto& s : traj.states) EXPECT_EQ(s.sigma.matrix(), s0.matrix());
    const auto drift = spectrum_drift(traj);
    EXPECT_EQ(drift.a, 0.0);
    EXPECT_EQ(drift.m, 0.0);
    EXPECT_EQ(drift.l, 0.0);
}

TEST(Integrate, ConstantControlMatchesExponentialFlow) {
    Rng rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const Eigen::Index n = 2 + trial % 3;
        const CostParamsd p(trial % 2 ? 1.0 : 5.0);
        const Eigen::MatrixXd s0 = testing::random_unimodular_spd(rng, n, 10.0);
        const TracelessSymd m0(testing::random_traceless(rng, n));
        const auto traj = integrate(SpdMatrixd(s0), m0, SkewMatrixd::zero(n), p);
        const Eigen::MatrixXd a = control_from_momentum(m0, p).matrix();
        const Eigen::MatrixXd e = a.exp();
        EXPECT_LT(relative_error(traj.states.back().sigma.matrix(), Eigen::MatrixXd(e * s0 * e)), 1e-10);
        const auto drift = spectrum_drift(traj);
        EXPECT_LT(drift.a, 1e-12);
        EXPECT_LT(drift.m, 1e-12);
    }
}

TEST(Integrate, ConservedQuantities) {
    Rng rng(6);
    for (int trial = 0; trial < 8; ++trial) {
        const Eigen::Index n = 2 + trial % 3;
        const CostParamsd p(trial % 2 ? 1.0 : 5.0);
        const Extremal ex = random_extremal(rng, n);
        const auto traj = integrate(ex.sigma0, ex.m0, ex.omega, p);
        const auto drift = spectrum_drift(traj);
        EXPECT_LT(drift.a, 1e-8);
        EXPECT_LT(drift.m, 1e-8);
        EXPECT_LT(drift.l, 1e-8);
        EXPECT_LT(determinant_drift(traj), 1e-8);
        EXPECT_LT(stationarity_residual(traj, p), 1e-9);
        EXPECT_LT(traj.max_symmetry_correction, 1e-12);
        for (const auto& s : traj.states) EXPECT_EQ(s.omega.matrix(), ex.omega.matrix());
    }
}

TEST(Integrate, SpectralMatchingAgreesWithFullInversion) {
    Rng rng(7);
    for (int trial = 0; trial < 4; ++trial) {
        const Eigen::Index n = 2 + trial % 2;
        const CostParamsd p(trial < 2 ? 1.0 : 5.0);
        const Extremal ex = random_extremal(rng, n);
        IntegratorConfig spectral;
        spectral.control_mode = ControlMode::spectral_matching;
        const auto full = integrate(ex.sigma0, ex.m0, ex.omega, p);
        const auto fast = integrate(ex.sigma0, ex.m0, ex.omega, p, spectral);
        double worst = 0;
        for (std::size_t k = 0; k < full.size(); ++k)
            worst = std::max(worst, (full.states[k].sigma.matrix() - fast.states[k].sigma.matrix()).norm());
        EXPECT_LT(worst, 1e-8);
        // Stationarity is a genuine check in this mode.
        EXPECT_LT(stationarity_residual(fast, p), 1e-9);
    }
}

TEST(Integrate, FourthOrderConvergence) {
    Rng rng(8);
    const Extremal ex = random_extremal(rng, 3, 2.0);
    const CostParamsd p(1.0);
    auto endpoint = [&](int steps) {
        IntegratorConfig cfg;
        cfg.steps = steps;
        return integrate_endpoint(ex.sigma0, ex.m0, ex.omega, p, cfg);
    };
    const Eigen::MatrixXd ref = endpoint(1600);
    const double e1 = (endpoint(25) - ref).norm();
    const double e2 = (endpoint(50) - ref).norm();
    const double e3 = (endpoint(100) - ref).norm();
    EXPECT_GT(e1 / e2, 8.0);
    EXPECT_LT(e1 / e2, 32.0);
    EXPECT_GT(e2 / e3, 8.0);
    EXPECT_LT(e2 / e3, 32.0);
}

TEST(Integrate, EndpointMatchesFullTrajectory) {
    Rng rng(9);
    const Extremal ex = random_extremal(rng, 2);
    IntegratorConfig cfg;
    cfg.steps = 200;
    const auto traj = integrate(ex.sigma0, ex.m0, ex.omega, CostParamsd(2.0), cfg);
    EXPECT_EQ(integrate_endpoint(ex.sigma0, ex.m0, ex.omega, CostParamsd(2.0), cfg), traj.states.back().sigma.matrix());
}

TEST(Integrate, LosingDefinitenessReportsTime) {
    const SpdMatrixd s0 = SpdMatrixd::identity(2);
    const TracelessSymd m0(Eigen::Vector2d(-40.0, 40.0).asDiagonal().toDenseMatrix());
    IntegratorConfig cfg;
    cfg.steps = 1;
    try {
        integrate(s0, m0, SkewMatrixd::zero(2), CostParamsd(1.0), cfg);
        FAIL() << "expected StepFailure";
    } catch (const StepFailure& e) {
        EXPECT_GE(e.time(), 0.0);
        EXPECT_LE(e.time(), 1.0);
    }
}

TEST(Integrate, RejectsBadInput) {
    IntegratorConfig cfg;
    cfg.steps = 0;
    EXPECT_THROW(integrate(SpdMatrixd::identity(2), TracelessSymd::zero(2), SkewMatrixd::zero(2), CostParamsd(1.0), cfg),
                 ValidationError);
    EXPECT_THROW(integrate(SpdMatrixd::identity(2), TracelessSymd::zero(3), SkewMatrixd::zero(2), CostParamsd(1.0)),
                 ValidationError);
}

TEST(Lyapunov, Examples) {
    Rng rng(10);
    const Eigen::MatrixXd s = testing::random_symmetric(rng, 3);
    EXPECT_LT((lyapunov_control(SpdMatrixd::identity(3), SymMatrixd(s)).matrix() - 0.5 * s).norm(), 1e-14);

    Eigen::Matrix2d ds;
    ds << 0, 3, 3, 0;
    Eigen::Matrix2d expected;
    expected << 0, 1, 1, 0;
    const auto a = lyapunov_control(SpdMatrixd(Eigen::Vector2d(1, 2).asDiagonal().toDenseMatrix()), SymMatrixd(ds));
    EXPECT_LT((a.matrix() - expected).norm(), 1e-14);

    EXPECT_EQ(lyapunov_control(SpdMatrixd(testing::random_spd(rng, 3)), SymMatrixd::zero(3)).matrix().norm(), 0.0);
}

TEST(Lyapunov, RightInverse) {
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index n = 2 + trial % 5;
        const Eigen::MatrixXd sigma = testing::random_spd(rng, n);
        const Eigen::MatrixXd ds = testing::random_symmetric(rng, n);
        const Eigen::MatrixXd a = lyapunov_control(SpdMatrixd(sigma), SymMatrixd(ds)).matrix();
        EXPECT_LT(relative_error(Eigen::MatrixXd(a * sigma + sigma * a), ds), 1e-10);
    }
}

TEST(Charpoly, MatchesEigenvalues) {
    Rng rng(12);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::Index n = 2 + trial % 4;
        const Eigen::MatrixXd l = testing::gaussian(rng, n, n);
        const Eigen::VectorXd c = charpoly_coefficients<double>(l);
        // det(xI - L) vanishes at every eigenvalue.
        const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(l).eigenvalues();
        for (Eigen::Index i = 0; i < n; ++i) {
            std::complex<double> x = ev(i), acc = 1.0;
            for (Eigen::Index k = n - 1; k >= 0; --k) acc = acc * x + c(k);
            EXPECT_LT(std::abs(acc), 1e-10 * std::pow(1.0 + std::abs(x), static_cast<double>(n)));
        }
        EXPECT_NEAR(c(n - 1), -l.trace(), 1e-12);
        EXPECT_NEAR(c(0), (n % 2 ? -1.0 : 1.0) * l.determinant(), 1e-10);
    }
}

TEST(Quadrature, SimpsonAndTrapezoid) {
    // Simpson integrates cubics exactly.
    std::vector<double> cubic;
    for (int i = 0; i <= 10; ++i) {
        const double t = i / 10.0;
        cubic.push_back(t * t * t - 2 * t + 1);
    }
    EXPECT_NEAR(uniform_quadrature(cubic), 0.25 - 1.0 + 1.0, 1e-15);
    // Odd interval counts fall back to the trapezoid rule, exact for lines.
    EXPECT_NEAR(uniform_quadrature(std::vector<double>{0.0, 1.0 / 3, 2.0 / 3, 1.0}), 0.5, 1e-15);
    EXPECT_EQ(uniform_quadrature(std::vector<double>{3.0}), 0.0);
}

TEST(Cost, ConstantTrajectories) {
    IntegratorConfig cfg;
    cfg.steps = 20;
    const CostParamsd p5(5.0);
    const auto still = integrate(SpdMatrixd::identity(2), TracelessSymd::zero(2), SkewMatrixd::zero(2), p5, cfg);
    const double g0 = 2.0 * std::log(2.0) / 5.0;
    EXPECT_NEAR(cost_quadrature(still, p5), g0 * g0, 1e-15);
    EXPECT_NEAR(g0 * g0, 0.07687248222691222, 1e-15);

    const CostParamsd p1(1.0);
    const TracelessSymd a(Eigen::Vector2d(1, -1).asDiagonal().toDenseMatrix());
    const auto moving = integrate(SpdMatrixd::identity(2), momentum_from_control(a, p1), SkewMatrixd::zero(2), p1, cfg);
    const double g = 2.0 * std::log(std::exp(1.0) + std::exp(-1.0));
    EXPECT_NEAR(cost_quadrature(moving, p1), g * g, 1e-11);
    EXPECT_NEAR(closed_form_cost(moving, p1), g * g, 1e-11);
    EXPECT_NEAR(g * g, 5.0798669682930795, 1e-12);
    EXPECT_NEAR(attention_lower_bound(moving), 1.0, 1e-11);
}

}  // namespace
}  // namespace mshear
