#ifndef MSHEAR_SYMMAT_HPP
#define MSHEAR_SYMMAT_HPP

// Small dense symmetric linear algebra: typed wrappers for the matrix classes
// the extremal system works with, a cyclic Jacobi eigensolver, and spectral
// matrix functions.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mshear/errors.hpp"

namespace mshear {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

namespace detail {

template <typename Derived>
void require_square(const Eigen::MatrixBase<Derived>& m, const char* what) {
    if (m.rows() < 1 || m.rows() != m.cols()) {
        std::ostringstream os;
        os << what << ": expected a non-empty square matrix, got " << m.rows() << "x" << m.cols();
        throw ValidationError(os.str());
    }
    if (!m.allFinite()) {
        throw ValidationError(std::string(what) + ": matrix has non-finite entries");
    }
}

}  // namespace detail

/// Dense symmetric matrix. Construction symmetrizes (V + V^T)/2.
template <typename Scalar>
class SymMatrix {
public:
    SymMatrix() = default;

    template <typename Derived>
    explicit SymMatrix(const Eigen::MatrixBase<Derived>& m) {
        detail::require_square(m, "SymMatrix");
        m_ = Scalar(0.5) * (m + m.transpose());
    }

    static SymMatrix zero(Index n) { return SymMatrix(Matrix<Scalar>::Zero(n, n)); }
    static SymMatrix identity(Index n) { return SymMatrix(Matrix<Scalar>::Identity(n, n)); }

    Index dim() const { return m_.rows(); }
    const Matrix<Scalar>& matrix() const { return m_; }
    Scalar operator()(Index i, Index j) const { return m_(i, j); }
    Scalar trace() const { return m_.trace(); }

private:
    Matrix<Scalar> m_;
};

/// Eigenpairs of a symmetric matrix. Values ascending; column i of `vectors`
/// pairs with values[i].
template <typename Scalar>
struct EigenDecomp {
    Vector<Scalar> values;
    Matrix<Scalar> vectors;

    Matrix<Scalar> reconstruct() const { return vectors * values.asDiagonal() * vectors.transpose(); }

    /// V f(D) V^T for a scalar function f applied to each eigenvalue.
    template <typename F>
    Matrix<Scalar> apply(F&& f) const {
        Vector<Scalar> fv = values.unaryExpr(std::forward<F>(f));
        return vectors * fv.asDiagonal() * vectors.transpose();
    }
};

struct JacobiOptions {
    int max_sweeps = 100;
    double rel_tol = 1e-14;
};

/// Cyclic Jacobi eigendecomposition. Deterministic: fixed sweep order, ascending
/// eigenvalues, and each eigenvector's largest-magnitude entry made positive.
template <typename Scalar>
EigenDecomp<Scalar> sym_eig(const SymMatrix<Scalar>& s, const JacobiOptions& opts = {}) {
    using std::abs;
    using std::sqrt;
    const Index n = s.dim();
    Matrix<Scalar> a = s.matrix();
    Matrix<Scalar> v = Matrix<Scalar>::Identity(n, n);
    if (!a.allFinite()) throw ValidationError("sym_eig: non-finite input");

    const Scalar total = a.norm();
    auto off_norm = [&]() {
        Scalar acc(0);
        for (Index j = 0; j < n; ++j)
            for (Index i = 0; i < j; ++i) acc += Scalar(2) * a(i, j) * a(i, j);
        return sqrt(acc);
    };

    bool converged = false;
    for (int sweep = 0; sweep <= opts.max_sweeps; ++sweep) {
        if (off_norm() <= Scalar(opts.rel_tol) * total) {
            converged = true;
            break;
        }
        if (sweep == opts.max_sweeps) break;
        for (Index p = 0; p < n - 1; ++p) {
            for (Index q = p + 1; q < n; ++q) {
                const Scalar apq = a(p, q);
                if (apq == Scalar(0)) continue;
                const Scalar tau = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
                const Scalar t = (tau >= Scalar(0) ? Scalar(1) : Scalar(-1)) / (abs(tau) + sqrt(Scalar(1) + tau * tau));
                const Scalar c = Scalar(1) / sqrt(Scalar(1) + t * t);
                const Scalar sn = t * c;
                for (Index k = 0; k < n; ++k) {
                    const Scalar akp = a(k, p);
                    const Scalar akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (Index k = 0; k < n; ++k) {
                    const Scalar apk = a(p, k);
                    const Scalar aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
                a(p, q) = Scalar(0);
                a(q, p) = Scalar(0);
                for (Index k = 0; k < n; ++k) {
                    const Scalar vkp = v(k, p);
                    const Scalar vkq = v(k, q);
                    v(k, p) = c * vkp - sn * vkq;
                    v(k, q) = sn * vkp + c * vkq;
                }
            }
        }
    }
    if (!converged) throw IterationFailure("sym_eig: Jacobi iteration did not converge");

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index(0));
    std::stable_sort(order.begin(), order.end(), [&](Index i, Index j) { return a(i, i) < a(j, j); });

    EigenDecomp<Scalar> out;
    out.values.resize(n);
    out.vectors.resize(n, n);
    for (Index k = 0; k < n; ++k) {
        const Index src = order[static_cast<std::size_t>(k)];
        out.values(k) = a(src, src);
        Vector<Scalar> col = v.col(src);
        Index imax = 0;
        for (Index i = 1; i < n; ++i)
            if (abs(col(i)) > abs(col(imax))) imax = i;
        if (col(imax) < Scalar(0)) col = -col;
        out.vectors.col(k) = col;
    }
    return out;
}

/// Symmetric positive definite matrix; construction checks
/// lambda_min > spd_eps * lambda_max.
template <typename Scalar>
class SpdMatrix {
public:
    SpdMatrix() = default;

    explicit SpdMatrix(SymMatrix<Scalar> s, Scalar spd_eps = Scalar(1e-12)) : base_(std::move(s)) {
        const auto eig = sym_eig(base_);
        const Scalar lo = eig.values(0);
        const Scalar hi = eig.values(eig.values.size() - 1);
        if (!(lo > Scalar(0)) || !(lo > spd_eps * hi)) {
            std::ostringstream os;
            os << "SpdMatrix: matrix is not positive definite (lambda_min = " << lo << ", lambda_max = " << hi << ")";
            throw ValidationError(os.str());
        }
    }

    template <typename Derived>
    explicit SpdMatrix(const Eigen::MatrixBase<Derived>& m) : SpdMatrix(SymMatrix<Scalar>(m)) {}

    static SpdMatrix identity(Index n) { return SpdMatrix(SymMatrix<Scalar>::identity(n)); }

    Index dim() const { return base_.dim(); }
    const SymMatrix<Scalar>& sym() const { return base_; }
    const Matrix<Scalar>& matrix() const { return base_.matrix(); }

private:
    SymMatrix<Scalar> base_;
};

/// Symmetric matrix with zero trace. Construction subtracts (tr/n) I.
template <typename Scalar>
class TracelessSym {
public:
    TracelessSym() = default;

    explicit TracelessSym(const SymMatrix<Scalar>& s) {
        Matrix<Scalar> m = s.matrix();
        m.diagonal().array() -= m.trace() / Scalar(m.rows());
        base_ = SymMatrix<Scalar>(m);
    }

    template <typename Derived>
    explicit TracelessSym(const Eigen::MatrixBase<Derived>& m) : TracelessSym(SymMatrix<Scalar>(m)) {}

    static TracelessSym zero(Index n) { return TracelessSym(SymMatrix<Scalar>::zero(n)); }

    Index dim() const { return base_.dim(); }
    const SymMatrix<Scalar>& sym() const { return base_; }
    const Matrix<Scalar>& matrix() const { return base_.matrix(); }

private:
    SymMatrix<Scalar> base_;
};

/// Antisymmetric matrix. Construction antisymmetrizes (V - V^T)/2.
template <typename Scalar>
class SkewMatrix {
public:
    SkewMatrix() = default;

    template <typename Derived>
    explicit SkewMatrix(const Eigen::MatrixBase<Derived>& m) {
        detail::require_square(m, "SkewMatrix");
        m_ = Scalar(0.5) * (m - m.transpose());
    }

    static SkewMatrix zero(Index n) { return SkewMatrix(Matrix<Scalar>::Zero(n, n)); }

    Index dim() const { return m_.rows(); }
    const Matrix<Scalar>& matrix() const { return m_; }

private:
    Matrix<Scalar> m_;
};

template <typename Scalar>
SpdMatrix<Scalar> expm_sym(const SymMatrix<Scalar>& s) {
    using std::exp;
    const auto eig = sym_eig(s);
    return SpdMatrix<Scalar>(eig.apply([](Scalar x) { return exp(x); }));
}

template <typename Scalar>
SymMatrix<Scalar> logm_spd(const SpdMatrix<Scalar>& p) {
    using std::log;
    const auto eig = sym_eig(p.sym());
    return SymMatrix<Scalar>(eig.apply([](Scalar x) { return log(x); }));
}

template <typename Scalar>
SpdMatrix<Scalar> sqrtm_spd(const SpdMatrix<Scalar>& p) {
    using std::sqrt;
    const auto eig = sym_eig(p.sym());
    return SpdMatrix<Scalar>(eig.apply([](Scalar x) { return sqrt(x); }));
}

template <typename Scalar>
SpdMatrix<Scalar> invsqrtm_spd(const SpdMatrix<Scalar>& p) {
    using std::sqrt;
    const auto eig = sym_eig(p.sym());
    return SpdMatrix<Scalar>(eig.apply([](Scalar x) { return Scalar(1) / sqrt(x); }));
}

/// Inverse of an SPD matrix via its eigendecomposition.
template <typename Scalar>
SpdMatrix<Scalar> inverse_spd(const SpdMatrix<Scalar>& p) {
    const auto eig = sym_eig(p.sym());
    return SpdMatrix<Scalar>(eig.apply([](Scalar x) { return Scalar(1) / x; }));
}

/// log det of an SPD matrix from its eigenvalues.
template <typename Scalar>
Scalar logdet_spd(const SpdMatrix<Scalar>& p) {
    return sym_eig(p.sym()).values.array().log().sum();
}

/// G = sym + skew + trace_scalar * I, with `sym` traceless.
template <typename Scalar>
struct SplitParts {
    TracelessSym<Scalar> sym;
    SkewMatrix<Scalar> skew;
    Scalar trace_scalar;

    Matrix<Scalar> reconstruct() const {
        const Index n = sym.dim();
        return sym.matrix() + skew.matrix() + trace_scalar * Matrix<Scalar>::Identity(n, n);
    }
};

template <typename Derived>
SplitParts<typename Derived::Scalar> split(const Eigen::MatrixBase<Derived>& g) {
    using Scalar = typename Derived::Scalar;
    detail::require_square(g, "split");
    const Matrix<Scalar> m = g;
    return SplitParts<Scalar>{TracelessSym<Scalar>(m), SkewMatrix<Scalar>(m), m.trace() / Scalar(m.rows())};
}

/// ||a - b||_F / ||b||_F, falling back to the absolute error when b = 0.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar relative_error(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
    using Scalar = typename DerivedA::Scalar;
    const Scalar denom = b.norm();
    const Scalar diff = (a - b).norm();
    return denom > Scalar(0) ? diff / denom : diff;
}

using SymMatrixd = SymMatrix<double>;
using SpdMatrixd = SpdMatrix<double>;
using TracelessSymd = TracelessSym<double>;
using SkewMatrixd = SkewMatrix<double>;

}  // namespace mshear

#endif  // MSHEAR_SYMMAT_HPP
