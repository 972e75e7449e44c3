#include "nfkit/spectral.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nfkit/errors.hpp"

namespace nfkit {

namespace {

using EMat = Eigen::MatrixXcd;

EMat to_eigen(const CMatrix& m) {
    EMat e(m.rows(), m.cols());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
    return e;
}

CMatrix from_eigen(const EMat& e) {
    CMatrix m(static_cast<int>(e.rows()), static_cast<int>(e.cols()));
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) m(i, j) = e(i, j);
    return m;
}

// Solves T Y = Y D for unit upper-triangular Y, with D_ij = 0 unless same(i, j).
template <class S, class Same>
void decouple(const DenseMatrix<S>& T, DenseMatrix<S>& Y, DenseMatrix<S>& D, Same same) {
    const int n = T.rows();
    Y = DenseMatrix<S>(n, n);
    D = DenseMatrix<S>(n, n);
    for (int j = 0; j < n; ++j) {
        Y(j, j) = ScalarTraits<S>::one();
        D(j, j) = T(j, j);
        for (int i = j - 1; i >= 0; --i) {
            S rhs = ScalarTraits<S>::zero();
            for (int k = i + 1; k < j; ++k) rhs += Y(i, k) * D(k, j);
            for (int k = i + 1; k <= j; ++k) rhs -= T(i, k) * Y(k, j);
            if (same(i, j)) {
                D(i, j) = -rhs;
            } else {
                Y(i, j) = rhs / (T(i, i) - T(j, j));
            }
        }
    }
}

template <class S>
DenseMatrix<S> unit_upper_inverse(const DenseMatrix<S>& Y) {
    const int n = Y.rows();
    DenseMatrix<S> X = DenseMatrix<S>::identity(n);
    for (int j = 0; j < n; ++j)
        for (int i = j - 1; i >= 0; --i) {
            S s = ScalarTraits<S>::zero();
            for (int k = i + 1; k <= j; ++k) s += Y(i, k) * X(k, j);
            X(i, j) = -s;
        }
    return X;
}

double strict_upper_max(const CMatrix& T) {
    double d = 0.0;
    for (int i = 0; i < T.rows(); ++i)
        for (int j = i + 1; j < T.cols(); ++j) d = std::max(d, std::abs(T(i, j)));
    return d;
}

}  // namespace

std::string to_string(Mode m) { return m == Mode::SlowFast ? "slow-fast" : "csu"; }

std::string to_string(RateClass c) {
    switch (c) {
        case RateClass::Center: return "center";
        case RateClass::Stable: return "stable";
        case RateClass::Unstable: return "unstable";
        case RateClass::Slow: return "slow";
        case RateClass::Fast: return "fast";
    }
    return "?";
}

Mode mode_from_string(const std::string& s) {
    if (s == "csu" || s == "center-stable-unstable") return Mode::CenterStableUnstable;
    if (s == "slow-fast") return Mode::SlowFast;
    throw ValidationError("unknown mode '" + s + "' (expected csu or slow-fast)");
}

RateClass classify(Complex lambda, double mutilde, Mode mode) {
    if (mode == Mode::SlowFast) return std::abs(lambda) <= mutilde ? RateClass::Slow : RateClass::Fast;
    if (lambda.real() < -mutilde) return RateClass::Stable;
    if (lambda.real() > mutilde) return RateClass::Unstable;
    return RateClass::Center;
}

GapCheck check_gap(double alpha, double beta, int p) {
    GapCheck g;
    g.margin = beta - (2.0 * p - 1.0) * alpha;
    g.ok = g.margin > 0.0;
    return g;
}

double spectral_norm(const CMatrix& M) {
    if (M.empty()) return 0.0;
    Eigen::JacobiSVD<EMat> svd(to_eigen(M));
    return svd.singularValues()(0);
}

double condition_number(const CMatrix& M) {
    if (M.empty()) return 1.0;
    Eigen::JacobiSVD<EMat> svd(to_eigen(M));
    const auto& s = svd.singularValues();
    const double lo = s(s.size() - 1);
    if (lo == 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / lo;
}

CMatrix inverse(const CMatrix& M) {
    if (M.empty()) return M;
    Eigen::FullPivLU<EMat> lu(to_eigen(M));
    if (!lu.isInvertible()) throw NumericalError("singular similarity matrix");
    return from_eigen(lu.inverse());
}

Triangularization triangularize(const CMatrix& M, double balance) {
    if (M.rows() != M.cols()) throw DimensionError("triangularize needs a square matrix");
    const int n = M.rows();
    Triangularization out;
    if (n == 0) return out;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (!std::isfinite(M(i, j).real()) || !std::isfinite(M(i, j).imag()))
                throw NumericalError("matrix has non-finite entries");
    if (!(balance > 0.0)) throw ValidationError("balancing scale must be positive");

    CMatrix U = CMatrix::identity(n);
    CMatrix T0 = M;
    if (!M.is_upper_triangular()) {
        Eigen::ComplexSchur<EMat> schur(to_eigen(M));
        if (schur.info() != Eigen::Success) throw NumericalError("Schur decomposition did not converge");
        U = from_eigen(schur.matrixU());
        T0 = from_eigen(schur.matrixT());
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < i; ++j) T0(i, j) = 0.0;
        out.from_schur = true;
    }

    double scale = 1.0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(T0(i, i)));
    const double cluster_tol = 1e-7 * scale;
    // cluster[i]: index of the first diagonal entry equal to entry i
    std::vector<int> cluster(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        cluster[static_cast<std::size_t>(i)] = i;
        for (int k = 0; k < i; ++k)
            if (std::abs(T0(i, i) - T0(k, k)) <= cluster_tol) {
                cluster[static_cast<std::size_t>(i)] = cluster[static_cast<std::size_t>(k)];
                break;
            }
    }
    CMatrix Y, D;
    decouple(T0, Y, D, [&](int i, int j) { return cluster[static_cast<std::size_t>(i)] == cluster[static_cast<std::size_t>(j)]; });

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    if (out.from_schur) {
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            Complex la = T0(cluster[static_cast<std::size_t>(a)], cluster[static_cast<std::size_t>(a)]);
            Complex lb = T0(cluster[static_cast<std::size_t>(b)], cluster[static_cast<std::size_t>(b)]);
            // Conjugate pairs differ in real part only by rounding.
            if (std::abs(la.real() - lb.real()) > cluster_tol) return la.real() < lb.real();
            if (std::abs(la.imag() - lb.imag()) > cluster_tol) return la.imag() < lb.imag();
            return a < b;
        });
    }
    CMatrix P(n, n);
    for (int k = 0; k < n; ++k) P(order[static_cast<std::size_t>(k)], k) = 1.0;
    CMatrix Pt(n, n);
    for (int k = 0; k < n; ++k) Pt(k, order[static_cast<std::size_t>(k)]) = 1.0;

    CMatrix Bal(n, n), BalInv(n, n);
    for (int i = 0; i < n; ++i) {
        Bal(i, i) = std::pow(balance, i);
        BalInv(i, i) = std::pow(balance, -i);
    }

    out.S = U * Y * P * Bal;
    out.T = BalInv * (Pt * D * P) * Bal;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < i; ++j) out.T(i, j) = 0.0;
    out.Sinv = BalInv * Pt * unit_upper_inverse(Y) * [&] {
        CMatrix Uh(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) Uh(i, j) = std::conj(U(j, i));
        return Uh;
    }();

    // S^{-1} M S must reproduce T.
    CMatrix R = out.Sinv * M * out.S;
    double err = 0.0, mag = 1.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            err = std::max(err, std::abs(R(i, j) - out.T(i, j)));
            mag = std::max(mag, std::abs(M(i, j)));
        }
    if (err > 1e-10 * mag * std::max(1.0, condition_number(out.S)))
        throw NumericalError("triangularization failed its reconstruction check");

    out.condS = condition_number(out.S);
    out.delta = strict_upper_max(out.T);
    CMatrix N(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) N(i, j) = out.T(i, j);
    out.offdiag_norm = spectral_norm(N);
    for (int i = 0; i < n; ++i) out.eigenvalues.push_back(out.T(i, i));
    return out;
}

ExactTriangularization triangularize_exact(const DenseMatrix<GaussianRational>& M) {
    if (M.rows() != M.cols()) throw DimensionError("triangularize needs a square matrix");
    if (!M.is_upper_triangular())
        throw ValidationError("exact mode requires upper-triangular linear parts");
    ExactTriangularization out;
    DenseMatrix<GaussianRational> Y, D;
    decouple(M, Y, D, [&](int i, int j) { return M(i, i) == M(j, j); });
    out.T = D;
    out.S = Y;
    out.Sinv = unit_upper_inverse(Y);
    return out;
}

void spectral_bounds(SpectralData& sd) {
    const bool sf = sd.mode == Mode::SlowFast;
    sd.alpha = 0.0;
    for (const auto& e : sd.A.eigenvalues) sd.alpha = std::max(sd.alpha, sf ? std::abs(e) : std::abs(e.real()));
    sd.beta = std::numeric_limits<double>::infinity();
    for (const auto& e : sd.B.eigenvalues) sd.beta = std::min(sd.beta, sf ? std::abs(e) : -e.real());
    for (const auto& e : sd.C.eigenvalues) sd.beta = std::min(sd.beta, sf ? std::abs(e) : e.real());
    sd.delta = std::max({sd.A.offdiag_norm, sd.B.offdiag_norm, sd.C.offdiag_norm});
}

}  // namespace nfkit
