#include <doctest.h>

#include <algorithm>
#include <random>

#include "nfkit/spectral.hpp"

using namespace nfkit;

namespace {

CMatrix from_rows(std::initializer_list<std::initializer_list<Complex>> rows) {
    const int n = static_cast<int>(rows.size());
    CMatrix M(n, n);
    int i = 0;
    for (const auto& r : rows) {
        int j = 0;
        for (const auto& v : r) M(i, j++) = v;
        ++i;
    }
    return M;
}

double max_abs(const CMatrix& M) {
    double m = 0.0;
    for (int i = 0; i < M.rows(); ++i)
        for (int j = 0; j < M.cols(); ++j) m = std::max(m, std::abs(M(i, j)));
    return m;
}

CMatrix diff(const CMatrix& a, const CMatrix& b) {
    CMatrix d = a;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) d(i, j) -= b(i, j);
    return d;
}

CMatrix random_matrix(std::mt19937_64& rng, int n) {
    std::normal_distribution<double> g;
    CMatrix M(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) M(i, j) = g(rng);
    return M;
}

// Characteristic polynomial by Faddeev-LeVerrier, roots by Durand-Kerner.
std::vector<Complex> reference_eigenvalues(const CMatrix& A) {
    const int n = A.rows();
    std::vector<Complex> c(static_cast<std::size_t>(n + 1));
    c[static_cast<std::size_t>(n)] = 1.0;
    CMatrix Mk(n, n);
    for (int k = 1; k <= n; ++k) {
        CMatrix next = A * Mk;
        for (int i = 0; i < n; ++i) next(i, i) += c[static_cast<std::size_t>(n - k + 1)];
        Mk = next;
        const CMatrix AM = A * Mk;
        Complex tr = 0.0;
        for (int i = 0; i < n; ++i) tr += AM(i, i);
        c[static_cast<std::size_t>(n - k)] = -tr / static_cast<double>(k);
    }
    std::vector<Complex> z(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) z[static_cast<std::size_t>(i)] = std::pow(Complex(0.4, 0.9), i);
    for (int it = 0; it < 2000; ++it) {
        for (int i = 0; i < n; ++i) {
            Complex p = 0.0;
            for (int k = n; k >= 0; --k) p = p * z[static_cast<std::size_t>(i)] + c[static_cast<std::size_t>(k)];
            Complex d = 1.0;
            for (int j = 0; j < n; ++j)
                if (j != i) d *= z[static_cast<std::size_t>(i)] - z[static_cast<std::size_t>(j)];
            z[static_cast<std::size_t>(i)] -= p / d;
        }
    }
    return z;
}

}  // namespace

TEST_CASE("triangularize a diagonal matrix") {
    const Triangularization t = triangularize(from_rows({{-1.0, 0.0}, {0.0, -2.0}}));
    CHECK_FALSE(t.from_schur);
    CHECK(t.condS == doctest::Approx(1.0));
    CHECK(t.delta == 0.0);
    CHECK(max_abs(diff(t.S, CMatrix::identity(2))) == 0.0);
}

TEST_CASE("rotation block gets eigenvalues -1 +- i and cond 1") {
    const Triangularization t = triangularize(from_rows({{-1.0, 1.0}, {-1.0, -1.0}}));
    REQUIRE(t.eigenvalues.size() == 2);
    CHECK(std::abs(t.eigenvalues[0] - Complex(-1.0, -1.0)) < 1e-12);
    CHECK(std::abs(t.eigenvalues[1] - Complex(-1.0, 1.0)) < 1e-12);
    CHECK(t.condS == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(t.T.is_upper_triangular());
}

TEST_CASE("balanced Jordan block") {
    const CMatrix J = from_rows({{0.0, 1.0}, {0.0, 0.0}});
    for (double s : {1.0, 0.5, 0.1}) {
        const Triangularization t = triangularize(J, s);
        CHECK(t.delta == doctest::Approx(s));
        CHECK(t.condS == doctest::Approx(1.0 / s));
    }
}

TEST_CASE("reconstruction for random matrices up to 8x8") {
    std::mt19937_64 rng(21);
    for (int n = 1; n <= 8; ++n)
        for (int trial = 0; trial < 5; ++trial) {
            const CMatrix M = random_matrix(rng, n);
            const Triangularization t = triangularize(M);
            CHECK(max_abs(diff(t.S * t.T * t.Sinv, M)) <= 1e-9 * std::max(1.0, spectral_norm(M)));
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < i; ++j) CHECK(std::abs(t.T(i, j)) <= 1e-10 * std::max(1.0, spectral_norm(M)));
            for (int i = 0; i < n; ++i) CHECK(t.eigenvalues[static_cast<std::size_t>(i)] == t.T(i, i));
        }
}

TEST_CASE("eigenvalues agree with characteristic polynomial roots") {
    std::mt19937_64 rng(22);
    for (int n = 2; n <= 4; ++n)
        for (int trial = 0; trial < 5; ++trial) {
            const CMatrix M = random_matrix(rng, n);
            const auto ref = reference_eigenvalues(M);
            for (const Complex& e : triangularize(M).eigenvalues) {
                double best = 1e300;
                for (const Complex& r : ref) best = std::min(best, std::abs(e - r));
                CHECK(best <= 1e-8);
            }
        }
}

TEST_CASE("eigenvalues are ordered by real then imaginary part") {
    std::mt19937_64 rng(23);
    const Triangularization t = triangularize(random_matrix(rng, 6));
    for (std::size_t i = 1; i < t.eigenvalues.size(); ++i) {
        const Complex a = t.eigenvalues[i - 1], b = t.eigenvalues[i];
        CHECK((a.real() < b.real() - 1e-9 || (std::abs(a.real() - b.real()) <= 1e-9 && a.imag() <= b.imag() + 1e-9)));
    }
}

TEST_CASE("classify") {
    CHECK(classify(-3.0, 1.0, Mode::CenterStableUnstable) == RateClass::Stable);
    CHECK(classify(Complex(0.0, 1.0), 0.5, Mode::SlowFast) == RateClass::Fast);
    CHECK(classify(0.0, 0.0, Mode::CenterStableUnstable) == RateClass::Center);
    CHECK(classify(2.0, 1.0, Mode::CenterStableUnstable) == RateClass::Unstable);
    CHECK(classify(Complex(0.1, 0.2), 0.5, Mode::SlowFast) == RateClass::Slow);
    std::mt19937_64 rng(24);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int i = 0; i < 100; ++i) {
        const Complex l(u(rng), u(rng));
        CHECK(classify(l, 1.0, Mode::CenterStableUnstable) == classify(std::conj(l), 1.0, Mode::CenterStableUnstable));
    }
}

TEST_CASE("check_gap") {
    const GapCheck a = check_gap(0.0, 1.0, 9);
    CHECK(a.ok);
    CHECK(a.margin == doctest::Approx(1.0));
    const GapCheck b = check_gap(0.1, 1.0, 5);
    CHECK(b.ok);
    CHECK(b.margin == doctest::Approx(0.1));
    CHECK_FALSE(check_gap(0.1, 1.0, 6).ok);
}

TEST_CASE("mode names") {
    CHECK(to_string(Mode::SlowFast) == "slow-fast");
    CHECK(mode_from_string("csu") == Mode::CenterStableUnstable);
    CHECK_THROWS(mode_from_string("sideways"));
}

TEST_CASE("exact triangularization requires triangular input") {
    DenseMatrix<GaussianRational> M(2, 2);
    M(0, 0) = GaussianRational(-1);
    M(0, 1) = GaussianRational(1);
    M(1, 1) = GaussianRational(-2);
    // Distinct eigenvalues are decoupled, so T comes out diagonal.
    const ExactTriangularization t = triangularize_exact(M);
    CHECK(t.T(0, 1) == GaussianRational(0));
    CHECK(t.T(1, 1) == GaussianRational(-2));
    const DenseMatrix<GaussianRational> R = t.S * t.T * t.Sinv;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) CHECK(R(i, j) == M(i, j));
    M(1, 0) = GaussianRational(1);
    CHECK_THROWS(triangularize_exact(M));
}
