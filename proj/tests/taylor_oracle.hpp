#pragma once

// Independent oracle for the slow-parabola example: dense bivariate Taylor arithmetic on
// coefficient triangles c[i][j] of X^i Y^j with i + j <= N. Shares no code with the library.

#include <cmath>
#include <vector>

namespace oracle {

struct Bivariate {
    int N = 0;
    std::vector<double> c;  // (N+1) x (N+1), entries with i + j > N stay zero

    explicit Bivariate(int n) : N(n), c(static_cast<std::size_t>((n + 1) * (n + 1)), 0.0) {}
    double& at(int i, int j) { return c[static_cast<std::size_t>(i * (N + 1) + j)]; }
    double at(int i, int j) const { return c[static_cast<std::size_t>(i * (N + 1) + j)]; }

    static Bivariate constant(int n, double v) {
        Bivariate b(n);
        b.at(0, 0) = v;
        return b;
    }
    static Bivariate monomial(int n, int i, int j, double v = 1.0) {
        Bivariate b(n);
        if (i + j <= n) b.at(i, j) = v;
        return b;
    }

    friend Bivariate operator+(Bivariate a, const Bivariate& b) {
        for (std::size_t k = 0; k < a.c.size(); ++k) a.c[k] += b.c[k];
        return a;
    }
    friend Bivariate operator-(Bivariate a, const Bivariate& b) {
        for (std::size_t k = 0; k < a.c.size(); ++k) a.c[k] -= b.c[k];
        return a;
    }
    friend Bivariate operator*(double s, Bivariate a) {
        for (double& v : a.c) v *= s;
        return a;
    }
    friend Bivariate operator*(const Bivariate& a, const Bivariate& b) {
        Bivariate r(a.N);
        for (int i = 0; i <= a.N; ++i)
            for (int j = 0; i + j <= a.N; ++j) {
                if (a.at(i, j) == 0.0) continue;
                for (int k = 0; i + k <= a.N; ++k)
                    for (int l = 0; i + j + k + l <= a.N; ++l) r.at(i + k, j + l) += a.at(i, j) * b.at(k, l);
            }
        return r;
    }
};

// sum_k w_k u^k for u without constant term.
inline Bivariate power_series(const Bivariate& u, const std::vector<double>& w) {
    Bivariate r = Bivariate::constant(u.N, 0.0), p = Bivariate::constant(u.N, 1.0);
    for (std::size_t k = 0; k < w.size() && static_cast<int>(k) <= u.N; ++k) {
        r = r + w[k] * p;
        p = p * u;
    }
    return r;
}

// (1 + u)^a by the binomial series.
inline Bivariate binomial(const Bivariate& u, double a) {
    std::vector<double> w{1.0};
    for (int k = 1; k <= u.N; ++k) w.push_back(w.back() * (a - (k - 1)) / k);
    return power_series(u, w);
}

struct SlowParabola {
    Bivariate x, y, gy;
};

// x = X / sqrt(1 - 2Y/(1+2X^2)), y = X^2 + Y / (1 - 2Y/(1+2X^2)),
// Y' = -Y [1/(1+2X^2) + 4X^2] so GY = -Y [1/(1+2X^2) - 1 + 4X^2].
inline SlowParabola slow_parabola(int N) {
    const Bivariate X = Bivariate::monomial(N, 1, 0), Y = Bivariate::monomial(N, 0, 1);
    const Bivariate inv = binomial(2.0 * (X * X), -1.0);
    const Bivariate u = -2.0 * (Y * inv);
    SlowParabola s{Bivariate(N), Bivariate(N), Bivariate(N)};
    s.x = X * binomial(u, -0.5);
    s.y = X * X + Y * binomial(u, -1.0);
    s.gy = -1.0 * (Y * (inv - Bivariate::constant(N, 1.0) + 4.0 * (X * X)));
    return s;
}

}  // namespace oracle
