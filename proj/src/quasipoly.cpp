#include "nfkit/quasipoly.hpp"

#include <algorithm>
#include <cmath>

namespace nfkit {

double qp_sampled_max(const QuasiPoly<Complex>& a, double t0, double t1, int n) {
    if (a.is_zero()) return 0.0;
    double best = 0.0;
    if (n < 2 || t1 == t0) return std::abs(a.evaluate(t0));
    for (int i = 0; i < n; ++i) {
        double t = t0 + (t1 - t0) * static_cast<double>(i) / (n - 1);
        best = std::max(best, std::abs(a.evaluate(t)));
    }
    return best;
}

double qp_sup(const QuasiPoly<Complex>& a, double t0, double t1) {
    if (!(t0 <= t1)) throw Error("qp_sup needs t0 <= t1");
    if (a.is_zero()) return 0.0;
    if (std::isinf(t1)) {
        double s = 0.0;
        for (const auto& t : a.terms()) {
            if (t.power != 0 || t.rate.real() > 0.0)
                throw Error("unbounded-time supremum needs non-growing terms without powers of t");
            s += std::abs(t.coeff) * std::exp(t.rate.real() * t0);
        }
        return s;
    }
    if (!std::isfinite(t0)) throw Error("qp_sup needs a finite start time");
    const double tm = std::max(std::abs(t0), std::abs(t1));
    double analytic = 0.0;
    for (const auto& t : a.terms()) {
        double e = std::max(std::exp(t.rate.real() * t0), std::exp(t.rate.real() * t1));
        analytic += std::abs(t.coeff) * std::pow(tm, t.power) * e;
    }
    if (a.is_constant()) return analytic;
    double sampled = qp_sampled_max(a, t0, t1, 1024);
    return std::max(sampled, std::min(analytic, 1.1 * sampled));
}

}  // namespace nfkit
