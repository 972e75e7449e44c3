#pragma once

// Quasipolynomial time coefficients: finite sums of c * t^k * exp(lambda * t).

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "nfkit/errors.hpp"
#include "nfkit/scalar.hpp"
#include "nfkit/tolerances.hpp"

namespace nfkit {

enum ProvenanceFlag : unsigned {
    kPastBranch = 1u,
    kFutureBranch = 2u,
    kBoundedOscillatory = 4u,
};

template <class S>
struct QpTerm {
    S rate;
    int power = 0;
    S coeff;
};

template <class S>
class QuasiPoly {
public:
    using Traits = ScalarTraits<S>;

    QuasiPoly() = default;

    static QuasiPoly constant(const S& c) { return monomial(c, Traits::zero(), 0); }

    // c * t^power * exp(rate * t)
    static QuasiPoly monomial(const S& c, const S& rate, int power) {
        QuasiPoly q;
        const Tolerances& tol = tolerances();
        q.accumulate(c, rate, power, tol);
        q.prune(tol);
        return q;
    }

    const std::vector<QpTerm<S>>& terms() const { return terms_; }
    unsigned flags() const { return flags_; }
    bool is_zero() const { return terms_.empty(); }
    std::size_t size() const { return terms_.size(); }

    // True when the value does not depend on t.
    bool is_constant() const {
        return terms_.empty() ||
               (terms_.size() == 1 && terms_[0].power == 0 && Traits::is_zero(terms_[0].rate));
    }

    QuasiPoly with_flags(unsigned extra) const {
        QuasiPoly q = *this;
        q.flags_ |= extra;
        return q;
    }

    // Sum of coefficient magnitudes; equals |a(0)| bound and is the norm used on residuals.
    double norm1() const {
        double s = 0.0;
        for (const auto& t : terms_) s += Traits::magnitude(t.coeff);
        return s;
    }

    Complex evaluate(double t) const {
        Complex acc{};
        for (const auto& term : terms_) {
            Complex c = Traits::to_complex(term.coeff);
            Complex r = Traits::to_complex(term.rate);
            Complex v = c * std::exp(r * t);
            if (term.power > 0) v *= std::pow(t, term.power);
            acc += v;
        }
        return acc;
    }

    QuasiPoly& operator+=(const QuasiPoly& o) {
        const Tolerances& tol = tolerances();
        for (const auto& t : o.terms_) accumulate(t.coeff, t.rate, t.power, tol);
        flags_ |= o.flags_;
        prune(tol);
        return *this;
    }

    QuasiPoly& operator-=(const QuasiPoly& o) {
        const Tolerances& tol = tolerances();
        for (const auto& t : o.terms_) accumulate(-t.coeff, t.rate, t.power, tol);
        flags_ |= o.flags_;
        prune(tol);
        return *this;
    }

    friend QuasiPoly operator+(QuasiPoly a, const QuasiPoly& b) { return a += b; }
    friend QuasiPoly operator-(QuasiPoly a, const QuasiPoly& b) { return a -= b; }

    friend QuasiPoly operator-(const QuasiPoly& a) {
        QuasiPoly q = a;
        for (auto& t : q.terms_) t.coeff = -t.coeff;
        return q;
    }

    friend QuasiPoly operator*(const QuasiPoly& a, const S& s) {
        QuasiPoly q;
        q.flags_ = a.flags_;
        const Tolerances& tol = tolerances();
        for (const auto& t : a.terms_) q.accumulate(t.coeff * s, t.rate, t.power, tol);
        q.prune(tol);
        return q;
    }
    friend QuasiPoly operator*(const S& s, const QuasiPoly& a) { return a * s; }

    friend QuasiPoly operator*(const QuasiPoly& a, const QuasiPoly& b) {
        QuasiPoly q;
        q.flags_ = a.flags_ | b.flags_;
        const Tolerances& tol = tolerances();
        for (const auto& x : a.terms_)
            for (const auto& y : b.terms_)
                q.accumulate(x.coeff * y.coeff, x.rate + y.rate, x.power + y.power, tol);
        q.prune(tol);
        return q;
    }

    QuasiPoly& operator*=(const QuasiPoly& o) { return *this = *this * o; }

    // Raw accumulation used by builders that prune once at the end.
    void accumulate(const S& c, S rate, int power, const Tolerances& tol) {
        if (power < 0) throw Error("negative power of t");
        if (power > tol.max_power) throw PowerCapError(power, tol.max_power);
        for (const auto& t : terms_) {
            if (Traits::same_rate(t.rate, rate, tol)) {
                rate = t.rate;
                break;
            }
        }
        auto less = [](const QpTerm<S>& t, const S& r, int k) {
            if (Traits::rate_less(t.rate, r)) return true;
            if (Traits::rate_less(r, t.rate)) return false;
            return t.power < k;
        };
        auto it = terms_.begin();
        while (it != terms_.end() && less(*it, rate, power)) ++it;
        if (it != terms_.end() && it->rate == rate && it->power == power) {
            it->coeff += c;
        } else {
            terms_.insert(it, QpTerm<S>{rate, power, c});
        }
    }

    void prune(const Tolerances& tol) {
        terms_.erase(std::remove_if(terms_.begin(), terms_.end(),
                                    [&](const QpTerm<S>& t) { return Traits::negligible(t.coeff, tol); }),
                     terms_.end());
    }

    void add_flags(unsigned f) { flags_ |= f; }

private:
    std::vector<QpTerm<S>> terms_;
    unsigned flags_ = 0;
};

template <class S>
QuasiPoly<S> qp_add(const QuasiPoly<S>& a, const QuasiPoly<S>& b) {
    return a + b;
}

template <class S>
QuasiPoly<S> qp_mul(const QuasiPoly<S>& a, const QuasiPoly<S>& b) {
    return a * b;
}

template <class S>
QuasiPoly<S> qp_ddt(const QuasiPoly<S>& a) {
    using T = ScalarTraits<S>;
    QuasiPoly<S> q;
    q.add_flags(a.flags());
    const Tolerances& tol = tolerances();
    for (const auto& t : a.terms()) {
        q.accumulate(t.coeff * t.rate, t.rate, t.power, tol);
        if (t.power > 0) q.accumulate(t.coeff * T::from_int(t.power), t.rate, t.power - 1, tol);
    }
    q.prune(tol);
    return q;
}

// Branch flag that a solve of  z' - mu z = a  records, by the real part of mu.
template <class S>
unsigned branch_flag(const S& mu, double mutilde) {
    using T = ScalarTraits<S>;
    const auto thr = T::real_from_double(mutilde) + T::slack(tolerances());
    if (T::re(mu) > thr) return kFutureBranch;
    if (T::re(mu) < -thr) return kPastBranch;
    return kBoundedOscillatory;
}

// Unique quasipolynomial z with z' - mu z = a and no exp(mu t) component.
template <class S>
QuasiPoly<S> qp_particular(const S& mu, const QuasiPoly<S>& a, double mutilde = 0.0) {
    using T = ScalarTraits<S>;
    const Tolerances& tol = tolerances();
    for (const auto& t : a.terms())
        if (T::same_rate(t.rate, mu, tol)) throw ResonantError(T::to_complex(t.rate), T::to_complex(mu));
    QuasiPoly<S> z;
    z.add_flags(a.flags() | branch_flag(mu, mutilde));
    for (const auto& t : a.terms()) {
        const S d = t.rate - mu;
        S b = t.coeff / d;
        z.accumulate(b, t.rate, t.power, tol);
        for (int j = t.power - 1; j >= 0; --j) {
            b = -(T::from_int(j + 1) * b) / d;
            z.accumulate(b, t.rate, j, tol);
        }
    }
    z.prune(tol);
    return z;
}

// a(-t), with the memory and anticipation flags exchanged.
template <class S>
QuasiPoly<S> qp_time_reversed(const QuasiPoly<S>& a) {
    QuasiPoly<S> q;
    unsigned f = a.flags() & kBoundedOscillatory;
    if (a.flags() & kPastBranch) f |= kFutureBranch;
    if (a.flags() & kFutureBranch) f |= kPastBranch;
    q.add_flags(f);
    const Tolerances& tol = tolerances();
    for (const auto& t : a.terms()) {
        S c = (t.power % 2 == 0) ? t.coeff : -t.coeff;
        q.accumulate(c, -t.rate, t.power, tol);
    }
    q.prune(tol);
    return q;
}

// Complex conjugate function: conj(a(t)) for real t.
template <class S>
QuasiPoly<S> qp_conj(const QuasiPoly<S>& a) {
    using T = ScalarTraits<S>;
    QuasiPoly<S> q;
    q.add_flags(a.flags());
    const Tolerances& tol = tolerances();
    for (const auto& t : a.terms()) q.accumulate(T::conj(t.coeff), T::conj(t.rate), t.power, tol);
    q.prune(tol);
    return q;
}

// Re a(t) for real t, as a quasipolynomial.
template <class S>
QuasiPoly<S> qp_real_part(const QuasiPoly<S>& a) {
    using T = ScalarTraits<S>;
    QuasiPoly<S> s = a + qp_conj(a);
    return s * (T::one() / T::from_int(2));
}

template <class To, class From>
QuasiPoly<To> qp_convert(const QuasiPoly<From>& a) {
    QuasiPoly<To> q;
    q.add_flags(a.flags());
    const Tolerances& tol = tolerances();
    for (const auto& t : a.terms())
        q.accumulate(ScalarTraits<To>::from_complex(ScalarTraits<From>::to_complex(t.coeff)),
                     ScalarTraits<To>::from_complex(ScalarTraits<From>::to_complex(t.rate)), t.power, tol);
    q.prune(tol);
    return q;
}

// Upper bound on sup |a(t)| over [t0, t1]; t1 may be +infinity when every term is a
// non-growing constant-power exponential.
double qp_sup(const QuasiPoly<Complex>& a, double t0, double t1);

// Largest |a(t)| over an n-point uniform grid on [t0, t1].
double qp_sampled_max(const QuasiPoly<Complex>& a, double t0, double t1, int n = 1024);

using QP = QuasiPoly<Complex>;
using ExactQP = QuasiPoly<GaussianRational>;

}  // namespace nfkit
