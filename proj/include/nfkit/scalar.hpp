#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <complex>
#include <string>
#include <string_view>

#include "nfkit/tolerances.hpp"

namespace nfkit {

using Complex = std::complex<double>;
using Rational = boost::multiprecision::cpp_rational;

// Exact value of a finite double; every double is a dyadic rational.
Rational rational_from_double(double v);
// Exact value of a decimal literal such as "-1.25e-3".
Rational rational_from_decimal(std::string_view text);
double rational_to_double(const Rational& r);
std::string rational_to_string(const Rational& r);

struct GaussianRational {
    Rational re;
    Rational im;

    GaussianRational() = default;
    GaussianRational(int v) : re(v), im(0) {}  // NOLINT(google-explicit-constructor)
    GaussianRational(Rational r, Rational i = Rational(0)) : re(std::move(r)), im(std::move(i)) {}

    GaussianRational& operator+=(const GaussianRational& o) { re += o.re; im += o.im; return *this; }
    GaussianRational& operator-=(const GaussianRational& o) { re -= o.re; im -= o.im; return *this; }
    GaussianRational& operator*=(const GaussianRational& o);
    GaussianRational& operator/=(const GaussianRational& o);

    friend GaussianRational operator+(GaussianRational a, const GaussianRational& b) { return a += b; }
    friend GaussianRational operator-(GaussianRational a, const GaussianRational& b) { return a -= b; }
    friend GaussianRational operator*(GaussianRational a, const GaussianRational& b) { return a *= b; }
    friend GaussianRational operator/(GaussianRational a, const GaussianRational& b) { return a /= b; }
    friend GaussianRational operator-(const GaussianRational& a) { return {-a.re, -a.im}; }
    friend bool operator==(const GaussianRational& a, const GaussianRational& b) {
        return a.re == b.re && a.im == b.im;
    }
    friend bool operator!=(const GaussianRational& a, const GaussianRational& b) { return !(a == b); }
};

template <class S>
struct ScalarTraits;

template <>
struct ScalarTraits<Complex> {
    using Real = double;
    static constexpr bool exact = false;

    static Complex zero() { return {0.0, 0.0}; }
    static Complex one() { return {1.0, 0.0}; }
    static Complex from_int(long v) { return {static_cast<double>(v), 0.0}; }
    static Complex from_complex(Complex c) { return c; }
    static Complex from_real(Real r) { return {r, 0.0}; }
    static Complex to_complex(const Complex& c) { return c; }
    static Real re(const Complex& c) { return c.real(); }
    static Real im(const Complex& c) { return c.imag(); }
    static Real abs2(const Complex& c) { return std::norm(c); }
    static double magnitude(const Complex& c) { return std::abs(c); }
    static Complex conj(const Complex& c) { return std::conj(c); }
    static bool is_zero(const Complex& c) { return c == Complex{}; }
    static bool negligible(const Complex& c, const Tolerances& t) { return std::abs(c) <= t.drop; }
    static bool same_rate(const Complex& a, const Complex& b, const Tolerances& t) {
        return std::abs(a - b) <= t.rate;
    }
    static bool rate_less(const Complex& a, const Complex& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    }
    static Real real_from_double(double v) { return v; }
    static double real_to_double(Real r) { return r; }
    // Slack on threshold comparisons so rates computed with rounding classify stably.
    static Real slack(const Tolerances& t) { return t.rate; }
};

template <>
struct ScalarTraits<GaussianRational> {
    using S = GaussianRational;
    using Real = Rational;
    static constexpr bool exact = true;

    static S zero() { return {}; }
    static S one() { return S(1); }
    static S from_int(long v) { return S(Rational(v)); }
    static S from_complex(Complex c) {
        return {rational_from_double(c.real()), rational_from_double(c.imag())};
    }
    static S from_real(Real r) { return S(std::move(r)); }
    static Complex to_complex(const S& c) { return {rational_to_double(c.re), rational_to_double(c.im)}; }
    static Real re(const S& c) { return c.re; }
    static Real im(const S& c) { return c.im; }
    static Real abs2(const S& c) { return c.re * c.re + c.im * c.im; }
    static double magnitude(const S& c) { return std::abs(to_complex(c)); }
    static S conj(const S& c) { return {c.re, -c.im}; }
    static bool is_zero(const S& c) { return c.re == 0 && c.im == 0; }
    static bool negligible(const S& c, const Tolerances&) { return is_zero(c); }
    static bool same_rate(const S& a, const S& b, const Tolerances&) { return a == b; }
    static bool rate_less(const S& a, const S& b) {
        if (a.re != b.re) return a.re < b.re;
        return a.im < b.im;
    }
    static Real real_from_double(double v) { return rational_from_double(v); }
    static double real_to_double(const Real& r) { return rational_to_double(r); }
    static Real slack(const Tolerances&) { return Real(0); }
};

}  // namespace nfkit
