#include "nfkit/scalar.hpp"

#include <cctype>
#include <cmath>
#include <limits>
#include <sstream>

#include "nfkit/errors.hpp"

namespace nfkit {

using boost::multiprecision::cpp_int;

Rational rational_from_double(double v) {
    if (!std::isfinite(v)) throw ValidationError("non-finite value has no rational form");
    if (v == 0.0) return Rational(0);
    int e = 0;
    double m = std::frexp(v, &e);  // v = m * 2^e, 0.5 <= |m| < 1
    auto mant = static_cast<long long>(std::ldexp(m, 53));
    e -= 53;
    cpp_int num = mant;
    cpp_int den = 1;
    if (e >= 0)
        num <<= e;
    else
        den <<= -e;
    return Rational(num, den);
}

Rational rational_from_decimal(std::string_view text) {
    std::size_t i = 0;
    bool neg = false;
    if (i < text.size() && (text[i] == '+' || text[i] == '-')) neg = text[i++] == '-';
    cpp_int num = 0;
    int frac_digits = 0;
    bool any = false;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
        num = num * 10 + (text[i++] - '0');
        any = true;
    }
    if (i < text.size() && text[i] == '.') {
        ++i;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
            num = num * 10 + (text[i++] - '0');
            ++frac_digits;
            any = true;
        }
    }
    if (!any) throw ValidationError("malformed decimal literal '" + std::string(text) + "'");
    long exp10 = 0;
    if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
        ++i;
        bool eneg = false;
        if (i < text.size() && (text[i] == '+' || text[i] == '-')) eneg = text[i++] == '-';
        bool edig = false;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
            exp10 = exp10 * 10 + (text[i++] - '0');
            edig = true;
            if (exp10 > 4000) throw ValidationError("decimal exponent out of range");
        }
        if (!edig) throw ValidationError("malformed decimal exponent in '" + std::string(text) + "'");
        if (eneg) exp10 = -exp10;
    }
    if (i != text.size()) throw ValidationError("trailing characters in decimal literal '" + std::string(text) + "'");
    exp10 -= frac_digits;
    cpp_int scale = 1;
    for (long k = 0; k < std::labs(exp10); ++k) scale *= 10;
    Rational r = exp10 >= 0 ? Rational(num * scale) : Rational(num, scale);
    return neg ? Rational(-r) : r;
}

double rational_to_double(const Rational& r) { return r.convert_to<double>(); }

std::string rational_to_string(const Rational& r) {
    std::ostringstream os;
    os << numerator(r);
    if (denominator(r) != 1) os << '/' << denominator(r);
    return os.str();
}

GaussianRational& GaussianRational::operator*=(const GaussianRational& o) {
    Rational r = re * o.re - im * o.im;
    Rational i = re * o.im + im * o.re;
    re = std::move(r);
    im = std::move(i);
    return *this;
}

GaussianRational& GaussianRational::operator/=(const GaussianRational& o) {
    Rational d = o.re * o.re + o.im * o.im;
    if (d == 0) throw NumericalError("division by exact zero");
    Rational r = (re * o.re + im * o.im) / d;
    Rational i = (im * o.re - re * o.im) / d;
    re = std::move(r);
    im = std::move(i);
    return *this;
}

}  // namespace nfkit
