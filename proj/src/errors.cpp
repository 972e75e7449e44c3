#include "nfkit/errors.hpp"

#include <sstream>

#include "nfkit/tolerances.hpp"

namespace nfkit {

namespace {

std::string format_complex(std::complex<double> z) {
    std::ostringstream os;
    os.precision(12);
    os << z.real() << (z.imag() < 0 ? "-" : "+") << std::abs(z.imag()) << "i";
    return os.str();
}

thread_local Tolerances g_tolerances;

}  // namespace

ResonantError::ResonantError(std::complex<double> r, std::complex<double> m)
    : Error("resonant rate " + format_complex(r) + " against mu " + format_complex(m)), rate(r), mu(m) {}

PowerCapError::PowerCapError(int power, int cap)
    : Error("power of t " + std::to_string(power) + " exceeds cap " + std::to_string(cap)) {}

ParseError::ParseError(const std::string& what, int l, int c)
    : Error(what + " at line " + std::to_string(l) + ", column " + std::to_string(c)),
      message(what),
      line(l),
      column(c) {}

const Tolerances& tolerances() { return g_tolerances; }

ScopedTolerances::ScopedTolerances(const Tolerances& t) : saved_(g_tolerances) { g_tolerances = t; }

ScopedTolerances::~ScopedTolerances() { g_tolerances = saved_; }

}  // namespace nfkit
