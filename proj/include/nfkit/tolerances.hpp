#pragma once

namespace nfkit {

struct Tolerances {
    double drop = 1e-14;      // coefficients at or below this magnitude are removed
    double rate = 1e-9;       // rates closer than this are one rate
    int max_power = 16;       // largest admissible power of t
    double residual = 1e-10;  // residual coefficients at or below this count as zero
};

// Tolerances in force on the calling thread.
const Tolerances& tolerances();

// Installs a tolerance set for the lifetime of the guard, on the calling thread only.
class ScopedTolerances {
public:
    explicit ScopedTolerances(const Tolerances& t);
    ~ScopedTolerances();
    ScopedTolerances(const ScopedTolerances&) = delete;
    ScopedTolerances& operator=(const ScopedTolerances&) = delete;

private:
    Tolerances saved_;
};

}  // namespace nfkit
