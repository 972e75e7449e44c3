#pragma once

// Shared fixtures: bundled specs and a generator of random admissible real systems.

#include <cmath>
#include <random>
#include <sstream>
#include <initializer_list>
#include <string>

#include "nfkit/specfile.hpp"

#ifndef NFKIT_SPEC_DIR
#define NFKIT_SPEC_DIR "specs"
#endif

namespace nfkit::testing {

inline MultiIndex mi(std::initializer_list<int> e) {
    std::vector<std::int16_t> v;
    for (int k : e) v.push_back(static_cast<std::int16_t>(k));
    return MultiIndex(v);
}

inline QP cst(Complex c) { return QP::constant(c); }

inline SpecFile bundled(const std::string& name) { return load_specfile(std::string(NFKIT_SPEC_DIR) + "/" + name); }

inline SystemSpec<Complex> bundled_system(const std::string& name, int order) {
    SpecFile f = bundled(name);
    f.options.order = order;
    return build_system<Complex>(f);
}

struct RandomShape {
    int max_m = 2;
    int max_n = 2;
    int max_l = 2;
    int min_n = 0;
    bool time_dependent = true;
};

inline double pick(std::mt19937_64& rng, double lo, double hi) {
    // Two decimals keep the generated text exact under round-trips.
    const double v = std::uniform_real_distribution<double>(lo, hi)(rng);
    return std::round(v * 100.0) / 100.0;
}

inline int pick_int(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// Real block with eigenvalue real parts in [lo, hi]: diagonal, triangular or a rotation pair.
inline std::vector<Complex> random_block(std::mt19937_64& rng, int k, double lo, double hi) {
    std::vector<Complex> M(static_cast<std::size_t>(k * k), 0.0);
    if (k == 0) return M;
    const double a = pick(rng, lo, hi);
    if (k == 1) {
        M[0] = a;
        return M;
    }
    switch (pick_int(rng, 0, 2)) {
        case 0:
            M[0] = a;
            M[3] = pick(rng, lo, hi);
            break;
        case 1:
            M[0] = a;
            M[1] = pick(rng, -1.0, 1.0);
            M[3] = a == 0.0 ? 0.0 : pick(rng, lo, hi);
            break;
        default: {
            const double w = pick(rng, 0.5, 1.5);
            M[0] = a;
            M[1] = -w;
            M[2] = w;
            M[3] = a;
        }
    }
    return M;
}

// Random real system with zero center rates, stable rates in [-2, -1] and unstable rates
// in [1, 2], so every order is admissible with mutilde = 0.
inline SpecFile random_specfile(std::mt19937_64& rng, int order, const RandomShape& shape = {}) {
    SpecFile f;
    f.name = "random";
    const int m = pick_int(rng, 1, shape.max_m);
    const int n = pick_int(rng, shape.min_n, shape.max_n);
    const int l = pick_int(rng, 0, shape.max_l);
    f.blocks = Layout{m, n, l};
    f.A = random_block(rng, m, 0.0, 0.0);
    f.B = random_block(rng, n, -2.0, -1.0);
    f.C = random_block(rng, l, 1.0, 2.0);
    std::vector<std::string> names;
    for (int i = 1; i <= m; ++i) names.push_back("x" + std::to_string(i));
    for (int i = 1; i <= n; ++i) names.push_back("y" + std::to_string(i));
    for (int i = 1; i <= l; ++i) names.push_back("z" + std::to_string(i));
    const int sizes[3] = {m, n, l};
    for (int b = 0; b < 3; ++b) {
        f.equations[static_cast<std::size_t>(b)].resize(static_cast<std::size_t>(sizes[b]));
        for (auto& comp : f.equations[static_cast<std::size_t>(b)]) {
            const int nterms = pick_int(rng, 1, 3);
            for (int k = 0; k < nterms; ++k) {
                std::ostringstream os;
                double c = pick(rng, -1.0, 1.0);
                if (c == 0.0) c = 0.5;
                os << c;
                if (shape.time_dependent && pick_int(rng, 0, 3) == 0) os << "*cos(" << pick(rng, 0.5, 2.0) << "*t)";
                const int degree = pick_int(rng, 2, 3);
                for (int d = 0; d < degree; ++d)
                    os << "*" << names[static_cast<std::size_t>(pick_int(rng, 0, static_cast<int>(names.size()) - 1))];
                comp.push_back(os.str());
            }
        }
    }
    f.options.order = order;
    return f;
}

inline SystemSpec<Complex> random_system(std::mt19937_64& rng, int order, const RandomShape& shape = {}) {
    return build_system<Complex>(random_specfile(rng, order, shape));
}

}  // namespace nfkit::testing
