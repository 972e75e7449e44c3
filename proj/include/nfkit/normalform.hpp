#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "nfkit/series.hpp"
#include "nfkit/spectral.hpp"

namespace nfkit {

struct ConstructOptions {
    int order = 3;           // transform and normal form carry terms up to this order
    double mutilde = 0.0;    // rate threshold separating center from fast
    Mode mode = Mode::CenterStableUnstable;
    Tolerances tol{};
    int max_iter = 0;        // 0 selects 40 * order
    double balance = 1.0;    // basis rescale diag(1, s, s^2, ...) inside each block
};

// x' = A x + f, y' = B y + g, z' = C z + h, optionally divided blockwise by
// (1 + fbar), (1 + gbar), (1 + hbar).
template <class S>
struct SystemSpec {
    Layout layout;
    DenseMatrix<S> A, B, C;
    MultiSeries<S> f, g, h;
    std::optional<MultiSeries<S>> fbar, gbar, hbar;
    ConstructOptions options;

    bool rational() const { return fbar.has_value() || gbar.has_value() || hbar.has_value(); }
};

template <class S>
struct NormalFormResult {
    Layout layout;
    int order = 0;
    Mode mode = Mode::CenterStableUnstable;
    double mutilde = 0.0;
    // Transform u = u(t, X, Y, Z), one series per block.
    MultiSeries<S> x, y, z;
    // Normal form X' = A X + F, Y' = B Y + GY, Z' = C Z + HZ.
    DenseMatrix<S> A, B, C;
    MultiSeries<S> F, GY, HZ;
    std::vector<double> residual_by_order;  // index o holds the largest order-o residual coefficient
    SpectralData spectral;
    std::vector<std::string> warnings;
    int iterations = 0;
};

template <class S>
struct Residuals {
    MultiSeries<S> x, y, z;
};

template <class S>
struct CenterManifold {
    MultiSeries<S> x, y, z;  // parametrization on Y = Z = 0
    MultiSeries<S> Fc;       // reduced nonlinear dynamics X' = A X + Fc
    bool graph_form = false; // x(t, X, 0, 0) == X
};

// Identity transform with zero nonlinear normal form.
template <class S>
NormalFormResult<S> identity_candidate(const SystemSpec<S>& spec, int N);

template <class S>
Residuals<S> residual(const SystemSpec<S>& spec, const NormalFormResult<S>& cand, int N);

template <class S>
NormalFormResult<S> construct(const SystemSpec<S>& spec);

template <class S>
CenterManifold<S> center_manifold(const NormalFormResult<S>& res);

// Human-readable descriptions of terms breaking the block structure of the normal form.
template <class S>
std::vector<std::string> structure_violations(const NormalFormResult<S>& res);

// Terms free of Y and Z factors, in F or in the transform, that carry the anticipation flag.
template <class S>
std::vector<std::string> anticipation_on_center(const NormalFormResult<S>& res);

// Reversal t -> -t with the stable and unstable blocks exchanged.
template <class S>
SystemSpec<S> time_reversed(const SystemSpec<S>& spec);
template <class S>
NormalFormResult<S> time_reversed(const NormalFormResult<S>& res);

// Largest coefficient difference over the transform and normal-form series.
template <class S>
double result_distance(const NormalFormResult<S>& a, const NormalFormResult<S>& b);

NormalFormResult<Complex> to_floating(const NormalFormResult<GaussianRational>& res);
SystemSpec<Complex> to_floating(const SystemSpec<GaussianRational>& spec);

// Validates the spec and fills the spectral data (alpha, beta, admissibility).
template <class S>
SpectralData analyse_spectrum(const SystemSpec<S>& spec);

// The linear-plus-nonlinear right-hand side of the normal form, stacked over all variables.
template <class S>
MultiSeries<S> normal_form_rhs(const NormalFormResult<S>& res, int N);

// True when the matrices are real and every coefficient is closed under conjugation.
bool is_real_system(const SystemSpec<Complex>& spec);

}  // namespace nfkit
