#pragma once

#include <string>
#include <vector>

#include "nfkit/matrix.hpp"

namespace nfkit {

enum class Mode { CenterStableUnstable, SlowFast };
enum class RateClass { Center, Stable, Unstable, Slow, Fast };

std::string to_string(Mode m);
std::string to_string(RateClass c);
Mode mode_from_string(const std::string& s);

// Center iff |Re λ| <= mutilde (csu mode); slow iff |λ| <= mutilde (slow-fast mode).
RateClass classify(Complex lambda, double mutilde, Mode mode);

struct GapCheck {
    bool ok = false;
    double margin = 0.0;  // beta - (2p - 1) alpha
};

GapCheck check_gap(double alpha, double beta, int p);

// S^{-1} M S = T with T upper triangular. Eigenvalue clusters are decoupled, so T has
// nonzero strictly-upper entries only between equal eigenvalues.
struct Triangularization {
    CMatrix T;
    CMatrix S;
    CMatrix Sinv;
    double condS = 1.0;
    double delta = 0.0;         // largest strictly-upper magnitude of T
    double offdiag_norm = 0.0;  // 2-norm of the strictly-upper part of T
    std::vector<Complex> eigenvalues;
    bool from_schur = false;
};

// balance > 0 rescales the basis by diag(1, s, s^2, ...).
Triangularization triangularize(const CMatrix& M, double balance = 1.0);

// Exact variant: M must already be upper triangular.
struct ExactTriangularization {
    DenseMatrix<GaussianRational> T;
    DenseMatrix<GaussianRational> S;
    DenseMatrix<GaussianRational> Sinv;
};
ExactTriangularization triangularize_exact(const DenseMatrix<GaussianRational>& M);

double condition_number(const CMatrix& M);
double spectral_norm(const CMatrix& M);
CMatrix inverse(const CMatrix& M);

struct SpectralData {
    Triangularization A;
    Triangularization B;
    Triangularization C;
    double alpha = 0.0;
    double beta = 0.0;   // +infinity when there are no stable or unstable variables
    double delta = 0.0;  // largest strictly-upper 2-norm over the three blocks
    double mutilde = 0.0;
    int smoothness = 2;
    Mode mode = Mode::CenterStableUnstable;
};

// Bounds alpha, beta for the given blocks and mode.
void spectral_bounds(SpectralData& sd);

}  // namespace nfkit
