#pragma once

// Quantitative domain bounds for a normal form: gap margin, certified ball radius,
// trichotomy constants and the emergence constant.

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "nfkit/normalform.hpp"

namespace nfkit {

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

// Entries of an n x n (or l x l) matrix of scalar series, row-major.
struct SeriesMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<Series> entries;
    const Series& operator()(int i, int j) const { return entries[static_cast<std::size_t>(i * cols + j)]; }
};

// G with GY = G(t,U) Y: each term goes to the column of its first Y factor.
SeriesMatrix extract_G(const NormalFormResult<Complex>& res);
// H with HZ = H(t,U) Z, likewise keyed on the first Z factor.
SeriesMatrix extract_H(const NormalFormResult<Complex>& res);

// sup over |U| <= r, t in [t0, t1] of |g|, as a coefficient sum. g is scalar.
double coefficient_bound(const Series& g, double r, double t0, double t1);
// Sum over variables of coefficient_bound of the partial derivative.
double gradient_bound(const Series& g, double r, double t0, double t1);
// sqrt(sum of squared entry bounds); dominates the 2-norm.
double frobenius_bound(const SeriesMatrix& M, double r, double t0, double t1);
// sum_ij bound(g_ij) * gradient_bound(g_ij).
double gprime_max(const SeriesMatrix& M, double r, double t0, double t1);

double gap_margin(const NormalFormResult<Complex>& res, double mu, double radius, double t0, double t1);

// Largest r with r <= (beta - mu - delta)^2 / (2 cond^2 G'max(r)), for G with condQ and H
// with condR; kUnbounded when G and H vanish. Bisection to 1e-6 relative.
double ball_radius(const NormalFormResult<Complex>& res, double mu, double t0, double t1);

// Largest r with gap_margin >= 0, by bisection; kUnbounded when the margin never closes.
double certified_radius(const NormalFormResult<Complex>& res, double mu, double t0, double t1);

struct TrichotomyConstants {
    double condP = 1.0;
    double condQ = 1.0;
    double condR = 1.0;
};
TrichotomyConstants trichotomy_constants(const NormalFormResult<Complex>& res);

// Bound on the 2-norm of d(x,y,z)/dY over the ball and interval.
double transform_lipschitz(const NormalFormResult<Complex>& res, double radius, double t0, double t1);
// condQ * |Y0| * Lip.
double emergence_constant(const NormalFormResult<Complex>& res, double y0norm, double radius, double t0, double t1);

struct MarginSample {
    double radius = 0.0;
    double g_bound = 0.0;
    double h_bound = 0.0;
    double margin = 0.0;
};

struct JacobianDiagnostic {
    int samples = 0;
    double min_det = 0.0;
    double max_det = 0.0;
    bool sign_constant = true;
};

// Uniform point in the ball |u| <= r of dimension d, or on its boundary sphere.
std::vector<double> sample_ball(std::mt19937_64& rng, int d, double r, bool on_sphere = false);

// Largest sampled 2-norm of M(t,U) over random points with |U| <= r. Diagnostic only.
double sampled_matrix_norm(const SeriesMatrix& M, double r, double t0, double t1, int samples, std::uint64_t seed);

// Sign of det d(x,y,z)/d(X,Y,Z) on random points of the sphere |U| = r.
JacobianDiagnostic jacobian_diagnostic(const NormalFormResult<Complex>& res, double r, double t0, double t1,
                                       int samples, std::uint64_t seed);

struct DomainEstimate {
    double mu = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
    double delta = 0.0;
    double condP = 1.0;
    double condQ = 1.0;
    double condR = 1.0;
    double gprime_max = 0.0;         // at the reported radius
    double radius = 0.0;             // kUnbounded when G and H vanish
    double certified_radius = 0.0;   // largest ball with nonnegative gap margin
    double margin = 0.0;             // gap margin at the reported radius
    double t0 = 0.0;
    double t1 = 0.0;
    std::vector<MarginSample> margin_samples;
    double sampled_G_norm = 0.0;
    double sampled_H_norm = 0.0;
    JacobianDiagnostic jacobian;
};

// Requires alpha < mu. An infinite t1 is accepted only for non-growing coefficients.
DomainEstimate estimate_domain(const NormalFormResult<Complex>& res, double mu, double t0, double t1,
                               std::uint64_t seed = 1);

}  // namespace nfkit
