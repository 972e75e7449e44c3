#pragma once

// Numerical verification: fixed-step integration, conjugacy defects and their order
// scaling, emergence toward the center manifold, and trichotomy sampling.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nfkit/domain.hpp"
#include "nfkit/normalform.hpp"

namespace nfkit {

using State = std::vector<double>;
using VectorField = std::function<void(double t, const State& u, State& du)>;
using InsidePredicate = std::function<bool(double t, const State& u)>;

struct Trajectory {
    std::vector<double> times;
    std::vector<State> states;
    std::optional<double> exit_time;    // first grid time outside the supplied region
    std::optional<double> blowup_time;  // first grid time with a non-finite state
};

// Classical fourth-order Runge-Kutta with fixed step h. Stops at the first grid point
// outside `inside` (not stored) or with a non-finite state (not stored).
Trajectory integrate(const VectorField& field, State u0, double t0, double t1, double h,
                     const InsidePredicate& inside = {});

// Flattened series for repeated evaluation at real states. Values are complex; real
// systems keep only the real part.
class CompiledSeries {
public:
    CompiledSeries() = default;
    explicit CompiledSeries(const Series& s);

    int dim() const { return dim_; }
    int vars() const { return vars_; }
    void evaluate(double t, const State& u, std::vector<Complex>& out) const;
    State evaluate_real(double t, const State& u) const;

private:
    struct Factor {
        int var;
        int power;
    };
    struct Monomial {
        std::vector<Factor> factors;
        std::vector<std::pair<int, QP>> coeffs;  // (component, coefficient)
    };
    int dim_ = 0;
    int vars_ = 0;
    std::vector<Monomial> monomials_;
};

// u = T(t, U) with its time derivative and Jacobian.
class CompiledTransform {
public:
    explicit CompiledTransform(const NormalFormResult<Complex>& res);
    int vars() const { return vars_; }
    State map(double t, const State& U) const;
    State time_derivative(double t, const State& U) const;
    // Row-major vars x vars.
    std::vector<double> jacobian(double t, const State& U) const;
    // Newton solve of T(t, U) = u from the initial guess U = u.
    State invert(double t, const State& u, int max_iter = 60) const;

private:
    int vars_ = 0;
    CompiledSeries T_;
    CompiledSeries Tt_;
    std::vector<CompiledSeries> dT_;
};

// Right-hand side of the specified system, denominators included.
VectorField original_field(const SystemSpec<Complex>& spec);
// Right-hand side of the normal form.
VectorField normal_form_field(const NormalFormResult<Complex>& res);

// Euclidean ball |U| <= r in normal-form variables; always true when r is infinite.
InsidePredicate ball_predicate(double r);

// Default step 1e-3 / beta (1e-3 when beta is infinite).
double default_step(const NormalFormResult<Complex>& res);

struct DefectSample {
    double t = 0.0;
    double defect = 0.0;
};

// |du/dt - field(t, u)| along the normal-form trajectory from U0 mapped through the transform.
std::vector<DefectSample> conjugacy_defect(const SystemSpec<Complex>& spec, const NormalFormResult<Complex>& res,
                                           const State& U0, double t0, double t1, double h,
                                           const InsidePredicate& inside = {});

struct OrderScaling {
    std::vector<std::pair<double, double>> samples;  // (epsilon, max defect)
    bool floor = false;                              // every defect at machine level
    double slope = 0.0;
    double fit_residual = 0.0;                       // rms residual of the log-log fit
};

// Least-squares slope of log(max defect) against log(epsilon) for U0 = epsilon * direction.
OrderScaling order_scaling(const SystemSpec<Complex>& spec, const NormalFormResult<Complex>& res,
                           const State& direction, const std::vector<double>& epsilons, double t0, double horizon,
                           double h);

struct EmergenceFit {
    State u0;
    State U0;
    double rate = 0.0;       // fitted decay rate of the distance
    double constant = 0.0;   // C of the bound C exp(-mu (t - t0))
    double radius = 0.0;
    int samples = 0;
    int violations = 0;
    double max_ratio = 0.0;  // max over samples of distance / bound
    std::optional<double> exit_time;
    bool pass = false;
};

// Distance, in original variables, between the trajectory from u0 and its companion on
// the center manifold (same X0, Y0 = Z0 = 0), against C exp(-mu (t - t0)).
EmergenceFit emergence_check(const NormalFormResult<Complex>& res, const State& u0, double mu, double t0,
                             double horizon, double radius, double h);

struct TrichotomyReport {
    int trajectories = 0;
    long pairs = 0;
    int y_violations = 0;
    int z_violations = 0;
    int x_violations = 0;  // X bound, reported apart from the Y and Z counts
    int violations() const { return y_violations + z_violations; }
};

TrichotomyReport trichotomy_check(const NormalFormResult<Complex>& res, int samples, double mu, double radius,
                                  double t0, double t1, double h, std::uint64_t seed);

struct NamedTrajectory {
    std::string name;
    Trajectory trajectory;  // original variables
};

struct VerificationReport {
    OrderScaling scaling;
    std::vector<EmergenceFit> emergence;
    TrichotomyReport trichotomy;
    std::vector<std::string> notes;
    std::vector<NamedTrajectory> trajectories;  // filled when requested
    bool pass = true;
};

struct VerifyOptions {
    double mu = 0.5;
    double t0 = 0.0;
    double t1 = 40.0;
    double h = 0.0;  // 0 selects default_step
    std::uint64_t seed = 1;
    int emergence_runs = 5;
    int trichotomy_samples = 20;
    double scaling_horizon = 2.0;
    bool keep_trajectories = false;
};

// Order scaling along the diagonal direction, emergence from random center-stable starts
// and trichotomy sampling, all inside the certified ball. PASS needs zero emergence and
// trichotomy violations and a slope within 0.5 of p+1 (or defects at the floor).
VerificationReport run_verification(const SystemSpec<Complex>& spec, const NormalFormResult<Complex>& res,
                                    const VerifyOptions& opt);

}  // namespace nfkit
