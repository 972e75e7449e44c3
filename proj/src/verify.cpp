#include "nfkit/verify.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace nfkit {

namespace {

double norm2(const State& u) {
    double s = 0.0;
    for (double v : u) s += v * v;
    return std::sqrt(s);
}

double block_norm(const State& u, int begin, int count) {
    double s = 0.0;
    for (int i = begin; i < begin + count; ++i) s += u[static_cast<std::size_t>(i)] * u[static_cast<std::size_t>(i)];
    return std::sqrt(s);
}

bool finite_state(const State& u) {
    return std::all_of(u.begin(), u.end(), [](double v) { return std::isfinite(v); });
}

struct LineFit {
    double slope = 0.0;
    double rms = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    LineFit f;
    const double den = n * sxx - sx * sx;
    if (den == 0.0) throw NumericalError("degenerate least-squares fit");
    f.slope = (n * sxy - sx * sy) / den;
    const double icpt = (sy - f.slope * sx) / n;
    double r2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (icpt + f.slope * x[i]);
        r2 += r * r;
    }
    f.rms = std::sqrt(r2 / n);
    return f;
}

MultiSeries<Complex> stacked_transform(const NormalFormResult<Complex>& res) {
    return ms_stack<Complex>(res.layout, {&res.x, &res.y, &res.z}, kUntruncated);
}

}  // namespace

Trajectory integrate(const VectorField& field, State u0, double t0, double t1, double h,
                     const InsidePredicate& inside) {
    if (!(h > 0.0)) throw ValidationError("integration step must be positive");
    if (!(t1 >= t0)) throw ValidationError("integration interval needs t1 >= t0");
    Trajectory tr;
    const std::size_t d = u0.size();
    State k1(d), k2(d), k3(d), k4(d), tmp(d);
    const long steps = std::lround((t1 - t0) / h);
    State u = std::move(u0);
    if (!finite_state(u)) {
        tr.blowup_time = t0;
        return tr;
    }
    if (inside && !inside(t0, u)) {
        tr.exit_time = t0;
        return tr;
    }
    tr.times.reserve(static_cast<std::size_t>(steps + 1));
    tr.states.reserve(static_cast<std::size_t>(steps + 1));
    tr.times.push_back(t0);
    tr.states.push_back(u);
    for (long s = 0; s < steps; ++s) {
        const double t = t0 + static_cast<double>(s) * h;
        field(t, u, k1);
        for (std::size_t i = 0; i < d; ++i) tmp[i] = u[i] + 0.5 * h * k1[i];
        field(t + 0.5 * h, tmp, k2);
        for (std::size_t i = 0; i < d; ++i) tmp[i] = u[i] + 0.5 * h * k2[i];
        field(t + 0.5 * h, tmp, k3);
        for (std::size_t i = 0; i < d; ++i) tmp[i] = u[i] + h * k3[i];
        field(t + h, tmp, k4);
        for (std::size_t i = 0; i < d; ++i) u[i] += h * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]) / 6.0;
        const double tn = t0 + static_cast<double>(s + 1) * h;
        if (!finite_state(u)) {
            tr.blowup_time = tn;
            break;
        }
        if (inside && !inside(tn, u)) {
            tr.exit_time = tn;
            break;
        }
        tr.times.push_back(tn);
        tr.states.push_back(u);
    }
    return tr;
}

CompiledSeries::CompiledSeries(const Series& s) : dim_(s.dim()), vars_(s.vars()) {
    for (const auto& [idx, cs] : s.terms()) {
        Monomial m;
        for (int v = 0; v < idx.size(); ++v)
            if (idx[v] > 0) m.factors.push_back({v, idx[v]});
        for (int i = 0; i < dim_; ++i)
            if (!cs[static_cast<std::size_t>(i)].is_zero()) m.coeffs.emplace_back(i, cs[static_cast<std::size_t>(i)]);
        monomials_.push_back(std::move(m));
    }
}

void CompiledSeries::evaluate(double t, const State& u, std::vector<Complex>& out) const {
    out.assign(static_cast<std::size_t>(dim_), Complex{});
    for (const auto& m : monomials_) {
        double mono = 1.0;
        for (const auto& f : m.factors) {
            const double x = u[static_cast<std::size_t>(f.var)];
            for (int k = 0; k < f.power; ++k) mono *= x;
        }
        if (mono == 0.0) continue;
        for (const auto& [i, c] : m.coeffs) out[static_cast<std::size_t>(i)] += c.evaluate(t) * mono;
    }
}

State CompiledSeries::evaluate_real(double t, const State& u) const {
    std::vector<Complex> c;
    evaluate(t, u, c);
    State r(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) r[i] = c[i].real();
    return r;
}

CompiledTransform::CompiledTransform(const NormalFormResult<Complex>& res) : vars_(res.layout.vars()) {
    const MultiSeries<Complex> T = stacked_transform(res);
    T_ = CompiledSeries(T);
    Tt_ = CompiledSeries(ms_ddt(T));
    for (int v = 0; v < vars_; ++v) dT_.emplace_back(ms_derivative(T, v));
}

State CompiledTransform::map(double t, const State& U) const { return T_.evaluate_real(t, U); }

State CompiledTransform::time_derivative(double t, const State& U) const { return Tt_.evaluate_real(t, U); }

std::vector<double> CompiledTransform::jacobian(double t, const State& U) const {
    const auto V = static_cast<std::size_t>(vars_);
    std::vector<double> J(V * V);
    for (std::size_t v = 0; v < V; ++v) {
        const State col = dT_[v].evaluate_real(t, U);
        for (std::size_t i = 0; i < V; ++i) J[i * V + v] = col[i];
    }
    return J;
}

State CompiledTransform::invert(double t, const State& u, int max_iter) const {
    State U = u;
    const double scale = 1.0 + norm2(u);
    for (int it = 0; it < max_iter; ++it) {
        const State r = map(t, U);
        Eigen::VectorXd res(vars_);
        for (int i = 0; i < vars_; ++i) res(i) = u[static_cast<std::size_t>(i)] - r[static_cast<std::size_t>(i)];
        if (res.norm() <= 1e-14 * scale) return U;
        const auto J = jacobian(t, U);
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> Jm(J.data(), vars_,
                                                                                                    vars_);
        const Eigen::VectorXd step = Jm.fullPivLu().solve(res);
        if (!step.allFinite()) break;
        for (int i = 0; i < vars_; ++i) U[static_cast<std::size_t>(i)] += step(i);
        if (step.norm() <= 1e-15 * scale) return U;
    }
    const State r = map(t, U);
    double err = 0.0;
    for (int i = 0; i < vars_; ++i) err = std::max(err, std::abs(u[static_cast<std::size_t>(i)] - r[static_cast<std::size_t>(i)]));
    if (err <= 1e-10 * scale) return U;
    throw NumericalError("Newton inversion of the transform did not converge");
}

VectorField original_field(const SystemSpec<Complex>& spec) {
    struct Block {
        CMatrix M;
        int begin;
        CompiledSeries f;
        std::optional<CompiledSeries> den;
    };
    const Layout L = spec.layout;
    auto blocks = std::make_shared<std::vector<Block>>();
    auto make = [&](const CMatrix& M, int begin, const Series& f, const std::optional<Series>& den) {
        Block b{M, begin, CompiledSeries(f), std::nullopt};
        if (den) b.den = CompiledSeries(*den);
        blocks->push_back(std::move(b));
    };
    make(spec.A, 0, spec.f, spec.fbar);
    make(spec.B, L.m, spec.g, spec.gbar);
    make(spec.C, L.m + L.n, spec.h, spec.hbar);
    return [blocks](double t, const State& u, State& du) {
        du.resize(u.size());
        std::vector<Complex> nl, den;
        for (const auto& b : *blocks) {
            const int n = b.M.rows();
            if (n == 0) continue;
            b.f.evaluate(t, u, nl);
            double scale = 1.0;
            if (b.den) {
                b.den->evaluate(t, u, den);
                scale = 1.0 / (1.0 + den[0].real());
            }
            for (int i = 0; i < n; ++i) {
                Complex s = nl[static_cast<std::size_t>(i)];
                for (int j = 0; j < n; ++j) s += b.M(i, j) * u[static_cast<std::size_t>(b.begin + j)];
                du[static_cast<std::size_t>(b.begin + i)] = s.real() * scale;
            }
        }
    };
}

VectorField normal_form_field(const NormalFormResult<Complex>& res) {
    auto rhs = std::make_shared<CompiledSeries>(normal_form_rhs(res, kUntruncated));
    return [rhs](double t, const State& u, State& du) {
        std::vector<Complex> c;
        rhs->evaluate(t, u, c);
        du.resize(c.size());
        for (std::size_t i = 0; i < c.size(); ++i) du[i] = c[i].real();
    };
}

InsidePredicate ball_predicate(double r) {
    if (std::isinf(r)) return [](double, const State&) { return true; };
    return [r](double, const State& u) { return norm2(u) <= r; };
}

double default_step(const NormalFormResult<Complex>& res) {
    const double beta = res.spectral.beta;
    return std::isfinite(beta) && beta > 0.0 ? 1e-3 / beta : 1e-3;
}

std::vector<DefectSample> conjugacy_defect(const SystemSpec<Complex>& spec, const NormalFormResult<Complex>& res,
                                           const State& U0, double t0, double t1, double h,
                                           const InsidePredicate& inside) {
    if (spec.layout != res.layout) throw DimensionError("spec and result layouts differ");
    const VectorField nf = normal_form_field(res);
    const VectorField orig = original_field(spec);
    const CompiledTransform T(res);
    const Trajectory tr = integrate(nf, U0, t0, t1, h, inside);
    const auto V = static_cast<std::size_t>(res.layout.vars());
    std::vector<DefectSample> out;
    out.reserve(tr.times.size());
    State dU, f;
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        const double t = tr.times[k];
        const State& U = tr.states[k];
        nf(t, U, dU);
        State du = T.time_derivative(t, U);
        const auto J = T.jacobian(t, U);
        for (std::size_t i = 0; i < V; ++i)
            for (std::size_t j = 0; j < V; ++j) du[i] += J[i * V + j] * dU[j];
        orig(t, T.map(t, U), f);
        double d = 0.0;
        for (std::size_t i = 0; i < V; ++i) d += (du[i] - f[i]) * (du[i] - f[i]);
        out.push_back({t, std::sqrt(d)});
    }
    return out;
}

OrderScaling order_scaling(const SystemSpec<Complex>& spec, const NormalFormResult<Complex>& res,
                           const State& direction, const std::vector<double>& epsilons, double t0, double horizon,
                           double h) {
    constexpr double kFloor = 1e-13;
    OrderScaling out;
    std::vector<double> lx, ly;
    for (double eps : epsilons) {
        State U0 = direction;
        for (auto& v : U0) v *= eps;
        double worst = 0.0;
        for (const auto& s : conjugacy_defect(spec, res, U0, t0, t0 + horizon, h)) worst = std::max(worst, s.defect);
        out.samples.emplace_back(eps, worst);
        if (eps > 0.0 && worst > kFloor) {
            lx.push_back(std::log(eps));
            ly.push_back(std::log(worst));
        }
    }
    if (lx.empty()) {
        out.floor = true;
        return out;
    }
    if (lx.size() < 3) throw NumericalError("order scaling needs at least three defects above the floor");
    const LineFit f = fit_line(lx, ly);
    out.slope = f.slope;
    out.fit_residual = f.rms;
    return out;
}

EmergenceFit emergence_check(const NormalFormResult<Complex>& res, const State& u0, double mu, double t0,
                             double horizon, double radius, double h) {
    const Layout& L = res.layout;
    const CompiledTransform T(res);
    EmergenceFit fit;
    fit.u0 = u0;
    fit.radius = radius;
    State U0 = T.invert(t0, u0);
    if (block_norm(U0, L.m + L.n, L.l) > 1e-8 * (1.0 + norm2(U0)))
        throw ValidationError("initial condition is not on the center-stable manifold");
    for (int k = 0; k < L.l; ++k) U0[static_cast<std::size_t>(L.m + L.n + k)] = 0.0;
    fit.U0 = U0;
    const auto inside = ball_predicate(radius);
    if (!inside(t0, U0)) throw NumericalError("initial condition lies outside the certified ball");
    State C0 = U0;
    for (int j = 0; j < L.n; ++j) C0[static_cast<std::size_t>(L.m + j)] = 0.0;

    const double t1 = t0 + horizon;
    const VectorField nf = normal_form_field(res);
    const Trajectory full = integrate(nf, U0, t0, t1, h, inside);
    const Trajectory comp = integrate(nf, C0, t0, t1, h, inside);
    if (full.exit_time || comp.exit_time)
        fit.exit_time = std::min(full.exit_time.value_or(t1), comp.exit_time.value_or(t1));
    fit.constant = emergence_constant(res, block_norm(U0, L.m, L.n), radius, t0, t1);

    const std::size_t n = std::min(full.times.size(), comp.times.size());
    std::vector<double> ft, fl;
    const std::size_t skip = n / 20;
    const double tiny = 1e3 * std::numeric_limits<double>::epsilon();
    for (std::size_t k = 0; k < n; ++k) {
        const double t = full.times[k];
        const State a = T.map(t, full.states[k]);
        const State b = T.map(t, comp.states[k]);
        double d = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
        d = std::sqrt(d);
        const double bound = fit.constant * std::exp(-mu * (t - t0));
        if (d > bound * (1.0 + 1e-9) + 1e-13) ++fit.violations;
        if (bound > 0.0) fit.max_ratio = std::max(fit.max_ratio, d / bound);
        if (k >= skip && d > tiny) {
            ft.push_back(t);
            fl.push_back(std::log(d));
        }
    }
    fit.samples = static_cast<int>(n);
    fit.rate = ft.size() >= 3 ? -fit_line(ft, fl).slope : std::numeric_limits<double>::infinity();
    fit.pass = fit.samples > 0 && fit.violations == 0;
    return fit;
}

TrichotomyReport trichotomy_check(const NormalFormResult<Complex>& res, int samples, double mu, double radius,
                                  double t0, double t1, double h, std::uint64_t seed) {
    const Layout& L = res.layout;
    const TrichotomyConstants k = trichotomy_constants(res);
    const VectorField nf = normal_form_field(res);
    const auto inside = ball_predicate(radius);
    std::mt19937_64 rng(seed);
    TrichotomyReport rep;
    auto exceeds = [](double lhs, double rhs) { return lhs > rhs * (1.0 + 1e-9) + 1e-14; };
    for (int s = 0; s < samples; ++s) {
        const State U0 = sample_ball(rng, L.vars(), std::isfinite(radius) ? radius : 1.0);
        const Trajectory tr = integrate(nf, U0, t0, t1, h, inside);
        ++rep.trajectories;
        const std::size_t stride = std::max<std::size_t>(1, tr.times.size() / 200);
        std::vector<std::size_t> pick;
        for (std::size_t i = 0; i < tr.times.size(); i += stride) pick.push_back(i);
        for (std::size_t a = 0; a < pick.size(); ++a) {
            const State& Us = tr.states[pick[a]];
            const double ys = block_norm(Us, L.m, L.n);
            const double zs = block_norm(Us, L.m + L.n, L.l);
            const double xs = block_norm(Us, 0, L.m);
            for (std::size_t b = a + 1; b < pick.size(); ++b) {
                const State& Ut = tr.states[pick[b]];
                const double gap = tr.times[pick[b]] - tr.times[pick[a]];
                const double decay = std::exp(-mu * gap);
                ++rep.pairs;
                if (L.n > 0 && exceeds(block_norm(Ut, L.m, L.n), k.condQ * ys * decay)) ++rep.y_violations;
                if (L.l > 0 && exceeds(zs, k.condR * block_norm(Ut, L.m + L.n, L.l) * decay)) ++rep.z_violations;
                if (L.m > 0 && ys * zs == 0.0) {
                    const double xt = block_norm(Ut, 0, L.m);
                    const double grow = std::exp(mu * gap);
                    if (exceeds(xt, k.condP * xs * grow) || exceeds(xs, k.condP * xt * grow)) ++rep.x_violations;
                }
            }
        }
    }
    return rep;
}

}  // namespace nfkit

namespace nfkit {

VerificationReport run_verification(const SystemSpec<Complex>& spec, const NormalFormResult<Complex>& res,
                                    const VerifyOptions& opt) {
    if (!is_real_system(spec)) throw ValidationError("verification needs a real system");
    const Layout& L = res.layout;
    const int d = L.vars();
    const double h = opt.h > 0.0 ? opt.h : default_step(res);
    VerificationReport rep;

    if (!(opt.mu > res.spectral.alpha)) throw ValidationError("verification needs mu > alpha");
    const double cert = certified_radius(res, opt.mu, opt.t0, opt.t1);
    const double radius = std::isfinite(cert) ? cert : 1.0;
    {
        std::ostringstream os;
        os << "certified radius " << cert << " at mu " << opt.mu << ", step " << h;
        rep.notes.push_back(os.str());
    }
    if (!(cert > 0.0)) {
        rep.notes.push_back("empty certified ball: no bound can be checked");
        rep.pass = false;
        return rep;
    }

    // Order scaling: epsilons shrink with the ball so every start stays inside it.
    const State dir(static_cast<std::size_t>(d), 1.0 / std::sqrt(static_cast<double>(d)));
    const double top = std::min(0.2, 0.8 * radius);
    const std::vector<double> eps{top / 4.0, top / 2.0, top};
    const double horizon = std::min(opt.scaling_horizon, opt.t1 - opt.t0);
    try {
        rep.scaling = order_scaling(spec, res, dir, eps, opt.t0, horizon, h);
    } catch (const NumericalError& e) {
        rep.notes.push_back(std::string("order scaling: ") + e.what());
        rep.pass = false;
    }
    const double want = res.order + 1;
    if (!rep.scaling.samples.empty() && !rep.scaling.floor && std::abs(rep.scaling.slope - want) > 0.5) {
        std::ostringstream os;
        os << "defect slope " << rep.scaling.slope << " is not within 0.5 of " << want;
        rep.notes.push_back(os.str());
        rep.pass = false;
    }

    // Decay and growth bounds belong to the center-stable-unstable split; slow-fast
    // blocks oscillate, so only the defect scaling applies there.
    if (res.mode == Mode::SlowFast) {
        rep.notes.push_back("slow-fast mode: emergence and trichotomy bounds do not apply");
        return rep;
    }

    // Emergence from random starts with Z = 0 and a nonzero stable part.
    const CompiledTransform T(res);
    const VectorField nf = normal_form_field(res);
    std::mt19937_64 rng(opt.seed);
    if (L.n > 0) {
        for (int k = 0; k < opt.emergence_runs; ++k) {
            std::vector<double> U = sample_ball(rng, L.m + L.n, 0.9 * radius);
            U.resize(static_cast<std::size_t>(d), 0.0);
            if (block_norm(U, L.m, L.n) == 0.0) continue;
            const State u0 = T.map(opt.t0, U);
            try {
                EmergenceFit fit = emergence_check(res, u0, opt.mu, opt.t0, opt.t1 - opt.t0, radius, h);
                if (!fit.pass) rep.pass = false;
                if (opt.keep_trajectories) {
                    const Trajectory tr = integrate(nf, fit.U0, opt.t0, opt.t1, h, ball_predicate(radius));
                    Trajectory orig = tr;
                    for (std::size_t i = 0; i < tr.states.size(); ++i) orig.states[i] = T.map(tr.times[i], tr.states[i]);
                    rep.trajectories.push_back({"emergence_" + std::to_string(k), std::move(orig)});
                }
                rep.emergence.push_back(std::move(fit));
            } catch (const Error& e) {
                rep.notes.push_back("emergence run " + std::to_string(k) + " skipped: " + e.what());
            }
        }
    } else {
        rep.notes.push_back("no stable block: emergence is vacuous");
    }

    rep.trichotomy = trichotomy_check(res, opt.trichotomy_samples, opt.mu, radius, opt.t0, opt.t1, h, opt.seed + 1);
    if (rep.trichotomy.violations() > 0) rep.pass = false;
    if (rep.trichotomy.x_violations > 0)
        rep.notes.push_back("X bound exceeded " + std::to_string(rep.trichotomy.x_violations) +
                            " times; the X bound does not enter the verdict");
    return rep;
}

}  // namespace nfkit
