#include "nfkit/domain.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

namespace nfkit {

namespace {

SeriesMatrix extract(const MultiSeries<Complex>& s, const Layout& L, int begin, int count) {
    SeriesMatrix M;
    M.rows = count;
    M.cols = count;
    M.entries.assign(static_cast<std::size_t>(count * count), Series(L, 1, s.truncation()));
    for (const auto& [idx, cs] : s.terms()) {
        int j = -1;
        for (int k = 0; k < count; ++k)
            if (idx[begin + k] > 0) {
                j = k;
                break;
            }
        if (j < 0) throw StructureViolation("block term without an own-block factor");
        MultiIndex reduced = idx;
        reduced.set(begin + j, idx[begin + j] - 1);
        for (int i = 0; i < count; ++i)
            M.entries[static_cast<std::size_t>(i * count + j)].add(reduced, 0, cs[static_cast<std::size_t>(i)]);
    }
    return M;
}

double block_radius(const SeriesMatrix& M, double cond, double D, double t0, double t1) {
    bool zero = true;
    for (const auto& e : M.entries) zero = zero && e.is_zero();
    if (zero) return kUnbounded;
    const double rhs = D * D;
    auto violates = [&](double r) { return 2.0 * cond * cond * gprime_max(M, r, t0, t1) * r > rhs; };
    double lo = 0.0, hi = 1.0;
    while (!violates(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) return kUnbounded;
    }
    while (hi - lo > 1e-9 * hi) {
        const double mid = 0.5 * (lo + hi);
        (violates(mid) ? hi : lo) = mid;
    }
    return lo;
}

}  // namespace

std::vector<double> sample_ball(std::mt19937_64& rng, int d, double r, bool on_sphere) {
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<double> u(static_cast<std::size_t>(d));
    if (d == 0) return u;
    double n2 = 0.0;
    do {
        n2 = 0.0;
        for (auto& v : u) {
            v = normal(rng);
            n2 += v * v;
        }
    } while (n2 == 0.0);
    const double scale = on_sphere ? r : r * std::pow(uni(rng), 1.0 / d);
    for (auto& v : u) v *= scale / std::sqrt(n2);
    return u;
}

namespace {

double sample_time(std::mt19937_64& rng, double t0, double t1) {
    const double hi = std::isfinite(t1) ? t1 : t0 + 20.0;
    return std::uniform_real_distribution<double>(t0, hi)(rng);
}

std::vector<const Series*> transform_blocks(const NormalFormResult<Complex>& res) {
    return {&res.x, &res.y, &res.z};
}

}  // namespace

SeriesMatrix extract_G(const NormalFormResult<Complex>& res) {
    return extract(res.GY, res.layout, res.layout.m, res.layout.n);
}

SeriesMatrix extract_H(const NormalFormResult<Complex>& res) {
    return extract(res.HZ, res.layout, res.layout.m + res.layout.n, res.layout.l);
}

double coefficient_bound(const Series& g, double r, double t0, double t1) {
    double s = 0.0;
    for (const auto& [idx, cs] : g.terms())
        for (const auto& c : cs) s += qp_sup(c, t0, t1) * std::pow(r, idx.order());
    return s;
}

double gradient_bound(const Series& g, double r, double t0, double t1) {
    double s = 0.0;
    for (const auto& [idx, cs] : g.terms()) {
        const int o = idx.order();
        if (o == 0) continue;
        for (const auto& c : cs) s += qp_sup(c, t0, t1) * o * std::pow(r, o - 1);
    }
    return s;
}

double frobenius_bound(const SeriesMatrix& M, double r, double t0, double t1) {
    double s = 0.0;
    for (const auto& e : M.entries) {
        const double b = coefficient_bound(e, r, t0, t1);
        s += b * b;
    }
    return std::sqrt(s);
}

double gprime_max(const SeriesMatrix& M, double r, double t0, double t1) {
    double s = 0.0;
    for (const auto& e : M.entries)
        if (!e.is_zero()) s += coefficient_bound(e, r, t0, t1) * gradient_bound(e, r, t0, t1);
    return s;
}

TrichotomyConstants trichotomy_constants(const NormalFormResult<Complex>& res) {
    return {res.spectral.A.condS, res.spectral.B.condS, res.spectral.C.condS};
}

double gap_margin(const NormalFormResult<Complex>& res, double mu, double radius, double t0, double t1) {
    const auto& sd = res.spectral;
    const TrichotomyConstants k = trichotomy_constants(res);
    const double g = k.condQ * frobenius_bound(extract_G(res), radius, t0, t1);
    const double h = k.condR * frobenius_bound(extract_H(res), radius, t0, t1);
    return sd.beta - sd.delta - mu - std::max(g, h);
}

double ball_radius(const NormalFormResult<Complex>& res, double mu, double t0, double t1) {
    const auto& sd = res.spectral;
    if (std::isinf(sd.beta)) return kUnbounded;
    const double D = sd.beta - mu - sd.delta;
    if (D <= 0.0) return 0.0;
    const TrichotomyConstants k = trichotomy_constants(res);
    return std::min(block_radius(extract_G(res), k.condQ, D, t0, t1), block_radius(extract_H(res), k.condR, D, t0, t1));
}

double certified_radius(const NormalFormResult<Complex>& res, double mu, double t0, double t1) {
    auto ok = [&](double r) { return gap_margin(res, mu, r, t0, t1) >= 0.0; };
    if (!ok(0.0)) return 0.0;
    double lo = 0.0, hi = 1.0;
    while (ok(hi)) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) return kUnbounded;
    }
    while (hi - lo > 1e-9 * hi) {
        const double mid = 0.5 * (lo + hi);
        (ok(mid) ? lo : hi) = mid;
    }
    return lo;
}

double transform_lipschitz(const NormalFormResult<Complex>& res, double radius, double t0, double t1) {
    const Layout& L = res.layout;
    if (L.n == 0) return 0.0;
    Eigen::MatrixXd lin = Eigen::MatrixXd::Zero(L.vars(), L.n);
    double nonlin2 = 0.0;
    int row = 0;
    for (const Series* s : transform_blocks(res)) {
        for (int i = 0; i < s->dim(); ++i, ++row) {
            for (int j = 0; j < L.n; ++j) {
                const int v = L.m + j;
                double entry = 0.0;
                for (const auto& [idx, cs] : s->terms()) {
                    const auto& c = cs[static_cast<std::size_t>(i)];
                    if (idx[v] == 0 || c.is_zero()) continue;
                    if (idx.order() == 1)
                        lin(row, j) += qp_sup(c, t0, t1);
                    else
                        entry += idx[v] * qp_sup(c, t0, t1) * std::pow(radius, idx.order() - 1);
                }
                nonlin2 += entry * entry;
            }
        }
    }
    const double lin_norm = Eigen::JacobiSVD<Eigen::MatrixXd>(lin).singularValues()(0);
    return lin_norm + std::sqrt(nonlin2);
}

double emergence_constant(const NormalFormResult<Complex>& res, double y0norm, double radius, double t0, double t1) {
    if (y0norm == 0.0) return 0.0;
    return trichotomy_constants(res).condQ * y0norm * transform_lipschitz(res, radius, t0, t1);
}

double sampled_matrix_norm(const SeriesMatrix& M, double r, double t0, double t1, int samples, std::uint64_t seed) {
    if (M.rows == 0 || !std::isfinite(r)) return 0.0;
    std::mt19937_64 rng(seed);
    const int d = M.entries.front().vars();
    double best = 0.0;
    Eigen::MatrixXcd E(M.rows, M.cols);
    for (int s = 0; s < samples; ++s) {
        const auto u = sample_ball(rng, d, r, false);
        const double t = sample_time(rng, t0, t1);
        for (int i = 0; i < M.rows; ++i)
            for (int j = 0; j < M.cols; ++j) {
                const Series& e = M(i, j);
                E(i, j) = e.is_zero() ? Complex{} : ms_evaluate(e, t, u)[0];
            }
        best = std::max(best, Eigen::JacobiSVD<Eigen::MatrixXcd>(E).singularValues()(0));
    }
    return best;
}

JacobianDiagnostic jacobian_diagnostic(const NormalFormResult<Complex>& res, double r, double t0, double t1,
                                       int samples, std::uint64_t seed) {
    JacobianDiagnostic out;
    const Layout& L = res.layout;
    const int V = L.vars();
    if (V == 0 || !std::isfinite(r)) return out;
    std::vector<std::vector<Series>> partials;
    for (const Series* s : transform_blocks(res)) {
        std::vector<Series> row;
        for (int v = 0; v < V; ++v) row.push_back(ms_derivative(*s, v));
        partials.push_back(std::move(row));
    }
    std::mt19937_64 rng(seed);
    Eigen::MatrixXd J(V, V);
    out.min_det = kUnbounded;
    out.max_det = -kUnbounded;
    for (int s = 0; s < samples; ++s) {
        const auto u = sample_ball(rng, V, r, true);
        const double t = sample_time(rng, t0, t1);
        int row = 0;
        for (std::size_t b = 0; b < partials.size(); ++b) {
            const int dim = transform_blocks(res)[b]->dim();
            std::vector<std::vector<Complex>> cols;
            for (int v = 0; v < V; ++v) cols.push_back(ms_evaluate(partials[b][static_cast<std::size_t>(v)], t, u));
            for (int i = 0; i < dim; ++i, ++row)
                for (int v = 0; v < V; ++v) J(row, v) = cols[static_cast<std::size_t>(v)][static_cast<std::size_t>(i)].real();
        }
        const double det = J.fullPivLu().determinant();
        out.min_det = std::min(out.min_det, det);
        out.max_det = std::max(out.max_det, det);
        ++out.samples;
    }
    out.sign_constant = out.samples == 0 || out.min_det > 0.0 || out.max_det < 0.0;
    return out;
}

DomainEstimate estimate_domain(const NormalFormResult<Complex>& res, double mu, double t0, double t1,
                               std::uint64_t seed) {
    const auto& sd = res.spectral;
    if (!(mu > sd.alpha)) throw ValidationError("decay rate mu must exceed alpha");
    if (!(t0 <= t1)) throw ValidationError("time interval needs t0 <= t1");
    DomainEstimate e;
    e.mu = mu;
    e.alpha = sd.alpha;
    e.beta = sd.beta;
    e.delta = sd.delta;
    const TrichotomyConstants k = trichotomy_constants(res);
    e.condP = k.condP;
    e.condQ = k.condQ;
    e.condR = k.condR;
    e.t0 = t0;
    e.t1 = t1;
    e.radius = ball_radius(res, mu, t0, t1);
    e.certified_radius = certified_radius(res, mu, t0, t1);
    const SeriesMatrix G = extract_G(res), H = extract_H(res);
    if (std::isfinite(e.radius)) {
        e.gprime_max = std::max(gprime_max(G, e.radius, t0, t1), gprime_max(H, e.radius, t0, t1));
        e.margin = gap_margin(res, mu, e.radius, t0, t1);
    } else {
        e.margin = sd.beta - sd.delta - mu;
    }
    const double span = std::isfinite(e.radius) ? e.radius
                        : std::isfinite(e.certified_radius) ? e.certified_radius
                                                            : 1.0;
    for (int i = 0; i <= 16; ++i) {
        MarginSample s;
        s.radius = span * i / 16.0;
        s.g_bound = k.condQ * frobenius_bound(G, s.radius, t0, t1);
        s.h_bound = k.condR * frobenius_bound(H, s.radius, t0, t1);
        s.margin = sd.beta - sd.delta - mu - std::max(s.g_bound, s.h_bound);
        e.margin_samples.push_back(s);
    }
    e.sampled_G_norm = sampled_matrix_norm(G, span, t0, t1, 200, seed);
    e.sampled_H_norm = sampled_matrix_norm(H, span, t0, t1, 200, seed + 1);
    e.jacobian = jacobian_diagnostic(res, span, t0, t1, 200, seed + 2);
    return e;
}

}  // namespace nfkit
