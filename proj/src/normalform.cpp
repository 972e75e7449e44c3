#include "nfkit/normalform.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nfkit {

namespace {

template <class S>
using Real = typename ScalarTraits<S>::Real;

template <class S>
Real<S> real_abs(const Real<S>& r) {
    return r < Real<S>(0) ? Real<S>(-r) : r;
}

template <class S>
MultiSeries<S> zero_series(const Layout& L, int dim, int N) {
    return MultiSeries<S>(L, dim, N);
}

// Scalar substitutions U_v = sum_w M_block(v, w) U_w for each block.
template <class S>
std::vector<MultiSeries<S>> block_linear_subs(const Layout& L, const DenseMatrix<S>& MA, const DenseMatrix<S>& MB,
                                               const DenseMatrix<S>& MC) {
    std::vector<MultiSeries<S>> subs;
    auto push = [&](const DenseMatrix<S>& M, int begin) {
        if (M.rows() == 0) return;
        MultiSeries<S> lin = ms_linear_block(L, M, begin);
        for (int i = 0; i < M.rows(); ++i) subs.push_back(lin.component(i));
    };
    push(MA, 0);
    push(MB, L.m);
    push(MC, L.m + L.n);
    return subs;
}

template <class S>
std::vector<MultiSeries<S>> transform_subs(const NormalFormResult<S>& c) {
    std::vector<MultiSeries<S>> subs;
    for (int i = 0; i < c.x.dim(); ++i) subs.push_back(c.x.component(i));
    for (int i = 0; i < c.y.dim(); ++i) subs.push_back(c.y.component(i));
    for (int i = 0; i < c.z.dim(); ++i) subs.push_back(c.z.component(i));
    return subs;
}

template <class S>
MultiSeries<S> compose_or_zero(const MultiSeries<S>& f, const std::vector<MultiSeries<S>>& subs, const Layout& L,
                               int N) {
    if (f.is_zero()) return zero_series<S>(L, f.dim(), N);
    return ms_compose(f, subs, N);
}

template <class S>
MultiSeries<S> change_basis(const MultiSeries<S>& s, const DenseMatrix<S>& out, const std::vector<MultiSeries<S>>& subs,
                            int N) {
    MultiSeries<S> c = compose_or_zero(s, subs, s.layout(), N);
    return ms_apply_matrix(out, c);
}

template <class S>
bool significant(const QuasiPoly<S>& c, const Tolerances& tol) {
    if constexpr (ScalarTraits<S>::exact) {
        return !c.is_zero();
    } else {
        return c.norm1() > tol.residual;
    }
}

struct TermKey {
    int block;
    int component;
};

std::string describe_index(const MultiIndex& idx, const Layout& L) {
    std::ostringstream os;
    bool first = true;
    auto emit = [&](char v, int begin, int count) {
        for (int i = 0; i < count; ++i) {
            int k = idx[begin + i];
            if (k == 0) continue;
            if (!first) os << '*';
            first = false;
            os << v << (i + 1);
            if (k > 1) os << '^' << k;
        }
    };
    emit('X', 0, L.m);
    emit('Y', L.m, L.n);
    emit('Z', L.m + L.n, L.l);
    if (first) os << '1';
    return os.str();
}

const char* block_name(int b) { return b == 0 ? "x" : (b == 1 ? "y" : "z"); }

// Threshold tests on rates, with the floating slack folded in.
template <class S>
struct RateTests {
    Real<S> thr;
    bool center(const S& z) const { return real_abs<S>(ScalarTraits<S>::re(z)) <= thr; }
    bool slow(const S& z) const { return ScalarTraits<S>::abs2(z) <= thr * thr; }
};

template <class S>
struct Split {
    QuasiPoly<S> transform;
    QuasiPoly<S> evolution;
};

// Partitions a coefficient into its single-rate parts, each carrying the parent flags.
template <class S>
std::vector<QuasiPoly<S>> rate_parts(const QuasiPoly<S>& a) {
    std::vector<QuasiPoly<S>> parts;
    const Tolerances& tol = tolerances();
    const auto& ts = a.terms();
    for (std::size_t i = 0; i < ts.size();) {
        QuasiPoly<S> part;
        part.add_flags(a.flags());
        std::size_t j = i;
        while (j < ts.size() && ts[j].rate == ts[i].rate) {
            part.accumulate(ts[j].coeff, ts[j].rate, ts[j].power, tol);
            ++j;
        }
        part.prune(tol);
        parts.push_back(std::move(part));
        i = j;
    }
    return parts;
}

template <class S>
class Engine {
public:
    Engine(const SystemSpec<S>& w, const ConstructOptions& opt, std::vector<std::string>& warnings)
        : w_(w), opt_(opt), warnings_(warnings) {
        const Layout& L = w.layout;
        for (int i = 0; i < L.m; ++i) eig_.push_back(w.A(i, i));
        for (int i = 0; i < L.n; ++i) eig_.push_back(w.B(i, i));
        for (int i = 0; i < L.l; ++i) eig_.push_back(w.C(i, i));
        tests_.thr = ScalarTraits<S>::real_from_double(opt.mutilde) + ScalarTraits<S>::slack(opt.tol);
    }

    Split<S> solve(int block, int comp, const MultiIndex& idx, const QuasiPoly<S>& a) const {
        const Layout& L = w_.layout;
        const int offset = block == 0 ? 0 : (block == 1 ? L.m : L.m + L.n);
        S mu = eig_[static_cast<std::size_t>(offset + comp)];
        for (int v = 0; v < L.vars(); ++v)
            if (idx[v] != 0) mu -= ScalarTraits<S>::from_int(idx[v]) * eig_[static_cast<std::size_t>(v)];

        Split<S> out;
        auto to_transform = [&](const QuasiPoly<S>& part) {
            try {
                out.transform += qp_particular(mu, part, opt_.mutilde);
            } catch (const ResonantError& e) {
                warnings_.push_back(std::string("resonant part rerouted to the evolution: block ") + block_name(block) +
                                    ", component " + std::to_string(comp + 1) + ", term " + describe_index(idx, L) +
                                    " (" + e.what() + ")");
                out.evolution += part;
            }
        };

        if (opt_.mode == Mode::SlowFast) {
            for (const auto& part : rate_parts(a)) {
                const S lambda = part.terms().front().rate;
                if (tests_.slow(lambda - mu))
                    out.evolution += part;
                else
                    to_transform(part);
            }
        } else if (block == 0) {
            if (!tests_.center(mu)) {
                for (const auto& part : rate_parts(a)) to_transform(part);
            } else {
                for (const auto& part : rate_parts(a)) {
                    const S lambda = part.terms().front().rate;
                    if (tests_.center(lambda) || ScalarTraits<S>::same_rate(lambda, mu, opt_.tol))
                        out.evolution += part;
                    else
                        to_transform(part);
                }
            }
        } else {
            if (tests_.center(mu)) {
                const int own = block == 1 ? idx.q_order(L) : idx.r_order(L);
                if (own == 0)
                    throw StructureViolation(std::string("center-rate term without an own-block factor in block ") +
                                             block_name(block) + ": " + describe_index(idx, L));
                out.evolution = a;
            } else {
                for (const auto& part : rate_parts(a)) to_transform(part);
            }
        }
        return out;
    }

private:
    const SystemSpec<S>& w_;
    const ConstructOptions& opt_;
    std::vector<std::string>& warnings_;
    std::vector<S> eig_;
    RateTests<S> tests_;
};

template <class S>
bool spec_is_real(const SystemSpec<S>& spec) {
    if constexpr (ScalarTraits<S>::exact) {
        return false;
    } else {
        for (const auto* M : {&spec.A, &spec.B, &spec.C})
            for (int i = 0; i < M->rows(); ++i)
                for (int j = 0; j < M->cols(); ++j)
                    if ((*M)(i, j).imag() != 0.0) return false;
        auto closed = [](const MultiSeries<S>& s) {
            for (const auto& [idx, cs] : s.terms())
                for (const auto& c : cs) {
                    QuasiPoly<S> d = qp_conj(c) - c;
                    if (d.norm1() > 1e-12 * (1.0 + c.norm1())) return false;
                }
            return true;
        };
        if (!closed(spec.f) || !closed(spec.g) || !closed(spec.h)) return false;
        for (const auto* d : {&spec.fbar, &spec.gbar, &spec.hbar})
            if (d->has_value() && !closed(**d)) return false;
        return true;
    }
}

template <class S>
MultiSeries<S> realified(const MultiSeries<S>& s) {
    return s.map_coeffs([](const QuasiPoly<S>& c) { return qp_real_part(c); });
}

template <class S>
MultiSeries<S> reversed_series(const MultiSeries<S>& s, const Layout& L2, const std::vector<int>& perm) {
    return ms_permute_vars(s.map_coeffs([](const QuasiPoly<S>& c) { return qp_time_reversed(c); }), L2, perm);
}

std::vector<int> reversal_perm(const Layout& L) {
    std::vector<int> perm(static_cast<std::size_t>(L.vars()));
    for (int i = 0; i < L.m; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (int j = 0; j < L.n; ++j) perm[static_cast<std::size_t>(L.m + j)] = L.m + L.l + j;
    for (int k = 0; k < L.l; ++k) perm[static_cast<std::size_t>(L.m + L.n + k)] = L.m + k;
    return perm;
}

template <class S>
void check_matrix(const DenseMatrix<S>& M, int n, const char* name) {
    if (M.rows() != n || M.cols() != n)
        throw ValidationError(std::string("matrix ") + name + " must be " + std::to_string(n) + "x" + std::to_string(n));
}

template <class S>
void check_series(const MultiSeries<S>& s, const Layout& L, int dim, int min_order, const char* name) {
    if (s.layout() != L || s.dim() != dim)
        throw ValidationError(std::string("nonlinear terms ") + name + " do not match the block layout");
    if (!s.is_zero() && s.min_order() < min_order)
        throw ValidationError(std::string("terms of ") + name + " must have order at least " + std::to_string(min_order));
}

template <class S>
Triangularization floating_block(const DenseMatrix<S>& M, double balance) {
    return triangularize(convert_matrix<Complex>(M), balance);
}

}  // namespace

template <class S>
SpectralData analyse_spectrum(const SystemSpec<S>& spec) {
    const Layout& L = spec.layout;
    const ConstructOptions& o = spec.options;
    if (L.m < 0 || L.n < 0 || L.l < 0) throw ValidationError("block sizes must be nonnegative");
    check_matrix(spec.A, L.m, "A");
    check_matrix(spec.B, L.n, "B");
    check_matrix(spec.C, L.l, "C");
    check_series(spec.f, L, L.m, 2, "f");
    check_series(spec.g, L, L.n, 2, "g");
    check_series(spec.h, L, L.l, 2, "h");
    const char* dn[] = {"fbar", "gbar", "hbar"};
    int k = 0;
    for (const auto* d : {&spec.fbar, &spec.gbar, &spec.hbar}) {
        if (d->has_value()) check_series(**d, L, 1, 1, dn[k]);
        ++k;
    }
    if (o.order < 2) throw ValidationError("order must be at least 2");
    if (!(o.mutilde >= 0.0) || !std::isfinite(o.mutilde)) throw ValidationError("mutilde must be finite and nonnegative");
    if (o.mode == Mode::SlowFast && L.l != 0) throw ValidationError("slow-fast mode has no unstable block");

    SpectralData sd;
    sd.mode = o.mode;
    sd.mutilde = o.mutilde;
    sd.smoothness = o.order + 1;
    sd.A = floating_block(spec.A, o.balance);
    sd.B = floating_block(spec.B, o.balance);
    sd.C = floating_block(spec.C, o.balance);
    spectral_bounds(sd);

    const double slack = ScalarTraits<S>::exact ? 0.0 : o.tol.rate;
    const int pp = sd.smoothness;
    if (std::isfinite(sd.beta)) {
        GapCheck g = check_gap(sd.alpha, sd.beta, pp);
        if (!g.ok && g.margin < -slack) {
            std::ostringstream os;
            os << "spectral gap too small: beta=" << sd.beta << " alpha=" << sd.alpha << " needs beta > "
               << (2 * pp - 1) << "*alpha";
            throw GapViolation(os.str());
        }
        if (!(o.mutilde < sd.beta - (pp - 1) * sd.alpha)) {
            std::ostringstream os;
            os << "threshold mutilde=" << o.mutilde << " must lie below beta-(p-1)alpha=" << sd.beta - (pp - 1) * sd.alpha;
            throw GapViolation(os.str());
        }
    }
    if (pp * sd.alpha > o.mutilde + slack) {
        std::ostringstream os;
        os << "threshold mutilde=" << o.mutilde << " must be at least p*alpha=" << pp * sd.alpha;
        throw GapViolation(os.str());
    }
    return sd;
}

template <class S>
NormalFormResult<S> identity_candidate(const SystemSpec<S>& spec, int N) {
    const Layout& L = spec.layout;
    NormalFormResult<S> c;
    c.layout = L;
    c.order = N;
    c.mode = spec.options.mode;
    c.mutilde = spec.options.mutilde;
    c.x = ms_identity_block<S>(L, 0, L.m, N);
    c.y = ms_identity_block<S>(L, L.m, L.n, N);
    c.z = ms_identity_block<S>(L, L.m + L.n, L.l, N);
    c.A = spec.A;
    c.B = spec.B;
    c.C = spec.C;
    c.F = zero_series<S>(L, L.m, N);
    c.GY = zero_series<S>(L, L.n, N);
    c.HZ = zero_series<S>(L, L.l, N);
    return c;
}

template <class S>
MultiSeries<S> normal_form_rhs(const NormalFormResult<S>& res, int N) {
    const Layout& L = res.layout;
    MultiSeries<S> rx = ms_linear_block(L, res.A, 0, N) + res.F.truncated(N);
    MultiSeries<S> ry = ms_linear_block(L, res.B, L.m, N) + res.GY.truncated(N);
    MultiSeries<S> rz = ms_linear_block(L, res.C, L.m + L.n, N) + res.HZ.truncated(N);
    rx.set_truncation(N);
    ry.set_truncation(N);
    rz.set_truncation(N);
    return ms_stack<S>(L, {&rx, &ry, &rz}, N);
}

template <class S>
Residuals<S> residual(const SystemSpec<S>& spec, const NormalFormResult<S>& cand, int N) {
    const Layout& L = spec.layout;
    if (cand.layout != L) throw DimensionError("candidate layout differs from the spec");
    std::vector<MultiSeries<S>> subs = transform_subs(cand);
    for (auto& s : subs) s.set_truncation(N);
    MultiSeries<S> rhs = normal_form_rhs(cand, N);

    auto block = [&](const DenseMatrix<S>& M, const MultiSeries<S>& f, const std::optional<MultiSeries<S>>& den,
                     const MultiSeries<S>& u) {
        MultiSeries<S> out = zero_series<S>(L, u.dim(), N);
        if (u.dim() == 0) return out;
        out += ms_apply_matrix(M, u.truncated(N)).truncated(N);
        out += compose_or_zero(f, subs, L, N);
        MultiSeries<S> D = ms_flow_derivative(u.truncated(N), rhs, N);
        if (den.has_value()) {
            MultiSeries<S> d = compose_or_zero(*den, subs, L, N);
            d.add(MultiIndex(L.vars()), 0, QuasiPoly<S>::constant(ScalarTraits<S>::one()));
            D = ms_mul(d, D, N);
        }
        out -= D;
        return out;
    };
    Residuals<S> r;
    r.x = block(spec.A, spec.f, spec.fbar, cand.x);
    r.y = block(spec.B, spec.g, spec.gbar, cand.y);
    r.z = block(spec.C, spec.h, spec.hbar, cand.z);
    return r;
}

template <class S>
NormalFormResult<S> construct(const SystemSpec<S>& spec) {
    const ConstructOptions& opt = spec.options;
    ScopedTolerances guard(opt.tol);
    const Layout& L = spec.layout;
    const int p = opt.order;
    SpectralData sd = analyse_spectrum(spec);

    DenseMatrix<S> SA, SB, SC, SAi, SBi, SCi, TA, TB, TC;
    if constexpr (ScalarTraits<S>::exact) {
        if (opt.balance != 1.0) throw ValidationError("exact mode does not support basis balancing");
        auto a = triangularize_exact(spec.A), b = triangularize_exact(spec.B), c = triangularize_exact(spec.C);
        SA = a.S, SAi = a.Sinv, TA = a.T;
        SB = b.S, SBi = b.Sinv, TB = b.T;
        SC = c.S, SCi = c.Sinv, TC = c.T;
    } else {
        SA = sd.A.S, SAi = sd.A.Sinv, TA = sd.A.T;
        SB = sd.B.S, SBi = sd.B.Sinv, TB = sd.B.T;
        SC = sd.C.S, SCi = sd.C.Sinv, TC = sd.C.T;
    }

    // Working system in the triangular basis: u = S u'.
    SystemSpec<S> w;
    w.layout = L;
    w.options = opt;
    w.A = TA;
    w.B = TB;
    w.C = TC;
    const auto fwd = block_linear_subs(L, SA, SB, SC);
    w.f = change_basis(spec.f, SAi, fwd, kUntruncated);
    w.g = change_basis(spec.g, SBi, fwd, kUntruncated);
    w.h = change_basis(spec.h, SCi, fwd, kUntruncated);
    if (spec.fbar) w.fbar = compose_or_zero(*spec.fbar, fwd, L, kUntruncated);
    if (spec.gbar) w.gbar = compose_or_zero(*spec.gbar, fwd, L, kUntruncated);
    if (spec.hbar) w.hbar = compose_or_zero(*spec.hbar, fwd, L, kUntruncated);

    NormalFormResult<S> cand = identity_candidate(w, p);
    std::vector<std::string> warnings;
    Engine<S> engine(w, opt, warnings);
    const int max_iter = opt.max_iter > 0 ? opt.max_iter : 40 * p;
    int iterations = 0;

    for (int o = 2; o <= p; ++o) {
        for (;;) {
            Residuals<S> R = residual(w, cand, o);
            const MultiSeries<S>* blocks[3] = {&R.x, &R.y, &R.z};
            int lowest = kUntruncated;
            for (int b = 0; b < 3; ++b)
                for (const auto& [idx, cs] : blocks[b]->terms())
                    for (const auto& c : cs)
                        if (significant(c, opt.tol)) lowest = std::min(lowest, idx.order());
            if (lowest > o) break;
            if (++iterations > max_iter)
                throw IterationCapError("iteration cap " + std::to_string(max_iter) + " reached at order " +
                                        std::to_string(o));
            MultiSeries<S>* trans[3] = {&cand.x, &cand.y, &cand.z};
            MultiSeries<S>* evol[3] = {&cand.F, &cand.GY, &cand.HZ};
            for (int b = 0; b < 3; ++b) {
                for (const auto& [idx, cs] : blocks[b]->terms()) {
                    if (idx.order() != lowest) continue;
                    for (int i = 0; i < static_cast<int>(cs.size()); ++i) {
                        const auto& a = cs[static_cast<std::size_t>(i)];
                        if (!significant(a, opt.tol)) continue;
                        Split<S> sp = engine.solve(b, i, idx, a);
                        trans[b]->add(idx, i, sp.transform);
                        evol[b]->add(idx, i, sp.evolution);
                    }
                }
            }
        }
    }

    // Back to the original basis: U' = S^{-1} U, u = S u'.
    NormalFormResult<S> res;
    res.layout = L;
    res.order = p;
    res.mode = opt.mode;
    res.mutilde = opt.mutilde;
    res.A = spec.A;
    res.B = spec.B;
    res.C = spec.C;
    const auto back = block_linear_subs(L, SAi, SBi, SCi);
    res.x = change_basis(cand.x, SA, back, p);
    res.y = change_basis(cand.y, SB, back, p);
    res.z = change_basis(cand.z, SC, back, p);
    res.F = change_basis(cand.F, SA, back, p);
    res.GY = change_basis(cand.GY, SB, back, p);
    res.HZ = change_basis(cand.HZ, SC, back, p);
    if (spec_is_real(spec)) {
        for (auto* s : {&res.x, &res.y, &res.z, &res.F, &res.GY, &res.HZ}) *s = realified(*s);
    }
    res.spectral = sd;
    res.iterations = iterations;

    Residuals<S> R = residual(spec, res, p + 1);
    res.residual_by_order.assign(static_cast<std::size_t>(p + 2), 0.0);
    for (int o = 0; o <= p + 1; ++o)
        res.residual_by_order[static_cast<std::size_t>(o)] =
            std::max({ms_order_norm(R.x, o), ms_order_norm(R.y, o), ms_order_norm(R.z, o)});
    for (int o = 0; o <= p; ++o)
        if (res.residual_by_order[static_cast<std::size_t>(o)] > opt.tol.residual) {
            std::ostringstream os;
            os << "order-" << o << " residual " << res.residual_by_order[static_cast<std::size_t>(o)]
               << " exceeds tolerance after the change back to the original basis";
            warnings.push_back(os.str());
        }
    res.warnings = std::move(warnings);

    auto bad = structure_violations(res);
    if (!bad.empty()) throw StructureViolation("normal form structure violated: " + bad.front());
    return res;
}

template <class S>
CenterManifold<S> center_manifold(const NormalFormResult<S>& res) {
    const Layout& L = res.layout;
    auto restrict = [&](const MultiSeries<S>& s) {
        MultiSeries<S> r(L, s.dim(), s.truncation());
        for (const auto& [idx, cs] : s.terms())
            if (idx.q_order(L) == 0 && idx.r_order(L) == 0) r.add(idx, cs);
        return r;
    };
    CenterManifold<S> cm;
    cm.x = restrict(res.x);
    cm.y = restrict(res.y);
    cm.z = restrict(res.z);
    cm.Fc = restrict(res.F);
    MultiSeries<S> id = ms_identity_block<S>(L, 0, L.m, res.x.truncation());
    if constexpr (ScalarTraits<S>::exact) {
        cm.graph_form = (cm.x - id).is_zero();
    } else {
        cm.graph_form = cm.x.is_zero() ? L.m == 0 : ms_max_diff(cm.x, id) <= 1e-10;
    }
    return cm;
}

template <class S>
std::vector<std::string> structure_violations(const NormalFormResult<S>& res) {
    const Layout& L = res.layout;
    std::vector<std::string> out;
    auto report = [&](const char* where, int comp, const MultiIndex& idx, const char* why) {
        out.push_back(std::string(where) + "[" + std::to_string(comp + 1) + "] term " + describe_index(idx, L) + ": " +
                      why);
    };
    auto each = [&](const MultiSeries<S>& s, const char* where, auto&& pred, const char* why) {
        for (const auto& [idx, cs] : s.terms())
            for (int i = 0; i < s.dim(); ++i)
                if (!cs[static_cast<std::size_t>(i)].is_zero() && !pred(idx)) report(where, i, idx, why);
    };
    if (res.mode == Mode::SlowFast) {
        each(res.F, "F", [&](const MultiIndex& i) { return i.q_order(L) != 1; }, "fast dependence needs two fast factors");
        each(res.GY, "GY", [&](const MultiIndex& i) { return i.q_order(L) >= 1; }, "missing a fast factor");
        each(res.HZ, "HZ", [&](const MultiIndex&) { return false; }, "slow-fast mode has no unstable block");
    } else {
        each(res.F, "F", [&](const MultiIndex& i) { return (i.q_order(L) > 0) == (i.r_order(L) > 0); },
             "stable and unstable factors must appear together");
        each(res.GY, "GY", [&](const MultiIndex& i) { return i.q_order(L) >= 1; }, "missing a stable factor");
        each(res.HZ, "HZ", [&](const MultiIndex& i) { return i.r_order(L) >= 1; }, "missing an unstable factor");
    }
    // Near identity: no constant terms and identity linear part in every block.
    auto near_identity = [&](const MultiSeries<S>& s, int begin, const char* where) {
        for (const auto& [idx, cs] : s.terms()) {
            if (idx.order() >= 2) break;
            for (int i = 0; i < s.dim(); ++i) {
                const auto& c = cs[static_cast<std::size_t>(i)];
                if (c.is_zero()) continue;
                bool ok = idx.order() == 1 && idx[begin + i] == 1;
                if (ok) {
                    QuasiPoly<S> d = c - QuasiPoly<S>::constant(ScalarTraits<S>::one());
                    if constexpr (ScalarTraits<S>::exact)
                        ok = d.is_zero();
                    else
                        ok = d.norm1() <= 1e-10;
                }
                if (!ok) report(where, i, idx, "transform is not near identity");
            }
        }
    };
    near_identity(res.x, 0, "x");
    near_identity(res.y, L.m, "y");
    near_identity(res.z, L.m + L.n, "z");
    return out;
}

template <class S>
std::vector<std::string> anticipation_on_center(const NormalFormResult<S>& res) {
    const Layout& L = res.layout;
    std::vector<std::string> out;
    auto scan = [&](const MultiSeries<S>& s, const char* where) {
        for (const auto& [idx, cs] : s.terms()) {
            if (idx.q_order(L) != 0 || idx.r_order(L) != 0) continue;
            for (int i = 0; i < s.dim(); ++i)
                if (cs[static_cast<std::size_t>(i)].flags() & kFutureBranch)
                    out.push_back(std::string(where) + "[" + std::to_string(i + 1) + "] term " + describe_index(idx, L));
        }
    };
    scan(res.F, "F");
    scan(res.x, "x");
    scan(res.y, "y");
    scan(res.z, "z");
    return out;
}

template <class S>
SystemSpec<S> time_reversed(const SystemSpec<S>& spec) {
    const Layout& L = spec.layout;
    const Layout L2{L.m, L.l, L.n};
    const auto perm = reversal_perm(L);
    SystemSpec<S> r;
    r.layout = L2;
    r.options = spec.options;
    r.A = -spec.A;
    r.B = -spec.C;
    r.C = -spec.B;
    r.f = -reversed_series(spec.f, L2, perm);
    r.g = -reversed_series(spec.h, L2, perm);
    r.h = -reversed_series(spec.g, L2, perm);
    if (spec.fbar) r.fbar = reversed_series(*spec.fbar, L2, perm);
    if (spec.hbar) r.gbar = reversed_series(*spec.hbar, L2, perm);
    if (spec.gbar) r.hbar = reversed_series(*spec.gbar, L2, perm);
    return r;
}

template <class S>
NormalFormResult<S> time_reversed(const NormalFormResult<S>& res) {
    const Layout& L = res.layout;
    const Layout L2{L.m, L.l, L.n};
    const auto perm = reversal_perm(L);
    NormalFormResult<S> r;
    r.layout = L2;
    r.order = res.order;
    r.mode = res.mode;
    r.mutilde = res.mutilde;
    r.A = -res.A;
    r.B = -res.C;
    r.C = -res.B;
    r.x = reversed_series(res.x, L2, perm);
    r.y = reversed_series(res.z, L2, perm);
    r.z = reversed_series(res.y, L2, perm);
    r.F = -reversed_series(res.F, L2, perm);
    r.GY = -reversed_series(res.HZ, L2, perm);
    r.HZ = -reversed_series(res.GY, L2, perm);
    r.residual_by_order = res.residual_by_order;
    r.warnings = res.warnings;
    r.iterations = res.iterations;
    return r;
}

template <class S>
double result_distance(const NormalFormResult<S>& a, const NormalFormResult<S>& b) {
    if (a.layout != b.layout) throw DimensionError("results have different layouts");
    return std::max({ms_max_diff(a.x, b.x), ms_max_diff(a.y, b.y), ms_max_diff(a.z, b.z), ms_max_diff(a.F, b.F),
                     ms_max_diff(a.GY, b.GY), ms_max_diff(a.HZ, b.HZ)});
}

NormalFormResult<Complex> to_floating(const NormalFormResult<GaussianRational>& res) {
    NormalFormResult<Complex> r;
    r.layout = res.layout;
    r.order = res.order;
    r.mode = res.mode;
    r.mutilde = res.mutilde;
    r.x = ms_convert<Complex>(res.x);
    r.y = ms_convert<Complex>(res.y);
    r.z = ms_convert<Complex>(res.z);
    r.A = convert_matrix<Complex>(res.A);
    r.B = convert_matrix<Complex>(res.B);
    r.C = convert_matrix<Complex>(res.C);
    r.F = ms_convert<Complex>(res.F);
    r.GY = ms_convert<Complex>(res.GY);
    r.HZ = ms_convert<Complex>(res.HZ);
    r.residual_by_order = res.residual_by_order;
    r.spectral = res.spectral;
    r.warnings = res.warnings;
    r.iterations = res.iterations;
    return r;
}

SystemSpec<Complex> to_floating(const SystemSpec<GaussianRational>& spec) {
    SystemSpec<Complex> r;
    r.layout = spec.layout;
    r.options = spec.options;
    r.A = convert_matrix<Complex>(spec.A);
    r.B = convert_matrix<Complex>(spec.B);
    r.C = convert_matrix<Complex>(spec.C);
    r.f = ms_convert<Complex>(spec.f);
    r.g = ms_convert<Complex>(spec.g);
    r.h = ms_convert<Complex>(spec.h);
    if (spec.fbar) r.fbar = ms_convert<Complex>(*spec.fbar);
    if (spec.gbar) r.gbar = ms_convert<Complex>(*spec.gbar);
    if (spec.hbar) r.hbar = ms_convert<Complex>(*spec.hbar);
    return r;
}

#define NFKIT_INSTANTIATE(S)                                                                     \
    template SpectralData analyse_spectrum<S>(const SystemSpec<S>&);                            \
    template NormalFormResult<S> identity_candidate<S>(const SystemSpec<S>&, int);              \
    template MultiSeries<S> normal_form_rhs<S>(const NormalFormResult<S>&, int);                \
    template Residuals<S> residual<S>(const SystemSpec<S>&, const NormalFormResult<S>&, int);   \
    template NormalFormResult<S> construct<S>(const SystemSpec<S>&);                            \
    template CenterManifold<S> center_manifold<S>(const NormalFormResult<S>&);                  \
    template std::vector<std::string> structure_violations<S>(const NormalFormResult<S>&);      \
    template std::vector<std::string> anticipation_on_center<S>(const NormalFormResult<S>&);    \
    template SystemSpec<S> time_reversed<S>(const SystemSpec<S>&);                              \
    template NormalFormResult<S> time_reversed<S>(const NormalFormResult<S>&);                  \
    template double result_distance<S>(const NormalFormResult<S>&, const NormalFormResult<S>&);

NFKIT_INSTANTIATE(Complex)
NFKIT_INSTANTIATE(GaussianRational)

#undef NFKIT_INSTANTIATE

bool is_real_system(const SystemSpec<Complex>& spec) { return spec_is_real(spec); }

}  // namespace nfkit
