#pragma once

// Truncated multinomial series in (X, Y, Z) with quasipolynomial coefficients.

#include <cstdint>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "nfkit/matrix.hpp"
#include "nfkit/quasipoly.hpp"

namespace nfkit {

// Block sizes: m center (or slow), n stable (or fast), l unstable variables.
struct Layout {
    int m = 0;
    int n = 0;
    int l = 0;
    int vars() const { return m + n + l; }
    friend bool operator==(const Layout& a, const Layout& b) { return a.m == b.m && a.n == b.n && a.l == b.l; }
    friend bool operator!=(const Layout& a, const Layout& b) { return !(a == b); }
};

inline constexpr int kUntruncated = 1 << 20;

class MultiIndex {
public:
    MultiIndex() = default;
    explicit MultiIndex(int nvars) : e_(static_cast<std::size_t>(nvars), 0) {}
    explicit MultiIndex(std::vector<std::int16_t> e) : e_(std::move(e)) {}

    static MultiIndex unit(int nvars, int v) {
        MultiIndex u(nvars);
        u.e_[static_cast<std::size_t>(v)] = 1;
        return u;
    }

    int size() const { return static_cast<int>(e_.size()); }
    int operator[](int v) const { return e_[static_cast<std::size_t>(v)]; }
    void set(int v, int k) { e_[static_cast<std::size_t>(v)] = static_cast<std::int16_t>(k); }

    int order() const {
        int s = 0;
        for (auto k : e_) s += k;
        return s;
    }
    int order_in(int begin, int end) const {
        int s = 0;
        for (int v = begin; v < end; ++v) s += e_[static_cast<std::size_t>(v)];
        return s;
    }
    // Block totals |p|, |q|, |r|.
    int p_order(const Layout& L) const { return order_in(0, L.m); }
    int q_order(const Layout& L) const { return order_in(L.m, L.m + L.n); }
    int r_order(const Layout& L) const { return order_in(L.m + L.n, L.vars()); }

    friend MultiIndex operator+(const MultiIndex& a, const MultiIndex& b) {
        if (a.size() != b.size()) throw DimensionError("multi-index size mismatch");
        MultiIndex c = a;
        for (std::size_t i = 0; i < c.e_.size(); ++i) c.e_[i] = static_cast<std::int16_t>(c.e_[i] + b.e_[i]);
        return c;
    }

    friend bool operator==(const MultiIndex& a, const MultiIndex& b) { return a.e_ == b.e_; }

    const std::vector<std::int16_t>& exponents() const { return e_; }

private:
    std::vector<std::int16_t> e_;
};

// Graded-lexicographic: lower total order first, then larger leading exponents first.
struct GradedLex {
    bool operator()(const MultiIndex& a, const MultiIndex& b) const {
        int oa = a.order(), ob = b.order();
        if (oa != ob) return oa < ob;
        return a.exponents() > b.exponents();
    }
};

template <class S>
class MultiSeries {
public:
    using Coeff = QuasiPoly<S>;
    using Coeffs = std::vector<Coeff>;
    using TermMap = std::map<MultiIndex, Coeffs, GradedLex>;

    MultiSeries() = default;
    MultiSeries(Layout L, int dim, int N = kUntruncated) : layout_(L), dim_(dim), order_(N) {}

    const Layout& layout() const { return layout_; }
    int vars() const { return layout_.vars(); }
    int dim() const { return dim_; }
    int truncation() const { return order_; }
    const TermMap& terms() const { return terms_; }
    bool is_zero() const { return terms_.empty(); }

    // Accumulates c into component comp at idx; indices above the truncation are dropped.
    void add(const MultiIndex& idx, int comp, const Coeff& c) {
        if (idx.size() != vars()) throw DimensionError("multi-index does not match series layout");
        if (comp < 0 || comp >= dim_) throw DimensionError("component index out of range");
        if (idx.order() > order_ || c.is_zero()) return;
        auto it = terms_.find(idx);
        if (it == terms_.end()) it = terms_.emplace(idx, Coeffs(static_cast<std::size_t>(dim_))).first;
        it->second[static_cast<std::size_t>(comp)] += c;
        erase_if_zero(it);
    }

    void add(const MultiIndex& idx, const Coeffs& cs) {
        for (int i = 0; i < dim_; ++i) add(idx, i, cs[static_cast<std::size_t>(i)]);
    }

    Coeff coeff(const MultiIndex& idx, int comp) const {
        auto it = terms_.find(idx);
        if (it == terms_.end()) return {};
        return it->second[static_cast<std::size_t>(comp)];
    }

    MultiSeries component(int i) const {
        MultiSeries r(layout_, 1, order_);
        for (const auto& [idx, cs] : terms_)
            if (!cs[static_cast<std::size_t>(i)].is_zero()) r.terms_[idx] = Coeffs{cs[static_cast<std::size_t>(i)]};
        return r;
    }

    MultiSeries truncated(int N) const {
        MultiSeries r(layout_, dim_, N);
        for (const auto& [idx, cs] : terms_)
            if (idx.order() <= N) r.terms_.emplace(idx, cs);
        return r;
    }

    MultiSeries& operator+=(const MultiSeries& o) {
        check_compatible(o);
        for (const auto& [idx, cs] : o.terms_) add(idx, cs);
        return *this;
    }
    MultiSeries& operator-=(const MultiSeries& o) {
        check_compatible(o);
        for (const auto& [idx, cs] : o.terms_)
            for (int i = 0; i < dim_; ++i) add(idx, i, -cs[static_cast<std::size_t>(i)]);
        return *this;
    }
    friend MultiSeries operator+(MultiSeries a, const MultiSeries& b) { return a += b; }
    friend MultiSeries operator-(MultiSeries a, const MultiSeries& b) { return a -= b; }
    friend MultiSeries operator-(const MultiSeries& a) {
        MultiSeries r(a.layout_, a.dim_, a.order_);
        for (const auto& [idx, cs] : a.terms_) {
            Coeffs n;
            n.reserve(cs.size());
            for (const auto& c : cs) n.push_back(-c);
            r.terms_.emplace(idx, std::move(n));
        }
        return r;
    }

    // Scales every coefficient by a quasipolynomial.
    MultiSeries scaled(const Coeff& s) const {
        MultiSeries r(layout_, dim_, order_);
        for (const auto& [idx, cs] : terms_)
            for (int i = 0; i < dim_; ++i) r.add(idx, i, cs[static_cast<std::size_t>(i)] * s);
        return r;
    }

    // Applies fn to every coefficient; zero results are removed.
    MultiSeries map_coeffs(const std::function<Coeff(const Coeff&)>& fn) const {
        MultiSeries r(layout_, dim_, order_);
        for (const auto& [idx, cs] : terms_)
            for (int i = 0; i < dim_; ++i) r.add(idx, i, fn(cs[static_cast<std::size_t>(i)]));
        return r;
    }

    // Lowest order present; kUntruncated for the zero series.
    int min_order() const { return terms_.empty() ? kUntruncated : terms_.begin()->first.order(); }
    int max_order() const { return terms_.empty() ? -1 : terms_.rbegin()->first.order(); }

    void set_truncation(int N) { *this = truncated(N); }

    // Raw access for algorithms that build term maps directly.
    TermMap& mutable_terms() { return terms_; }

private:
    void erase_if_zero(typename TermMap::iterator it) {
        for (const auto& c : it->second)
            if (!c.is_zero()) return;
        terms_.erase(it);
    }
    void check_compatible(const MultiSeries& o) const {
        if (o.layout_ != layout_ || o.dim_ != dim_) throw DimensionError("series shapes differ");
    }

    Layout layout_{};
    int dim_ = 0;
    int order_ = kUntruncated;
    TermMap terms_;
};

template <class S>
struct LowTerm {
    int component;
    MultiIndex index;
    QuasiPoly<S> coeff;
};

// ---- constructors ----

// The single variable U_v as a scalar series.
template <class S>
MultiSeries<S> ms_variable(const Layout& L, int v, int N = kUntruncated) {
    MultiSeries<S> r(L, 1, N);
    r.add(MultiIndex::unit(L.vars(), v), 0, QuasiPoly<S>::constant(ScalarTraits<S>::one()));
    return r;
}

// Identity embedding of block variables [begin, begin+count) as a count-dimensional series.
template <class S>
MultiSeries<S> ms_identity_block(const Layout& L, int begin, int count, int N = kUntruncated) {
    MultiSeries<S> r(L, count, N);
    for (int i = 0; i < count; ++i)
        r.add(MultiIndex::unit(L.vars(), begin + i), i, QuasiPoly<S>::constant(ScalarTraits<S>::one()));
    return r;
}

// Linear series (M U_block)_i over variables [begin, begin + M.cols()).
template <class S>
MultiSeries<S> ms_linear_block(const Layout& L, const DenseMatrix<S>& M, int begin, int N = kUntruncated) {
    MultiSeries<S> r(L, M.rows(), N);
    for (int i = 0; i < M.rows(); ++i)
        for (int j = 0; j < M.cols(); ++j)
            if (!ScalarTraits<S>::is_zero(M(i, j)))
                r.add(MultiIndex::unit(L.vars(), begin + j), i, QuasiPoly<S>::constant(M(i, j)));
    return r;
}

// Stacks series with equal layouts into one series of summed dimension.
template <class S>
MultiSeries<S> ms_stack(const Layout& L, const std::vector<const MultiSeries<S>*>& parts, int N) {
    int dim = 0;
    for (const auto* p : parts) dim += p->dim();
    MultiSeries<S> r(L, dim, N);
    int off = 0;
    for (const auto* p : parts) {
        if (p->layout() != L) throw DimensionError("stacked series layouts differ");
        for (const auto& [idx, cs] : p->terms())
            for (int i = 0; i < p->dim(); ++i) r.add(idx, off + i, cs[static_cast<std::size_t>(i)]);
        off += p->dim();
    }
    return r;
}

// ---- algebra ----

// Product truncated at N: scalar * vector (either side) or elementwise for equal dims.
template <class S>
MultiSeries<S> ms_mul(const MultiSeries<S>& a, const MultiSeries<S>& b, int N) {
    if (a.layout() != b.layout()) throw DimensionError("series layouts differ");
    const bool a_scalar = a.dim() == 1;
    const bool b_scalar = b.dim() == 1;
    if (!a_scalar && !b_scalar && a.dim() != b.dim()) throw DimensionError("incompatible series dimensions");
    const int dim = a_scalar ? b.dim() : a.dim();
    MultiSeries<S> r(a.layout(), dim, N);
    auto& out = r.mutable_terms();
    const int bmin = b.min_order();
    for (const auto& [ia, ca] : a.terms()) {
        const int oa = ia.order();
        if (oa + bmin > N) break;
        for (const auto& [ib, cb] : b.terms()) {
            if (oa + ib.order() > N) break;
            MultiIndex idx = ia + ib;
            auto it = out.find(idx);
            if (it == out.end()) it = out.emplace(idx, std::vector<QuasiPoly<S>>(static_cast<std::size_t>(dim))).first;
            for (int i = 0; i < dim; ++i) {
                const auto& x = ca[a_scalar ? 0 : static_cast<std::size_t>(i)];
                const auto& y = cb[b_scalar ? 0 : static_cast<std::size_t>(i)];
                if (x.is_zero() || y.is_zero()) continue;
                it->second[static_cast<std::size_t>(i)] += x * y;
            }
        }
    }
    for (auto it = out.begin(); it != out.end();) {
        bool zero = true;
        for (const auto& c : it->second) zero = zero && c.is_zero();
        it = zero ? out.erase(it) : std::next(it);
    }
    return r;
}

// out_i = sum_j M_ij s_j
template <class S>
MultiSeries<S> ms_apply_matrix(const DenseMatrix<S>& M, const MultiSeries<S>& s) {
    if (M.cols() != s.dim()) throw DimensionError("matrix does not match series dimension");
    MultiSeries<S> r(s.layout(), M.rows(), s.truncation());
    for (const auto& [idx, cs] : s.terms())
        for (int i = 0; i < M.rows(); ++i)
            for (int j = 0; j < M.cols(); ++j)
                if (!ScalarTraits<S>::is_zero(M(i, j)) && !cs[static_cast<std::size_t>(j)].is_zero())
                    r.add(idx, i, cs[static_cast<std::size_t>(j)] * M(i, j));
    return r;
}

// Partial derivative with respect to variable v, by exponent decrement.
template <class S>
MultiSeries<S> ms_derivative(const MultiSeries<S>& a, int v) {
    MultiSeries<S> r(a.layout(), a.dim(), a.truncation());
    for (const auto& [idx, cs] : a.terms()) {
        int k = idx[v];
        if (k == 0) continue;
        MultiIndex d = idx;
        d.set(v, k - 1);
        const S f = ScalarTraits<S>::from_int(k);
        for (int i = 0; i < a.dim(); ++i)
            if (!cs[static_cast<std::size_t>(i)].is_zero()) r.add(d, i, cs[static_cast<std::size_t>(i)] * f);
    }
    return r;
}

// Coefficient-wise time derivative.
template <class S>
MultiSeries<S> ms_ddt(const MultiSeries<S>& a) {
    return a.map_coeffs([](const QuasiPoly<S>& c) { return qp_ddt(c); });
}

// f(t, subs_0, ..., subs_{V-1}) truncated at N. Each substitution is a scalar series
// without constant term.
template <class S>
MultiSeries<S> ms_compose(const MultiSeries<S>& f, const std::vector<MultiSeries<S>>& subs, int N) {
    if (static_cast<int>(subs.size()) != f.vars()) throw DimensionError("one substitution per variable required");
    if (subs.empty()) return f.truncated(N);
    const Layout& out_layout = subs.front().layout();
    std::vector<int> lo(subs.size());
    for (std::size_t v = 0; v < subs.size(); ++v) {
        if (subs[v].dim() != 1) throw DimensionError("substitutions must be scalar series");
        if (subs[v].layout() != out_layout) throw DimensionError("substitution layouts differ");
        lo[v] = subs[v].min_order();
        if (lo[v] < 1) throw DimensionError("substitution has a constant term");
    }
    // powers[v][k] = subs[v]^k truncated at N
    std::vector<std::vector<MultiSeries<S>>> powers(subs.size());
    auto power = [&](std::size_t v, int k) -> const MultiSeries<S>& {
        auto& pv = powers[v];
        if (pv.empty()) {
            MultiSeries<S> one(out_layout, 1, N);
            one.add(MultiIndex(out_layout.vars()), 0, QuasiPoly<S>::constant(ScalarTraits<S>::one()));
            pv.push_back(std::move(one));
        }
        while (static_cast<int>(pv.size()) <= k) pv.push_back(ms_mul(pv.back(), subs[v], N));
        return pv[static_cast<std::size_t>(k)];
    };
    MultiSeries<S> r(out_layout, f.dim(), N);
    for (const auto& [idx, cs] : f.terms()) {
        long lowest = 0;
        for (std::size_t v = 0; v < subs.size(); ++v)
            if (idx[static_cast<int>(v)] > 0) {
                if (lo[v] >= kUntruncated) { lowest = kUntruncated; break; }
                lowest += static_cast<long>(idx[static_cast<int>(v)]) * lo[v];
            }
        if (lowest > N) continue;
        MultiSeries<S> prod;
        bool first = true;
        for (std::size_t v = 0; v < subs.size(); ++v) {
            int k = idx[static_cast<int>(v)];
            if (k == 0) continue;
            if (first) {
                prod = power(v, k);
                first = false;
            } else {
                prod = ms_mul(prod, power(v, k), N);
            }
        }
        if (first) prod = power(0, 0);
        for (const auto& [pi, pc] : prod.terms())
            for (int i = 0; i < f.dim(); ++i)
                if (!cs[static_cast<std::size_t>(i)].is_zero()) r.add(pi, i, pc[0] * cs[static_cast<std::size_t>(i)]);
    }
    return r;
}

// Block form: substitutions given as an m-, n- and l-dimensional series.
template <class S>
MultiSeries<S> ms_compose(const MultiSeries<S>& f, const MultiSeries<S>& sx, const MultiSeries<S>& sy,
                          const MultiSeries<S>& sz, int N) {
    const Layout& L = f.layout();
    if (sx.dim() != L.m || sy.dim() != L.n || sz.dim() != L.l)
        throw DimensionError("block substitutions do not match the series layout");
    std::vector<MultiSeries<S>> subs;
    for (int i = 0; i < L.m; ++i) subs.push_back(sx.component(i));
    for (int i = 0; i < L.n; ++i) subs.push_back(sy.component(i));
    for (int i = 0; i < L.l; ++i) subs.push_back(sz.component(i));
    return ms_compose(f, subs, N);
}

// w_t + sum_v (dw/dU_v) rhs_v, with rhs given as one series of dimension vars().
template <class S>
MultiSeries<S> ms_flow_derivative(const MultiSeries<S>& w, const MultiSeries<S>& rhs, int N) {
    if (rhs.dim() != w.vars()) throw DimensionError("flow right-hand side needs one component per variable");
    MultiSeries<S> r = ms_ddt(w).truncated(N);
    for (int v = 0; v < w.vars(); ++v) {
        MultiSeries<S> dv = ms_derivative(w, v);
        if (dv.is_zero()) continue;
        MultiSeries<S> rv = rhs.component(v);
        if (rv.is_zero()) continue;
        r += ms_mul(rv, dv, N);
    }
    return r;
}

template <class S>
MultiSeries<S> ms_flow_derivative(const MultiSeries<S>& w, const MultiSeries<S>& rhsX, const MultiSeries<S>& rhsY,
                                  const MultiSeries<S>& rhsZ, int N) {
    return ms_flow_derivative(w, ms_stack<S>(w.layout(), {&rhsX, &rhsY, &rhsZ}, N), N);
}

template <class S>
std::pair<int, std::vector<LowTerm<S>>> ms_lowest_terms(const MultiSeries<S>& a) {
    if (a.is_zero()) throw ZeroSeriesError();
    const int o = a.min_order();
    std::vector<LowTerm<S>> out;
    for (const auto& [idx, cs] : a.terms()) {
        if (idx.order() != o) break;
        for (int i = 0; i < a.dim(); ++i)
            if (!cs[static_cast<std::size_t>(i)].is_zero()) out.push_back({i, idx, cs[static_cast<std::size_t>(i)]});
    }
    return {o, std::move(out)};
}

// Largest coefficient norm among terms of exactly order o (0 if none).
template <class S>
double ms_order_norm(const MultiSeries<S>& a, int o) {
    double best = 0.0;
    for (const auto& [idx, cs] : a.terms()) {
        if (idx.order() != o) continue;
        for (const auto& c : cs) best = std::max(best, c.norm1());
    }
    return best;
}

// Largest coefficient norm of a - b.
template <class S>
double ms_max_diff(const MultiSeries<S>& a, const MultiSeries<S>& b) {
    MultiSeries<S> d = a - b;
    double best = 0.0;
    for (const auto& [idx, cs] : d.terms())
        for (const auto& c : cs) best = std::max(best, c.norm1());
    return best;
}

template <class S>
std::vector<Complex> ms_evaluate(const MultiSeries<S>& a, double t, const std::vector<double>& U) {
    if (static_cast<int>(U.size()) != a.vars()) throw DimensionError("state size does not match series");
    std::vector<Complex> out(static_cast<std::size_t>(a.dim()));
    for (const auto& [idx, cs] : a.terms()) {
        double mono = 1.0;
        for (int v = 0; v < a.vars(); ++v)
            if (idx[v] > 0) mono *= std::pow(U[static_cast<std::size_t>(v)], idx[v]);
        for (int i = 0; i < a.dim(); ++i)
            if (!cs[static_cast<std::size_t>(i)].is_zero()) out[static_cast<std::size_t>(i)] += cs[static_cast<std::size_t>(i)].evaluate(t) * mono;
    }
    return out;
}

// Reorders variables: new variable perm[v] takes the exponent of old variable v.
template <class S>
MultiSeries<S> ms_permute_vars(const MultiSeries<S>& a, const Layout& new_layout, const std::vector<int>& perm) {
    MultiSeries<S> r(new_layout, a.dim(), a.truncation());
    for (const auto& [idx, cs] : a.terms()) {
        MultiIndex j(new_layout.vars());
        for (int v = 0; v < idx.size(); ++v) j.set(perm[static_cast<std::size_t>(v)], idx[v]);
        r.add(j, cs);
    }
    return r;
}

template <class To, class From>
MultiSeries<To> ms_convert(const MultiSeries<From>& a) {
    MultiSeries<To> r(a.layout(), a.dim(), a.truncation());
    for (const auto& [idx, cs] : a.terms())
        for (int i = 0; i < a.dim(); ++i) r.add(idx, i, qp_convert<To>(cs[static_cast<std::size_t>(i)]));
    return r;
}

using Series = MultiSeries<Complex>;
using ExactSeries = MultiSeries<GaussianRational>;

}  // namespace nfkit
