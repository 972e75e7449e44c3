#include <doctest.h>

#include <random>

#include "nfkit/normalform.hpp"
#include "support.hpp"

using namespace nfkit;
using namespace nfkit::testing;

namespace {

using Series = MultiSeries<Complex>;

SystemSpec<Complex> from_json(const std::string& text) { return build_system<Complex>(parse_specfile(text)); }

Complex constant_coeff(const Series& s, const MultiIndex& idx, int comp) {
    const QP c = s.coeff(idx, comp);
    Complex v = 0.0;
    for (const auto& t : c.terms()) {
        REQUIRE(t.power == 0);
        REQUIRE(std::abs(t.rate) < 1e-12);
        v += t.coeff;
    }
    return v;
}

// Largest coefficient of s outside the listed (index, component) keys.
double others(const Series& s, const std::vector<std::pair<MultiIndex, int>>& keep) {
    double m = 0.0;
    for (const auto& [idx, cs] : s.terms())
        for (int i = 0; i < s.dim(); ++i) {
            bool kept = false;
            for (const auto& k : keep) kept = kept || (k.first == idx && k.second == i);
            if (!kept) m = std::max(m, cs[static_cast<std::size_t>(i)].norm1());
        }
    return m;
}

const char* kLinear = R"({"version": "nfspec-1", "blocks": {"m": 1, "n": 1, "l": 1},
  "A": [[0]], "B": [[-1]], "C": [[2]], "equations": {"x": [[]], "y": [[]], "z": [[]]},
  "options": {"order": 4}})";

}  // namespace

TEST_CASE("identity candidate residuals") {
    const SystemSpec<Complex> lin = from_json(kLinear);
    const Residuals<Complex> r0 = residual(lin, identity_candidate(lin, 3), 3);
    CHECK(r0.x.is_zero());
    CHECK(r0.y.is_zero());
    CHECK(r0.z.is_zero());

    const SystemSpec<Complex> eq = bundled_system("slow_parabola.json", 2);
    const Residuals<Complex> r = residual(eq, identity_candidate(eq, 2), 2);
    CHECK(constant_coeff(r.x, mi({1, 1}), 0) == Complex(-1.0));
    CHECK(others(r.x, {{mi({1, 1}), 0}}) == 0.0);
    CHECK(constant_coeff(r.y, mi({2, 0}), 0) == Complex(1.0));
    CHECK(constant_coeff(r.y, mi({0, 2}), 0) == Complex(-2.0));
    CHECK(others(r.y, {{mi({2, 0}), 0}, {mi({0, 2}), 0}}) == 0.0);
}

TEST_CASE("linear system gives the identity transform") {
    const NormalFormResult<Complex> res = construct(from_json(kLinear));
    CHECK(res.F.is_zero());
    CHECK(res.GY.is_zero());
    CHECK(res.HZ.is_zero());
    CHECK(others(res.x, {{mi({1, 0, 0}), 0}}) == 0.0);
    CHECK(constant_coeff(res.x, mi({1, 0, 0}), 0) == Complex(1.0));
    const CenterManifold<Complex> cm = center_manifold(res);
    CHECK(cm.graph_form);
    CHECK(cm.y.is_zero());
    CHECK(cm.z.is_zero());
    CHECK(cm.Fc.is_zero());
}

TEST_CASE("slow parabola at order 3: individual homological solves") {
    const NormalFormResult<Complex> res = construct(bundled_system("slow_parabola.json", 3));
    // Center term -X^3 goes to the evolution.
    CHECK(std::abs(constant_coeff(res.F, mi({3, 0}), 0) + 1.0) < 1e-12);
    // -XY with mu = 1 gives x += XY.
    CHECK(std::abs(constant_coeff(res.x, mi({1, 1}), 0) - 1.0) < 1e-12);
    // X^2 with mu = -1 gives y += X^2; -2Y^2 with mu = 1 gives y += 2Y^2.
    CHECK(std::abs(constant_coeff(res.y, mi({2, 0}), 0) - 1.0) < 1e-12);
    CHECK(std::abs(constant_coeff(res.y, mi({0, 2}), 0) - 2.0) < 1e-12);
    // -2X^2 Y has mu = 0 and stays in the Y evolution.
    CHECK(std::abs(constant_coeff(res.GY, mi({2, 1}), 0) + 2.0) < 1e-12);
    CHECK(structure_violations(res).empty());
}

TEST_CASE("fast coefficient rate on a center term goes to the transform") {
    const SystemSpec<Complex> spec = from_json(R"({"version": "nfspec-1", "blocks": {"m": 1, "n": 0, "l": 0},
      "A": [[0]], "B": [], "C": [], "equations": {"x": [["1*exp(-5*t)*x1^2"]], "y": [], "z": []},
      "options": {"order": 2, "mutilde": 0.2}})");
    const NormalFormResult<Complex> res = construct(spec);
    CHECK(res.F.is_zero());
    const QP c = res.x.coeff(mi({2}), 0);
    REQUIRE(c.size() == 1);
    CHECK(std::abs(c.terms()[0].rate - Complex(-5.0)) < 1e-12);
    CHECK(std::abs(c.terms()[0].coeff - Complex(-0.2)) < 1e-12);
}

TEST_CASE("slow parabola center manifold at order 5") {
    const NormalFormResult<Complex> res = construct(bundled_system("slow_parabola.json", 5));
    const CenterManifold<Complex> cm = center_manifold(res);
    CHECK(cm.graph_form);
    CHECK(std::abs(constant_coeff(cm.y, mi({2, 0}), 0) - 1.0) < 1e-10);
    CHECK(others(cm.y, {{mi({2, 0}), 0}}) < 1e-10);
    CHECK(std::abs(constant_coeff(cm.Fc, mi({3, 0}), 0) + 1.0) < 1e-10);
    CHECK(others(cm.Fc, {{mi({3, 0}), 0}}) < 1e-10);
}

TEST_CASE("Lorenz86 slow manifold in slow-fast mode") {
    const NormalFormResult<Complex> res = construct(bundled_system("lorenz86.json", 4));
    const CenterManifold<Complex> cm = center_manifold(res);
    const double b = 0.3;
    // Variables (U, V, W, X, Z); the fast block is (x, z).
    CHECK(std::abs(constant_coeff(cm.y, mi({1, 1, 0, 0, 0}), 0) + b) < 1e-9);
    CHECK(std::abs(constant_coeff(cm.y, mi({2, 0, 1, 0, 0}), 1) - b) < 1e-9);
    CHECK(std::abs(constant_coeff(cm.y, mi({0, 2, 1, 0, 0}), 1) + b) < 1e-9);
    // W' = -UV on the manifold.
    CHECK(std::abs(constant_coeff(cm.Fc, mi({1, 1, 0, 0, 0}), 2) + 1.0) < 1e-12);
    for (const auto& [idx, cs] : cm.Fc.terms())
        if (!(idx == mi({1, 1, 0, 0, 0}))) CHECK(cs[2].norm1() < 1e-12);
    CHECK(std::abs(constant_coeff(res.F, mi({1, 1, 0, 2, 0}), 2) - 0.5 * b * b) < 1e-9);
    CHECK(std::abs(constant_coeff(res.F, mi({1, 1, 0, 0, 2}), 2) - 0.5 * b * b) < 1e-9);
    CHECK(structure_violations(res).empty());
}

TEST_CASE("exact mode reproduces the floating construction") {
    SpecFile f = bundled("slow_parabola.json");
    f.options.order = 4;
    const NormalFormResult<GaussianRational> ex = construct(build_system<GaussianRational>(f));
    const ExactQP xy2 = ex.x.coeff(mi({1, 2}), 0);
    REQUIRE(xy2.size() == 1);
    CHECK(xy2.terms()[0].coeff == GaussianRational(Rational(3) / 2));
    CHECK(result_distance(to_floating(ex), construct(build_system<Complex>(f))) < 1e-12);
}

TEST_CASE("rational mode divides by the denominator") {
    const SystemSpec<Complex> spec = from_json(R"({"version": "nfspec-1", "blocks": {"m": 1, "n": 0, "l": 0},
      "A": [[0]], "B": [], "C": [], "equations": {"x": [["-1*x1^3"]], "y": [], "z": []},
      "denominators": {"x": ["1*x1"]}, "options": {"order": 5, "rational": true}})");
    REQUIRE(spec.rational());
    const NormalFormResult<Complex> res = construct(spec);
    CHECK(std::abs(constant_coeff(res.F, mi({3}), 0) + 1.0) < 1e-12);
    CHECK(std::abs(constant_coeff(res.F, mi({4}), 0) - 1.0) < 1e-12);
    CHECK(std::abs(constant_coeff(res.F, mi({5}), 0) + 1.0) < 1e-12);
}

TEST_CASE("degenerate blocks are legal") {
    const NormalFormResult<Complex> res = construct(from_json(R"({"version": "nfspec-1", "blocks": {"m": 0, "n": 1, "l": 0},
      "A": [], "B": [[-1]], "C": [], "equations": {"x": [], "y": [["1*y1^2"]], "z": []}, "options": {"order": 3}})"));
    CHECK(std::abs(constant_coeff(res.y, mi({2}), 0) + 1.0) < 1e-12);
    CHECK(res.GY.is_zero());
}

TEST_CASE("gap violations and linear nonlinearities are rejected") {
    CHECK_THROWS_AS(construct(from_json(R"({"version": "nfspec-1", "blocks": {"m": 1, "n": 1, "l": 0},
      "A": [[0.3]], "B": [[-1]], "C": [], "equations": {"x": [[]], "y": [[]], "z": []},
      "options": {"order": 3, "mutilde": 0.4}})")),
                    GapViolation);
    CHECK_THROWS(construct(from_json(R"({"version": "nfspec-1", "blocks": {"m": 1, "n": 1, "l": 0},
      "A": [[0]], "B": [[-1]], "C": [], "equations": {"x": [["2*y1"]], "y": [[]], "z": []},
      "options": {"order": 3}})")));
}

TEST_CASE("randomized runs: residual order, structure, near-identity") {
    std::mt19937_64 rng(31);
    for (int k = 0; k < 30; ++k) {
        const int p = 2 + k % 4;
        const SystemSpec<Complex> spec = random_system(rng, p);
        const NormalFormResult<Complex> res = construct(spec);
        const Residuals<Complex> r = residual(spec, res, p + 1);
        for (const Series* s : {&r.x, &r.y, &r.z})
            for (int o = 0; o <= p; ++o) CHECK(ms_order_norm(*s, o) <= 1e-10);
        CHECK(structure_violations(res).empty());
        const Layout& L = res.layout;
        const Series* blocks[3] = {&res.x, &res.y, &res.z};
        const int begin[3] = {0, L.m, L.m + L.n};
        for (int b = 0; b < 3; ++b)
            for (const auto& [idx, cs] : blocks[b]->terms()) {
                if (idx.order() >= 2) continue;
                REQUIRE(idx.order() == 1);
                for (int i = 0; i < blocks[b]->dim(); ++i) {
                    const double want = idx[begin[b] + i] == 1 ? 1.0 : 0.0;
                    CHECK(std::abs(cs[static_cast<std::size_t>(i)].evaluate(0.0) - want) < 1e-12);
                }
            }
    }
}

TEST_CASE("no anticipation on the center manifold without unstable variables") {
    std::mt19937_64 rng(32);
    RandomShape shape;
    shape.max_l = 0;
    for (int k = 0; k < 20; ++k) CHECK(anticipation_on_center(construct(random_system(rng, 2 + k % 3, shape))).empty());
}

TEST_CASE("unstable forcing of the center manifold uses the anticipating branch") {
    // z' = 2z + cos(t) x^2: the bounded z coefficient on Y = Z = 0 integrates the future.
    const NormalFormResult<Complex> res = construct(from_json(R"({"version": "nfspec-1", "blocks": {"m": 1, "n": 0, "l": 1},
      "A": [[0]], "B": [], "C": [[2]], "equations": {"x": [[]], "y": [], "z": [["1*cos(1*t)*x1^2"]]},
      "options": {"order": 2}})"));
    CHECK((res.z.coeff(mi({2, 0}), 0).flags() & kFutureBranch) != 0);
    CHECK(anticipation_on_center(res).size() == 1);
}

TEST_CASE("monotone refinement") {
    std::mt19937_64 rng(33);
    for (int k = 0; k < 10; ++k) {
        SpecFile f = random_specfile(rng, 3);
        const NormalFormResult<Complex> lo = construct(build_system<Complex>(f));
        f.options.order = 4;
        const NormalFormResult<Complex> hi = construct(build_system<Complex>(f));
        for (const auto& [a, b] : {std::pair{&lo.x, &hi.x}, {&lo.y, &hi.y}, {&lo.z, &hi.z}, {&lo.F, &hi.F},
                                   {&lo.GY, &hi.GY}, {&lo.HZ, &hi.HZ}})
            CHECK(ms_max_diff(*a, b->truncated(3)) <= 1e-12);
    }
}

TEST_CASE("time reversal commutes with construction") {
    std::mt19937_64 rng(34);
    for (int k = 0; k < 10; ++k) {
        const SystemSpec<Complex> spec = random_system(rng, 2 + k % 3);
        const NormalFormResult<Complex> a = construct(time_reversed(spec));
        const NormalFormResult<Complex> b = time_reversed(construct(spec));
        CHECK(result_distance(a, b) <= 1e-9);
    }
}

TEST_CASE("iteration cap is reported") {
    SpecFile f = bundled("slow_parabola.json");
    f.options.order = 5;
    f.options.max_iter = 1;
    CHECK_THROWS_AS(construct(build_system<Complex>(f)), IterationCapError);
}
