#include <doctest.h>

#include <cmath>

#include "nfkit/io.hpp"
#include "nfkit/verify.hpp"
#include "support.hpp"
#include "taylor_oracle.hpp"

using namespace nfkit;
using namespace nfkit::testing;

namespace {

double norm(const State& u, int begin, int count) {
    double s = 0.0;
    for (int i = begin; i < begin + count; ++i) s += u[static_cast<std::size_t>(i)] * u[static_cast<std::size_t>(i)];
    return std::sqrt(s);
}

double max_defect(const std::vector<DefectSample>& d) {
    double m = 0.0;
    for (const auto& s : d) m = std::max(m, s.defect);
    return m;
}

Series to_series(const oracle::Bivariate& b, const Layout& L) {
    Series s(L, 1, b.N);
    for (int i = 0; i <= b.N; ++i)
        for (int j = 0; i + j <= b.N; ++j)
            if (b.at(i, j) != 0.0) s.add(mi({i, j}), 0, cst(b.at(i, j)));
    return s;
}

// The closed-form conjugate pair of the slow parabola, truncated at order N.
NormalFormResult<Complex> exact_pair(int N) {
    const oracle::SlowParabola o = oracle::slow_parabola(N);
    NormalFormResult<Complex> r;
    const Layout L{1, 1, 0};
    r.layout = L;
    r.order = N;
    r.x = to_series(o.x, L);
    r.y = to_series(o.y, L);
    r.z = Series(L, 0, N);
    r.A = CMatrix(1, 1);
    r.B = CMatrix(1, 1);
    r.B(0, 0) = -1.0;
    r.C = CMatrix(0, 0);
    r.F = Series(L, 1, N);
    r.F.add(mi({3, 0}), 0, cst(-1.0));
    r.GY = to_series(o.gy, L);
    r.HZ = Series(L, 0, N);
    r.spectral.A = triangularize(r.A);
    r.spectral.B = triangularize(r.B);
    r.spectral.C = triangularize(r.C);
    r.spectral.smoothness = N + 1;
    spectral_bounds(r.spectral);
    return r;
}

const VectorField decay = [](double, const State& u, State& du) { du[0] = -u[0]; };

double rk4_error(double h) {
    const Trajectory tr = integrate(decay, {1.0}, 0.0, 1.0, h);
    return std::abs(tr.states.back()[0] - std::exp(-1.0));
}

}  // namespace

TEST_CASE("integrate: scalar exponential and constant field") {
    const Trajectory tr = integrate(decay, {1.0}, 0.0, 1.0, 1e-3);
    CHECK(tr.times.back() == doctest::Approx(1.0));
    CHECK(std::abs(tr.states.back()[0] - std::exp(-1.0)) <= 1e-10);
    const VectorField zero = [](double, const State&, State& du) { du.assign(du.size(), 0.0); };
    const Trajectory c = integrate(zero, {0.3, -2.0}, 0.0, 5.0, 0.1);
    for (const auto& s : c.states) {
        CHECK(s[0] == 0.3);
        CHECK(s[1] == -2.0);
    }
    for (std::size_t k = 1; k < c.times.size(); ++k) CHECK(c.times[k] - c.times[k - 1] == doctest::Approx(0.1));
}

TEST_CASE("integrator is fourth order") {
    for (double h : {0.2, 0.1, 0.05}) {
        const double ratio = rk4_error(h) / rk4_error(h / 2);
        CHECK(ratio >= 12.0);
        CHECK(ratio <= 20.0);
    }
}

TEST_CASE("exit and blow-up are recorded") {
    const VectorField grow = [](double, const State& u, State& du) { du[0] = u[0]; };
    const Trajectory a = integrate(grow, {0.1}, 0.0, 10.0, 1e-2, ball_predicate(1.0));
    REQUIRE(a.exit_time);
    CHECK(*a.exit_time == doctest::Approx(std::log(10.0)).epsilon(1e-2));
    for (const auto& s : a.states) CHECK(std::abs(s[0]) <= 1.0);
    const VectorField cube = [](double, const State& u, State& du) { du[0] = u[0] * u[0] * u[0]; };
    const Trajectory b = integrate(cube, {10.0}, 0.0, 1.0, 1e-2);
    REQUIRE(b.blowup_time);
    for (const auto& s : b.states) CHECK(std::isfinite(s[0]));
}

TEST_CASE("slow parabola trajectories approach y = x^2") {
    const SystemSpec<Complex> spec = bundled_system("slow_parabola.json", 3);
    const Trajectory tr = integrate(original_field(spec), {0.1, 0.5}, 0.0, 10.0, 1e-3);
    const State& u = tr.states.back();
    CHECK(std::abs(u[1] - u[0] * u[0]) < 1e-3);
}

TEST_CASE("conjugacy defect: identity pair and the closed-form pair") {
    const SystemSpec<Complex> lin = build_system<Complex>(parse_specfile(R"({"version": "nfspec-1",
      "blocks": {"m": 1, "n": 1, "l": 0}, "A": [[0]], "B": [[-1]], "C": [],
      "equations": {"x": [[]], "y": [[]], "z": []}, "options": {"order": 3}})"));
    CHECK(max_defect(conjugacy_defect(lin, construct(lin), {0.3, 0.2}, 0.0, 5.0, 1e-2)) == 0.0);

    const SystemSpec<Complex> eq = bundled_system("slow_parabola.json", 3);
    const double d6 = max_defect(conjugacy_defect(eq, exact_pair(6), {0.2, 0.1}, 0.0, 5.0, 1e-3));
    const double d12 = max_defect(conjugacy_defect(eq, exact_pair(12), {0.2, 0.1}, 0.0, 5.0, 1e-3));
    CHECK(d12 < d6);
    CHECK(d12 < 1e-6);
}

TEST_CASE("conjugacy defect shrinks with the order") {
    const SystemSpec<Complex> s3 = bundled_system("slow_parabola.json", 3);
    const SystemSpec<Complex> s5 = bundled_system("slow_parabola.json", 5);
    const double d3 = max_defect(conjugacy_defect(s3, construct(s3), {0.2, 0.1}, 0.0, 5.0, 1e-3));
    const double d5 = max_defect(conjugacy_defect(s5, construct(s5), {0.2, 0.1}, 0.0, 5.0, 1e-3));
    CHECK(d5 < d3);
}

TEST_CASE("order scaling") {
    const State dir{1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)};
    const std::vector<double> eps{0.05, 0.1, 0.2};
    const SystemSpec<Complex> s3 = bundled_system("slow_parabola.json", 3);
    const OrderScaling o3 = order_scaling(s3, construct(s3), dir, eps, 0.0, 2.0, 1e-3);
    CHECK(o3.slope >= 3.6);
    CHECK(o3.slope <= 4.4);
    const SystemSpec<Complex> s5 = bundled_system("slow_parabola.json", 5);
    const OrderScaling o5 = order_scaling(s5, construct(s5), dir, eps, 0.0, 2.0, 1e-3);
    CHECK(o5.slope >= 5.5);
    CHECK(o5.slope <= 6.5);

    const SystemSpec<Complex> lin = build_system<Complex>(parse_specfile(R"({"version": "nfspec-1",
      "blocks": {"m": 1, "n": 1, "l": 0}, "A": [[0]], "B": [[-1]], "C": [],
      "equations": {"x": [[]], "y": [[]], "z": []}, "options": {"order": 3}})"));
    CHECK(order_scaling(lin, construct(lin), dir, eps, 0.0, 2.0, 1e-3).floor);
    CHECK_THROWS_AS(order_scaling(s3, construct(s3), dir, {0.1, 0.2}, 0.0, 2.0, 1e-3), NumericalError);
}

TEST_CASE("emergence on the slow parabola") {
    const NormalFormResult<Complex> res = construct(bundled_system("slow_parabola.json", 5));
    const double r = certified_radius(res, 0.5, 0.0, 20.0);
    const EmergenceFit fit = emergence_check(res, {0.1, 0.4}, 0.5, 0.0, 20.0, r, 1e-3);
    CHECK(fit.pass);
    CHECK(fit.violations == 0);
    CHECK(fit.rate >= 0.5);

    const CompiledTransform T(res);
    const EmergenceFit on = emergence_check(res, T.map(0.0, {0.2, 0.0}), 0.5, 0.0, 10.0, r, 1e-3);
    CHECK(on.max_ratio == 0.0);
    CHECK(on.pass);
}

TEST_CASE("cylinder: stable decay at rate mu inside X1^2 + X2^2 < 1 - mu") {
    const NormalFormResult<Complex> res = construct(bundled_system("cylinder4d.json", 3));
    const VectorField nf = normal_form_field(res);
    const double mu = 0.5;
    const State U0{0.5 / std::sqrt(2.0), 0.5 / std::sqrt(2.0), 0.3, 0.0};
    const Trajectory tr = integrate(nf, U0, 0.0, 20.0, 1e-3);
    int inside = 0;
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        const State& U = tr.states[k];
        if (U[0] * U[0] + U[1] * U[1] >= 1.0 - mu) continue;
        ++inside;
        CHECK(norm(U, 2, 2) <= 0.3 * std::exp(-mu * tr.times[k]) * (1.0 + 1e-9));
    }
    CHECK(inside == static_cast<int>(tr.times.size()));
}

TEST_CASE("companion trajectory solves the reduced dynamics") {
    const NormalFormResult<Complex> res = construct(bundled_system("slow_parabola.json", 5));
    const Trajectory full = integrate(normal_form_field(res), {0.3, 0.0}, 0.0, 10.0, 1e-3);
    const VectorField fc = [](double, const State& u, State& du) { du[0] = -u[0] * u[0] * u[0]; };
    const Trajectory red = integrate(fc, {0.3}, 0.0, 10.0, 1e-3);
    REQUIRE(full.times.size() == red.times.size());
    for (std::size_t k = 0; k < full.times.size(); ++k) {
        CHECK(full.states[k][1] == 0.0);
        CHECK(std::abs(full.states[k][0] - red.states[k][0]) <= 1e-12);
    }
}

TEST_CASE("trichotomy sampling") {
    const NormalFormResult<Complex> diag = construct(build_system<Complex>(parse_specfile(R"({"version": "nfspec-1",
      "blocks": {"m": 1, "n": 1, "l": 1}, "A": [[0]], "B": [[-1]], "C": [[1]],
      "equations": {"x": [[]], "y": [[]], "z": [[]]}, "options": {"order": 2}})")));
    CHECK(trichotomy_check(diag, 20, 0.5, 1.0, 0.0, 5.0, 1e-2, 1).violations() == 0);

    const NormalFormResult<Complex> res = construct(bundled_system("slow_parabola.json", 5));
    CHECK(trichotomy_check(res, 20, 0.5, 0.2, 0.0, 20.0, 1e-3, 2).violations() == 0);

    // y' = -y + 2x^2 y grows once x^2 > 1/2: a ball of radius 1.5 is far outside the domain.
    const NormalFormResult<Complex> bad = construct(build_system<Complex>(parse_specfile(R"({"version": "nfspec-1",
      "blocks": {"m": 1, "n": 1, "l": 0}, "A": [[0]], "B": [[-1]], "C": [],
      "equations": {"x": [[]], "y": [["2*x1^2*y1"]], "z": []}, "options": {"order": 3}})")));
    CHECK(gap_margin(bad, 0.5, 1.5, 0.0, 10.0) < 0.0);
    CHECK(trichotomy_check(bad, 20, 0.5, 1.5, 0.0, 10.0, 1e-2, 3).y_violations > 0);
}

TEST_CASE("defects survive a serialization round trip bit for bit") {
    const SpecFile f = bundled("slow_parabola.json");
    const SystemSpec<Complex> spec = build_system<Complex>(f);
    const NormalFormResult<Complex> res = construct(spec);
    const ojson j = ojson::parse(result_to_json(res, variable_table(f)).dump());
    const NormalFormResult<Complex> back = result_from_json(j);
    const auto a = conjugacy_defect(spec, res, {0.2, 0.1}, 0.0, 2.0, 1e-3);
    const auto b = conjugacy_defect(spec, back, {0.2, 0.1}, 0.0, 2.0, 1e-3);
    REQUIRE(a.size() == b.size());
    for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].defect == b[k].defect);
}

TEST_CASE("run_verification on the bundled systems") {
    for (const char* name : {"slow_parabola.json", "cylinder4d.json", "lorenz86.json"}) {
        const SpecFile f = bundled(name);
        const SystemSpec<Complex> spec = build_system<Complex>(f);
        const NormalFormResult<Complex> res = construct(spec);
        VerifyOptions vo;
        vo.mu = 0.5;
        vo.t1 = 20.0;
        const VerificationReport rep = run_verification(spec, res, vo);
        CHECK_MESSAGE(rep.pass, name);
    }
    const SystemSpec<Complex> eq = bundled_system("slow_parabola.json", 3);
    VerifyOptions vo;
    vo.mu = 0.0;
    CHECK_THROWS_AS(run_verification(eq, construct(eq), vo), ValidationError);
}
