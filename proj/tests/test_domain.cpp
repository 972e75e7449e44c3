#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "nfkit/domain.hpp"
#include "support.hpp"

using namespace nfkit;
using namespace nfkit::testing;

namespace {

NormalFormResult<Complex> from_json(const std::string& text) {
    return construct(build_system<Complex>(parse_specfile(text)));
}

const NormalFormResult<Complex>& parabola() {
    static const NormalFormResult<Complex> res = construct(bundled_system("slow_parabola.json", 6));
    return res;
}

// Normal form y' = -y + (c1 X^2 + c2 X^3) y, already conjugate to itself.
NormalFormResult<Complex> cubic_g(double c1, double c2) {
    std::ostringstream os;
    os << R"({"version": "nfspec-1", "blocks": {"m": 1, "n": 1, "l": 0}, "A": [[0]], "B": [[-1]], "C": [],
      "equations": {"x": [[]], "y": [[")"
       << c1 << R"(*x1^2*y1", ")" << c2 << R"(*x1^3*y1"]], "z": []}, "options": {"order": 4}})";
    return from_json(os.str());
}

}  // namespace

TEST_CASE("linear system: margin and unbounded radius") {
    const NormalFormResult<Complex> res = from_json(R"({"version": "nfspec-1", "blocks": {"m": 1, "n": 1, "l": 0},
      "A": [[0]], "B": [[-1.5]], "C": [], "equations": {"x": [[]], "y": [[]], "z": []}, "options": {"order": 3}})");
    for (double mu : {0.2, 0.7, 1.2}) {
        CHECK(gap_margin(res, mu, 10.0, 0.0, 5.0) == doctest::Approx(1.5 - mu));
        CHECK(ball_radius(res, mu, 0.0, 5.0) == kUnbounded);
    }
}

TEST_CASE("parabola gap margin sign") {
    CHECK(gap_margin(parabola(), 0.5, 0.2, 0.0, 40.0) > 0.0);
    CHECK(gap_margin(parabola(), 0.99, 0.5, 0.0, 40.0) < 0.0);
}

TEST_CASE("parabola ball radius brackets the closed form") {
    const double r = ball_radius(parabola(), 0.5, 0.0, 40.0);
    CHECK(r >= 0.20);
    CHECK(r <= 0.35);
    CHECK(gap_margin(parabola(), 0.5, r, 0.0, 40.0) >= 0.0);
}

TEST_CASE("cubic G radius matches an independent bisection") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 5; ++trial) {
        const double c1 = std::round(u(rng) * 100) / 100, c2 = std::round(u(rng) * 100) / 100;
        const NormalFormResult<Complex> res = cubic_g(c1, c2);
        const double mu = 0.4;
        const double D = 1.0 - mu;
        // r <= D^2 / (2 G'max(r)) with G'max(r) = (|c1| r^2 + |c2| r^3)(2|c1| r + 3|c2| r^2).
        auto fine = [&](double r) {
            const double a = std::abs(c1), b = std::abs(c2);
            return r * 2.0 * (a * r * r + b * r * r * r) * (2.0 * a * r + 3.0 * b * r * r) <= D * D;
        };
        double lo = 0.0, hi = 1.0;
        while (fine(hi)) hi *= 2.0;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (fine(mid) ? lo : hi) = mid;
        }
        CHECK(ball_radius(res, mu, 0.0, 10.0) == doctest::Approx(lo).epsilon(1e-5));
    }
}

TEST_CASE("trichotomy constants") {
    const TrichotomyConstants k = trichotomy_constants(parabola());
    CHECK(k.condP == 1.0);
    CHECK(k.condQ == 1.0);
    CHECK(k.condR == 1.0);
    const NormalFormResult<Complex> cyl = construct(bundled_system("cylinder4d.json", 3));
    CHECK(trichotomy_constants(cyl).condQ == doctest::Approx(1.0).epsilon(1e-12));
    for (double s : {0.5, 0.25}) {
        SpecFile f = parse_specfile(R"({"version": "nfspec-1", "blocks": {"m": 1, "n": 2, "l": 0},
          "A": [[0]], "B": [[-1, 1], [0, -1]], "C": [], "equations": {"x": [[]], "y": [[], []], "z": []},
          "options": {"order": 2}})");
        f.options.balance = s;
        const NormalFormResult<Complex> res = construct(build_system<Complex>(f));
        CHECK(trichotomy_constants(res).condQ == doctest::Approx(1.0 / s));
        CHECK(res.spectral.delta == doctest::Approx(s));
    }
}

TEST_CASE("emergence constant") {
    const NormalFormResult<Complex> lin = from_json(R"({"version": "nfspec-1", "blocks": {"m": 1, "n": 1, "l": 0},
      "A": [[0]], "B": [[-1]], "C": [], "equations": {"x": [[]], "y": [[]], "z": []}, "options": {"order": 3}})");
    CHECK(emergence_constant(lin, 0.3, 1.0, 0.0, 10.0) == doctest::Approx(0.3));
    const double c = emergence_constant(parabola(), 0.3, 0.2, 0.0, 40.0);
    CHECK(std::isfinite(c));
    CHECK(c >= 0.3);
    CHECK(emergence_constant(parabola(), 0.0, 0.2, 0.0, 40.0) == 0.0);
}

TEST_CASE("monotonicity") {
    double prev = kUnbounded;
    for (double mu = 0.1; mu < 0.95; mu += 0.1) {
        const double r = ball_radius(parabola(), mu, 0.0, 40.0);
        CHECK(r <= prev * (1.0 + 1e-6));
        prev = r;
        double last = gap_margin(parabola(), mu, 0.0, 0.0, 40.0);
        for (double rr = 0.05; rr < 1.0; rr += 0.05) {
            const double m = gap_margin(parabola(), mu, rr, 0.0, 40.0);
            CHECK(m <= last);
            last = m;
        }
        CHECK(gap_margin(parabola(), mu + 0.05, 0.3, 0.0, 40.0) <= gap_margin(parabola(), mu, 0.3, 0.0, 40.0));
        CHECK(gap_margin(parabola(), mu, r, 0.0, 40.0) >= 0.0);
    }
}

TEST_CASE("coefficient bounds dominate sampled G norms") {
    std::mt19937_64 rng(42);
    RandomShape shape;
    shape.min_n = 2;
    int checked = 0;
    for (int k = 0; k < 6; ++k) {
        const NormalFormResult<Complex> res = construct(random_system(rng, 3, shape));
        const SeriesMatrix G = extract_G(res);
        const double r = 0.5, t0 = 0.0, t1 = 10.0;
        const double bound = frobenius_bound(G, r, t0, t1);
        std::uniform_real_distribution<double> ut(t0, t1);
        for (int i = 0; i < 100; ++i) {
            const std::vector<double> U = sample_ball(rng, res.layout.vars(), r);
            for (int j = 0; j < 100; ++j) {
                const double t = ut(rng);
                Eigen::MatrixXcd M(G.rows, G.cols);
                for (int a = 0; a < G.rows; ++a)
                    for (int b = 0; b < G.cols; ++b) {
                        const auto v = ms_evaluate(G(a, b), t, U);
                        M(a, b) = v.empty() ? Complex{} : v[0];
                    }
                CHECK(Eigen::JacobiSVD<Eigen::MatrixXcd>(M).singularValues()(0) <= bound * (1.0 + 1e-12));
                ++checked;
            }
        }
    }
    CHECK(checked == 60000);
}

TEST_CASE("extract_G reassembles GY") {
    const NormalFormResult<Complex> cyl = construct(bundled_system("cylinder4d.json", 3));
    const SeriesMatrix G = extract_G(cyl);
    REQUIRE(G.rows == 2);
    const std::vector<double> U{0.3, -0.2, 0.1, 0.4};
    for (int i = 0; i < 2; ++i) {
        Complex sum = 0.0;
        for (int j = 0; j < 2; ++j) {
            const auto g = ms_evaluate(G(i, j), 0.0, U);
            sum += (g.empty() ? Complex{} : g[0]) * U[static_cast<std::size_t>(2 + j)];
        }
        CHECK(std::abs(sum - ms_evaluate(cyl.GY, 0.0, U)[static_cast<std::size_t>(i)]) < 1e-14);
    }
    // |G| = X1^2 + X2^2 for this G; the Frobenius bound may exceed it but not by more than sqrt(2).
    const double r = 0.6;
    CHECK(frobenius_bound(G, r, 0.0, 1.0) >= r * r);
    CHECK(frobenius_bound(G, r, 0.0, 1.0) <= std::sqrt(2.0) * 2.0 * r * r);
}

TEST_CASE("estimate_domain on the parabola") {
    const DomainEstimate d = estimate_domain(parabola(), 0.5, 0.0, 40.0);
    CHECK(d.radius >= 0.20);
    CHECK(d.radius <= 0.35);
    CHECK(d.certified_radius >= d.radius);
    CHECK(d.margin >= 0.0);
    CHECK(d.jacobian.sign_constant);
    CHECK(d.jacobian.min_det > 0.0);
    CHECK(d.margin_samples.size() == 17);
    CHECK(d.sampled_G_norm <= frobenius_bound(extract_G(parabola()), d.radius, 0.0, 40.0));
    CHECK_THROWS(estimate_domain(parabola(), 0.0, 0.0, 40.0));
}

TEST_CASE("sample_ball stays inside") {
    std::mt19937_64 rng(43);
    for (int d = 0; d <= 4; ++d)
        for (int i = 0; i < 100; ++i) {
            const auto u = sample_ball(rng, d, 0.7);
            double s = 0.0;
            for (double v : u) s += v * v;
            CHECK(std::sqrt(s) <= 0.7 + 1e-15);
            const auto w = sample_ball(rng, d, 0.7, true);
            s = 0.0;
            for (double v : w) s += v * v;
            if (d > 0) CHECK(std::sqrt(s) == doctest::Approx(0.7));
        }
}
