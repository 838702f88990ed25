#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "borel_riccati/resum.hpp"

using namespace br;
using std::numbers::pi;

namespace {

RiccatiEquation airy() {
    return RiccatiEquation::from_rational({parse_rational("1")}, {parse_rational("0")}, {parse_rational("-x")});
}

RiccatiEquation euler() {
    return RiccatiEquation::from_rational({}, {parse_rational("1")}, {parse_rational("0"), parse_rational("-1/x")});
}

FieldElem half_sqrt(const RiccatiEquation& eq) { return parse_field_elem("sqrtD0/2", eq.ambient()); }

PipelineOptions quick() {
    PipelineOptions o;
    o.grid.h = 1.0 / 64;
    return o;
}

// −ħ^{1/3}Ai′(u)/Ai(u), u = ħ^{−2/3}x, mpmath at 30 digits
struct AiryOracle {
    cplx x;
    double hbar;
    cplx f;
};
const AiryOracle kAiry[] = {
    {1.0, 0.05, 1.012135736123130449},
    {1.0, 0.1, 1.0236300672131980185},
    {1.0, 0.2, 1.0450724288999736036},
    {1.5, 0.05, 1.2329419037690294107},
    {1.5, 0.1, 1.2408858279963850338},
    {1.5, 0.2, 1.2561099529529627422},
    {std::polar(1.0, pi / 6), 0.05, {0.97663823592282691772, 0.25292204157117083824}},
    {std::polar(1.0, pi / 6), 0.1, {0.9870948364152927342, 0.24764343254434781896}},
    {std::polar(1.0, pi / 6), 0.2, {1.0071810349557604319, 0.23852726014444507639}},
};

// e^{10}E₁(10) = ∫₀^∞ e^{−10ξ}/(1+ξ)dξ, mpmath
constexpr double kEuler = 0.091563333939788081876;

} // namespace

TEST_CASE("laplace of closed forms") {
    for (cplx hb : {cplx(0.1), std::polar(0.1, 0.4)}) {
        double fact = 1;
        for (int k = 0; k <= 6; ++k) {
            if (k) fact *= k;
            auto r = laplace([&](cplx z) { return std::pow(z, k) / fact; }, hb, 0.0);
            CHECK(std::abs(r.value - std::pow(hb, k + 1)) < 1e-10 * std::pow(std::abs(hb), k + 1));
            std::vector<cplx> c(k + 1, 0.0);
            c[k] = 1;
            CHECK(std::abs(laplace_poly(c, hb) - std::pow(hb, k + 1)) < 1e-16);
        }
    }
    auto e = laplace([](cplx z) { return std::exp(-z); }, 0.1, 0.0);
    CHECK(std::abs(e.value - 0.1 / 1.1) < 1e-14);
    CHECK(e.accepted);

    auto eu = laplace([](cplx z) { return 1.0 / (1.0 + z); }, 0.1, 0.0);
    CHECK(std::abs(eu.value - kEuler) < 1e-8);

    // rotated ray: same value for an entire φ
    auto rot = laplace([](cplx z) { return std::exp(-z); }, std::polar(0.1, 0.3), 0.3);
    CHECK(std::abs(rot.value - std::polar(0.1, 0.3) / (1.0 + std::polar(0.1, 0.3))) < 1e-13);

    CHECK_THROWS_AS(laplace([](cplx) { return cplx(1); }, 0.1, pi), OutsideBorelDisc);
}

TEST_CASE("filon rule") {
    const double h = 1.0 / 16;
    const int M = 64;
    std::vector<cplx> v(M + 1);
    for (cplx w : {cplx(0.3), cplx(3.0), cplx(20.0, 5.0), cplx(1.0, 300.0)}) {
        // ξ² is reproduced by the interpolant, so only rounding remains
        for (int m = 0; m <= M; ++m) v[m] = std::pow(m * h, 2);
        cplx ex = 2.0 / (w * w * w) - std::exp(-w * 4.0) * (16.0 / w + 8.0 / (w * w) + 2.0 / (w * w * w));
        CHECK(std::abs(filon_laplace(v.data(), M, h, w) - ex) < 1e-12 * std::max(1.0, std::abs(ex)));
    }
    CHECK_THROWS_AS(filon_laplace(v.data(), 12, h, 1.0), LatticeMismatch);
}

TEST_CASE("contour borel transform") {
    std::vector<double> xi;
    for (int i = 0; i <= 16; ++i) xi.push_back(0.25 * i);

    auto b1 = analytic_borel([](cplx) { return cplx(1); }, xi, 0.0, 1.0);
    for (auto v : b1.values) CHECK(std::abs(v) < 1e-6);

    for (int k = 0; k <= 6; ++k) {
        auto b = analytic_borel([k](cplx hb) { return std::pow(hb, k + 1); }, xi, 0.0, 1.0);
        double fact = std::tgamma(k + 1.0);
        for (std::size_t i = 0; i < xi.size(); ++i)
            CHECK(std::abs(b.values[i] - std::pow(xi[i], k) / fact) < 1e-6);
    }

    auto g = analytic_borel([](cplx hb) { return 1.0 / (1.0 + hb); }, xi, 0.0, 1.0);
    for (std::size_t i = 0; i < xi.size(); ++i) CHECK(std::abs(g.values[i] + std::exp(-xi[i])) < 1e-5);
    CHECK(g.convergence_estimate < 1e-6);

    // θ ≠ 0: ψ(ξ) = B[f](e^{iθ}ξ) for f = ħ², B = ξ
    auto r = analytic_borel([](cplx hb) { return hb * hb; }, xi, 0.4, 1.0);
    for (std::size_t i = 0; i < xi.size(); ++i) CHECK(std::abs(r.values[i] - std::polar(xi[i], 0.4)) < 1e-6);

    AnalyticBorelOptions tight;
    tight.T = 20;
    tight.tol = 1e-12;
    CHECK_THROWS_AS(analytic_borel([](cplx hb) { return 1.0 / (1.0 + hb); }, xi, 0.0, 1.0, tight), ContourDivergence);
}

TEST_CASE("roundtrip L after B on monomials") {
    const double h = 1.0 / 64;
    std::vector<double> xi;
    for (int m = 0; m <= 256; ++m) xi.push_back(m * h);
    for (int k = 0; k <= 6; ++k) {
        auto b = analytic_borel([k](cplx hb) { return std::pow(hb, k + 1); }, xi, 0.0, 1.0);
        for (cplx hb : {cplx(0.1), std::polar(0.1, 0.5)}) {
            cplx v = filon_laplace(b.values.data(), 256, h, 1.0 / hb);
            CHECK(std::abs(v - std::pow(hb, k + 1)) < 1e-8);
        }
    }
}

TEST_CASE("grid transforms") {
    ExactSolver solver(airy(), 1, 0.0, quick(), half_sqrt(airy()));
    const BorelGrid& g = solver.grid(1.0, solver.options().levels - 1);
    const int row = solver.eval_row(solver.options().levels - 1);
    const double Xi = solver.options().grid.xi_max;

    SUBCASE("borel of the laplace transform recovers the row") {
        auto F = [&](cplx hb) { return filon_laplace(g.total.row(row), int(std::lround(Xi / g.h)), g.h, 1.0 / hb); };
        std::vector<double> xi;
        std::vector<cplx> expect;
        for (int m = 0; m * g.h <= Xi / 2 + 1e-12; m += 8) {
            xi.push_back(m * g.h);
            expect.push_back(g.total(row, m));
        }
        auto b = analytic_borel(F, xi, 0.0, 1.0 / 3);
        double err = 0;
        for (std::size_t i = 0; i < xi.size(); ++i) err = std::max(err, std::abs(b.values[i] - expect[i]));
        CHECK(err < 1e-5);
    }

    SUBCASE("integration by parts") {
        auto rep = ibp_identity_check(g, row, {0.1, 0.05, std::polar(0.1, 0.3)});
        CHECK(rep.max_deviation < 1e-7);
    }

    SUBCASE("convolution law") {
        int M = int(std::lround(Xi / g.h));
        std::vector<cplx> a(g.total.row(row), g.total.row(row) + M + 1);
        std::vector<cplx> b(M + 1);
        for (int m = 0; m <= M; ++m) b[m] = std::exp(-m * g.h) * std::cos(m * g.h);
        auto ab = convolve(a, b, g.h);
        for (double hb : {0.1, 0.2}) {
            cplx lhs = filon_laplace(ab.data(), M, g.h, 1.0 / hb);
            cplx rhs = filon_laplace(a.data(), M, g.h, 1.0 / hb) * filon_laplace(b.data(), M, g.h, 1.0 / hb);
            // trapezoid convolution carries an O(h²) error
            CHECK(std::abs(lhs - rhs) < 10 * g.h * g.h * std::abs(rhs));
        }
    }

    SUBCASE("tail bound and disc") {
        auto r = laplace(g, row, 0.1);
        CHECK(r.accepted);
        CHECK(r.truncation_tail_bound < 1e-20);
        CHECK_THROWS_AS(laplace(g, row, -0.1), OutsideBorelDisc);
        // Re(1/ħ) = 0.2 is below K + ½
        CHECK_THROWS_AS(laplace(g, row, cplx(0.2, 2.0)), OutsideBorelDisc);
    }
}

TEST_CASE("ibp identity on synthetic rows") {
    BorelGrid g;
    g.h = 1.0 / 128;
    g.D = 1024;
    g.total = Triangle(g.D);
    g.growth = {1.0, -1.0};
    for (double kappa : {0.0, 1.0}) {
        for (int m = 0; m <= g.D; ++m) g.total(0, m) = kappa ? std::exp(-m * g.h) : 2.5;
        auto rep = ibp_identity_check(g, 0, {0.1, 0.3});
        CHECK(rep.max_deviation < 1e-10);
    }
}

TEST_CASE("airy exact solution against the oracle") {
    auto eq = airy();
    ExactSolver solver(eq, 1, 0.0, quick(), half_sqrt(eq));
    for (const auto& o : kAiry) {
        auto s = solver.evaluate(o.x, o.hbar);
        CHECK_MESSAGE(std::abs(s.f - o.f) < 1e-9 * std::abs(o.f), "x = ", o.x, " hbar = ", o.hbar);
        CHECK(s.residual < 1e-6);
        CHECK(s.accepted);
    }
    // |f − f₀| decreases with ħ
    double prev = 1e9;
    for (double hb : {0.2, 0.1, 0.05}) {
        double d = std::abs(solver.evaluate(1.0, hb).f - 1.0);
        CHECK(d < prev);
        prev = d;
    }
    CHECK_THROWS_AS(solver.evaluate(1.0, -0.1), OutsideBorelDisc);
    CHECK_THROWS_AS(solver.evaluate(std::polar(1.0, 2 * pi / 3), 0.1), PointOffGrid);
}

TEST_CASE("monic path and independent grids agree") {
    auto eq = airy();
    ExactSolver half(eq, 1, 0.0, quick(), half_sqrt(eq));
    ExactSolver full(eq, 1, 0.0, quick(), parse_field_elem("sqrtD0", eq.ambient()));
    PipelineOptions other;
    other.grid.h = 1.0 / 32;
    other.grid.xi_max = 6;
    ExactSolver coarse(eq, 1, 0.0, other, half_sqrt(eq));
    for (cplx x : {cplx(1.0), cplx(1.2, 0.3)}) {
        auto a = half.evaluate(x, 0.1), b = full.evaluate(x, 0.1), c = coarse.evaluate(x, 0.1);
        CHECK(std::abs(a.f - b.f) < 1e-10);
        CHECK(std::abs(a.f - c.f) < 1e-8);
        CHECK(b.residual < 1e-6);
    }
}

TEST_CASE("euler fixture end to end") {
    ExactSolver solver(euler(), 1, 0.0, quick());
    auto s = solver.evaluate(1.0, 0.1);
    CHECK(std::abs(s.f - kEuler) < 1e-8);
    CHECK(s.residual < 1e-6);
}

TEST_CASE("gevrey remainders") {
    SUBCASE("euler closed form") {
        auto fs = formal_solve(euler(), 1, 24);
        std::vector<ExactSolutionSample> samples;
        for (double hb : {0.05, 0.1, 0.2}) {
            ExactSolutionSample s;
            s.x = 1.0;
            s.sqrt_d0 = 1.0;
            s.hbar = hb;
            s.f = laplace([](cplx z) { return 1.0 / (1.0 + z); }, hb, 0.0).value;
            samples.push_back(s);
        }
        auto rep = gevrey_remainders(samples, fs);
        CHECK(rep.bound_holds);
        CHECK(rep.M > 0.5);
        CHECK(rep.M <= 1.0);
        CHECK(rep.n_star[0] > rep.n_star[1]);
        CHECK(rep.n_star[1] > rep.n_star[2]);
        CHECK(rep.slope < 0);
        CHECK(rep.r2 > 0.99);
        // R₁ = f − f₀ = O(ħ)
        CHECK(rep.remainders[1][1] < 0.2 * 1.5);
    }
    SUBCASE("terminating series has no interior minimum") {
        // ħf′ = f − ħ: f = ħ exactly
        auto eq = RiccatiEquation::from_rational({}, {parse_rational("1")}, {parse_rational("0"), parse_rational("-1")});
        auto fs = formal_solve(eq, 1, 8);
        ExactSolutionSample s;
        s.x = 1.0;
        s.sqrt_d0 = 1.0;
        s.hbar = 0.1;
        s.f = 0.1;
        auto rep = gevrey_remainders({s}, fs);
        CHECK(rep.n_star[0] == 8);
        CHECK(rep.M < 1e-3);
    }
}

TEST_CASE("theta sweep") {
    auto eq = airy();
    auto rep = theta_sweep(eq, 1.0, {-0.2, 0.0, 0.2}, 1, {{1.0, 0.1}}, quick(), half_sqrt(eq));
    REQUIRE(rep.points.size() == 1);
    CHECK(rep.points[0].values.size() == 3);
    CHECK(rep.max_deviation < 1e-9);

    auto single = theta_sweep(eq, 1.0, {0.0}, 1, {{1.0, 0.1}}, quick(), half_sqrt(eq));
    CHECK(single.max_deviation == 0.0);

    CHECK_THROWS_AS(theta_sweep(eq, 1.0, {0.0, pi}, 1, {{1.0, 0.1}}, quick(), half_sqrt(eq)), HypothesisFailed);
}

TEST_CASE("sample export") {
    ExactSolutionSample s;
    s.x = cplx(1, 2);
    s.hbar = 0.1;
    s.f = cplx(0.5, -0.25);
    auto csv = samples_csv({s});
    CHECK(csv.rfind("x_re,x_im,hbar_re,hbar_im,f_re,f_im,residual,tail_bound\n", 0) == 0);
    CHECK(csv.find("1,2,0.10000000000000001,0,0.5,-0.25,0,0") != std::string::npos);
}
