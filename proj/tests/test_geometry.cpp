#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "borel_riccati/geometry.hpp"

using namespace br;
using std::numbers::pi;

namespace {

LiouvilleFrame airy_frame(double theta = 0, int alpha = 1) {
    return LiouvilleFrame::make(parse_rational("4*x"), 0.0, theta, alpha, BranchContext{});
}

LiouvilleFrame ring_frame(cplx x0 = 1.0) {
    BranchContext br{x0, 1, {}};
    return LiouvilleFrame::make(parse_rational("-1/x^2"), x0, 0.0, 1, br);
}

} // namespace

TEST_CASE("turning points") {
    auto airy = RiccatiEquation::from_rational({parse_rational("1")}, {parse_rational("0")}, {parse_rational("-x")});
    auto tp = turning_points(airy);
    REQUIRE(tp.size() == 1);
    CHECK(std::abs(tp[0]) < 1e-14);

    auto two = exact_roots(parse_rational("4*(x^2-1)").num());
    REQUIRE(two.size() == 2);
    CHECK(std::abs(two[0].location + 1.0) < 1e-14);
    CHECK(std::abs(two[1].location - 1.0) < 1e-14);
    CHECK(exact_roots(parse_rational("7").num()).empty());

    auto dbl = exact_roots(parse_rational("(x-i)^2*(x+2)").num());
    REQUIRE(dbl.size() == 2);
    CHECK(dbl[0].multiplicity == 1);
    CHECK(dbl[1].multiplicity == 2);
    CHECK(std::abs(dbl[1].location - cplx(0, 1)) < 1e-14);

    auto r = poly_roots({-6, 11, -6, 1});
    REQUIRE(r.size() == 3);
    for (int k = 0; k < 3; ++k) CHECK(std::abs(r[k] - double(k + 1)) < 1e-13);
}

TEST_CASE("liouville map") {
    auto f = airy_frame();
    CHECK(std::abs(liouville_map(f, 0.0)) == 0.0);
    CHECK(std::abs(liouville_map(f, 1.0) - 4.0 / 3.0) < 1e-12);
    cplx x0 = std::pow(0.75, 2.0 / 3.0) * std::polar(1.0, pi / 3);
    CHECK(std::abs(liouville_map(f, x0) - cplx(0, 1)) < 1e-12);
    // polyline detour gives the same value away from the turning point
    CHECK(std::abs(liouville_map(f, 2.0, {cplx(0.5, 1.0), cplx(2.0, 0.5)}) - 4.0 / 3.0 * std::pow(2.0, 1.5)) < 1e-11);
    CHECK_THROWS_AS(liouville_map(f, -1.0), PathThroughSingularity);
}

TEST_CASE("airy rays along the real axis") {
    auto plus = trace_ray(airy_frame(0, 1), 1.0);
    CHECK(plus.classification.kind == RayKind::InfiniteToPole);
    CHECK(plus.classification.pole_at_infinity);
    for (std::size_t i = 1; i < plus.samples.size(); ++i) {
        CHECK(std::abs(plus.samples[i].x.imag()) < 1e-8 * (1 + std::abs(plus.samples[i].x)));
        CHECK(plus.samples[i].x.real() > plus.samples[i - 1].x.real());
    }

    auto minus = trace_ray(airy_frame(0, -1), 1.0);
    CHECK(minus.classification.kind == RayKind::HitsTurningPoint);
    CHECK(std::abs(minus.classification.location) < 1e-12);
    CHECK(minus.classification.t_hit == doctest::Approx(4.0 / 3.0).epsilon(1e-8));

    auto crit = trace_ray(airy_frame(0, 1), std::polar(1.0, 2 * pi / 3));
    CHECK(crit.classification.kind == RayKind::HitsTurningPoint);
    CHECK(crit.classification.t_hit == doctest::Approx(4.0 / 3.0).epsilon(1e-8));
}

TEST_CASE("straightness and unit speed") {
    for (double theta : {0.5, -0.7}) {
        auto f = airy_frame(theta, 1);
        TraceOptions opt;
        opt.r_escape = 1e3;
        auto ray = trace_ray(f, cplx(1.0, 0.2), opt);
        REQUIRE(ray.z_known);
        cplx rot = std::polar(1.0, -theta);
        cplx z_prev = ray.z_start;
        for (std::size_t i = 1; i < ray.samples.size(); i += 7) {
            const auto& s = ray.samples[i];
            cplx z = liouville_map(f, s.x);
            CHECK(std::abs((rot * (z - ray.z_start)).imag()) < 1e-8 * (1 + s.t));
            double dt = s.t - ray.samples[i - 1].t;
            cplx zp = liouville_map(f, ray.samples[i - 1].x);
            CHECK(std::abs(rot * (z - zp) / dt - 1.0) < 1e-6);
            z_prev = z;
        }
        (void)z_prev;
    }
}

TEST_CASE("reversibility covers the full trajectory") {
    // α = ± from the same point trace the two halves of one Im(Φ) level set
    auto fp = airy_frame(0.3, 1), fm = airy_frame(0.3, -1);
    TraceOptions opt;
    opt.r_escape = 1e3;
    cplx x = cplx(0.8, 0.9);
    auto p = trace_ray(fp, x, opt), m = trace_ray(fm, x, opt);
    cplx rot = std::polar(1.0, -0.3);
    double level = (rot * liouville_map(fp, x)).imag();
    for (const auto* r : {&p, &m})
        for (std::size_t i = 0; i < r->samples.size(); i += 11)
            CHECK(std::abs((rot * liouville_map(fp, r->samples[i].x)).imag() - level) < 1e-8 * (1 + r->samples[i].t));
    CHECK(p.samples.back().t > 0);
    // the − half runs backward in Re: both share the start
    CHECK(p.samples.front().x == m.samples.front().x);
}

TEST_CASE("airy seed classification") {
    int singular = 0;
    for (int k = 0; k < 12; ++k) {
        cplx x = std::polar(1.0, 2 * pi * k / 12);
        for (int alpha : {1, -1}) {
            auto f = LiouvilleFrame::make(parse_rational("4*x"), 0.0, 0.0, alpha, BranchContext{x, 1, {}});
            auto r = trace_ray(f, x, std::sqrt(4.0 * x), TraceOptions{});
            bool hit = r.classification.kind == RayKind::HitsTurningPoint;
            bool expect = (k == 0 && alpha == -1) || (k == 4 && alpha == 1) || (k == 8 && alpha == 1);
            CHECK_MESSAGE(hit == expect, "seed ", k, " alpha ", alpha);
            if (!hit) CHECK(r.classification.kind == RayKind::InfiniteToPole);
            singular += hit;
        }
    }
    CHECK(singular == 3);
}

TEST_CASE("halfstrip probing") {
    auto f = airy_frame();
    cplx x0 = std::pow(0.75, 2.0 / 3.0) * std::polar(1.0, pi / 3);
    auto hs = probe_halfstrip(f, x0, 0.5, 8);
    CHECK(hs.radius == 0.5);
    CHECK(hs.probe_rays.size() == 8);
    for (const auto& r : hs.probe_rays) CHECK(r.classification.kind == RayKind::InfiniteToPole);

    // transverse shift moves Im z by exactly the offset
    auto s = shift_across(f, x0, frame_sqrt(f, x0), -0.4);
    CHECK(std::abs(liouville_map(f, s.x) - cplx(0, 0.6)) < 1e-10);

    // asking for more than the distance to the turning-point ray shrinks r
    auto narrow = probe_halfstrip(f, x0, 1.5, 8);
    CHECK(narrow.radius < 1.0 + 1e-3);
    CHECK(narrow.radius > 0.9);

    CHECK_THROWS_AS(probe_halfstrip(f, std::polar(1.0, 2 * pi / 3), 0.5, 4), NoHalfStrip);
}

TEST_CASE("closed trajectories") {
    auto f = ring_frame();
    auto r = trace_ray(f, 1.0);
    REQUIRE(r.classification.kind == RayKind::Closed);
    CHECK(r.classification.period == doctest::Approx(2 * pi).epsilon(1e-9));
    for (const auto& s : r.samples) CHECK(std::abs(std::abs(s.x) - 1.0) < 1e-8);

    // period from another point of the same circle
    cplx other = std::polar(1.0, 2.0);
    auto r2 = trace_ray(f, other, frame_sqrt(f, other), TraceOptions{});
    REQUIRE(r2.classification.kind == RayKind::Closed);
    CHECK(std::abs(r2.classification.period - r.classification.period) < 1e-8 * r.classification.period);

    auto fm = f.with(0.0, -1);
    CHECK(trace_ray(fm, 1.0).classification.kind == RayKind::Closed);

    auto hs = probe_halfstrip(f, 1.0, 0.3, 6);
    CHECK(hs.radius == 0.3);
    for (const auto& p : hs.probe_rays) {
        REQUIRE(p.classification.kind == RayKind::Closed);
        CHECK(std::abs(p.classification.period - r.classification.period) < 1e-8 * r.classification.period);
    }
}

TEST_CASE("segment integral at a turning point") {
    CompiledRational d0(parse_rational("4*x"));
    // ∫_0^x 2√t = (4/3)x^{3/2}
    cplx x(0.3, 0.8);
    cplx v = segment_integral(d0, 0.0, x, 2.0 * std::sqrt(x));
    CHECK(std::abs(v - 4.0 / 3.0 * std::pow(x, 1.5)) < 1e-13);
}

TEST_CASE("ray csv") {
    auto r = trace_ray(airy_frame(0, -1), 1.0);
    auto csv = ray_csv(r);
    CHECK(csv.rfind("t,x_re,x_im,z_re,z_im\n", 0) == 0);
    CHECK(csv.find("# classification: HitsTurningPoint") != std::string::npos);
    CHECK(csv.find("# t_hit: 1.33333") != std::string::npos);
}
