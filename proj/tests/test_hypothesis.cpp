#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "borel_riccati/hypothesis.hpp"

using namespace br;

namespace {

RiccatiEquation airy() {
    return RiccatiEquation::from_rational({parse_rational("1")}, {parse_rational("0")}, {parse_rational("-x")});
}

const HypothesisItem& item(const HypothesisReport& r, const std::string& name) {
    for (const auto& it : r.items)
        if (it.name == name) return it;
    FAIL("missing item " << name);
    return r.items.front();
}

} // namespace

TEST_CASE("pole orders") {
    Pole inf{true, 0, 0}, zero{false, 0, 0}, one{false, 1, 0};
    CHECK(pole_order(parse_rational("4*x"), inf) == 1);
    CHECK(pole_order(parse_rational("1/(x^2+1)"), inf) == -2);
    CHECK(pole_order(parse_rational("1/x^2"), zero) == 2);
    CHECK(pole_order(parse_rational("(x-1)^2/x"), one) == -2);
    CHECK(pole_order(parse_rational("0"), inf) == kZeroOrder);
    auto amb = airy().ambient();
    // √D₀ = 2√x has order ½ at ∞
    CHECK(pole_order(parse_field_elem("sqrtD0", amb), inf, amb->D0) == doctest::Approx(0.5));
    CHECK(pole_order(parse_field_elem("x + sqrtD0/x", amb), inf, amb->D0) == doctest::Approx(1.0));
}

TEST_CASE("raw airy requires regularization") {
    auto rep = hypothesis_check(airy(), 1.0, 0.0, 1);
    CHECK(item(rep, "ray").pass);
    CHECK(rep.ray.pole_at_infinity);
    CHECK_FALSE(item(rep, "ord").pass);
    CHECK(item(rep, "ord").detail.find("c0 ord 1") != std::string::npos);
    CHECK_FALSE(rep.pass);
    CHECK(rep.requires_regularization);
    CHECK(rep.summary().find("requires regularization") != std::string::npos);

    auto monic = hypothesis_check(airy(), 1.0, 0.0, 1, {}, HypothesisVariant::Monic);
    CHECK(monic.pass);
}

TEST_CASE("regularized airy passes") {
    auto eq = airy();
    for (const char* chi : {"sqrtD0/2", "sqrtD0"}) {
        auto reg = eq.regularize(parse_field_elem(chi, eq.ambient()));
        auto rep = hypothesis_check(reg, 1.0, 0.0, 1);
        CHECK_MESSAGE(rep.pass, rep.summary());
        CHECK_FALSE(rep.requires_regularization);
    }
}

TEST_CASE("ray into the turning point fails") {
    auto reg = airy().regularize(parse_field_elem("sqrtD0/2", airy().ambient()));
    auto rep = hypothesis_check(reg, 1.0, 0.0, -1);
    CHECK_FALSE(rep.pass);
    CHECK(item(rep, "ray").detail == "HitsTurningPoint");
}

TEST_CASE("closed ray skips the ord conditions") {
    // D₀ = −1/x²: trajectories are circles about the double pole
    auto eq = RiccatiEquation::from_rational({parse_rational("1")}, {parse_rational("0")}, {parse_rational("1/(4*x^2)")});
    auto rep = hypothesis_check(eq, 1.0, 0.0, 1, BranchContext{1.0, 1, {}});
    CHECK(rep.ray.kind == RayKind::Closed);
    CHECK(item(rep, "ord").skipped);
    CHECK(rep.pass);
}

TEST_CASE("triangular system and euler fixture") {
    auto tri = RiccatiEquation::from_rational({parse_rational("0"), parse_rational("1")}, {parse_rational("1-x")},
                                              {parse_rational("0"), parse_rational("x")});
    auto rep = hypothesis_check(tri, cplx(2.0, 0.5), 0.0, 1);
    CHECK_MESSAGE(rep.pass, rep.summary());
    CHECK_THROWS_AS(formal_solve(tri, -1, 2), NoMinusSolution);
    auto minus = hypothesis_check(tri, cplx(2.0, 0.5), 0.0, -1);
    CHECK_FALSE(minus.pass);

    auto euler = RiccatiEquation::from_rational({}, {parse_rational("1")}, {parse_rational("0"), parse_rational("-1/x")});
    auto e = hypothesis_check(euler, 1.0, 0.0, 1);
    CHECK_MESSAGE(e.pass, e.summary());
}
