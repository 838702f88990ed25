#include "borel_riccati/schrodinger.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <boost/numeric/odeint.hpp>

namespace br {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::array<cplx, 2>;  // (f, ∫f)

struct QEval {
    std::vector<CompiledRational> q;
    cplx operator()(cplx x, cplx hb) const {
        cplx r = 0, p = 1.0;
        for (const auto& c : q) {
            r += c(x) * p;
            p *= hb;
        }
        return r;
    }
};

QEval compile(const SchrodingerProblem& p) {
    QEval e;
    for (const auto& r : p.q) e.q.emplace_back(r);
    return e;
}

bool near(cplx a, cplx b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

} // namespace

RiccatiEquation SchrodingerProblem::riccati() const {
    std::vector<RationalFunction> c;
    for (const auto& r : q) c.push_back(-r);
    return RiccatiEquation::from_rational({RationalFunction(1L)}, {RationalFunction()}, c);
}

std::string WkbHypothesisReport::summary() const {
    std::ostringstream os;
    os << (pass ? "pass" : "fail") << "; poles: " << (pole_condition ? "pass" : "fail");
    if (!pole_detail.empty()) os << " [" << pole_detail << "]";
    os << "; + end: " << plus_end.summary() << "; - end: " << minus_end.summary();
    if (!pass && pole_condition) os << "; try a different x0 or theta";
    return os.str();
}

WkbHypothesisReport check_wkb_hypotheses(const SchrodingerProblem& p, double theta) {
    WkbHypothesisReport rep;
    rep.pole_condition = !p.q.empty();
    std::string why;
    if (!p.q.empty()) {
        const RationalFunction& q0 = p.q[0];
        for (std::size_t k = 0; k < p.q.size(); ++k) {
            if (p.q[k].den().degree() < 1) continue;
            for (const auto& r : exact_roots(p.q[k].den())) {
                Pole at{false, r.location, 0};
                int o0 = pole_order(q0, at), ok = pole_order(p.q[k], at);
                if (ok <= 0) continue;
                std::ostringstream os;
                if (o0 < 2) {
                    rep.pole_condition = false;
                    os << "pole of q" << k << " at " << r.location << " where q0 has order " << o0 << "; ";
                } else if (ok > o0) {
                    rep.pole_condition = false;
                    os << "ord q" << k << " = " << ok << " > ord q0 = " << o0 << " at " << r.location << "; ";
                }
                why += os.str();
            }
        }
    }
    rep.pole_detail = why;
    auto eq = p.riccati();
    rep.plus_end = hypothesis_check(eq, p.x0, theta, 1, p.branch, HypothesisVariant::Monic);
    rep.minus_end = hypothesis_check(eq, p.x0, theta, -1, p.branch, HypothesisVariant::Monic);
    rep.pass = rep.pole_condition && rep.plus_end.pass && rep.minus_end.pass;
    return rep;
}

const WkbSample& WkbSolution::at(cplx x, cplx hbar) const {
    for (const auto& s : samples)
        if (near(s.x, x) && near(s.hbar, hbar)) return s;
    throw PointOffGrid("no WKB sample at the requested (x, hbar)");
}

WkbSample continue_wkb(const SchrodingerProblem& p, cplx f0, cplx x, cplx hbar, double rtol) {
    WkbSample s;
    s.x = x;
    s.hbar = hbar;
    s.f = f0;
    const cplx dx = x - p.x0;
    if (dx == cplx(0)) {
        s.psi = 1.0;
        s.dpsi = -f0 / hbar;
        return s;
    }
    QEval q = compile(p);
    auto rhs = [&](const State& y, State& dy, double tau) {
        cplx xt = p.x0 + tau * dx;
        dy[0] = dx * (y[0] * y[0] - q(xt, hbar)) / hbar;
        dy[1] = dx * y[0];
    };
    State y{f0, 0.0};
    auto stepper = odeint::make_controlled(1e-14, rtol, odeint::runge_kutta_dopri5<State>());
    try {
        odeint::integrate_adaptive(stepper, rhs, y, 0.0, 1.0, 1e-3);
    } catch (const PoleHit& e) {
        throw PathThroughSingularity(std::string("WKB continuation: ") + e.what());
    } catch (const std::exception& e) {
        throw StepSizeUnderflow(std::string("WKB continuation: ") + e.what());
    }
    if (!std::isfinite(std::abs(y[0]))) throw PathThroughSingularity("f blows up along the continuation path");
    s.f = y[0];
    s.psi = std::exp(-y[1] / hbar);
    s.dpsi = -s.f * s.psi / hbar;
    return s;
}

double psi_residual(const SchrodingerProblem& p, cplx f0, cplx x, cplx hbar, double step, double rtol) {
    std::array<cplx, 5> v{};
    for (int k = -2; k <= 2; ++k) v[k + 2] = continue_wkb(p, f0, x + double(k) * step, hbar, rtol).psi;
    cplx d2 = (-v[0] + 16.0 * v[1] - 30.0 * v[2] + 16.0 * v[3] - v[4]) / (12.0 * step * step);
    cplx qpsi = compile(p)(x, hbar) * v[2];
    return std::abs(hbar * hbar * d2 - qpsi) / std::abs(qpsi);
}

std::pair<WkbSolution, WkbSolution> exact_wkb_basis(const SchrodingerProblem& p, double theta,
                                                    const std::vector<std::pair<cplx, cplx>>& points,
                                                    const WkbOptions& opt) {
    auto eq = p.riccati();
    auto chi = parse_field_elem(opt.regularizer, eq.ambient());
    std::pair<WkbSolution, WkbSolution> out;
    for (int sign : {1, -1}) {
        double th = sign < 0 && opt.theta_minus ? *opt.theta_minus : theta;
        ExactSolver solver(eq, sign, th, opt.pipeline, chi, p.branch);
        WkbSolution& sol = sign > 0 ? out.first : out.second;
        sol.sign = sign;
        sol.theta = th;
        for (const auto& [x, hb] : points) {
            cplx f0 = solver.evaluate(p.x0, hb).f;
            sol.samples.push_back(continue_wkb(p, f0, x, hb, opt.rtol));
        }
    }
    return out;
}

cplx wronskian(const std::pair<WkbSolution, WkbSolution>& basis, cplx x, cplx hbar) {
    const auto& a = basis.first.at(x, hbar);
    const auto& b = basis.second.at(x, hbar);
    return a.psi * b.dpsi - a.dpsi * b.psi;
}

std::string psi_csv(const WkbSolution& s) {
    std::string out = "x_re,x_im,hbar_re,hbar_im,psi_re,psi_im,dpsi_re,dpsi_im\n";
    char buf[512];
    for (const auto& v : s.samples) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", v.x.real(), v.x.imag(),
                      v.hbar.real(), v.hbar.imag(), v.psi.real(), v.psi.imag(), v.dpsi.real(), v.dpsi.imag());
        out += buf;
    }
    return out;
}

} // namespace br
