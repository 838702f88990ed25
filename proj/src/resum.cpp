#include "borel_riccati/resum.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "borel_riccati/hypothesis.hpp"

namespace br {

namespace {

constexpr int kPanel = 8;  // intervals per interpolation panel

// Lagrange basis on u = 0..kPanel at the nodes of two 30-point Gauss–Legendre
// rules covering [0, kPanel/2] and [kPanel/2, kPanel].
struct FilonTable {
    std::vector<double> u, gw;
    std::vector<std::array<double, kPanel + 1>> ell;
    Eigen::Matrix<long double, kPanel + 1, kPanel + 1> vinv;  // (i^k)_{k,i} inverted
};

const FilonTable& filon_table() {
    static const FilonTable t = [] {
        FilonTable tb;
        using GL = boost::math::quadrature::gauss<double, 30>;
        const double half = kPanel / 2.0;
        for (int side = 0; side < 2; ++side) {
            double c = half * (side + 0.5);
            auto push = [&](double x, double w) {
                tb.u.push_back(c + x * half / 2);
                tb.gw.push_back(w * half / 2);
            };
            for (std::size_t i = 0; i < GL::abscissa().size(); ++i) {
                push(GL::abscissa()[i], GL::weights()[i]);
                if (GL::abscissa()[i] != 0) push(-GL::abscissa()[i], GL::weights()[i]);
            }
        }
        for (double u : tb.u) {
            std::array<double, kPanel + 1> l{};
            for (int i = 0; i <= kPanel; ++i) {
                double v = 1;
                for (int k = 0; k <= kPanel; ++k)
                    if (k != i) v *= (u - k) / double(i - k);
                l[i] = v;
            }
            tb.ell.push_back(l);
        }
        Eigen::Matrix<long double, kPanel + 1, kPanel + 1> v;
        for (int i = 0; i <= kPanel; ++i)
            for (int k = 0; k <= kPanel; ++k) v(k, i) = std::pow((long double)i, k);
        tb.vinv = v.inverse();
        return tb;
    }();
    return t;
}

// W_i = ∫₀^P ℓ_i(u) e^{−λu} du
std::array<cplx, kPanel + 1> filon_weights(cplx lambda) {
    const auto& tb = filon_table();
    std::array<cplx, kPanel + 1> w{};
    if (std::abs(lambda) * kPanel < 20.0) {
        for (std::size_t q = 0; q < tb.u.size(); ++q) {
            cplx e = tb.gw[q] * std::exp(-lambda * tb.u[q]);
            for (int i = 0; i <= kPanel; ++i) w[i] += e * tb.ell[q][i];
        }
        return w;
    }
    // upward recurrence for the moments is stable once |Pλ| is large
    using lc = std::complex<long double>;
    lc lam(lambda.real(), lambda.imag());
    lc e = std::exp(-(long double)kPanel * lam);
    std::array<lc, kPanel + 1> nu{};
    nu[0] = (1.0L - e) / lam;
    long double p = 1;
    for (int k = 1; k <= kPanel; ++k) {
        p *= kPanel;
        nu[k] = ((long double)k * nu[k - 1] - p * e) / lam;
    }
    for (int i = 0; i <= kPanel; ++i) {
        lc s = 0;
        for (int k = 0; k <= kPanel; ++k) s += tb.vinv(i, k) * nu[k];
        w[i] = cplx(double(s.real()), double(s.imag()));
    }
    return w;
}

double factorial(int n) { return std::tgamma(n + 1.0); }

void check_disc(double re_w, const GrowthFit& g, double margin) {
    if (!(re_w >= g.K + margin)) {
        std::ostringstream os;
        os << "Re(e^{i theta}/hbar) = " << re_w << " below fitted K + margin = " << g.K << " + " << margin;
        throw OutsideBorelDisc(os.str());
    }
}

} // namespace

cplx filon_laplace(const cplx* phi, int intervals, double h, cplx w) {
    if (intervals % kPanel != 0) throw LatticeMismatch("Filon quadrature needs a multiple of 8 intervals");
    auto wt = filon_weights(w * h);
    cplx total = 0;
    const cplx step = std::exp(-double(kPanel) * h * w);
    cplx scale = 1.0;
    for (int p = 0; p < intervals / kPanel; ++p) {
        if (p % 32 == 0) scale = std::exp(-double(kPanel) * h * w * double(p));
        const cplx* v = phi + kPanel * p;
        cplx s = 0;
        for (int i = 0; i <= kPanel; ++i) s += wt[i] * v[i];
        total += scale * s;
        scale *= step;
    }
    return h * total;
}

LaplaceResult laplace(const BorelGrid& g, int row, cplx hbar, const LaplaceOptions& opt) {
    if (row < 0 || row > g.D) throw PointOffGrid("row outside the lattice");
    int avail = g.xi_count(row) - 1;
    int M = opt.xi_max > 0 ? int(std::lround(opt.xi_max / g.h)) : avail - avail % kPanel;
    if (M > avail) throw GridTooShort("row shorter than the requested Laplace range");
    if (M % kPanel != 0) throw LatticeMismatch("Laplace range is not a multiple of 8h");
    cplx hp = std::polar(1.0, -g.theta) * hbar;
    cplx w = 1.0 / hp;
    check_disc(w.real(), g.growth, opt.margin);
    LaplaceResult r;
    r.hbar = hbar;
    r.theta = g.theta;
    r.value = filon_laplace(g.total.row(row), M, g.h, w);
    double xi = M * g.h;
    r.truncation_tail_bound = g.growth.A * std::exp((g.growth.K - w.real()) * xi) / (w.real() - g.growth.K);
    r.accepted = r.truncation_tail_bound < opt.tol;
    return r;
}

LaplaceResult laplace(const std::function<cplx(cplx)>& phi, cplx hbar, double theta, const LaplaceOptions& opt) {
    cplx dir = std::polar(1.0, theta);
    cplx w = dir / hbar;
    if (!(w.real() > 0)) throw OutsideBorelDisc("Re(e^{i theta}/hbar) <= 0");
    double R = 40.0 / w.real();
    auto integrand = [&](double r) { return dir * std::exp(-w * r) * phi(dir * r); };
    LaplaceResult res;
    res.hbar = hbar;
    res.theta = theta;
    double err = 0;
    // split at 1/Re w so the adaptive rule sees the decay scale
    double knots[] = {0.0, 1.0 / w.real(), 4.0 / w.real(), 12.0 / w.real(), R};
    for (int i = 0; i < 4; ++i) {
        double e = 0;
        res.value += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, knots[i], knots[i + 1],
                                                                                  15, 1e-15, &e);
        err += e;
    }
    res.truncation_tail_bound = std::abs(phi(dir * R)) * std::exp(-w.real() * R) / w.real() + err;
    res.accepted = res.truncation_tail_bound < opt.tol;
    return res;
}

cplx laplace_poly(const std::vector<cplx>& c, cplx hbar) {
    cplx s = 0, p = hbar;
    for (const auto& ck : c) {
        s += ck * p;
        p *= hbar;
    }
    return s;
}

BorelSamples analytic_borel(const std::function<cplx(cplx)>& f, const std::vector<double>& xi, double theta,
                            double diameter, const AnalyticBorelOptions& opt) {
    const double delta = 1.0 / diameter;
    const cplx dir = std::polar(1.0, theta);
    auto g = [&](cplx w) { return f(dir / w); };
    const int d = opt.fit_degree;

    // least-squares polynomial in ħ on the outer part of the contour
    const int nfit = 8 * (d + 1);
    const double t0 = opt.T / 4, t1 = opt.T;
    const double scale = 1.0 / std::abs(cplx(delta, t0));
    Eigen::MatrixXcd V(nfit, d + 1);
    Eigen::VectorXcd rhs(nfit);
    for (int i = 0; i < nfit; ++i) {
        double t = t0 + (t1 - t0) * (i / 2) / double(nfit / 2 - 1);
        if (i % 2) t = -t;
        cplx w(delta, t);
        cplx u = 1.0 / (w * scale), p = 1.0;
        for (int k = 0; k <= d; ++k) {
            V(i, k) = p;
            p *= u;
        }
        rhs(i) = g(w);
    }
    Eigen::VectorXcd sol = V.colPivHouseholderQr().solve(rhs);
    BorelSamples out;
    out.xi = xi;
    out.polynomial.resize(d + 1);
    for (int k = 0; k <= d; ++k) out.polynomial[k] = sol(k) / std::pow(scale, k);
    auto poly = [&](cplx hb) {
        cplx s = 0, p = 1.0;
        for (int k = 0; k <= d; ++k) {
            s += out.polynomial[k] * p;
            p *= hb;
        }
        return s;
    };

    // composite 16-point Gauss–Legendre on [−T, T]
    using GL = boost::math::quadrature::gauss<double, 16>;
    const auto& ab = GL::abscissa();
    const auto& wt = GL::weights();
    const int panels_half = int(std::ceil(opt.T / opt.panel));
    const double pw = opt.T / panels_half;
    struct Node {
        double t, weight;
        cplx r;
        bool inner;
    };
    std::vector<Node> nodes;
    nodes.reserve(std::size_t(2 * panels_half) * 16);
    for (int p = -panels_half; p < panels_half; ++p) {
        double a = p * pw, mid = a + pw / 2;
        bool inner = std::abs(mid) < opt.T / 2;
        auto add = [&](double x, double wx) {
            double t = mid + x * pw / 2;
            cplx w(delta, t);
            nodes.push_back({t, wx * pw / 2, g(w) - poly(1.0 / w), inner});
        };
        for (std::size_t i = 0; i < ab.size(); ++i) {
            if (ab[i] == 0) {
                add(0, wt[i]);
            } else {
                add(ab[i], wt[i]);
                add(-ab[i], wt[i]);
            }
        }
    }

    out.values.resize(xi.size());
    double conv = 0;
    for (std::size_t q = 0; q < xi.size(); ++q) {
        cplx full = 0, half = 0;
        for (const auto& n : nodes) {
            cplx v = n.weight * n.r * std::exp(xi[q] * cplx(delta, n.t));
            full += v;
            if (n.inner) half += v;
        }
        full /= 2 * std::numbers::pi;
        half /= 2 * std::numbers::pi;
        cplx pp = 0, term = 1.0;
        for (int k = 1; k <= d; ++k) {
            pp += out.polynomial[k] * term;
            term *= xi[q] / double(k);
        }
        out.values[q] = (pp + full) / dir;
        conv = std::max(conv, std::abs(full - half));
    }
    out.convergence_estimate = conv;
    if (!(conv <= opt.tol)) {
        std::ostringstream os;
        os << "contour truncation T = " << opt.T << " not converged: |B_T - B_T/2| = " << conv;
        throw ContourDivergence(os.str());
    }
    return out;
}

// ---------------------------------------------------------------------------

ExactSolver::ExactSolver(RiccatiEquation eq, int alpha, double theta, PipelineOptions opt,
                         std::optional<FieldElem> chi, BranchContext branch, std::optional<cplx> frame_basepoint)
    : eq_(std::move(eq)), work_(chi ? eq_.regularize(*chi) : eq_), alpha_(alpha), theta_(theta), opt_(opt),
      chi_(std::move(chi)) {
    if (opt_.levels < 1) throw LatticeMismatch("at least one lattice level is required");
    fs_ = formal_solve(work_, alpha_, std::max(opt_.formal_order, 2));
    cplx base = branch.basepoint;
    if (frame_basepoint) base = *frame_basepoint;
    else if (!work_.turning_points().empty()) base = work_.turning_points().front().location;
    frame_ = LiouvilleFrame::make(work_, base, theta_, alpha_, branch);
    H_ = opt_.grid.h * std::pow(2.0, opt_.levels - 1);
    double q = opt_.grid.xi_max / (kPanel * H_);
    if (std::abs(q - std::round(q)) > 1e-9 || q < 1)
        throw LatticeMismatch("xi_max must be a multiple of eight coarse steps");
}

int ExactSolver::eval_row(int level) const { return 2 << level; }

ExactSolver::PointData& ExactSolver::build(cplx x) {
    auto key = std::make_pair(x.real(), x.imag());
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;

    GridParams gp = opt_.grid;
    gp.t_before = 2 * H_;
    PointData pd;
    try {
        pd.st = standardize(work_, frame_, fs_, x, gp, chi_);
    } catch (const HalfstripMissing& e) {
        throw PointOffGrid(e.what());
    } catch (const PathThroughSingularity& e) {
        throw PointOffGrid(e.what());
    }
    SolveOptions so;
    so.n_max = gp.n_max;
    so.tol = gp.tol;
    so.convention = opt_.convention;
    so.serial_reference = opt_.serial_reference;
    pd.diag.x = x;
    pd.diag.stencil_step = H_;
    for (int l = 0; l < opt_.levels; ++l) {
        int k = 1 << (opt_.levels - 1 - l);
        BorelGrid g = successive_approx(k == 1 ? pd.st : pd.st.coarsen(k), so);
        pd.diag.h.push_back(g.h);
        pd.diag.n_star.push_back(g.n_star);
        pd.diag.growth.push_back(g.growth);
        pd.diag.grid_residual.push_back(g.residual);
        pd.grids.push_back(std::move(g));
    }
    return cache_.emplace(key, std::move(pd)).first->second;
}

const PointDiagnostics& ExactSolver::diagnostics(cplx x) { return build(x).diag; }

const BorelGrid& ExactSolver::grid(cplx x, int level) { return build(x).grids.at(level); }

std::vector<ExactSolutionSample> ExactSolver::evaluate(cplx x, const std::vector<cplx>& hbars) {
    PointData& pd = build(x);
    const auto& st = pd.st;
    const int L = opt_.levels;
    const int fine_per_coarse = 1 << (L - 1);

    CompiledElem g0(fs_.coeffs[0]), g1(fs_.coeffs[1]), Lc(st.L);
    std::optional<CompiledElem> chi;
    if (chi_) chi = CompiledElem(*chi_);
    auto compile = [](const std::vector<FieldElem>& v) {
        std::vector<CompiledElem> out;
        for (const auto& e : v) out.emplace_back(e);
        return out;
    };
    auto ca = compile(eq_.a()), cb = compile(eq_.b()), cc = compile(eq_.c());
    auto hpoly = [](const std::vector<CompiledElem>& v, cplx xx, cplx s, cplx hb) {
        cplx r = 0, p = 1.0;
        for (const auto& e : v) {
            r += e(xx, s) * p;
            p *= hb;
        }
        return r;
    };

    LaplaceOptions lo;
    lo.xi_max = opt_.grid.xi_max;
    lo.margin = opt_.margin;
    lo.tol = opt_.tail_tol;

    const RaySample& centre = st.nodes[2 * fine_per_coarse];
    std::vector<ExactSolutionSample> out;
    for (cplx hb : hbars) {
        ExactSolutionSample smp;
        smp.x = x;
        smp.sqrt_d0 = centre.sqrt_d0;
        smp.hbar = hb;
        smp.theta = theta_;
        smp.alpha = alpha_;
        std::array<cplx, 5> fr{};
        for (int r = -2; r <= 2; ++r) {
            std::vector<std::vector<cplx>> T(L);
            for (int l = 0; l < L; ++l) {
                const BorelGrid& g = pd.grids[l];
                auto lr = laplace(g, (2 + r) << l, hb, lo);
                smp.tail_bound = std::max(smp.tail_bound, lr.truncation_tail_bound);
                T[l].push_back(lr.value);
                for (int k = 1; k <= l; ++k) {
                    double fac = std::pow(4.0, k) - 1;
                    T[l].push_back(T[l][k - 1] + (T[l][k - 1] - T[l - 1][k - 1]) / fac);
                }
            }
            cplx F = T[L - 1][L - 1];
            if (r == 0 && L > 1) smp.romberg_delta = std::abs(F - T[L - 1][L - 2]);
            const RaySample& node = st.nodes[(2 + r) * fine_per_coarse];
            cplx gv = g0(node.x, node.sqrt_d0) + hb * (g1(node.x, node.sqrt_d0) + F);
            fr[r + 2] = chi ? (*chi)(node.x, node.sqrt_d0) * gv : gv;
        }
        smp.f = fr[2];
        cplx dfdt = (fr[0] - 8.0 * fr[1] + 8.0 * fr[3] - fr[4]) / (12.0 * H_);
        cplx dfdx = std::polar(1.0, -theta_) * Lc(centre.x, centre.sqrt_d0) * dfdt;
        cplx a = hpoly(ca, centre.x, centre.sqrt_d0, hb), b = hpoly(cb, centre.x, centre.sqrt_d0, hb),
             c = hpoly(cc, centre.x, centre.sqrt_d0, hb);
        smp.residual = std::abs(hb * dfdx - a * smp.f * smp.f - b * smp.f - c);
        smp.accepted = smp.residual < opt_.residual_tol && smp.tail_bound < opt_.tail_tol;
        out.push_back(smp);
    }
    return out;
}

// ---------------------------------------------------------------------------

GevreyRemainderReport gevrey_remainders(const std::vector<ExactSolutionSample>& samples, const FormalSolution& fs,
                                        int n_bound) {
    GevreyRemainderReport rep;
    rep.n_bound = n_bound;
    if (samples.empty()) return rep;
    rep.x = samples.front().x;
    const int N = fs.order;
    for (int n = 0; n <= N; ++n) rep.n_values.push_back(n);
    auto fk = eval_coeffs(fs.coeffs, samples.front().x, samples.front().sqrt_d0);
    std::vector<double> absf;
    for (const auto& v : fk) absf.push_back(std::abs(v));
    rep.M = gevrey_fit_values(absf, std::min(5, std::max(0, N - 1))).M;
    if (!(rep.M > 1e-6)) rep.M = 1e-6;  // terminating series: any M works

    double C = 0;
    for (const auto& s : samples) {
        std::vector<double> R;
        cplx rem = s.f, p = 1.0;
        for (int n = 0; n <= N; ++n) {
            R.push_back(std::abs(rem));
            rem -= fk[n] * p;
            p *= s.hbar;
        }
        double ah = std::abs(s.hbar);
        for (int n = 0; n <= std::min(n_bound, N); ++n) {
            double denom = std::pow(rep.M, n) * factorial(n) * std::pow(ah, n);
            C = std::max(C, R[n] / denom);
        }
        int best = 0;
        for (int n = 1; n <= N; ++n)
            if (R[n] <= R[best]) best = n;
        rep.n_star.push_back(best);
        rep.r_star.push_back(R[best]);
        rep.hbars.push_back(s.hbar);
        rep.remainders.push_back(std::move(R));
    }
    rep.C = C;
    rep.bound_holds = std::isfinite(C) && rep.M > 0;
    for (std::size_t i = 0; i < samples.size() && rep.bound_holds; ++i)
        for (int n = 0; n <= std::min(n_bound, N); ++n)
            if (rep.remainders[i][n] >
                C * std::pow(rep.M, n) * factorial(n) * std::pow(std::abs(rep.hbars[i]), n) * (1 + 1e-12))
                rep.bound_holds = false;

    const std::size_t m = samples.size();
    if (m >= 2) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
        for (std::size_t i = 0; i < m; ++i) {
            double xv = 1.0 / std::abs(rep.hbars[i]), yv = std::log(rep.r_star[i]);
            sx += xv;
            sy += yv;
            sxx += xv * xv;
            sxy += xv * yv;
            syy += yv * yv;
        }
        double cxx = sxx - sx * sx / m, cxy = sxy - sx * sy / m, cyy = syy - sy * sy / m;
        rep.slope = cxy / cxx;
        rep.intercept = (sy - rep.slope * sx) / m;
        rep.r2 = cyy > 0 ? cxy * cxy / (cxx * cyy) : 1.0;
    }
    return rep;
}

ThetaSweepReport theta_sweep(const RiccatiEquation& eq, cplx x0, const std::vector<double>& thetas, int alpha,
                             const std::vector<std::pair<cplx, cplx>>& points, const PipelineOptions& opt,
                             std::optional<FieldElem> chi, BranchContext branch) {
    RiccatiEquation work = chi ? eq.regularize(*chi) : eq;
    ThetaSweepReport rep;
    rep.thetas = thetas;
    for (double th : thetas) {
        auto h = hypothesis_check(work, x0, th, alpha, branch);
        if (!h.pass) {
            std::ostringstream os;
            os << "theta = " << th << ": " << h.summary();
            throw HypothesisFailed(os.str());
        }
    }
    for (const auto& [x, hb] : points) {
        ThetaSweepReport::Point p;
        p.x = x;
        p.hbar = hb;
        rep.points.push_back(p);
    }
    for (double th : thetas) {
        ExactSolver solver(eq, alpha, th, opt, chi, branch);
        for (auto& p : rep.points) {
            try {
                p.values.push_back(solver.evaluate(p.x, p.hbar).f);
                p.inside.push_back(true);
            } catch (const OutsideBorelDisc&) {
                p.values.push_back(std::numeric_limits<double>::quiet_NaN());
                p.inside.push_back(false);
            }
        }
    }
    for (auto& p : rep.points) {
        for (std::size_t i = 0; i < p.values.size(); ++i)
            for (std::size_t j = i + 1; j < p.values.size(); ++j)
                if (p.inside[i] && p.inside[j])
                    p.max_deviation = std::max(p.max_deviation, std::abs(p.values[i] - p.values[j]));
        rep.max_deviation = std::max(rep.max_deviation, p.max_deviation);
    }
    return rep;
}

IbpReport ibp_identity_check(const BorelGrid& g, int row, const std::vector<cplx>& hbars, double xi_max) {
    const int len = g.xi_count(row);
    if (len < 9) throw GridTooShort("row too short for the derivative stencil");
    int M = xi_max > 0 ? int(std::lround(xi_max / g.h)) : (len - 1) - (len - 1) % kPanel;
    if (M > len - 1) throw GridTooShort("row shorter than the requested range");
    const cplx* v = g.total.row(row);
    std::vector<cplx> d(len);
    const double s = 12 * g.h;
    d[0] = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / s;
    d[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) / s;
    for (int m = 2; m < len - 2; ++m) d[m] = (v[m - 2] - 8.0 * v[m - 1] + 8.0 * v[m + 1] - v[m + 2]) / s;
    int e = len - 1;
    d[e - 1] = (3.0 * v[e] + 10.0 * v[e - 1] - 18.0 * v[e - 2] + 6.0 * v[e - 3] - v[e - 4]) / s;
    d[e] = (25.0 * v[e] - 48.0 * v[e - 1] + 36.0 * v[e - 2] - 16.0 * v[e - 3] + 3.0 * v[e - 4]) / s;

    IbpReport rep;
    for (cplx hb : hbars) {
        cplx hp = std::polar(1.0, -g.theta) * hb;
        cplx w = 1.0 / hp;
        cplx lhs = filon_laplace(v, M, g.h, w);
        cplx rhs = hp * v[0] + hp * filon_laplace(d.data(), M, g.h, w);
        rep.hbars.push_back(hb);
        rep.deviation.push_back(std::abs(lhs - rhs));
        rep.max_deviation = std::max(rep.max_deviation, rep.deviation.back());
    }
    return rep;
}

std::string samples_csv(const std::vector<ExactSolutionSample>& samples) {
    std::string out = "x_re,x_im,hbar_re,hbar_im,f_re,f_im,residual,tail_bound\n";
    char buf[512];
    for (const auto& s : samples) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.x.real(), s.x.imag(),
                      s.hbar.real(), s.hbar.imag(), s.f.real(), s.f.imag(), s.residual, s.tail_bound);
        out += buf;
    }
    return out;
}

} // namespace br
