#include "borel_riccati/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/numeric/odeint.hpp>

#include "borel_riccati/parallel.hpp"

namespace odeint = boost::numeric::odeint;

namespace br {

// ---------------------------------------------------------------- roots

std::vector<cplx> poly_roots(const std::vector<cplx>& coeffs) {
    std::vector<cplx> c = coeffs;
    while (!c.empty() && c.back() == cplx(0)) c.pop_back();
    int n = static_cast<int>(c.size()) - 1;
    if (n < 1) return {};
    std::vector<cplx> roots;
    if (n == 1) {
        roots.push_back(-c[0] / c[1]);
    } else {
        Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(n, n);
        for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
        for (int i = 0; i < n; ++i) comp(i, n - 1) = -c[i] / c[n];
        Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
        if (es.info() != Eigen::Success) throw RootFindingFailed("companion eigenvalue iteration failed");
        for (int i = 0; i < n; ++i) roots.push_back(es.eigenvalues()[i]);
    }
    double scale = 0;
    for (auto v : c) scale = std::max(scale, std::abs(v));
    for (auto& r : roots) {
        for (int it = 0; it < 8; ++it) {
            cplx p = 0, dp = 0;
            for (int k = n; k >= 0; --k) {
                dp = dp * r + p;
                p = p * r + c[k];
            }
            if (dp == cplx(0)) break;
            cplx step = p / dp;
            r -= step;
            if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(r))) break;
        }
    }
    std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return roots;
}

std::vector<Root> exact_roots(const Poly& p) {
    std::vector<Root> out;
    for (const auto& [factor, mult] : squarefree_factors(p)) {
        auto rs = poly_roots(factor.to_complex());
        for (cplx r : rs) {
            double scale = 0;
            cplx ar = 1;
            for (const auto& c : factor.coeffs()) {
                scale += std::abs(c.to_complex()) * std::abs(ar);
                ar *= std::max(1.0, std::abs(r));
            }
            if (std::abs(factor.eval(r)) > 1e-10 * std::max(1.0, scale))
                throw RootFindingFailed("root residual too large after polishing");
            out.push_back({r, mult});
        }
    }
    std::sort(out.begin(), out.end(), [](const Root& a, const Root& b) {
        return a.location.real() != b.location.real() ? a.location.real() < b.location.real()
                                                      : a.location.imag() < b.location.imag();
    });
    return out;
}

std::vector<cplx> turning_points(const RiccatiEquation& eq) {
    std::vector<cplx> out;
    for (const auto& r : eq.turning_points()) out.push_back(r.location);
    return out;
}

// ---------------------------------------------------------------- frames

LiouvilleFrame LiouvilleFrame::make(const RationalFunction& D0, cplx x0, double theta, int alpha,
                                    BranchContext branch) {
    LiouvilleFrame f;
    f.x0 = x0;
    f.branch = std::move(branch);
    f.theta = theta;
    f.alpha = alpha >= 0 ? 1 : -1;
    f.D0_exact = D0;
    f.D0 = CompiledRational(D0);
    f.D0_prime = CompiledRational(D0.derivative());
    f.turning_points = exact_roots(D0.num());
    for (const auto& r : exact_roots(D0.den())) f.poles.push_back({false, r.location, r.multiplicity});
    int inf = D0.pole_order_at_infinity();
    if (inf > 0) f.poles.push_back({true, {}, inf});
    return f;
}

LiouvilleFrame LiouvilleFrame::make(const RiccatiEquation& eq, cplx x0, double theta, int alpha,
                                    BranchContext branch) {
    return make(eq.D0(), x0, theta, alpha, std::move(branch));
}

LiouvilleFrame LiouvilleFrame::with(double theta_new, int alpha_new) const {
    LiouvilleFrame f = *this;
    f.theta = theta_new;
    f.alpha = alpha_new >= 0 ? 1 : -1;
    return f;
}

std::string to_string(RayKind k) {
    switch (k) {
    case RayKind::InfiniteToPole: return "InfiniteToPole";
    case RayKind::EscapesDomain: return "EscapesDomain";
    case RayKind::HitsTurningPoint: return "HitsTurningPoint";
    case RayKind::Closed: return "Closed";
    case RayKind::Unclassified: return "Unclassified";
    }
    return "?";
}

namespace {

cplx nearest_root(cplx d, cplx prev) {
    cplx s = std::sqrt(d);
    return std::abs(s - prev) <= std::abs(s + prev) ? s : -s;
}

double distance_to_segment(cplx p, cplx a, cplx b) {
    cplx ab = b - a;
    double L2 = std::norm(ab);
    if (L2 == 0) return std::abs(p - a);
    double u = std::clamp(((p - a) * std::conj(ab)).real() / L2, 0.0, 1.0);
    return std::abs(p - (a + u * ab));
}

} // namespace

cplx frame_sqrt(const LiouvilleFrame& frame, cplx x) { return branch_sqrt(frame.D0, frame.branch, x); }

cplx segment_integral(const CompiledRational& d0, cplx a, cplx b, cplx s_b) {
    // t = a + (b−a)u² removes the square-root endpoint singularity at a.
    cplx ba = b - a;
    auto integrand = [&](double u) -> cplx {
        if (u <= 0) return 0;
        cplx t = a + ba * (u * u);
        cplx s = continue_sqrt(d0, b, s_b, t, 0.0);
        return 2.0 * u * ba * s;
    };
    double err = 0;
    cplx v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, 1.0, 12, 1e-13, &err);
    return v;
}

cplx liouville_map(const LiouvilleFrame& frame, cplx x, const std::vector<cplx>& path) {
    if (x == frame.x0 && path.empty()) return 0;
    std::vector<cplx> pts{frame.x0};
    pts.insert(pts.end(), path.begin(), path.end());
    pts.push_back(x);
    cplx s;
    try {
        s = frame_sqrt(frame, x);
        cplx total = 0;
        for (std::size_t k = pts.size() - 1; k >= 1; --k) {
            cplx a = pts[k - 1], b = pts[k];
            if (a != b) total += segment_integral(frame.D0, a, b, s);
            if (k > 1) s = continue_sqrt(frame.D0, b, s, a);
        }
        return total;
    } catch (const BranchAmbiguous& e) {
        throw PathThroughSingularity(std::string("liouville_map: ") + e.what());
    } catch (const PoleHit& e) {
        throw PathThroughSingularity(std::string("liouville_map: ") + e.what());
    }
}

// ---------------------------------------------------------------- tracing

namespace {

using DenseStepper = odeint::dense_output_runge_kutta<
    odeint::controlled_runge_kutta<odeint::runge_kutta_dopri5<cplx>>>;

struct RayRhs {
    const CompiledRational* d0;
    cplx dir;
    cplx* s_ref;
    void operator()(const cplx& x, cplx& dx, double) const {
        cplx s = nearest_root((*d0)(x), *s_ref);
        if (s == cplx(0)) throw PoleHit("turning point on the ray");
        dx = dir / s;
    }
};

const Root* near_turning_point(const LiouvilleFrame& f, cplx x, double radius) {
    for (const auto& r : f.turning_points)
        if (std::abs(x - r.location) < radius * std::max(1.0, std::abs(r.location))) return &r;
    return nullptr;
}

const Pole* near_pole(const LiouvilleFrame& f, cplx x, double radius) {
    for (const auto& p : f.poles)
        if (!p.at_infinity && std::abs(x - p.location) < radius * std::max(1.0, std::abs(p.location))) return &p;
    return nullptr;
}

} // namespace

RayTrace trace_ray(const LiouvilleFrame& frame, cplx x_start, const TraceOptions& opt) {
    return trace_ray(frame, x_start, frame_sqrt(frame, x_start), opt);
}

RayTrace trace_ray(const LiouvilleFrame& frame, cplx x_start, cplx sqrt_start, const TraceOptions& opt) {
    RayTrace ray;
    ray.theta = frame.theta;
    ray.alpha = frame.alpha;
    ray.x_start = x_start;
    auto& cls = ray.classification;

    cplx dir = double(frame.alpha) * std::polar(1.0, frame.theta);
    cplx s_cur = sqrt_start;
    RayRhs rhs{&frame.D0, dir, &s_cur};
    cplx v0 = dir / sqrt_start;
    if (opt.record_samples) ray.samples.push_back({0.0, x_start, sqrt_start});

    DenseStepper stepper = odeint::make_dense_output(opt.atol, opt.rtol, odeint::runge_kutta_dopri5<cplx>());
    double dt0 = 1e-3 * std::max(1e-6, std::min(1.0, std::abs(sqrt_start))) * std::max(1.0, std::abs(x_start));
    stepper.initialize(x_start, 0.0, dt0);

    double max_dist = 0;
    double closure_scale = opt.closure_radius * std::max(1.0, std::abs(x_start));
    for (std::size_t step = 0;; ++step) {
        if (step >= opt.max_steps) {
            cls.kind = RayKind::Unclassified;
            cls.location = stepper.current_state();
            cls.detail = "step limit reached";
            break;
        }
        cplx x_prev = stepper.current_state();
        double t_prev = stepper.current_time();
        cplx s_prev = s_cur;
        try {
            stepper.do_step(rhs);
        } catch (const PoleHit&) {
            // stage evaluation landed on a singular point; classify from x_prev
            if (auto* tp = near_turning_point(frame, x_prev, 1e-3)) {
                cls.kind = RayKind::HitsTurningPoint;
                cls.location = tp->location;
                cls.t_hit = t_prev + std::abs(segment_integral(frame.D0, tp->location, x_prev, s_prev));
            } else {
                cls.kind = RayKind::EscapesDomain;
                cls.location = x_prev;
                cls.detail = "singular point reached by a stage";
            }
            break;
        }
        cplx x = stepper.current_state();
        double t = stepper.current_time();
        cplx d = frame.D0(x);
        s_cur = nearest_root(d, s_cur);
        if (opt.record_samples) ray.samples.push_back({t, x, s_cur});

        if (const Root* tp = near_turning_point(frame, x, opt.turning_radius)) {
            cls.kind = RayKind::HitsTurningPoint;
            cls.location = tp->location;
            cls.t_hit = t + std::abs(segment_integral(frame.D0, tp->location, x, s_cur));
            break;
        }
        if (std::abs(x) > opt.r_escape) {
            cls.kind = RayKind::InfiniteToPole;
            cls.pole_at_infinity = true;
            cls.location = x;
            break;
        }
        if (const Pole* p = near_pole(frame, x, opt.pole_radius)) {
            cls.kind = p->order >= 2 ? RayKind::InfiniteToPole : RayKind::EscapesDomain;
            cls.location = p->location;
            if (p->order < 2) cls.detail = "simple pole of D0";
            break;
        }
        // closure: the step passes close to the start after having left it
        double dist = std::abs(x - x_start);
        double seg_dist = distance_to_segment(x_start, x_prev, x);
        if (max_dist > 100 * closure_scale && seg_dist < std::max(10 * closure_scale, 0.5 * std::abs(x - x_prev))) {
            // golden-section search of |x(t) − x_start| on [t_prev, t]
            auto dist_at = [&](double tt) {
                cplx xx;
                stepper.calc_state(tt, xx);
                return std::abs(xx - x_start);
            };
            double a = t_prev, b = t;
            const double g = 0.5 * (std::sqrt(5.0) - 1.0);
            double c1 = b - g * (b - a), c2 = a + g * (b - a);
            double f1 = dist_at(c1), f2 = dist_at(c2);
            for (int it = 0; it < 200 && (b - a) > 1e-15 * std::max(1.0, t); ++it) {
                if (f1 < f2) {
                    b = c2;
                    c2 = c1;
                    f2 = f1;
                    c1 = b - g * (b - a);
                    f1 = dist_at(c1);
                } else {
                    a = c1;
                    c1 = c2;
                    f1 = f2;
                    c2 = a + g * (b - a);
                    f2 = dist_at(c2);
                }
            }
            double tm = 0.5 * (a + b);
            cplx xm;
            stepper.calc_state(tm, xm);
            if (std::abs(xm - x_start) < closure_scale) {
                cplx sm = nearest_root(frame.D0(xm), s_cur);
                cplx vm = dir / sm;
                double align = (vm * std::conj(v0)).real() / (std::abs(vm) * std::abs(v0));
                if (align > opt.closure_alignment) {
                    cls.kind = RayKind::Closed;
                    cls.period = tm;
                    cls.location = xm;
                    break;
                }
            }
        }
        max_dist = std::max(max_dist, dist);
        (void)d;

        double dt = stepper.current_time_step();
        if (std::abs(dt) < 1e-15 * std::max(1.0, t)) {
            if (auto* tp = near_turning_point(frame, x, 1e-3)) {
                cls.kind = RayKind::HitsTurningPoint;
                cls.location = tp->location;
                cls.t_hit = t + std::abs(segment_integral(frame.D0, tp->location, x, s_cur));
            } else {
                cls.kind = RayKind::Unclassified;
                cls.location = x;
                cls.detail = "step size underflow";
            }
            break;
        }
        if (t >= opt.max_arclength) {
            if (const Pole* p = near_pole(frame, x, 1e-3)) {
                cls.kind = p->order >= 2 ? RayKind::InfiniteToPole : RayKind::EscapesDomain;
                cls.location = p->location;
            } else if (std::abs(x) > 1e3 * std::max(1.0, std::abs(x_start))) {
                cls.kind = RayKind::InfiniteToPole;
                cls.pole_at_infinity = true;
                cls.location = x;
            } else {
                cls.kind = RayKind::Unclassified;
                cls.location = x;
                cls.detail = "no limit within max_arclength";
            }
            break;
        }
    }
    try {
        ray.z_start = liouville_map(frame, x_start);
        ray.z_known = true;
    } catch (const Error&) {
        ray.z_known = false;
    }
    return ray;
}

BranchContext usable_branch(const BranchContext& branch, const RationalFunction& D0, cplx x0) {
    try {
        cplx d = CompiledRational(D0)(branch.basepoint);
        if (d != cplx(0) && std::isfinite(std::abs(d))) return branch;
    } catch (const PoleHit&) {
    }
    return BranchContext{x0, 1, {}};
}

std::vector<RaySample> sample_ray(const LiouvilleFrame& frame, cplx x_start, cplx sqrt_start,
                                  const std::vector<double>& t_nodes, double rtol) {
    std::vector<RaySample> out;
    if (t_nodes.empty()) return out;
    cplx dir = double(frame.alpha) * std::polar(1.0, frame.theta);
    auto check = [&](cplx x) {
        for (const auto& r : frame.turning_points)
            if (std::abs(x - r.location) < 1e-6 * std::max(1.0, std::abs(r.location)))
                throw HalfstripMissing("ray reaches a turning point before the last lattice node");
        if (near_pole(frame, x, 1e-9)) throw HalfstripMissing("ray reaches a pole before the last lattice node");
    };

    double dt0 = 1e-3 * std::max(1e-6, std::min(1.0, std::abs(sqrt_start))) * std::max(1.0, std::abs(x_start));
    out.resize(t_nodes.size());
    // both halves start at x_start, so a node at t = 0 is reproduced exactly
    auto sweep = [&](int sign) {
        std::vector<std::size_t> idx;
        for (std::size_t k = 0; k < t_nodes.size(); ++k)
            if (sign > 0 ? t_nodes[k] >= 0 : t_nodes[k] < 0) idx.push_back(k);
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return sign * t_nodes[a] < sign * t_nodes[b]; });
        cplx s_cur = sqrt_start;
        RayRhs rhs{&frame.D0, dir, &s_cur};
        DenseStepper st = odeint::make_dense_output(1e-14, rtol, odeint::runge_kutta_dopri5<cplx>());
        st.initialize(x_start, 0.0, sign * dt0);
        std::size_t p = 0;
        while (p < idx.size() && t_nodes[idx[p]] == 0.0) out[idx[p++]] = {0.0, x_start, sqrt_start};
        while (p < idx.size()) {
            cplx s_old = s_cur;
            st.do_step(rhs);
            cplx xe = st.current_state();
            check(xe);
            s_cur = nearest_root(frame.D0(xe), s_cur);
            while (p < idx.size() && sign * t_nodes[idx[p]] <= sign * st.current_time()) {
                cplx xn;
                st.calc_state(t_nodes[idx[p]], xn);
                out[idx[p]] = {t_nodes[idx[p]], xn, nearest_root(frame.D0(xn), s_old)};
                ++p;
            }
        }
    };
    try {
        sweep(-1);
        sweep(+1);
    } catch (const PoleHit& e) {
        throw HalfstripMissing(std::string("ray sampling: ") + e.what());
    }
    return out;
}

RaySample shift_across(const LiouvilleFrame& frame, cplx x, cplx sqrt_x, double y, double rtol) {
    if (y == 0) return {0.0, x, sqrt_x};
    cplx dir = cplx(0, 1) * std::polar(1.0, frame.theta);
    cplx s_cur = sqrt_x;
    RayRhs rhs{&frame.D0, dir, &s_cur};
    cplx state = x;
    auto observer = [&](const cplx& xs, double) {
        s_cur = nearest_root(frame.D0(xs), s_cur);
        for (const auto& r : frame.turning_points)
            if (std::abs(xs - r.location) < 1e-6 * std::max(1.0, std::abs(r.location)))
                throw PathThroughSingularity("transverse shift reaches a turning point");
    };
    double dt0 = (y > 0 ? 1e-3 : -1e-3) * std::max(1e-6, std::min(1.0, std::abs(sqrt_x)));
    try {
        odeint::integrate_adaptive(odeint::make_controlled(1e-14, rtol, odeint::runge_kutta_dopri5<cplx>()), rhs,
                                   state, 0.0, y, dt0, observer);
    } catch (const PoleHit& e) {
        throw PathThroughSingularity(std::string("transverse shift: ") + e.what());
    }
    return {y, state, nearest_root(frame.D0(state), s_cur)};
}

bool same_classification(const RayClassification& a, const RayClassification& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
    case RayKind::InfiniteToPole:
        if (a.pole_at_infinity != b.pole_at_infinity) return false;
        return a.pole_at_infinity || std::abs(a.location - b.location) < 1e-3;
    case RayKind::Closed: return std::abs(a.period - b.period) <= 1e-6 * std::max(a.period, b.period);
    case RayKind::HitsTurningPoint: return std::abs(a.location - b.location) < 1e-3;
    default: return true;
    }
}

HalfStrip probe_halfstrip(const LiouvilleFrame& frame, cplx x0, double r_target, int n_probes,
                          const TraceOptions& opt) {
    HalfStrip hs;
    hs.theta = frame.theta;
    hs.alpha = frame.alpha;
    cplx s0 = frame_sqrt(frame, x0);
    hs.center_ray = trace_ray(frame, x0, s0, opt);
    RayKind ck = hs.center_ray.classification.kind;
    if (ck != RayKind::InfiniteToPole && ck != RayKind::Closed)
        throw NoHalfStrip("center ray is " + to_string(ck));

    TraceOptions popt = opt;
    popt.record_samples = false;
    auto attempt = [&](double r, std::vector<RayTrace>& rays, std::vector<double>& offs) {
        offs.resize(n_probes);
        rays.assign(n_probes, RayTrace{});
        std::vector<char> ok(n_probes, 0);
        // nodes span the open interval (−r, r) up to a relative 1e-6 inset
        for (int k = 0; k < n_probes; ++k)
            offs[k] = n_probes == 1 ? 0.0 : r * (1 - 1e-6) * (-1.0 + 2.0 * k / (n_probes - 1));
#pragma omp parallel for schedule(dynamic) num_threads(thread_cap())
        for (int k = 0; k < n_probes; ++k) {
            try {
                RaySample p = shift_across(frame, x0, s0, offs[k]);
                rays[k] = trace_ray(frame, p.x, p.sqrt_d0, popt);
                ok[k] = same_classification(rays[k].classification, hs.center_ray.classification);
            } catch (const Error&) {
                ok[k] = 0;
            }
        }
        return std::all_of(ok.begin(), ok.end(), [](char c) { return c != 0; });
    };

    std::vector<RayTrace> rays;
    std::vector<double> offs;
    double r = r_target;
    if (attempt(r, rays, offs)) {
        hs.radius = r;
        hs.probe_rays = std::move(rays);
        hs.probe_offsets = std::move(offs);
        return hs;
    }
    double lo = 0, hi = r;
    std::vector<RayTrace> best_rays;
    std::vector<double> best_offs;
    for (int it = 0; it < 12; ++it) {
        double mid = 0.5 * (lo + hi);
        if (attempt(mid, rays, offs)) {
            lo = mid;
            best_rays = rays;
            best_offs = offs;
        } else {
            hi = mid;
        }
    }
    if (lo == 0) throw NoHalfStrip("no positive halfstrip radius validated");
    hs.radius = lo;
    hs.probe_rays = std::move(best_rays);
    hs.probe_offsets = std::move(best_offs);
    return hs;
}

std::string ray_csv(const RayTrace& ray) {
    std::ostringstream os;
    os << "t,x_re,x_im,z_re,z_im\n";
    cplx dir = double(ray.alpha) * std::polar(1.0, ray.theta);
    char buf[256];
    for (const auto& s : ray.samples) {
        cplx z = ray.z_known ? ray.z_start + dir * s.t : cplx(NAN, NAN);
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t, s.x.real(), s.x.imag(), z.real(),
                      z.imag());
        os << buf;
    }
    const auto& c = ray.classification;
    os << "# classification: " << to_string(c.kind) << "\n";
    std::snprintf(buf, sizeof buf, "# location: %.17g,%.17g\n", c.location.real(), c.location.imag());
    os << buf;
    if (c.kind == RayKind::InfiniteToPole) os << "# pole_at_infinity: " << (c.pole_at_infinity ? 1 : 0) << "\n";
    if (c.kind == RayKind::HitsTurningPoint) {
        std::snprintf(buf, sizeof buf, "# t_hit: %.17g\n", c.t_hit);
        os << buf;
    }
    if (c.kind == RayKind::Closed) {
        std::snprintf(buf, sizeof buf, "# period: %.17g\n", c.period);
        os << buf;
    }
    if (!c.detail.empty()) os << "# detail: " << c.detail << "\n";
    return os.str();
}

} // namespace br
