#include "borel_riccati/borel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <sstream>

#include <fftw3.h>
#include "json.hpp"

#include "borel_riccati/parallel.hpp"

namespace br {

std::string to_string(Convention c) { return c == Convention::Characteristic ? "characteristic" : "as_printed"; }

// ---------------------------------------------------------------- standardization

cplx StandardizedEquation::borel_part(int i, int j, double xi) const {
    const auto& Ai = A[i];
    cplx r = 0, term = 1;
    for (std::size_t m = 1; m < Ai.size(); ++m) {
        if (m > 1) term *= xi / double(m - 1);
        r += Ai[m][j] * term;
    }
    return r;
}

StandardizedEquation StandardizedEquation::coarsen(int k) const {
    if (k == 1) return *this;
    if ((nodes_count - 1) % k != 0) throw LatticeMismatch("node count not divisible by the coarsening factor");
    double jb = t_before / (h * k);
    if (std::abs(jb - std::round(jb)) > 1e-9) throw LatticeMismatch("t_before is not on the coarse lattice");
    StandardizedEquation c = *this;
    c.h = h * k;
    c.nodes_count = (nodes_count - 1) / k + 1;
    c.nodes.clear();
    for (int j = 0; j < c.nodes_count; ++j) c.nodes.push_back(nodes[j * k]);
    for (int i = 0; i < 3; ++i)
        for (std::size_t m = 0; m < A[i].size(); ++m) {
            std::vector<cplx> v(c.nodes_count);
            for (int j = 0; j < c.nodes_count; ++j) v[j] = A[i][m][j * k];
            c.A[i][m] = std::move(v);
        }
    return c;
}

namespace {

void trim(std::vector<FieldElem>& v) {
    while (!v.empty() && v.back().is_zero()) v.pop_back();
}

} // namespace

StandardizedEquation standardize(const RiccatiEquation& eq, const LiouvilleFrame& frame, const FormalSolution& fs,
                                 cplx x_eval, const GridParams& params, std::optional<FieldElem> chi) {
    if (fs.order < 2) throw InsufficientFormalOrder("standardization needs f0, f1 and f2");
    StandardizedEquation st;
    st.theta = frame.theta;
    st.h = params.h;
    st.t_before = params.t_before;
    st.chi = std::move(chi);
    st.f0 = fs.coeffs[0];
    st.f1 = fs.coeffs[1];
    st.L = FieldElem(2) * eq.a(0) * st.f0 + eq.b(0);
    FieldElem Linv = st.L.inverse();

    st.x_eval = x_eval;
    try {
        st.sqrt_eval = frame_sqrt(frame, x_eval);
    } catch (const Error& e) {
        throw HalfstripMissing(std::string("evaluation point: ") + e.what());
    }
    cplx Lnum = CompiledElem(st.L)(x_eval, st.sqrt_eval);
    st.alpha = (Lnum / st.sqrt_eval).real() >= 0 ? 1 : -1;
    st.frame = frame.with(frame.theta, st.alpha);

    double span = 2 * params.t_before + params.xi_max;
    int D = static_cast<int>(std::lround(span / params.h));
    if (std::abs(D * params.h - span) > 1e-9 * span) throw LatticeMismatch("grid extent is not a multiple of h");
    st.nodes_count = D + 1;
    std::vector<double> t(D + 1);
    for (int j = 0; j <= D; ++j) t[j] = -params.t_before + j * params.h;
    st.nodes = sample_ray(st.frame, x_eval, st.sqrt_eval, t);

    try {
        cplx z = liouville_map(frame, x_eval);
        st.s_eval = double(st.alpha) * std::polar(1.0, -frame.theta) * z;
    } catch (const Error&) {
        st.s_eval = 0;
    }

    // ã = a/L, b̃ = (b_* + 2af₁ + 2a_*f₀)/L,
    // c̃ = (−∂f₁ + af₁² + (2a_*f₀ + b_*)f₁ + a_**f₀² + b_**f₀ + c_**)/L
    int K = eq.hbar_degree();
    const FieldElem& f0 = st.f0;
    const FieldElem& f1 = st.f1;
    FieldElem two(2);
    for (int m = 0; m <= K; ++m) {
        st.exact[2].push_back(eq.a(m) * Linv);
        st.exact[1].push_back((eq.b(m + 1) + two * eq.a(m) * f1 + two * eq.a(m + 1) * f0) * Linv);
        FieldElem c = eq.a(m) * f1 * f1 + (two * eq.a(m + 1) * f0 + eq.b(m + 1)) * f1 + eq.a(m + 2) * f0 * f0 +
                      eq.b(m + 2) * f0 + eq.c(m + 2);
        if (m == 0) c -= f1.derivative();
        st.exact[0].push_back(c * Linv);
    }
    for (auto& e : st.exact) trim(e);

    for (int i = 0; i < 3; ++i) {
        for (std::size_t m = 0; m < st.exact[i].size(); ++m) {
            CompiledElem ce(st.exact[i][m]);
            cplx rot = std::polar(1.0, (m + 1) * frame.theta);
            std::vector<cplx> v(st.nodes_count);
            for (int j = 0; j < st.nodes_count; ++j) v[j] = rot * ce(st.nodes[j].x, st.nodes[j].sqrt_d0);
            st.A[i].push_back(std::move(v));
        }
    }
    return st;
}

FieldElem leading_c_check(const StandardizedEquation& st, const FormalSolution& fs) {
    FieldElem c0 = st.exact[0].empty() ? FieldElem() : st.exact[0][0];
    return c0 + fs.coeffs.at(2);
}

// ---------------------------------------------------------------- row convolutions

namespace {

class FftPlans {
public:
    static FftPlans& instance() {
        static FftPlans p;
        return p;
    }
    std::pair<fftw_plan, fftw_plan> get(int n) {
        std::lock_guard<std::mutex> lock(mu_);
        auto it = plans_.find(n);
        if (it != plans_.end()) return it->second;
        fftw_complex* a = fftw_alloc_complex(n);
        fftw_complex* b = fftw_alloc_complex(n);
        unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fftw_plan f = fftw_plan_dft_1d(n, a, b, FFTW_FORWARD, flags);
        fftw_plan bk = fftw_plan_dft_1d(n, a, b, FFTW_BACKWARD, flags);
        fftw_free(a);
        fftw_free(b);
        return plans_[n] = {f, bk};
    }
    ~FftPlans() {
        for (auto& [n, p] : plans_) {
            fftw_destroy_plan(p.first);
            fftw_destroy_plan(p.second);
        }
    }

private:
    std::mutex mu_;
    std::map<int, std::pair<fftw_plan, fftw_plan>> plans_;
};

fftw_complex* fc(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

int fft_size(int L) {
    int P = 1;
    while (P < 2 * L - 1) P <<= 1;
    return std::max(P, 2);
}

// A lattice row in time domain, with its zero-padded spectrum in FFT mode.
struct Row {
    std::vector<cplx> time, spec;
};

class RowConv {
public:
    RowConv(int L, bool fft) : L_(L), fft_(fft) {
        if (fft_) {
            P_ = fft_size(L);
            plans_ = FftPlans::instance().get(P_);
            scratch_.resize(P_);
        }
    }
    int length() const { return L_; }

    void prepare(Row& r) const {
        if (!fft_) return;
        r.spec.assign(P_, 0.0);
        std::vector<cplx> in(P_, 0.0);
        std::copy(r.time.begin(), r.time.end(), in.begin());
        fftw_execute_dft(plans_.first, fc(in.data()), fc(r.spec.data()));
    }

    // Accumulates Σ w·(a∗b) as trapezoid convolutions.
    void begin() {
        acc_.assign(fft_ ? P_ : L_, 0.0);
        corr_.assign(L_, 0.0);
    }
    void add(const Row& a, const Row& b, double w) {
        if (fft_) {
            const cplx* sa = a.spec.data();
            const cplx* sb = b.spec.data();
            cplx* ac = acc_.data();
            int P = P_;
#pragma omp parallel for if (P >= 4096) num_threads(thread_cap())
            for (int f = 0; f < P; ++f) ac[f] += w * sa[f] * sb[f];
        } else {
            for (int m = 0; m < L_; ++m) {
                cplx s = 0;
                for (int l = 0; l <= m; ++l) s += a.time[m - l] * b.time[l];
                acc_[m] += w * s;
            }
        }
        cplx a0 = a.time[0], b0 = b.time[0];
        if (a0 != cplx(0) || b0 != cplx(0))
            for (int m = 0; m < L_; ++m) corr_[m] += 0.5 * w * (a.time[m] * b0 + a0 * b.time[m]);
    }
    std::vector<cplx> finish(double h) {
        std::vector<cplx> out(L_);
        if (fft_) {
            fftw_execute_dft(plans_.second, fc(acc_.data()), fc(scratch_.data()));
            double inv = 1.0 / P_;
            for (int m = 0; m < L_; ++m) out[m] = h * (scratch_[m] * inv - corr_[m]);
        } else {
            for (int m = 0; m < L_; ++m) out[m] = h * (acc_[m] - corr_[m]);
        }
        return out;
    }

private:
    int L_, P_ = 0;
    bool fft_;
    std::pair<fftw_plan, fftw_plan> plans_{};
    std::vector<cplx> acc_, corr_, scratch_;
};

Row make_row(std::vector<cplx> t, const RowConv& rc) {
    Row r{std::move(t), {}};
    rc.prepare(r);
    return r;
}

double max_abs(const std::vector<cplx>& v) {
    double m = 0;
    for (auto c : v) m = std::max(m, std::abs(c));
    return m;
}

// G(φ) = α₀ + a₁φ + α₁∗φ + a₂φ∗φ + α₂∗φ∗φ on the full triangle.
Triangle nonlinearity(const StandardizedEquation& st, const Triangle& phi, double h, bool fft) {
    Triangle G(phi.D);
    for (int j = 0; j <= phi.D; ++j) {
        int L = phi.row_length(j);
        RowConv rc(L, fft);
        Row p = make_row(std::vector<cplx>(phi.row(j), phi.row(j) + L), rc);
        rc.begin();
        rc.add(p, p, 1.0);
        Row pp = make_row(rc.finish(h), rc);
        std::vector<cplx> g(L);
        for (int m = 0; m < L; ++m) g[m] = st.a(1, j) * p.time[m] + st.a(2, j) * pp.time[m];
        for (int i : {0, 1, 2}) {
            if (!st.has_borel_part(i)) continue;
            std::vector<cplx> al(L);
            for (int m = 0; m < L; ++m) al[m] = st.borel_part(i, j, m * h);
            if (i == 0) {
                for (int m = 0; m < L; ++m) g[m] += al[m];
                continue;
            }
            Row ar = make_row(std::move(al), rc);
            rc.begin();
            rc.add(ar, i == 1 ? p : pp, 1.0);
            auto c = rc.finish(h);
            for (int m = 0; m < L; ++m) g[m] += c[m];
        }
        std::copy(g.begin(), g.end(), &G(j, 0));
    }
    return G;
}

} // namespace

std::vector<cplx> convolve(const std::vector<cplx>& f, const std::vector<cplx>& g, double h) {
    if (f.size() != g.size()) throw LatticeMismatch("convolution operands on different ξ-lattices");
    int L = static_cast<int>(f.size());
    if (L == 0) return {};
    RowConv rc(L, false);
    Row a{f, {}}, b{g, {}};
    rc.begin();
    rc.add(a, b, 1.0);
    return rc.finish(h);
}

std::vector<std::vector<cplx>> integral_op(const std::vector<std::vector<cplx>>& alpha, double h, int j_max) {
    if (alpha.empty()) return {};
    int J = static_cast<int>(alpha.size()) - 1;
    int M = static_cast<int>(alpha[0].size()) - 1;
    for (const auto& r : alpha)
        if (int(r.size()) != M + 1) throw LatticeMismatch("integral_op operand rows differ in length");
    if (J < j_max + M) throw GridTooShort("integral_op needs J ≥ j_max + M");
    std::vector<std::vector<cplx>> out(j_max + 1, std::vector<cplx>(M + 1));
    for (int j = 0; j <= j_max; ++j)
        for (int m = 1; m <= M; ++m) {
            cplx s = 0;
            for (int q = 0; q <= m; ++q) s += alpha[j + q][m - q];
            out[j][m] = h * (s - 0.5 * alpha[j][m] - 0.5 * alpha[j + m][0]);
        }
    return out;
}

Triangle integral_op(const Triangle& alpha, double h) {
    int D = alpha.D;
    Triangle out(D);
    std::vector<cplx> q_prev(D + 2, 0.0), q_cur(D + 2, 0.0);
    for (int j = D; j >= 0; --j) {
        int L = alpha.row_length(j);
        q_cur[0] = alpha(j, 0);
        for (int m = 1; m < L; ++m) q_cur[m] = alpha(j, m) + q_prev[m - 1];
        out(j, 0) = 0;
        for (int m = 1; m < L; ++m) out(j, m) = h * (q_cur[m] - 0.5 * alpha(j, m) - 0.5 * alpha(j + m, 0));
        std::swap(q_prev, q_cur);
    }
    return out;
}

GrowthFit growth_fit(const Triangle& phi, double h) {
    int D = phi.D;
    std::vector<double> g(D + 1, 0.0);
    for (int j = 0; j <= D; ++j)
        for (int m = 0; m < phi.row_length(j); ++m) g[m] = std::max(g[m], std::abs(phi(j, m)));
    GrowthFit fit;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (int m = D / 2; m <= D; ++m) {
        if (g[m] <= 0) continue;
        double x = m * h, y = std::log(g[m]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    if (n >= 2 && n * sxx - sx * sx > 0) fit.K = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    for (int m = 0; m <= D; ++m) fit.A = std::max(fit.A, g[m] * std::exp(-fit.K * m * h));
    return fit;
}

// ---------------------------------------------------------------- successive approximations

BorelGrid successive_approx(const StandardizedEquation& st, const SolveOptions& opt) {
    const int D = st.nodes_count - 1;
    const int N = opt.n_max;
    const double h = st.h;
    const bool fft = !opt.serial_reference;
    const bool characteristic = opt.convention == Convention::Characteristic;
    const double sign = characteristic ? -1.0 : 1.0;
    const bool al0 = st.has_borel_part(0), al1 = st.has_borel_part(1), al2 = st.has_borel_part(2);

    BorelGrid g;
    g.h = h;
    g.D = D;
    g.z0 = st.s(0);
    g.theta = st.theta;
    g.alpha = st.alpha;
    g.convention = opt.convention;
    g.total = Triangle(D);
    g.max_norms.assign(N + 1, 0.0);
    for (int n : opt.keep)
        if (n >= 0 && n <= N) g.components.emplace(n, Triangle(D));

    // Q_n(j,m) = Σ_s R_n(j+s, m−s) for the previous row; E_n[d] = R_n(d,0)
    std::vector<std::vector<cplx>> q_prev(N + 1, std::vector<cplx>(D + 2, 0.0));
    std::vector<std::vector<cplx>> q_cur(N + 1, std::vector<cplx>(D + 2, 0.0));
    std::vector<std::vector<cplx>> E(N + 1, std::vector<cplx>(D + 1, 0.0));

    // Rows are swept from short to long; a row stops once two consecutive
    // components are negligible and never stops before the previous row did.
    int n_hi = 1;
    double top_run = 0;
    const double cut = opt.tol * 1e-4;
    for (int j = D; j >= 0; --j) {
        const int L = D + 1 - j;
        RowConv rc(L, fft);
        std::vector<Row> phi(N + 1);
        std::vector<Row> C(N + 1);  // C_p = Σ_{i+k=p} φ_i∗φ_k (time + spectrum when α₂ ≠ 0)
        Row a1row, a2row;
        if (al1) {
            std::vector<cplx> v(L);
            for (int m = 0; m < L; ++m) v[m] = st.borel_part(1, j, m * h);
            a1row = make_row(std::move(v), rc);
        }
        if (al2) {
            std::vector<cplx> v(L);
            for (int m = 0; m < L; ++m) v[m] = st.borel_part(2, j, m * h);
            a2row = make_row(std::move(v), rc);
        }
        const cplx a1 = st.a(1, j), a2 = st.a(2, j);

        bool row_small_prev = false;
        for (int n = 0; n <= N; ++n) {
            std::vector<cplx> p(L, 0.0);
            if (n == 0) {
                for (int m = 0; m < L; ++m) p[m] = characteristic ? -st.a(0, j + m) : st.a(0, j);
            } else {
                std::vector<cplx> G(L, 0.0);
                if (n == 1 && al0)
                    for (int m = 0; m < L; ++m) G[m] += st.borel_part(0, j, m * h);
                if (a1 != cplx(0))
                    for (int m = 0; m < L; ++m) G[m] += a1 * phi[n - 1].time[m];
                if (n >= 2) {
                    int pidx = n - 2;
                    rc.begin();
                    for (int i = 0; 2 * i <= pidx; ++i) {
                        int k = pidx - i;
                        rc.add(phi[i], phi[k], i == k ? 1.0 : 2.0);
                    }
                    C[pidx].time = rc.finish(h);
                    if (al2) rc.prepare(C[pidx]);
                    if (a2 != cplx(0))
                        for (int m = 0; m < L; ++m) G[m] += a2 * C[pidx].time[m];
                    if (al1) {
                        rc.begin();
                        rc.add(a1row, phi[n - 2], 1.0);
                        auto c = rc.finish(h);
                        for (int m = 0; m < L; ++m) G[m] += c[m];
                    }
                }
                if (n >= 3 && al2) {
                    rc.begin();
                    rc.add(a2row, C[n - 3], 1.0);
                    auto c = rc.finish(h);
                    for (int m = 0; m < L; ++m) G[m] += c[m];
                }
                auto& qc = q_cur[n];
                const auto& qp = q_prev[n];
                E[n][j] = G[0];
                qc[0] = G[0];
                for (int m = 1; m < L; ++m) qc[m] = G[m] + qp[m - 1];
                for (int m = 1; m < L; ++m) p[m] = sign * h * (qc[m] - 0.5 * G[m] - 0.5 * E[n][j + m]);
            }
            g.max_norms[n] = std::max(g.max_norms[n], max_abs(p));
            cplx* tot = &g.total(j, 0);
            for (int m = 0; m < L; ++m) tot[m] += p[m];
            if (auto it = g.components.find(n); it != g.components.end())
                std::copy(p.begin(), p.end(), &it->second(j, 0));
            double pm = max_abs(p);
            if (n == 0) top_run = std::max(top_run, pm);
            phi[n] = make_row(std::move(p), rc);
            if (n >= 2 && n >= n_hi && pm <= cut * top_run && row_small_prev) {
                n_hi = n;
                break;
            }
            row_small_prev = pm <= cut * top_run;
            n_hi = std::max(n_hi, n);
        }
        std::swap(q_prev, q_cur);
    }

    double top = 0;
    for (auto v : g.total.v) top = std::max(top, std::abs(v));
    for (int n = 0; n < N; ++n)
        if (g.max_norms[n] < opt.tol * top && g.max_norms[n + 1] < opt.tol * top) {
            g.n_star = n;
            break;
        }
    g.converged = g.n_star >= 0;
    g.growth = growth_fit(g.total, h);

    if (opt.check_residual) {
        Triangle G = nonlinearity(st, g.total, h, fft);
        Triangle I = integral_op(G, h);
        double r = 0;
        for (int jj = 0; jj <= D; ++jj)
            for (int m = 0; m <= D - jj; ++m) {
                cplx seed = characteristic ? -st.a(0, jj + m) : st.a(0, jj);
                r = std::max(r, std::abs(g.total(jj, m) - (seed + sign * I(jj, m))));
            }
        g.residual = top > 0 ? r / top : r;
    }

    if (!g.converged && opt.throw_on_no_convergence) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "successive approximations not converged by n=%d: max|phi_n| = %.3g (n-1: %.3g)",
                      N, g.max_norms[N], N > 0 ? g.max_norms[N - 1] : 0.0);
        throw NoConvergence(buf);
    }
    return g;
}

// ---------------------------------------------------------------- export

std::string grid_csv(const BorelGrid& g) {
    std::ostringstream os;
    os << "j,m,re,im\n";
    char buf[128];
    for (int j = 0; j <= g.D; ++j)
        for (int m = 0; m < g.xi_count(j); ++m) {
            cplx v = g.total(j, m);
            std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g\n", j, m, v.real(), v.imag());
            os << buf;
        }
    return os.str();
}

std::string grid_header_json(const BorelGrid& g) {
    nlohmann::ordered_json j;
    j["h"] = g.h;
    j["J"] = g.D;
    j["M"] = g.D;
    j["z0"] = {g.z0.real(), g.z0.imag()};
    j["theta"] = g.theta;
    j["alpha"] = g.alpha;
    j["convention"] = to_string(g.convention);
    j["growth_fit"] = {{"A", g.growth.A}, {"K", g.growth.K}};
    j["n_star"] = g.n_star;
    j["max_norms"] = g.max_norms;
    j["residual"] = g.residual;
    return j.dump(2);
}

} // namespace br
