#include "borel_riccati/formal.hpp"

#include <algorithm>
#include <cmath>

namespace br {

RiccatiEquation::RiccatiEquation(std::vector<FieldElem> a, std::vector<FieldElem> b,
                                 std::vector<FieldElem> c, AmbientPtr ambient)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), amb_(std::move(ambient)) {
    for (auto* list : {&a_, &b_, &c_})
        while (!list->empty() && list->back().is_zero()) list->pop_back();
    FieldElem d0 = this->b(0) * this->b(0) - FieldElem(4) * this->a(0) * this->c(0);
    if (!d0.is_rational()) throw DegenerateDiscriminant("D0 = b0^2 - 4 a0 c0 is not rational");
    if (d0.is_zero()) throw DegenerateDiscriminant("D0 is identically zero");
    if (!amb_) {
        for (auto* list : {&a_, &b_, &c_})
            for (const auto& e : *list)
                if (e.ambient()) amb_ = e.ambient();
    }
    if (!amb_) amb_ = std::make_shared<Ambient>(d0.u());
    if (!(amb_->D0 == d0.u())) throw AmbientMismatch("coefficients built over a different D0");

    turning_points_ = exact_roots(D0().num());
    for (const auto& r : exact_roots(D0().den())) poles_.push_back({false, r.location, r.multiplicity});
    int inf = D0().pole_order_at_infinity();
    if (inf > 0) poles_.push_back({true, {}, inf});
}

RiccatiEquation RiccatiEquation::from_rational(const std::vector<RationalFunction>& a,
                                               const std::vector<RationalFunction>& b,
                                               const std::vector<RationalFunction>& c) {
    auto lift = [](const std::vector<RationalFunction>& v) {
        return std::vector<FieldElem>(v.begin(), v.end());
    };
    return RiccatiEquation(lift(a), lift(b), lift(c));
}

int RiccatiEquation::hbar_degree() const {
    return static_cast<int>(std::max({a_.size(), b_.size(), c_.size()})) - 1;
}

RiccatiEquation RiccatiEquation::regularize(const FieldElem& chi) const {
    FieldElem chi_inv = chi.inverse();
    std::vector<FieldElem> a, b = b_, c;
    for (const auto& e : a_) a.push_back(chi * e);
    for (const auto& e : c_) c.push_back(e * chi_inv);
    if (b.size() < 2) b.resize(2);
    b[1] -= chi.derivative() * chi_inv;
    return RiccatiEquation(std::move(a), std::move(b), std::move(c), amb_);
}

FieldElem leading_order(const RiccatiEquation& eq, int alpha) {
    if (eq.a0_vanishes()) {
        if (alpha < 0) throw NoMinusSolution("a0 vanishes identically; only the + family exists");
        return -eq.c(0) / eq.b(0);
    }
    FieldElem s = FieldElem::sqrtD0(eq.ambient());
    FieldElem num = -eq.b(0) + (alpha > 0 ? s : -s);
    return num / (FieldElem(2) * eq.a(0));
}

FormalSolution formal_solve(const RiccatiEquation& eq, int alpha, int order) {
    FormalSolution fs;
    fs.alpha = alpha > 0 ? 1 : -1;
    fs.order = order;
    fs.ambient = eq.ambient();
    FieldElem f0 = leading_order(eq, fs.alpha);
    FieldElem lin = FieldElem(2) * eq.a(0) * f0 + eq.b(0);  // ε√D₀ (or b₀ when a₀ ≡ 0)
    FieldElem lin_inv = lin.inverse();

    std::vector<FieldElem>& f = fs.coeffs;
    f.push_back(f0);
    std::vector<FieldElem> P{f0 * f0};  // P_m = Σ_{i+j=m} f_i f_j
    for (int k = 1; k <= order; ++k) {
        FieldElem q;  // Σ_{i=1}^{k-1} f_i f_{k-i}
        for (int i = 1; 2 * i <= k; ++i) {
            FieldElem t = f[i] * f[k - i];
            q += (2 * i == k) ? t : FieldElem(2) * t;
        }
        FieldElem rhs = eq.a(0) * q + eq.c(k);
        for (int k1 = 1; k1 <= k; ++k1) {
            FieldElem ak = eq.a(k1), bk = eq.b(k1);
            if (!ak.is_zero()) rhs += ak * P[k - k1];
            if (!bk.is_zero()) rhs += bk * f[k - k1];
        }
        FieldElem fk = lin_inv * (f[k - 1].derivative() - rhs);
        P.push_back(q + FieldElem(2) * f0 * fk);
        f.push_back(std::move(fk));
    }
    fs.borel_coeffs = formal_borel(fs);
    return fs;
}

std::vector<FieldElem> formal_borel(const FormalSolution& fs) {
    std::vector<FieldElem> phi;
    mpz_class fact = 1;
    for (int k = 0; k + 1 < int(fs.coeffs.size()); ++k) {
        if (k > 0) fact *= k;
        phi.push_back(fs.coeffs[k + 1] * FieldElem(RationalFunction(GaussianRational(mpq_class(1, fact)))));
    }
    return phi;
}

namespace {

std::vector<FieldElem> series_mul(const std::vector<FieldElem>& x, const std::vector<FieldElem>& y, int order) {
    std::vector<FieldElem> r(order + 1);
    for (int i = 0; i <= order && i < int(x.size()); ++i) {
        if (x[i].is_zero()) continue;
        for (int j = 0; i + j <= order && j < int(y.size()); ++j)
            if (!y[j].is_zero()) r[i + j] += x[i] * y[j];
    }
    return r;
}

} // namespace

std::vector<FieldElem> formal_residual(const RiccatiEquation& eq, const FormalSolution& fs) {
    int N = fs.order;
    const auto& f = fs.coeffs;
    auto ff = series_mul(f, f, N);
    auto aff = series_mul(eq.a(), ff, N);
    auto bf = series_mul(eq.b(), f, N);
    std::vector<FieldElem> r(N + 1);
    for (int k = 0; k <= N; ++k) {
        FieldElem lhs = k >= 1 ? f[k - 1].derivative() : FieldElem();
        r[k] = lhs - aff[k] - bf[k] - eq.c(k);
    }
    return r;
}

std::vector<FieldElem> formal_discriminant(const RiccatiEquation& eq, const FormalSolution& plus,
                                           const FormalSolution& minus, int order) {
    if (plus.order < order || minus.order < order)
        throw InsufficientFormalOrder("formal solutions shorter than the requested order");
    std::vector<FieldElem> delta(order + 1);
    for (int k = 0; k <= order; ++k) delta[k] = plus.coeffs[k] - minus.coeffs[k];
    auto ad = series_mul(eq.a(), delta, order);
    return series_mul(ad, ad, order);
}

std::vector<cplx> eval_coeffs(const std::vector<FieldElem>& coeffs, cplx x0, cplx sqrt_d0) {
    std::vector<cplx> out;
    out.reserve(coeffs.size());
    for (const auto& e : coeffs) out.push_back(CompiledElem(e)(x0, sqrt_d0));
    return out;
}

GevreyFit gevrey_fit_values(const std::vector<double>& abs_fk, int k0) {
    GevreyFit g;
    int N = static_cast<int>(abs_fk.size()) - 1;
    g.abs_coeffs = abs_fk;
    g.k_min = std::min(std::max(k0, 1), std::max(N, 0));
    g.k_max = N;
    auto root = [&](int k) {
        if (abs_fk[k] == 0.0) return 0.0;
        return std::exp((std::log(abs_fk[k]) - std::lgamma(k + 1.0)) / k);
    };
    for (int k = std::max(g.k_min, 1); k <= N; ++k) g.M = std::max(g.M, root(k));
    if (N >= 1) g.limsup_estimate = root(N);
    for (int k = 0; k <= N; ++k) {
        if (abs_fk[k] == 0.0) continue;
        double lb = std::log(abs_fk[k]) - std::lgamma(k + 1.0);
        if (k > 0) {
            if (g.M == 0.0) continue;
            lb -= k * std::log(g.M);
        }
        g.C = std::max(g.C, std::exp(lb));
    }
    return g;
}

GevreyFit gevrey_fit(const FormalSolution& fs, cplx x0, const BranchContext& branch, int k0) {
    cplx s;
    try {
        s = branch_sqrt(CompiledRational(fs.ambient->D0), branch, x0);
    } catch (const Error& e) {
        throw EvaluationFailed(std::string("gevrey_fit: ") + e.what());
    }
    std::vector<double> a;
    try {
        for (cplx v : eval_coeffs(fs.coeffs, x0, s)) a.push_back(std::abs(v));
    } catch (const PoleHit& e) {
        throw EvaluationFailed(std::string("gevrey_fit: ") + e.what());
    }
    GevreyFit g = gevrey_fit_values(a, k0);
    g.sample_point = x0;
    return g;
}

} // namespace br
