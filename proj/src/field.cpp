#include "borel_riccati/field.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <sstream>

namespace br {

// ---------------------------------------------------------------- GaussianRational

GaussianRational GaussianRational::inverse() const {
    mpq_class n = re_ * re_ + im_ * im_;
    if (sgn(n) == 0) throw DivisionByZeroElem("inverse of zero Gaussian rational");
    return {re_ / n, -im_ / n};
}

GaussianRational& GaussianRational::operator+=(const GaussianRational& o) {
    re_ += o.re_;
    im_ += o.im_;
    return *this;
}

GaussianRational& GaussianRational::operator-=(const GaussianRational& o) {
    re_ -= o.re_;
    im_ -= o.im_;
    return *this;
}

GaussianRational& GaussianRational::operator*=(const GaussianRational& o) {
    if (sgn(im_) == 0 && sgn(o.im_) == 0) {
        re_ *= o.re_;
        return *this;
    }
    mpq_class r = re_ * o.re_ - im_ * o.im_;
    mpq_class i = re_ * o.im_ + im_ * o.re_;
    re_ = std::move(r);
    im_ = std::move(i);
    return *this;
}

std::string GaussianRational::to_string() const {
    auto imag_part = [](const mpq_class& q) -> std::string {
        if (q == 1) return "i";
        if (q == -1) return "-i";
        return q.get_str() + "*i";
    };
    if (sgn(im_) == 0) return re_.get_str();
    if (sgn(re_) == 0) return imag_part(im_);
    std::string s = "(" + re_.get_str();
    std::string ip = imag_part(im_);
    if (ip[0] != '-') s += "+";
    return s + ip + ")";
}

// ---------------------------------------------------------------- Poly

Poly::Poly(GaussianRational c) {
    if (!c.is_zero()) c_.push_back(std::move(c));
}

Poly::Poly(std::vector<GaussianRational> coeffs) : c_(std::move(coeffs)) { trim(); }

Poly Poly::monomial(GaussianRational c, int k) {
    std::vector<GaussianRational> v(static_cast<std::size_t>(k) + 1);
    v[k] = std::move(c);
    return Poly(std::move(v));
}

void Poly::trim() {
    while (!c_.empty() && c_.back().is_zero()) c_.pop_back();
}

bool Poly::is_monomial() const {
    if (c_.empty()) return false;
    for (std::size_t k = 0; k + 1 < c_.size(); ++k)
        if (!c_[k].is_zero()) return false;
    return true;
}

Poly Poly::derivative() const {
    if (c_.size() <= 1) return {};
    std::vector<GaussianRational> d(c_.size() - 1);
    for (std::size_t k = 1; k < c_.size(); ++k) d[k - 1] = c_[k] * GaussianRational(static_cast<long>(k));
    return Poly(std::move(d));
}

Poly Poly::monic() const {
    if (c_.empty() || c_.back().is_one()) return *this;
    return scaled(c_.back().inverse());
}

Poly Poly::scaled(const GaussianRational& s) const {
    if (s.is_zero()) return {};
    Poly r = *this;
    for (auto& c : r.c_) c *= s;
    return r;
}

cplx Poly::eval(cplx x) const {
    cplx r = 0;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) r = r * x + it->to_complex();
    return r;
}

GaussianRational Poly::eval(const GaussianRational& x) const {
    GaussianRational r;
    for (auto it = c_.rbegin(); it != c_.rend(); ++it) r = r * x + *it;
    return r;
}

std::vector<cplx> Poly::to_complex() const {
    std::vector<cplx> v;
    v.reserve(c_.size());
    for (const auto& c : c_) v.push_back(c.to_complex());
    return v;
}

Poly& Poly::operator+=(const Poly& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size());
    for (std::size_t k = 0; k < o.c_.size(); ++k) c_[k] += o.c_[k];
    trim();
    return *this;
}

Poly& Poly::operator-=(const Poly& o) {
    if (o.c_.size() > c_.size()) c_.resize(o.c_.size());
    for (std::size_t k = 0; k < o.c_.size(); ++k) c_[k] -= o.c_[k];
    trim();
    return *this;
}

Poly operator*(const Poly& a, const Poly& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<GaussianRational> r(a.c_.size() + b.c_.size() - 1);
    for (std::size_t i = 0; i < a.c_.size(); ++i) {
        if (a.c_[i].is_zero()) continue;
        for (std::size_t j = 0; j < b.c_.size(); ++j) r[i + j] += a.c_[i] * b.c_[j];
    }
    return Poly(std::move(r));
}

Poly Poly::operator-() const {
    Poly r = *this;
    for (auto& c : r.c_) c = -c;
    return r;
}

void Poly::divmod(const Poly& a, const Poly& b, Poly& q, Poly& r) {
    if (b.is_zero()) throw DivisionByZeroElem("polynomial division by zero");
    r = a;
    int db = b.degree();
    if (r.degree() < db) {
        q = Poly();
        return;
    }
    std::vector<GaussianRational> qc(static_cast<std::size_t>(r.degree() - db) + 1);
    GaussianRational inv = b.leading().inverse();
    while (!r.is_zero() && r.degree() >= db) {
        int shift = r.degree() - db;
        GaussianRational t = r.leading() * inv;
        for (int k = 0; k <= db; ++k) r.c_[k + shift] -= t * b.c_[k];
        r.c_.pop_back();  // leading term cancels exactly
        r.trim();
        qc[shift] = std::move(t);
    }
    q = Poly(std::move(qc));
}

std::string Poly::to_string(int shift) const {
    if (c_.empty()) return "0";
    std::string out;
    for (int k = degree(); k >= 0; --k) {
        const auto& c = c_[k];
        if (c.is_zero()) continue;
        int e = k - shift;
        std::string term;
        std::string var = e == 0 ? "" : (e == 1 ? "x" : "x^" + std::to_string(e));
        if (var.empty()) {
            term = c.to_string();
        } else if (c.is_one()) {
            term = var;
        } else if (c == GaussianRational(-1)) {
            term = "-" + var;
        } else {
            term = c.to_string() + "*" + var;
        }
        if (!out.empty() && term[0] != '-') out += "+";
        out += term;
    }
    return out;
}

namespace {

Poly euclid_gcd(Poly a, Poly b) {
    while (!b.is_zero()) {
        Poly q, r;
        Poly::divmod(a, b, q, r);
        a = std::move(b);
        b = r.monic();
    }
    return a.monic();
}

// Squarefree, pairwise coprime, monic factors seen in earlier gcds. Exact
// denominators are products of a handful of these, and stripping them by
// division avoids Euclid on two large polynomials, whose coefficients swell.
thread_local std::vector<Poly> known_factors;
constexpr std::size_t kMaxKnownFactors = 64;
constexpr int kMaxFactorDegree = 8;

Poly quotient(const Poly& a, const Poly& b) {
    Poly q, r;
    Poly::divmod(a, b, q, r);
    return q;
}

int strip(Poly& p, const Poly& f) {
    int m = 0;
    Poly q, r;
    while (p.degree() >= f.degree()) {
        Poly::divmod(p, f, q, r);
        if (!r.is_zero()) break;
        p = std::move(q);
        ++m;
    }
    return m;
}

void learn(const Poly& g) {
    for (const auto& [f, mult] : squarefree_factors(g)) {
        (void)mult;
        if (known_factors.size() >= kMaxKnownFactors || f.degree() > kMaxFactorDegree) return;
        known_factors.push_back(f.monic());
    }
}

} // namespace

Poly gcd(Poly a, Poly b) {
    if (a.is_zero()) return b.is_zero() ? Poly() : b.monic();
    if (b.is_zero()) return a.monic();
    if (a.degree() == 0 || b.degree() == 0) return Poly(GaussianRational(1));

    // gcd(f a, f b) = f gcd(a, b), and gcd(f^k a, b) = gcd(a, b) when f is coprime to b
    Poly g(GaussianRational(1));
    for (std::size_t k = 0; k < known_factors.size() && a.degree() > 0 && b.degree() > 0;) {
        bool divides[2] = {false, false}, split = false;
        Poly quot[2];
        Poly* sides[2] = {&a, &b};
        for (int s = 0; s < 2 && !split; ++s) {
            Poly r;
            Poly::divmod(*sides[s], known_factors[k], quot[s], r);
            divides[s] = r.is_zero();
            if (divides[s]) continue;
            Poly c = euclid_gcd(known_factors[k], r);
            if (c.degree() > 0) {
                // refine so the factor divides each side fully or not at all
                known_factors.push_back(quotient(known_factors[k], c).monic());
                known_factors[k] = std::move(c);
                split = true;
            }
        }
        if (split) continue;
        const Poly& f = known_factors[k];
        if (divides[0] && divides[1]) {
            a = std::move(quot[0]);
            b = std::move(quot[1]);
            g = g * f;
            continue;
        }
        if (divides[0]) strip(a, f);
        if (divides[1]) strip(b, f);
        ++k;
    }
    if (a.degree() == 0 || b.degree() == 0) return g;
    Poly rest = euclid_gcd(std::move(a), std::move(b));
    if (rest.degree() > 0) {
        learn(rest);
        g = g * rest;
    }
    return g;
}

std::vector<std::pair<Poly, int>> squarefree_factors(const Poly& p) {
    // Yun's algorithm; characteristic zero.
    std::vector<std::pair<Poly, int>> out;
    if (p.degree() < 1) return out;
    Poly dp = p.derivative();
    Poly a = euclid_gcd(p, dp);
    Poly q, r;
    Poly::divmod(p, a, q, r);
    Poly b = q;
    Poly::divmod(dp, a, q, r);
    Poly c = q;
    Poly d = c - b.derivative();
    for (int i = 1; b.degree() >= 1; ++i) {
        Poly g = euclid_gcd(b, d);
        if (g.degree() >= 1) out.emplace_back(g, i);
        Poly::divmod(b, g, q, r);
        b = q;
        Poly::divmod(d, g, q, r);
        c = q;
        d = c - b.derivative();
    }
    return out;
}

// ---------------------------------------------------------------- RationalFunction

RationalFunction::RationalFunction(Poly num, Poly den) : num_(std::move(num)), den_(std::move(den)) {
    if (den_.is_zero()) throw DivisionByZeroElem("rational function with zero denominator");
    if (num_.is_zero()) {
        den_ = Poly(GaussianRational(1));
        return;
    }
    if (den_.degree() > 0) {
        Poly g = gcd(num_, den_);
        if (g.degree() > 0) {
            Poly q, r;
            Poly::divmod(num_, g, q, r);
            num_ = std::move(q);
            Poly::divmod(den_, g, q, r);
            den_ = std::move(q);
        }
    }
    if (!den_.leading().is_one()) {
        GaussianRational inv = den_.leading().inverse();
        num_ = num_.scaled(inv);
        den_ = den_.scaled(inv);
    }
}

RationalFunction RationalFunction::operator-() const {
    RationalFunction r = *this;
    r.num_ = -r.num_;
    return r;
}

RationalFunction& RationalFunction::operator+=(const RationalFunction& o) {
    if (o.is_zero()) return *this;
    if (is_zero()) return *this = o;
    if (den_ == o.den_) {
        *this = RationalFunction(num_ + o.num_, den_);
        return *this;
    }
    Poly g = gcd(den_, o.den_);
    Poly q, r, db, ob;
    Poly::divmod(o.den_, g, ob, r);
    Poly::divmod(den_, g, db, r);
    Poly n = num_ * ob + o.num_ * db;
    Poly d = den_ * ob;
    if (n.is_zero()) return *this = RationalFunction();
    Poly h = gcd(n, g);
    if (h.degree() > 0) {
        Poly::divmod(n, h, q, r);
        n = q;
        Poly::divmod(d, h, q, r);
        d = q;
    }
    num_ = std::move(n);
    den_ = std::move(d);
    return *this;
}

RationalFunction& RationalFunction::operator*=(const RationalFunction& o) {
    if (is_zero() || o.is_zero()) return *this = RationalFunction();
    Poly q, r;
    Poly a = num_, b = den_, c = o.num_, d = o.den_;
    Poly g1 = gcd(a, d);
    if (g1.degree() > 0) {
        Poly::divmod(a, g1, q, r);
        a = q;
        Poly::divmod(d, g1, q, r);
        d = q;
    }
    Poly g2 = gcd(c, b);
    if (g2.degree() > 0) {
        Poly::divmod(c, g2, q, r);
        c = q;
        Poly::divmod(b, g2, q, r);
        b = q;
    }
    num_ = a * c;
    den_ = b * d;  // product of monic polynomials stays monic
    return *this;
}

RationalFunction RationalFunction::inverse() const {
    if (is_zero()) throw DivisionByZeroElem("inverse of zero rational function");
    return RationalFunction(den_, num_);
}

RationalFunction RationalFunction::derivative() const {
    if (den_.degree() == 0) return RationalFunction(num_.derivative());
    return RationalFunction(num_.derivative() * den_ - num_ * den_.derivative(), den_ * den_);
}

cplx RationalFunction::eval(cplx x) const {
    cplx d = den_.eval(x);
    if (d == cplx(0)) throw PoleHit("evaluation at a pole");
    return num_.eval(x) / d;
}

GaussianRational RationalFunction::eval(const GaussianRational& x) const {
    GaussianRational d = den_.eval(x);
    if (d.is_zero()) throw PoleHit("evaluation at a pole");
    return num_.eval(x) / d;
}

std::string RationalFunction::to_string() const {
    if (den_.degree() == 0) return num_.to_string();
    if (den_.is_monomial()) return num_.to_string(den_.degree());
    return "(" + num_.to_string() + ")/(" + den_.to_string() + ")";
}

RationalFunction pow(const RationalFunction& r, int k) {
    RationalFunction base = k < 0 ? r.inverse() : r;
    RationalFunction out(1);
    for (int n = std::abs(k); n > 0; n >>= 1) {
        if (n & 1) out *= base;
        if (n > 1) base *= base;
    }
    return out;
}

// ---------------------------------------------------------------- FieldElem

Ambient::Ambient(RationalFunction d0) : D0(std::move(d0)) {
    if (D0.is_zero()) throw DegenerateDiscriminant("D0 is identically zero");
    half_log_derivative = D0.derivative() / (D0 * RationalFunction(2));
}

FieldElem::FieldElem(RationalFunction u, RationalFunction v, AmbientPtr amb)
    : u_(std::move(u)), v_(std::move(v)), amb_(std::move(amb)) {
    if (!v_.is_zero() && !amb_) throw AmbientMismatch("irrational element without ambient D0");
}

void FieldElem::adopt(const AmbientPtr& other) {
    if (!other || amb_ == other) return;
    if (!amb_) {
        amb_ = other;
        return;
    }
    if (!(amb_->D0 == other->D0)) throw AmbientMismatch("field elements over different D0");
}

RationalFunction FieldElem::norm() const {
    if (v_.is_zero()) return u_ * u_;
    return u_ * u_ - v_ * v_ * amb_->D0;
}

FieldElem FieldElem::inverse() const {
    if (is_zero()) throw DivisionByZeroElem("inverse of zero field element");
    if (v_.is_zero()) return FieldElem(u_.inverse(), RationalFunction(), amb_);
    RationalFunction n = norm();
    if (n.is_zero()) throw DivisionByZeroElem("zero divisor: u^2 - v^2 D0 = 0");
    RationalFunction ni = n.inverse();
    return FieldElem(u_ * ni, -v_ * ni, amb_);
}

FieldElem FieldElem::derivative() const {
    if (v_.is_zero()) return FieldElem(u_.derivative(), RationalFunction(), amb_);
    return FieldElem(u_.derivative(), v_.derivative() + v_ * amb_->half_log_derivative, amb_);
}

FieldElem& FieldElem::operator+=(const FieldElem& o) {
    adopt(o.amb_);
    u_ += o.u_;
    v_ += o.v_;
    return *this;
}

FieldElem& FieldElem::operator-=(const FieldElem& o) {
    adopt(o.amb_);
    u_ -= o.u_;
    v_ -= o.v_;
    return *this;
}

FieldElem& FieldElem::operator*=(const FieldElem& o) {
    adopt(o.amb_);
    if (v_.is_zero() && o.v_.is_zero()) {
        u_ *= o.u_;
        return *this;
    }
    RationalFunction u = u_ * o.u_;
    if (!v_.is_zero() && !o.v_.is_zero()) u += v_ * o.v_ * amb_->D0;
    RationalFunction v = u_ * o.v_ + o.u_ * v_;
    u_ = std::move(u);
    v_ = std::move(v);
    return *this;
}

cplx FieldElem::eval(cplx x, cplx sqrt_d0) const {
    cplx r = u_.is_zero() ? cplx(0) : u_.eval(x);
    if (!v_.is_zero()) r += v_.eval(x) * sqrt_d0;
    return r;
}

namespace {

bool has_top_level_sum(const std::string& s) {
    int depth = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (c == '(') ++depth;
        else if (c == ')') --depth;
        else if (depth == 0 && i > 0 && (c == '+' || c == '-') && s[i - 1] != '^') return true;
    }
    return false;
}

} // namespace

std::string FieldElem::to_string() const {
    if (v_.is_zero()) return u_.to_string();
    std::string vs;
    if (v_ == RationalFunction(1)) vs = "sqrtD0";
    else if (v_ == RationalFunction(-1)) vs = "-sqrtD0";
    else {
        vs = v_.to_string();
        if (has_top_level_sum(vs)) vs = "(" + vs + ")";
        vs += "*sqrtD0";
    }
    if (u_.is_zero()) return vs;
    std::string us = u_.to_string();
    return us + (vs[0] == '-' ? "" : "+") + vs;
}

FieldElem field_arith(const FieldElem& lhs, const FieldElem& rhs, FieldOp op) {
    switch (op) {
    case FieldOp::add: return lhs + rhs;
    case FieldOp::sub: return lhs - rhs;
    case FieldOp::mul: return lhs * rhs;
    case FieldOp::div: return lhs / rhs;
    }
    return {};
}

// ---------------------------------------------------------------- parser

namespace {

template <class V>
class Parser {
public:
    Parser(std::string_view text, const AmbientPtr* amb) : s_(text), amb_(amb) {}

    V parse() {
        V v = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const {
        int line = 1, col = 1;
        for (std::size_t k = 0; k < pos_ && k < s_.size(); ++k) {
            if (s_[k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError(msg, line, col);
    }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    V expr() {
        V v = term();
        for (;;) {
            if (accept('+')) v = v + term();
            else if (accept('-')) v = v - term();
            else return v;
        }
    }

    V term() {
        V v = unary();
        for (;;) {
            if (accept('*')) v = v * unary();
            else if (accept('/')) {
                std::size_t at = pos_;
                V d = unary();
                if (d.is_zero()) {
                    pos_ = at;
                    fail("division by zero");
                }
                v = v / d;
            } else {
                return v;
            }
        }
    }

    V unary() {
        if (accept('-')) return -unary();
        if (accept('+')) return unary();
        return power();
    }

    long integer() {
        skip();
        std::size_t start = pos_;
        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (start == pos_) fail("expected integer");
        if (pos_ - start > 9) fail("exponent too large");
        return std::stol(std::string(s_.substr(start, pos_ - start)));
    }

    V power() {
        V base = atom();
        if (!accept('^')) return base;
        bool neg = false;
        bool paren = accept('(');
        if (accept('-')) neg = true;
        else accept('+');
        long k = integer();
        if (paren && !accept(')')) fail("expected ')'");
        if (neg && base.is_zero()) fail("negative power of zero");
        return ipow(base, neg ? -k : k);
    }

    static V ipow(V base, long k) {
        if (k < 0) {
            base = base.inverse();
            k = -k;
        }
        V out(1);
        while (k > 0) {
            if (k & 1) out = out * base;
            k >>= 1;
            if (k) base = base * base;
        }
        return out;
    }

    V atom() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of input");
        char c = s_[pos_];
        if (c == '(') {
            ++pos_;
            V v = expr();
            if (!accept(')')) fail("expected ')'");
            return v;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t start = pos_;
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
            mpz_class z(std::string(s_.substr(start, pos_ - start)));
            return V(RationalFunction(GaussianRational(mpq_class(z))));
        }
        if (s_.substr(pos_, 6) == "sqrtD0") {
            if constexpr (std::is_same_v<V, FieldElem>) {
                pos_ += 6;
                return FieldElem::sqrtD0(*amb_);
            } else {
                fail("sqrtD0 not allowed in a rational function");
            }
        }
        if (c == 'x') {
            ++pos_;
            return V(RationalFunction(Poly::x()));
        }
        if (c == 'i') {
            ++pos_;
            return V(RationalFunction(GaussianRational::i()));
        }
        fail("unexpected character '" + std::string(1, c) + "'");
    }

    std::string_view s_;
    const AmbientPtr* amb_;
    std::size_t pos_ = 0;
};

} // namespace

RationalFunction parse_rational(std::string_view text) {
    return Parser<RationalFunction>(text, nullptr).parse();
}

FieldElem parse_field_elem(std::string_view text, const AmbientPtr& amb) {
    return Parser<FieldElem>(text, &amb).parse();
}

// ---------------------------------------------------------------- numerics

CompiledRational::CompiledRational(const RationalFunction& r)
    : num_(r.num().to_complex()), den_(r.den().to_complex()) {}

cplx CompiledRational::operator()(cplx x) const {
    if (num_.empty()) return 0;
    cplx n = 0, d = 0;
    for (auto it = num_.rbegin(); it != num_.rend(); ++it) n = n * x + *it;
    for (auto it = den_.rbegin(); it != den_.rend(); ++it) d = d * x + *it;
    if (d == cplx(0) || !std::isfinite(std::abs(n / d))) throw PoleHit("evaluation at a pole");
    return n / d;
}

namespace {

cplx nearest_root(cplx d, cplx prev) {
    cplx s = std::sqrt(d);
    return std::abs(s - prev) <= std::abs(s + prev) ? s : -s;
}

cplx continue_rec(const CompiledRational& d0, cplx xa, cplx sa, cplx xb, double tol, int depth) {
    cplx d = d0(xb);
    if (std::abs(d) < tol) throw BranchAmbiguous("continuation passes through a zero of D0");
    cplx sb = nearest_root(d, sa);
    if (std::abs(std::arg(sb / sa)) < std::numbers::pi / 4) return sb;
    if (depth > 40) throw BranchAmbiguous("continuation failed to resolve √D0");
    cplx xm = 0.5 * (xa + xb);
    cplx sm = continue_rec(d0, xa, sa, xm, tol, depth + 1);
    return continue_rec(d0, xm, sm, xb, tol, depth + 1);
}

} // namespace

cplx continue_sqrt(const CompiledRational& d0, cplx x0, cplx s0, cplx x1, double tol) {
    if (s0 == cplx(0)) throw BranchAmbiguous("continuation from a zero of D0");
    // Coarse pre-subdivision so a near-miss of a zero is sampled.
    const int n = 8;
    cplx s = s0;
    for (int k = 1; k <= n; ++k) {
        cplx xa = x0 + (x1 - x0) * (double(k - 1) / n);
        cplx xb = x0 + (x1 - x0) * (double(k) / n);
        s = continue_rec(d0, xa, s, xb, tol, 0);
    }
    return s;
}

cplx branch_sqrt(const CompiledRational& d0, const BranchContext& branch, cplx x) {
    cplx d = d0(branch.basepoint);
    if (d == cplx(0)) throw BranchAmbiguous("branch basepoint is a turning point");
    cplx s = std::sqrt(d) * double(branch.sign_at_basepoint >= 0 ? 1 : -1);
    cplx at = branch.basepoint;
    for (cplx p : branch.continuation_path) {
        s = continue_sqrt(d0, at, s, p);
        at = p;
    }
    if (x != at) s = continue_sqrt(d0, at, s, x);
    return s;
}

cplx field_eval(const FieldElem& e, cplx x, const BranchContext& branch) {
    if (e.is_rational()) return e.u().eval(x);
    CompiledRational d0(e.ambient()->D0);
    return e.eval(x, branch_sqrt(d0, branch, x));
}

} // namespace br
