#pragma once

#include <complex>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <gmpxx.h>

#include "borel_riccati/errors.hpp"

namespace br {

using cplx = std::complex<double>;

/// a + b·i with a, b exact rationals. mpq_class keeps both parts reduced.
class GaussianRational {
public:
    GaussianRational() = default;
    GaussianRational(long n) : re_(n), im_(0) {}
    GaussianRational(mpq_class re, mpq_class im = 0) : re_(std::move(re)), im_(std::move(im)) {
        re_.canonicalize();
        im_.canonicalize();
    }
    static GaussianRational i() { return {0, 1}; }

    const mpq_class& real() const { return re_; }
    const mpq_class& imag() const { return im_; }
    bool is_zero() const { return sgn(re_) == 0 && sgn(im_) == 0; }
    bool is_one() const { return re_ == 1 && sgn(im_) == 0; }
    cplx to_complex() const { return {re_.get_d(), im_.get_d()}; }

    GaussianRational conj() const { return {re_, -im_}; }
    GaussianRational inverse() const;
    std::string to_string() const;

    GaussianRational& operator+=(const GaussianRational& o);
    GaussianRational& operator-=(const GaussianRational& o);
    GaussianRational& operator*=(const GaussianRational& o);
    GaussianRational& operator/=(const GaussianRational& o) { return *this *= o.inverse(); }

    friend GaussianRational operator+(GaussianRational a, const GaussianRational& b) { return a += b; }
    friend GaussianRational operator-(GaussianRational a, const GaussianRational& b) { return a -= b; }
    friend GaussianRational operator*(GaussianRational a, const GaussianRational& b) { return a *= b; }
    friend GaussianRational operator/(GaussianRational a, const GaussianRational& b) { return a /= b; }
    GaussianRational operator-() const { return {-re_, -im_}; }
    friend bool operator==(const GaussianRational& a, const GaussianRational& b) {
        return a.re_ == b.re_ && a.im_ == b.im_;
    }

private:
    mpq_class re_{0}, im_{0};
};

/// Dense polynomial in x over ℚ(i); coefficients stored low degree first,
/// trailing zeros trimmed so the zero polynomial is empty.
class Poly {
public:
    Poly() = default;
    Poly(GaussianRational c);
    explicit Poly(std::vector<GaussianRational> coeffs);
    static Poly x() { return Poly(std::vector<GaussianRational>{0, 1}); }
    static Poly monomial(GaussianRational c, int k);

    int degree() const { return static_cast<int>(c_.size()) - 1; }
    bool is_zero() const { return c_.empty(); }
    bool is_constant() const { return c_.size() <= 1; }
    const GaussianRational& operator[](std::size_t k) const { return c_[k]; }
    const std::vector<GaussianRational>& coeffs() const { return c_; }
    const GaussianRational& leading() const { return c_.back(); }
    bool is_monomial() const;

    Poly derivative() const;
    Poly monic() const;
    cplx eval(cplx x) const;
    GaussianRational eval(const GaussianRational& x) const;
    std::vector<cplx> to_complex() const;

    Poly& operator+=(const Poly& o);
    Poly& operator-=(const Poly& o);
    friend Poly operator+(Poly a, const Poly& b) { return a += b; }
    friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
    friend Poly operator*(const Poly& a, const Poly& b);
    Poly operator-() const;
    Poly scaled(const GaussianRational& s) const;
    friend bool operator==(const Poly& a, const Poly& b) { return a.c_ == b.c_; }

    /// Quotient and remainder; throws DivisionByZeroElem for b = 0.
    static void divmod(const Poly& a, const Poly& b, Poly& q, Poly& r);

    /// Terms in descending degree, e.g. "x^2-3/2*x+i". `shift` lowers every
    /// printed exponent, used to print p/x^k as negative powers.
    std::string to_string(int shift = 0) const;

private:
    void trim();
    std::vector<GaussianRational> c_;
};

/// Monic gcd over ℚ(i); gcd(0, 0) = 0.
Poly gcd(Poly a, Poly b);

/// Roots of each squarefree factor paired with its multiplicity.
std::vector<std::pair<Poly, int>> squarefree_factors(const Poly& p);

/// num/den with den monic and gcd(num, den) = 1.
class RationalFunction {
public:
    RationalFunction() : den_(GaussianRational(1)) {}
    RationalFunction(GaussianRational c) : num_(std::move(c)), den_(GaussianRational(1)) {}
    RationalFunction(long c) : RationalFunction(GaussianRational(c)) {}
    RationalFunction(Poly p) : num_(std::move(p)), den_(GaussianRational(1)) {}
    RationalFunction(Poly num, Poly den);

    const Poly& num() const { return num_; }
    const Poly& den() const { return den_; }
    bool is_zero() const { return num_.is_zero(); }
    bool is_constant() const { return num_.is_constant() && den_.is_constant(); }

    RationalFunction derivative() const;
    RationalFunction inverse() const;
    cplx eval(cplx x) const;
    GaussianRational eval(const GaussianRational& x) const;

    /// Pole order at ∞ (deg num − deg den); meaningless for the zero function.
    int pole_order_at_infinity() const { return num_.degree() - den_.degree(); }

    RationalFunction& operator+=(const RationalFunction& o);
    RationalFunction& operator-=(const RationalFunction& o) { return *this += -o; }
    RationalFunction& operator*=(const RationalFunction& o);
    RationalFunction& operator/=(const RationalFunction& o) { return *this *= o.inverse(); }
    friend RationalFunction operator+(RationalFunction a, const RationalFunction& b) { return a += b; }
    friend RationalFunction operator-(RationalFunction a, const RationalFunction& b) { return a -= b; }
    friend RationalFunction operator*(RationalFunction a, const RationalFunction& b) { return a *= b; }
    friend RationalFunction operator/(RationalFunction a, const RationalFunction& b) { return a /= b; }
    RationalFunction operator-() const;
    friend bool operator==(const RationalFunction& a, const RationalFunction& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }

    std::string to_string() const;

private:
    Poly num_, den_;
};

RationalFunction pow(const RationalFunction& r, int k);

/// Shared D₀ for a family of field elements, with the derivative data the
/// product rule on √D₀ needs.
struct Ambient {
    explicit Ambient(RationalFunction d0);
    RationalFunction D0;
    RationalFunction half_log_derivative;  // D₀′/(2D₀)
};
using AmbientPtr = std::shared_ptr<const Ambient>;

/// u + v·√D₀. Elements with v = 0 may omit the ambient; combining two
/// elements with different D₀ throws AmbientMismatch.
class FieldElem {
public:
    FieldElem() = default;
    FieldElem(long c) : u_(c) {}
    FieldElem(RationalFunction u) : u_(std::move(u)) {}
    FieldElem(RationalFunction u, RationalFunction v, AmbientPtr amb);
    static FieldElem sqrtD0(AmbientPtr amb) { return FieldElem(0, 1, std::move(amb)); }

    const RationalFunction& u() const { return u_; }
    const RationalFunction& v() const { return v_; }
    const AmbientPtr& ambient() const { return amb_; }
    bool is_zero() const { return u_.is_zero() && v_.is_zero(); }
    bool is_rational() const { return v_.is_zero(); }

    /// u² − v²D₀; zero exactly when the element is a zero divisor.
    RationalFunction norm() const;
    FieldElem conj() const { return FieldElem(u_, -v_, amb_); }
    FieldElem inverse() const;
    FieldElem derivative() const;

    FieldElem& operator+=(const FieldElem& o);
    FieldElem& operator-=(const FieldElem& o);
    FieldElem& operator*=(const FieldElem& o);
    FieldElem& operator/=(const FieldElem& o) { return *this *= o.inverse(); }
    friend FieldElem operator+(FieldElem a, const FieldElem& b) { return a += b; }
    friend FieldElem operator-(FieldElem a, const FieldElem& b) { return a -= b; }
    friend FieldElem operator*(FieldElem a, const FieldElem& b) { return a *= b; }
    friend FieldElem operator/(FieldElem a, const FieldElem& b) { return a /= b; }
    FieldElem operator-() const { return FieldElem(-u_, -v_, amb_); }
    friend bool operator==(const FieldElem& a, const FieldElem& b) {
        return a.u_ == b.u_ && a.v_ == b.v_;
    }

    /// Numeric value given the branch value s = √D₀(x).
    cplx eval(cplx x, cplx sqrt_d0) const;

    std::string to_string() const;

private:
    void adopt(const AmbientPtr& other);
    RationalFunction u_, v_;
    AmbientPtr amb_;
};

enum class FieldOp { add, sub, mul, div };
FieldElem field_arith(const FieldElem& lhs, const FieldElem& rhs, FieldOp op);
inline FieldElem field_derivative(const FieldElem& e) { return e.derivative(); }

/// Grammar: integers, i, x, + - * / ^ (integer exponents), parentheses.
/// `sqrtD0` is accepted only by parse_field_elem.
RationalFunction parse_rational(std::string_view text);
FieldElem parse_field_elem(std::string_view text, const AmbientPtr& amb);

/// Precompiled double-precision form of a rational function.
class CompiledRational {
public:
    CompiledRational() = default;
    explicit CompiledRational(const RationalFunction& r);
    cplx operator()(cplx x) const;
    bool is_zero() const { return num_.empty(); }

private:
    std::vector<cplx> num_, den_;
};

class CompiledElem {
public:
    CompiledElem() = default;
    explicit CompiledElem(const FieldElem& e) : u_(e.u()), v_(e.v()) {}
    cplx operator()(cplx x, cplx sqrt_d0) const {
        cplx r = u_.is_zero() ? cplx(0) : u_(x);
        if (!v_.is_zero()) r += v_(x) * sqrt_d0;
        return r;
    }

private:
    CompiledRational u_, v_;
};

/// Basepoint, sign of √D₀ there relative to the principal root, and a
/// polyline along which evaluation points are reached.
struct BranchContext {
    cplx basepoint{1.0, 0.0};
    int sign_at_basepoint = 1;
    std::vector<cplx> continuation_path;
};

/// Continues a value s0 of √D₀ at x0 to x1 along the straight segment,
/// subdividing until consecutive arguments differ by less than π/4.
/// Throws BranchAmbiguous when the segment passes within `tol` of a zero.
cplx continue_sqrt(const CompiledRational& d0, cplx x0, cplx s0, cplx x1, double tol = 1e-12);

/// √D₀ at x continued from the branch basepoint along its path, then
/// straight to x.
cplx branch_sqrt(const CompiledRational& d0, const BranchContext& branch, cplx x);

cplx field_eval(const FieldElem& e, cplx x, const BranchContext& branch);

} // namespace br
