#pragma once

#include <optional>
#include <vector>

#include "borel_riccati/field.hpp"
#include "borel_riccati/roots.hpp"

namespace br {

struct Pole {
    bool at_infinity = false;
    cplx location{};
    int order = 0;  // pole order of D0 (for ∞: deg num − deg den)
};

/// ħ∂ₓf = a f² + b f + c with a, b, c polynomial in ħ. Coefficients are
/// field elements so that regularized equations (f = χg with χ involving
/// √D₀) stay in the same tower.
class RiccatiEquation {
public:
    RiccatiEquation(std::vector<FieldElem> a, std::vector<FieldElem> b, std::vector<FieldElem> c,
                    AmbientPtr ambient = nullptr);
    static RiccatiEquation from_rational(const std::vector<RationalFunction>& a,
                                         const std::vector<RationalFunction>& b,
                                         const std::vector<RationalFunction>& c);

    const std::vector<FieldElem>& a() const { return a_; }
    const std::vector<FieldElem>& b() const { return b_; }
    const std::vector<FieldElem>& c() const { return c_; }
    FieldElem a(int k) const { return k < int(a_.size()) ? a_[k] : FieldElem(); }
    FieldElem b(int k) const { return k < int(b_.size()) ? b_[k] : FieldElem(); }
    FieldElem c(int k) const { return k < int(c_.size()) ? c_[k] : FieldElem(); }
    int hbar_degree() const;

    const RationalFunction& D0() const { return amb_->D0; }
    const AmbientPtr& ambient() const { return amb_; }
    const std::vector<Root>& turning_points() const { return turning_points_; }
    const std::vector<Pole>& poles() const { return poles_; }
    bool a0_vanishes() const { return a(0).is_zero(); }

    /// f = χ g; returns the equation for g. D₀ is unchanged.
    RiccatiEquation regularize(const FieldElem& chi) const;

private:
    std::vector<FieldElem> a_, b_, c_;
    AmbientPtr amb_;
    std::vector<Root> turning_points_;
    std::vector<Pole> poles_;
};

struct FormalSolution {
    int alpha = 1;  // ±1
    int order = 0;
    std::vector<FieldElem> coeffs;        // f_0..f_N
    std::vector<FieldElem> borel_coeffs;  // φ_k = f_{k+1}/k!, k = 0..N-1
    AmbientPtr ambient;
};

struct GevreyFit {
    double C = 0, M = 0;
    cplx sample_point{};
    int k_min = 0, k_max = 0;
    double limsup_estimate = 0;  // (|f_N|/N!)^{1/N}
    double borel_radius() const { return M > 0 ? 1.0 / M : INFINITY; }
    std::vector<double> abs_coeffs;
};

FieldElem leading_order(const RiccatiEquation& eq, int alpha);
FormalSolution formal_solve(const RiccatiEquation& eq, int alpha, int order);
std::vector<FieldElem> formal_borel(const FormalSolution& fs);

/// Coefficients of ħ∂ₓf̂ − (a f̂² + b f̂ + c) through ħ^N for the truncated f̂.
std::vector<FieldElem> formal_residual(const RiccatiEquation& eq, const FormalSolution& fs);

/// ħ-coefficients of â²(f̂₊ − f̂₋)² through ħ^N.
std::vector<FieldElem> formal_discriminant(const RiccatiEquation& eq, const FormalSolution& plus,
                                           const FormalSolution& minus, int order);

/// |f_k(x0)| values at x0 with √D₀(x0) = sqrt_d0.
std::vector<cplx> eval_coeffs(const std::vector<FieldElem>& coeffs, cplx x0, cplx sqrt_d0);

GevreyFit gevrey_fit(const FormalSolution& fs, cplx x0, const BranchContext& branch, int k0 = 5);
GevreyFit gevrey_fit_values(const std::vector<double>& abs_fk, int k0 = 5);

} // namespace br
