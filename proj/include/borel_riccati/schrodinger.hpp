#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "borel_riccati/hypothesis.hpp"
#include "borel_riccati/resum.hpp"

namespace br {

/// ħ²ψ″ = qψ with q = Σ q_k ħ^k; Riccati form ħf′ = f² − q via ψ′ = −fψ/ħ.
struct SchrodingerProblem {
    std::vector<RationalFunction> q;
    cplx x0 = 1.0;
    BranchContext branch{};

    RiccatiEquation riccati() const;
};

struct WkbHypothesisReport {
    bool pole_condition = false;
    std::string pole_detail;
    HypothesisReport plus_end, minus_end;  // monic ord conditions at each limit
    bool pass = false;
    std::string summary() const;
};

/// Finite poles of every q_k must be poles of q₀ of order ≥ 2 with
/// ord q_k ≤ ord q₀; both halves of Γ(x0) are traced.
WkbHypothesisReport check_wkb_hypotheses(const SchrodingerProblem& p, double theta);

struct WkbSample {
    cplx x{}, hbar{}, psi{}, dpsi{}, f{};
};

struct WkbSolution {
    int sign = 1;
    double theta = 0;
    std::vector<WkbSample> samples;
    const WkbSample& at(cplx x, cplx hbar) const;
};

struct WkbOptions {
    PipelineOptions pipeline{};
    std::optional<double> theta_minus;   // θ for f₋ when it differs from θ for f₊
    std::string regularizer = "sqrtD0/2";
    double rtol = 1e-12;
};

/// f and ψ at x from f(x0) = f0 by integrating ħf′ = f² − q and ∫f along the
/// segment x0 → x. ψ(x0) = 1.
WkbSample continue_wkb(const SchrodingerProblem& p, cplx f0, cplx x, cplx hbar, double rtol = 1e-12);

/// |ħ²ψ″ − qψ| / |qψ| with ψ″ from a 5-point stencil of continued values.
double psi_residual(const SchrodingerProblem& p, cplx f0, cplx x, cplx hbar, double step = 2e-3, double rtol = 1e-12);

/// ψ± at every (x, ħ); f±(x0) from the resummation pipeline.
std::pair<WkbSolution, WkbSolution> exact_wkb_basis(const SchrodingerProblem& p, double theta,
                                                    const std::vector<std::pair<cplx, cplx>>& points,
                                                    const WkbOptions& opt = {});

/// ψ₊ψ′₋ − ψ′₊ψ₋
cplx wronskian(const std::pair<WkbSolution, WkbSolution>& basis, cplx x, cplx hbar);

std::string psi_csv(const WkbSolution& s);

} // namespace br
