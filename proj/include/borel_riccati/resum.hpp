#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "borel_riccati/borel.hpp"
#include "borel_riccati/formal.hpp"
#include "borel_riccati/geometry.hpp"

namespace br {

struct LaplaceResult {
    cplx value{};
    double truncation_tail_bound = 0;
    cplx hbar{};
    double theta = 0;
    bool accepted = false;  // tail bound below the requested tolerance
};

struct LaplaceOptions {
    double xi_max = 0;    // grid rows: 0 uses the longest multiple of 8 intervals
    double margin = 0.5;  // require Re(1/ħ′) ≥ K + margin
    double tol = 1e-10;
};

/// ∫₀^{Mh} e^{−wξ}φ(ξ)dξ from lattice values φ(mh), m ≤ M, M a multiple of 8;
/// degree-8 interpolation per panel integrated exactly against the exponential.
cplx filon_laplace(const cplx* phi, int intervals, double h, cplx w);

/// Laplace transform of a grid row. ħ is un-rotated; the integral runs in the
/// grid's own frame with ħ′ = e^{−iθ}ħ. Throws OutsideBorelDisc.
LaplaceResult laplace(const BorelGrid& g, int row, cplx hbar, const LaplaceOptions& opt = {});

/// ∫_{e^{iθ}ℝ₊} e^{−ζ/ħ}φ(ζ)dζ by adaptive Gauss–Kronrod; the tail bound
/// assumes |φ| does not grow past the last quadrature point.
LaplaceResult laplace(const std::function<cplx(cplx)>& phi, cplx hbar, double theta, const LaplaceOptions& opt = {});

/// φ = Σ c_k ξ^k/k!  ↦  Σ c_k ħ^{k+1}.
cplx laplace_poly(const std::vector<cplx>& c, cplx hbar);

struct AnalyticBorelOptions {
    double T = 400;        // symmetric truncation |t| ≤ T
    double panel = 0.5;    // Gauss–Legendre panel width in t
    int fit_degree = 8;    // small-ħ polynomial removed before quadrature
    double tol = 1e-6;     // ContourDivergence when |B_T − B_{T/2}| exceeds this
};

struct BorelSamples {
    std::vector<double> xi;
    std::vector<cplx> values;      // ψ(ξ) = B_θ[f](e^{iθ}ξ)
    double convergence_estimate = 0;
    std::vector<cplx> polynomial;  // fitted ħ-coefficients
};

/// Contour Borel transform on ħ(t) = e^{iθ}/(1/d + it).
BorelSamples analytic_borel(const std::function<cplx(cplx)>& f, const std::vector<double>& xi, double theta,
                            double diameter, const AnalyticBorelOptions& opt = {});

struct ExactSolutionSample {
    cplx x{}, sqrt_d0{}, hbar{}, f{};
    double residual = 0;
    double tail_bound = 0;
    double romberg_delta = 0;  // last Romberg correction at the evaluation row
    double theta = 0;
    int alpha = 1;
    bool accepted = false;
};

struct PipelineOptions {
    GridParams grid{1.0 / 128, 8.0, 80, 1e-13, 0.0};  // finest lattice, t_before set internally
    int levels = 3;                                   // Romberg levels h·{2^{levels−1}, …, 1}
    Convention convention = Convention::Characteristic;
    int formal_order = 4;
    double margin = 0.5;
    double tail_tol = 1e-10;
    double residual_tol = 1e-6;
    bool serial_reference = false;
};

struct PointDiagnostics {
    cplx x{};
    std::vector<double> h;
    std::vector<int> n_star;
    std::vector<GrowthFit> growth;
    std::vector<double> grid_residual;
    double stencil_step = 0;
};

/// Canonical exact solution f_α^θ of `eq`, optionally through f = χg.
class ExactSolver {
public:
    ExactSolver(RiccatiEquation eq, int alpha, double theta, PipelineOptions opt = {},
                std::optional<FieldElem> chi = std::nullopt, BranchContext branch = {},
                std::optional<cplx> frame_basepoint = std::nullopt);

    const RiccatiEquation& equation() const { return eq_; }
    const RiccatiEquation& working() const { return work_; }
    const FormalSolution& working_formal() const { return fs_; }
    const LiouvilleFrame& frame() const { return frame_; }
    const PipelineOptions& options() const { return opt_; }
    const std::optional<FieldElem>& chi() const { return chi_; }

    /// Builds (or reuses) the lattices for x and assembles f at each ħ.
    /// Throws PointOffGrid or OutsideBorelDisc.
    std::vector<ExactSolutionSample> evaluate(cplx x, const std::vector<cplx>& hbars);
    ExactSolutionSample evaluate(cplx x, cplx hbar) { return evaluate(x, std::vector<cplx>{hbar}).front(); }

    const PointDiagnostics& diagnostics(cplx x);
    /// Lattice of level `level` (0 = coarsest) built for x.
    const BorelGrid& grid(cplx x, int level);
    /// Row index of the evaluation point in the level's lattice.
    int eval_row(int level) const;

private:
    struct PointData {
        StandardizedEquation st;
        std::vector<BorelGrid> grids;
        PointDiagnostics diag;
    };
    PointData& build(cplx x);

    RiccatiEquation eq_, work_;
    int alpha_;
    double theta_;
    PipelineOptions opt_;
    std::optional<FieldElem> chi_;
    FormalSolution fs_;
    LiouvilleFrame frame_;
    double H_ = 0;
    std::map<std::pair<double, double>, PointData> cache_;
};

struct GevreyRemainderReport {
    cplx x{};
    std::vector<int> n_values;
    std::vector<cplx> hbars;
    std::vector<std::vector<double>> remainders;  // [ħ index][n]
    double C = 0, M = 0;
    int n_bound = 15;  // (C, M) fitted over n ≤ n_bound
    std::vector<int> n_star;
    std::vector<double> r_star;
    double slope = 0, intercept = 0, r2 = 0;  // log|R_{n*}| against 1/|ħ|
    bool bound_holds = false;
};

/// R_n = f − Σ_{k<n} f_k ħ^k at one x, for n ≤ order of `fs`. M is the
/// Gevrey estimate of the coefficients; C the least constant making the bound
/// hold over n ≤ n_bound and all samples. n* = argmin |R_n|, last on ties.
GevreyRemainderReport gevrey_remainders(const std::vector<ExactSolutionSample>& samples, const FormalSolution& fs,
                                        int n_bound = 15);

struct ThetaSweepReport {
    struct Point {
        cplx x{}, hbar{};
        std::vector<cplx> values;
        std::vector<bool> inside;  // ħ inside that θ's Borel disc
        double max_deviation = 0;
    };
    std::vector<double> thetas;
    std::vector<Point> points;
    double max_deviation = 0;
};

/// f^θ for every θ (hypotheses checked on the working equation at x0) and the
/// pairwise spread at each (x, ħ). Throws HypothesisFailed.
ThetaSweepReport theta_sweep(const RiccatiEquation& eq, cplx x0, const std::vector<double>& thetas, int alpha,
                             const std::vector<std::pair<cplx, cplx>>& points, const PipelineOptions& opt = {},
                             std::optional<FieldElem> chi = std::nullopt, BranchContext branch = {});

struct IbpReport {
    std::vector<cplx> hbars;
    std::vector<double> deviation;
    double max_deviation = 0;
};

/// L[φ] − ħ′φ(0) − ħ′L[∂_ξφ] on one grid row, ∂_ξ by fourth-order differences.
IbpReport ibp_identity_check(const BorelGrid& g, int row, const std::vector<cplx>& hbars, double xi_max = 0);

std::string samples_csv(const std::vector<ExactSolutionSample>& samples);

} // namespace br
