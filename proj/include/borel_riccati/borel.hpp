#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "borel_riccati/formal.hpp"
#include "borel_riccati/geometry.hpp"

namespace br {

/// Sign and seed of the Borel-plane integral equation.
///   Characteristic: φ = −a₀(z+ξ) − I₊[G(φ)], the Borel image of
///                   ħ∂F = F + ħ(A₂F² + A₁F + A₀) under F = L[φ].
///   AsPrinted:      φ = a₀(z) + I₊[G(φ)], seed constant in ξ.
enum class Convention { Characteristic, AsPrinted };
std::string to_string(Convention c);

struct GridParams {
    double h = 1.0 / 128;
    double xi_max = 12.0;
    int n_max = 60;
    double tol = 1e-10;
    double t_before = 0.0;  // rows start this far behind the evaluation point
};

/// Step 0: the Riccati equation rewritten along a (θ,α)-ray as
/// ħ′∂_s F = F + ħ′(A₂F² + A₁F + A₀), with f = f₀ + ħ(f₁ + F) and
/// ħ = e^{iθ}ħ′. Nodes sit at t_j = −t_before + j·h on the ray; s = s₀ + t.
struct StandardizedEquation {
    LiouvilleFrame frame;  // alpha is the effective sign of L = 2a₀f₀ + b₀
    double theta = 0;
    int alpha = 1;
    cplx x_eval{}, sqrt_eval{};
    cplx s_eval{};  // s at t = 0
    double h = 0, t_before = 0;
    int nodes_count = 0;
    std::vector<RaySample> nodes;

    FieldElem f0, f1, L;
    std::optional<FieldElem> chi;
    std::array<std::vector<FieldElem>, 3> exact;       // ħ-coefficients of c̃, b̃, ã (A₀, A₁, A₂)
    std::array<std::vector<std::vector<cplx>>, 3> A;   // A[i][m][j] incl. e^{i(m+1)θ}

    cplx s(int j) const { return s_eval + (-t_before + j * h); }
    cplx a(int i, int j) const { return A[i].empty() ? cplx(0) : A[i][0][j]; }
    bool has_borel_part(int i) const { return A[i].size() > 1; }
    /// α_i(s_j, ξ) = Σ_{m≥1} A_{i,m}(s_j) ξ^{m−1}/(m−1)!
    cplx borel_part(int i, int j, double xi) const;

    /// Every k-th node, for a lattice with step k·h.
    StandardizedEquation coarsen(int k) const;
};

/// `eq` is the equation actually resummed (already regularized when `chi` is
/// given); fs its formal solution of the frame's sign, order ≥ 2.
StandardizedEquation standardize(const RiccatiEquation& eq, const LiouvilleFrame& frame, const FormalSolution& fs,
                                 cplx x_eval, const GridParams& params,
                                 std::optional<FieldElem> chi = std::nullopt);

/// c̃₀ + f₂ (exact); zero when the standardization is consistent with the recursion.
FieldElem leading_c_check(const StandardizedEquation& st, const FormalSolution& fs);

/// Triangle j + m ≤ D of lattice values.
struct Triangle {
    int D = 0;
    std::vector<cplx> v;
    explicit Triangle(int d = 0) : D(d), v(size_for(d)) {}
    static std::size_t size_for(int d) { return std::size_t(d + 1) * (d + 2) / 2; }
    std::size_t offset(int j) const { return std::size_t(j) * (D + 1) - std::size_t(j) * (j - 1) / 2; }
    int row_length(int j) const { return D + 1 - j; }
    cplx& operator()(int j, int m) { return v[offset(j) + m]; }
    const cplx& operator()(int j, int m) const { return v[offset(j) + m]; }
    const cplx* row(int j) const { return v.data() + offset(j); }
};

struct GrowthFit {
    double A = 0, K = 0;
};

struct BorelGrid {
    double h = 0;
    int D = 0;
    cplx z0{};  // s at row 0
    double theta = 0;
    int alpha = 1;
    Convention convention = Convention::Characteristic;
    Triangle total;
    std::map<int, Triangle> components;
    std::vector<double> max_norms;  // max-node |φ_n|
    int n_star = -1;                // first n with max|φ_n|, max|φ_{n+1}| < tol·max|φ|
    bool converged = false;
    GrowthFit growth;
    double residual = 0;  // integral-equation residual, relative to max|φ|

    int xi_count(int j) const { return D + 1 - j; }
    cplx z(int j) const { return z0 + j * h; }
};

struct SolveOptions {
    int n_max = 60;
    double tol = 1e-10;
    Convention convention = Convention::Characteristic;
    std::vector<int> keep;  // components stored in full
    bool check_residual = true;
    bool serial_reference = false;  // direct O(L²) convolutions, no FFT, no threads
    bool throw_on_no_convergence = true;
};

BorelGrid successive_approx(const StandardizedEquation& st, const SolveOptions& opt);

/// Trapezoid convolution ∫₀^ξ f(ξ−y)g(y)dy on a common lattice.
std::vector<cplx> convolve(const std::vector<cplx>& f, const std::vector<cplx>& g, double h);

/// I₊[α](z_j, ξ_m) = ∫₀^{ξ_m} α(z_j + t, ξ_m − t)dt by the trapezoid rule on
/// the lattice diagonal. `alpha` is rectangular, alpha[j][m] for j ≤ J,
/// m ≤ M; rows 0..j_max of the result are returned.
std::vector<std::vector<cplx>> integral_op(const std::vector<std::vector<cplx>>& alpha, double h, int j_max);
Triangle integral_op(const Triangle& alpha, double h);

/// (A, K) with |φ| ≤ A·e^{Kξ} at every node.
GrowthFit growth_fit(const Triangle& phi, double h);

std::string grid_csv(const BorelGrid& g);
std::string grid_header_json(const BorelGrid& g);

} // namespace br
