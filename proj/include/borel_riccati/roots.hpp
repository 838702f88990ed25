#pragma once

#include <vector>

#include "borel_riccati/field.hpp"

namespace br {

/// Roots of a polynomial given low-degree-first complex coefficients:
/// companion-matrix eigenvalues polished by Newton steps.
std::vector<cplx> poly_roots(const std::vector<cplx>& coeffs);

struct Root {
    cplx location;
    int multiplicity;
};

/// Distinct roots of an exact polynomial with exact multiplicities
/// (squarefree decomposition first, then numerics per factor).
std::vector<Root> exact_roots(const Poly& p);

} // namespace br
