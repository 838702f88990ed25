#pragma once

#include <string>
#include <vector>

#include "borel_riccati/formal.hpp"
#include "borel_riccati/geometry.hpp"

namespace br {

/// Pole order of r at p (∞: deg num − deg den). Zero functions give a large
/// negative sentinel.
int pole_order(const RationalFunction& r, const Pole& p);

/// max(ord u, ord v + ½ord D₀) for u + v√D₀.
double pole_order(const FieldElem& e, const Pole& p, const RationalFunction& D0);

constexpr int kZeroOrder = -1000000;

enum class HypothesisVariant { Riccati, Monic };

struct HypothesisItem {
    std::string name;
    bool pass = false;
    bool skipped = false;
    std::string detail;
};

struct HypothesisReport {
    bool pass = false;
    bool requires_regularization = false;  // ord conditions fail, monic ones hold
    RayClassification ray;
    std::vector<HypothesisItem> items;
    std::string summary() const;
};

/// Traces the (θ,α)-ray from x0 and checks the ord conditions at its limit:
/// Riccati variant ord a_k, b_k, c_k ≤ ½ord D₀; monic variant ord b_k ≤ ½ord D₀,
/// ord c_k ≤ ord D₀. A closed ray skips the ord conditions.
HypothesisReport hypothesis_check(const RiccatiEquation& eq, cplx x0, double theta, int alpha,
                                  const BranchContext& branch = {},
                                  HypothesisVariant variant = HypothesisVariant::Riccati,
                                  const TraceOptions& opt = {});

} // namespace br
