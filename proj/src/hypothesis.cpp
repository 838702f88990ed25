#include "borel_riccati/hypothesis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace br {

namespace {

int multiplicity_at(const Poly& p, cplx at) {
    if (p.degree() < 1) return 0;
    for (const auto& r : exact_roots(p))
        if (std::abs(r.location - at) < 1e-8 * std::max(1.0, std::abs(at))) return r.multiplicity;
    return 0;
}

std::string fmt(double v) {
    std::ostringstream os;
    if (v <= kZeroOrder / 2) os << "-inf";
    else os << v;
    return os.str();
}

} // namespace

int pole_order(const RationalFunction& r, const Pole& p) {
    if (r.is_zero()) return kZeroOrder;
    if (p.at_infinity) return r.num().degree() - r.den().degree();
    return multiplicity_at(r.den(), p.location) - multiplicity_at(r.num(), p.location);
}

double pole_order(const FieldElem& e, const Pole& p, const RationalFunction& D0) {
    double ou = pole_order(e.u(), p);
    double ov = e.v().is_zero() ? kZeroOrder : pole_order(e.v(), p) + 0.5 * pole_order(D0, p);
    return std::max(ou, ov);
}

std::string HypothesisReport::summary() const {
    std::ostringstream os;
    os << (pass ? "pass" : "fail");
    if (requires_regularization) os << " (requires regularization: monic conditions hold)";
    for (const auto& it : items)
        os << "; " << it.name << ": " << (it.skipped ? "skipped" : it.pass ? "pass" : "fail")
           << (it.detail.empty() ? "" : " [" + it.detail + "]");
    return os.str();
}

HypothesisReport hypothesis_check(const RiccatiEquation& eq, cplx x0, double theta, int alpha,
                                  const BranchContext& branch_in, HypothesisVariant variant, const TraceOptions& opt) {
    HypothesisReport rep;
    BranchContext branch = usable_branch(branch_in, eq.D0(), x0);
    HypothesisItem ray_item{"ray", false, false, ""};
    int eps = alpha;
    try {
        FieldElem f0 = leading_order(eq, alpha);
        FieldElem L = FieldElem(2) * eq.a(0) * f0 + eq.b(0);
        auto frame = LiouvilleFrame::make(eq, x0, theta, 1, branch);
        cplx s = frame_sqrt(frame, x0);
        eps = (CompiledElem(L)(x0, s) / s).real() >= 0 ? 1 : -1;
        rep.ray = trace_ray(frame.with(theta, eps), x0, s, opt).classification;
    } catch (const Error& e) {
        ray_item.detail = e.what();
        rep.items.push_back(ray_item);
        return rep;
    }
    ray_item.detail = to_string(rep.ray.kind);
    ray_item.pass = rep.ray.kind == RayKind::InfiniteToPole || rep.ray.kind == RayKind::Closed;
    rep.items.push_back(ray_item);

    HypothesisItem ord_item{"ord", false, false, ""};
    if (rep.ray.kind == RayKind::Closed) {
        ord_item.pass = ord_item.skipped = true;
        ord_item.detail = "closed trajectory";
    } else if (rep.ray.kind == RayKind::InfiniteToPole) {
        Pole p{rep.ray.pole_at_infinity, rep.ray.location, 0};
        const RationalFunction& D0 = eq.D0();
        double od = pole_order(D0, p);
        auto check = [&](bool monic, std::string& why) {
            bool ok = true;
            auto test = [&](const std::vector<FieldElem>& list, const char* name, double bound) {
                for (std::size_t k = 0; k < list.size(); ++k) {
                    double o = pole_order(list[k], p, D0);
                    if (o > bound + 1e-12) {
                        ok = false;
                        why += std::string(name) + std::to_string(k) + " ord " + fmt(o) + " > " + fmt(bound) + "; ";
                    }
                }
            };
            if (monic) {
                bool a_is_one = eq.a().size() == 1 && eq.a(0) == FieldElem(1);
                if (!a_is_one) {
                    ok = false;
                    why += "a is not 1; ";
                }
                test(eq.b(), "b", 0.5 * od);
                test(eq.c(), "c", od);
            } else {
                test(eq.a(), "a", 0.5 * od);
                test(eq.b(), "b", 0.5 * od);
                test(eq.c(), "c", 0.5 * od);
            }
            return ok;
        };
        std::string why;
        ord_item.pass = check(variant == HypothesisVariant::Monic, why);
        ord_item.detail = (p.at_infinity ? std::string("pole at infinity, ord D0 = ") : std::string("ord D0 = ")) +
                          fmt(od) + (why.empty() ? "" : "; " + why);
        if (!ord_item.pass && variant == HypothesisVariant::Riccati) {
            std::string unused;
            rep.requires_regularization = check(true, unused);
        }
    } else {
        ord_item.detail = "no limiting pole";
    }
    rep.items.push_back(ord_item);
    rep.pass = ray_item.pass && ord_item.pass;
    return rep;
}

} // namespace br
