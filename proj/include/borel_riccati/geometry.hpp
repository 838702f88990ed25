#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "borel_riccati/field.hpp"
#include "borel_riccati/formal.hpp"

namespace br {

/// Liouville coordinate z = Φ(x) = ∫_{x0}^x √D₀ with the sign of √D₀ fixed
/// by `branch`. x0 may be a turning point (e.g. the Airy Φ₀ convention).
struct LiouvilleFrame {
    cplx x0{};
    BranchContext branch;
    double theta = 0.0;
    int alpha = 1;

    RationalFunction D0_exact;
    CompiledRational D0;
    CompiledRational D0_prime;
    std::vector<Root> turning_points;
    std::vector<Pole> poles;

    static LiouvilleFrame make(const RiccatiEquation& eq, cplx x0, double theta, int alpha,
                               BranchContext branch);
    static LiouvilleFrame make(const RationalFunction& D0, cplx x0, double theta, int alpha,
                               BranchContext branch);
    LiouvilleFrame with(double theta_new, int alpha_new) const;
};

enum class RayKind { InfiniteToPole, EscapesDomain, HitsTurningPoint, Closed, Unclassified };
std::string to_string(RayKind k);

struct RayClassification {
    RayKind kind = RayKind::Unclassified;
    bool pole_at_infinity = false;
    cplx location{};   // pole, turning point, or last point
    double t_hit = 0;  // HitsTurningPoint: Φ-arclength to the turning point
    double period = 0; // Closed
    std::string detail;
};

struct RaySample {
    double t;
    cplx x;
    cplx sqrt_d0;
};

struct RayTrace {
    double theta = 0;
    int alpha = 1;
    cplx x_start{};
    cplx z_start{};  // Φ(x_start) in the frame
    bool z_known = false;
    std::vector<RaySample> samples;
    RayClassification classification;
};

struct TraceOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double r_escape = 1e6;
    double pole_radius = 1e-6;
    double turning_radius = 1e-6;
    double closure_radius = 1e-6;
    double closure_alignment = 0.999;
    double max_arclength = 1e12;
    std::size_t max_steps = 200000;
    bool record_samples = true;
};

std::vector<cplx> turning_points(const RiccatiEquation& eq);

/// Φ(x) − Φ(x0) along the polyline x0 → path… → x, √D₀ continued from the
/// frame branch value at x.
cplx liouville_map(const LiouvilleFrame& frame, cplx x, const std::vector<cplx>& path = {});

/// ∫_a^b √D₀ along a straight segment where √D₀(b) = s_b is known; a may
/// be a turning point.
cplx segment_integral(const CompiledRational& d0, cplx a, cplx b, cplx s_b);

/// Branch value of √D₀ at x_start used by rays of `frame`.
cplx frame_sqrt(const LiouvilleFrame& frame, cplx x);

/// `branch` unchanged unless its basepoint is a turning point or pole of D0,
/// in which case the basepoint moves to x0 with sign +.
BranchContext usable_branch(const BranchContext& branch, const RationalFunction& D0, cplx x0);

RayTrace trace_ray(const LiouvilleFrame& frame, cplx x_start, const TraceOptions& opt = {});
RayTrace trace_ray(const LiouvilleFrame& frame, cplx x_start, cplx sqrt_start, const TraceOptions& opt);

/// Positions along the (θ,α)-ray through x_start at arc parameters t
/// (ascending, may start negative): dx/dt = α e^{iθ}/√D₀.
/// Throws HalfstripMissing when a node cannot be reached.
std::vector<RaySample> sample_ray(const LiouvilleFrame& frame, cplx x_start, cplx sqrt_start,
                                  const std::vector<double>& t_nodes, double rtol = 1e-12);

/// Point reached from x by moving the Liouville image by i e^{iθ} y.
RaySample shift_across(const LiouvilleFrame& frame, cplx x, cplx sqrt_x, double y, double rtol = 1e-12);

struct HalfStrip {
    RayTrace center_ray;
    double radius = 0;
    double theta = 0;
    int alpha = 1;
    std::vector<RayTrace> probe_rays;
    std::vector<double> probe_offsets;
};

HalfStrip probe_halfstrip(const LiouvilleFrame& frame, cplx x0, double r_target, int n_probes,
                          const TraceOptions& opt = {});

/// Whether two classifications describe the same limiting behaviour.
bool same_classification(const RayClassification& a, const RayClassification& b);

/// CSV t,x_re,x_im,z_re,z_im followed by a "# classification" footer.
std::string ray_csv(const RayTrace& ray);

} // namespace br
