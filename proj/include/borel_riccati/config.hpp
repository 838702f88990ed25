#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "borel_riccati/formal.hpp"
#include "borel_riccati/resum.hpp"
#include "borel_riccati/schrodinger.hpp"

namespace br {

using ordered_json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";

enum class RunMode { Riccati, Monic, Schrodinger };
std::string to_string(RunMode m);

struct EvalPoint {
    cplx x{}, hbar{};
    friend bool operator==(const EvalPoint&, const EvalPoint&) = default;
};

struct GridConfig {
    double h = 1.0 / 128;
    double xi_max = 8.0;
    int n_max = 80;
    double tol = 1e-13;
    int levels = 3;
    friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

struct Thresholds {
    double residual = 1e-6;
    double tail = 1e-10;
    double margin = 0.5;
    double theta_spread = 1e-6;
    double wronskian_drift = 1e-5;
    friend bool operator==(const Thresholds&, const Thresholds&) = default;
};

/// One run of the pipeline. Coefficient lists are indexed by ħ-power and hold
/// rational-function strings; the monic mode reads p, q as ħf′ = f² + pf + q,
/// the Schrödinger mode q alone as ħ²ψ″ = qψ.
struct RunConfig {
    std::string name = "run";
    RunMode mode = RunMode::Riccati;
    std::vector<std::string> a, b, c, p, q;
    std::string regularizer;  // field element in sqrtD0, empty for none
    double theta = 0;
    std::optional<double> theta_minus;
    int alpha = 1;
    cplx basepoint{1.0, 0.0};
    int branch_sign = 1;
    int formal_order = 4;
    GridConfig grid;
    std::vector<EvalPoint> eval_points;
    std::vector<cplx> seeds;
    Thresholds thresholds;
    std::string output_dir = "out";

    friend bool operator==(const RunConfig&, const RunConfig&) = default;

    RiccatiEquation equation() const;
    SchrodingerProblem schrodinger() const;
    BranchContext branch() const;
    PipelineOptions pipeline() const;
    std::optional<FieldElem> chi(const AmbientPtr& amb) const;
};

/// Throws ParseError with the 1-based line and column in `text`.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

ordered_json to_json(const RunConfig& cfg);
/// Canonical form: fixed key order, two-space indent, shortest round-trip doubles.
std::string serialize(const RunConfig& cfg);

/// FNV-1a of the canonical serialization, 16 hex digits.
std::string config_hash(const RunConfig& cfg);

struct StageRecord {
    std::string stage;
    double seconds = 0;
    ordered_json diagnostics = ordered_json::object();
};

struct RunManifest {
    std::string command;
    std::string config_hash;
    std::string tool_version = kToolVersion;
    std::vector<StageRecord> stages;
    std::vector<std::string> files;
    bool thresholds_met = true;
    ordered_json to_json() const;
};

/// Line placed at the top of every emitted CSV.
std::string manifest_reference(const std::string& manifest_file, const std::string& hash);

ordered_json formal_json(const FormalSolution& fs, const GevreyFit* fit = nullptr);
ordered_json to_json(cplx z);

} // namespace br
