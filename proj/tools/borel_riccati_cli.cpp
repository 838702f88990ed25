// borel-riccati: formal series, WKB trajectories, Borel–Laplace resummation
// and exact WKB bases from a JSON run config.
//
// Exit codes: 0 all thresholds met, 1 a threshold missed, 2 hypotheses
// failed (without --force), 3 config or pipeline error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "borel_riccati/config.hpp"
#include "borel_riccati/geometry.hpp"
#include "borel_riccati/hypothesis.hpp"
#include "borel_riccati/parallel.hpp"
#include "borel_riccati/resum.hpp"
#include "borel_riccati/schrodinger.hpp"

namespace fs = std::filesystem;
using namespace br;

namespace {

enum Exit { kOk = 0, kThreshold = 1, kHypothesis = 2, kError = 3 };

struct Args {
    std::string config;
    std::string out;
    std::string theta_sweep;
    bool force = false;
    std::optional<int> order;
    std::optional<double> grid_h, xi_max, tol;
};

class Stopwatch {
public:
    double lap() {
        auto now = std::chrono::steady_clock::now();
        double s = std::chrono::duration<double>(now - t_).count();
        t_ = now;
        return s;
    }

private:
    std::chrono::steady_clock::time_point t_ = std::chrono::steady_clock::now();
};

// Shared state of one command: effective config, output directory, manifest.
class Run {
public:
    Run(const Args& args, std::string command) : command_(std::move(command)) {
        cfg = load_config(args.config);
        if (args.order) cfg.formal_order = *args.order;
        if (args.grid_h) cfg.grid.h = *args.grid_h;
        if (args.xi_max) cfg.grid.xi_max = *args.xi_max;
        if (args.tol) cfg.grid.tol = *args.tol;
        dir_ = args.out.empty() ? fs::path(cfg.output_dir) : fs::path(args.out);
        fs::create_directories(dir_);
        manifest.command = command_;
        manifest.config_hash = config_hash(cfg);
        manifest_name_ = cfg.name + "_" + command_ + "_manifest.json";
    }

    std::string file(const std::string& suffix) const { return cfg.name + "_" + suffix; }

    void write(const std::string& name, const std::string& body) {
        std::ofstream out(dir_ / name, std::ios::binary);
        out << body;
        manifest.files.push_back(name);
    }
    void write_csv(const std::string& name, const std::string& body) {
        write(name, manifest_reference(manifest_name_, manifest.config_hash) + body);
    }
    void write_json(const std::string& name, ordered_json body) {
        body["manifest"] = manifest_name_;
        body["config_hash"] = manifest.config_hash;
        write(name, body.dump(2) + "\n");
    }
    void stage(const std::string& name, ordered_json diag = ordered_json::object()) {
        manifest.stages.push_back({name, clock_.lap(), std::move(diag)});
    }

    int finish(int code) {
        manifest.thresholds_met = code == kOk;
        std::ofstream out(dir_ / manifest_name_, std::ios::binary);
        out << manifest.to_json().dump(2) << "\n";
        return code;
    }

    RunConfig cfg;
    RunManifest manifest;

private:
    std::string command_;
    fs::path dir_;
    std::string manifest_name_;
    Stopwatch clock_;
};

std::vector<double> parse_sweep(const std::string& spec) {
    double a, b;
    int n;
    char tail;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%d%c", &a, &b, &n, &tail) != 3 || n < 1)
        throw Error("config", "--theta-sweep expects a:b:n, got '" + spec + "'");
    std::vector<double> out;
    for (int k = 0; k < n; ++k) out.push_back(n == 1 ? a : a + (b - a) * k / (n - 1));
    return out;
}

ordered_json error_json(const std::exception& e) {
    auto* be = dynamic_cast<const Error*>(&e);
    return {{"stage", be ? be->stage() : "unknown"}, {"message", e.what()}};
}

ordered_json ray_json(const RayClassification& c) {
    return {{"kind", to_string(c.kind)}, {"pole_at_infinity", c.pole_at_infinity}, {"location", to_json(c.location)},
            {"t_hit", c.t_hit},          {"period", c.period},                     {"detail", c.detail}};
}

ordered_json hypothesis_json(const HypothesisReport& r) {
    ordered_json items = ordered_json::array();
    for (const auto& it : r.items)
        items.push_back({{"name", it.name}, {"pass", it.pass}, {"skipped", it.skipped}, {"detail", it.detail}});
    return {{"pass", r.pass},
            {"requires_regularization", r.requires_regularization},
            {"ray", ray_json(r.ray)},
            {"items", items},
            {"summary", r.summary()}};
}

ordered_json growth_json(const GrowthFit& g) { return {{"A", g.A}, {"K", g.K}}; }

int cmd_formal(const Args& args) {
    Run run(args, "formal");
    auto eq = run.cfg.equation();
    run.stage("setup");
    ordered_json out;
    out["D0"] = eq.D0().to_string();
    ordered_json tps = ordered_json::array();
    for (const auto& r : eq.turning_points()) tps.push_back({{"x", to_json(r.location)}, {"multiplicity", r.multiplicity}});
    out["turning_points"] = tps;
    ordered_json sols = ordered_json::array();
    for (int alpha : {1, -1}) {
        try {
            auto fsol = formal_solve(eq, alpha, run.cfg.formal_order);
            std::optional<GevreyFit> fit;
            if (fsol.order > 6) {
                try {
                    fit = gevrey_fit(fsol, run.cfg.basepoint, run.cfg.branch());
                } catch (const Error&) {
                }
            }
            sols.push_back(formal_json(fsol, fit ? &*fit : nullptr));
        } catch (const Error& e) {
            sols.push_back({{"alpha", alpha}, {"error", error_json(e)}});
        }
    }
    out["solutions"] = sols;
    run.stage("formal_solve", {{"order", run.cfg.formal_order}});
    run.write_json(run.file("formal.json"), out);
    return run.finish(kOk);
}

int cmd_trajectories(const Args& args) {
    Run run(args, "trajectories");
    auto eq = run.cfg.equation();
    std::vector<double> thetas = args.theta_sweep.empty() ? std::vector<double>{run.cfg.theta}
                                                          : parse_sweep(args.theta_sweep);
    cplx frame_x0 = eq.turning_points().empty() ? run.cfg.basepoint : eq.turning_points().front().location;
    ordered_json rays = ordered_json::array();
    int failures = 0;
    for (std::size_t it = 0; it < thetas.size(); ++it) {
        for (std::size_t is = 0; is < run.cfg.seeds.size(); ++is) {
            cplx seed = run.cfg.seeds[is];
            for (int alpha : {1, -1}) {
                ordered_json entry = {{"theta", thetas[it]}, {"seed", to_json(seed)}, {"alpha", alpha}};
                try {
                    BranchContext branch{seed, run.cfg.branch_sign, {}};
                    auto frame = LiouvilleFrame::make(eq, frame_x0, thetas[it], alpha, branch);
                    auto ray = trace_ray(frame, seed);
                    std::string name = run.file("ray_t" + std::to_string(it) + "_s" + std::to_string(is) +
                                                (alpha > 0 ? "_plus.csv" : "_minus.csv"));
                    run.write_csv(name, ray_csv(ray));
                    entry["classification"] = ray_json(ray.classification);
                    entry["file"] = name;
                } catch (const std::exception& e) {
                    entry["error"] = error_json(e);
                    ++failures;
                }
                rays.push_back(entry);
            }
        }
    }
    run.stage("trace", {{"rays", rays.size()}, {"errors", failures}});
    run.write_json(run.file("trajectories.json"), {{"thetas", thetas}, {"rays", rays}});
    return run.finish(kOk);
}

int cmd_resum(const Args& args) {
    Run run(args, "resum");
    const auto& cfg = run.cfg;
    auto eq = cfg.equation();
    auto chi = cfg.chi(eq.ambient());
    auto working = chi ? eq.regularize(*chi) : eq;
    auto branch = cfg.branch();

    auto hyp = hypothesis_check(working, cfg.basepoint, cfg.theta, cfg.alpha, branch);
    ordered_json hyp_json = hypothesis_json(hyp);
    if (cfg.mode == RunMode::Monic)
        hyp_json["monic"] = hypothesis_json(
            hypothesis_check(eq, cfg.basepoint, cfg.theta, cfg.alpha, branch, HypothesisVariant::Monic));
    run.stage("hypothesis", hyp_json);
    if (!hyp.pass) {
        std::cerr << "hypothesis check failed: " << hyp.summary() << "\n";
        if (!args.force) {
            run.write_json(run.file("hypotheses.json"), hyp_json);
            return run.finish(kHypothesis);
        }
        std::cerr << "continuing (--force)\n";
    }

    int code = kOk;
    ExactSolver solver(eq, cfg.alpha, cfg.theta, cfg.pipeline(), chi, branch);
    ordered_json halfstrip;
    try {
        auto hs = probe_halfstrip(solver.frame(), cfg.basepoint, 0.5, 8);
        halfstrip = {{"x0", to_json(cfg.basepoint)}, {"radius", hs.radius}};
    } catch (const std::exception& e) {
        halfstrip = {{"x0", to_json(cfg.basepoint)}, {"error", error_json(e)}};
    }
    run.stage("halfstrip", halfstrip);

    std::vector<ExactSolutionSample> samples;
    ordered_json errors = ordered_json::array(), points = ordered_json::array();
    std::map<std::pair<double, double>, bool> seen;
    for (const auto& p : cfg.eval_points) {
        try {
            auto s = solver.evaluate(p.x, p.hbar);
            samples.push_back(s);
            if (!s.accepted || s.residual > cfg.thresholds.residual) code = kThreshold;
            if (!seen[{p.x.real(), p.x.imag()}]) {
                seen[{p.x.real(), p.x.imag()}] = true;
                const auto& d = solver.diagnostics(p.x);
                ordered_json g = ordered_json::array();
                for (const auto& gf : d.growth) g.push_back(growth_json(gf));
                points.push_back({{"x", to_json(p.x)},
                                  {"h", d.h},
                                  {"n_star", d.n_star},
                                  {"growth", g},
                                  {"grid_residual", d.grid_residual},
                                  {"stencil_step", d.stencil_step}});
            }
        } catch (const std::exception& e) {
            std::cerr << "point x=" << p.x << " hbar=" << p.hbar << ": " << e.what() << "\n";
            auto ej = error_json(e);
            ej["x"] = to_json(p.x);
            ej["hbar"] = to_json(p.hbar);
            errors.push_back(ej);
            code = kThreshold;
        }
    }
    ordered_json tails = ordered_json::array();
    double max_res = 0;
    for (const auto& s : samples) {
        tails.push_back(s.tail_bound);
        max_res = std::max(max_res, s.residual);
    }
    run.stage("resum", {{"points", points}, {"tail_bounds", tails}, {"max_residual", max_res}, {"errors", errors}});
    run.write_csv(run.file("samples.csv"), samples_csv(samples));

    if (!args.theta_sweep.empty()) {
        auto thetas = parse_sweep(args.theta_sweep);
        std::vector<std::pair<cplx, cplx>> pts;
        for (const auto& p : cfg.eval_points) pts.emplace_back(p.x, p.hbar);
        ordered_json rep;
        try {
            auto sw = theta_sweep(eq, cfg.basepoint, thetas, cfg.alpha, pts, cfg.pipeline(), chi, branch);
            ordered_json rows = ordered_json::array();
            for (const auto& p : sw.points) {
                ordered_json vals = ordered_json::array();
                for (auto v : p.values) vals.push_back(to_json(v));
                rows.push_back({{"x", to_json(p.x)},
                                {"hbar", to_json(p.hbar)},
                                {"values", vals},
                                {"inside", p.inside},
                                {"max_deviation", p.max_deviation}});
            }
            rep = {{"thetas", thetas}, {"points", rows}, {"max_deviation", sw.max_deviation}};
            if (!(sw.max_deviation <= cfg.thresholds.theta_spread) && code == kOk) code = kThreshold;
        } catch (const HypothesisFailed& e) {
            rep = {{"thetas", thetas}, {"error", error_json(e)}};
            if (code == kOk) code = args.force ? kThreshold : kHypothesis;
        }
        run.stage("theta_sweep", {{"max_deviation", rep.value("max_deviation", ordered_json(nullptr))}});
        run.write_json(run.file("theta_sweep.json"), rep);
    }
    return run.finish(code);
}

int cmd_schrodinger(const Args& args) {
    Run run(args, "schrodinger");
    const auto& cfg = run.cfg;
    if (cfg.mode != RunMode::Schrodinger) throw Error("config", "schrodinger command needs mode \"schrodinger\"");
    auto sp = cfg.schrodinger();

    // each family is checked at the θ it is resummed with
    auto rep = check_wkb_hypotheses(sp, cfg.theta);
    if (cfg.theta_minus) {
        rep.minus_end = check_wkb_hypotheses(sp, *cfg.theta_minus).minus_end;
        rep.pass = rep.pole_condition && rep.plus_end.pass && rep.minus_end.pass;
    }
    ordered_json hyp = {{"pass", rep.pass},
                        {"theta_plus", cfg.theta},
                        {"theta_minus", cfg.theta_minus.value_or(cfg.theta)},
                        {"pole_condition", rep.pole_condition},
                        {"pole_detail", rep.pole_detail},
                        {"plus_end", hypothesis_json(rep.plus_end)},
                        {"minus_end", hypothesis_json(rep.minus_end)},
                        {"summary", rep.summary()}};
    run.stage("hypothesis", hyp);
    run.write_json(run.file("hypotheses.json"), hyp);
    if (!rep.pass) {
        std::cerr << "hypothesis check failed: " << rep.summary() << "\n";
        if (!args.force) return run.finish(kHypothesis);
        std::cerr << "continuing (--force)\n";
    }

    WkbOptions wo;
    wo.pipeline = cfg.pipeline();
    wo.theta_minus = cfg.theta_minus;
    if (!cfg.regularizer.empty()) wo.regularizer = cfg.regularizer;

    // the basepoint is added for every ħ so the Wronskian can be referred to it
    std::vector<std::pair<cplx, cplx>> pts;
    for (const auto& p : cfg.eval_points) pts.emplace_back(p.x, p.hbar);
    for (const auto& p : cfg.eval_points) pts.emplace_back(sp.x0, p.hbar);

    std::pair<WkbSolution, WkbSolution> basis;
    try {
        basis = exact_wkb_basis(sp, cfg.theta, pts, wo);
    } catch (const std::exception& e) {
        std::cerr << "resummation failed: " << e.what() << "\n";
        run.stage("basis", {{"error", error_json(e)}});
        return run.finish(kError);
    }
    run.stage("basis");

    int code = kOk;
    ordered_json table = ordered_json::array();
    double max_drift = 0, max_res = 0;
    for (const auto& p : cfg.eval_points) {
        cplx w = wronskian(basis, p.x, p.hbar);
        cplx w0 = wronskian(basis, sp.x0, p.hbar);
        double drift = std::abs(w - w0) / std::abs(w0);
        double rp = psi_residual(sp, basis.first.at(sp.x0, p.hbar).f, p.x, p.hbar);
        double rm = psi_residual(sp, basis.second.at(sp.x0, p.hbar).f, p.x, p.hbar);
        max_drift = std::max(max_drift, drift);
        max_res = std::max({max_res, rp, rm});
        table.push_back({{"x", to_json(p.x)},
                         {"hbar", to_json(p.hbar)},
                         {"wronskian", to_json(w)},
                         {"wronskian_x0", to_json(w0)},
                         {"drift", drift},
                         {"psi_residual_plus", rp},
                         {"psi_residual_minus", rm}});
    }
    if (!(max_drift <= cfg.thresholds.wronskian_drift) || !(max_res <= cfg.thresholds.residual)) code = kThreshold;
    run.stage("wronskian", {{"max_drift", max_drift}, {"max_psi_residual", max_res}});

    for (auto* s : {&basis.first, &basis.second}) {
        WkbSolution shown = *s;
        shown.samples.resize(cfg.eval_points.size());
        run.write_csv(run.file(s->sign > 0 ? "psi_plus.csv" : "psi_minus.csv"), psi_csv(shown));
    }
    run.write_json(run.file("wronskian.json"), {{"theta_plus", basis.first.theta},
                                                {"theta_minus", basis.second.theta},
                                                {"max_drift", max_drift},
                                                {"max_psi_residual", max_res},
                                                {"points", table}});
    return run.finish(code);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Borel-Laplace resummation of singularly perturbed Riccati equations"};
    app.require_subcommand(1);
    Args args;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", args.config, "run config (JSON)")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", args.out, "output directory (default: outputs.dir of the config)");
        sub->add_option("--order", args.order, "formal truncation order");
        sub->add_option("--grid-h", args.grid_h, "finest Borel lattice step");
        sub->add_option("--xi-max", args.xi_max, "Borel lattice length");
        sub->add_option("--tol", args.tol, "successive-approximation tolerance");
        sub->add_flag("--force", args.force, "run even when hypotheses fail");
    };
    auto* formal = app.add_subcommand("formal", "formal WKB coefficients and Gevrey fit");
    auto* traj = app.add_subcommand("trajectories", "WKB rays from the config seeds");
    auto* resum = app.add_subcommand("resum", "canonical exact solution at the eval points");
    auto* schr = app.add_subcommand("schrodinger", "exact WKB basis and Wronskian");
    for (auto* s : {formal, traj, resum, schr}) add_common(s);
    for (auto* s : {traj, resum}) s->add_option("--theta-sweep", args.theta_sweep, "theta list a:b:n");

    CLI11_PARSE(app, argc, argv);
    std::cerr << "threads: " << thread_cap() << "\n";

    try {
        if (*formal) return cmd_formal(args);
        if (*traj) return cmd_trajectories(args);
        if (*resum) return cmd_resum(args);
        if (*schr) return cmd_schrodinger(args);
    } catch (const ParseError& e) {
        std::cerr << args.config << ":" << e.line() << ":" << e.column() << ": " << e.what() << "\n";
        return kError;
    } catch (const Error& e) {
        std::cerr << "error [" << e.stage() << "]: " << e.what() << "\n";
        return kError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kError;
    }
    return kError;
}
