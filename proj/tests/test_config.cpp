#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "borel_riccati/config.hpp"

using namespace br;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = BR_CONFIG_DIR;

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    auto d = fs::temp_directory_path() / ("br_test_config_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

int cli(const std::string& args) {
    std::string cmd = std::string(BR_CLI_PATH) + " " + args + " 2>/dev/null";
    int st = std::system(cmd.c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

ordered_json read_json(const fs::path& p) { return ordered_json::parse(slurp(p)); }

// Airy config on a short lattice so each CLI run stays under a second.
fs::path small_airy(const fs::path& dir, const std::string& name = "airy",
                    const std::string& points = R"([{"x": 1, "hbar": 0.1}, {"x": 1.5, "hbar": 0.2}])",
                    const std::string& extra = "") {
    auto p = dir / (name + ".json");
    std::ofstream(p) << R"({"name": ")" << name << R"(", "equation": {"a": ["1"], "b": ["0"], "c": ["-x"]},
  "regularizer": "sqrtD0/2", "grid": {"h": 0.03125, "Xi_max": 6, "n_max": 60, "tol": 1e-12, "levels": 1},
  "eval_points": )" << points << extra << "}\n";
    return p;
}

ParseError parse_error_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ParseError& e) {
        return e;
    }
    FAIL("no ParseError for: " << text);
    return ParseError("", 0, 0);
}

} // namespace

TEST_CASE("shipped configs round-trip canonically") {
    int n = 0;
    for (const auto& entry : fs::directory_iterator(kConfigs)) {
        if (entry.path().extension() != ".json") continue;
        ++n;
        CAPTURE(entry.path());
        auto cfg = load_config(entry.path());
        auto s = serialize(cfg);
        auto again = parse_config(s);
        CHECK(again == cfg);
        CHECK(serialize(again) == s);
        CHECK(config_hash(again) == config_hash(cfg));
        CHECK_NOTHROW(cfg.equation());
    }
    CHECK(n >= 4);

    auto airy = load_config(kConfigs / "airy.json");
    CHECK(airy.mode == RunMode::Riccati);
    CHECK(airy.eval_points.size() == 9);
    CHECK(airy.seeds.size() == 12);
    CHECK(airy.grid.h == 1.0 / 128);
    CHECK(airy.equation().D0() == parse_rational("4*x"));
    auto monic = load_config(kConfigs / "airy_monic.json");
    CHECK(monic.mode == RunMode::Monic);
    CHECK(monic.equation().a(0) == FieldElem(1L));
}

TEST_CASE("defaults and hashing") {
    auto cfg = parse_config(R"({"equation": {"a": ["1"], "b": ["0"], "c": ["-x"]}})");
    CHECK(cfg.theta == 0);
    CHECK(cfg.alpha == 1);
    CHECK(cfg.basepoint == cplx(1, 0));
    CHECK(!cfg.theta_minus);
    CHECK(cfg.regularizer.empty());
    CHECK(config_hash(cfg).size() == 16);
    auto other = cfg;
    other.theta = 0.1;
    CHECK(config_hash(other) != config_hash(cfg));
    // complex numbers accept a bare real
    auto pts = parse_config(R"({"equation": {"q": ["x"]}, "mode": "schrodinger", "basepoint": [0.5, -2],
                               "eval_points": [{"x": 2, "hbar": [0.1, 0.01]}]})");
    CHECK(pts.basepoint == cplx(0.5, -2));
    CHECK(pts.eval_points.at(0).hbar == cplx(0.1, 0.01));
    CHECK(pts.equation().c(0) == FieldElem(parse_rational("-x")));
}

TEST_CASE("parse errors carry line and column") {
    auto e = parse_error_of("{\n  \"equation\": {\"a\": [\"1\"],\n  , }\n}");
    CHECK(e.line() == 3);
    CHECK(e.column() == 3);
    CHECK(e.stage() == "config");

    // malformed rational function: column of the offending character in the literal
    e = parse_error_of("{\"equation\": {\n \"a\": [\"1\"], \"b\": [\"0\"],\n   \"c\": [\"-x+*2\"]}}");
    CHECK(e.line() == 3);
    CHECK(e.column() == 14);
    CHECK(std::string(e.what()).find("unexpected") != std::string::npos);

    e = parse_error_of("{\"equation\": {\"a\": [\"1\"], \"b\": [\"0\"], \"c\": [\"-x\"]},\n\"thetta\": 1}");
    CHECK(e.line() == 2);
    CHECK(e.column() == 1);
    CHECK(std::string(e.what()).find("thetta") != std::string::npos);

    e = parse_error_of("{\"equation\": {\"a\": [\"1\"], \"b\": [\"0\"], \"c\": [\"-x\"]}, \"alpha\": 2}");
    CHECK(e.line() == 1);
    CHECK(std::string(e.what()).find("alpha") != std::string::npos);
    CHECK_THROWS_AS(parse_config(R"({"mode": "monic", "equation": {"a": ["1"], "q": ["x"]}})"), ParseError);
    CHECK_THROWS_AS(parse_config(R"({"equation": {"a": ["1"], "b": ["0"]}})"), ParseError);
    CHECK_THROWS_AS(parse_config(R"({"equation": {"a": ["1"], "b": ["0"], "c": ["x"]}, "grid": {"h": -1}})"),
                    ParseError);
}

TEST_CASE("formal solution json") {
    auto eq = load_config(kConfigs / "airy.json").equation();
    auto j = formal_json(formal_solve(eq, 1, 3));
    CHECK(j["coefficients"].size() == 4);
    CHECK(j["coefficients"][3] == "15/64*x^-4");
    CHECK(j["D0"] == "4*x");
}

TEST_CASE("cli formal") {
    auto out = scratch("formal");
    REQUIRE(cli("formal --config " + (kConfigs / "airy.json").string() + " --order 3 --out " + out.string()) == 0);
    auto j = read_json(out / "airy_formal.json");
    CHECK(j["solutions"][0]["coefficients"][3] == "15/64*x^-4");
    CHECK(j["solutions"][1]["alpha"] == -1);
    CHECK(j["manifest"] == "airy_formal_manifest.json");
    auto m = read_json(out / "airy_formal_manifest.json");
    CHECK(m["config_hash"] == j["config_hash"]);
    CHECK(m["tool_version"] == kToolVersion);

    REQUIRE(cli("formal --config " + (kConfigs / "airy.json").string() + " --order 0 --out " + out.string()) == 0);
    j = read_json(out / "airy_formal.json");
    CHECK(j["solutions"][0]["coefficients"].size() == 1);
    CHECK(j["solutions"][0]["coefficients"][0] == "1/2*sqrtD0");

    // minus solution absent for the triangular system: recorded, not fatal
    REQUIRE(cli("formal --config " + (kConfigs / "triangular_system.json").string() + " --out " + out.string()) == 0);
    j = read_json(out / "triangular_system_formal.json");
    CHECK(j["solutions"][1].contains("error"));

    auto bad = out / "bad.json";
    std::ofstream(bad) << "{\"equation\": {\"a\": [\"1\"], \"b\": [\"0\"], \"c\": [\"x^\"]}}";
    CHECK(cli("formal --config " + bad.string() + " --out " + out.string()) == 3);
}

TEST_CASE("cli trajectories") {
    auto out = scratch("traj");
    REQUIRE(cli("trajectories --config " + (kConfigs / "airy.json").string() + " --out " + out.string()) == 0);
    auto j = read_json(out / "airy_trajectories.json");
    REQUIRE(j["rays"].size() == 24);
    int hits = 0;
    for (const auto& r : j["rays"]) {
        if (r["classification"]["kind"] != "HitsTurningPoint") continue;
        ++hits;
        auto s = r["seed"];
        double arg = std::atan2(s[1].get<double>(), s[0].get<double>());
        bool expected = (std::abs(arg) < 1e-12 && r["alpha"] == -1) ||
                        (std::abs(std::abs(arg) - 2 * std::acos(-1.0) / 3) < 1e-12 && r["alpha"] == 1);
        CHECK(expected);
    }
    CHECK(hits == 3);
    auto csv = slurp(out / j["rays"][0]["file"].get<std::string>());
    CHECK(csv.rfind("# manifest: airy_trajectories_manifest.json", 0) == 0);

    auto none = out / "none.json";
    std::ofstream(none) << R"({"name": "none", "equation": {"a": ["1"], "b": ["0"], "c": ["-x"]}})";
    REQUIRE(cli("trajectories --config " + none.string() + " --out " + out.string()) == 0);
    CHECK(read_json(out / "none_trajectories.json")["rays"].empty());

    auto tp = out / "tp.json";
    std::ofstream(tp) << R"({"name": "tp", "equation": {"a": ["1"], "b": ["0"], "c": ["-x"]}, "seeds": [0, 1]})";
    REQUIRE(cli("trajectories --config " + tp.string() + " --theta-sweep -0.2:0.2:3 --out " + out.string()) == 0);
    j = read_json(out / "tp_trajectories.json");
    CHECK(j["thetas"].size() == 3);
    REQUIRE(j["rays"].size() == 12);
    CHECK(j["rays"][0].contains("error"));
    CHECK(j["rays"][2].contains("classification"));
}

TEST_CASE("cli resum") {
    auto out = scratch("resum");
    auto cfg = small_airy(out);
    REQUIRE(cli("resum --config " + cfg.string() + " --out " + out.string()) == 0);
    auto first = slurp(out / "airy_samples.csv");
    CHECK(first.find("x_re,x_im,hbar_re,hbar_im,f_re,f_im,residual,tail_bound") != std::string::npos);
    auto m = read_json(out / "airy_resum_manifest.json");
    CHECK(m["thresholds_met"] == true);
    bool has_growth = false;
    for (const auto& s : m["stages"])
        if (s["stage"] == "resum") has_growth = s["diagnostics"]["points"][0].contains("growth");
    CHECK(has_growth);

    // identical config and version: bit-identical CSV
    REQUIRE(cli("resum --config " + cfg.string() + " --out " + out.string()) == 0);
    CHECK(slurp(out / "airy_samples.csv") == first);

    // residual threshold out of reach
    auto strict = small_airy(out, "strict", R"([{"x": 1, "hbar": 0.1}])", R"(, "thresholds": {"residual": 1e-30})");
    CHECK(cli("resum --config " + strict.string() + " --out " + out.string()) == 1);

    // ħ on the wrong side of the Borel disc: recorded per point
    auto neg = small_airy(out, "neg", R"([{"x": 1, "hbar": -0.1}])");
    CHECK(cli("resum --config " + neg.string() + " --out " + out.string()) == 1);
    auto nm = read_json(out / "neg_resum_manifest.json");
    bool recorded = false;
    for (const auto& s : nm["stages"])
        if (s["stage"] == "resum") recorded = s["diagnostics"]["errors"][0]["stage"] == "resum";
    CHECK(recorded);

    // unregularized Airy fails the ord conditions
    auto raw = out / "raw.json";
    std::ofstream(raw) << R"({"name": "raw", "equation": {"a": ["1"], "b": ["0"], "c": ["-x"]},
      "grid": {"h": 0.03125, "Xi_max": 6, "n_max": 60, "tol": 1e-12, "levels": 1},
      "eval_points": [{"x": 1, "hbar": 0.1}]})";
    CHECK(cli("resum --config " + raw.string() + " --out " + out.string()) == 2);
    CHECK(fs::exists(out / "raw_hypotheses.json"));
    CHECK(cli("resum --config " + raw.string() + " --force --out " + out.string()) != 2);
    CHECK(fs::exists(out / "raw_samples.csv"));
}

TEST_CASE("cli resum theta sweep") {
    auto out = scratch("sweep");
    auto cfg = small_airy(out, "airy", R"([{"x": 1, "hbar": 0.1}])");
    REQUIRE(cli("resum --config " + cfg.string() + " --theta-sweep -0.2:0.2:3 --out " + out.string()) == 0);
    auto j = read_json(out / "airy_theta_sweep.json");
    CHECK(j["thetas"].size() == 3);
    CHECK(j["max_deviation"].get<double>() < 1e-6);
}

TEST_CASE("cli schrodinger") {
    auto out = scratch("schr");
    auto base = std::string(R"({"mode": "schrodinger", "equation": {"q": ["x"]},
      "grid": {"h": 0.03125, "Xi_max": 6, "n_max": 60, "tol": 1e-12, "levels": 1},
      "eval_points": [{"x": 1.25, "hbar": 0.1}], "thresholds": {"residual": 1e-4, "wronskian_drift": 1e-5})");
    auto ok = out / "ok.json";
    std::ofstream(ok) << base << R"(, "name": "ok", "theta_minus": 0.2})";
    REQUIRE(cli("schrodinger --config " + ok.string() + " --out " + out.string()) == 0);
    auto w = read_json(out / "ok_wronskian.json");
    CHECK(w["max_drift"].get<double>() < 1e-5);
    CHECK(slurp(out / "ok_psi_minus.csv").find("psi_re") != std::string::npos);

    // the θ=0 minus ray from x=1 runs into the turning point
    auto bad = out / "bad.json";
    std::ofstream(bad) << base << R"(, "name": "bad"})";
    CHECK(cli("schrodinger --config " + bad.string() + " --out " + out.string()) == 2);
    auto h = read_json(out / "bad_hypotheses.json");
    CHECK(h["pass"] == false);
    CHECK(cli("schrodinger --config " + bad.string() + " --force --out " + out.string()) != 2);
    auto m = read_json(out / "bad_schrodinger_manifest.json");
    CHECK(m["stages"].size() >= 2);

    CHECK(cli("schrodinger --config " + (kConfigs / "airy.json").string() + " --out " + out.string()) == 3);
}
