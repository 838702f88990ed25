#include "borel_riccati/config.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace br {

namespace {

struct Position {
    int line = 1, column = 1;
};

Position position_at(std::string_view text, std::size_t byte) {
    Position p;
    for (std::size_t k = 0; k < byte && k < text.size(); ++k) {
        if (text[k] == '\n') {
            ++p.line;
            p.column = 1;
        } else {
            ++p.column;
        }
    }
    return p;
}

// Locates a key or string literal in the raw text; values that cannot be
// found map to 1:1.
class Locator {
public:
    explicit Locator(std::string_view text) : text_(text) {}

    std::size_t find(const std::string& token) const {
        auto k = text_.find(token);
        return k == std::string_view::npos ? 0 : k;
    }
    [[noreturn]] void fail_at(std::size_t byte, const std::string& msg) const {
        auto p = position_at(text_, byte);
        throw ParseError(msg, p.line, p.column);
    }
    [[noreturn]] void fail_key(const std::string& key, const std::string& msg) const {
        fail_at(find("\"" + key + "\""), msg);
    }

private:
    std::string_view text_;
};

std::string strip_position(const std::string& what) {
    auto k = what.rfind(" at ");
    return k == std::string::npos ? what : what.substr(0, k);
}

const char* mode_names[] = {"riccati", "monic", "schrodinger"};

cplx read_complex(const ordered_json& v, const std::string& key, const Locator& loc) {
    if (v.is_number()) return {v.get<double>(), 0.0};
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number())
        return {v[0].get<double>(), v[1].get<double>()};
    loc.fail_key(key, key + ": expected a number or [re, im]");
}

double read_number(const ordered_json& v, const std::string& key, const Locator& loc) {
    if (!v.is_number()) loc.fail_key(key, key + ": expected a number");
    return v.get<double>();
}

int read_int(const ordered_json& v, const std::string& key, const Locator& loc) {
    if (!v.is_number_integer()) loc.fail_key(key, key + ": expected an integer");
    return v.get<int>();
}

int read_sign(const ordered_json& v, const std::string& key, const Locator& loc) {
    int s = read_int(v, key, loc);
    if (s != 1 && s != -1) loc.fail_key(key, key + ": expected +1 or -1");
    return s;
}

void check_keys(const ordered_json& obj, const std::set<std::string>& allowed, const std::string& where,
                const Locator& loc) {
    if (!obj.is_object()) loc.fail_key(where, where + ": expected an object");
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key())) loc.fail_key(it.key(), "unknown key '" + it.key() + "' in " + where);
}

std::vector<std::string> read_coeffs(const ordered_json& v, const std::string& key, const Locator& loc,
                                     bool allow_sqrt) {
    if (!v.is_array() || v.empty()) loc.fail_key(key, key + ": expected a non-empty list of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
        if (!e.is_string()) loc.fail_key(key, key + ": expected a list of strings");
        auto s = e.get<std::string>();
        if (!allow_sqrt) {
            try {
                (void)parse_rational(s);
            } catch (const ParseError& err) {
                // column inside the literal, offset by the opening quote
                auto lit = loc.find(ordered_json(s).dump());
                loc.fail_at(lit + 1 + (err.line() == 1 ? err.column() - 1 : 0),
                            key + ": " + strip_position(err.what()));
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::vector<RationalFunction> rationals(const std::vector<std::string>& v) {
    std::vector<RationalFunction> out;
    for (const auto& s : v) out.push_back(parse_rational(s));
    return out;
}

ordered_json strings(const std::vector<std::string>& v) {
    ordered_json a = ordered_json::array();
    for (const auto& s : v) a.push_back(s);
    return a;
}

} // namespace

std::string to_string(RunMode m) { return mode_names[int(m)]; }

ordered_json to_json(cplx z) { return ordered_json::array({z.real(), z.imag()}); }

RunConfig parse_config(std::string_view text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        auto p = position_at(text, e.byte == 0 ? 0 : e.byte - 1);
        std::string what = e.what();
        auto k = what.find("syntax error");
        throw ParseError(k == std::string::npos ? "malformed JSON" : what.substr(k), p.line, p.column);
    }
    Locator loc(text);
    if (!j.is_object()) loc.fail_at(0, "config must be a JSON object");
    check_keys(j,
               {"name", "mode", "equation", "regularizer", "theta", "theta_minus", "alpha", "basepoint",
                "branch_sign", "formal_order", "grid", "eval_points", "seeds", "thresholds", "outputs"},
               "config", loc);

    RunConfig cfg;
    if (j.contains("name")) {
        if (!j["name"].is_string()) loc.fail_key("name", "name: expected a string");
        cfg.name = j["name"].get<std::string>();
    }
    if (j.contains("mode")) {
        const auto& m = j["mode"];
        int k = -1;
        for (int i = 0; i < 3; ++i)
            if (m.is_string() && m.get<std::string>() == mode_names[i]) k = i;
        if (k < 0) loc.fail_key("mode", "mode: expected riccati, monic or schrodinger");
        cfg.mode = RunMode(k);
    }

    if (!j.contains("equation")) loc.fail_at(0, "missing key 'equation'");
    const auto& eq = j["equation"];
    check_keys(eq, {"a", "b", "c", "p", "q"}, "equation", loc);
    auto need = [&](const char* key) {
        if (!eq.contains(key)) loc.fail_key("equation", std::string("equation: ") + to_string(cfg.mode) +
                                                            " mode needs '" + key + "'");
        return read_coeffs(eq[key], key, loc, false);
    };
    auto reject = [&](std::initializer_list<const char*> keys) {
        for (const char* key : keys)
            if (eq.contains(key))
                loc.fail_key(key, std::string("equation: '") + key + "' not used in " + to_string(cfg.mode) + " mode");
    };
    switch (cfg.mode) {
    case RunMode::Riccati:
        reject({"p", "q"});
        cfg.a = need("a"), cfg.b = need("b"), cfg.c = need("c");
        break;
    case RunMode::Monic:
        reject({"a", "b", "c"});
        cfg.p = need("p"), cfg.q = need("q");
        break;
    case RunMode::Schrodinger:
        reject({"a", "b", "c", "p"});
        cfg.q = need("q");
        break;
    }

    if (j.contains("regularizer") && !j["regularizer"].is_null()) {
        if (!j["regularizer"].is_string()) loc.fail_key("regularizer", "regularizer: expected a string");
        cfg.regularizer = j["regularizer"].get<std::string>();
        try {
            (void)parse_field_elem(cfg.regularizer, std::make_shared<Ambient>(RationalFunction(1L)));
        } catch (const ParseError& err) {
            loc.fail_key("regularizer", "regularizer: " + strip_position(err.what()));
        }
    }
    if (j.contains("theta")) cfg.theta = read_number(j["theta"], "theta", loc);
    if (j.contains("theta_minus") && !j["theta_minus"].is_null())
        cfg.theta_minus = read_number(j["theta_minus"], "theta_minus", loc);
    if (j.contains("alpha")) cfg.alpha = read_sign(j["alpha"], "alpha", loc);
    if (j.contains("basepoint")) cfg.basepoint = read_complex(j["basepoint"], "basepoint", loc);
    if (j.contains("branch_sign")) cfg.branch_sign = read_sign(j["branch_sign"], "branch_sign", loc);
    if (j.contains("formal_order")) {
        cfg.formal_order = read_int(j["formal_order"], "formal_order", loc);
        if (cfg.formal_order < 0) loc.fail_key("formal_order", "formal_order: must be non-negative");
    }

    if (j.contains("grid")) {
        const auto& g = j["grid"];
        check_keys(g, {"h", "Xi_max", "n_max", "tol", "levels"}, "grid", loc);
        if (g.contains("h")) cfg.grid.h = read_number(g["h"], "h", loc);
        if (g.contains("Xi_max")) cfg.grid.xi_max = read_number(g["Xi_max"], "Xi_max", loc);
        if (g.contains("n_max")) cfg.grid.n_max = read_int(g["n_max"], "n_max", loc);
        if (g.contains("tol")) cfg.grid.tol = read_number(g["tol"], "tol", loc);
        if (g.contains("levels")) cfg.grid.levels = read_int(g["levels"], "levels", loc);
        if (!(cfg.grid.h > 0)) loc.fail_key("h", "grid.h: must be positive");
        if (!(cfg.grid.xi_max > 0)) loc.fail_key("Xi_max", "grid.Xi_max: must be positive");
        if (cfg.grid.levels < 1) loc.fail_key("levels", "grid.levels: must be at least 1");
    }

    if (j.contains("eval_points")) {
        const auto& v = j["eval_points"];
        if (!v.is_array()) loc.fail_key("eval_points", "eval_points: expected a list");
        for (const auto& e : v) {
            if (!e.is_object() || !e.contains("x") || !e.contains("hbar"))
                loc.fail_key("eval_points", "eval_points: each entry needs 'x' and 'hbar'");
            check_keys(e, {"x", "hbar"}, "eval_points", loc);
            cfg.eval_points.push_back({read_complex(e["x"], "x", loc), read_complex(e["hbar"], "hbar", loc)});
        }
    }
    if (j.contains("seeds")) {
        const auto& v = j["seeds"];
        if (!v.is_array()) loc.fail_key("seeds", "seeds: expected a list");
        for (const auto& e : v) cfg.seeds.push_back(read_complex(e, "seeds", loc));
    }
    if (j.contains("thresholds")) {
        const auto& t = j["thresholds"];
        check_keys(t, {"residual", "tail", "margin", "theta_spread", "wronskian_drift"}, "thresholds", loc);
        auto& th = cfg.thresholds;
        if (t.contains("residual")) th.residual = read_number(t["residual"], "residual", loc);
        if (t.contains("tail")) th.tail = read_number(t["tail"], "tail", loc);
        if (t.contains("margin")) th.margin = read_number(t["margin"], "margin", loc);
        if (t.contains("theta_spread")) th.theta_spread = read_number(t["theta_spread"], "theta_spread", loc);
        if (t.contains("wronskian_drift"))
            th.wronskian_drift = read_number(t["wronskian_drift"], "wronskian_drift", loc);
    }
    if (j.contains("outputs")) {
        const auto& o = j["outputs"];
        check_keys(o, {"dir"}, "outputs", loc);
        if (o.contains("dir")) {
            if (!o["dir"].is_string()) loc.fail_key("dir", "outputs.dir: expected a string");
            cfg.output_dir = o["dir"].get<std::string>();
        }
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("config", "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

ordered_json to_json(const RunConfig& cfg) {
    ordered_json j;
    j["name"] = cfg.name;
    j["mode"] = to_string(cfg.mode);
    ordered_json eq = ordered_json::object();
    if (cfg.mode == RunMode::Riccati) {
        eq["a"] = strings(cfg.a);
        eq["b"] = strings(cfg.b);
        eq["c"] = strings(cfg.c);
    } else {
        if (cfg.mode == RunMode::Monic) eq["p"] = strings(cfg.p);
        eq["q"] = strings(cfg.q);
    }
    j["equation"] = eq;
    j["regularizer"] = cfg.regularizer.empty() ? ordered_json(nullptr) : ordered_json(cfg.regularizer);
    j["theta"] = cfg.theta;
    j["theta_minus"] = cfg.theta_minus ? ordered_json(*cfg.theta_minus) : ordered_json(nullptr);
    j["alpha"] = cfg.alpha;
    j["basepoint"] = to_json(cfg.basepoint);
    j["branch_sign"] = cfg.branch_sign;
    j["formal_order"] = cfg.formal_order;
    j["grid"] = {{"h", cfg.grid.h},
                 {"Xi_max", cfg.grid.xi_max},
                 {"n_max", cfg.grid.n_max},
                 {"tol", cfg.grid.tol},
                 {"levels", cfg.grid.levels}};
    ordered_json pts = ordered_json::array();
    for (const auto& p : cfg.eval_points) pts.push_back({{"x", to_json(p.x)}, {"hbar", to_json(p.hbar)}});
    j["eval_points"] = pts;
    ordered_json seeds = ordered_json::array();
    for (auto s : cfg.seeds) seeds.push_back(to_json(s));
    j["seeds"] = seeds;
    const auto& th = cfg.thresholds;
    j["thresholds"] = {{"residual", th.residual},
                       {"tail", th.tail},
                       {"margin", th.margin},
                       {"theta_spread", th.theta_spread},
                       {"wronskian_drift", th.wronskian_drift}};
    j["outputs"] = {{"dir", cfg.output_dir}};
    return j;
}

std::string serialize(const RunConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

std::string config_hash(const RunConfig& cfg) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : serialize(cfg)) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

RiccatiEquation RunConfig::equation() const {
    switch (mode) {
    case RunMode::Riccati:
        return RiccatiEquation::from_rational(rationals(a), rationals(b), rationals(c));
    case RunMode::Monic:
        return RiccatiEquation::from_rational({RationalFunction(1L)}, rationals(p), rationals(q));
    case RunMode::Schrodinger:
        break;
    }
    return schrodinger().riccati();
}

SchrodingerProblem RunConfig::schrodinger() const {
    SchrodingerProblem sp;
    sp.q = rationals(q);
    sp.x0 = basepoint;
    sp.branch = branch();
    return sp;
}

BranchContext RunConfig::branch() const { return BranchContext{basepoint, branch_sign, {}}; }

PipelineOptions RunConfig::pipeline() const {
    PipelineOptions opt;
    opt.grid = GridParams{grid.h, grid.xi_max, grid.n_max, grid.tol, 0.0};
    opt.levels = grid.levels;
    opt.formal_order = formal_order;
    opt.margin = thresholds.margin;
    opt.tail_tol = thresholds.tail;
    opt.residual_tol = thresholds.residual;
    return opt;
}

std::optional<FieldElem> RunConfig::chi(const AmbientPtr& amb) const {
    if (regularizer.empty()) return std::nullopt;
    return parse_field_elem(regularizer, amb);
}

ordered_json RunManifest::to_json() const {
    ordered_json j;
    j["command"] = command;
    j["config_hash"] = config_hash;
    j["tool_version"] = tool_version;
    ordered_json st = ordered_json::array();
    for (const auto& s : stages)
        st.push_back({{"stage", s.stage}, {"seconds", s.seconds}, {"diagnostics", s.diagnostics}});
    j["stages"] = st;
    j["files"] = files;
    j["thresholds_met"] = thresholds_met;
    return j;
}

std::string manifest_reference(const std::string& manifest_file, const std::string& hash) {
    return "# manifest: " + manifest_file + " config_hash: " + hash + " version: " + kToolVersion + "\n";
}

ordered_json formal_json(const FormalSolution& fs, const GevreyFit* fit) {
    ordered_json j;
    j["alpha"] = fs.alpha;
    j["order"] = fs.order;
    if (fs.ambient) j["D0"] = fs.ambient->D0.to_string();
    ordered_json cs = ordered_json::array();
    for (const auto& c : fs.coeffs) cs.push_back(c.to_string());
    j["coefficients"] = cs;
    if (fit) {
        j["gevrey"] = {{"C", fit->C},
                       {"M", fit->M},
                       {"borel_radius", fit->M > 0 ? ordered_json(fit->borel_radius()) : ordered_json(nullptr)},
                       {"sample_point", to_json(fit->sample_point)},
                       {"k_min", fit->k_min},
                       {"k_max", fit->k_max},
                       {"limsup_estimate", fit->limsup_estimate}};
    }
    return j;
}

} // namespace br
