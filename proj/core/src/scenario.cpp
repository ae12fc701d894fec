#include "bifread/scenario.hpp"

#include "bifread/bifurcation.hpp"
#include "bifread/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace bifread {

namespace {

#include "presets.inc"

using json = nlohmann::json;

/// Walks a JSON object while tracking its path for error messages and
/// rejecting keys the schema does not define.
class Node {
public:
    Node(const json& j, std::string path, std::string_view origin)
        : j_(j), path_(std::move(path)), origin_(origin) {
        if (!j_.is_object()) fail("expected an object");
    }

    [[noreturn]] void fail(const std::string& msg, const std::string& key = {}) const {
        const std::string where = key.empty() ? path_ : path_ + "/" + key;
        throw ConfigError(std::string(origin_) + ": " + (where.empty() ? "/" : where) + ": " + msg);
    }

    bool has(const std::string& key) const {
        used_.insert(key);
        return j_.contains(key);
    }

    Node child(const std::string& key) const {
        if (!has(key)) fail("missing object", key);
        return Node(j_.at(key), path_ + "/" + key, origin_);
    }

    const json& raw(const std::string& key) const {
        if (!has(key)) fail("missing field", key);
        return j_.at(key);
    }

    double number(const std::string& key) const {
        const json& v = raw(key);
        if (!v.is_number()) fail("expected a number", key);
        const double d = v.get<double>();
        if (!std::isfinite(d)) fail("expected a finite number", key);
        return d;
    }

    double number(const std::string& key, double fallback) const {
        return has(key) ? number(key) : fallback;
    }

    std::uint64_t count(const std::string& key, std::uint64_t fallback) const {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
            fail("expected a non-negative integer", key);
        }
        return v.get<std::uint64_t>();
    }

    std::string text(const std::string& key) const {
        const json& v = raw(key);
        if (!v.is_string()) fail("expected a string", key);
        return v.get<std::string>();
    }

    std::string text(const std::string& key, const std::string& fallback) const {
        return has(key) ? text(key) : fallback;
    }

    bool flag(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_boolean()) fail("expected true or false", key);
        return v.get<bool>();
    }

    void reject_unknown() const {
        for (const auto& [key, value] : j_.items()) {
            if (!used_.count(key)) fail("unknown field", key);
        }
    }

    Node element(const std::string& key, std::size_t i) const {
        return Node(raw(key)[i], path_ + "/" + key + "/" + std::to_string(i), origin_);
    }

private:
    const json& j_;
    std::string path_;
    std::string_view origin_;
    mutable std::set<std::string> used_;
};

template <typename Fn>
auto rethrow_as_config(const Node& node, const std::string& key, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        node.fail(e.what(), key);
    }
}

ScenarioKind parse_kind(const Node& n) {
    const std::string k = n.text("kind");
    if (k == "pitchfork") return ScenarioKind::pitchfork;
    if (k == "atom_cavity") return ScenarioKind::atom_cavity;
    if (k == "circuit_qed") return ScenarioKind::circuit_qed;
    if (k == "custom") return ScenarioKind::custom;
    n.fail("unknown scenario kind '" + k + "'", "kind");
}

NoiseSharing parse_sharing(const Node& n) {
    const std::string s = n.text("noise_sharing", "independent");
    if (s == "shared") return NoiseSharing::shared;
    if (s == "independent") return NoiseSharing::independent;
    n.fail("expected 'shared' or 'independent'", "noise_sharing");
}

QubitState parse_qubit_state(const Node& q) {
    const std::string s = q.text("initial", "superposition");
    QubitState st;
    if (s == "ground") {
        st.kind = QubitPreparation::ground;
        st.rho_gg = 1.0;
    } else if (s == "excited") {
        st.kind = QubitPreparation::excited;
        st.rho_gg = 0.0;
    } else if (s == "superposition") {
        st.kind = QubitPreparation::superposition;
        st.rho_gg = 0.5;
        st.rho_eg = {0.5, 0.0};
    } else {
        q.fail("expected 'ground', 'excited' or 'superposition'", "initial");
    }
    return st;
}

QubitScenario parse_qubit(const Node& q, FrequencyUnit unit, double& gamma2) {
    const auto f = [unit](double v) { return to_rad_per_ns(v, unit); };
    QubitScenario s;
    const bool absolute = q.has("omega_q") || q.has("omega_o");
    if (absolute) {
        if (q.has("delta_qo")) q.fail("give either omega_q/omega_o or delta_qo", "delta_qo");
        s.omega_q = f(q.number("omega_q"));
        s.omega_o = f(q.number("omega_o"));
    } else {
        // relative form: frame where omega_o = 0
        s.omega_q = f(q.number("delta_qo"));
        s.omega_o = 0.0;
    }
    s.g = f(q.number("g"));
    gamma2 = f(q.number("gamma2", 0.0));
    s.initial = parse_qubit_state(q);

    const json& drives = q.raw("drives");
    if (!drives.is_array() || drives.empty()) q.fail("expected a non-empty array", "drives");
    for (std::size_t i = 0; i < drives.size(); ++i) {
        const Node d = q.element("drives", i);
        DriveSwitch sw;
        sw.time = d.number("t_ns");
        const bool has_abs = d.has("omega_d");
        const bool has_rel = d.has("delta_od");
        if (has_abs == has_rel) d.fail("give exactly one of omega_d or delta_od");
        sw.omega_d = has_abs ? f(d.number("omega_d")) : s.omega_o - f(d.number("delta_od"));
        d.reject_unknown();
        s.schedule.push_back(sw);
    }
    q.reject_unknown();
    return s;
}

void validate_derived(ScenarioConfig& c) {
    const bool qubit = c.has_qubit();
    const bool needs_qubit = c.kind == ScenarioKind::atom_cavity || c.kind == ScenarioKind::circuit_qed;
    if (needs_qubit && !qubit) throw ConfigError("scenario kind needs a 'qubit' block");
    if (c.kind == ScenarioKind::pitchfork && qubit) {
        throw ConfigError("pitchfork scenarios take no 'qubit' block");
    }

    ValidationOptions opts;
    opts.require_bifurcation = c.kind != ScenarioKind::custom;
    opts.readout_protocol = qubit;
    RawParams raw = c.raw;
    if (qubit) {
        *c.qubit = validate_qubit_scenario(*c.qubit);
        const auto coupling = dispersive_reduce(c.qubit->omega_q, c.qubit->omega_o, c.qubit->g,
                                                c.qubit->schedule.front().omega_d);
        raw.chi = from_rad_per_ns(coupling.chi, c.unit);
        raw.delta_od = from_rad_per_ns(coupling.delta_od, c.unit);
        raw.omega = raw.delta_od;
    }
    c.params = validate_params(raw, opts);

    c.integration.validate();
    if (c.ensemble.count < 1) throw ConfigError("ensemble count must be at least 1");
    if (!(c.tau > 0.0)) throw ConfigError("display tau must be positive");
    if (c.engine != EngineChoice::moments) {
        if (qubit && c.fock_mode == FockMode::single) {
            throw ConfigError("qubit scenarios need fock mode 'dispersive' or 'full_jc'");
        }
        if (!qubit && c.fock_mode != FockMode::single) {
            throw ConfigError("fock mode '" + std::string(to_string(c.fock_mode)) +
                              "' needs a qubit block");
        }
    }
    if (c.truncation != 0 && c.truncation < kMinTruncation) {
        throw ConfigError("fock truncation must be 0 (automatic) or at least 4");
    }
    if (c.sweep.points < 2) throw ConfigError("sweep needs at least 2 points");

    c.warnings.clear();
    const double gamma = c.params.gamma;
    if (c.integration.t_final < 10.0 / gamma) {
        c.warnings.push_back("t_final is shorter than 10/gamma; stationary values not reached");
    }
    if (c.integration.dt > 0.01 / std::max(gamma, c.params.gains.k1)) {
        c.warnings.push_back("dt exceeds 0.01/max(gamma, k1)");
    }
    const SmallnessFlags& fl = c.params.flags;
    if (fl.k0_not_small) c.warnings.push_back("k0 is not small against the fixed-point scale");
    if (fl.k3_not_small) c.warnings.push_back("k3 is not small against the fixed-point scale");
    if (fl.readout_k0_not_small) c.warnings.push_back("k0 violates the weak-readout condition");
    if (fl.readout_k3_not_small) c.warnings.push_back("k3 violates the strong-readout condition");
    if (qubit && c.qubit->dispersive_warning) {
        c.warnings.push_back("|omega_q - omega_o| < 5|g|: dispersive reduction is marginal");
    }
}

std::string line_diagnostic(std::string_view text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace

const char* to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::pitchfork: return "pitchfork";
        case ScenarioKind::atom_cavity: return "atom_cavity";
        case ScenarioKind::circuit_qed: return "circuit_qed";
        case ScenarioKind::custom: return "custom";
    }
    return "custom";
}

const char* to_string(EngineChoice engine) {
    switch (engine) {
        case EngineChoice::moments: return "moments";
        case EngineChoice::fock: return "fock";
        case EngineChoice::both: return "both";
    }
    return "moments";
}

const char* to_string(NoiseSharing sharing) {
    return sharing == NoiseSharing::shared ? "shared" : "independent";
}

EngineChoice parse_engine(const std::string& name) {
    if (name == "moments") return EngineChoice::moments;
    if (name == "fock") return EngineChoice::fock;
    if (name == "both") return EngineChoice::both;
    throw ConfigError("unknown engine '" + name + "' (expected moments, fock or both)");
}

ScenarioConfig parse_scenario(std::string_view text, std::string_view origin) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string(origin) + ": syntax error at " +
                          line_diagnostic(text, e.byte == 0 ? 0 : e.byte - 1) + ": " + e.what());
    }

    const Node root(doc, "", origin);
    ScenarioConfig c;
    const auto version = root.count("schema_version", 0);
    if (version != kSchemaVersion) {
        root.fail("unsupported schema_version " + std::to_string(version) + " (expected 1)",
                  "schema_version");
    }
    c.name = root.text("name", "custom");
    c.kind = parse_kind(root);
    c.unit = rethrow_as_config(root, "units",
                               [&] { return parse_frequency_unit(root.text("units", "rad_per_ns")); });
    c.raw.unit = c.unit;

    const Node osc = root.child("oscillator");
    c.raw.omega = osc.number("omega", 0.0);
    c.raw.gamma = osc.number("gamma");
    c.raw.eta = osc.number("eta", 1.0);
    osc.reject_unknown();

    const Node fb = root.child("feedback");
    c.raw.k0 = fb.number("k0");
    c.raw.k1 = fb.number("k1");
    c.raw.k3 = fb.number("k3");
    fb.reject_unknown();

    if (root.has("qubit")) {
        double gamma2 = 0.0;
        c.qubit = parse_qubit(root.child("qubit"), c.unit, gamma2);
        c.raw.gamma2 = from_rad_per_ns(gamma2, c.unit);
    } else if (c.kind == ScenarioKind::pitchfork || c.kind == ScenarioKind::custom) {
        if (!osc.has("omega")) osc.fail("missing field", "omega");
    }

    if (root.has("initial_state")) {
        const Node init = root.child("initial_state");
        c.initial.x = init.number("x", 0.0);
        c.initial.p = init.number("p", 0.0);
        c.initial.vx = init.number("vx", 0.5);
        c.initial.vp = init.number("vp", 0.5);
        c.initial.cxp = init.number("cxp", 0.0);
        init.reject_unknown();
    }
    if (c.initial.vx * c.initial.vp - c.initial.cxp * c.initial.cxp < 0.25 * (1.0 - 1e-12)) {
        root.fail("covariance violates the uncertainty relation", "initial_state");
    }

    const Node integ = root.child("integration");
    c.integration.dt = integ.number("dt_ns");
    c.integration.t_final = integ.number("t_final_ns");
    c.integration.output_stride = integ.count("output_stride", 1);
    c.integration.warmup_steps = integ.count("warmup_steps", 10);
    integ.reject_unknown();

    if (root.has("ensemble")) {
        const Node ens = root.child("ensemble");
        c.ensemble.count = ens.count("count", 1);
        c.ensemble.seed = ens.count("seed", 1);
        c.ensemble.workers = ens.count("workers", 0);
        ens.reject_unknown();
    }

    c.sharing = parse_sharing(root);
    c.reset_average_on_switch = root.flag("reset_average_on_switch", false);
    c.engine = rethrow_as_config(root, "engine",
                                 [&] { return parse_engine(root.text("engine", "moments")); });
    c.fock_mode = c.qubit ? FockMode::dispersive : FockMode::single;
    if (root.has("fock")) {
        const Node fock = root.child("fock");
        if (fock.has("mode")) {
            c.fock_mode = rethrow_as_config(fock, "mode",
                                            [&] { return parse_fock_mode(fock.text("mode")); });
        }
        c.truncation = fock.count("truncation", 0);
        fock.reject_unknown();
    }
    if (root.has("display")) {
        const Node disp = root.child("display");
        c.tau = disp.number("tau_ns", 1.0);
        disp.reject_unknown();
    }
    if (root.has("sweep")) {
        const Node sw = root.child("sweep");
        c.sweep.omega_min = to_rad_per_ns(sw.number("omega_min", 0.0), c.unit);
        c.sweep.omega_max = to_rad_per_ns(sw.number("omega_max", 0.0), c.unit);
        c.sweep.points = sw.count("points", 201);
        sw.reject_unknown();
    }
    if (root.has("checks")) {
        const Node ch = root.child("checks");
        if (ch.has("final_y_tolerance")) c.checks.final_y_tolerance = ch.number("final_y_tolerance");
        if (ch.has("max_final_separation")) {
            c.checks.max_final_separation = ch.number("max_final_separation");
        }
        if (ch.has("min_final_separation")) {
            c.checks.min_final_separation = ch.number("min_final_separation");
        }
        ch.reject_unknown();
    }
    c.output_dir = root.text("output_dir", "runs/" + c.name);
    root.reject_unknown();

    try {
        validate_derived(c);
    } catch (const ConfigError& e) {
        throw ConfigError(std::string(origin) + ": " + e.what());
    }
    c.source = doc.dump(2);
    return c;
}

ScenarioConfig load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path.string());
}

std::vector<std::string> preset_names() {
    std::vector<std::string> out;
    for (const auto& p : kPresets) out.emplace_back(p.name);
    return out;
}

std::string_view preset_text(std::string_view name) {
    for (const auto& p : kPresets) {
        if (name == p.name) return p.text;
    }
    throw ConfigError("unknown preset '" + std::string(name) + "'");
}

ScenarioConfig load_preset(std::string_view name) {
    return parse_scenario(preset_text(name), "preset " + std::string(name));
}

void finalize_scenario(ScenarioConfig& config) { validate_derived(config); }

OscillatorRun oscillator_run(const ScenarioConfig& config) {
    if (config.has_qubit()) throw ConfigError("scenario describes qubit branches");
    return {config.params, config.initial, config.integration, NoiseMode::stochastic};
}

BranchRun branch_run(const ScenarioConfig& config) {
    if (!config.has_qubit()) throw ConfigError("scenario has no qubit block");
    BranchRun run;
    run.params = config.params;
    run.detuning = detuning_schedule(*config.qubit);
    run.initial = config.initial;
    run.integration = config.integration;
    run.sharing = config.sharing;
    run.reset_average_on_switch = config.reset_average_on_switch;
    return run;
}

OracleRun oracle_run(const ScenarioConfig& config) {
    OracleRun run;
    run.params = config.params;
    run.mode = config.fock_mode;
    run.qubit = config.qubit;
    run.initial = config.initial;
    run.integration = config.integration;
    run.truncation = config.truncation;
    return run;
}

}  // namespace bifread
