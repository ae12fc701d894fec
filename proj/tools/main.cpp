#include "bifread/errors.hpp"
#include "bifread/experiments.hpp"
#include "bifread/scenario.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace bifread;

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kNumericalAbort = 2, kCheckFailed = 3 };

struct Options {
    std::string config;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trajectories;
    std::string out_dir;
    std::string engine;
    std::optional<double> dt;
    std::optional<double> t_final;
    bool check = false;
};

void add_common(CLI::App* cmd, Options& o) {
    cmd->add_option("--config", o.config, "Scenario JSON file")->check(CLI::ExistingFile);
    cmd->add_option("--preset", o.preset, "Embedded preset name");
    cmd->add_option("--seed", o.seed, "Master seed");
    cmd->add_option("--trajectories", o.trajectories, "Ensemble size");
    cmd->add_option("--out-dir", o.out_dir, "Output directory");
    cmd->add_option("--engine", o.engine, "moments, fock or both");
    cmd->add_option("--dt", o.dt, "Time step in ns");
    cmd->add_option("--t-final", o.t_final, "Final time in ns");
    cmd->add_flag("--check", o.check, "Exit with status 3 when a check fails");
}

ScenarioConfig resolve(const Options& o, const char* fallback_preset = nullptr) {
    if (!o.config.empty() && !o.preset.empty()) {
        throw ConfigError("give either --config or --preset, not both");
    }
    ScenarioConfig c;
    if (!o.config.empty()) {
        c = load_scenario_file(o.config);
    } else if (!o.preset.empty()) {
        c = load_preset(o.preset);
    } else if (fallback_preset) {
        c = load_preset(fallback_preset);
    } else {
        throw ConfigError("no scenario: pass --config FILE or --preset NAME");
    }
    if (o.seed) c.ensemble.seed = *o.seed;
    if (o.trajectories) c.ensemble.count = *o.trajectories;
    if (!o.engine.empty()) c.engine = parse_engine(o.engine);
    if (o.dt) c.integration.dt = *o.dt;
    if (o.t_final) c.integration.t_final = *o.t_final;
    if (!o.out_dir.empty()) c.output_dir = o.out_dir;
    finalize_scenario(c);
    return c;
}

void print_warnings(const ScenarioConfig& c) {
    for (const auto& w : c.warnings) std::cerr << "warning: " << w << "\n";
}

int report_checks(const std::vector<CheckResult>& checks, bool check_mode) {
    bool ok = true;
    for (const auto& ch : checks) {
        std::cout << (ch.passed ? "ok    " : "FAIL  ") << ch.name << ": " << ch.detail << "\n";
        ok = ok && ch.passed;
    }
    return check_mode && !ok ? kCheckFailed : kOk;
}

int finish_dataset(const Dataset& ds, bool check_mode) {
    std::cout << "wrote " << ds.config.output_dir << " (" << ds.config.ensemble.count
              << " trajectories, engine " << to_string(ds.config.engine) << ")\n";
    const int status = report_checks(ds.checks, check_mode);
    if (ds.aborted() != 0) {
        std::cerr << ds.aborted() << " trajectories aborted; see manifest.json\n";
        return kNumericalAbort;
    }
    return status;
}

int cmd_simulate(const Options& o) {
    const ScenarioConfig c = resolve(o);
    print_warnings(c);
    return finish_dataset(run_scenario(c), o.check);
}

int cmd_oracle(const Options& o) {
    Options oo = o;
    if (oo.engine.empty()) oo.engine = "both";
    const ScenarioConfig c = resolve(oo);
    print_warnings(c);
    if (c.engine != EngineChoice::moments) {
        std::cout << "fock truncation N=" << (c.truncation ? c.truncation : oracle_truncation(oracle_run(c)))
                  << "\n";
    }
    return finish_dataset(run_scenario(c), o.check);
}

std::vector<FixedPoint> points_at(double omega, const PhysicalParams& p) {
    return omega == 0.0 ? std::vector<FixedPoint>{axis_fixed_point(p.gamma, p.gains)}
                        : fixed_points(omega, p.gamma, p.gains);
}

int cmd_fixed_points(const Options& o) {
    const ScenarioConfig c = resolve(o);
    const PhysicalParams& p = c.params;
    std::vector<std::pair<double, std::vector<FixedPoint>>> sets;
    if (c.has_qubit()) {
        for (const auto& sw : detuning_schedule(*c.qubit)) {
            const auto w = branch_frequencies(sw.delta_od, p.chi);
            sets.emplace_back(w.ground, points_at(w.ground, p));
            sets.emplace_back(w.excited, points_at(w.excited, p));
        }
    } else {
        sets.emplace_back(p.omega, points_at(p.omega, p));
    }
    bool ok = true;
    std::printf("omega*=%s rad/ns\n",
                format_number(bifurcation_point(p.gains.k1, p.gamma)).c_str());
    for (const auto& [omega, pts] : sets) {
        for (const auto& fp : pts) {
            std::printf("omega=%-12.6g x=%-14.8g p=%-14.8g %-8s %-7s residual=%.2e\n", omega, fp.x,
                        fp.p, to_string(fp.stability).c_str(), to_string(fp.label).c_str(),
                        fp.residual);
            ok = ok && fp.residual < 1e-9;
        }
    }
    fs::create_directories(c.output_dir);
    std::ofstream(fs::path(c.output_dir) / "fixed_points.csv") << fixed_points_csv(sets);
    std::cout << "wrote " << (fs::path(c.output_dir) / "fixed_points.csv").string() << "\n";
    if (o.check && !ok) {
        std::cout << "FAIL  residual: a fixed point exceeds 1e-9\n";
        return kCheckFailed;
    }
    return kOk;
}

int cmd_sweep(const Options& o) {
    const ScenarioConfig c = resolve(o);
    const BifurcationDiagram d = scenario_sweep(c);
    fs::create_directories(c.output_dir);
    const fs::path out = fs::path(c.output_dir) / "bifurcation.csv";
    std::ofstream(out) << bifurcation_csv(d);
    const double wstar = bifurcation_point(c.params.gains.k1, c.params.gamma);
    std::cout << "omega*=" << format_number(wstar) << " rad/ns, grid cell "
              << format_number(d.grid_cell()) << "\n";
    if (const auto tw = d.transition_omega()) {
        std::cout << "stable-count transition 1->2 near omega=" << format_number(*tw) << "\n";
    } else {
        std::cout << "no 1->2 stable-count transition in range\n";
    }
    std::cout << "wrote " << out.string() << "\n";
    bool ok = true;
    for (const auto& sp : d.points) {
        for (const auto& fp : sp.points) ok = ok && fp.residual < 1e-9;
    }
    if (o.check && !ok) {
        std::cout << "FAIL  residual: a fixed point exceeds 1e-9\n";
        return kCheckFailed;
    }
    return kOk;
}

int cmd_readout(const Options& o) {
    Options oo = o;
    if (!oo.trajectories) oo.trajectories = 200;
    ScenarioConfig c = resolve(oo, "circuit-qed");
    if (!c.has_qubit()) throw ConfigError("readout needs a qubit scenario");
    c.sharing = NoiseSharing::independent;
    c.engine = EngineChoice::moments;
    print_warnings(c);
    const Dataset ds = run_ensemble(c);
    write_dataset(ds, c.output_dir);
    if (ds.completed().empty()) {
        std::cerr << "every trajectory aborted\n";
        return kNumericalAbort;
    }
    const auto [g, e] = branch_records(ds);
    const double last_switch = c.qubit->schedule.back().time;
    const double decision = std::min(last_switch + 150.0, g.t.back());
    const FidelityResult r = readout_fidelity(g, e, decision);

    std::string csv = "decision_time,threshold,mean_Y_g,mean_Y_e,p_miss,p_false_alarm,fidelity\n";
    for (double t : g.t) {
        if (t < last_switch) continue;
        const FidelityResult f = readout_fidelity(g, e, t);
        csv += format_number(f.decision_time) + "," + format_number(f.threshold) + "," +
               format_number(f.mean_ground) + "," + format_number(f.mean_excited) + "," +
               format_number(f.p_miss) + "," + format_number(f.p_false_alarm) + "," +
               format_number(f.fidelity) + "\n";
    }
    std::ofstream(fs::path(c.output_dir) / "readout.csv") << csv;
    std::printf("decision t=%s ns: fidelity=%s (miss %s, false alarm %s, threshold %s)\n",
                format_number(r.decision_time).c_str(), format_number(r.fidelity).c_str(),
                format_number(r.p_miss).c_str(), format_number(r.p_false_alarm).c_str(),
                format_number(r.threshold).c_str());
    if (ds.aborted() != 0) return kNumericalAbort;
    if (o.check && r.fidelity < 0.95) {
        std::cout << "FAIL  fidelity below 0.95\n";
        return kCheckFailed;
    }
    return kOk;
}

int cmd_report(const Options& o) {
    std::vector<ScenarioConfig> configs;
    if (!o.config.empty() || !o.preset.empty()) {
        configs.push_back(resolve(o));
    } else {
        for (const auto& name : preset_names()) {
            Options oo = o;
            oo.preset = name;
            oo.out_dir.clear();
            configs.push_back(resolve(oo));
        }
    }
    std::vector<Dataset> datasets;
    bool checks_ok = true;
    std::size_t aborted = 0;
    for (const auto& c : configs) {
        std::cout << "running " << c.name << "\n";
        datasets.push_back(run_ensemble(c));
        checks_ok = checks_ok && datasets.back().checks_passed();
        aborted += datasets.back().aborted();
    }
    const fs::path dir = o.out_dir.empty() ? fs::path("report") : fs::path(o.out_dir);
    for (const auto& p : emit_report(datasets, dir)) std::cout << "wrote " << p.string() << "\n";
    if (aborted) return kNumericalAbort;
    for (const auto& ds : datasets) report_checks(ds.checks, false);
    return o.check && !checks_ok ? kCheckFailed : kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Feedback-induced bifurcation readout simulator"};
    app.set_version_flag("--version", version());
    app.require_subcommand(1);

    Options opts;
    bool list_presets = false;
    auto* simulate = app.add_subcommand("simulate", "Run a scenario ensemble");
    auto* sweep = app.add_subcommand("sweep", "Bifurcation diagram over omega");
    auto* fixed = app.add_subcommand("fixed-points", "Analytic fixed points and stability");
    auto* oracle = app.add_subcommand("oracle", "Fock-space oracle, paired with the moments engine");
    auto* readout = app.add_subcommand("readout", "Readout fidelity from per-branch ensembles");
    auto* report = app.add_subcommand("report", "Report files for presets or a config");
    auto* presets = app.add_subcommand("presets", "List embedded presets");
    presets->add_flag("--show", list_presets, "Print each preset's JSON");
    for (auto* cmd : {simulate, sweep, fixed, oracle, readout, report}) add_common(cmd, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*presets) {
            for (const auto& name : preset_names()) {
                std::cout << name << "\n";
                if (list_presets) std::cout << preset_text(name) << "\n";
            }
            return kOk;
        }
        if (*simulate) return cmd_simulate(opts);
        if (*sweep) return cmd_sweep(opts);
        if (*fixed) return cmd_fixed_points(opts);
        if (*oracle) return cmd_oracle(opts);
        if (*readout) return cmd_readout(opts);
        if (*report) return cmd_report(opts);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const NumericalAbort& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return kNumericalAbort;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    }
    return kOk;
}
