#include "bifread/experiments.hpp"

#include "bifread/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <thread>

#ifndef BIFREAD_VERSION
#define BIFREAD_VERSION "0.0.0"
#endif

namespace bifread {

namespace fs = std::filesystem;
using json = nlohmann::json;

const char* version() { return BIFREAD_VERSION; }

std::size_t Table::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw std::out_of_range("no column '" + name + "'");
    return static_cast<std::size_t>(it - columns.begin());
}

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

std::string csv_text(const Table& table) {
    std::string out;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) out += ',';
        out += table.columns[i];
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_number(row[i]);
        }
        out += '\n';
    }
    return out;
}

Table oscillator_table(const TrajectoryRecord& record) {
    Table t{{"t", "x", "p", "vx", "vp", "cxp", "Y", "u", "dy_cum"}, {}};
    t.rows.reserve(record.oscillator.size());
    for (const auto& s : record.oscillator) {
        t.rows.push_back({s.t, s.m.x, s.m.p, s.m.vx, s.m.vp, s.m.cxp, s.y, s.u, s.dy_cum});
    }
    return t;
}

Table branch_table(const TrajectoryRecord& record) {
    Table t{{"t", "x_g", "p_g", "x_e", "p_e", "Y_g", "Y_e", "u_g", "u_e", "sigma", "theta"}, {}};
    t.rows.reserve(record.branches.size());
    for (const auto& s : record.branches) {
        t.rows.push_back({s.t, s.ground.x, s.ground.p, s.excited.x, s.excited.p, s.y_ground,
                          s.y_excited, s.u_ground, s.u_excited, s.sigma, s.theta});
    }
    return t;
}

Table oracle_table(const OracleRecord& record) {
    Table t{{"t", "x", "p", "vx", "vp", "cxp", "Y", "u", "dy_cum", "N", "tail_mass"}, {}};
    t.rows.reserve(record.samples.size());
    const auto n = static_cast<double>(record.truncation);
    for (const auto& s : record.samples) {
        t.rows.push_back(
            {s.t, s.m.x, s.m.p, s.m.vx, s.m.vp, s.m.cxp, s.y, s.u, s.dy_cum, n, s.tail_mass});
    }
    return t;
}

namespace {

// Stability and branch label are written as text, so these tables go
// through a separate writer.
struct TextTable {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

std::string csv_text(const TextTable& table) {
    std::string out;
    for (std::size_t i = 0; i < table.columns.size(); ++i) {
        if (i) out += ',';
        out += table.columns[i];
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += row[i];
        }
        out += '\n';
    }
    return out;
}

void append_fixed_points(TextTable& t, double omega, const std::vector<FixedPoint>& points) {
    for (const auto& fp : points) {
        t.rows.push_back({format_number(omega), format_number(fp.x), format_number(fp.p),
                          to_string(fp.stability), to_string(fp.label)});
    }
}

const std::vector<std::string> kFixedPointColumns = {"omega", "x_fp", "p_fp", "stability",
                                                     "branch_label"};

}  // namespace

std::string bifurcation_csv(const BifurcationDiagram& diagram) {
    TextTable t{kFixedPointColumns, {}};
    for (const auto& sp : diagram.points) append_fixed_points(t, sp.omega, sp.points);
    return csv_text(t);
}

std::string fixed_points_csv(const std::vector<std::pair<double, std::vector<FixedPoint>>>& sets) {
    TextTable t{kFixedPointColumns, {}};
    for (const auto& [omega, pts] : sets) append_fixed_points(t, omega, pts);
    return csv_text(t);
}

Table summarize(const std::vector<const Table*>& tables) {
    if (tables.empty()) throw std::invalid_argument("summarize: no tables");
    const Table& first = *tables.front();
    const std::size_t tcol = first.column("t");
    for (const Table* tab : tables) {
        if (tab->columns != first.columns || tab->rows.size() != first.rows.size()) {
            throw std::invalid_argument("summarize: tables do not share a layout");
        }
    }
    Table out;
    out.columns.push_back("t");
    for (std::size_t c = 0; c < first.columns.size(); ++c) {
        if (c == tcol) continue;
        out.columns.push_back(first.columns[c] + "_mean");
        out.columns.push_back(first.columns[c] + "_std");
    }
    const double n = static_cast<double>(tables.size());
    for (std::size_t r = 0; r < first.rows.size(); ++r) {
        std::vector<double> row{first.rows[r][tcol]};
        for (std::size_t c = 0; c < first.columns.size(); ++c) {
            if (c == tcol) continue;
            double sum = 0.0;
            for (const Table* tab : tables) sum += tab->rows[r][c];
            const double mean = sum / n;
            double ss = 0.0;
            for (const Table* tab : tables) {
                const double d = tab->rows[r][c] - mean;
                ss += d * d;
            }
            row.push_back(mean);
            row.push_back(tables.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0);
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

bool Dataset::checks_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::size_t Dataset::aborted() const {
    std::size_t n = 0;
    for (const auto& m : moments) n += m.record ? 0 : 1;
    for (const auto& o : oracle) n += o.record ? 0 : 1;
    return n;
}

std::vector<const TrajectoryRecord*> Dataset::completed() const {
    std::vector<const TrajectoryRecord*> out;
    for (const auto& m : moments) {
        if (m.record) out.push_back(&*m.record);
    }
    return out;
}

namespace {

template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

bool runs_moments(EngineChoice e) { return e != EngineChoice::fock; }
bool runs_fock(EngineChoice e) { return e != EngineChoice::moments; }

double stationary_x(double omega, double gamma, const FeedbackGains& gains, double y) {
    // nearest stable fixed point to y
    double best = std::numeric_limits<double>::quiet_NaN();
    const auto points = omega == 0.0 ? std::vector<FixedPoint>{axis_fixed_point(gamma, gains)}
                                     : fixed_points(omega, gamma, gains);
    for (const auto& fp : points) {
        if (fp.stability != Stability::stable) continue;
        if (std::isnan(best) || std::abs(fp.x - y) < std::abs(best - y)) best = fp.x;
    }
    return best;
}

std::string describe(double v) { return format_number(v); }

}  // namespace

Dataset run_ensemble(const ScenarioConfig& config) {
    Dataset ds;
    ds.config = config;
    const std::size_t n = config.ensemble.count;
    const std::uint64_t seed = config.ensemble.seed;

    if (runs_moments(config.engine)) {
        ds.moments.resize(n);
        const bool qubit = config.has_qubit();
        const OscillatorRun osc = qubit ? OscillatorRun{} : oscillator_run(config);
        const BranchRun br = qubit ? branch_run(config) : BranchRun{};
        parallel_for(n, config.ensemble.workers, [&](std::size_t i) {
            TrajectoryOutcome& out = ds.moments[i];
            out.index = i;
            out.stream = {seed, i};
            try {
                out.record = qubit ? simulate_trajectory(br, out.stream)
                                   : simulate_trajectory(osc, out.stream);
            } catch (const NumericalAbort& e) {
                out.error = e.what();
            }
        });
    }
    if (runs_fock(config.engine)) {
        ds.oracle.resize(n);
        const OracleRun run = oracle_run(config);
        parallel_for(n, config.ensemble.workers, [&](std::size_t i) {
            OracleOutcome& out = ds.oracle[i];
            out.index = i;
            out.stream = {seed, i};
            try {
                out.record = run_oracle(run, out.stream);
            } catch (const TruncationError& e) {
                out.error = e.what();
                out.suggested_truncation = e.suggested_truncation();
            } catch (const NumericalAbort& e) {
                out.error = e.what();
            }
        });
    }
    ds.checks = evaluate_checks(ds);
    return ds;
}

std::vector<CheckResult> evaluate_checks(const Dataset& ds) {
    const ScenarioConfig& c = ds.config;
    std::vector<CheckResult> out;

    out.push_back({"no_aborts", ds.aborted() == 0,
                   std::to_string(ds.aborted()) + " aborted trajectories"});

    double min_product = std::numeric_limits<double>::infinity();
    for (const auto* r : ds.completed()) min_product = std::min(min_product, r->min_uncertainty_product);
    if (!ds.moments.empty()) {
        out.push_back({"uncertainty_product", !(min_product < 0.25 - 1e-9),
                       "min vx vp - cxp^2 = " + describe(min_product)});
    }

    if (!ds.oracle.empty()) {
        double tail = 0.0;
        for (const auto& o : ds.oracle) {
            if (o.record) tail = std::max(tail, o.record->max_tail_mass);
        }
        out.push_back({"tail_mass", tail < kTailMassLimit, "max tail mass = " + describe(tail)});
    }

    // paired engines in single-oscillator mode must agree
    if (!c.has_qubit() && !ds.oracle.empty() && !ds.moments.empty()) {
        double e1 = 0.0, e2 = 0.0;
        bool paired = false;
        for (std::size_t i = 0; i < ds.moments.size(); ++i) {
            if (!ds.moments[i].record || !ds.oracle[i].record) continue;
            const auto& a = ds.moments[i].record->oscillator;
            const auto& b = ds.oracle[i].record->samples;
            if (a.size() != b.size()) continue;
            paired = true;
            for (std::size_t k = 0; k < a.size(); ++k) {
                e1 = std::max({e1, std::abs(a[k].m.x - b[k].m.x), std::abs(a[k].m.p - b[k].m.p)});
                e2 = std::max({e2, std::abs(a[k].m.vx - b[k].m.vx),
                               std::abs(a[k].m.vp - b[k].m.vp), std::abs(a[k].m.cxp - b[k].m.cxp)});
            }
        }
        out.push_back({"oracle_agreement", paired && e1 <= 1e-2 && e2 <= 1e-2,
                       "max first-moment diff " + describe(e1) + ", second " + describe(e2)});
    }

    const auto recs = ds.completed();
    if (c.checks.final_y_tolerance && !c.has_qubit() && !recs.empty()) {
        const double tol = *c.checks.final_y_tolerance;
        std::size_t ok = 0;
        double worst = 0.0;
        for (const auto* r : recs) {
            const double y = r->oscillator.back().y;
            const double target = stationary_x(c.params.omega, c.params.gamma, c.params.gains, y);
            const double err = std::abs(y - target);
            worst = std::max(worst, err);
            ok += err <= tol ? 1 : 0;
        }
        out.push_back({"final_y", ok == recs.size(),
                       std::to_string(ok) + "/" + std::to_string(recs.size()) +
                           " final Y within " + describe(tol) +
                           " of a stable fixed point; worst " + describe(worst)});
    }

    if (c.has_qubit() && !recs.empty() &&
        (c.checks.max_final_separation || c.checks.min_final_separation)) {
        double yg = 0.0, ye = 0.0;
        for (const auto* r : recs) {
            yg += r->branches.back().y_ground;
            ye += r->branches.back().y_excited;
        }
        const double sep = std::abs(ye - yg) / static_cast<double>(recs.size());
        if (c.checks.max_final_separation) {
            out.push_back({"max_final_separation", sep < *c.checks.max_final_separation,
                           "|<Y_e> - <Y_g>| = " + describe(sep)});
        }
        if (c.checks.min_final_separation) {
            out.push_back({"min_final_separation", sep > *c.checks.min_final_separation,
                           "|<Y_e> - <Y_g>| = " + describe(sep)});
        }
    }
    return out;
}

namespace {

std::string padded(std::size_t i) {
    std::string s = std::to_string(i);
    return std::string(s.size() < 4 ? 4 - s.size() : 0, '0') + s;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
    if (!out) throw std::runtime_error("failed writing " + path.string());
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json fixed_points_json(double omega, double gamma, const FeedbackGains& gains) {
    json arr = json::array();
    const auto points = omega == 0.0 ? std::vector<FixedPoint>{axis_fixed_point(gamma, gains)}
                                     : fixed_points(omega, gamma, gains);
    for (const auto& fp : points) {
        arr.push_back({{"x", fp.x}, {"p", fp.p}, {"stability", to_string(fp.stability)},
                       {"label", to_string(fp.label)}, {"residual", fp.residual}});
    }
    return arr;
}

json analytics_json(const ScenarioConfig& c) {
    const PhysicalParams& p = c.params;
    const double wstar = bifurcation_point(p.gains.k1, p.gamma);
    json a;
    a["omega_star"] = wstar;
    if (!c.has_qubit()) {
        a["fixed_points"] = fixed_points_json(p.omega, p.gamma, p.gains);
        return a;
    }
    const QubitScenario& q = *c.qubit;
    a["chi"] = p.chi;
    const ReadoutDrives drives = drive_schedule(q.omega_o, wstar, p.chi);
    a["drive_cross_check"] = {
        {"weak_omega_d", drives.weak},
        {"strong_omega_d", drives.strong},
        {"weak_delta_od", q.omega_o - drives.weak},
        {"strong_delta_od", q.omega_o - drives.strong},
        {"weak_delta_od_config_units", from_rad_per_ns(q.omega_o - drives.weak, c.unit)},
        {"strong_delta_od_config_units", from_rad_per_ns(q.omega_o - drives.strong, c.unit)},
    };
    json segs = json::array();
    for (const auto& sw : detuning_schedule(q)) {
        const BranchFrequencies w = branch_frequencies(sw.delta_od, p.chi);
        json s{{"t", sw.time},
               {"delta_od", sw.delta_od},
               {"omega_ground", w.ground},
               {"omega_excited", w.excited},
               {"fixed_points_ground", fixed_points_json(w.ground, p.gamma, p.gains)},
               {"fixed_points_excited", fixed_points_json(w.excited, p.gamma, p.gains)}};
        PhysicalParams seg = p;
        seg.delta_od = sw.delta_od;
        if (w.excited > wstar && w.ground < wstar) {
            s["gamma_strong"] = dephasing_strong(seg);
        } else if (w.excited < wstar) {
            s["gamma_weak"] = dephasing_weak(seg);
        }
        segs.push_back(s);
    }
    a["segments"] = segs;
    return a;
}

}  // namespace

void write_dataset(const Dataset& ds, const fs::path& dir) {
    const ScenarioConfig& c = ds.config;
    fs::create_directories(dir / "trajectories");

    json trajectories = json::array();
    std::vector<Table> moment_tables;
    moment_tables.reserve(ds.moments.size());
    for (const auto& m : ds.moments) {
        json entry{{"index", m.index}, {"seed", m.stream.master_seed}, {"engine", "moments"}};
        if (m.record) {
            const std::string name = "trajectories/moments_" + padded(m.index) + ".csv";
            moment_tables.push_back(c.has_qubit() ? branch_table(*m.record)
                                                  : oscillator_table(*m.record));
            write_file(dir / name, csv_text(moment_tables.back()));
            entry["status"] = "ok";
            entry["file"] = name;
            entry["min_uncertainty_product"] = m.record->min_uncertainty_product;
        } else {
            entry["status"] = "aborted";
            entry["error"] = m.error;
        }
        trajectories.push_back(entry);
    }
    std::vector<Table> oracle_tables;
    for (const auto& o : ds.oracle) {
        json entry{{"index", o.index}, {"seed", o.stream.master_seed}, {"engine", "fock"}};
        if (o.record) {
            const std::string name = "trajectories/oracle_" + padded(o.index) + ".csv";
            oracle_tables.push_back(oracle_table(*o.record));
            write_file(dir / name, csv_text(oracle_tables.back()));
            entry["status"] = "ok";
            entry["file"] = name;
            entry["truncation"] = o.record->truncation;
            entry["max_tail_mass"] = o.record->max_tail_mass;
        } else {
            entry["status"] = "aborted";
            entry["error"] = o.error;
            if (o.suggested_truncation) entry["suggested_truncation"] = o.suggested_truncation;
        }
        trajectories.push_back(entry);
    }

    const auto summary_of = [](const std::vector<Table>& tables) {
        std::vector<const Table*> ptrs;
        for (const auto& t : tables) ptrs.push_back(&t);
        return summarize(ptrs);
    };
    if (!moment_tables.empty()) write_file(dir / "summary_moments.csv", csv_text(summary_of(moment_tables)));
    if (!oracle_tables.empty()) write_file(dir / "summary_oracle.csv", csv_text(summary_of(oracle_tables)));

    json checks = json::array();
    for (const auto& ch : ds.checks) {
        checks.push_back({{"name", ch.name}, {"passed", ch.passed}, {"detail", ch.detail}});
    }
    const PhysicalParams& p = c.params;
    json manifest{
        {"tool", "bifread"},
        {"version", version()},
        {"created_utc", utc_timestamp()},
        {"scenario", {{"name", c.name}, {"kind", to_string(c.kind)}, {"units", to_string(c.unit)}}},
        {"config", json::parse(c.source)},
        {"effective",
         {{"seed", c.ensemble.seed},
          {"trajectories", c.ensemble.count},
          {"engine", to_string(c.engine)},
          {"fock_mode", to_string(c.fock_mode)},
          {"noise_sharing", to_string(c.sharing)},
          {"dt_ns", c.integration.dt},
          {"t_final_ns", c.integration.t_final},
          {"steps", c.integration.step_count()},
          {"output_stride", c.integration.output_stride},
          {"warmup_steps", c.integration.warmup_steps},
          {"tau_ns", c.tau}}},
        {"params_rad_per_ns",
         {{"omega", p.omega},
          {"gamma", p.gamma},
          {"eta", p.eta},
          {"k0", p.gains.k0},
          {"k1", p.gains.k1},
          {"k3", p.gains.k3},
          {"gamma2", p.gamma2},
          {"chi", p.chi},
          {"delta_od", p.delta_od}}},
        {"smallness_flags",
         {{"k0_not_small", p.flags.k0_not_small},
          {"k3_not_small", p.flags.k3_not_small},
          {"readout_k0_not_small", p.flags.readout_k0_not_small},
          {"readout_k3_not_small", p.flags.readout_k3_not_small}}},
        {"warnings", c.warnings},
        {"analytics", analytics_json(c)},
        {"trajectories", trajectories},
        {"checks", checks},
    };
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

Dataset run_scenario(const ScenarioConfig& config) {
    Dataset ds = run_ensemble(config);
    write_dataset(ds, config.output_dir);
    return ds;
}

BifurcationDiagram scenario_sweep(const ScenarioConfig& config) {
    const double wstar = bifurcation_point(config.params.gains.k1, config.params.gamma);
    const double lo = config.sweep.omega_min > 0.0 ? config.sweep.omega_min : 0.2 * wstar;
    const double hi = config.sweep.omega_max > 0.0 ? config.sweep.omega_max : 3.0 * wstar;
    return sweep_bifurcation(config.params, lo, hi, config.sweep.points);
}

std::pair<RecordEnsemble, RecordEnsemble> branch_records(const Dataset& ds) {
    if (!ds.config.has_qubit()) throw std::invalid_argument("dataset has no qubit branches");
    RecordEnsemble g, e;
    for (const auto* r : ds.completed()) {
        if (g.t.empty()) {
            for (const auto& s : r->branches) g.t.push_back(s.t);
            e.t = g.t;
        }
        std::vector<double> yg, ye;
        yg.reserve(r->branches.size());
        ye.reserve(r->branches.size());
        for (const auto& s : r->branches) {
            yg.push_back(s.y_ground);
            ye.push_back(s.y_excited);
        }
        g.y.push_back(std::move(yg));
        e.y.push_back(std::move(ye));
    }
    return {std::move(g), std::move(e)};
}

FidelityResult readout_fidelity(const RecordEnsemble& ground, const RecordEnsemble& excited,
                                double decision_time, std::optional<double> threshold) {
    if (ground.y.empty() || excited.y.empty()) {
        throw std::invalid_argument("readout_fidelity: empty ensemble");
    }
    if (ground.t != excited.t || ground.t.empty()) {
        throw std::invalid_argument("readout_fidelity: ensembles do not share a time grid");
    }
    const auto& t = ground.t;
    const double slack = t.size() > 1 ? 0.5 * (t[1] - t[0]) : 0.0;
    if (decision_time < t.front() - slack || decision_time > t.back() + slack) {
        throw std::invalid_argument("readout_fidelity: decision time outside the grid");
    }
    const auto nearest = std::min_element(t.begin(), t.end(), [&](double a, double b) {
        return std::abs(a - decision_time) < std::abs(b - decision_time);
    });
    const auto k = static_cast<std::size_t>(nearest - t.begin());

    const auto mean_at = [k](const RecordEnsemble& ens) {
        double s = 0.0;
        for (const auto& y : ens.y) {
            if (y.size() != ens.t.size()) {
                throw std::invalid_argument("readout_fidelity: ragged ensemble");
            }
            s += y[k];
        }
        return s / static_cast<double>(ens.y.size());
    };
    FidelityResult r;
    r.decision_time = t[k];
    r.mean_ground = mean_at(ground);
    r.mean_excited = mean_at(excited);
    r.threshold = threshold.value_or(0.5 * (r.mean_ground + r.mean_excited));
    const bool excited_above = r.mean_excited >= r.mean_ground;
    const auto says_excited = [&](double y) {
        return excited_above ? y > r.threshold : y < r.threshold;
    };
    double miss = 0.0, fa = 0.0;
    for (const auto& y : excited.y) miss += says_excited(y[k]) ? 0.0 : 1.0;
    for (const auto& y : ground.y) fa += says_excited(y[k]) ? 1.0 : 0.0;
    r.p_miss = miss / static_cast<double>(excited.y.size());
    r.p_false_alarm = fa / static_cast<double>(ground.y.size());
    r.fidelity = 1.0 - 0.5 * (r.p_miss + r.p_false_alarm);
    return r;
}

std::vector<BranchSample> mean_branch_history(const Dataset& ds) {
    const auto recs = ds.completed();
    if (recs.empty() || !ds.config.has_qubit()) {
        throw std::invalid_argument("mean_branch_history: no completed branch trajectories");
    }
    std::vector<BranchSample> mean(recs.front()->branches.size());
    const double inv = 1.0 / static_cast<double>(recs.size());
    const auto acc = [inv](GaussianMoments& into, const GaussianMoments& m) {
        into.x += inv * m.x;
        into.p += inv * m.p;
        into.vx += inv * m.vx;
        into.vp += inv * m.vp;
        into.cxp += inv * m.cxp;
    };
    for (auto& s : mean) {
        s.ground = GaussianMoments{0, 0, 0, 0, 0};
        s.excited = GaussianMoments{0, 0, 0, 0, 0};
    }
    for (const auto* r : recs) {
        for (std::size_t k = 0; k < mean.size(); ++k) {
            const BranchSample& s = r->branches[k];
            BranchSample& m = mean[k];
            m.t = s.t;
            acc(m.ground, s.ground);
            acc(m.excited, s.excited);
            m.y_ground += inv * s.y_ground;
            m.y_excited += inv * s.y_excited;
            m.u_ground += inv * s.u_ground;
            m.u_excited += inv * s.u_excited;
            m.sigma += inv * s.sigma;
            m.theta += inv * s.theta;
        }
    }
    return mean;
}

std::vector<RegimeFit> dephasing_fits(const Dataset& ds) {
    const auto history = mean_branch_history(ds);
    std::vector<double> t, sigma;
    for (const auto& s : history) {
        t.push_back(s.t);
        sigma.push_back(s.sigma);
    }
    const PhysicalParams& p = ds.config.params;
    const double wstar = bifurcation_point(p.gains.k1, p.gamma);
    const auto segs = detuning_schedule(*ds.config.qubit);
    std::vector<RegimeFit> out;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        RegimeFit f;
        f.t_begin = segs[i].time;
        f.t_end = i + 1 < segs.size() ? segs[i + 1].time : history.back().t;
        f.delta_od = segs[i].delta_od;
        PhysicalParams seg = p;
        seg.delta_od = f.delta_od;
        const BranchFrequencies w = branch_frequencies(f.delta_od, p.chi);
        f.strong = w.excited > wstar;
        try {
            f.formula = f.strong ? dephasing_strong(seg) : dephasing_weak(seg);
        } catch (const std::domain_error&) {
            f.formula = std::numeric_limits<double>::quiet_NaN();
        }
        f.fit = fit_regime_slope(t, sigma, f.t_begin, f.t_end, p.gamma);
        out.push_back(f);
    }
    return out;
}

std::vector<fs::path> emit_report(const std::vector<Dataset>& datasets, const fs::path& dir) {
    if (datasets.empty()) throw std::invalid_argument("emit_report: no datasets");

    // build every file in memory first so a failure leaves nothing behind
    std::vector<std::pair<std::string, std::string>> files;

    TextTable deph{{"scenario", "segment", "t_begin", "t_end", "delta_od", "regime",
                    "gamma_fit", "gamma_formula", "relative_error", "gamma_fit_config_units",
                    "gamma_formula_config_units"},
                   {}};
    TextTable fid{{"scenario", "noise_sharing", "trajectories", "decision_time", "threshold",
                   "mean_Y_g", "mean_Y_e", "p_miss", "p_false_alarm", "fidelity"},
                  {}};
    for (const auto& ds : datasets) {
        const ScenarioConfig& c = ds.config;
        if (ds.completed().empty()) {
            throw std::invalid_argument("emit_report: dataset '" + c.name +
                                        "' has no completed moment trajectories");
        }
        files.emplace_back("bifurcation_" + c.name + ".csv", bifurcation_csv(scenario_sweep(c)));

        TextTable fig{{"scenario", "trajectory", "branch", "t_over_tau", "Y"}, {}};
        for (const auto& m : ds.moments) {
            if (!m.record) continue;
            const std::string idx = std::to_string(m.index);
            if (c.has_qubit()) {
                for (const auto& s : m.record->branches) {
                    const std::string tt = format_number(s.t / c.tau);
                    fig.rows.push_back({c.name, idx, "g", tt, format_number(s.y_ground)});
                    fig.rows.push_back({c.name, idx, "e", tt, format_number(s.y_excited)});
                }
            } else {
                for (const auto& s : m.record->oscillator) {
                    fig.rows.push_back(
                        {c.name, idx, "oscillator", format_number(s.t / c.tau), format_number(s.y)});
                }
            }
        }
        files.emplace_back("figure_" + c.name + ".csv", csv_text(fig));

        if (!c.has_qubit()) continue;
        if (c.sharing == NoiseSharing::shared) {
            const auto fits = dephasing_fits(ds);
            for (std::size_t i = 0; i < fits.size(); ++i) {
                const RegimeFit& f = fits[i];
                deph.rows.push_back({c.name, std::to_string(i), format_number(f.t_begin),
                                     format_number(f.t_end), format_number(f.delta_od),
                                     f.strong ? "strong" : "weak", format_number(f.fit.slope),
                                     format_number(f.formula),
                                     format_number(f.fit.slope / f.formula - 1.0),
                                     format_number(from_rad_per_ns(f.fit.slope, c.unit)),
                                     format_number(from_rad_per_ns(f.formula, c.unit))});
            }
        }
        const auto [g, e] = branch_records(ds);
        const FidelityResult r = readout_fidelity(g, e, g.t.back());
        fid.rows.push_back({c.name, to_string(c.sharing), std::to_string(g.y.size()),
                            format_number(r.decision_time), format_number(r.threshold),
                            format_number(r.mean_ground), format_number(r.mean_excited),
                            format_number(r.p_miss), format_number(r.p_false_alarm),
                            format_number(r.fidelity)});
    }
    files.emplace_back("dephasing.csv", csv_text(deph));
    files.emplace_back("fidelity.csv", csv_text(fid));

    fs::create_directories(dir);
    std::vector<fs::path> written;
    for (const auto& [name, content] : files) {
        write_file(dir / name, content);
        written.push_back(dir / name);
    }
    return written;
}

}  // namespace bifread
