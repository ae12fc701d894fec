#pragma once

// Ensemble orchestration, dataset files, readout fidelity and reports.

#include "bifread/bifurcation.hpp"
#include "bifread/dephasing.hpp"
#include "bifread/fock.hpp"
#include "bifread/scenario.hpp"
#include "bifread/trajectory.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace bifread {

const char* version();

/// Column-major-free numeric table with a header.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const;  ///< throws std::out_of_range
};

/// General format with 17 significant digits (lossless for doubles).
std::string format_number(double v);
std::string csv_text(const Table& table);

Table oscillator_table(const TrajectoryRecord& record);
Table branch_table(const TrajectoryRecord& record);
Table oracle_table(const OracleRecord& record);

/// omega, x_fp, p_fp, stability, branch_label; one row per fixed point.
std::string bifurcation_csv(const BifurcationDiagram& diagram);
std::string fixed_points_csv(const std::vector<std::pair<double, std::vector<FixedPoint>>>& sets);

/// Per-row mean and sample standard deviation of every column but `t`.
/// Columns are named <col>_mean and <col>_std. Tables must share the grid.
Table summarize(const std::vector<const Table*>& tables);

struct TrajectoryOutcome {
    std::size_t index = 0;
    StreamId stream;
    std::optional<TrajectoryRecord> record;
    std::string error;  ///< set when the trajectory aborted
};

struct OracleOutcome {
    std::size_t index = 0;
    StreamId stream;
    std::optional<OracleRecord> record;
    std::string error;
    std::size_t suggested_truncation = 0;  ///< from a TruncationError
};

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct Dataset {
    ScenarioConfig config;
    std::vector<TrajectoryOutcome> moments;
    std::vector<OracleOutcome> oracle;
    std::vector<CheckResult> checks;

    bool checks_passed() const;
    std::size_t aborted() const;
    std::vector<const TrajectoryRecord*> completed() const;
};

/// Runs every trajectory of the configured engine(s) on a worker pool.
/// Aborted trajectories are recorded, not rethrown. Fills `checks`.
Dataset run_ensemble(const ScenarioConfig& config);

std::vector<CheckResult> evaluate_checks(const Dataset& dataset);

/// Writes trajectories/, summary CSVs and manifest.json into `dir`.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);

/// run_ensemble followed by write_dataset into config.output_dir.
Dataset run_scenario(const ScenarioConfig& config);

/// Sweep range from the config, defaulting to [0.2, 3] omega*.
BifurcationDiagram scenario_sweep(const ScenarioConfig& config);

/// Time-aligned Y records of one qubit branch across an ensemble.
struct RecordEnsemble {
    std::vector<double> t;
    std::vector<std::vector<double>> y;  ///< y[trajectory][sample]
};

std::pair<RecordEnsemble, RecordEnsemble> branch_records(const Dataset& dataset);

struct FidelityResult {
    double decision_time = 0.0;
    double threshold = 0.0;
    double mean_ground = 0.0;
    double mean_excited = 0.0;
    double p_miss = 0.0;         ///< excited record classified as ground
    double p_false_alarm = 0.0;  ///< ground record classified as excited
    double fidelity = 0.0;
};

/// 1 - (P(miss) + P(false alarm)) / 2 at the sample nearest decision_time.
/// The threshold defaults to the midpoint of the two ensemble means. Throws
/// std::invalid_argument for empty or mismatched ensembles and decision
/// times outside the grid.
FidelityResult readout_fidelity(const RecordEnsemble& ground, const RecordEnsemble& excited,
                                double decision_time, std::optional<double> threshold = {});

/// Ensemble-mean branch history (every field averaged per sample).
std::vector<BranchSample> mean_branch_history(const Dataset& dataset);

struct RegimeFit {
    double t_begin = 0.0;
    double t_end = 0.0;
    double delta_od = 0.0;
    bool strong = false;      ///< excited branch above omega*
    double formula = 0.0;     ///< closed-form rate for this drive
    SlopeFit fit;
};

/// Sigma-slope fits per drive segment of a shared-record branch dataset.
std::vector<RegimeFit> dephasing_fits(const Dataset& dataset);

/// Bifurcation diagrams, dephasing fits, fidelity table and long-format
/// figure CSVs for the datasets. Nothing is written when `datasets` is empty
/// or any input is unusable.
std::vector<std::filesystem::path> emit_report(const std::vector<Dataset>& datasets,
                                               const std::filesystem::path& dir);

}  // namespace bifread
