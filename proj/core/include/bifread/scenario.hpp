#pragma once

// JSON scenario configuration (schema version 1) and the embedded presets.

#include "bifread/fock.hpp"
#include "bifread/moments.hpp"
#include "bifread/params.hpp"
#include "bifread/trajectory.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace bifread {

inline constexpr int kSchemaVersion = 1;

enum class ScenarioKind { pitchfork, atom_cavity, circuit_qed, custom };
enum class EngineChoice { moments, fock, both };

const char* to_string(ScenarioKind kind);
const char* to_string(EngineChoice engine);
const char* to_string(NoiseSharing sharing);
EngineChoice parse_engine(const std::string& name);

struct EnsembleSettings {
    std::size_t count = 1;
    std::uint64_t seed = 1;
    std::size_t workers = 0;  ///< 0 selects the hardware concurrency
};

/// Optional pass/fail expectations evaluated in --check mode.
struct CheckSettings {
    std::optional<double> final_y_tolerance;     ///< oscillator runs: |Y_final - stable x_fp|
    std::optional<double> max_final_separation;  ///< branch runs: |<Y_e> - <Y_g>| at t_final
    std::optional<double> min_final_separation;
};

struct SweepSettings {
    double omega_min = 0.0;  ///< rad/ns; 0 selects 0.2 omega*
    double omega_max = 0.0;  ///< rad/ns; 0 selects 3 omega*
    std::size_t points = 201;
};

struct ScenarioConfig {
    std::string name;
    ScenarioKind kind = ScenarioKind::custom;
    FrequencyUnit unit = FrequencyUnit::rad_per_ns;
    RawParams raw;
    PhysicalParams params;               ///< rad/ns, validated
    std::optional<QubitScenario> qubit;  ///< rad/ns, validated
    GaussianMoments initial;
    IntegrationSettings integration;
    EnsembleSettings ensemble;
    NoiseSharing sharing = NoiseSharing::independent;
    bool reset_average_on_switch = false;
    EngineChoice engine = EngineChoice::moments;
    FockMode fock_mode = FockMode::single;
    std::size_t truncation = 0;  ///< 0 lets the oracle choose
    double tau = 1.0;            ///< display time scale, ns
    SweepSettings sweep;
    CheckSettings checks;
    std::string output_dir;
    std::vector<std::string> warnings;
    std::string source;  ///< the parsed document, re-serialized

    bool has_qubit() const { return qubit.has_value(); }
};

/// Parses and validates a document. Errors name the JSON path or, for syntax
/// errors, the line and column; `origin` prefixes every message.
ScenarioConfig parse_scenario(std::string_view text, std::string_view origin = "config");
ScenarioConfig load_scenario_file(const std::filesystem::path& path);

std::vector<std::string> preset_names();
/// Raw JSON of an embedded preset. Throws ConfigError for unknown names.
std::string_view preset_text(std::string_view name);
ScenarioConfig load_preset(std::string_view name);

/// Re-runs the derived-field validation after fields were edited in place
/// (for command-line overrides). Rebuilds `warnings`.
void finalize_scenario(ScenarioConfig& config);

/// Oscillator, branch and oracle runs described by a config.
OscillatorRun oscillator_run(const ScenarioConfig& config);
BranchRun branch_run(const ScenarioConfig& config);
OracleRun oracle_run(const ScenarioConfig& config);

}  // namespace bifread
