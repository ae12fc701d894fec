#pragma once

// Closed-loop trajectories: draw dW, advance moments, emit dy, update the
// record average, evaluate the control law, apply drive switches.

#include "bifread/moments.hpp"
#include "bifread/noise.hpp"
#include "bifread/params.hpp"

#include <cstddef>
#include <vector>

namespace bifread {

enum class NoiseMode {
    stochastic,
    off,  ///< dW forced to zero (mean-field diagnostic)
};

/// How the two qubit branches see the record noise.
enum class NoiseSharing {
    shared,       ///< one record for a coherent superposition
    independent,  ///< separately prepared eigenstates, one record each
};

struct IntegrationSettings {
    double dt = 0.0;
    double t_final = 0.0;
    std::size_t output_stride = 1;
    std::size_t warmup_steps = 10;

    std::size_t step_count() const;
    void validate() const;
};

struct OscillatorRun {
    PhysicalParams params;
    GaussianMoments initial;
    IntegrationSettings integration;
    NoiseMode noise = NoiseMode::stochastic;
};

struct DetuningSwitch {
    double time = 0.0;
    double delta_od = 0.0;
};

/// Converts a drive schedule into oscillator-drive detunings.
std::vector<DetuningSwitch> detuning_schedule(const QubitScenario& scenario);

struct BranchRun {
    PhysicalParams params;  ///< chi, gamma, eta, gains; omega and delta_od unused
    std::vector<DetuningSwitch> detuning;
    GaussianMoments initial;
    IntegrationSettings integration;
    NoiseMode noise = NoiseMode::stochastic;
    NoiseSharing sharing = NoiseSharing::shared;
    bool reset_average_on_switch = false;
};

struct OscillatorSample {
    double t = 0.0;
    GaussianMoments m;
    double y = 0.0;
    double u = 0.0;
    double dy_cum = 0.0;
};

struct BranchSample {
    double t = 0.0;
    GaussianMoments ground;
    GaussianMoments excited;
    double y_ground = 0.0;
    double y_excited = 0.0;
    double u_ground = 0.0;
    double u_excited = 0.0;
    double sigma = 0.0;
    double theta = 0.0;
};

enum class TrajectoryKind { oscillator, branches };

struct TrajectoryRecord {
    TrajectoryKind kind = TrajectoryKind::oscillator;
    StreamId stream;
    double dt = 0.0;
    std::size_t steps = 0;
    std::vector<OscillatorSample> oscillator;  ///< kind == oscillator
    std::vector<BranchSample> branches;        ///< kind == branches
    double min_uncertainty_product = 0.0;      ///< over every step, all branches
    double final_elapsed = 0.0;                ///< averager clock at the end
};

/// Single monitored oscillator under the cubic feedback. Samples at step 0,
/// every output_stride steps, and the last step. Throws NumericalAbort.
TrajectoryRecord simulate_trajectory(const OscillatorRun& run, StreamId stream);

/// Qubit-conditioned branches with the detuning schedule applied.
TrajectoryRecord simulate_trajectory(const BranchRun& run, StreamId stream);

}  // namespace bifread
