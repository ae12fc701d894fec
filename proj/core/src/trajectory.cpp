#include "bifread/trajectory.hpp"

#include "bifread/errors.hpp"
#include "bifread/feedback.hpp"

#include <algorithm>
#include <cmath>

namespace bifread {

std::size_t IntegrationSettings::step_count() const {
    return static_cast<std::size_t>(std::llround(t_final / dt));
}

void IntegrationSettings::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("integration dt must be positive");
    if (!(t_final > 0.0) || !std::isfinite(t_final)) {
        throw ConfigError("integration t_final must be positive");
    }
    if (step_count() == 0) throw ConfigError("t_final is shorter than one step");
    if (output_stride == 0) throw ConfigError("output stride must be at least 1");
}

std::vector<DetuningSwitch> detuning_schedule(const QubitScenario& scenario) {
    std::vector<DetuningSwitch> out;
    out.reserve(scenario.schedule.size());
    for (const auto& sw : scenario.schedule) {
        out.push_back({sw.time, scenario.omega_o - sw.omega_d});
    }
    return out;
}

namespace {

bool should_sample(std::size_t step, std::size_t steps, std::size_t stride) {
    return step % stride == 0 || step == steps;
}

}  // namespace

TrajectoryRecord simulate_trajectory(const OscillatorRun& run, StreamId stream) {
    run.integration.validate();
    const double dt = run.integration.dt;
    const std::size_t steps = run.integration.step_count();
    const std::size_t stride = run.integration.output_stride;
    const Oscillator osc = oscillator_of(run.params);

    TrajectoryRecord rec;
    rec.kind = TrajectoryKind::oscillator;
    rec.stream = stream;
    rec.dt = dt;
    rec.steps = steps;
    rec.oscillator.reserve(steps / stride + 2);

    WienerSource noise(stream, 0, dt);
    RecordAverager average(static_cast<double>(run.integration.warmup_steps) * dt);
    GaussianMoments m = run.initial;
    double dy_cum = 0.0;
    double min_product = m.uncertainty_product();

    const auto record = [&](std::size_t step) {
        const double y = average.value();
        rec.oscillator.push_back(
            {static_cast<double>(step) * dt, m, y, control_law(y, run.params.gains), dy_cum});
    };
    record(0);

    for (std::size_t i = 0; i < steps; ++i) {
        const double u = control_law(average.value(), run.params.gains);
        const double dW = run.noise == NoiseMode::stochastic ? noise.next() : 0.0;
        const FirstMomentStep next = step_moments(m, osc, u, dW, dt);
        m = next.moments;
        average.update(next.dy, dt);
        dy_cum += next.dy;
        min_product = std::min(min_product, m.uncertainty_product());
        if (should_sample(i + 1, steps, stride)) record(i + 1);
    }
    rec.min_uncertainty_product = min_product;
    rec.final_elapsed = average.elapsed();
    return rec;
}

TrajectoryRecord simulate_trajectory(const BranchRun& run, StreamId stream) {
    run.integration.validate();
    if (run.detuning.empty() || run.detuning.front().time != 0.0) {
        throw ConfigError("detuning schedule must start at t = 0");
    }
    const double dt = run.integration.dt;
    const std::size_t steps = run.integration.step_count();
    const std::size_t stride = run.integration.output_stride;
    const double warmup = static_cast<double>(run.integration.warmup_steps) * dt;

    TrajectoryRecord rec;
    rec.kind = TrajectoryKind::branches;
    rec.stream = stream;
    rec.dt = dt;
    rec.steps = steps;
    rec.branches.reserve(steps / stride + 2);

    WienerSource noise_ground(stream, 0, dt);
    WienerSource noise_excited(stream, 1, dt);

    BranchState state{run.initial, run.initial, RecordAverager(warmup), RecordAverager(warmup),
                      0.0, 0.0};
    double min_product = run.initial.uncertainty_product();
    std::size_t active = 0;

    const auto record = [&](std::size_t step) {
        const double yg = state.average_ground.value();
        const double ye = state.average_excited.value();
        rec.branches.push_back({static_cast<double>(step) * dt, state.ground, state.excited, yg, ye,
                                control_law(yg, run.params.gains),
                                control_law(ye, run.params.gains), state.sigma, state.theta});
    };
    record(0);

    // switches land on the first grid point at or after their time
    const double eps = 1e-9 * dt;
    for (std::size_t i = 0; i < steps; ++i) {
        const double t = static_cast<double>(i) * dt;
        while (active + 1 < run.detuning.size() && run.detuning[active + 1].time <= t + eps) {
            ++active;
            if (run.reset_average_on_switch) {
                state.average_ground.reset();
                state.average_excited.reset();
            }
        }
        BranchNoise dW;
        if (run.noise == NoiseMode::stochastic) {
            dW.ground = noise_ground.next();
            dW.excited = run.sharing == NoiseSharing::shared ? dW.ground : noise_excited.next();
        }
        state = step_qubit_branches(state, run.params, run.detuning[active].delta_od, dW, dt).state;
        min_product = std::min({min_product, state.ground.uncertainty_product(),
                                state.excited.uncertainty_product()});
        if (should_sample(i + 1, steps, stride)) record(i + 1);
    }
    rec.min_uncertainty_product = min_product;
    rec.final_elapsed = state.average_ground.elapsed();
    return rec;
}

}  // namespace bifread
