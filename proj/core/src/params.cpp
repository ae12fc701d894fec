#include "bifread/params.hpp"

#include "bifread/bifurcation.hpp"
#include "bifread/errors.hpp"

#include <cmath>
#include <numbers>

namespace bifread {

namespace {

constexpr double kMhzToRadPerNs = 1e-3;

void require_finite(double value, const char* name) {
    if (!std::isfinite(value)) {
        throw ConfigError(std::string("parameter '") + name + "' is not finite");
    }
}

}  // namespace

double to_rad_per_ns(double value, FrequencyUnit unit) {
    switch (unit) {
        case FrequencyUnit::rad_per_ns: return value;
        case FrequencyUnit::angular_mhz: return value * kMhzToRadPerNs;
        case FrequencyUnit::cyclic_mhz: return value * 2.0 * std::numbers::pi * kMhzToRadPerNs;
    }
    return value;
}

double from_rad_per_ns(double value, FrequencyUnit unit) {
    switch (unit) {
        case FrequencyUnit::rad_per_ns: return value;
        case FrequencyUnit::angular_mhz: return value / kMhzToRadPerNs;
        case FrequencyUnit::cyclic_mhz: return value / (2.0 * std::numbers::pi * kMhzToRadPerNs);
    }
    return value;
}

FrequencyUnit parse_frequency_unit(const std::string& name) {
    if (name == "rad_per_ns") return FrequencyUnit::rad_per_ns;
    if (name == "angular_mhz") return FrequencyUnit::angular_mhz;
    if (name == "cyclic_mhz") return FrequencyUnit::cyclic_mhz;
    throw ConfigError("unknown frequency unit '" + name +
                      "' (expected rad_per_ns, angular_mhz or cyclic_mhz)");
}

std::string to_string(FrequencyUnit unit) {
    switch (unit) {
        case FrequencyUnit::rad_per_ns: return "rad_per_ns";
        case FrequencyUnit::angular_mhz: return "angular_mhz";
        case FrequencyUnit::cyclic_mhz: return "cyclic_mhz";
    }
    return "rad_per_ns";
}

SmallnessFlags smallness_flags(const PhysicalParams& params, bool readout_protocol) {
    SmallnessFlags flags;
    const auto& k = params.gains;
    if (params.omega != 0.0) {
        const double w = params.omega;
        const double scale = std::abs((w * w - k.k1 * w + params.gamma * params.gamma / 4.0) / w);
        flags.k0_not_small = k.k0 > kSmallnessRatio * scale;
        flags.k3_not_small = k.k3 > kSmallnessRatio * scale;
    }
    if (readout_protocol && params.chi != 0.0 && k.k1 >= params.gamma) {
        const double ws = bifurcation_point(k.k1, params.gamma);
        const double chi = params.chi;
        const double weak_scale =
            std::abs((chi * chi - 2.0 * chi * ws + k.k1 * chi) / (ws - chi));
        const double strong_scale =
            std::abs((chi * chi + 2.0 * chi * ws - k.k1 * chi) / (ws + chi));
        flags.readout_k0_not_small = k.k0 > kSmallnessRatio * weak_scale;
        flags.readout_k3_not_small = k.k3 > kSmallnessRatio * strong_scale;
    }
    return flags;
}

PhysicalParams validate_params(const RawParams& raw, const ValidationOptions& options) {
    require_finite(raw.omega, "omega");
    require_finite(raw.gamma, "gamma");
    require_finite(raw.eta, "eta");
    require_finite(raw.k0, "k0");
    require_finite(raw.k1, "k1");
    require_finite(raw.k3, "k3");
    require_finite(raw.gamma2, "gamma2");
    require_finite(raw.chi, "chi");
    require_finite(raw.delta_od, "delta_od");

    PhysicalParams p;
    p.omega = to_rad_per_ns(raw.omega, raw.unit);
    p.gamma = to_rad_per_ns(raw.gamma, raw.unit);
    p.eta = raw.eta;
    p.gains = {to_rad_per_ns(raw.k0, raw.unit), to_rad_per_ns(raw.k1, raw.unit),
               to_rad_per_ns(raw.k3, raw.unit)};
    p.gamma2 = to_rad_per_ns(raw.gamma2, raw.unit);
    p.chi = to_rad_per_ns(raw.chi, raw.unit);
    p.delta_od = to_rad_per_ns(raw.delta_od, raw.unit);

    if (!(p.gamma > 0.0)) {
        throw ConfigError("gamma must be positive");
    }
    if (!(p.eta > 0.0 && p.eta <= 1.0)) {
        throw ConfigError("eta must lie in (0, 1]: the record noise scales as 1/sqrt(2 eta gamma)");
    }
    if (p.gains.k0 < 0.0 || p.gains.k3 < 0.0) {
        throw ConfigError("feedback coefficients k0 and k3 must be non-negative");
    }
    if (p.gains.k1 < 0.0) {
        throw ConfigError("feedback coefficient k1 must be non-negative");
    }
    if (p.gamma2 < 0.0) {
        throw ConfigError("gamma2 must be non-negative");
    }
    if (options.require_bifurcation && !(p.gains.k1 > p.gamma)) {
        throw ConfigError("k1 must exceed gamma for a real bifurcation point omega*");
    }
    p.flags = smallness_flags(p, options.readout_protocol);
    return p;
}

QubitScenario validate_qubit_scenario(QubitScenario scenario) {
    require_finite(scenario.omega_q, "omega_q");
    require_finite(scenario.omega_o, "omega_o");
    require_finite(scenario.g, "g");
    if (scenario.schedule.empty()) {
        throw ConfigError("drive schedule must contain at least one entry");
    }
    if (scenario.schedule.front().time != 0.0) {
        throw ConfigError("drive schedule must start at t = 0");
    }
    for (std::size_t i = 0; i < scenario.schedule.size(); ++i) {
        require_finite(scenario.schedule[i].omega_d, "omega_d");
        if (i > 0 && !(scenario.schedule[i].time > scenario.schedule[i - 1].time)) {
            throw ConfigError("drive schedule switch times must be strictly increasing");
        }
    }
    const auto& q = scenario.initial;
    if (!(q.rho_gg >= 0.0 && q.rho_gg <= 1.0)) {
        throw ConfigError("rho_gg must lie in [0, 1]");
    }
    if (std::norm(q.rho_eg) > q.rho_gg * q.rho_ee() + 1e-12) {
        throw ConfigError("|rho_eg|^2 must not exceed rho_gg * rho_ee");
    }
    if (scenario.detuning_qo() == 0.0) {
        throw ConfigError("qubit-oscillator detuning must be non-zero");
    }
    scenario.dispersive_warning =
        std::abs(scenario.detuning_qo()) < kDispersiveRatio * std::abs(scenario.g);
    return scenario;
}

double drive_frequency_at(const QubitScenario& scenario, double t) {
    double omega_d = scenario.schedule.front().omega_d;
    for (const auto& sw : scenario.schedule) {
        if (sw.time <= t) omega_d = sw.omega_d;
    }
    return omega_d;
}

DispersiveCoupling dispersive_reduce(double omega_q, double omega_o, double g, double omega_d) {
    const double detuning = omega_q - omega_o;
    if (detuning == 0.0) {
        throw ConfigError("dispersive reduction needs a non-zero qubit-oscillator detuning");
    }
    return {g * g / detuning, omega_o - omega_d};
}

BranchFrequencies branch_frequencies(double delta_od, double chi) {
    return {delta_od - chi, delta_od + chi};
}

ReadoutDrives drive_schedule(double omega_o, double omega_star, double chi) {
    return {omega_o - omega_star + 2.0 * chi, omega_o - omega_star};
}

}  // namespace bifread
