#pragma once

// Physical and control parameters of the feedback-driven oscillator, unit
// handling, and the dispersive qubit-oscillator reduction.
//
// All frequencies and rates are stored internally in rad/ns and all times in ns.

#include <complex>
#include <string>
#include <vector>

namespace bifread {

enum class FrequencyUnit {
    rad_per_ns,   ///< internal unit
    angular_mhz,  ///< 1e6 rad/s; a bare "250 MHz" rate
    cyclic_mhz,   ///< value given as omega/2pi in MHz
};

double to_rad_per_ns(double value, FrequencyUnit unit);
double from_rad_per_ns(double value, FrequencyUnit unit);
FrequencyUnit parse_frequency_unit(const std::string& name);
std::string to_string(FrequencyUnit unit);

/// Advisory flags for the "k0, k3 small" conditions. A set flag means the
/// corresponding ratio exceeds kSmallnessRatio; it never blocks a run.
struct SmallnessFlags {
    bool k0_not_small = false;          ///< k0 vs |(w^2 - k1 w + g^2/4)/w|
    bool k3_not_small = false;          ///< k3 vs the same scale
    bool readout_k0_not_small = false;  ///< weak-regime readout condition on k0
    bool readout_k3_not_small = false;  ///< strong-regime readout condition on k3

    bool any() const {
        return k0_not_small || k3_not_small || readout_k0_not_small || readout_k3_not_small;
    }
};

inline constexpr double kSmallnessRatio = 0.1;

struct FeedbackGains {
    double k0 = 0.0;
    double k1 = 0.0;
    double k3 = 0.0;
};

/// Validated parameters, rad/ns. Immutable after validate_params().
struct PhysicalParams {
    double omega = 0.0;     ///< effective oscillator frequency (single-oscillator runs)
    double gamma = 0.0;     ///< damping rate
    double eta = 1.0;       ///< detection efficiency in (0, 1]
    FeedbackGains gains;
    double gamma2 = 0.0;    ///< intrinsic qubit dephasing
    double chi = 0.0;       ///< dispersive shift (qubit runs)
    double delta_od = 0.0;  ///< oscillator-drive detuning (qubit runs)
    SmallnessFlags flags;
};

/// Parameter bundle as read from a config, before unit normalization.
struct RawParams {
    FrequencyUnit unit = FrequencyUnit::rad_per_ns;
    double omega = 0.0;
    double gamma = 0.0;
    double eta = 1.0;
    double k0 = 0.0;
    double k1 = 0.0;
    double k3 = 0.0;
    double gamma2 = 0.0;
    double chi = 0.0;
    double delta_od = 0.0;
};

struct ValidationOptions {
    bool require_bifurcation = true;  ///< reject k1 <= gamma
    bool readout_protocol = false;    ///< evaluate the readout smallness flags (needs chi)
};

/// Normalizes units and checks gamma > 0, eta in (0, 1], k0, k3 >= 0 and,
/// when requested, k1 > gamma. Throws ConfigError.
PhysicalParams validate_params(const RawParams& raw, const ValidationOptions& options = {});

/// Recomputes the advisory flags for an already-normalized parameter set.
SmallnessFlags smallness_flags(const PhysicalParams& params, bool readout_protocol);

// ---------------------------------------------------------------------------
// Qubit scenario

enum class QubitPreparation { ground, excited, superposition };

struct QubitState {
    QubitPreparation kind = QubitPreparation::ground;
    double rho_gg = 1.0;
    std::complex<double> rho_eg{0.0, 0.0};

    double rho_ee() const { return 1.0 - rho_gg; }
};

struct DriveSwitch {
    double time = 0.0;     ///< ns
    double omega_d = 0.0;  ///< rad/ns
};

struct QubitScenario {
    double omega_q = 0.0;
    double omega_o = 0.0;
    double g = 0.0;
    std::vector<DriveSwitch> schedule;  ///< first entry at t = 0
    QubitState initial;
    bool dispersive_warning = false;    ///< |omega_q - omega_o| < 5|g|

    double detuning_qo() const { return omega_q - omega_o; }
};

inline constexpr double kDispersiveRatio = 5.0;

/// Checks the schedule (non-empty, starts at 0, strictly increasing) and the
/// qubit populations; sets dispersive_warning. Throws ConfigError.
QubitScenario validate_qubit_scenario(QubitScenario scenario);

/// Drive frequency active at time t.
double drive_frequency_at(const QubitScenario& scenario, double t);

struct DispersiveCoupling {
    double chi = 0.0;
    double delta_od = 0.0;
};

/// chi = g^2/(omega_q - omega_o), delta_od = omega_o - omega_d.
DispersiveCoupling dispersive_reduce(double omega_q, double omega_o, double g, double omega_d);

struct BranchFrequencies {
    double ground = 0.0;   ///< delta_od - chi
    double excited = 0.0;  ///< delta_od + chi
};

BranchFrequencies branch_frequencies(double delta_od, double chi);

struct ReadoutDrives {
    double weak = 0.0;    ///< omega_o - omega* + 2 chi: both branches below omega*
    double strong = 0.0;  ///< omega_o - omega*: branches straddle omega*
};

ReadoutDrives drive_schedule(double omega_o, double omega_star, double chi);

}  // namespace bifread
