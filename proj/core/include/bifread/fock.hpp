#pragma once

// Truncated Fock-space integrator of the homodyne stochastic master equation.
// Independent of the Gaussian moment equations; used to validate them.

#include "bifread/moments.hpp"
#include "bifread/noise.hpp"
#include "bifread/params.hpp"
#include "bifread/trajectory.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <complex>
#include <cstddef>
#include <optional>
#include <vector>

namespace bifread {

using Complex = std::complex<double>;
using DenseOperator = Eigen::MatrixXcd;
using SparseOperator = Eigen::SparseMatrix<Complex>;

inline constexpr std::size_t kDefaultTruncation = 40;
inline constexpr std::size_t kMinTruncation = 4;
inline constexpr double kTailMassLimit = 1e-6;

enum class FockMode { single, dispersive, full_jc };

const char* to_string(FockMode mode);
FockMode parse_fock_mode(const std::string& name);

/// Qubit basis label. The combined index is level * N + n.
enum class QubitLevel { ground = 0, excited = 1 };

/// Density operator over |n>, n < N, or over |q>|n> when `qubit` is set.
struct FockDensity {
    DenseOperator rho;
    std::size_t truncation = 0;
    bool qubit = false;

    std::size_t dimension() const { return qubit ? 2 * truncation : truncation; }
};

/// Ladder and quadrature operators lifted to the state space.
struct FockOperators {
    std::size_t truncation = 0;
    bool qubit = false;
    SparseOperator a;
    SparseOperator number;
    SparseOperator x;
    SparseOperator p;
    SparseOperator x2;
    SparseOperator p2;
    SparseOperator xp_sym;  ///< (xp + px) / 2
    SparseOperator sigma_z;       ///< qubit modes only; +1 on |e>
    SparseOperator sigma_minus;   ///< |g><e|

    static FockOperators build(std::size_t truncation, bool qubit);
};

/// Frequencies in the frame the caller integrates in (rad/ns).
struct HamiltonianParams {
    FockMode mode = FockMode::single;
    double omega = 0.0;               ///< single: oscillator frequency
    std::optional<double> delta_od;   ///< qubit modes: oscillator-drive detuning
    std::optional<double> omega_q;    ///< dispersive: qubit frequency; full_jc: qubit-drive detuning
    std::optional<double> chi;        ///< dispersive
    std::optional<double> g;          ///< full_jc
};

/// H(u) = drift + u * control, with control = x.
struct FockHamiltonian {
    SparseOperator drift;
    SparseOperator control;

    SparseOperator at(double u) const;
};

/// single: omega a+a; dispersive: (omega_q/2) sz + delta_od a+a + chi a+a sz;
/// full_jc: (omega_q/2) sz + delta_od a+a + g (a+ s- + a s+), where omega_q is
/// the qubit-drive detuning. Throws ConfigError on N < 4 or missing fields.
FockHamiltonian build_hamiltonian(const HamiltonianParams& params, std::size_t truncation);

/// Population in the top two number states, summed over the qubit.
double tail_mass(const FockDensity& state);

/// Truncation covering a coherent amplitude |alpha|^2 = (x^2 + p^2) / 2 with a
/// wide Poisson margin, rounded up to a multiple of 16 and at least the default.
std::size_t suggest_truncation(double max_abs_x, double max_abs_p);

/// Gaussian oscillator state D(alpha) S(xi) rho_thermal S+ D+ with the given
/// moments. Built in an enlarged basis and cut to N. Throws ConfigError if the
/// covariance violates the uncertainty relation.
DenseOperator gaussian_density(const GaussianMoments& m, std::size_t truncation);

/// Gaussian oscillator tensored with a qubit density matrix.
FockDensity make_density(const GaussianMoments& m, std::size_t truncation);
FockDensity make_density(const GaussianMoments& m, const QubitState& qubit,
                         std::size_t truncation);

/// Tr(op rho) for sparse op.
Complex expectation(const SparseOperator& op, const DenseOperator& rho);

/// Oscillator first and second moments (reduced over the qubit).
GaussianMoments oscillator_moments(const FockDensity& state, const FockOperators& ops);

/// Oscillator state conditioned on a qubit level, normalized; requires a
/// nonzero population on that level.
DenseOperator conditional_oscillator(const FockDensity& state, QubitLevel level);

/// <alpha| rho |alpha> for a coherent state with centroid (x, p).
double coherent_fidelity(const DenseOperator& rho_osc, double x, double p);

struct SmeStep {
    FockDensity state;
    double dy = 0.0;
};

/// One Euler step of the homodyne SME followed by Hermitization and trace
/// renormalization. dy uses the pre-step state. Throws TruncationError if the
/// incoming tail mass exceeds the limit and NumericalAbort on non-finite data.
SmeStep sme_step(const FockDensity& state, const FockOperators& ops, const SparseOperator& h,
                 double gamma, double eta, double dW, double dt);

/// Deterministic Lindblad evolution (no measurement back-action), one RK4 step.
FockDensity lindblad_step_rk4(const FockDensity& state, const FockOperators& ops,
                              const SparseOperator& h, double gamma, double dt);

struct OracleRun {
    PhysicalParams params;          ///< gamma, eta, gains; omega for single mode
    FockMode mode = FockMode::single;
    std::optional<QubitScenario> qubit;  ///< required for qubit modes
    GaussianMoments initial;
    IntegrationSettings integration;
    NoiseMode noise = NoiseMode::stochastic;
    std::size_t truncation = 0;     ///< 0 selects suggest_truncation of the fixed points
};

struct OracleSample {
    double t = 0.0;
    GaussianMoments m;
    double y = 0.0;
    double u = 0.0;
    double dy_cum = 0.0;
    double tail_mass = 0.0;
};

struct OracleRecord {
    StreamId stream;
    FockMode mode = FockMode::single;
    std::size_t truncation = 0;
    double dt = 0.0;
    std::size_t steps = 0;
    std::vector<OracleSample> samples;
    std::vector<double> dy;  ///< every step's record increment
    double max_tail_mass = 0.0;
};

/// Truncation the oracle would pick for `run` when none is given.
std::size_t oracle_truncation(const OracleRun& run);

/// Closed feedback loop through the SME. Uses channel 0 of `stream`, the same
/// draws a paired simulate_trajectory run consumes. In qubit modes the qubit
/// is rotated at its own frequency for dispersive and at the drive for
/// full_jc, and the drive schedule updates the Hamiltonian at each switch.
OracleRecord run_oracle(const OracleRun& run, StreamId stream);

/// Noise-free, feedback-free probe of the oscillator frequency conditioned on
/// a qubit level: starts in |level>|alpha>, evolves with RK4 and fits the
/// unwrapped phase of <a>, which rotates as exp(-i nu t). Returns nu.
double conditioned_oscillation_frequency(const HamiltonianParams& params,
                                         std::size_t truncation, QubitLevel level,
                                         Complex alpha, double gamma, double t_final,
                                         double dt);

}  // namespace bifread
