#pragma once

// Conditional Gaussian-moment dynamics of the homodyne-monitored oscillator.
//
// First moments follow an Ito SDE driven by the record innovation dW; second
// moments follow a deterministic Riccati equation that does not see the
// control. Both are advanced with explicit Euler(-Maruyama) steps.

#include "bifread/feedback.hpp"
#include "bifread/params.hpp"

#include <cstddef>
#include <vector>

namespace bifread {

struct GaussianMoments {
    double x = 0.0;
    double p = 0.0;
    double vx = 0.5;
    double vp = 0.5;
    double cxp = 0.0;

    /// vx*vp - cxp^2; at least 1/4 for a physical state.
    double uncertainty_product() const { return vx * vp - cxp * cxp; }
};

/// Coefficients that enter one oscillator's moment equations.
struct Oscillator {
    double omega = 0.0;
    double gamma = 0.0;
    double eta = 1.0;
};

Oscillator oscillator_of(const PhysicalParams& params);
Oscillator oscillator_of(const PhysicalParams& params, double omega);

struct FirstMomentStep {
    GaussianMoments moments;  ///< x, p advanced; second moments copied from input
    double dy = 0.0;          ///< record increment x_old dt + dW / sqrt(2 eta gamma)
};

/// One Euler-Maruyama step of <x>, <p> under control u. Throws NumericalAbort
/// if the result is not finite.
FirstMomentStep step_first_moments(const GaussianMoments& m, const Oscillator& osc, double u,
                                   double dW, double dt);

/// One Euler step of (vx, vp, cxp); x and p are copied through.
GaussianMoments step_second_moments(const GaussianMoments& m, const Oscillator& osc, double dt);

/// First and second moments advanced from the same old state.
FirstMomentStep step_moments(const GaussianMoments& m, const Oscillator& osc, double u, double dW,
                             double dt);

// ---------------------------------------------------------------------------
// Qubit branches

/// Oscillator moments conditioned on each qubit eigenstate, with their record
/// averagers and the accumulated dephasing (sigma) and phase (theta) integrals.
struct BranchState {
    GaussianMoments ground;
    GaussianMoments excited;
    RecordAverager average_ground;
    RecordAverager average_excited;
    double sigma = 0.0;
    double theta = 0.0;
};

struct BranchNoise {
    double ground = 0.0;
    double excited = 0.0;

    static BranchNoise shared(double dW) { return {dW, dW}; }
};

struct BranchStep {
    BranchState state;
    double dy_ground = 0.0;
    double dy_excited = 0.0;
    double u_ground = 0.0;
    double u_excited = 0.0;
};

/// Advances both branches (frequencies delta_od -/+ chi) with the control
/// taken from each branch's averager, then feeds the new record increments
/// back into the averagers and accumulates sigma and theta.
BranchStep step_qubit_branches(const BranchState& b, const PhysicalParams& params,
                               double delta_od, BranchNoise dW, double dt);

// ---------------------------------------------------------------------------
// Deterministic mean-field dynamics

enum class MeanFieldForm {
    instantaneous,  ///< control evaluated at x itself (Y replaced by x)
    time_averaged,  ///< control evaluated at Y = (1/t) int x dt
};

struct MeanFieldState {
    double t = 0.0;
    double x = 0.0;
    double p = 0.0;
    double y = 0.0;
};

/// Right-hand side of the instantaneous mean-field system (xdot, pdot).
struct MeanFieldRate {
    double x = 0.0;
    double p = 0.0;
};
MeanFieldRate mean_field_rhs(const Oscillator& osc, const FeedbackGains& gains, double x, double p);

/// Classic RK4 integration. For the time-averaged form Y is S/t, with Y = 0
/// before `warmup` (matching RecordAverager), and `initial.y` is taken as the
/// average over [0, initial.t]. Returns samples every `stride` steps plus the
/// final state.
std::vector<MeanFieldState> integrate_mean_field(const Oscillator& osc, const FeedbackGains& gains,
                                                 MeanFieldState initial, double t_final, double dt,
                                                 MeanFieldForm form = MeanFieldForm::instantaneous,
                                                 double warmup = 0.0, std::size_t stride = 1);

}  // namespace bifread
