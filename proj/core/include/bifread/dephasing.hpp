#pragma once

// Measurement-induced dephasing of the qubit from the branch centroids.

#include "bifread/params.hpp"
#include "bifread/trajectory.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace bifread {

/// chi (x_e p_g - p_e x_g).
double dephasing_rate(double x_e, double p_e, double x_g, double p_g, double chi);

/// Stationary x of the unbifurcated branch, k0 w / (w^2 - k1 w + gamma^2/4).
/// Neglects the cubic term.
double weak_branch_amplitude(double omega, double gamma, const FeedbackGains& gains);

/// sqrt((-w^2 + k1 w - gamma^2/4) / (k3 w)) for the bifurcated branch.
/// Neglects k0. Throws std::domain_error if the radicand is negative.
double bifurcated_amplitude(double omega, double gamma, const FeedbackGains& gains);

/// p = gamma x / (2 omega) on the stationary manifold.
double stationary_momentum(double x, double omega, double gamma);

/// Closed-form rate with both branches (delta_od -/+ chi) below omega*.
double dephasing_weak(const PhysicalParams& params);

/// Closed-form rate with the excited branch bifurcated. Throws
/// std::domain_error when delta_od + chi does not lie in the bifurcated regime.
double dephasing_strong(const PhysicalParams& params);

/// |<alpha|beta>| for Gaussian centroids, exp(-[(dx)^2 + (dp)^2] / 4).
double coherent_overlap(double x_a, double p_a, double x_b, double p_b);

struct CoherencePoint {
    double t = 0.0;
    double magnitude = 0.0;  ///< |rho_eg(t)| / |rho_eg(0)|
    double phase = 0.0;      ///< omega_q t + theta(t)
    double overlap = 1.0;    ///< |<psi_g|psi_e>|
};

/// Coherence series from a shared-record branch history. Throws
/// std::invalid_argument on an empty history.
std::vector<CoherencePoint> coherence_factor(const std::vector<BranchSample>& history,
                                             double gamma2, double omega_q);

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double t_begin = 0.0;
    double t_end = 0.0;
    std::size_t samples = 0;
};

/// Ordinary least squares of y on t over samples with t in [t_begin, t_end].
SlopeFit fit_slope(std::span<const double> t, std::span<const double> y, double t_begin,
                   double t_end);

/// Sigma-slope in one drive regime [regime_begin, regime_end]: drops a
/// 5/gamma transient after regime_begin, then fits the final half of what is
/// left.
SlopeFit fit_regime_slope(std::span<const double> t, std::span<const double> sigma,
                          double regime_begin, double regime_end, double gamma);

struct DephasingReport {
    double gamma_weak = 0.0;
    double gamma_strong = 0.0;
    double gamma_measured_weak = 0.0;
    double gamma_measured_strong = 0.0;
    SlopeFit fit_weak;
    SlopeFit fit_strong;
    std::vector<CoherencePoint> coherence;
};

/// Analytic rates from the two drive regimes plus slopes fitted to `history`
/// (typically the ensemble-mean branch history) before and after switch_time.
DephasingReport dephasing_report(const std::vector<BranchSample>& history,
                                 const PhysicalParams& weak, const PhysicalParams& strong,
                                 double switch_time, double omega_q);

}  // namespace bifread
