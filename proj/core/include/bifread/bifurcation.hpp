#pragma once

// Fixed points of the instantaneous mean-field system
//
//   xdot = -gamma/2 x + omega p
//   pdot = -(omega - k1) x - k3 x^3 - gamma/2 p + k0
//
// and the pitchfork at omega* = (k1 - sqrt(k1^2 - gamma^2)) / 2.

#include "bifread/params.hpp"

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace bifread {

/// Throws std::domain_error when k1 < gamma.
double bifurcation_point(double k1, double gamma);

enum class Stability { stable, unstable };
enum class BranchLabel { central, upper, lower };

std::string to_string(Stability s);
std::string to_string(BranchLabel b);

struct FixedPoint {
    double x = 0.0;
    double p = 0.0;
    Stability stability = Stability::unstable;
    BranchLabel label = BranchLabel::central;
    bool marginal = false;             ///< leading eigenvalue within 1e-9 of zero
    double leading_eigenvalue = 0.0;   ///< largest real part of the Jacobian spectrum
    double residual = 0.0;             ///< relative residual of the mean-field RHS
};

inline constexpr double kStabilityTolerance = 1e-9;
inline constexpr double kImaginaryRootTolerance = 1e-9;

/// Jacobian entries at (x, p); p does not enter.
struct Jacobian {
    double xx, xp, px, pp;
    double trace() const { return xx + pp; }
    double determinant() const { return xx * pp - xp * px; }
};
Jacobian mean_field_jacobian(double x, double omega, double gamma, const FeedbackGains& gains);

/// Relative residual max(|xdot|/scale_x, |pdot|/scale_p) with each scale the
/// sum of the absolute values of the terms.
double mean_field_residual(double x, double p, double omega, double gamma,
                           const FeedbackGains& gains);

/// Equilibria ordered by ascending x and classified by the Jacobian. Uses
/// p = gamma x / (2 omega) and a closed-form cubic solve polished by Newton.
/// Throws std::domain_error for omega == 0 (see axis_fixed_point).
std::vector<FixedPoint> fixed_points(double omega, double gamma, const FeedbackGains& gains);

/// The unique equilibrium (0, 2 k0 / gamma) of the omega == 0 system.
FixedPoint axis_fixed_point(double gamma, const FeedbackGains& gains);

struct SweepPoint {
    double omega = 0.0;
    std::vector<FixedPoint> points;
    std::size_t stable_count = 0;
};

struct BifurcationDiagram {
    std::vector<SweepPoint> points;
    /// Index i of the first grid point with two stable equilibria whose
    /// predecessor had one; the transition lies in [omega_{i-1}, omega_i].
    std::optional<std::size_t> transition;

    double grid_cell() const;
    std::optional<double> transition_omega() const;  ///< cell midpoint
};

/// Uniform sweep over [omega_min, omega_max] with `grid` >= 2 points, using
/// gamma and gains from `params`.
BifurcationDiagram sweep_bifurcation(const PhysicalParams& params, double omega_min,
                                     double omega_max, std::size_t grid);

}  // namespace bifread
