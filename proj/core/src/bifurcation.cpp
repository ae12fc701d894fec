#include "bifread/bifurcation.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace bifread {

double bifurcation_point(double k1, double gamma) {
    if (k1 < gamma) {
        throw std::domain_error("omega* is undefined for k1 < gamma");
    }
    return 0.5 * (k1 - std::sqrt(k1 * k1 - gamma * gamma));
}

std::string to_string(Stability s) { return s == Stability::stable ? "stable" : "unstable"; }

std::string to_string(BranchLabel b) {
    switch (b) {
        case BranchLabel::central: return "central";
        case BranchLabel::upper: return "upper";
        case BranchLabel::lower: return "lower";
    }
    return "central";
}

Jacobian mean_field_jacobian(double x, double omega, double gamma, const FeedbackGains& gains) {
    return {-0.5 * gamma, omega, gains.k1 - omega - 3.0 * gains.k3 * x * x, -0.5 * gamma};
}

double mean_field_residual(double x, double p, double omega, double gamma,
                           const FeedbackGains& gains) {
    const std::array<double, 2> xt{-0.5 * gamma * x, omega * p};
    const std::array<double, 4> pt{-(omega - gains.k1) * x, -gains.k3 * x * x * x,
                                   -0.5 * gamma * p, gains.k0};
    double xs = 0.0, xa = 0.0, ps = 0.0, pa = 0.0;
    for (double v : xt) { xs += v; xa += std::abs(v); }
    for (double v : pt) { ps += v; pa += std::abs(v); }
    const double rx = xa > 0.0 ? std::abs(xs) / xa : 0.0;
    const double rp = pa > 0.0 ? std::abs(ps) / pa : 0.0;
    return std::max(rx, rp);
}

namespace {

FixedPoint classify(double x, double p, double omega, double gamma, const FeedbackGains& gains) {
    FixedPoint fp;
    fp.x = x;
    fp.p = p;
    const Jacobian j = mean_field_jacobian(x, omega, gamma, gains);
    // equal diagonal entries: eigenvalues -gamma/2 +- sqrt(xp * px)
    const double disc = j.xp * j.px;
    fp.leading_eigenvalue = disc > 0.0 ? j.xx + std::sqrt(disc) : j.xx;
    fp.marginal = std::abs(fp.leading_eigenvalue) <= kStabilityTolerance;
    fp.stability = fp.leading_eigenvalue < -kStabilityTolerance ? Stability::stable
                                                                 : Stability::unstable;
    fp.residual = mean_field_residual(x, p, omega, gamma, gains);
    return fp;
}

/// Real roots of x^3 + a x + b.
std::vector<double> depressed_cubic_roots(double a, double b) {
    using cd = std::complex<double>;
    if (a == 0.0 && b == 0.0) return {0.0};

    const cd disc = std::sqrt(cd(b * b / 4.0 + a * a * a / 27.0, 0.0));
    cd c = -b / 2.0 + disc;
    const cd c_alt = -b / 2.0 - disc;
    if (std::abs(c_alt) > std::abs(c)) c = c_alt;
    const cd u0 = std::pow(c, 1.0 / 3.0);
    const cd rot(-0.5, std::sqrt(3.0) / 2.0);

    std::vector<double> roots;
    cd u = u0;
    for (int k = 0; k < 3; ++k, u *= rot) {
        const cd z = u - a / (3.0 * u);
        if (std::abs(z.imag()) >= kImaginaryRootTolerance * std::max(1.0, std::abs(z.real()))) {
            continue;
        }
        double x = z.real();
        for (int it = 0; it < 8; ++it) {
            const double f = x * x * x + a * x + b;
            const double df = 3.0 * x * x + a;
            if (f == 0.0 || df == 0.0) break;
            const double step = f / df;
            x -= step;
            if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(x))) break;
        }
        roots.push_back(x);
    }
    std::sort(roots.begin(), roots.end());
    roots.erase(std::unique(roots.begin(), roots.end(),
                            [](double l, double r) {
                                return std::abs(l - r) <= 1e-9 * std::max(1.0, std::abs(l));
                            }),
                roots.end());
    return roots;
}

}  // namespace

FixedPoint axis_fixed_point(double gamma, const FeedbackGains& gains) {
    return classify(0.0, 2.0 * gains.k0 / gamma, 0.0, gamma, gains);
}

std::vector<FixedPoint> fixed_points(double omega, double gamma, const FeedbackGains& gains) {
    if (omega == 0.0) {
        throw std::domain_error("fixed_points: omega = 0 makes p-elimination singular");
    }
    // with p = gamma x / (2 omega):  -k3 x^3 + A x + k0 = 0
    const double a_lin = gains.k1 - omega - gamma * gamma / (4.0 * omega);

    std::vector<double> xs;
    if (gains.k3 == 0.0) {
        if (a_lin == 0.0) {
            if (gains.k0 != 0.0) return {};
            throw std::domain_error("fixed_points: degenerate line of equilibria");
        }
        xs.push_back(-gains.k0 / a_lin);
    } else {
        xs = depressed_cubic_roots(-a_lin / gains.k3, -gains.k0 / gains.k3);
    }

    std::vector<FixedPoint> out;
    out.reserve(xs.size());
    for (double x : xs) {
        out.push_back(classify(x, gamma * x / (2.0 * omega), omega, gamma, gains));
    }
    if (out.size() == 1) {
        out[0].label = BranchLabel::central;
    } else if (out.size() == 2) {
        out[0].label = BranchLabel::lower;
        out[1].label = BranchLabel::upper;
    } else if (out.size() == 3) {
        out[0].label = BranchLabel::lower;
        out[1].label = BranchLabel::central;
        out[2].label = BranchLabel::upper;
    }
    return out;
}

double BifurcationDiagram::grid_cell() const {
    if (points.size() < 2) return 0.0;
    return (points.back().omega - points.front().omega) / static_cast<double>(points.size() - 1);
}

std::optional<double> BifurcationDiagram::transition_omega() const {
    if (!transition) return std::nullopt;
    return 0.5 * (points[*transition - 1].omega + points[*transition].omega);
}

BifurcationDiagram sweep_bifurcation(const PhysicalParams& params, double omega_min,
                                     double omega_max, std::size_t grid) {
    if (grid < 2) throw std::invalid_argument("sweep grid needs at least two points");
    if (!(omega_max > omega_min)) throw std::invalid_argument("empty omega range");

    BifurcationDiagram diagram;
    diagram.points.reserve(grid);
    const double step = (omega_max - omega_min) / static_cast<double>(grid - 1);
    for (std::size_t i = 0; i < grid; ++i) {
        SweepPoint sp;
        sp.omega = omega_min + static_cast<double>(i) * step;
        sp.points = sp.omega == 0.0
                        ? std::vector<FixedPoint>{axis_fixed_point(params.gamma, params.gains)}
                        : fixed_points(sp.omega, params.gamma, params.gains);
        sp.stable_count = static_cast<std::size_t>(
            std::count_if(sp.points.begin(), sp.points.end(),
                          [](const FixedPoint& f) { return f.stability == Stability::stable; }));
        if (!diagram.transition && i > 0 && diagram.points.back().stable_count == 1 &&
            sp.stable_count == 2) {
            diagram.transition = i;
        }
        diagram.points.push_back(std::move(sp));
    }
    return diagram;
}

}  // namespace bifread
