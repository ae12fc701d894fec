#include "bifread/dephasing.hpp"

#include "bifread/bifurcation.hpp"

#include <cmath>
#include <stdexcept>

namespace bifread {

double dephasing_rate(double x_e, double p_e, double x_g, double p_g, double chi) {
    return chi * (x_e * p_g - p_e * x_g);
}

double weak_branch_amplitude(double omega, double gamma, const FeedbackGains& gains) {
    return gains.k0 * omega / (omega * omega - gains.k1 * omega + gamma * gamma / 4.0);
}

double bifurcated_amplitude(double omega, double gamma, const FeedbackGains& gains) {
    const double radicand = -omega * omega + gains.k1 * omega - gamma * gamma / 4.0;
    if (radicand < 0.0 || gains.k3 <= 0.0 || omega <= 0.0) {
        throw std::domain_error("omega is not in the bifurcated regime");
    }
    return std::sqrt(radicand / (gains.k3 * omega));
}

double stationary_momentum(double x, double omega, double gamma) {
    return gamma * x / (2.0 * omega);
}

double dephasing_weak(const PhysicalParams& params) {
    const BranchFrequencies w = branch_frequencies(params.delta_od, params.chi);
    const auto& k = params.gains;
    const double q = params.gamma * params.gamma / 4.0;
    const double dg = w.ground * w.ground - k.k1 * w.ground + q;
    const double de = w.excited * w.excited - k.k1 * w.excited + q;
    return params.gamma * k.k0 * k.k0 * params.chi * params.chi / (dg * de);
}

double dephasing_strong(const PhysicalParams& params) {
    const BranchFrequencies w = branch_frequencies(params.delta_od, params.chi);
    const auto& k = params.gains;
    const double q = params.gamma * params.gamma / 4.0;
    const double radicand = -w.excited * w.excited + k.k1 * w.excited - q;
    if (radicand < 0.0 || w.excited <= 0.0) {
        throw std::domain_error("excited branch is not in the bifurcated regime");
    }
    const double dg = w.ground * w.ground - k.k1 * w.ground + q;
    return k.k0 * params.gamma * params.chi * params.chi /
           std::sqrt(k.k3 * w.excited * w.excited * w.excited) * std::sqrt(radicand) / dg;
}

double coherent_overlap(double x_a, double p_a, double x_b, double p_b) {
    const double dx = x_a - x_b;
    const double dp = p_a - p_b;
    return std::exp(-(dx * dx + dp * dp) / 4.0);
}

std::vector<CoherencePoint> coherence_factor(const std::vector<BranchSample>& history,
                                             double gamma2, double omega_q) {
    if (history.empty()) throw std::invalid_argument("coherence_factor: empty branch history");
    std::vector<CoherencePoint> out;
    out.reserve(history.size());
    for (const auto& s : history) {
        CoherencePoint c;
        c.t = s.t;
        c.overlap = coherent_overlap(s.ground.x, s.ground.p, s.excited.x, s.excited.p);
        c.magnitude = std::exp(-gamma2 * s.t - s.sigma) / c.overlap;
        c.phase = omega_q * s.t + s.theta;
        out.push_back(c);
    }
    return out;
}

SlopeFit fit_slope(std::span<const double> t, std::span<const double> y, double t_begin,
                   double t_end) {
    if (t.size() != y.size()) throw std::invalid_argument("fit_slope: size mismatch");
    double n = 0.0, st = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_begin || t[i] > t_end) continue;
        n += 1.0;
        st += t[i];
        sy += y[i];
    }
    if (n < 2.0) throw std::invalid_argument("fit_slope: fewer than two samples in window");
    const double tm = st / n;
    const double ym = sy / n;
    double stt = 0.0, sty = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_begin || t[i] > t_end) continue;
        stt += (t[i] - tm) * (t[i] - tm);
        sty += (t[i] - tm) * (y[i] - ym);
    }
    SlopeFit fit;
    fit.slope = sty / stt;
    fit.intercept = ym - fit.slope * tm;
    fit.t_begin = t_begin;
    fit.t_end = t_end;
    fit.samples = static_cast<std::size_t>(n);
    return fit;
}

SlopeFit fit_regime_slope(std::span<const double> t, std::span<const double> sigma,
                          double regime_begin, double regime_end, double gamma) {
    const double settled = regime_begin + 5.0 / gamma;
    if (!(settled < regime_end)) {
        throw std::invalid_argument("regime shorter than the 5/gamma transient");
    }
    const double begin = settled + 0.5 * (regime_end - settled);
    return fit_slope(t, sigma, begin, regime_end);
}

DephasingReport dephasing_report(const std::vector<BranchSample>& history,
                                 const PhysicalParams& weak, const PhysicalParams& strong,
                                 double switch_time, double omega_q) {
    if (history.empty()) throw std::invalid_argument("dephasing_report: empty branch history");
    std::vector<double> t, sigma;
    t.reserve(history.size());
    sigma.reserve(history.size());
    for (const auto& s : history) {
        t.push_back(s.t);
        sigma.push_back(s.sigma);
    }
    DephasingReport r;
    r.gamma_weak = dephasing_weak(weak);
    r.gamma_strong = dephasing_strong(strong);
    r.fit_weak = fit_regime_slope(t, sigma, history.front().t, switch_time, weak.gamma);
    r.fit_strong = fit_regime_slope(t, sigma, switch_time, history.back().t, strong.gamma);
    r.gamma_measured_weak = r.fit_weak.slope;
    r.gamma_measured_strong = r.fit_strong.slope;
    r.coherence = coherence_factor(history, weak.gamma2, omega_q);
    return r;
}

}  // namespace bifread
