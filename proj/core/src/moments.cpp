#include "bifread/moments.hpp"

#include "bifread/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bifread {

namespace {

void require_positive_step(double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
}

void require_finite_state(const GaussianMoments& m) {
    if (!std::isfinite(m.x) || !std::isfinite(m.p) || !std::isfinite(m.vx) ||
        !std::isfinite(m.vp) || !std::isfinite(m.cxp)) {
        throw NumericalAbort("non-finite oscillator moments (x=" + std::to_string(m.x) +
                             ", p=" + std::to_string(m.p) + ")");
    }
}

}  // namespace

Oscillator oscillator_of(const PhysicalParams& params) {
    return {params.omega, params.gamma, params.eta};
}

Oscillator oscillator_of(const PhysicalParams& params, double omega) {
    return {omega, params.gamma, params.eta};
}

FirstMomentStep step_first_moments(const GaussianMoments& m, const Oscillator& osc, double u,
                                   double dW, double dt) {
    require_positive_step(dt);
    const double gain = std::sqrt(2.0 * osc.eta * osc.gamma);
    FirstMomentStep out;
    out.moments = m;
    out.moments.x = m.x + (-0.5 * osc.gamma * m.x + osc.omega * m.p) * dt + gain * (m.vx - 0.5) * dW;
    out.moments.p = m.p + (-osc.omega * m.x - 0.5 * osc.gamma * m.p - u) * dt + gain * m.cxp * dW;
    out.dy = m.x * dt + dW / gain;
    require_finite_state(out.moments);
    return out;
}

GaussianMoments step_second_moments(const GaussianMoments& m, const Oscillator& osc, double dt) {
    require_positive_step(dt);
    const double g = osc.gamma;
    const double w = osc.omega;
    const double kappa = 2.0 * osc.eta * g;
    const double ex = m.vx - 0.5;
    GaussianMoments out = m;
    out.vx = m.vx + (-g * m.vx + 2.0 * w * m.cxp + 0.5 * g - kappa * ex * ex) * dt;
    out.vp = m.vp + (-g * m.vp - 2.0 * w * m.cxp + 0.5 * g - kappa * m.cxp * m.cxp) * dt;
    out.cxp = m.cxp + (-g * m.cxp + w * (m.vp - m.vx) - kappa * ex * m.cxp) * dt;
    return out;
}

FirstMomentStep step_moments(const GaussianMoments& m, const Oscillator& osc, double u, double dW,
                             double dt) {
    FirstMomentStep first = step_first_moments(m, osc, u, dW, dt);
    const GaussianMoments second = step_second_moments(m, osc, dt);
    first.moments.vx = second.vx;
    first.moments.vp = second.vp;
    first.moments.cxp = second.cxp;
    require_finite_state(first.moments);
    return first;
}

BranchStep step_qubit_branches(const BranchState& b, const PhysicalParams& params,
                               double delta_od, BranchNoise dW, double dt) {
    const BranchFrequencies freq = branch_frequencies(delta_od, params.chi);
    const Oscillator osc_g = oscillator_of(params, freq.ground);
    const Oscillator osc_e = oscillator_of(params, freq.excited);

    BranchStep out;
    out.u_ground = control_law(b.average_ground.value(), params.gains);
    out.u_excited = control_law(b.average_excited.value(), params.gains);

    const FirstMomentStep g = step_moments(b.ground, osc_g, out.u_ground, dW.ground, dt);
    const FirstMomentStep e = step_moments(b.excited, osc_e, out.u_excited, dW.excited, dt);

    out.state = b;
    out.state.ground = g.moments;
    out.state.excited = e.moments;
    out.state.average_ground.update(g.dy, dt);
    out.state.average_excited.update(e.dy, dt);

    const auto& mg = b.ground;
    const auto& me = b.excited;
    out.state.sigma += params.chi * (me.x * mg.p - me.p * mg.x) * dt;
    out.state.theta += params.chi * (me.x * mg.x + me.p * mg.p) * dt;

    out.dy_ground = g.dy;
    out.dy_excited = e.dy;
    return out;
}

MeanFieldRate mean_field_rhs(const Oscillator& osc, const FeedbackGains& gains, double x, double p) {
    return {-0.5 * osc.gamma * x + osc.omega * p,
            -(osc.omega - gains.k1) * x - gains.k3 * x * x * x - 0.5 * osc.gamma * p + gains.k0};
}

std::vector<MeanFieldState> integrate_mean_field(const Oscillator& osc, const FeedbackGains& gains,
                                                 MeanFieldState initial, double t_final, double dt,
                                                 MeanFieldForm form, double warmup,
                                                 std::size_t stride) {
    require_positive_step(dt);
    if (stride == 0) throw std::invalid_argument("stride must be positive");
    if (t_final < initial.t) throw std::invalid_argument("t_final precedes the initial time");

    struct State {
        double x, p, s;  // s: integral of x (time-averaged form only)
    };

    const auto average = [&](double t, double s) {
        return (t > 0.0 && t >= warmup * (1.0 - 1e-12)) ? s / t : 0.0;
    };
    const auto rhs = [&](double t, const State& st) -> State {
        if (form == MeanFieldForm::instantaneous) {
            const MeanFieldRate r = mean_field_rhs(osc, gains, st.x, st.p);
            return {r.x, r.p, st.x};
        }
        const double y = average(t, st.s);
        const double drive = gains.k1 * y - gains.k3 * y * y * y + gains.k0;
        return {-0.5 * osc.gamma * st.x + osc.omega * st.p,
                -osc.omega * st.x - 0.5 * osc.gamma * st.p + drive, st.x};
    };

    const auto steps = static_cast<std::size_t>(std::llround((t_final - initial.t) / dt));
    State st{initial.x, initial.p, initial.y * initial.t};
    const auto sample = [&](double t) {
        const double y = form == MeanFieldForm::instantaneous ? st.x : average(t, st.s);
        return MeanFieldState{t, st.x, st.p, y};
    };

    std::vector<MeanFieldState> out;
    out.reserve(steps / stride + 2);
    out.push_back(sample(initial.t));
    for (std::size_t i = 0; i < steps; ++i) {
        const double t = initial.t + static_cast<double>(i) * dt;
        const State k1 = rhs(t, st);
        const State k2 = rhs(t + 0.5 * dt, {st.x + 0.5 * dt * k1.x, st.p + 0.5 * dt * k1.p,
                                            st.s + 0.5 * dt * k1.s});
        const State k3 = rhs(t + 0.5 * dt, {st.x + 0.5 * dt * k2.x, st.p + 0.5 * dt * k2.p,
                                            st.s + 0.5 * dt * k2.s});
        const State k4 = rhs(t + dt, {st.x + dt * k3.x, st.p + dt * k3.p, st.s + dt * k3.s});
        st.x += dt / 6.0 * (k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x);
        st.p += dt / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p);
        st.s += dt / 6.0 * (k1.s + 2.0 * k2.s + 2.0 * k3.s + k4.s);
        if (!std::isfinite(st.x) || !std::isfinite(st.p)) {
            throw NumericalAbort("mean-field integration diverged");
        }
        if ((i + 1) % stride == 0 || i + 1 == steps) {
            out.push_back(sample(initial.t + static_cast<double>(i + 1) * dt));
        }
    }
    return out;
}

}  // namespace bifread
