#include "bifread/fock.hpp"

#include "bifread/bifurcation.hpp"
#include "bifread/dephasing.hpp"
#include "bifread/errors.hpp"
#include "bifread/feedback.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace bifread {

namespace {

using Triplet = Eigen::Triplet<Complex>;

constexpr std::size_t kEnlargement = 32;
constexpr Complex kI{0.0, 1.0};

SparseOperator annihilation(std::size_t n) {
    std::vector<Triplet> t;
    for (std::size_t k = 1; k < n; ++k) {
        t.emplace_back(static_cast<int>(k - 1), static_cast<int>(k), std::sqrt(double(k)));
    }
    SparseOperator a(static_cast<int>(n), static_cast<int>(n));
    a.setFromTriplets(t.begin(), t.end());
    return a;
}

/// kron(q, op) with combined index level * N + n.
SparseOperator kron_qubit(const Eigen::Matrix2cd& q, const SparseOperator& op) {
    const int n = static_cast<int>(op.rows());
    std::vector<Triplet> t;
    for (int qi = 0; qi < 2; ++qi) {
        for (int qj = 0; qj < 2; ++qj) {
            if (q(qi, qj) == Complex{}) continue;
            for (int k = 0; k < op.outerSize(); ++k) {
                for (SparseOperator::InnerIterator it(op, k); it; ++it) {
                    t.emplace_back(qi * n + static_cast<int>(it.row()),
                                   qj * n + static_cast<int>(it.col()), q(qi, qj) * it.value());
                }
            }
        }
    }
    SparseOperator out(2 * n, 2 * n);
    out.setFromTriplets(t.begin(), t.end());
    return out;
}

SparseOperator identity(std::size_t n) {
    SparseOperator id(static_cast<int>(n), static_cast<int>(n));
    id.setIdentity();
    return id;
}

DenseOperator exp_anti_hermitian(const DenseOperator& g) {
    // g = -i K with K Hermitian
    const DenseOperator k = kI * g;
    Eigen::SelfAdjointEigenSolver<DenseOperator> es(0.5 * (k + k.adjoint()));
    const Eigen::VectorXcd phases =
        (-kI * es.eigenvalues().cast<Complex>()).array().exp().matrix();
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

void hermitize_and_normalize(DenseOperator& rho) {
    rho = 0.5 * (rho + rho.adjoint()).eval();
    const double tr = rho.trace().real();
    if (!(tr > 0.0) || !std::isfinite(tr)) throw NumericalAbort("density trace is not positive");
    rho /= tr;
}

void require_finite(const DenseOperator& rho) {
    if (!rho.allFinite()) throw NumericalAbort("non-finite density matrix");
}

DenseOperator liouvillian(const DenseOperator& rho, const FockOperators& ops,
                          const SparseOperator& h, double gamma) {
    const DenseOperator hr = h * rho;
    const DenseOperator ar = ops.a * rho;
    const DenseOperator nr = ops.number * rho;
    const DenseOperator jump = ops.a * ar.adjoint();
    return -kI * (hr - hr.adjoint()) + gamma * (jump - 0.5 * (nr + nr.adjoint()));
}

}  // namespace

const char* to_string(FockMode mode) {
    switch (mode) {
        case FockMode::single: return "single";
        case FockMode::dispersive: return "dispersive";
        case FockMode::full_jc: return "full_jc";
    }
    return "single";
}

FockMode parse_fock_mode(const std::string& name) {
    if (name == "single") return FockMode::single;
    if (name == "dispersive") return FockMode::dispersive;
    if (name == "full_jc") return FockMode::full_jc;
    throw ConfigError("unknown Fock mode '" + name + "'");
}

FockOperators FockOperators::build(std::size_t truncation, bool qubit) {
    if (truncation < kMinTruncation) throw ConfigError("Fock truncation must be at least 4");
    FockOperators ops;
    ops.truncation = truncation;
    ops.qubit = qubit;
    const SparseOperator a = annihilation(truncation);
    const SparseOperator ad = a.adjoint();
    const double s = 1.0 / std::numbers::sqrt2;
    const SparseOperator x = s * (a + ad);
    const SparseOperator p = (kI * s) * (ad - a);
    const SparseOperator n = ad * a;
    const SparseOperator x2 = x * x;
    const SparseOperator p2 = p * p;
    const SparseOperator xp = 0.5 * (SparseOperator(x * p) + SparseOperator(p * x));
    if (!qubit) {
        ops.a = a;
        ops.number = n;
        ops.x = x;
        ops.p = p;
        ops.x2 = x2;
        ops.p2 = p2;
        ops.xp_sym = xp;
        return ops;
    }
    const Eigen::Matrix2cd id2 = Eigen::Matrix2cd::Identity();
    ops.a = kron_qubit(id2, a);
    ops.number = kron_qubit(id2, n);
    ops.x = kron_qubit(id2, x);
    ops.p = kron_qubit(id2, p);
    ops.x2 = kron_qubit(id2, x2);
    ops.p2 = kron_qubit(id2, p2);
    ops.xp_sym = kron_qubit(id2, xp);
    Eigen::Matrix2cd sz = Eigen::Matrix2cd::Zero();
    sz(0, 0) = -1.0;
    sz(1, 1) = 1.0;
    Eigen::Matrix2cd sm = Eigen::Matrix2cd::Zero();
    sm(0, 1) = 1.0;
    const SparseOperator id = identity(truncation);
    ops.sigma_z = kron_qubit(sz, id);
    ops.sigma_minus = kron_qubit(sm, id);
    return ops;
}

SparseOperator FockHamiltonian::at(double u) const {
    if (u == 0.0) return drift;
    return drift + u * control;
}

FockHamiltonian build_hamiltonian(const HamiltonianParams& params, std::size_t truncation) {
    const bool qubit = params.mode != FockMode::single;
    const FockOperators ops = FockOperators::build(truncation, qubit);
    FockHamiltonian h;
    h.control = ops.x;
    switch (params.mode) {
        case FockMode::single:
            h.drift = params.omega * ops.number;
            break;
        case FockMode::dispersive: {
            if (!params.delta_od || !params.omega_q || !params.chi) {
                throw ConfigError("dispersive Hamiltonian needs delta_od, omega_q and chi");
            }
            h.drift = (0.5 * *params.omega_q) * ops.sigma_z + *params.delta_od * ops.number +
                      *params.chi * SparseOperator(ops.number * ops.sigma_z);
            break;
        }
        case FockMode::full_jc: {
            if (!params.delta_od || !params.omega_q || !params.g) {
                throw ConfigError("full_jc Hamiltonian needs delta_od, omega_q and g");
            }
            const SparseOperator sp = ops.sigma_minus.adjoint();
            const SparseOperator coupling =
                SparseOperator(SparseOperator(ops.a.adjoint()) * ops.sigma_minus) +
                SparseOperator(ops.a * sp);
            h.drift = (0.5 * *params.omega_q) * ops.sigma_z + *params.delta_od * ops.number +
                      *params.g * coupling;
            break;
        }
    }
    h.drift.makeCompressed();
    return h;
}

double tail_mass(const FockDensity& state) {
    const std::size_t n = state.truncation;
    double mass = 0.0;
    const std::size_t blocks = state.qubit ? 2 : 1;
    for (std::size_t b = 0; b < blocks; ++b) {
        for (std::size_t k = n - 2; k < n; ++k) {
            const auto i = static_cast<Eigen::Index>(b * n + k);
            mass += state.rho(i, i).real();
        }
    }
    return mass;
}

std::size_t suggest_truncation(double max_abs_x, double max_abs_p) {
    const double alpha2 = 0.5 * (max_abs_x * max_abs_x + max_abs_p * max_abs_p);
    const double levels = alpha2 + 8.0 * std::sqrt(alpha2) + 16.0;
    const auto rounded = static_cast<std::size_t>(std::ceil(levels / 16.0)) * 16;
    return std::max(kDefaultTruncation, rounded);
}

DenseOperator gaussian_density(const GaussianMoments& m, std::size_t truncation) {
    if (truncation < kMinTruncation) throw ConfigError("Fock truncation must be at least 4");
    const double det = m.vx * m.vp - m.cxp * m.cxp;
    if (!(m.vx > 0.0) || !(m.vp > 0.0) || det < 0.25 * (1.0 - 1e-12)) {
        throw ConfigError("initial covariance violates the uncertainty relation");
    }
    const double nu = std::sqrt(std::max(det, 0.25));
    const double nbar = std::max(0.0, nu - 0.5);

    Eigen::Matrix2d cov;
    cov << m.vx, m.cxp, m.cxp, m.vp;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> ce(cov);
    const double lmin = ce.eigenvalues()(0);
    const double lmax = ce.eigenvalues()(1);
    const double r = 0.25 * std::log(lmax / lmin);
    const double theta = std::atan2(ce.eigenvectors()(1, 0), ce.eigenvectors()(0, 0));
    const Complex xi = std::polar(r, 2.0 * theta);
    const Complex alpha = Complex{m.x, m.p} / std::numbers::sqrt2;

    const std::size_t big = truncation + kEnlargement;
    const SparseOperator a_sp = annihilation(big);
    const DenseOperator a = DenseOperator(a_sp);
    const DenseOperator ad = a.adjoint();

    DenseOperator rho = DenseOperator::Zero(big, big);
    for (std::size_t k = 0; k < big; ++k) {
        const double pk = nbar == 0.0 ? (k == 0 ? 1.0 : 0.0)
                                      : std::pow(nbar, double(k)) / std::pow(nbar + 1.0, double(k) + 1.0);
        rho(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)) = pk;
    }
    if (r > 0.0) {
        const DenseOperator s = exp_anti_hermitian(0.5 * (std::conj(xi) * a * a - xi * ad * ad));
        rho = s * rho * s.adjoint();
    }
    if (alpha != Complex{}) {
        const DenseOperator d = exp_anti_hermitian(alpha * ad - std::conj(alpha) * a);
        rho = d * rho * d.adjoint();
    }
    const auto n = static_cast<Eigen::Index>(truncation);
    DenseOperator cut = rho.topLeftCorner(n, n);
    hermitize_and_normalize(cut);
    return cut;
}

FockDensity make_density(const GaussianMoments& m, std::size_t truncation) {
    return {gaussian_density(m, truncation), truncation, false};
}

FockDensity make_density(const GaussianMoments& m, const QubitState& qubit,
                         std::size_t truncation) {
    const DenseOperator osc = gaussian_density(m, truncation);
    const auto n = static_cast<Eigen::Index>(truncation);
    Eigen::Matrix2cd q;
    q << qubit.rho_gg, std::conj(qubit.rho_eg), qubit.rho_eg, qubit.rho_ee();
    FockDensity out{DenseOperator::Zero(2 * n, 2 * n), truncation, true};
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) out.rho.block(i * n, j * n, n, n) = q(i, j) * osc;
    }
    return out;
}

Complex expectation(const SparseOperator& op, const DenseOperator& rho) {
    Complex sum{};
    for (int k = 0; k < op.outerSize(); ++k) {
        for (SparseOperator::InnerIterator it(op, k); it; ++it) {
            sum += it.value() * rho(it.col(), it.row());
        }
    }
    return sum;
}

GaussianMoments oscillator_moments(const FockDensity& state, const FockOperators& ops) {
    GaussianMoments m;
    m.x = expectation(ops.x, state.rho).real();
    m.p = expectation(ops.p, state.rho).real();
    m.vx = expectation(ops.x2, state.rho).real() - m.x * m.x;
    m.vp = expectation(ops.p2, state.rho).real() - m.p * m.p;
    m.cxp = expectation(ops.xp_sym, state.rho).real() - m.x * m.p;
    return m;
}

DenseOperator conditional_oscillator(const FockDensity& state, QubitLevel level) {
    if (!state.qubit) throw std::invalid_argument("state has no qubit factor");
    const auto n = static_cast<Eigen::Index>(state.truncation);
    const Eigen::Index off = static_cast<Eigen::Index>(level) * n;
    DenseOperator block = state.rho.block(off, off, n, n);
    const double pop = block.trace().real();
    if (!(pop > 0.0)) throw std::invalid_argument("qubit level has zero population");
    return block / pop;
}

double coherent_fidelity(const DenseOperator& rho_osc, double x, double p) {
    const Complex alpha = Complex{x, p} / std::numbers::sqrt2;
    const Eigen::Index n = rho_osc.rows();
    Eigen::VectorXcd v(n);
    Complex c = std::exp(-0.5 * std::norm(alpha));
    for (Eigen::Index k = 0; k < n; ++k) {
        v(k) = c;
        c *= alpha / std::sqrt(double(k + 1));
    }
    return (v.adjoint() * rho_osc * v)(0, 0).real();
}

SmeStep sme_step(const FockDensity& state, const FockOperators& ops, const SparseOperator& h,
                 double gamma, double eta, double dW, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
    const double tail = tail_mass(state);
    if (tail > kTailMassLimit) {
        const GaussianMoments m = oscillator_moments(state, ops);
        const std::size_t suggested = std::max(
            2 * state.truncation, suggest_truncation(std::abs(m.x) + std::sqrt(m.vx),
                                                     std::abs(m.p) + std::sqrt(m.vp)));
        throw TruncationError("Fock tail mass " + std::to_string(tail) + " exceeds limit at N=" +
                                  std::to_string(state.truncation),
                              suggested);
    }
    const DenseOperator& rho = state.rho;
    const DenseOperator ar = ops.a * rho;
    const double x_old = expectation(ops.x, rho).real();
    const double a_plus_ad = 2.0 * ar.trace().real();

    DenseOperator drho = liouvillian(rho, ops, h, gamma) * dt;
    drho += (std::sqrt(eta * gamma) * dW) * (ar + ar.adjoint() - a_plus_ad * rho);

    SmeStep out{{rho + drho, state.truncation, state.qubit}, 0.0};
    require_finite(out.state.rho);
    hermitize_and_normalize(out.state.rho);
    out.dy = x_old * dt + dW / std::sqrt(2.0 * eta * gamma);
    return out;
}

FockDensity lindblad_step_rk4(const FockDensity& state, const FockOperators& ops,
                              const SparseOperator& h, double gamma, double dt) {
    const DenseOperator& r = state.rho;
    const DenseOperator k1 = liouvillian(r, ops, h, gamma);
    const DenseOperator k2 = liouvillian(r + 0.5 * dt * k1, ops, h, gamma);
    const DenseOperator k3 = liouvillian(r + 0.5 * dt * k2, ops, h, gamma);
    const DenseOperator k4 = liouvillian(r + dt * k3, ops, h, gamma);
    FockDensity out{r + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), state.truncation,
                    state.qubit};
    require_finite(out.rho);
    hermitize_and_normalize(out.rho);
    return out;
}

namespace {

struct Segment {
    double time = 0.0;
    FockHamiltonian h;
};

void require_qubit(const OracleRun& run) {
    if (run.mode != FockMode::single && !run.qubit) {
        throw ConfigError(std::string("Fock mode ") + to_string(run.mode) +
                          " needs a qubit scenario");
    }
}

double max_fixed_point_extent(double omega, double gamma, const FeedbackGains& gains,
                              double& max_p) {
    double max_x = 0.0;
    const auto points = omega == 0.0 ? std::vector<FixedPoint>{axis_fixed_point(gamma, gains)}
                                     : fixed_points(omega, gamma, gains);
    for (const auto& fp : points) {
        max_x = std::max(max_x, std::abs(fp.x));
        max_p = std::max(max_p, std::abs(fp.p));
    }
    return max_x;
}

std::vector<Segment> oracle_segments(const OracleRun& run, std::size_t n) {
    std::vector<Segment> out;
    if (run.mode == FockMode::single) {
        HamiltonianParams hp;
        hp.omega = run.params.omega;
        out.push_back({0.0, build_hamiltonian(hp, n)});
        return out;
    }
    const QubitScenario& q = *run.qubit;
    for (const auto& sw : q.schedule) {
        HamiltonianParams hp;
        hp.mode = run.mode;
        hp.delta_od = q.omega_o - sw.omega_d;
        if (run.mode == FockMode::dispersive) {
            hp.omega_q = 0.0;
            hp.chi = dispersive_reduce(q.omega_q, q.omega_o, q.g, sw.omega_d).chi;
        } else {
            hp.omega_q = q.omega_q - sw.omega_d;
            hp.g = q.g;
        }
        out.push_back({sw.time, build_hamiltonian(hp, n)});
    }
    return out;
}

}  // namespace

std::size_t oracle_truncation(const OracleRun& run) {
    require_qubit(run);
    double max_x = std::abs(run.initial.x) + std::sqrt(run.initial.vx);
    double max_p = std::abs(run.initial.p) + std::sqrt(run.initial.vp);
    const auto& gains = run.params.gains;
    if (run.mode == FockMode::single) {
        max_x = std::max(max_x, max_fixed_point_extent(run.params.omega, run.params.gamma,
                                                       gains, max_p));
    } else {
        const QubitScenario& q = *run.qubit;
        for (const auto& sw : q.schedule) {
            const auto c = dispersive_reduce(q.omega_q, q.omega_o, q.g, sw.omega_d);
            const auto w = branch_frequencies(c.delta_od, c.chi);
            for (double omega : {w.ground, w.excited}) {
                max_x = std::max(max_x,
                                 max_fixed_point_extent(omega, run.params.gamma, gains, max_p));
            }
        }
    }
    return suggest_truncation(max_x, max_p);
}

OracleRecord run_oracle(const OracleRun& run, StreamId stream) {
    run.integration.validate();
    require_qubit(run);
    const std::size_t n = run.truncation != 0 ? run.truncation : oracle_truncation(run);
    const bool qubit = run.mode != FockMode::single;
    const double dt = run.integration.dt;
    const std::size_t steps = run.integration.step_count();
    const std::size_t stride = run.integration.output_stride;

    const FockOperators ops = FockOperators::build(n, qubit);
    const std::vector<Segment> segments = oracle_segments(run, n);
    FockDensity state = qubit ? make_density(run.initial, run.qubit->initial, n)
                              : make_density(run.initial, n);

    OracleRecord rec;
    rec.stream = stream;
    rec.mode = run.mode;
    rec.truncation = n;
    rec.dt = dt;
    rec.steps = steps;
    rec.samples.reserve(steps / stride + 2);
    rec.dy.reserve(steps);

    WienerSource noise(stream, 0, dt);
    RecordAverager average(static_cast<double>(run.integration.warmup_steps) * dt);
    double dy_cum = 0.0;
    const auto record = [&](std::size_t step) {
        const double y = average.value();
        const double tail = tail_mass(state);
        rec.max_tail_mass = std::max(rec.max_tail_mass, tail);
        rec.samples.push_back({static_cast<double>(step) * dt, oscillator_moments(state, ops), y,
                               control_law(y, run.params.gains), dy_cum, tail});
    };
    record(0);

    std::size_t active = 0;
    const double eps = 1e-9 * dt;
    for (std::size_t i = 0; i < steps; ++i) {
        const double t = static_cast<double>(i) * dt;
        while (active + 1 < segments.size() && segments[active + 1].time <= t + eps) ++active;
        const double u = control_law(average.value(), run.params.gains);
        const double dW = run.noise == NoiseMode::stochastic ? noise.next() : 0.0;
        SmeStep next = sme_step(state, ops, segments[active].h.at(u), run.params.gamma,
                                run.params.eta, dW, dt);
        state = std::move(next.state);
        average.update(next.dy, dt);
        dy_cum += next.dy;
        rec.dy.push_back(next.dy);
        rec.max_tail_mass = std::max(rec.max_tail_mass, tail_mass(state));
        if (i + 1 == steps || (i + 1) % stride == 0) record(i + 1);
    }
    return rec;
}

double conditioned_oscillation_frequency(const HamiltonianParams& params,
                                         std::size_t truncation, QubitLevel level,
                                         Complex alpha, double gamma, double t_final,
                                         double dt) {
    if (!(dt > 0.0) || !(t_final > dt)) throw std::invalid_argument("bad probe time grid");
    const bool qubit = params.mode != FockMode::single;
    const FockOperators ops = FockOperators::build(truncation, qubit);
    const FockHamiltonian h = build_hamiltonian(params, truncation);

    GaussianMoments coherent;
    coherent.x = std::numbers::sqrt2 * alpha.real();
    coherent.p = std::numbers::sqrt2 * alpha.imag();
    QubitState q;
    q.kind = level == QubitLevel::ground ? QubitPreparation::ground : QubitPreparation::excited;
    q.rho_gg = level == QubitLevel::ground ? 1.0 : 0.0;
    FockDensity state =
        qubit ? make_density(coherent, q, truncation) : make_density(coherent, truncation);

    // <a> restricted to the chosen qubit block
    const auto n = static_cast<Eigen::Index>(truncation);
    const Eigen::Index off = qubit ? static_cast<Eigen::Index>(level) * n : 0;
    const auto conditioned_a = [&] {
        const DenseOperator block = state.rho.block(off, off, n, n);
        Complex s{};
        for (Eigen::Index k = 1; k < n; ++k) s += std::sqrt(double(k)) * block(k, k - 1);
        return s / block.trace().real();
    };

    const auto steps = static_cast<std::size_t>(std::llround(t_final / dt));
    std::vector<double> t, phase;
    t.reserve(steps + 1);
    phase.reserve(steps + 1);
    double last = std::arg(conditioned_a());
    double unwrapped = last;
    t.push_back(0.0);
    phase.push_back(unwrapped);
    for (std::size_t i = 1; i <= steps; ++i) {
        state = lindblad_step_rk4(state, ops, h.drift, gamma, dt);
        const double ph = std::arg(conditioned_a());
        double d = ph - last;
        d -= 2.0 * std::numbers::pi * std::round(d / (2.0 * std::numbers::pi));
        unwrapped += d;
        last = ph;
        t.push_back(static_cast<double>(i) * dt);
        phase.push_back(unwrapped);
    }
    return -fit_slope(t, phase, 0.0, t.back()).slope;
}

}  // namespace bifread
