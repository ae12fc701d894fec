#include "bifread/bifurcation.hpp"
#include "bifread/dephasing.hpp"
#include "bifread/fock.hpp"

#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

using namespace bifread;

namespace {

PhysicalParams readout_params(double delta_od) {
    PhysicalParams p;
    p.gamma = 0.25;
    p.chi = 0.005;
    p.delta_od = delta_od;
    p.gains = {0.005, 0.5, 0.05};
    return p;
}

}  // namespace

TEST_SUITE("dephasing") {
    TEST_CASE("overlap of unit-distance centroids") {
        CHECK(coherent_overlap(0.0, 0.0, 1.0, 1.0) == doctest::Approx(std::exp(-0.5)));
        CHECK(coherent_overlap(0.3, -0.2, 0.3, -0.2) == 1.0);
    }

    TEST_CASE("overlap matches the Fock-space inner product") {
        const std::size_t n = 40;
        const DenseOperator a = gaussian_density({0.7, -0.4, 0.5, 0.5, 0.0}, n);
        const DenseOperator b = gaussian_density({-0.5, 0.9, 0.5, 0.5, 0.0}, n);
        // pure states: tr(rho_a rho_b) = |<a|b>|^2
        const double fock = std::sqrt((a * b).trace().real());
        CHECK(fock == doctest::Approx(coherent_overlap(0.7, -0.4, -0.5, 0.9)).epsilon(1e-8));
    }

    TEST_CASE("rate is antisymmetric in the branches") {
        CHECK(dephasing_rate(1.0, 2.0, 3.0, 4.0, 0.5) == doctest::Approx(0.5 * (4.0 - 6.0)));
        CHECK(dephasing_rate(3.0, 4.0, 1.0, 2.0, 0.5) == doctest::Approx(-0.5 * (4.0 - 6.0)));
    }

    TEST_CASE("weak-regime formula equals the rate at the stationary centroids") {
        const PhysicalParams p = readout_params(0.02);
        const double wg = p.delta_od - p.chi, we = p.delta_od + p.chi;
        const double xg = weak_branch_amplitude(wg, p.gamma, p.gains);
        const double xe = weak_branch_amplitude(we, p.gamma, p.gains);
        // x = k0 w / (w^2 - k1 w + gamma^2/4)
        CHECK(xg == doctest::Approx(0.005 * wg / (wg * wg - 0.5 * wg + 0.015625)));
        const double rate = dephasing_rate(xe, stationary_momentum(xe, we, p.gamma), xg,
                                           stationary_momentum(xg, wg, p.gamma), p.chi);
        CHECK(dephasing_weak(p) == doctest::Approx(rate).epsilon(1e-12));
        CHECK(dephasing_weak(p) > 0.0);
    }

    TEST_CASE("strong-regime formula uses the bifurcated excited branch") {
        const double star = bifurcation_point(0.5, 0.25);
        const PhysicalParams p = readout_params(star);
        const double wg = p.delta_od - p.chi, we = p.delta_od + p.chi;
        const double xe = bifurcated_amplitude(we, p.gamma, p.gains);
        CHECK(xe * xe == doctest::Approx((-we * we + 0.5 * we - 0.015625) / (0.05 * we)));
        const double xg = weak_branch_amplitude(wg, p.gamma, p.gains);
        const double rate = dephasing_rate(xe, stationary_momentum(xe, we, p.gamma), xg,
                                           stationary_momentum(xg, wg, p.gamma), p.chi);
        CHECK(dephasing_strong(p) == doctest::Approx(rate).epsilon(1e-12));
        CHECK_THROWS_AS(dephasing_strong(readout_params(0.02)), std::domain_error);
        CHECK_THROWS_AS(bifurcated_amplitude(0.01, 0.25, p.gains), std::domain_error);
    }

    TEST_CASE("least squares recovers an exact line") {
        std::vector<double> t, y;
        for (int i = 0; i <= 100; ++i) {
            t.push_back(0.1 * i);
            y.push_back(2.5 * t.back() - 1.0 + (i > 50 ? 100.0 : 0.0));
        }
        const SlopeFit fit = fit_slope(t, y, 0.0, 5.0);
        CHECK(fit.slope == doctest::Approx(2.5));
        CHECK(fit.intercept == doctest::Approx(-1.0));
        CHECK(fit.samples == 51);
    }

    TEST_CASE("regime fit skips the transient and keeps the final half") {
        std::vector<double> t, y;
        for (int i = 0; i <= 1000; ++i) {
            t.push_back(i);
            // transient slope 10 for t < 20, then slope 1
            y.push_back(t.back() < 20.0 ? 10.0 * t.back() : 200.0 + (t.back() - 20.0));
        }
        const SlopeFit fit = fit_regime_slope(t, y, 0.0, 1000.0, 0.25);
        CHECK(fit.t_begin == doctest::Approx(510.0));
        CHECK(fit.slope == doctest::Approx(1.0));
        CHECK_THROWS_AS(fit_regime_slope(t, y, 0.0, 10.0, 0.25), std::invalid_argument);
    }

    TEST_CASE("coherence factor combines dephasing and overlap") {
        CHECK_THROWS_AS(coherence_factor({}, 0.0, 1.0), std::invalid_argument);
        std::vector<BranchSample> h(2);
        h[1].t = 2.0;
        h[1].sigma = 0.3;
        h[1].theta = 0.1;
        h[1].excited.x = 1.0;
        const auto c = coherence_factor(h, 0.05, 0.7);
        REQUIRE(c.size() == 2);
        CHECK(c[0].magnitude == doctest::Approx(1.0));
        CHECK(c[1].magnitude == doctest::Approx(std::exp(-0.05 * 2.0 - 0.3) / std::exp(-0.25)));
        CHECK(c[1].phase == doctest::Approx(0.7 * 2.0 + 0.1));
        CHECK(c[1].overlap == doctest::Approx(std::exp(-0.25)));
    }
}
