#include "bifread/bifurcation.hpp"
#include "bifread/errors.hpp"
#include "bifread/params.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace bifread;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

RawParams pitchfork_raw() {
    RawParams r;
    r.unit = FrequencyUnit::angular_mhz;
    r.omega = 3.5;
    r.gamma = 250;
    r.k0 = 50;
    r.k1 = 500;
    r.k3 = 50;
    return r;
}

}  // namespace

TEST_SUITE("params") {
    TEST_CASE("unit conversion round trips") {
        CHECK(to_rad_per_ns(250.0, FrequencyUnit::angular_mhz) == doctest::Approx(0.25));
        CHECK(to_rad_per_ns(100.0, FrequencyUnit::cyclic_mhz) == doctest::Approx(kTwoPi * 0.1));
        for (auto u : {FrequencyUnit::rad_per_ns, FrequencyUnit::angular_mhz, FrequencyUnit::cyclic_mhz}) {
            CHECK(from_rad_per_ns(to_rad_per_ns(1.234, u), u) == doctest::Approx(1.234).epsilon(1e-15));
            CHECK(parse_frequency_unit(to_string(u)) == u);
        }
        CHECK_THROWS_AS(parse_frequency_unit("GHz"), ConfigError);
    }

    TEST_CASE("validate_params normalizes and rejects invalid input") {
        const PhysicalParams p = validate_params(pitchfork_raw());
        CHECK(p.gamma == doctest::Approx(0.25));
        CHECK(p.gains.k1 == doctest::Approx(0.5));

        auto bad = pitchfork_raw();
        bad.gamma = 0;
        CHECK_THROWS_AS(validate_params(bad), ConfigError);
        bad = pitchfork_raw();
        bad.eta = 1.5;
        CHECK_THROWS_AS(validate_params(bad), ConfigError);
        bad.eta = 0.0;
        CHECK_THROWS_AS(validate_params(bad), ConfigError);
        bad = pitchfork_raw();
        bad.k3 = -1;
        CHECK_THROWS_AS(validate_params(bad), ConfigError);
        bad = pitchfork_raw();
        bad.k1 = 250;
        CHECK_THROWS_AS(validate_params(bad), ConfigError);
        ValidationOptions relaxed;
        relaxed.require_bifurcation = false;
        CHECK_NOTHROW(validate_params(bad, relaxed));
        bad = pitchfork_raw();
        bad.omega = std::nan("");
        CHECK_THROWS_AS(validate_params(bad), ConfigError);
    }

    TEST_CASE("smallness flags are advisory") {
        // the low-omega pitchfork set satisfies both smallness conditions
        const PhysicalParams a = validate_params(pitchfork_raw());
        CHECK_FALSE(a.flags.k0_not_small);
        CHECK_FALSE(a.flags.k3_not_small);
        // near omega* the scale collapses and both are flagged
        auto raw = pitchfork_raw();
        raw.omega = 65;
        const PhysicalParams b = validate_params(raw);
        CHECK(b.flags.k0_not_small);
        CHECK(b.flags.any());
    }

    TEST_CASE("dispersive reduction examples") {
        const auto mhz = [](double v) { return to_rad_per_ns(v, FrequencyUnit::cyclic_mhz); };
        const auto c = dispersive_reduce(mhz(5100), mhz(5000), mhz(20), mhz(4995));
        CHECK(c.chi == doctest::Approx(mhz(4.0)).epsilon(1e-12));
        CHECK(c.delta_od == doctest::Approx(mhz(5.0)).epsilon(1e-9));
        const auto a = dispersive_reduce(mhz(35), 0.0, mhz(8), 0.0);
        CHECK(from_rad_per_ns(a.chi, FrequencyUnit::cyclic_mhz) == doctest::Approx(64.0 / 35.0));
        CHECK_THROWS_AS(dispersive_reduce(1.0, 1.0, 0.1, 0.0), ConfigError);

        const auto w = branch_frequencies(2.0, 0.5);
        CHECK(w.ground == 1.5);
        CHECK(w.excited == 2.5);
    }

    TEST_CASE("drive schedule places the branches around omega*") {
        const auto mhz = [](double v) { return to_rad_per_ns(v, FrequencyUnit::cyclic_mhz); };
        const double wstar = bifurcation_point(mhz(200), mhz(100));
        const double chi = mhz(4);
        const ReadoutDrives d = drive_schedule(mhz(5000), wstar, chi);
        CHECK(from_rad_per_ns(d.weak, FrequencyUnit::cyclic_mhz) / 1000 == doctest::Approx(4.995).epsilon(1e-3));
        CHECK(from_rad_per_ns(d.strong, FrequencyUnit::cyclic_mhz) / 1000 == doctest::Approx(4.987).epsilon(1e-3));
        // weak: excited branch sits exactly at omega* - chi < omega*
        CHECK(branch_frequencies(mhz(5000) - d.weak, chi).excited < wstar);
        const auto s = branch_frequencies(mhz(5000) - d.strong, chi);
        CHECK(s.ground < wstar);
        CHECK(s.excited > wstar);
    }

    TEST_CASE("qubit scenario validation") {
        QubitScenario q;
        q.omega_q = 1.0;
        q.omega_o = 0.0;
        q.g = 0.1;
        q.schedule = {{0.0, 0.1}, {5.0, 0.2}};
        const auto v = validate_qubit_scenario(q);
        CHECK_FALSE(v.dispersive_warning);
        CHECK(drive_frequency_at(v, 4.9) == 0.1);
        CHECK(drive_frequency_at(v, 5.0) == 0.2);

        auto close = q;
        close.g = 0.3;
        CHECK(validate_qubit_scenario(close).dispersive_warning);

        auto late = q;
        late.schedule = {{1.0, 0.1}};
        CHECK_THROWS_AS(validate_qubit_scenario(late), ConfigError);
        auto unordered = q;
        unordered.schedule = {{0.0, 0.1}, {5.0, 0.2}, {5.0, 0.3}};
        CHECK_THROWS_AS(validate_qubit_scenario(unordered), ConfigError);
        auto empty = q;
        empty.schedule.clear();
        CHECK_THROWS_AS(validate_qubit_scenario(empty), ConfigError);
        auto coherence = q;
        coherence.initial.rho_gg = 0.5;
        coherence.initial.rho_eg = {0.6, 0.0};
        CHECK_THROWS_AS(validate_qubit_scenario(coherence), ConfigError);
        auto resonant = q;
        resonant.omega_o = 1.0;
        CHECK_THROWS_AS(validate_qubit_scenario(resonant), ConfigError);
    }
}
