#include "bifread/feedback.hpp"

#include <doctest.h>

#include <stdexcept>

using namespace bifread;

TEST_SUITE("feedback") {
    TEST_CASE("control law") {
        const FeedbackGains k{0.5, 2.0, 3.0};
        CHECK(control_law(0.0, k) == -0.5);
        CHECK(control_law(1.0, k) == doctest::Approx(-2.0 + 3.0 - 0.5));
        CHECK(control_law(-2.0, k) == doctest::Approx(4.0 - 24.0 - 0.5));
    }

    TEST_CASE("constant stream averages to the constant after warmup") {
        RecordAverager avg(1.0);
        const double dt = 0.01;
        for (int i = 0; i < 99; ++i) avg.update(0.7 * dt, dt);
        CHECK_FALSE(avg.warmed_up());
        CHECK(avg.value() == 0.0);
        for (int i = 0; i < 200; ++i) {
            avg.update(0.7 * dt, dt);
            CHECK(avg.value() == doctest::Approx(0.7));
        }
    }

    TEST_CASE("single step after warmup") {
        const RecordAverager a = RecordAverager::with_history(0.4, 9.0, 1.0);
        const RecordAverager b = update_average(a, 0.1, 1.0);
        CHECK(b.accumulated() == doctest::Approx(0.5));
        CHECK(b.elapsed() == doctest::Approx(10.0));
        CHECK(b.value() == doctest::Approx(0.05));
        CHECK(a.value() == doctest::Approx(0.4 / 9.0));
    }

    TEST_CASE("reset and invalid steps") {
        RecordAverager avg;
        avg.update(1.0, 1.0);
        CHECK(avg.value() == 1.0);
        avg.reset();
        CHECK(avg.elapsed() == 0.0);
        CHECK(avg.value() == 0.0);
        CHECK_THROWS_AS(avg.update(1.0, 0.0), std::invalid_argument);
    }
}
