#include "bifread/feedback.hpp"

#include <stdexcept>

namespace bifread {

double control_law(double y, const FeedbackGains& gains) {
    return -gains.k1 * y + gains.k3 * y * y * y - gains.k0;
}

RecordAverager::RecordAverager(double warmup) : warmup_(warmup) {
    if (warmup < 0.0) throw std::invalid_argument("warmup must be non-negative");
}

RecordAverager RecordAverager::with_history(double accumulated, double elapsed, double warmup) {
    if (elapsed < 0.0) throw std::invalid_argument("elapsed time must be non-negative");
    RecordAverager avg(warmup);
    avg.accumulated_ = accumulated;
    avg.elapsed_ = elapsed;
    return avg;
}

void RecordAverager::update(double dy, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("averager step dt must be positive");
    accumulated_ += dy;
    elapsed_ += dt;
}

void RecordAverager::reset() {
    accumulated_ = 0.0;
    elapsed_ = 0.0;
}

bool RecordAverager::warmed_up() const {
    // elapsed is a running sum of dt; allow for its rounding against warmup = n*dt
    return elapsed_ > 0.0 && elapsed_ >= warmup_ * (1.0 - 1e-12);
}

double RecordAverager::value() const {
    return warmed_up() ? accumulated_ / elapsed_ : 0.0;
}

RecordAverager update_average(RecordAverager averager, double dy, double dt) {
    averager.update(dy, dt);
    return averager;
}

}  // namespace bifread
