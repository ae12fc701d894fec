#pragma once

#include "bifread/params.hpp"

namespace bifread {

/// Cubic feedback law u = -k1 Y + k3 Y^3 - k0.
double control_law(double y, const FeedbackGains& gains);

/// Uniform time average of the homodyne record, Y_t = S_t / t.
///
/// Reported as 0 until `warmup` time has elapsed, so the loop applies only the
/// constant -k0 part of the control while the ratio is dominated by noise.
class RecordAverager {
public:
    explicit RecordAverager(double warmup = 0.0);

    /// Averager that already integrated `accumulated` over `elapsed`.
    static RecordAverager with_history(double accumulated, double elapsed, double warmup = 0.0);

    void update(double dy, double dt);
    void reset();

    double value() const;
    double accumulated() const { return accumulated_; }
    double elapsed() const { return elapsed_; }
    double warmup() const { return warmup_; }
    bool warmed_up() const;

private:
    double accumulated_ = 0.0;
    double elapsed_ = 0.0;
    double warmup_ = 0.0;
};

RecordAverager update_average(RecordAverager averager, double dy, double dt);

}  // namespace bifread
