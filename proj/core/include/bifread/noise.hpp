#pragma once

#include <cstdint>
#include <random>

namespace bifread {

/// Identifies one trajectory's random stream inside an ensemble.
struct StreamId {
    std::uint64_t master_seed = 0;
    std::uint64_t trajectory = 0;
};

/// Wiener increments dW ~ N(0, dt) for one (master seed, trajectory, channel).
/// Two sources built from the same triple produce the same sequence, which is
/// how the moments engine and the Fock oracle share a measurement record.
class WienerSource {
public:
    WienerSource(StreamId id, std::uint32_t channel, double dt);

    double next();

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    double sqrt_dt_;
};

}  // namespace bifread
