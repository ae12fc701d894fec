#include "bifread/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace bifread {

namespace {

std::mt19937_64 seeded_engine(StreamId id, std::uint32_t channel) {
    std::seed_seq seq{static_cast<std::uint32_t>(id.master_seed & 0xffffffffu),
                      static_cast<std::uint32_t>(id.master_seed >> 32),
                      static_cast<std::uint32_t>(id.trajectory & 0xffffffffu),
                      static_cast<std::uint32_t>(id.trajectory >> 32), channel};
    return std::mt19937_64(seq);
}

}  // namespace

WienerSource::WienerSource(StreamId id, std::uint32_t channel, double dt)
    : engine_(seeded_engine(id, channel)), sqrt_dt_(std::sqrt(dt)) {
    if (!(dt > 0.0)) throw std::invalid_argument("noise step dt must be positive");
}

double WienerSource::next() { return sqrt_dt_ * normal_(engine_); }

}  // namespace bifread
