// Named, independently seeded random streams.
#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace sirdsim {

/// A deterministic random stream identified by (seed, stream_id). Adding a new
/// stream never perturbs the draws of an existing one.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::string_view stream_id);

    /// Uniform in [0, 1).
    double uniform();
    /// Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n);
    double exponential(double mean);
    double normal(double mean, double stddev);

    std::uint64_t seed() const { return seed_; }
    const std::string& stream_id() const { return id_; }

private:
    std::uint64_t seed_;
    std::string id_;
    std::mt19937_64 gen_;
};

/// Mixes a base seed and a label into a 64-bit engine seed.
std::uint64_t derive_stream_seed(std::uint64_t seed, std::string_view stream_id);

}  // namespace sirdsim
