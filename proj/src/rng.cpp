#include "sirdsim/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace sirdsim {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a; std::hash is not stable across standard library implementations.
std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

std::uint64_t derive_stream_seed(std::uint64_t seed, std::string_view stream_id) {
    return splitmix64(splitmix64(seed) ^ fnv1a(stream_id));
}

RngStream::RngStream(std::uint64_t seed, std::string_view stream_id)
    : seed_(seed), id_(stream_id), gen_(derive_stream_seed(seed, stream_id)) {}

double RngStream::uniform() {
    // 53 random mantissa bits.
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::below(std::uint64_t n) {
    if (n == 0)
        throw std::invalid_argument("RngStream::below(0)");
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(gen_);
}

double RngStream::exponential(double mean) {
    return -mean * std::log1p(-uniform());
}

double RngStream::normal(double mean, double stddev) {
    // Box-Muller, one value per call; keeps the draw count per call fixed.
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace sirdsim
