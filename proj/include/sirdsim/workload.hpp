// Open-loop traffic: Poisson all-to-all arrivals, message size
// distributions, incast overlay and explicit flow lists.
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sirdsim/engine.hpp"
#include "sirdsim/packet.hpp"
#include "sirdsim/rng.hpp"

namespace sirdsim {

class WorkloadError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class SizeDistKind { Fixed, Exponential, Lognormal, Bimodal, Empirical };

struct WorkloadSpec {
    SizeDistKind size_dist = SizeDistKind::Lognormal;
    std::uint64_t mean_size_bytes = 125'000;
    double lognormal_sigma = 1.0;
    std::uint64_t bimodal_small_bytes = 1'000;
    double bimodal_small_prob = 0.9;
    std::string cdf_file;              // Empirical only
    double applied_load_fraction = 0.5;
    SimTime duration_ns = 1 * kNsPerMs;
    SimTime warmup_ns = 75 * kNsPerUs;
    std::string flows_file;            // optional explicit messages

    bool operator==(const WorkloadSpec&) const = default;
};

struct IncastSpec {
    bool enabled = false;
    std::uint32_t num_senders = 30;
    std::uint64_t burst_size_bytes = 500'000;
    double load_fraction = 0.07;  // share of the total applied load
    SimTime period_ns = 0;        // 0 = derived from load_fraction

    bool operator==(const IncastSpec&) const = default;
};

/// Piecewise-linear CDF read from "size_bytes cumulative_probability" lines.
class EmpiricalCdf {
public:
    explicit EmpiricalCdf(std::vector<std::pair<double, double>> points);
    static EmpiricalCdf load(const std::string& path);

    double quantile(double u) const;
    double mean() const;
    const std::vector<std::pair<double, double>>& points() const { return points_; }

private:
    std::vector<std::pair<double, double>> points_;
};

class SizeDistribution {
public:
    explicit SizeDistribution(const WorkloadSpec& spec);

    std::uint64_t sample(RngStream& rng) const;
    /// Analytic mean of the distribution (before integer rounding).
    double mean() const { return mean_; }

private:
    SizeDistKind kind_;
    double mean_ = 0;
    double mu_ = 0;
    double sigma_ = 0;
    double small_ = 0;
    double small_prob_ = 0;
    double large_ = 0;
    std::optional<EmpiricalCdf> cdf_;
};

/// Per-host Poisson rate (messages per second) for a payload load fraction.
double arrival_rate_per_s(double load, std::int64_t link_bps, double mean_size_bytes);

struct Arrival {
    SimTime at;
    HostId dst;
    std::uint64_t size;
};

/// Open-loop arrival process of one host.
class PoissonSource {
public:
    PoissonSource(HostId self, std::uint32_t num_hosts, double rate_per_s, const SizeDistribution& sizes,
                  RngStream rng);
    Arrival next();

private:
    HostId self_;
    std::uint32_t num_hosts_;
    double mean_gap_ns_;
    const SizeDistribution& sizes_;
    RngStream rng_;
    double clock_ns_ = 0.0;
};

/// Destination uniform over all hosts except `self`.
HostId uniform_peer(HostId self, std::uint32_t num_hosts, RngStream& rng);

/// Period that makes incast `fraction` of the total load.
double incast_period_ns(const IncastSpec& spec, double total_load, std::uint32_t num_hosts, std::int64_t link_bps);

struct IncastBurst {
    HostId victim;
    std::vector<HostId> senders;
    std::uint64_t size;
};

IncastBurst incast_burst(const IncastSpec& spec, std::uint32_t num_hosts, RngStream& rng);

/// One line of a flows file: start_ns src dst size [period_ns count].
struct FlowLine {
    SimTime start_ns;
    HostId src;
    HostId dst;
    std::uint64_t size;
    SimTime period_ns = 0;
    std::uint64_t count = 1;
};

std::vector<FlowLine> load_flows(const std::string& path);

}  // namespace sirdsim
