// Run configuration: flat "key = value" files, validation, and emission of
// the effective configuration.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "sirdsim/fabric.hpp"
#include "sirdsim/protocol.hpp"
#include "sirdsim/workload.hpp"

namespace sirdsim {

enum class TrafficConfig { Balanced, Core, Incast };

/// Load divisor applied by the core configuration (0.89 * 2).
constexpr double kCoreLoadDivisor = 0.89 * 2.0;

struct RunConfig {
    TopologySpec topology;
    ProtocolParams protocol;
    WorkloadSpec workload;
    IncastSpec incast;
    TrafficConfig traffic = TrafficConfig::Balanced;
    bool background_traffic = true;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    bool trace = false;
    SimTime sample_interval_ns = 1 * kNsPerUs;
    SimTime goodput_window_ns = 10 * kNsPerUs;

    bool operator==(const RunConfig&) const = default;

    /// Topology after traffic-configuration overrides.
    TopologySpec effective_topology() const;
    /// Applied host load after traffic-configuration scaling.
    double effective_load() const;
};

class ConfigError : public std::runtime_error {
public:
    enum class Kind { MissingFile, Syntax, UnknownKey, TypeMismatch, Invalid };

    ConfigError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Parses and validates a config file. An empty file yields all defaults.
RunConfig parse_config_file(const std::string& path);
/// Same, from text; `origin` prefixes diagnostics.
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");

/// Applies one key, as if it appeared in a config file. Size values with an
/// xBDP suffix resolve against the current bdp_bytes.
void set_config_key(RunConfig& cfg, const std::string& key, const std::string& value);

/// Throws ConfigError(Invalid) for any cross-field violation.
void validate_config(const RunConfig& cfg);

/// Canonical text that parses back to an identical RunConfig.
std::string emit_config(const RunConfig& cfg);

/// Keys accepted by the sweep command.
const std::vector<std::string>& sweep_axes();

std::string format_double(double v);

}  // namespace sirdsim
