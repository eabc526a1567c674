#include "sirdsim/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace sirdsim {

namespace {

using Kind = ConfigError::Kind;

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

[[noreturn]] void mismatch(const std::string& key, const std::string& value, const char* expected) {
    throw ConfigError(Kind::TypeMismatch, "key '" + key + "': expected " + expected + ", got '" + value + "'");
}

double parse_number(const std::string& key, const std::string& text, const char* expected) {
    double v = 0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || text.empty() || !std::isfinite(v))
        mismatch(key, text, expected);
    return v;
}

std::uint64_t parse_uint(const std::string& key, const std::string& text) {
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
        mismatch(key, text, "a non-negative integer");
    return v;
}

/// Splits "1.5xBDP" into number and lower-cased suffix.
std::pair<std::string, std::string> split_suffix(const std::string& text) {
    std::size_t i = 0;
    while (i < text.size() && (std::isdigit(static_cast<unsigned char>(text[i])) || text[i] == '.' || text[i] == '-' ||
                               text[i] == '+' || text[i] == 'e' || text[i] == 'E')) {
        // 'e' only counts as an exponent when followed by a digit or sign.
        if ((text[i] == 'e' || text[i] == 'E') &&
            (i + 1 >= text.size() || !(std::isdigit(static_cast<unsigned char>(text[i + 1])) || text[i + 1] == '-' ||
                                       text[i + 1] == '+')))
            break;
        ++i;
    }
    return {text.substr(0, i), lower(trim(text.substr(i)))};
}

std::uint64_t parse_size(const std::string& key, const std::string& text, std::uint64_t bdp, bool allow_inf) {
    const std::string l = lower(text);
    if (l == "inf" || l == "infinite" || l == "infinity") {
        if (!allow_inf)
            mismatch(key, text, "a finite byte size");
        return kInfiniteBytes;
    }
    auto [num, suffix] = split_suffix(text);
    double mult = 1;
    if (suffix.empty() || suffix == "b")
        mult = 1;
    else if (suffix == "kb")
        mult = 1e3;
    else if (suffix == "mb")
        mult = 1e6;
    else if (suffix == "gb")
        mult = 1e9;
    else if (suffix == "xbdp" || suffix == "bdp")
        mult = static_cast<double>(bdp);
    else
        mismatch(key, text, "a byte size (plain, KB, MB, xBDP or inf)");
    const double v = parse_number(key, num, "a byte size") * mult;
    if (v < 0 || v > 1.8e19)
        mismatch(key, text, "a non-negative byte size");
    return static_cast<std::uint64_t>(std::llround(v));
}

SimTime parse_time(const std::string& key, const std::string& text) {
    auto [num, suffix] = split_suffix(text);
    double mult = 1;
    if (suffix.empty() || suffix == "ns")
        mult = 1;
    else if (suffix == "us")
        mult = 1e3;
    else if (suffix == "ms")
        mult = 1e6;
    else if (suffix == "s")
        mult = 1e9;
    else
        mismatch(key, text, "a duration (ns, us, ms or s)");
    const double v = parse_number(key, num, "a duration") * mult;
    if (v < 0 || v > 9.2e18)
        mismatch(key, text, "a non-negative duration");
    return static_cast<SimTime>(std::llround(v));
}

bool parse_bool(const std::string& key, const std::string& text) {
    const std::string l = lower(text);
    if (l == "true" || l == "1" || l == "on" || l == "yes")
        return true;
    if (l == "false" || l == "0" || l == "off" || l == "no")
        return false;
    mismatch(key, text, "a boolean");
}

Policy parse_policy(const std::string& key, const std::string& text) {
    const std::string l = lower(text);
    if (l == "srpt")
        return Policy::Srpt;
    if (l == "rr" || l == "round_robin")
        return Policy::RoundRobin;
    mismatch(key, text, "'srpt' or 'rr'");
}

std::string policy_name(Policy p) {
    return p == Policy::Srpt ? "srpt" : "rr";
}

std::string traffic_name(TrafficConfig t) {
    switch (t) {
    case TrafficConfig::Balanced:
        return "balanced";
    case TrafficConfig::Core:
        return "core";
    case TrafficConfig::Incast:
        return "incast";
    }
    return "?";
}

std::string dist_name(SizeDistKind k) {
    switch (k) {
    case SizeDistKind::Fixed:
        return "fixed";
    case SizeDistKind::Exponential:
        return "exponential";
    case SizeDistKind::Lognormal:
        return "lognormal";
    case SizeDistKind::Bimodal:
        return "bimodal";
    case SizeDistKind::Empirical:
        return "empirical";
    }
    return "?";
}

std::string size_text(std::uint64_t v) {
    return v == kInfiniteBytes ? "inf" : std::to_string(v);
}

struct Key {
    std::function<void(RunConfig&, const std::string& key, const std::string& value)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <class F>
Key size_key(F field, bool allow_inf = false) {
    return {[field, allow_inf](RunConfig& c, const std::string& k, const std::string& v) {
                field(c) = parse_size(k, v, c.protocol.bdp_bytes, allow_inf);
            },
            [field](const RunConfig& c) { return size_text(field(const_cast<RunConfig&>(c))); }};
}

template <class F>
Key time_key(F field) {
    return {[field](RunConfig& c, const std::string& k, const std::string& v) { field(c) = parse_time(k, v); },
            [field](const RunConfig& c) { return std::to_string(field(const_cast<RunConfig&>(c))); }};
}

template <class F>
Key double_key(F field) {
    return {[field](RunConfig& c, const std::string& k, const std::string& v) {
                field(c) = parse_number(k, v, "a number");
            },
            [field](const RunConfig& c) { return format_double(field(const_cast<RunConfig&>(c))); }};
}

template <class T, class F>
Key uint_key(F field) {
    return {[field](RunConfig& c, const std::string& k, const std::string& v) {
                const std::uint64_t x = parse_uint(k, v);
                if (x > std::numeric_limits<T>::max())
                    mismatch(k, v, "a smaller integer");
                field(c) = static_cast<T>(x);
            },
            [field](const RunConfig& c) { return std::to_string(field(const_cast<RunConfig&>(c))); }};
}

template <class F>
Key string_key(F field) {
    return {[field](RunConfig& c, const std::string&, const std::string& v) { field(c) = v; },
            [field](const RunConfig& c) { return field(const_cast<RunConfig&>(c)); }};
}

// Ordered list of (key, handler); emission follows this order.
const std::vector<std::pair<std::string, Key>>& key_table() {
    static const std::vector<std::pair<std::string, Key>> table = [] {
        std::vector<std::pair<std::string, Key>> t;
        // topology
        t.emplace_back("hosts_per_tor", uint_key<std::uint32_t>([](RunConfig& c) -> auto& { return c.topology.hosts_per_tor; }));
        t.emplace_back("num_tors", uint_key<std::uint32_t>([](RunConfig& c) -> auto& { return c.topology.num_tors; }));
        t.emplace_back("num_spines", uint_key<std::uint32_t>([](RunConfig& c) -> auto& { return c.topology.num_spines; }));
        t.emplace_back("host_link_gbps", double_key([](RunConfig& c) -> auto& { return c.topology.host_link_gbps; }));
        t.emplace_back("spine_link_gbps", double_key([](RunConfig& c) -> auto& { return c.topology.spine_link_gbps; }));
        t.emplace_back("header_bytes", uint_key<std::uint32_t>([](RunConfig& c) -> auto& { return c.topology.header_bytes; }));
        t.emplace_back("rtt_intra_ns", time_key([](RunConfig& c) -> auto& { return c.topology.rtt_intra_ns; }));
        t.emplace_back("rtt_inter_ns", time_key([](RunConfig& c) -> auto& { return c.topology.rtt_inter_ns; }));
        t.emplace_back("mss_bytes",
                       Key{[](RunConfig& c, const std::string& k, const std::string& v) {
                               const std::uint64_t x = parse_size(k, v, c.protocol.bdp_bytes, false);
                               if (x == 0 || x > 1'000'000)
                                   mismatch(k, v, "an MSS in [1, 1000000]");
                               c.topology.mss_bytes = static_cast<std::uint32_t>(x);
                               c.protocol.mss_bytes = static_cast<std::uint32_t>(x);
                           },
                           [](const RunConfig& c) { return std::to_string(c.protocol.mss_bytes); }});
        t.emplace_back("priority_lanes",
                       Key{[](RunConfig& c, const std::string& k, const std::string& v) {
                               const std::uint64_t x = parse_uint(k, v);
                               if (x != 1 && x != 2)
                                   mismatch(k, v, "1 or 2");
                               c.topology.priority_lanes = static_cast<std::uint32_t>(x);
                               c.protocol.priority_lanes = x == 2;
                           },
                           [](const RunConfig& c) { return std::to_string(c.topology.priority_lanes); }});
        // protocol
        t.emplace_back("bdp_bytes", size_key([](RunConfig& c) -> auto& { return c.protocol.bdp_bytes; }));
        t.emplace_back("global_bucket_bytes", size_key([](RunConfig& c) -> auto& { return c.protocol.global_bucket_bytes; }));
        t.emplace_back("sender_threshold_bytes",
                       size_key([](RunConfig& c) -> auto& { return c.protocol.sender_threshold_bytes; }, true));
        t.emplace_back("net_threshold_bytes",
                       Key{[](RunConfig& c, const std::string& k, const std::string& v) {
                               const std::uint64_t x = parse_size(k, v, c.protocol.bdp_bytes, true);
                               c.protocol.net_threshold_bytes = x;
                               c.topology.ecn_threshold_bytes = x;
                           },
                           [](const RunConfig& c) { return size_text(c.protocol.net_threshold_bytes); }});
        t.emplace_back("unsched_threshold_bytes",
                       size_key([](RunConfig& c) -> auto& { return c.protocol.unsched_threshold_bytes; }, true));
        t.emplace_back("aimd_gain", double_key([](RunConfig& c) -> auto& { return c.protocol.aimd_gain; }));
        t.emplace_back("pacer_rate_fraction", double_key([](RunConfig& c) -> auto& { return c.protocol.pacer_rate_fraction; }));
        t.emplace_back("sender_fair_share_fraction",
                       double_key([](RunConfig& c) -> auto& { return c.protocol.sender_fair_share_fraction; }));
        t.emplace_back("loss_timeout_ns", time_key([](RunConfig& c) -> auto& { return c.protocol.loss_timeout_ns; }));
        t.emplace_back("receiver_policy",
                       Key{[](RunConfig& c, const std::string& k, const std::string& v) {
                               c.protocol.receiver_policy = parse_policy(k, v);
                           },
                           [](const RunConfig& c) { return policy_name(c.protocol.receiver_policy); }});
        t.emplace_back("sender_policy",
                       Key{[](RunConfig& c, const std::string& k, const std::string& v) {
                               c.protocol.sender_policy = parse_policy(k, v);
                           },
                           [](const RunConfig& c) { return policy_name(c.protocol.sender_policy); }});
        // workload
        t.emplace_back("traffic_config",
                       Key{[](RunConfig& c, const std::string& k, const std::string& v) {
                               const std::string l = lower(v);
                               if (l == "balanced")
                                   c.traffic = TrafficConfig::Balanced;
                               else if (l == "core")
                                   c.traffic = TrafficConfig::Core;
                               else if (l == "incast")
                                   c.traffic = TrafficConfig::Incast;
                               else
                                   mismatch(k, v, "'balanced', 'core' or 'incast'");
                           },
                           [](const RunConfig& c) { return traffic_name(c.traffic); }});
        t.emplace_back("background_traffic",
                       Key{[](RunConfig& c, const std::string& k, const std::string& v) {
                               c.background_traffic = parse_bool(k, v);
                           },
                           [](const RunConfig& c) { return std::string(c.background_traffic ? "true" : "false"); }});
        t.emplace_back("size_dist",
                       Key{[](RunConfig& c, const std::string& k, const std::string& v) {
                               const std::string l = lower(v);
                               WorkloadSpec& w = c.workload;
                               // Presets: lognormal stand-ins matched to published mean sizes.
                               if (l == "wka" || l == "wkb" || l == "wkc") {
                                   w.size_dist = SizeDistKind::Lognormal;
                                   w.mean_size_bytes = l == "wka" ? 3'000 : l == "wkb" ? 125'000 : 2'500'000;
                               } else if (l == "fixed") {
                                   w.size_dist = SizeDistKind::Fixed;
                               } else if (l == "exponential") {
                                   w.size_dist = SizeDistKind::Exponential;
                               } else if (l == "lognormal") {
                                   w.size_dist = SizeDistKind::Lognormal;
                               } else if (l == "bimodal") {
                                   w.size_dist = SizeDistKind::Bimodal;
                               } else if (l == "empirical") {
                                   w.size_dist = SizeDistKind::Empirical;
                               } else {
                                   mismatch(k, v, "fixed, exponential, lognormal, bimodal, empirical, wka, wkb or wkc");
                               }
                           },
                           [](const RunConfig& c) { return dist_name(c.workload.size_dist); }});
        t.emplace_back("mean_size_bytes", size_key([](RunConfig& c) -> auto& { return c.workload.mean_size_bytes; }));
        t.emplace_back("lognormal_sigma", double_key([](RunConfig& c) -> auto& { return c.workload.lognormal_sigma; }));
        t.emplace_back("bimodal_small_bytes", size_key([](RunConfig& c) -> auto& { return c.workload.bimodal_small_bytes; }));
        t.emplace_back("bimodal_small_prob", double_key([](RunConfig& c) -> auto& { return c.workload.bimodal_small_prob; }));
        t.emplace_back("cdf_file", string_key([](RunConfig& c) -> auto& { return c.workload.cdf_file; }));
        t.emplace_back("flows_file", string_key([](RunConfig& c) -> auto& { return c.workload.flows_file; }));
        t.emplace_back("applied_load_fraction",
                       double_key([](RunConfig& c) -> auto& { return c.workload.applied_load_fraction; }));
        t.emplace_back("duration_ns", time_key([](RunConfig& c) -> auto& { return c.workload.duration_ns; }));
        t.emplace_back("warmup_ns", time_key([](RunConfig& c) -> auto& { return c.workload.warmup_ns; }));
        // incast
        t.emplace_back("incast_senders", uint_key<std::uint32_t>([](RunConfig& c) -> auto& { return c.incast.num_senders; }));
        t.emplace_back("incast_burst_bytes", size_key([](RunConfig& c) -> auto& { return c.incast.burst_size_bytes; }));
        t.emplace_back("incast_load_fraction", double_key([](RunConfig& c) -> auto& { return c.incast.load_fraction; }));
        t.emplace_back("incast_period_ns", time_key([](RunConfig& c) -> auto& { return c.incast.period_ns; }));
        // run
        t.emplace_back("seed", uint_key<std::uint64_t>([](RunConfig& c) -> auto& { return c.seed; }));
        t.emplace_back("output_dir", string_key([](RunConfig& c) -> auto& { return c.output_dir; }));
        t.emplace_back("trace",
                       Key{[](RunConfig& c, const std::string& k, const std::string& v) { c.trace = parse_bool(k, v); },
                           [](const RunConfig& c) { return std::string(c.trace ? "true" : "false"); }});
        t.emplace_back("sample_interval_ns", time_key([](RunConfig& c) -> auto& { return c.sample_interval_ns; }));
        t.emplace_back("goodput_window_ns", time_key([](RunConfig& c) -> auto& { return c.goodput_window_ns; }));
        return t;
    }();
    return table;
}

const Key* find_key(const std::string& name) {
    for (const auto& [k, h] : key_table())
        if (k == name)
            return &h;
    return nullptr;
}

}  // namespace

std::string format_double(double v) {
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

TopologySpec RunConfig::effective_topology() const {
    TopologySpec t = topology;
    if (traffic == TrafficConfig::Core)
        t.spine_link_gbps = topology.spine_link_gbps / 2.0;
    return t;
}

double RunConfig::effective_load() const {
    return traffic == TrafficConfig::Core ? workload.applied_load_fraction / kCoreLoadDivisor
                                          : workload.applied_load_fraction;
}

void set_config_key(RunConfig& cfg, const std::string& key, const std::string& value) {
    const Key* k = find_key(key);
    if (k == nullptr)
        throw ConfigError(Kind::UnknownKey, "unknown key '" + key + "'");
    k->set(cfg, key, value);
}

void validate_config(const RunConfig& c) {
    auto invalid = [](const std::string& what) { throw ConfigError(Kind::Invalid, what); };
    try {
        c.effective_topology().validate();
        c.protocol.validate();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        invalid(e.what());
    }
    try {
        calibrate_delays(c.effective_topology());
    } catch (const std::exception& e) {
        invalid(e.what());
    }
    const WorkloadSpec& w = c.workload;
    if (!(w.applied_load_fraction > 0.0 && w.applied_load_fraction <= 1.0))
        invalid("applied_load_fraction must be in (0, 1]");
    if (w.duration_ns <= 0)
        invalid("duration_ns must be > 0");
    if (w.warmup_ns >= w.duration_ns)
        invalid("warmup_ns must be smaller than duration_ns");
    if (c.sample_interval_ns <= 0)
        invalid("sample_interval_ns must be > 0");
    if (c.goodput_window_ns <= 0)
        invalid("goodput_window_ns must be > 0");
    if (c.protocol.sender_threshold_bytes == 0)
        invalid("sender_threshold_bytes must be > 0 (use inf to disable)");
    if (c.protocol.unsched_threshold_bytes == kInfiniteBytes)
        invalid("unsched_threshold_bytes must be finite");

    const std::uint32_t hosts = c.topology.num_hosts();
    if (c.background_traffic || c.traffic == TrafficConfig::Incast) {
        if (hosts < 2)
            invalid("traffic needs at least two hosts");
    }
    if (c.background_traffic) {
        if (w.size_dist == SizeDistKind::Empirical && !w.cdf_file.empty() && !std::filesystem::exists(w.cdf_file))
            throw ConfigError(Kind::MissingFile, "cdf_file not found: " + w.cdf_file);
        try {
            SizeDistribution d(w);
        } catch (const std::exception& e) {
            invalid(e.what());
        }
    }
    if (!w.flows_file.empty()) {
        if (!std::filesystem::exists(w.flows_file))
            throw ConfigError(Kind::MissingFile, "flows_file not found: " + w.flows_file);
        try {
            for (const FlowLine& f : load_flows(w.flows_file))
                if (f.src >= hosts || f.dst >= hosts)
                    invalid("flows_file references a host outside the topology");
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            invalid(e.what());
        }
    }
    if (c.traffic == TrafficConfig::Incast) {
        if (c.incast.num_senders == 0 || c.incast.num_senders > hosts - 1)
            invalid("incast_senders must be in [1, hosts - 1]");
        if (c.incast.burst_size_bytes == 0)
            invalid("incast_burst_bytes must be > 0");
        if (!(c.incast.load_fraction > 0.0 && c.incast.load_fraction < 1.0))
            invalid("incast_load_fraction must be in (0, 1)");
    }
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
    struct Entry {
        int line;
        std::string key;
        std::string value;
    };
    std::vector<Entry> entries;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        if (trim(line).empty())
            continue;
        const auto eq = line.find('=');
        const std::string where = origin + ":" + std::to_string(lineno);
        if (eq == std::string::npos)
            throw ConfigError(Kind::Syntax, where + ": expected 'key = value'");
        Entry e{lineno, trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1))};
        if (e.key.empty())
            throw ConfigError(Kind::Syntax, where + ": missing key");
        if (find_key(e.key) == nullptr)
            throw ConfigError(Kind::UnknownKey, where + ": unknown key '" + e.key + "'");
        if (!seen.insert(e.key).second)
            throw ConfigError(Kind::Syntax, where + ": duplicate key '" + e.key + "'");
        entries.push_back(std::move(e));
    }

    RunConfig cfg;
    // bdp_bytes first, so xBDP sizes resolve against it wherever it appears.
    std::stable_partition(entries.begin(), entries.end(), [](const Entry& e) { return e.key == "bdp_bytes"; });
    for (const Entry& e : entries) {
        try {
            set_config_key(cfg, e.key, e.value);
        } catch (const ConfigError& err) {
            throw ConfigError(err.kind(), origin + ":" + std::to_string(e.line) + ": " + err.what());
        }
    }
    try {
        validate_config(cfg);
    } catch (const ConfigError& err) {
        throw ConfigError(err.kind(), origin + ": " + err.what());
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError(Kind::MissingFile, "cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

std::string emit_config(const RunConfig& cfg) {
    std::string out;
    for (const auto& [k, h] : key_table())
        out += k + " = " + h.get(cfg) + "\n";
    return out;
}

const std::vector<std::string>& sweep_axes() {
    static const std::vector<std::string> axes{"global_bucket_bytes", "sender_threshold_bytes",
                                               "unsched_threshold_bytes", "applied_load_fraction", "priority_lanes"};
    return axes;
}

}  // namespace sirdsim
