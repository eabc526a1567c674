#include "sirdsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "sirdsim/invariants.hpp"

namespace sirdsim {

char size_class(std::uint64_t size, std::uint64_t mss, std::uint64_t bdp) {
    if (size < mss)
        return 'A';
    if (size < bdp)
        return 'B';
    if (size < 8 * bdp)
        return 'C';
    return 'D';
}

SimTime ideal_latency_ns(std::uint64_t size, const std::vector<Hop>& path, std::uint32_t mss, std::uint32_t header,
                         bool sprayed) {
    if (path.empty() || size == 0)
        throw std::invalid_argument("ideal_latency_ns needs a path and a non-empty message");
    const auto m = static_cast<SimTime>((size - 1) / mss);  // full packets ahead of the tail
    const std::uint64_t full_wire = std::uint64_t{mss} + header;
    const std::uint64_t tail_wire = size - static_cast<std::uint64_t>(m) * mss + header;
    const Hop& first = path.front();
    const Hop& last = path.back();

    auto interior = [&](std::uint64_t wire) {
        SimTime t = first.prop_ns;
        for (std::size_t h = 1; h + 1 < path.size(); ++h)
            t += serialization_ns(wire, path[h].rate_bps) + path[h].prop_ns;
        return t;
    };
    const SimTime s0 = serialization_ns(full_wire, first.rate_bps);
    const SimTime tail_arrival = m * s0 + serialization_ns(tail_wire, first.rate_bps) + interior(tail_wire);
    if (path.size() == 1)
        return tail_arrival;

    if (!sprayed) {
        // Full packets stay evenly spaced at every hop: departures from a hop
        // are d0 + j*gap, gap growing to the slowest serialization so far.
        SimTime head = 0, gap = 0, tail = 0;
        for (const Hop& h : path) {
            const SimTime s_full = serialization_ns(full_wire, h.rate_bps);
            SimTime tail_dep = tail + serialization_ns(tail_wire, h.rate_bps);
            if (m > 0) {
                head += s_full;
                gap = std::max(gap, s_full);
                tail_dep = std::max(tail, head + (m - 1) * gap) + serialization_ns(tail_wire, h.rate_bps);
                head += h.prop_ns;
            }
            tail = tail_dep + h.prop_ns;
        }
        return tail;
    }

    // Full packet j reaches the last hop at a0 + j*s0. The last hop is a FIFO,
    // so completion is the max over packets of (arrival + work queued from it
    // onward); within a run of full packets that term is linear in j, so only
    // the run endpoints matter. The tail wins ties against a full packet.
    const SimTime a0 = s0 + interior(full_wire);
    const SimTime s_full = serialization_ns(full_wire, last.rate_bps);
    const SimTime s_tail = serialization_ns(tail_wire, last.rate_bps);
    SimTime ahead = 0;  // full packets that reach the last hop before the tail
    if (tail_arrival > a0)
        ahead = std::min(m, (tail_arrival - a0 + s0 - 1) / s0);
    SimTime done = tail_arrival + s_tail + (m - ahead) * s_full;
    auto consider = [&](SimTime j, bool tail_behind) {
        done = std::max(done, a0 + j * s0 + (m - j) * s_full + (tail_behind ? s_tail : 0));
    };
    if (ahead > 0) {
        consider(0, true);
        consider(ahead - 1, true);
    }
    if (ahead < m) {
        consider(ahead, false);
        consider(m - 1, false);
    }
    return done + last.prop_ns;
}

double steady_state_oracle(const CongestedSenderScenario& sc, const ProtocolParams& params) {
    if (sc.f < 2 || sc.f <= sc.k)
        throw std::invalid_argument("congested-sender scenario needs f >= 2 and f > k");
    if (params.sender_threshold_bytes == kInfiniteBytes)
        return sc.k == 0 ? static_cast<double>(params.bdp_bytes) : std::numeric_limits<double>::infinity();
    double sum = static_cast<double>(params.bdp_bytes);
    for (std::uint32_t i = 0; i < sc.k; ++i)
        sum += static_cast<double>(params.sender_threshold_bytes) / sc.f;
    return sum;
}

double percentile(std::vector<double> values, double p) {
    if (values.empty())
        return std::numeric_limits<double>::quiet_NaN();
    if (!(p > 0.0 && p <= 100.0))
        throw std::invalid_argument("percentile p must be in (0, 100]");
    std::sort(values.begin(), values.end());
    auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

double MessageRecord::slowdown() const {
    if (!completed_ns)
        return std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(*completed_ns - created_ns) / static_cast<double>(ideal_ns);
}

// ---------------------------------------------------------------------------

MetricsCollector::MetricsCollector(SirdCluster& cluster, CollectorOptions opts)
    : cluster_(cluster), fabric_(cluster.fabric()), opts_(opts) {
    if (opts_.goodput_window_ns <= 0)
        throw std::invalid_argument("goodput window must be > 0");
    const std::uint32_t hosts = fabric_.num_hosts();
    const std::uint32_t tors = fabric_.spec().num_tors;
    goodput_bins_.resize(hosts);
    payload_after_warmup_.assign(hosts, 0);
    tor_bytes_.assign(tors, 0);
    tor_peak_.assign(tors, 0);
    tor_integral_.assign(tors, 0.0L);
    tor_last_.assign(tors, opts_.warmup_ns);
    cluster_.set_observer(this);
    fabric_.set_queue_listener(this);
}

void MetricsCollector::on_message_created(MsgId id, HostId src, HostId dst, std::uint64_t size, bool incast) {
    require(id == messages_.size(), "message ids must be dense and increasing");
    const TopologySpec& spec = fabric_.spec();
    MessageRecord r;
    r.id = id;
    r.src = src;
    r.dst = dst;
    r.size = size;
    r.created_ns = cluster_.sim().now();
    const bool sprayed = spec.num_spines > 1 && !fabric_.same_rack(src, dst);
    r.ideal_ns = ideal_latency_ns(size, fabric_.path(src, dst), spec.mss_bytes, spec.header_bytes, sprayed);
    r.incast = incast;
    r.cls = size_class(size, spec.mss_bytes, cluster_.params().bdp_bytes);
    messages_.push_back(r);
}

void MetricsCollector::on_payload(HostId receiver, HostId, MsgId, std::uint64_t bytes, SimTime now) {
    auto& bins = goodput_bins_[receiver];
    const auto w = static_cast<std::size_t>(now / opts_.goodput_window_ns);
    if (bins.size() <= w)
        bins.resize(w + 1, 0);
    bins[w] += bytes;
    if (now >= opts_.warmup_ns)
        payload_after_warmup_[receiver] += bytes;
}

void MetricsCollector::on_message_complete(HostId, HostId, MsgId msg, SimTime now) {
    require(msg < messages_.size(), "completion for an unknown message");
    MessageRecord& r = messages_[msg];
    require(!r.completed_ns.has_value(), "message completed twice");
    r.completed_ns = now;
    if (now - r.created_ns < r.ideal_ns)
        throw InvariantViolation("message " + std::to_string(msg) + " (" + std::to_string(r.size) + " B, " +
                                 std::to_string(r.src) + "->" + std::to_string(r.dst) + ") finished in " +
                                 std::to_string(now - r.created_ns) + " ns, below its ideal " +
                                 std::to_string(r.ideal_ns) + " ns");
}

void MetricsCollector::advance_tor(std::uint32_t tor, SimTime now) {
    if (now > tor_last_[tor]) {
        tor_integral_[tor] += static_cast<long double>(tor_bytes_[tor]) * static_cast<long double>(now - tor_last_[tor]);
        tor_last_[tor] = now;
    }
}

void MetricsCollector::on_queue_change(NodeId node, PortIndex, std::int64_t delta, SimTime now) {
    if (fabric_.kind(node) != Fabric::NodeKind::Tor)
        return;
    const std::uint32_t tor = node - fabric_.num_hosts();
    advance_tor(tor, now);
    tor_bytes_[tor] = static_cast<std::uint64_t>(static_cast<std::int64_t>(tor_bytes_[tor]) + delta);
    if (now >= opts_.warmup_ns)
        tor_peak_[tor] = std::max(tor_peak_[tor], tor_bytes_[tor]);
}

void MetricsCollector::sample_queues(SimTime now) {
    for (NodeId node = fabric_.num_hosts(); node < fabric_.num_nodes(); ++node) {
        for (PortIndex port = 0; port < fabric_.num_ports(node); ++port) {
            const PortQueue& q = fabric_.queue(node, port);
            max_sampled_port_ = std::max(max_sampled_port_, q.total_bytes());
            if (!opts_.record_queue_samples)
                continue;
            for (int lane = 0; lane < 2; ++lane)
                if (q.bytes(lane) > 0)
                    queue_rows_.push_back({now, node, port, lane, q.bytes(lane)});
        }
    }
}

void MetricsCollector::sample_credit(SimTime now) {
    CreditSnapshot s = cluster_.credit_snapshot();
    s.time = now;
    credit_rows_.push_back(s);
}

void MetricsCollector::check_packet_conservation() const {
    require(fabric_.injected() == fabric_.delivered() + fabric_.dropped() + fabric_.in_transit() + fabric_.queued_packets(),
            "packet conservation violated");
}

void MetricsCollector::finish(SimTime end) {
    end_ = end;
    for (std::uint32_t t = 0; t < tor_bytes_.size(); ++t)
        advance_tor(t, end);
    if (!opts_.record_queue_samples)
        return;
    for (NodeId node = fabric_.num_hosts(); node < fabric_.num_nodes(); ++node) {
        for (PortIndex port = 0; port < fabric_.num_ports(node); ++port) {
            const PortQueue& q = fabric_.queue(node, port);
            if (q.peak_total_bytes() > 0)
                queue_rows_.push_back({q.peak_time(), node, port, -1, q.peak_total_bytes()});
        }
    }
}

std::uint64_t MetricsCollector::payload_between(HostId host, SimTime from, SimTime to) const {
    // Resolution is one goodput window.
    const auto& bins = goodput_bins_.at(host);
    std::uint64_t sum = 0;
    for (std::size_t w = 0; w < bins.size(); ++w) {
        const SimTime start = static_cast<SimTime>(w) * opts_.goodput_window_ns;
        if (start >= from && start < to)
            sum += bins[w];
    }
    return sum;
}

std::vector<GoodputRow> MetricsCollector::goodput_rows() const {
    std::vector<GoodputRow> rows;
    const auto windows = static_cast<std::size_t>(end_ / opts_.goodput_window_ns);
    const double bits_per_window_to_gbps = 8.0 / static_cast<double>(opts_.goodput_window_ns);
    for (std::size_t w = 0; w < windows; ++w) {
        const SimTime window_end = static_cast<SimTime>(w + 1) * opts_.goodput_window_ns;
        for (HostId h = 0; h < goodput_bins_.size(); ++h) {
            const std::uint64_t bytes = w < goodput_bins_[h].size() ? goodput_bins_[h][w] : 0;
            rows.push_back({window_end, h, static_cast<double>(bytes) * bits_per_window_to_gbps});
        }
    }
    return rows;
}

Summary MetricsCollector::summary() const {
    Summary s;
    const SimTime span = end_ - opts_.warmup_ns;
    if (span > 0) {
        std::uint64_t total = 0;
        for (std::uint64_t b : payload_after_warmup_)
            total += b;
        s.max_goodput_gbps = static_cast<double>(total) * 8.0 /
                             (static_cast<double>(span) * static_cast<double>(payload_after_warmup_.size()));
        long double integral = 0;
        for (long double v : tor_integral_)
            integral += v;
        s.mean_tor_queue_bytes = static_cast<double>(integral / (static_cast<long double>(span) * tor_integral_.size()));
    }
    for (std::uint64_t p : tor_peak_)
        s.max_tor_queue_bytes = std::max(s.max_tor_queue_bytes, static_cast<double>(p));

    std::vector<double> all;
    std::array<std::vector<double>, 4> by_class;
    for (const MessageRecord& r : messages_) {
        if (!r.completed_ns || r.created_ns < opts_.warmup_ns)
            continue;
        if (r.incast && opts_.exclude_incast_from_slowdown)
            continue;
        all.push_back(r.slowdown());
        by_class[r.cls - 'A'].push_back(r.slowdown());
    }
    s.p50_slowdown = percentile(all, 50);
    s.p99_slowdown = percentile(all, 99);
    for (std::size_t c = 0; c < 4; ++c) {
        s.p50_by_class[c] = percentile(by_class[c], 50);
        s.p99_by_class[c] = percentile(by_class[c], 99);
    }
    s.messages_total = messages_.size();
    s.messages_completed = static_cast<std::uint64_t>(
        std::count_if(messages_.begin(), messages_.end(), [](const MessageRecord& r) { return r.completed_ns.has_value(); }));
    return s;
}

}  // namespace sirdsim
