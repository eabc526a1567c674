// Measurement plane: ideal latency and slowdown, goodput, ToR queuing,
// credit location, and the steady-state bucket oracle.
#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "sirdsim/fabric.hpp"
#include "sirdsim/host.hpp"
#include "sirdsim/protocol.hpp"

namespace sirdsim {

/// Size classes A..D: [0, MSS), [MSS, BDP), [BDP, 8 BDP), [8 BDP, inf).
char size_class(std::uint64_t size, std::uint64_t mss, std::uint64_t bdp);

/// Minimum store-and-forward delivery time of a message over `path` on an
/// idle fabric. Packets leave the source back to back in offset order. When
/// `sprayed`, each packet crosses the interior hops without waiting on its
/// siblings, so a short tail may overtake; the final hop drains packets in
/// arrival order. Otherwise every hop is a FIFO.
SimTime ideal_latency_ns(std::uint64_t size, const std::vector<Hop>& path, std::uint32_t mss, std::uint32_t header,
                         bool sprayed = true);

/// k congested senders, each fanned out to f receivers.
struct CongestedSenderScenario {
    std::uint32_t k = 0;
    std::uint32_t f = 2;
};

/// Sum over the k congested senders of the credit each parks at the probe
/// receiver, plus one BDP for the pipe. Throws std::invalid_argument unless
/// f >= 2 and f > k.
double steady_state_oracle(const CongestedSenderScenario& sc, const ProtocolParams& params);

/// Nearest-rank percentile (p in (0, 100]) of unsorted values.
double percentile(std::vector<double> values, double p);

struct MessageRecord {
    MsgId id = 0;
    HostId src = 0;
    HostId dst = 0;
    std::uint64_t size = 0;
    SimTime created_ns = 0;
    std::optional<SimTime> completed_ns;
    SimTime ideal_ns = 0;
    bool incast = false;
    char cls = 'A';

    double slowdown() const;
};

struct Summary {
    double max_goodput_gbps = 0;
    double mean_tor_queue_bytes = 0;
    double max_tor_queue_bytes = 0;
    double p50_slowdown = 0;
    double p99_slowdown = 0;
    std::array<double, 4> p50_by_class{};
    std::array<double, 4> p99_by_class{};
    std::uint64_t messages_total = 0;
    std::uint64_t messages_completed = 0;
};

struct QueueRow {
    SimTime time;
    NodeId node;
    PortIndex port;
    int lane;  // 0, 1, or -1 for a peak row
    std::uint64_t bytes;
};

struct GoodputRow {
    SimTime window_end;
    HostId host;
    double gbps;
};

struct CollectorOptions {
    SimTime warmup_ns = 0;
    SimTime goodput_window_ns = 10 * kNsPerUs;
    bool exclude_incast_from_slowdown = false;
    bool record_queue_samples = true;
};

/// Observes a running cluster and accumulates every metric.
class MetricsCollector final : public ProtocolObserver, public QueueListener {
public:
    MetricsCollector(SirdCluster& cluster, CollectorOptions opts);

    void on_message_created(MsgId id, HostId src, HostId dst, std::uint64_t size, bool incast);

    void on_payload(HostId receiver, HostId sender, MsgId msg, std::uint64_t bytes, SimTime now) override;
    void on_message_complete(HostId receiver, HostId sender, MsgId msg, SimTime now) override;
    void on_queue_change(NodeId node, PortIndex port, std::int64_t delta, SimTime now) override;

    /// Periodic samplers; the experiment calls them on a fixed grid.
    void sample_queues(SimTime now);
    void sample_credit(SimTime now);
    /// Checks packet conservation against an independent count.
    void check_packet_conservation() const;

    /// Closes open time integrals at `end`.
    void finish(SimTime end);
    Summary summary() const;

    const std::vector<MessageRecord>& messages() const { return messages_; }
    const std::vector<QueueRow>& queue_rows() const { return queue_rows_; }
    const std::vector<CreditSnapshot>& credit_rows() const { return credit_rows_; }
    std::vector<GoodputRow> goodput_rows() const;

    /// Unique payload bytes that reached `host` within [from, to).
    std::uint64_t payload_between(HostId host, SimTime from, SimTime to) const;
    /// Exact peak of the summed queue across a ToR's ports after warmup.
    std::uint64_t tor_peak_bytes(std::uint32_t tor) const { return tor_peak_[tor]; }
    /// Largest sampled total of any single switch port, for integrity checks.
    std::uint64_t max_sampled_port_bytes() const { return max_sampled_port_; }

private:
    void advance_tor(std::uint32_t tor, SimTime now);

    SirdCluster& cluster_;
    Fabric& fabric_;
    CollectorOptions opts_;
    std::vector<MessageRecord> messages_;
    std::vector<std::vector<std::uint64_t>> goodput_bins_;  // [host][window]
    std::vector<std::uint64_t> payload_after_warmup_;

    std::vector<std::uint64_t> tor_bytes_;
    std::vector<std::uint64_t> tor_peak_;
    std::vector<long double> tor_integral_;
    std::vector<SimTime> tor_last_;
    SimTime end_ = 0;

    std::vector<QueueRow> queue_rows_;
    std::uint64_t max_sampled_port_ = 0;
    std::vector<CreditSnapshot> credit_rows_;
};

}  // namespace sirdsim
