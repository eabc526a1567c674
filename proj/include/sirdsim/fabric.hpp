// Two-tier leaf-spine fabric with store-and-forward links, infinite two-lane
// output queues, ECN marking at enqueue and per-packet uplink spraying.
#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sirdsim/engine.hpp"
#include "sirdsim/packet.hpp"
#include "sirdsim/rng.hpp"

namespace sirdsim {

using NodeId = std::uint32_t;
using PortIndex = std::uint32_t;

class TopologyError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct TopologySpec {
    std::uint32_t hosts_per_tor = 16;
    std::uint32_t num_tors = 9;
    std::uint32_t num_spines = 4;
    double host_link_gbps = 100.0;
    double spine_link_gbps = 400.0;
    std::uint32_t mss_bytes = 9000;
    std::uint32_t header_bytes = 100;
    // Unloaded RTT of an MSS DATA packet plus a header-only reply.
    SimTime rtt_intra_ns = 5500;
    SimTime rtt_inter_ns = 7500;
    std::uint64_t ecn_threshold_bytes = 125'000;
    std::uint32_t priority_lanes = 2;

    std::uint32_t num_hosts() const { return hosts_per_tor * num_tors; }
    void validate() const;

    bool operator==(const TopologySpec&) const = default;
};

/// One-way propagation delays solved from the RTT targets.
struct LinkDelays {
    SimTime host_prop_ns = 0;
    SimTime tor_spine_prop_ns = 0;
};

std::int64_t gbps_to_bps(double gbps);
/// Serialization time, rounded up to whole nanoseconds.
SimTime serialization_ns(std::uint64_t wire_bytes, std::int64_t rate_bps);
LinkDelays calibrate_delays(const TopologySpec& spec);

/// FIFO-per-lane output queue with strict priority between lanes.
class PortQueue {
public:
    static constexpr std::size_t kLanes = 2;

    PortQueue(std::uint64_t ecn_threshold_bytes, std::uint32_t header_bytes)
        : ecn_threshold_(ecn_threshold_bytes), header_bytes_(header_bytes) {}

    /// Appends to the packet's lane. DATA packets are CE-marked when the
    /// total queued bytes before insertion reach the threshold.
    void enqueue_and_mark(Packet& pkt, std::size_t lane, SimTime now);
    std::optional<Packet> dequeue();

    bool empty() const { return lanes_[0].empty() && lanes_[1].empty(); }
    std::uint64_t bytes(std::size_t lane) const { return bytes_[lane]; }
    std::uint64_t total_bytes() const { return bytes_[0] + bytes_[1]; }
    std::size_t packets(std::size_t lane) const { return lanes_[lane].size(); }
    std::uint64_t scheduled_payload_bytes() const { return sched_payload_; }

    std::uint64_t peak_total_bytes() const { return peak_total_; }
    SimTime peak_time() const { return peak_time_; }
    std::uint64_t peak_scheduled_payload_bytes() const { return peak_sched_payload_; }
    std::uint64_t ecn_threshold() const { return ecn_threshold_; }

private:
    std::uint64_t ecn_threshold_;
    std::uint32_t header_bytes_;
    std::array<std::deque<Packet>, kLanes> lanes_;
    std::array<std::uint64_t, kLanes> bytes_{};
    std::uint64_t sched_payload_ = 0;
    std::uint64_t peak_total_ = 0;
    SimTime peak_time_ = 0;
    std::uint64_t peak_sched_payload_ = 0;
};

/// A host-side transport: the fabric pulls from it when the uplink is idle and
/// hands it packets addressed to its host.
class Endpoint {
public:
    virtual ~Endpoint() = default;
    virtual std::optional<Packet> pull_next() = 0;
    virtual void deliver(const Packet& pkt) = 0;
};

class QueueListener {
public:
    virtual ~QueueListener() = default;
    virtual void on_queue_change(NodeId node, PortIndex port, std::int64_t delta_bytes, SimTime now) = 0;
};

/// One hop of a host-to-host path.
struct Hop {
    std::int64_t rate_bps;
    SimTime prop_ns;
};

class Fabric {
public:
    enum class NodeKind { Host, Tor, Spine };

    Fabric(Simulator& sim, const TopologySpec& spec, std::uint64_t seed);
    Fabric(const Fabric&) = delete;
    Fabric& operator=(const Fabric&) = delete;

    const TopologySpec& spec() const { return spec_; }
    const LinkDelays& delays() const { return delays_; }
    std::uint32_t num_hosts() const { return spec_.num_hosts(); }
    std::uint32_t num_nodes() const { return static_cast<std::uint32_t>(ports_.size()); }
    std::uint32_t num_switches() const { return spec_.num_tors + spec_.num_spines; }
    NodeKind kind(NodeId node) const;
    NodeId tor_node(std::uint32_t tor_index) const { return num_hosts() + tor_index; }
    NodeId spine_node(std::uint32_t spine_index) const { return num_hosts() + spec_.num_tors + spine_index; }
    std::uint32_t tor_index_of(HostId host) const { return host / spec_.hosts_per_tor; }
    bool same_rack(HostId a, HostId b) const { return tor_index_of(a) == tor_index_of(b); }
    std::uint32_t num_ports(NodeId node) const { return static_cast<std::uint32_t>(ports_[node].size()); }
    /// Port on the host's ToR leading down to the host.
    PortIndex tor_downlink_port(HostId host) const { return host % spec_.hosts_per_tor; }

    void attach(HostId host, Endpoint* endpoint);
    /// Tells the fabric the host has something to send; starts the uplink if idle.
    void host_ready(HostId host);

    /// Output port at `at` for the packet. Uplinks are sprayed uniformly at
    /// random, everything else is deterministic. Throws TopologyError for
    /// unroutable destinations.
    PortIndex next_hop(const Packet& pkt, NodeId at);

    /// Hops traversed from src to dst (uplink choice does not affect rates
    /// or delays).
    std::vector<Hop> path(HostId src, HostId dst) const;

    const PortQueue& queue(NodeId node, PortIndex port) const { return ports_[node][port].queue; }
    std::int64_t port_rate_bps(NodeId node, PortIndex port) const { return ports_[node][port].rate_bps; }
    NodeId port_peer(NodeId node, PortIndex port) const { return ports_[node][port].peer; }

    /// Test hook: returning true drops the packet at its first switch.
    void set_drop_hook(std::function<bool(const Packet&)> hook) { drop_hook_ = std::move(hook); }
    /// Observes every dropped packet.
    void set_drop_observer(std::function<void(const Packet&)> obs) { drop_observer_ = std::move(obs); }
    void set_queue_listener(QueueListener* listener) { queue_listener_ = listener; }

    std::uint64_t injected() const { return injected_; }
    std::uint64_t delivered() const { return delivered_; }
    std::uint64_t dropped() const { return dropped_; }
    std::uint64_t in_network() const { return injected_ - delivered_ - dropped_; }
    /// Packets currently being serialized or propagating on some link.
    std::uint64_t in_transit() const { return in_transit_; }
    /// Packets resident in switch output queues (walks every port).
    std::uint64_t queued_packets() const;
    std::uint64_t bytes_transmitted(NodeId node, PortIndex port) const { return ports_[node][port].tx_bytes; }

private:
    struct Port {
        NodeId peer;
        std::int64_t rate_bps;
        SimTime prop_ns;
        PortQueue queue;
        bool busy = false;
        std::uint64_t tx_bytes = 0;
    };

    void add_link(NodeId a, NodeId b, std::int64_t rate_bps, SimTime prop_ns);
    void on_arrival(NodeId node, const Packet& pkt);
    void start_switch_tx(NodeId node, PortIndex port);
    void start_host_tx(HostId host);
    void launch(NodeId node, PortIndex port, const Packet& pkt);
    void on_port_free(NodeId node, PortIndex port);

    Simulator& sim_;
    TopologySpec spec_;
    LinkDelays delays_;
    RngStream routing_rng_;
    std::vector<std::vector<Port>> ports_;
    std::vector<Endpoint*> endpoints_;
    std::function<bool(const Packet&)> drop_hook_;
    std::function<void(const Packet&)> drop_observer_;
    QueueListener* queue_listener_ = nullptr;
    std::uint64_t next_uid_ = 1;
    std::uint64_t injected_ = 0;
    std::uint64_t delivered_ = 0;
    std::uint64_t dropped_ = 0;
    std::uint64_t in_transit_ = 0;
};

}  // namespace sirdsim
