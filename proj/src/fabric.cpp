#include "sirdsim/fabric.hpp"

#include <cmath>
#include <string>

namespace sirdsim {

namespace {

std::string err(const char* what, double value) {
    return std::string(what) + " (got " + std::to_string(value) + ")";
}

SimTime div_round(SimTime num, SimTime den) {
    return num >= 0 ? (num + den / 2) / den : -((-num + den / 2) / den);
}

}  // namespace

void TopologySpec::validate() const {
    if (hosts_per_tor == 0)
        throw TopologyError("hosts_per_tor must be >= 1");
    if (num_tors == 0)
        throw TopologyError("num_tors must be >= 1");
    if (num_tors > 1 && num_spines == 0)
        throw TopologyError("multi-rack topology needs at least one spine");
    if (!(host_link_gbps > 0))
        throw TopologyError(err("host_link_gbps must be > 0", host_link_gbps));
    if (num_spines > 0 && !(spine_link_gbps > 0))
        throw TopologyError(err("spine_link_gbps must be > 0", spine_link_gbps));
    if (mss_bytes == 0)
        throw TopologyError("mss_bytes must be >= 1");
    if (header_bytes == 0)
        throw TopologyError("header_bytes must be >= 1");
    if (priority_lanes < 1 || priority_lanes > 2)
        throw TopologyError(err("priority_lanes must be 1 or 2", priority_lanes));
    if (rtt_intra_ns <= 0 || rtt_inter_ns <= 0)
        throw TopologyError("RTT targets must be > 0");
}

std::int64_t gbps_to_bps(double gbps) {
    return static_cast<std::int64_t>(std::llround(gbps * 1e9));
}

SimTime serialization_ns(std::uint64_t wire_bytes, std::int64_t rate_bps) {
    const auto bits_ns = static_cast<__int128>(wire_bytes) * 8 * 1'000'000'000;
    return static_cast<SimTime>((bits_ns + rate_bps - 1) / rate_bps);
}

LinkDelays calibrate_delays(const TopologySpec& spec) {
    spec.validate();
    const std::int64_t host_bps = gbps_to_bps(spec.host_link_gbps);
    const std::uint64_t mss_wire = std::uint64_t{spec.mss_bytes} + spec.header_bytes;
    const std::uint64_t min_wire = spec.header_bytes;

    // Intra-rack: host->ToR->host for the MSS packet and for the reply.
    const SimTime intra_ser = 2 * serialization_ns(mss_wire, host_bps) + 2 * serialization_ns(min_wire, host_bps);
    LinkDelays d;
    d.host_prop_ns = div_round(spec.rtt_intra_ns - intra_ser, 4);
    if (d.host_prop_ns < 0)
        throw TopologyError("rtt_intra_ns is smaller than the serialization delays it must contain");

    if (spec.num_spines > 0) {
        const std::int64_t spine_bps = gbps_to_bps(spec.spine_link_gbps);
        const SimTime inter_ser = intra_ser + 2 * serialization_ns(mss_wire, spine_bps) +
                                  2 * serialization_ns(min_wire, spine_bps);
        d.tor_spine_prop_ns = div_round(spec.rtt_inter_ns - inter_ser - 4 * d.host_prop_ns, 4);
        if (d.tor_spine_prop_ns < 0)
            throw TopologyError("rtt_inter_ns is too small for the intra-rack calibration");
    }
    return d;
}

void PortQueue::enqueue_and_mark(Packet& pkt, std::size_t lane, SimTime now) {
    if (pkt.kind == PacketKind::Data && total_bytes() >= ecn_threshold_)
        pkt.ecn_ce = true;
    bytes_[lane] += pkt.wire_bytes(header_bytes_);
    if (pkt.is_scheduled_data())
        sched_payload_ += pkt.length;
    lanes_[lane].push_back(pkt);
    if (total_bytes() > peak_total_) {
        peak_total_ = total_bytes();
        peak_time_ = now;
    }
    if (sched_payload_ > peak_sched_payload_)
        peak_sched_payload_ = sched_payload_;
}

std::optional<Packet> PortQueue::dequeue() {
    for (std::size_t lane = 0; lane < kLanes; ++lane) {
        if (lanes_[lane].empty())
            continue;
        Packet pkt = lanes_[lane].front();
        lanes_[lane].pop_front();
        bytes_[lane] -= pkt.wire_bytes(header_bytes_);
        if (pkt.is_scheduled_data())
            sched_payload_ -= pkt.length;
        return pkt;
    }
    return std::nullopt;
}

Fabric::Fabric(Simulator& sim, const TopologySpec& spec, std::uint64_t seed)
    : sim_(sim), spec_(spec), delays_(calibrate_delays(spec)), routing_rng_(seed, "routing") {
    const std::uint32_t hosts = spec_.num_hosts();
    ports_.resize(hosts + spec_.num_tors + spec_.num_spines);
    endpoints_.assign(hosts, nullptr);

    const std::int64_t host_bps = gbps_to_bps(spec_.host_link_gbps);
    const std::int64_t spine_bps = spec_.num_spines > 0 ? gbps_to_bps(spec_.spine_link_gbps) : 0;

    for (HostId h = 0; h < hosts; ++h)
        add_link(h, tor_node(tor_index_of(h)), host_bps, delays_.host_prop_ns);
    for (std::uint32_t t = 0; t < spec_.num_tors; ++t) {
        for (std::uint32_t i = 0; i < spec_.hosts_per_tor; ++i)
            add_link(tor_node(t), t * spec_.hosts_per_tor + i, host_bps, delays_.host_prop_ns);
        for (std::uint32_t s = 0; s < spec_.num_spines; ++s)
            add_link(tor_node(t), spine_node(s), spine_bps, delays_.tor_spine_prop_ns);
    }
    for (std::uint32_t s = 0; s < spec_.num_spines; ++s)
        for (std::uint32_t t = 0; t < spec_.num_tors; ++t)
            add_link(spine_node(s), tor_node(t), spine_bps, delays_.tor_spine_prop_ns);
}

void Fabric::add_link(NodeId a, NodeId b, std::int64_t rate_bps, SimTime prop_ns) {
    ports_[a].push_back(Port{b, rate_bps, prop_ns, PortQueue(spec_.ecn_threshold_bytes, spec_.header_bytes)});
}

Fabric::NodeKind Fabric::kind(NodeId node) const {
    if (node < num_hosts())
        return NodeKind::Host;
    if (node < num_hosts() + spec_.num_tors)
        return NodeKind::Tor;
    return NodeKind::Spine;
}

void Fabric::attach(HostId host, Endpoint* endpoint) {
    endpoints_.at(host) = endpoint;
}

PortIndex Fabric::next_hop(const Packet& pkt, NodeId at) {
    if (pkt.dst >= num_hosts())
        throw TopologyError("unroutable destination host " + std::to_string(pkt.dst));
    switch (kind(at)) {
    case NodeKind::Host:
        return 0;
    case NodeKind::Tor: {
        const std::uint32_t tor = at - num_hosts();
        if (tor_index_of(pkt.dst) == tor)
            return tor_downlink_port(pkt.dst);
        if (spec_.num_spines == 0)
            throw TopologyError("no spine to reach host " + std::to_string(pkt.dst));
        return spec_.hosts_per_tor + static_cast<PortIndex>(routing_rng_.below(spec_.num_spines));
    }
    case NodeKind::Spine:
        return tor_index_of(pkt.dst);
    }
    throw TopologyError("unknown node");
}

std::vector<Hop> Fabric::path(HostId src, HostId dst) const {
    const std::int64_t host_bps = gbps_to_bps(spec_.host_link_gbps);
    if (same_rack(src, dst))
        return {Hop{host_bps, delays_.host_prop_ns}, Hop{host_bps, delays_.host_prop_ns}};
    const std::int64_t spine_bps = gbps_to_bps(spec_.spine_link_gbps);
    return {Hop{host_bps, delays_.host_prop_ns}, Hop{spine_bps, delays_.tor_spine_prop_ns},
            Hop{spine_bps, delays_.tor_spine_prop_ns}, Hop{host_bps, delays_.host_prop_ns}};
}

void Fabric::host_ready(HostId host) {
    if (!ports_[host][0].busy)
        start_host_tx(host);
}

void Fabric::start_host_tx(HostId host) {
    Endpoint* ep = endpoints_[host];
    if (ep == nullptr)
        return;
    std::optional<Packet> pkt = ep->pull_next();
    if (!pkt)
        return;
    pkt->uid = next_uid_++;
    ++injected_;
    launch(host, 0, *pkt);
}

void Fabric::launch(NodeId node, PortIndex port, const Packet& pkt) {
    Port& p = ports_[node][port];
    p.busy = true;
    const std::uint32_t wire = pkt.wire_bytes(spec_.header_bytes);
    p.tx_bytes += wire;
    ++in_transit_;
    const SimTime ser = serialization_ns(wire, p.rate_bps);
    const SimTime now = sim_.now();
    sim_.post(now + ser, [this, node, port] { on_port_free(node, port); });
    const NodeId peer = p.peer;
    sim_.post(now + ser + p.prop_ns, [this, peer, pkt] { on_arrival(peer, pkt); });
}

void Fabric::on_port_free(NodeId node, PortIndex port) {
    ports_[node][port].busy = false;
    if (kind(node) == NodeKind::Host)
        start_host_tx(node);
    else
        start_switch_tx(node, port);
}

void Fabric::start_switch_tx(NodeId node, PortIndex port) {
    Port& p = ports_[node][port];
    if (p.busy)
        return;
    std::optional<Packet> pkt = p.queue.dequeue();
    if (!pkt)
        return;
    if (queue_listener_ != nullptr)
        queue_listener_->on_queue_change(node, port, -static_cast<std::int64_t>(pkt->wire_bytes(spec_.header_bytes)),
                                         sim_.now());
    launch(node, port, *pkt);
}

void Fabric::on_arrival(NodeId node, const Packet& pkt) {
    --in_transit_;
    if (kind(node) == NodeKind::Host) {
        ++delivered_;
        if (Endpoint* ep = endpoints_[node])
            ep->deliver(pkt);
        return;
    }
    if (drop_hook_ && kind(node) == NodeKind::Tor && node == tor_node(tor_index_of(pkt.src)) && drop_hook_(pkt)) {
        ++dropped_;
        if (drop_observer_)
            drop_observer_(pkt);
        return;
    }
    const PortIndex port = next_hop(pkt, node);
    Packet copy = pkt;
    const std::size_t lane = spec_.priority_lanes == 1 ? 0 : std::min<std::size_t>(copy.priority, 1);
    ports_[node][port].queue.enqueue_and_mark(copy, lane, sim_.now());
    if (queue_listener_ != nullptr)
        queue_listener_->on_queue_change(node, port, copy.wire_bytes(spec_.header_bytes), sim_.now());
    start_switch_tx(node, port);
}

std::uint64_t Fabric::queued_packets() const {
    std::uint64_t n = 0;
    for (const auto& node_ports : ports_)
        for (const Port& p : node_ports)
            n += p.queue.packets(0) + p.queue.packets(1);
    return n;
}

std::string_view to_string(PacketKind kind) {
    switch (kind) {
    case PacketKind::Data:
        return "DATA";
    case PacketKind::Credit:
        return "CREDIT";
    case PacketKind::Resend:
        return "RESEND";
    }
    return "?";
}

}  // namespace sirdsim
