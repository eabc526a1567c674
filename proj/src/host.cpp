#include "sirdsim/host.hpp"

#include <algorithm>
#include <cmath>

#include "sirdsim/invariants.hpp"

namespace sirdsim {

SirdHost::SirdHost(SirdCluster& cluster, HostId id)
    : cluster_(cluster),
      id_(id),
      receiver_(cluster.params()),
      sender_(id, cluster.params()),
      downlink_bps_(cluster.fabric().port_rate_bps(id, 0)) {}

double SirdHost::pacer_interval_ns(std::uint64_t bytes) const {
    return static_cast<double>(bytes) * 8.0 * 1e9 /
           (cluster_.params().pacer_rate_fraction * static_cast<double>(downlink_bps_));
}

void SirdHost::push_control(const Packet& pkt) {
    control_.push_back(pkt);
    cluster_.fabric().host_ready(id_);
}

void SirdHost::start_message(MsgId id, HostId dst, std::uint64_t size) {
    sender_.start_message(id, dst, size);
    cluster_.fabric().host_ready(id_);
}

std::optional<Packet> SirdHost::pull_next() {
    if (!control_.empty()) {
        Packet p = control_.front();
        control_.pop_front();
        return p;
    }
    const std::uint64_t credit_before = sender_.total_credit();
    std::optional<Packet> p = sender_.next_data_packet();
    if (!p)
        return p;
    const std::uint64_t sthr = cluster_.params().sender_threshold_bytes;
    require(p->csn == (sthr != kInfiniteBytes && credit_before >= sthr),
            "csn bit differs from the sender's credit threshold test");
    if (p->is_scheduled_data()) {
        require(p->carries_credit == p->length, "scheduled DATA must carry exactly its payload in credit");
        cluster_.credit_in_flight_ += p->carries_credit;
    } else {
        require(p->carries_credit == 0, "unscheduled DATA or request carries credit");
    }
    return p;
}

void SirdHost::deliver(const Packet& pkt) {
    switch (pkt.kind) {
    case PacketKind::Credit: {
        require(pkt.length == 0 && pkt.carries_credit > 0, "malformed CREDIT packet");
        const ByteRange r{pkt.offset, pkt.offset + pkt.range_bytes};
        // Credit for a message the sender already retired is dropped along
        // with the receiver's release of the same grant.
        if (sender_.on_credit_packet(pkt.src, pkt.msg_id, r)) {
            cluster_.credit_in_flight_ -= pkt.carries_credit;
            cluster_.fabric().host_ready(id_);
        }
        break;
    }
    case PacketKind::Resend:
        sender_.on_resend(pkt.src, pkt.msg_id, {pkt.offset, pkt.offset + pkt.range_bytes});
        cluster_.fabric().host_ready(id_);
        break;
    case PacketKind::Data:
        on_data(pkt);
        break;
    }
}

void SirdHost::on_data(const Packet& pkt) {
    const SimTime now = cluster_.sim().now();
    const DataOutcome out = receiver_.on_data_packet(pkt, now);
    cluster_.credit_in_flight_ -= out.credit_returned + out.credit_released;
    if (pkt.length > 0 && !out.duplicate)
        cluster_.trace("data_rx", pkt.src, id_, pkt.msg_id, pkt.length, id_, pkt.src);
    if (out.new_bytes > 0 && cluster_.observer_ != nullptr)
        cluster_.observer_->on_payload(id_, pkt.src, pkt.msg_id, out.new_bytes, now);

    if (out.completed) {
        auto t = loss_timers_.find(pkt.msg_id);
        if (t != loss_timers_.end()) {
            cluster_.sim().cancel(t->second);
            loss_timers_.erase(t);
        }
        cluster_.trace("complete", pkt.src, id_, pkt.msg_id, pkt.msg_size, id_, pkt.src);
        // Completion is signalled to the sender out of band.
        const std::uint64_t released = cluster_.host(pkt.src).sender_.on_message_delivered(pkt.msg_id);
        cluster_.credit_in_flight_ += released;
        if (cluster_.observer_ != nullptr)
            cluster_.observer_->on_message_complete(id_, pkt.src, pkt.msg_id, now);
    } else if (receiver_.awaiting_data(pkt.msg_id)) {
        arm_loss_timer(pkt.msg_id);
    }
    if (!pkt.unscheduled || out.registered)
        wake_pacer();
}

void SirdHost::wake_pacer() {
    if (pacer_armed_)
        return;
    pacer_armed_ = true;
    const SimTime now = cluster_.sim().now();
    const SimTime at = std::max(now, static_cast<SimTime>(std::ceil(pacer_next_ns_)));
    cluster_.sim().post(at, [this] { pacer_tick(); });
}

void SirdHost::pacer_tick() {
    pacer_armed_ = false;
    std::optional<Grant> g = receiver_.credit_tick();
    if (!g)
        return;
    Simulator& sim = cluster_.sim();
    const SimTime now = sim.now();
    const std::uint64_t len = g->range.size();

    const SenderEntry* e = receiver_.sender_entry(g->sender);
    require(receiver_.consumed() <= cluster_.params().global_bucket_bytes, "grant exceeds the global bucket");
    require(e != nullptr && e->sb <= e->bucket(), "grant exceeds the per-sender bucket");

    Packet c;
    c.kind = PacketKind::Credit;
    c.src = id_;
    c.dst = g->sender;
    c.msg_id = g->msg;
    c.offset = g->range.begin;
    c.range_bytes = static_cast<std::uint32_t>(len);
    c.carries_credit = static_cast<std::uint32_t>(len);
    c.priority = cluster_.params().priority_lanes ? kLaneHigh : kLaneNormal;
    cluster_.credit_in_flight_ += len;
    ++cluster_.grants_;
    receiver_.note_grant_activity(g->msg, now);
    cluster_.trace("grant", id_, g->sender, g->msg, len, id_, g->sender);
    if (cluster_.observer_ != nullptr)
        cluster_.observer_->on_grant(id_, *g, now);
    push_control(c);
    arm_loss_timer(g->msg);

    pacer_next_ns_ = std::max(pacer_next_ns_, static_cast<double>(now)) + pacer_interval_ns(len);
    pacer_armed_ = true;
    sim.post(std::max(now, static_cast<SimTime>(std::ceil(pacer_next_ns_))), [this] { pacer_tick(); });
}

void SirdHost::arm_loss_timer(MsgId msg) {
    if (loss_timers_.count(msg) != 0 || !receiver_.has_message(msg))
        return;
    Simulator& sim = cluster_.sim();
    const SimTime at = std::max(sim.now(), receiver_.last_progress(msg) + cluster_.params().loss_timeout_ns);
    loss_timers_.emplace(msg, sim.schedule(at, [this, msg] { on_loss_timer(msg); }));
}

void SirdHost::on_loss_timer(MsgId msg) {
    loss_timers_.erase(msg);
    if (!receiver_.awaiting_data(msg))
        return;  // re-armed by the next grant
    const SimTime now = cluster_.sim().now();
    if (now - receiver_.last_progress(msg) < cluster_.params().loss_timeout_ns) {
        arm_loss_timer(msg);
        return;
    }
    const LossOutcome loss = receiver_.detect_loss_and_reclaim(msg, now);
    const HostId sender = cluster_.host_sender_of(id_, msg);
    if (loss.reclaimed > 0) {
        cluster_.credit_in_flight_ -= loss.reclaimed;
        ++cluster_.reclaim_events_;
        cluster_.reclaimed_bytes_ += loss.reclaimed;
        cluster_.trace("reclaim", id_, sender, msg, loss.reclaimed, id_, sender);
        if (cluster_.observer_ != nullptr)
            cluster_.observer_->on_reclaim(id_, msg, loss.reclaimed, now);
    }
    for (const ByteRange& r : loss.resend) {
        Packet p;
        p.kind = PacketKind::Resend;
        p.src = id_;
        p.dst = sender;
        p.msg_id = msg;
        p.offset = r.begin;
        p.range_bytes = static_cast<std::uint32_t>(r.size());
        p.priority = cluster_.params().priority_lanes ? kLaneHigh : kLaneNormal;
        ++cluster_.resend_requests_;
        cluster_.trace("resend_req", id_, sender, msg, r.size(), id_, sender);
        push_control(p);
    }
    arm_loss_timer(msg);
    wake_pacer();
}

// ---------------------------------------------------------------------------

SirdCluster::SirdCluster(Simulator& sim, Fabric& fabric, const ProtocolParams& params)
    : sim_(sim), fabric_(fabric), params_(params) {
    params_.validate();
    hosts_.reserve(fabric_.num_hosts());
    for (HostId h = 0; h < fabric_.num_hosts(); ++h) {
        hosts_.push_back(std::make_unique<SirdHost>(*this, h));
        fabric_.attach(h, hosts_.back().get());
    }
    fabric_.set_drop_observer([this](const Packet& p) { on_drop(p); });
}

void SirdCluster::start_message(MsgId id, HostId src, HostId dst, std::uint64_t size) {
    if (src == dst || src >= num_hosts() || dst >= num_hosts())
        throw std::invalid_argument("invalid message endpoints");
    if (size == 0)
        throw std::invalid_argument("message size must be > 0");
    hosts_[src]->start_message(id, dst, size);
}

void SirdCluster::set_trace(std::ostream* out) {
    trace_ = out;
    if (trace_ != nullptr)
        *trace_ << "time_ns,event_kind,src,dst,msg_id,bytes,b,sb_i\n";
}

void SirdCluster::trace(const char* kind, HostId src, HostId dst, MsgId msg, std::uint64_t bytes, HostId receiver,
                        HostId sender) {
    if (trace_ == nullptr)
        return;
    const ReceiverState& r = hosts_[receiver]->receiver();
    const SenderEntry* e = r.sender_entry(sender);
    *trace_ << sim_.now() << ',' << kind << ',' << src << ',' << dst << ',' << msg << ',' << bytes << ','
            << r.consumed() << ',' << (e != nullptr ? e->sb : 0) << '\n';
}

void SirdCluster::on_drop(const Packet& p) {
    const bool to_receiver = p.kind == PacketKind::Data;
    const HostId receiver = to_receiver ? p.dst : p.src;
    const HostId sender = to_receiver ? p.src : p.dst;
    trace("drop", p.src, p.dst, p.msg_id, p.kind == PacketKind::Data ? p.length : p.range_bytes, receiver, sender);
}

HostId SirdCluster::host_sender_of(HostId receiver, MsgId msg) const {
    return hosts_.at(receiver)->receiver().sender_of(msg);
}

CreditSnapshot SirdCluster::credit_snapshot() const {
    CreditSnapshot s;
    s.time = sim_.now();
    s.in_flight = credit_in_flight_;
    for (const auto& h : hosts_) {
        s.at_receivers += params_.global_bucket_bytes - h->receiver().consumed();
        s.at_senders += h->sender().total_credit();
    }
    s.budget = params_.global_bucket_bytes * hosts_.size();
    require(s.at_receivers + s.in_flight + s.at_senders == s.budget,
            "credit location components do not sum to the fleet budget");
    return s;
}

void SirdCluster::audit() const {
    for (const auto& h : hosts_)
        h->receiver().audit();
}

}  // namespace sirdsim
