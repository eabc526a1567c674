// A SIRD host (sender + receiver + credit pacer + loss timers) and the
// cluster that wires hosts to the fabric and keeps fleet-wide credit books.
#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "sirdsim/engine.hpp"
#include "sirdsim/fabric.hpp"
#include "sirdsim/protocol.hpp"

namespace sirdsim {

/// Passive hooks for the measurement plane. All default to no-ops.
class ProtocolObserver {
public:
    virtual ~ProtocolObserver() = default;
    virtual void on_payload(HostId /*receiver*/, HostId /*sender*/, MsgId, std::uint64_t /*new_bytes*/, SimTime) {}
    virtual void on_message_complete(HostId /*receiver*/, HostId /*sender*/, MsgId, SimTime) {}
    virtual void on_grant(HostId /*receiver*/, const Grant&, SimTime) {}
    virtual void on_reclaim(HostId /*receiver*/, MsgId, std::uint64_t /*bytes*/, SimTime) {}
};

/// Where the fleet's credit is at one instant.
struct CreditSnapshot {
    SimTime time = 0;
    std::uint64_t at_receivers = 0;  // unallocated headroom, sum of B - b
    std::uint64_t in_flight = 0;     // granted credit in CREDIT packets or carried by DATA
    std::uint64_t at_senders = 0;    // sum of c_r
    std::uint64_t budget = 0;        // hosts * B
};

class SirdCluster;

class SirdHost final : public Endpoint {
public:
    SirdHost(SirdCluster& cluster, HostId id);

    std::optional<Packet> pull_next() override;
    void deliver(const Packet& pkt) override;

    HostId id() const { return id_; }
    const ReceiverState& receiver() const { return receiver_; }
    const SenderState& sender() const { return sender_; }
    SenderState& sender() { return sender_; }

    /// Nanoseconds between grants of `bytes` at the paced credit rate.
    double pacer_interval_ns(std::uint64_t bytes) const;

private:
    friend class SirdCluster;

    void start_message(MsgId id, HostId dst, std::uint64_t size);
    void on_data(const Packet& pkt);
    void wake_pacer();
    void pacer_tick();
    void arm_loss_timer(MsgId msg);
    void on_loss_timer(MsgId msg);
    void push_control(const Packet& pkt);

    SirdCluster& cluster_;
    HostId id_;
    ReceiverState receiver_;
    SenderState sender_;
    std::deque<Packet> control_;
    std::int64_t downlink_bps_;
    bool pacer_armed_ = false;
    double pacer_next_ns_ = 0.0;
    std::unordered_map<MsgId, EventHandle> loss_timers_;
};

class SirdCluster {
public:
    SirdCluster(Simulator& sim, Fabric& fabric, const ProtocolParams& params);
    SirdCluster(const SirdCluster&) = delete;
    SirdCluster& operator=(const SirdCluster&) = delete;

    /// Starts a message at the current simulated time.
    void start_message(MsgId id, HostId src, HostId dst, std::uint64_t size);

    Simulator& sim() { return sim_; }
    Fabric& fabric() { return fabric_; }
    const ProtocolParams& params() const { return params_; }
    std::uint32_t num_hosts() const { return static_cast<std::uint32_t>(hosts_.size()); }
    SirdHost& host(HostId h) { return *hosts_.at(h); }
    const SirdHost& host(HostId h) const { return *hosts_.at(h); }

    void set_observer(ProtocolObserver* obs) { observer_ = obs; }
    /// Per-event protocol trace (CSV). Pass nullptr to disable.
    void set_trace(std::ostream* out);

    /// Throws InvariantViolation unless the three components sum to the budget.
    CreditSnapshot credit_snapshot() const;
    /// Full per-receiver consistency audit.
    void audit() const;

    std::uint64_t grants() const { return grants_; }
    std::uint64_t reclaim_events() const { return reclaim_events_; }
    std::uint64_t reclaimed_bytes() const { return reclaimed_bytes_; }
    std::uint64_t resend_requests() const { return resend_requests_; }

private:
    friend class SirdHost;

    void trace(const char* kind, HostId src, HostId dst, MsgId msg, std::uint64_t bytes, HostId receiver,
               HostId sender);
    void on_drop(const Packet& pkt);
    HostId host_sender_of(HostId receiver, MsgId msg) const;

    Simulator& sim_;
    Fabric& fabric_;
    ProtocolParams params_;
    std::vector<std::unique_ptr<SirdHost>> hosts_;
    ProtocolObserver* observer_ = nullptr;
    std::ostream* trace_ = nullptr;
    std::uint64_t credit_in_flight_ = 0;
    std::uint64_t grants_ = 0;
    std::uint64_t reclaim_events_ = 0;
    std::uint64_t reclaimed_bytes_ = 0;
    std::uint64_t resend_requests_ = 0;
};

}  // namespace sirdsim
