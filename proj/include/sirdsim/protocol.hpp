// SIRD sender and receiver state machines: credit buckets, the two AIMD
// loops, credit policies, unscheduled prefixes and loss recovery.
#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "sirdsim/byte_ranges.hpp"
#include "sirdsim/engine.hpp"
#include "sirdsim/packet.hpp"

namespace sirdsim {

/// Sentinel for a disabled threshold (e.g. SThr = inf).
constexpr std::uint64_t kInfiniteBytes = std::numeric_limits<std::uint64_t>::max();

enum class Policy { Srpt, RoundRobin };

struct ProtocolParams {
    std::uint64_t bdp_bytes = 100'000;
    std::uint64_t global_bucket_bytes = 150'000;      // B
    std::uint64_t sender_threshold_bytes = 50'000;    // SThr
    std::uint64_t net_threshold_bytes = 125'000;      // NThr, the switch ECN threshold
    std::uint64_t unsched_threshold_bytes = 100'000;  // UnschT
    double aimd_gain = 0.08;
    double pacer_rate_fraction = 0.98;
    double sender_fair_share_fraction = 0.5;
    SimTime loss_timeout_ns = 1 * kNsPerMs;
    std::uint32_t mss_bytes = 9000;
    Policy receiver_policy = Policy::Srpt;
    Policy sender_policy = Policy::Srpt;
    bool priority_lanes = true;

    void validate() const;
    std::uint64_t min_bucket() const { return mss_bytes; }
    std::uint64_t max_bucket() const { return bdp_bytes; }

    bool operator==(const ProtocolParams&) const = default;
};

/// Steady-state sufficient global bucket for any number of congested senders.
std::uint64_t min_global_bucket(std::uint64_t sthr, std::uint64_t bdp);

/// DCTCP-style AIMD state driving one per-sender bucket.
struct AimdState {
    std::uint64_t bucket_bytes = 0;
    double alpha = 0.0;              // smoothed marked fraction
    std::uint64_t window_acc = 0;    // feedback bytes in the current epoch
    std::uint64_t marked_acc = 0;    // marked feedback bytes in the current epoch
};

struct AimdLimits {
    std::uint64_t min_bucket;
    std::uint64_t max_bucket;
    std::uint64_t increase_step;
    double gain;
};

/// Accumulates feedback; once epoch_bytes of feedback are in, updates alpha
/// and applies one multiplicative decrease or additive increase.
AimdState aimd_update(AimdState state, std::uint64_t feedback_bytes, bool marked, std::uint64_t epoch_bytes,
                      const AimdLimits& limits);

/// One entry considered by a credit or transmission policy.
struct PolicyCandidate {
    std::uint32_t id;           // sender id (receiver side) or receiver id (sender side)
    std::uint64_t remaining;    // bytes left for the candidate's active message
    MsgId msg;
};

/// SRPT: fewest remaining bytes, ties to the lower message id.
/// RoundRobin: first id strictly after last_served, wrapping around.
std::size_t policy_select(std::span<const PolicyCandidate> candidates, Policy policy,
                          std::optional<std::uint32_t> last_served);

// ---------------------------------------------------------------------------
// Receiver

struct SenderEntry {
    std::uint64_t sb = 0;  // consumed per-sender credit
    AimdState sender_bkt;  // driven by the csn bit
    AimdState net_bkt;     // driven by ECN
    std::uint64_t rem = 0; // requested but not yet granted
    std::set<MsgId> messages;

    std::uint64_t bucket() const { return std::min(sender_bkt.bucket_bytes, net_bkt.bucket_bytes); }
};

struct Grant {
    HostId sender;
    MsgId msg;
    ByteRange range;
};

struct DataOutcome {
    std::uint64_t new_bytes = 0;
    std::uint64_t credit_returned = 0;
    std::uint64_t credit_released = 0;  // outstanding grants dropped at completion
    bool registered = false;
    bool completed = false;
    bool duplicate = false;
};

struct LossOutcome {
    std::uint64_t reclaimed = 0;
    std::vector<ByteRange> resend;  // unscheduled ranges to re-request
};

class ReceiverState {
public:
    explicit ReceiverState(const ProtocolParams& params);

    DataOutcome on_data_packet(const Packet& pkt, SimTime now);
    /// One pacer tick: grants up to one MSS to a policy-selected eligible
    /// sender, or nothing.
    std::optional<Grant> credit_tick();
    /// Treats all granted-but-missing bytes of the message as lost: reclaims
    /// their credit and returns them to the ungranted pool. Missing
    /// unscheduled bytes are returned for re-request.
    LossOutcome detect_loss_and_reclaim(MsgId msg, SimTime now);
    /// A fresh grant restarts the message's loss clock.
    void note_grant_activity(MsgId msg, SimTime now);

    std::uint64_t consumed() const { return b_; }
    std::uint64_t global_bucket() const { return params_.global_bucket_bytes; }
    const SenderEntry* sender_entry(HostId sender) const;
    const std::map<HostId, SenderEntry>& senders() const { return senders_; }
    bool has_message(MsgId msg) const { return msgs_.count(msg) != 0; }
    SimTime last_progress(MsgId msg) const;
    HostId sender_of(MsgId msg) const;
    /// True if bytes of the message are expected to arrive without a new grant.
    bool awaiting_data(MsgId msg) const;
    std::uint64_t message_outstanding(MsgId msg) const;
    std::size_t active_messages() const { return msgs_.size(); }

    /// Full consistency check of b against the per-sender state.
    void audit() const;

    /// Test support: seeds the per-sender state directly.
    SenderEntry& mutable_sender_entry(HostId sender);
    void set_consumed(std::uint64_t b) { b_ = b; }

private:
    struct InboundMessage {
        HostId src;
        std::uint64_t size;
        std::uint64_t unsched;
        ByteRangeSet received;
        ByteRangeSet ungranted;
        ByteRangeSet outstanding;
        SimTime last_progress;
    };

    SenderEntry& ensure_entry(HostId sender);
    std::optional<MsgId> pick_message(const SenderEntry& entry) const;
    void finish(MsgId id, InboundMessage& m);

    ProtocolParams params_;
    AimdLimits limits_;
    std::uint64_t b_ = 0;
    std::map<HostId, SenderEntry> senders_;
    std::unordered_map<MsgId, InboundMessage> msgs_;
    std::unordered_set<MsgId> completed_;
    std::optional<std::uint32_t> last_rr_;
};

// ---------------------------------------------------------------------------
// Sender

struct StartPlan {
    std::uint64_t unscheduled_bytes = 0;
    std::uint64_t scheduled_bytes = 0;
    bool sends_request = false;
};

class SenderState {
public:
    SenderState(HostId self, const ProtocolParams& params);

    StartPlan start_message(MsgId id, HostId dst, std::uint64_t size);
    /// Returns false if the message is unknown (already delivered); the
    /// credit is then discarded.
    bool on_credit_packet(HostId receiver, MsgId msg, ByteRange range);
    void on_resend(HostId receiver, MsgId msg, ByteRange range);
    /// Forgets the message. Returns credit still held for it, which is released.
    std::uint64_t on_message_delivered(MsgId msg);

    /// Next DATA packet for an idle uplink, or nothing.
    std::optional<Packet> next_data_packet();

    std::uint64_t credit_for(HostId receiver) const;
    std::uint64_t total_credit() const { return total_credit_; }
    bool csn_now() const;
    std::size_t active_messages() const { return msgs_.size(); }

private:
    struct OutboundMessage {
        HostId dst;
        std::uint64_t size;
        std::uint32_t unsched;
        ByteRangeSet sent;
        ByteRangeSet unsched_pending;
        std::uint64_t remaining() const { return size - sent.total(); }
    };
    struct GrantedRange {
        MsgId msg;
        ByteRange range;
    };
    struct PerReceiver {
        std::uint64_t credit = 0;  // c_r
        std::deque<GrantedRange> granted;
        std::set<MsgId> unsched_msgs;
        bool idle() const { return credit == 0 && granted.empty() && unsched_msgs.empty(); }
    };

    Packet make_data(MsgId id, const OutboundMessage& m) const;
    void prune(HostId receiver);

    HostId self_;
    ProtocolParams params_;
    std::map<MsgId, OutboundMessage> msgs_;
    std::map<HostId, PerReceiver> receivers_;
    std::deque<Packet> requests_;
    std::uint64_t total_credit_ = 0;
    double fair_acc_ = 0.0;
    std::optional<std::uint32_t> last_fair_;
    std::optional<std::uint32_t> last_policy_;
};

}  // namespace sirdsim
