#include "sirdsim/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "sirdsim/invariants.hpp"

namespace sirdsim {

void ProtocolParams::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument(what); };
    if (bdp_bytes == 0)
        fail("bdp_bytes must be > 0");
    if (mss_bytes == 0)
        fail("mss_bytes must be > 0");
    if (global_bucket_bytes < bdp_bytes)
        fail("global_bucket_bytes (" + std::to_string(global_bucket_bytes) + ") must be >= bdp_bytes (" +
             std::to_string(bdp_bytes) + ")");
    if (bdp_bytes < mss_bytes)
        fail("bdp_bytes must be >= mss_bytes");
    if (!(aimd_gain > 0.0 && aimd_gain <= 1.0))
        fail("aimd_gain must be in (0, 1]");
    if (!(pacer_rate_fraction > 0.0 && pacer_rate_fraction <= 1.0))
        fail("pacer_rate_fraction must be in (0, 1]");
    if (!(sender_fair_share_fraction >= 0.0 && sender_fair_share_fraction <= 1.0))
        fail("sender_fair_share_fraction must be in [0, 1]");
    if (loss_timeout_ns <= 0)
        fail("loss_timeout_ns must be > 0");
}

std::uint64_t min_global_bucket(std::uint64_t sthr, std::uint64_t bdp) {
    if (sthr == kInfiniteBytes)
        return kInfiniteBytes;
    return bdp + sthr;
}

AimdState aimd_update(AimdState s, std::uint64_t feedback_bytes, bool marked, std::uint64_t epoch_bytes,
                      const AimdLimits& lim) {
    s.window_acc += feedback_bytes;
    if (marked)
        s.marked_acc += feedback_bytes;
    if (s.window_acc < epoch_bytes || s.window_acc == 0)
        return s;

    const double frac = static_cast<double>(s.marked_acc) / static_cast<double>(s.window_acc);
    s.alpha = (1.0 - lim.gain) * s.alpha + lim.gain * frac;
    s.alpha = std::clamp(s.alpha, 0.0, 1.0);
    if (s.marked_acc > 0)
        s.bucket_bytes = static_cast<std::uint64_t>(std::floor(static_cast<double>(s.bucket_bytes) * (1.0 - s.alpha / 2.0)));
    else
        s.bucket_bytes += lim.increase_step;
    s.bucket_bytes = std::clamp(s.bucket_bytes, lim.min_bucket, lim.max_bucket);
    s.window_acc = 0;
    s.marked_acc = 0;
    return s;
}

std::size_t policy_select(std::span<const PolicyCandidate> c, Policy policy, std::optional<std::uint32_t> last_served) {
    if (c.empty())
        throw std::invalid_argument("policy_select: no candidates");
    std::size_t best = 0;
    if (policy == Policy::Srpt) {
        for (std::size_t i = 1; i < c.size(); ++i) {
            if (c[i].remaining < c[best].remaining ||
                (c[i].remaining == c[best].remaining && c[i].msg < c[best].msg))
                best = i;
        }
        return best;
    }
    // Round robin: smallest id after last_served, else the smallest id overall.
    std::optional<std::size_t> after;
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (c[i].id < c[best].id)
            best = i;
        if (last_served && c[i].id > *last_served && (!after || c[i].id < c[*after].id))
            after = i;
    }
    return after.value_or(best);
}

// ---------------------------------------------------------------------------

ReceiverState::ReceiverState(const ProtocolParams& params)
    : params_(params),
      limits_{params.min_bucket(), params.max_bucket(), params.mss_bytes, params.aimd_gain} {}

SenderEntry& ReceiverState::ensure_entry(HostId sender) {
    auto [it, inserted] = senders_.try_emplace(sender);
    if (inserted) {
        it->second.sender_bkt.bucket_bytes = params_.max_bucket();
        it->second.net_bkt.bucket_bytes = params_.max_bucket();
    }
    return it->second;
}

SenderEntry& ReceiverState::mutable_sender_entry(HostId sender) {
    return ensure_entry(sender);
}

const SenderEntry* ReceiverState::sender_entry(HostId sender) const {
    auto it = senders_.find(sender);
    return it == senders_.end() ? nullptr : &it->second;
}

SimTime ReceiverState::last_progress(MsgId msg) const {
    return msgs_.at(msg).last_progress;
}

HostId ReceiverState::sender_of(MsgId msg) const {
    return msgs_.at(msg).src;
}

bool ReceiverState::awaiting_data(MsgId msg) const {
    auto it = msgs_.find(msg);
    if (it == msgs_.end())
        return false;
    const InboundMessage& m = it->second;
    return !m.outstanding.empty() || m.received.overlap({0, m.unsched}) < m.unsched;
}

std::uint64_t ReceiverState::message_outstanding(MsgId msg) const {
    auto it = msgs_.find(msg);
    return it == msgs_.end() ? 0 : it->second.outstanding.total();
}

DataOutcome ReceiverState::on_data_packet(const Packet& pkt, SimTime now) {
    DataOutcome out;
    if (completed_.count(pkt.msg_id) != 0) {
        out.duplicate = true;
        return out;
    }
    auto it = msgs_.find(pkt.msg_id);
    if (it == msgs_.end()) {
        InboundMessage m{pkt.src, pkt.msg_size, std::min<std::uint64_t>(pkt.unsched_bytes, pkt.msg_size), {}, {}, {},
                         now};
        if (m.size > m.unsched) {
            m.ungranted.insert({m.unsched, m.size});
            SenderEntry& e = ensure_entry(pkt.src);
            e.rem += m.size - m.unsched;
            e.messages.insert(pkt.msg_id);
        }
        it = msgs_.emplace(pkt.msg_id, std::move(m)).first;
        out.registered = true;
    }
    InboundMessage& m = it->second;

    if (pkt.length > 0) {
        const ByteRange r{pkt.offset, pkt.offset + pkt.length};
        if (!pkt.unscheduled) {
            SenderEntry& e = ensure_entry(pkt.src);
            const std::uint64_t returned = m.outstanding.erase(r);
            require(returned <= b_ && returned <= e.sb, "credit returned exceeds consumed credit");
            b_ -= returned;
            e.sb -= returned;
            out.credit_returned = returned;
            // Data for a range that was reclaimed and not yet re-granted.
            e.rem -= m.ungranted.erase(r);

            e.sender_bkt = aimd_update(e.sender_bkt, pkt.length, pkt.csn, e.sender_bkt.bucket_bytes, limits_);
            e.net_bkt = aimd_update(e.net_bkt, pkt.length, pkt.ecn_ce, e.net_bkt.bucket_bytes, limits_);
        }
        out.new_bytes = m.received.insert(r);
        if (out.new_bytes == 0)
            out.duplicate = true;
        else
            m.last_progress = now;
    }

    if (m.received.total() == m.size) {
        out.credit_released = m.outstanding.total();
        finish(pkt.msg_id, m);
        msgs_.erase(it);
        out.completed = true;
    }
    return out;
}

void ReceiverState::finish(MsgId id, InboundMessage& m) {
    auto eit = senders_.find(m.src);
    if (eit != senders_.end()) {
        SenderEntry& e = eit->second;
        const std::uint64_t leftover = m.outstanding.total();
        b_ -= leftover;
        e.sb -= leftover;
        e.rem -= m.ungranted.total();
        e.messages.erase(id);
    }
    completed_.insert(id);
}

std::optional<MsgId> ReceiverState::pick_message(const SenderEntry& entry) const {
    std::optional<MsgId> best;
    std::uint64_t best_rem = 0;
    for (MsgId id : entry.messages) {
        const std::uint64_t rem = msgs_.at(id).ungranted.total();
        if (rem == 0)
            continue;
        if (params_.receiver_policy == Policy::RoundRobin)
            return id;  // oldest id first within a sender
        if (!best || rem < best_rem) {
            best = id;
            best_rem = rem;
        }
    }
    return best;
}

std::optional<Grant> ReceiverState::credit_tick() {
    std::vector<PolicyCandidate> cands;
    std::vector<ByteRange> chunks;
    for (const auto& [sender, e] : senders_) {
        if (e.rem == 0)
            continue;
        const std::optional<MsgId> id = pick_message(e);
        if (!id)
            continue;
        const InboundMessage& m = msgs_.at(*id);
        const ByteRange chunk = *m.ungranted.front(params_.mss_bytes);
        if (b_ + chunk.size() > params_.global_bucket_bytes)
            continue;
        if (e.sb + chunk.size() > e.bucket())
            continue;
        cands.push_back({sender, m.ungranted.total(), *id});
        chunks.push_back(chunk);
    }
    if (cands.empty())
        return std::nullopt;

    const std::size_t i = policy_select(cands, params_.receiver_policy, last_rr_);
    last_rr_ = cands[i].id;
    const ByteRange chunk = chunks[i];
    SenderEntry& e = senders_.at(cands[i].id);
    InboundMessage& m = msgs_.at(cands[i].msg);
    m.ungranted.erase(chunk);
    m.outstanding.insert(chunk);
    e.sb += chunk.size();
    e.rem -= chunk.size();
    b_ += chunk.size();
    return Grant{cands[i].id, cands[i].msg, chunk};
}

LossOutcome ReceiverState::detect_loss_and_reclaim(MsgId msg, SimTime now) {
    LossOutcome out;
    auto it = msgs_.find(msg);
    if (it == msgs_.end())
        return out;
    InboundMessage& m = it->second;
    for (const ByteRange& r : m.outstanding.intervals()) {
        m.ungranted.insert(r);
        out.reclaimed += r.size();
    }
    m.outstanding = ByteRangeSet{};
    if (out.reclaimed > 0) {
        SenderEntry& e = senders_.at(m.src);
        require(out.reclaimed <= b_ && out.reclaimed <= e.sb, "reclaim exceeds consumed credit");
        b_ -= out.reclaimed;
        e.sb -= out.reclaimed;
        e.rem += out.reclaimed;
    }
    if (m.unsched > 0)
        out.resend = m.received.gaps({0, m.unsched});
    m.last_progress = now;
    return out;
}

void ReceiverState::audit() const {
    std::uint64_t sum_sb = 0;
    for (const auto& [sender, e] : senders_) {
        sum_sb += e.sb;
        std::uint64_t outstanding = 0;
        std::uint64_t ungranted = 0;
        for (MsgId id : e.messages) {
            outstanding += msgs_.at(id).outstanding.total();
            ungranted += msgs_.at(id).ungranted.total();
        }
        require(outstanding == e.sb, "per-sender consumed credit disagrees with outstanding grants");
        require(ungranted == e.rem, "per-sender remaining demand disagrees with ungranted bytes");
        for (const AimdState* a : {&e.sender_bkt, &e.net_bkt}) {
            require(a->bucket_bytes >= params_.min_bucket() && a->bucket_bytes <= params_.max_bucket(),
                    "per-sender bucket outside [min_bucket, BDP]");
            require(a->alpha >= 0.0 && a->alpha <= 1.0, "AIMD alpha outside [0, 1]");
        }
    }
    require(sum_sb == b_, "global consumed credit differs from the per-sender sum");
    require(b_ <= params_.global_bucket_bytes, "global consumed credit exceeds B");
}

void ReceiverState::note_grant_activity(MsgId msg, SimTime now) {
    auto it = msgs_.find(msg);
    if (it != msgs_.end())
        it->second.last_progress = std::max(it->second.last_progress, now);
}

// ---------------------------------------------------------------------------

SenderState::SenderState(HostId self, const ProtocolParams& params) : self_(self), params_(params) {}

StartPlan SenderState::start_message(MsgId id, HostId dst, std::uint64_t size) {
    StartPlan plan;
    OutboundMessage m{dst, size, 0, {}, {}};
    if (size <= params_.unsched_threshold_bytes) {
        plan.unscheduled_bytes = std::min(params_.bdp_bytes, size);
        plan.scheduled_bytes = size - plan.unscheduled_bytes;
        m.unsched = static_cast<std::uint32_t>(plan.unscheduled_bytes);
        if (plan.unscheduled_bytes > 0) {
            m.unsched_pending.insert({0, plan.unscheduled_bytes});
            receivers_[dst].unsched_msgs.insert(id);
        }
    } else {
        plan.scheduled_bytes = size;
        plan.sends_request = true;
    }
    auto& stored = msgs_.emplace(id, std::move(m)).first->second;
    if (plan.sends_request) {
        Packet req = make_data(id, stored);
        req.priority = params_.priority_lanes ? kLaneHigh : kLaneNormal;
        req.csn = csn_now();
        requests_.push_back(req);
    }
    return plan;
}

bool SenderState::on_credit_packet(HostId receiver, MsgId msg, ByteRange range) {
    auto it = msgs_.find(msg);
    if (it == msgs_.end() || range.size() == 0)
        return false;
    PerReceiver& pr = receivers_[receiver];
    pr.credit += range.size();
    pr.granted.push_back({msg, range});
    total_credit_ += range.size();
    return true;
}

void SenderState::on_resend(HostId receiver, MsgId msg, ByteRange range) {
    auto it = msgs_.find(msg);
    if (it == msgs_.end() || range.size() == 0)
        return;
    it->second.unsched_pending.insert(range);
    receivers_[receiver].unsched_msgs.insert(msg);
}

std::uint64_t SenderState::on_message_delivered(MsgId msg) {
    auto it = msgs_.find(msg);
    if (it == msgs_.end())
        return 0;
    const HostId dst = it->second.dst;
    msgs_.erase(it);
    std::uint64_t released = 0;
    auto rit = receivers_.find(dst);
    if (rit != receivers_.end()) {
        PerReceiver& pr = rit->second;
        pr.unsched_msgs.erase(msg);
        for (auto g = pr.granted.begin(); g != pr.granted.end();) {
            if (g->msg == msg) {
                released += g->range.size();
                g = pr.granted.erase(g);
            } else {
                ++g;
            }
        }
        pr.credit -= released;
        total_credit_ -= released;
        prune(dst);
    }
    return released;
}

void SenderState::prune(HostId receiver) {
    auto it = receivers_.find(receiver);
    if (it != receivers_.end() && it->second.idle())
        receivers_.erase(it);
}

std::uint64_t SenderState::credit_for(HostId receiver) const {
    auto it = receivers_.find(receiver);
    return it == receivers_.end() ? 0 : it->second.credit;
}

bool SenderState::csn_now() const {
    return params_.sender_threshold_bytes != kInfiniteBytes && total_credit_ >= params_.sender_threshold_bytes;
}

Packet SenderState::make_data(MsgId id, const OutboundMessage& m) const {
    Packet p;
    p.kind = PacketKind::Data;
    p.src = self_;
    p.dst = m.dst;
    p.msg_id = id;
    p.msg_size = m.size;
    p.unsched_bytes = m.unsched;
    return p;
}

std::optional<Packet> SenderState::next_data_packet() {
    if (!requests_.empty()) {
        Packet p = requests_.front();
        requests_.pop_front();
        p.csn = csn_now();
        return p;
    }

    // Per receiver, the item it would be served with: its front grant or its
    // unscheduled message with the fewest remaining bytes.
    struct Item {
        HostId receiver;
        MsgId msg;
        bool scheduled;
        std::uint64_t remaining;
    };
    std::vector<Item> items;
    std::vector<PolicyCandidate> cands;
    for (const auto& [r, pr] : receivers_) {
        std::optional<Item> best;
        auto consider = [&](MsgId id, bool scheduled) {
            const std::uint64_t rem = msgs_.at(id).remaining();
            if (!best || rem < best->remaining || (rem == best->remaining && id < best->msg))
                best = Item{r, id, scheduled, rem};
        };
        if (!pr.granted.empty())
            consider(pr.granted.front().msg, true);
        for (MsgId id : pr.unsched_msgs)
            consider(id, false);
        if (best) {
            items.push_back(*best);
            cands.push_back({r, best->remaining, best->msg});
        }
    }
    if (items.empty())
        return std::nullopt;

    std::size_t pick;
    fair_acc_ += params_.sender_fair_share_fraction;
    if (fair_acc_ >= 1.0) {
        fair_acc_ -= 1.0;
        pick = policy_select(cands, Policy::RoundRobin, last_fair_);
        last_fair_ = cands[pick].id;
    } else {
        pick = policy_select(cands, params_.sender_policy, last_policy_);
        last_policy_ = cands[pick].id;
    }
    const Item item = items[pick];
    PerReceiver& pr = receivers_.at(item.receiver);
    OutboundMessage& m = msgs_.at(item.msg);
    Packet p = make_data(item.msg, m);
    p.csn = csn_now();

    if (item.scheduled) {
        GrantedRange& g = pr.granted.front();
        const std::uint64_t len = std::min<std::uint64_t>(g.range.size(), params_.mss_bytes);
        require(len <= pr.credit, "scheduled DATA exceeds available credit");
        p.offset = g.range.begin;
        p.length = static_cast<std::uint32_t>(len);
        p.carries_credit = p.length;
        p.priority = kLaneNormal;
        g.range.begin += len;
        if (g.range.size() == 0)
            pr.granted.pop_front();
        pr.credit -= len;
        total_credit_ -= len;
        m.sent.insert({p.offset, p.offset + len});
    } else {
        const ByteRange chunk = *m.unsched_pending.front(params_.mss_bytes);
        m.unsched_pending.erase(chunk);
        if (m.unsched_pending.empty())
            pr.unsched_msgs.erase(item.msg);
        p.offset = chunk.begin;
        p.length = static_cast<std::uint32_t>(chunk.size());
        p.unscheduled = true;
        p.priority = params_.priority_lanes ? kLaneHigh : kLaneNormal;
        m.sent.insert(chunk);
    }
    prune(item.receiver);
    return p;
}

}  // namespace sirdsim
