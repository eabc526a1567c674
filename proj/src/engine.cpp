#include "sirdsim/engine.hpp"

#include <string>

namespace sirdsim {

EventHandle Simulator::schedule(SimTime fire_at, Action action) {
    post(fire_at, std::move(action));
    const std::uint64_t seq = next_seq_ - 1;
    live_.insert(seq);
    return EventHandle(seq);
}

void Simulator::post(SimTime fire_at, Action action) {
    if (fire_at < now_) {
        throw SchedulingError("event scheduled in the past: fire_at=" + std::to_string(fire_at) +
                              " now=" + std::to_string(now_));
    }
    heap_.push(Entry{fire_at, next_seq_++, std::move(action)});
}

bool Simulator::cancel(EventHandle handle) {
    if (!handle.valid() || live_.erase(handle.seq_) == 0)
        return false;
    cancelled_.insert(handle.seq_);
    return true;
}

std::uint64_t Simulator::run_until(SimTime t_end) {
    std::uint64_t count = 0;
    while (!heap_.empty() && heap_.top().fire_at <= t_end) {
        // priority_queue::top is const; the entry is discarded right after.
        Entry entry = std::move(const_cast<Entry&>(heap_.top()));
        heap_.pop();
        if (!cancelled_.empty() && cancelled_.erase(entry.seq) > 0)
            continue;
        if (!live_.empty())
            live_.erase(entry.seq);
        now_ = entry.fire_at;
        if (observer_)
            observer_(entry.fire_at, entry.seq);
        ++count;
        ++dispatched_;
        entry.action();
    }
    if (t_end > now_)
        now_ = t_end;
    return count;
}

}  // namespace sirdsim
