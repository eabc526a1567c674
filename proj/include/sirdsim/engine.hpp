// Discrete-event core: simulated clock, cancellable event queue, run loop.
#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <unordered_set>
#include <vector>

namespace sirdsim {

/// Simulated time in integer nanoseconds since simulation start.
using SimTime = std::int64_t;

constexpr SimTime kNsPerUs = 1000;
constexpr SimTime kNsPerMs = 1000 * kNsPerUs;

class SchedulingError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Opaque handle returned by Simulator::schedule; allows cancellation.
class EventHandle {
public:
    EventHandle() = default;
    bool valid() const { return seq_ != 0; }
    std::uint64_t seq() const { return seq_; }

private:
    friend class Simulator;
    explicit EventHandle(std::uint64_t seq) : seq_(seq) {}
    std::uint64_t seq_ = 0;
};

/// Single-threaded event loop. Events with equal fire times dispatch in
/// scheduling order.
class Simulator {
public:
    using Action = std::function<void()>;

    SimTime now() const { return now_; }

    /// Throws SchedulingError if fire_at < now().
    EventHandle schedule(SimTime fire_at, Action action);
    EventHandle schedule_in(SimTime delay, Action action) { return schedule(now_ + delay, std::move(action)); }

    /// Same ordering as schedule() but without a cancellation handle; used on
    /// the per-packet hot path.
    void post(SimTime fire_at, Action action);

    /// Returns false if the event already fired, was already cancelled, or
    /// the handle is invalid.
    bool cancel(EventHandle handle);

    /// Dispatches every event with fire_at <= t_end, then advances the clock
    /// to t_end. Returns the number of dispatched events.
    std::uint64_t run_until(SimTime t_end);

    std::size_t pending() const { return heap_.size() - cancelled_.size(); }
    bool empty() const { return pending() == 0; }
    std::uint64_t dispatched_total() const { return dispatched_; }

    /// Invoked before each dispatch with (fire_at, seq). Used by tests to
    /// record traces.
    void set_dispatch_observer(std::function<void(SimTime, std::uint64_t)> obs) { observer_ = std::move(obs); }

private:
    struct Entry {
        SimTime fire_at;
        std::uint64_t seq;
        Action action;
    };
    struct Later {
        bool operator()(const Entry& a, const Entry& b) const {
            if (a.fire_at != b.fire_at)
                return a.fire_at > b.fire_at;
            return a.seq > b.seq;
        }
    };

    SimTime now_ = 0;
    std::uint64_t next_seq_ = 1;
    std::uint64_t dispatched_ = 0;
    std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
    std::unordered_set<std::uint64_t> live_;
    std::unordered_set<std::uint64_t> cancelled_;
    std::function<void(SimTime, std::uint64_t)> observer_;
};

}  // namespace sirdsim
