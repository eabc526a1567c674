// Acceptance suite: one PASS/FAIL line per criterion. Every threshold below
// is fixed here; nothing is tuned per run.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "sirdsim/config.hpp"
#include "sirdsim/experiment.hpp"
#include "sirdsim/invariants.hpp"
#include "sirdsim/metrics.hpp"
#include "sirdsim/rng.hpp"

using namespace sirdsim;

namespace {

// Pinned tolerances.
constexpr double kIncastMinGoodputGbps = 90.0;
constexpr std::uint64_t kSchedQueueSlackBytes = 9'000;  // one MSS
constexpr SimTime kProbeSlackNs = 2 * 728;              // two MSS serializations at 100 Gbps
constexpr double kOutcastCreditLo = 0.25;               // x BDP
constexpr double kOutcastCreditHi = 1.0;                // x BDP
constexpr double kOutcastAllocTolerance = 0.30;
constexpr double kOutcastInfCreditLo = 2.0;             // x BDP
constexpr double kOutcastInfCreditHi = 3.0;             // x BDP
constexpr double kOutcastInfAllocTolerance = 0.10;      // each receiver allocates ~1 BDP
constexpr double kEq2MinUtilization = 0.95;
constexpr double kOvercommitMinGain = 1.15;
constexpr SimTime kLossExtraMaxNs = 50 * kNsPerUs;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int prec = 2) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(prec);
    s << v;
    return s.str();
}

double gbps(std::uint64_t bytes, SimTime span_ns) {
    return static_cast<double>(bytes) * 8.0 / static_cast<double>(span_ns);
}

/// Payload capacity of a 100 Gbps link with 100 B headers and 9000 B MSS.
double payload_capacity_gbps(const RunConfig& c) {
    return c.topology.host_link_gbps * c.topology.mss_bytes / (c.topology.mss_bytes + c.topology.header_bytes);
}

RunConfig rack_config(std::uint32_t hosts) {
    RunConfig c;
    c.topology.hosts_per_tor = hosts;
    c.topology.num_tors = 1;
    c.topology.num_spines = 0;
    c.background_traffic = false;
    return c;
}

RunConfig two_rack_config() {
    RunConfig c;
    c.topology.hosts_per_tor = 16;
    c.topology.num_tors = 2;
    c.topology.num_spines = 2;
    c.background_traffic = false;
    return c;
}

constexpr std::uint64_t kHuge = 1'000'000'000'000ULL;  // never completes within a run

// ---------------------------------------------------------------------------
// 1 and 2: incast utilization and probe latency.

struct IncastRun {
    double victim_gbps = 0;
    std::uint64_t sched_peak = 0;
    std::uint64_t sched_bound = 0;
    double probe_p99_excess = 0;
    SimTime probe_ideal = 0;
    std::size_t probes = 0;
};

IncastRun incast_run() {
    RunConfig c = rack_config(16);
    c.workload.duration_ns = 50 * kNsPerMs;
    c.workload.warmup_ns = 1 * kNsPerMs;
    c.sample_interval_ns = 10 * kNsPerUs;
    c.goodput_window_ns = 100 * kNsPerUs;
    ExperimentOptions o;
    o.queue_samples = false;
    Experiment exp(c, o);

    const HostId victim = 0;
    // Six senders offer 17 Gbps each in 10 MB messages: 102 Gbps in aggregate.
    const std::uint64_t msg = 10'000'000;
    const SimTime period = static_cast<SimTime>(msg * 8 / 17.0);
    for (HostId s = 1; s <= 6; ++s)
        for (SimTime t = 0; t < c.workload.duration_ns; t += period)
            exp.inject_at(t + s, s, victim, msg);
    // Host 7 sends 1000 B probes every 10 us.
    const HostId prober = 7;
    for (SimTime t = 0; t < c.workload.duration_ns; t += 10 * kNsPerUs)
        exp.inject_at(t + 3, prober, victim, 1000);
    exp.run();

    IncastRun r;
    r.victim_gbps = gbps(exp.metrics().payload_between(victim, c.workload.warmup_ns, c.workload.duration_ns),
                         c.workload.duration_ns - c.workload.warmup_ns);
    const Fabric& f = exp.fabric();
    r.sched_peak = f.queue(f.tor_node(0), f.tor_downlink_port(victim)).peak_scheduled_payload_bytes();
    r.sched_bound = c.protocol.global_bucket_bytes - c.protocol.bdp_bytes + kSchedQueueSlackBytes;

    std::vector<double> excess;
    for (const MessageRecord& m : exp.metrics().messages()) {
        if (m.src != prober || !m.completed_ns || m.created_ns < c.workload.warmup_ns)
            continue;
        excess.push_back(static_cast<double>(*m.completed_ns - m.created_ns - m.ideal_ns));
        r.probe_ideal = m.ideal_ns;
    }
    r.probes = excess.size();
    r.probe_p99_excess = percentile(excess, 99);
    return r;
}

// ---------------------------------------------------------------------------
// 3: outcast credit convergence.

struct OutcastRun {
    double mean_credit = 0;                 // bytes accumulated at the sender
    std::vector<double> mean_alloc;         // per receiver, sb for the sender
};

OutcastRun outcast_run(std::uint64_t sthr) {
    RunConfig c = two_rack_config();
    c.protocol.sender_threshold_bytes = sthr;
    // The sender splits its uplink evenly between the receivers it serves.
    c.protocol.sender_policy = Policy::RoundRobin;
    c.workload.duration_ns = 8 * kNsPerMs;
    c.workload.warmup_ns = 3 * kNsPerMs;
    ExperimentOptions o;
    o.queue_samples = false;
    Experiment exp(c, o);
    const HostId sender = 0;
    const std::vector<HostId> receivers{16, 17, 18};
    for (std::size_t i = 0; i < receivers.size(); ++i)
        exp.inject_at(static_cast<SimTime>(i) * kNsPerMs, sender, receivers[i], kHuge);

    long double credit = 0;
    std::vector<long double> alloc(receivers.size(), 0);
    std::uint64_t n = 0;
    exp.set_sample_hook([&](SimTime now) {
        if (now < c.workload.warmup_ns)
            return;
        ++n;
        credit += exp.cluster().host(sender).sender().total_credit();
        for (std::size_t i = 0; i < receivers.size(); ++i) {
            const SenderEntry* e = exp.cluster().host(receivers[i]).receiver().sender_entry(sender);
            alloc[i] += e != nullptr ? e->sb : 0;
        }
    });
    exp.run();
    OutcastRun r;
    r.mean_credit = static_cast<double>(credit / n);
    for (long double a : alloc)
        r.mean_alloc.push_back(static_cast<double>(a / n));
    return r;
}

// ---------------------------------------------------------------------------
// 4: steady-state sufficiency with k congested senders of fanout f.

double eq2_probe_utilization(std::uint32_t k, std::uint32_t f) {
    RunConfig c = two_rack_config();
    c.protocol.sender_policy = Policy::RoundRobin;
    c.protocol.global_bucket_bytes = min_global_bucket(c.protocol.sender_threshold_bytes, c.protocol.bdp_bytes);
    c.workload.duration_ns = 4 * kNsPerMs;
    c.workload.warmup_ns = 1 * kNsPerMs;
    ExperimentOptions o;
    o.queue_samples = false;
    Experiment exp(c, o);

    const HostId probe = 0;
    HostId next_receiver = 1;
    HostId next_sender = 16;
    const HostId uncongested = next_sender++;
    exp.inject(uncongested, probe, kHuge);
    for (std::uint32_t i = 0; i < k; ++i) {
        const HostId s = next_sender++;
        exp.inject(s, probe, kHuge);
        for (std::uint32_t j = 1; j < f; ++j)
            exp.inject(s, next_receiver++, kHuge);
    }
    exp.run();
    const double g = gbps(exp.metrics().payload_between(probe, c.workload.warmup_ns, c.workload.duration_ns),
                          c.workload.duration_ns - c.workload.warmup_ns);
    return g / payload_capacity_gbps(c);
}

// ---------------------------------------------------------------------------
// 5 and 7: shared senders, with and without the sender-congestion loop.

struct SharedRun {
    double goodput_gbps = 0;      // aggregate over the receivers
    double mean_at_senders = 0;   // bytes
    bool snapshots_exact = true;
    std::size_t snapshots = 0;
};

SharedRun shared_sender_run(std::uint64_t sthr) {
    RunConfig c = two_rack_config();
    c.protocol.sender_threshold_bytes = sthr;
    c.workload.duration_ns = 6 * kNsPerMs;
    c.workload.warmup_ns = 2 * kNsPerMs;
    ExperimentOptions o;
    o.queue_samples = false;
    Experiment exp(c, o);

    // Receivers 0..7 sit in rack 0. Shared sender j (hosts 16..19) serves
    // receivers 2j .. 2j+3 (mod 8), so every receiver pulls from two shared
    // senders and one private sender (hosts 20..27). Each pair carries a
    // Poisson stream of exponentially sized messages; together they offer
    // every receiver 1.5x its downlink.
    const std::uint32_t receivers = 8;
    std::vector<std::pair<HostId, HostId>> pairs;
    for (std::uint32_t j = 0; j < 4; ++j)
        for (std::uint32_t i = 0; i < 4; ++i)
            pairs.emplace_back(16 + j, (2 * j + i) % receivers);
    for (std::uint32_t r = 0; r < receivers; ++r)
        pairs.emplace_back(20 + r, r);
    const double mean_size = 200'000;
    const double per_pair_rate = 1.5 * c.topology.host_link_gbps * 1e9 / 8.0 / mean_size / 3.0;
    RngStream rng(c.seed, "acceptance/shared");
    for (const auto& [s, r] : pairs) {
        double t = 0;
        while (true) {
            t += -std::log1p(-rng.uniform()) / per_pair_rate * 1e9;
            if (t >= static_cast<double>(c.workload.duration_ns))
                break;
            const auto size = static_cast<std::uint64_t>(std::llround(-std::log1p(-rng.uniform()) * mean_size));
            exp.inject_at(static_cast<SimTime>(t), s, r, std::max<std::uint64_t>(size, 1));
        }
    }

    SharedRun out;
    long double at_senders = 0;
    exp.set_sample_hook([&](SimTime now) {
        const CreditSnapshot& s = exp.metrics().credit_rows().back();
        out.snapshots_exact = out.snapshots_exact && s.at_receivers + s.in_flight + s.at_senders == s.budget;
        ++out.snapshots;
        if (now >= c.workload.warmup_ns)
            at_senders += s.at_senders;
    });
    exp.run();
    std::uint64_t bytes = 0;
    for (HostId r = 0; r < receivers; ++r)
        bytes += exp.metrics().payload_between(r, c.workload.warmup_ns, c.workload.duration_ns);
    out.goodput_gbps = gbps(bytes, c.workload.duration_ns - c.workload.warmup_ns);
    std::size_t post = 0;
    for (const CreditSnapshot& s : exp.metrics().credit_rows())
        post += s.time >= c.workload.warmup_ns;
    out.mean_at_senders = static_cast<double>(at_senders / post);
    return out;
}

// ---------------------------------------------------------------------------
// 6: B sweep on all-to-all traffic.

struct SweepPoint {
    double goodput = 0;
    double mean_queue = 0;
};

SweepPoint b_sweep_point(double b_mult) {
    RunConfig c;
    set_config_key(c, "size_dist", "wkc");
    c.workload.applied_load_fraction = 1.0;
    c.workload.duration_ns = 6 * kNsPerMs;
    c.workload.warmup_ns = 1 * kNsPerMs;
    c.protocol.global_bucket_bytes = static_cast<std::uint64_t>(b_mult * static_cast<double>(c.protocol.bdp_bytes));
    ExperimentOptions o;
    o.queue_samples = false;
    Experiment exp(c, o);
    exp.run();
    const Summary s = exp.metrics().summary();
    return {s.max_goodput_gbps, s.mean_tor_queue_bytes};
}

// ---------------------------------------------------------------------------
// 8: invariant suite across traffic configurations, plus a trace audit.

Outcome invariant_suite() {
    struct Case {
        const char* name;
        std::string text;
    };
    const std::vector<Case> cases{
        {"balanced-wka", "size_dist = wka\napplied_load_fraction = 0.8\nduration_ns = 1ms\n"},
        {"balanced-wkb", "size_dist = wkb\napplied_load_fraction = 0.8\nduration_ns = 1ms\n"},
        {"balanced-wkc", "size_dist = wkc\napplied_load_fraction = 0.9\nduration_ns = 2ms\n"},
        {"core-wkb", "traffic_config = core\nsize_dist = wkb\napplied_load_fraction = 0.9\nduration_ns = 1ms\n"},
        {"incast-wkb", "traffic_config = incast\nsize_dist = wkb\napplied_load_fraction = 0.5\nduration_ns = 1ms\n"},
        {"no-lanes-rr", "priority_lanes = 1\nreceiver_policy = rr\nsender_policy = rr\nsize_dist = wkb\n"
                        "applied_load_fraction = 0.8\nduration_ns = 1ms\n"},
        {"sthr-inf", "sender_threshold_bytes = inf\nsize_dist = wkb\napplied_load_fraction = 0.8\nduration_ns = 1ms\n"},
        {"unsched-2bdp", "unsched_threshold_bytes = 2xBDP\nsize_dist = wkb\napplied_load_fraction = 0.8\n"
                         "duration_ns = 1ms\n"},
    };
    std::size_t completed = 0;
    std::uint64_t grants_audited = 0;
    for (const Case& k : cases) {
        RunConfig c = parse_config_text(k.text, k.name);
        std::stringstream trace;
        ExperimentOptions o;
        o.queue_samples = false;
        o.trace = &trace;
        try {
            Experiment exp(c, o);
            exp.run();
            for (const MessageRecord& m : exp.metrics().messages())
                if (m.completed_ns && m.slowdown() < 1.0)
                    return {false, std::string(k.name) + ": slowdown below 1"};
            if (exp.cluster().reclaim_events() != 0)
                return {false, std::string(k.name) + ": spurious credit reclaim without loss"};
        } catch (const InvariantViolation& e) {
            return {false, std::string(k.name) + ": " + e.what()};
        }
        // Trace audit: every grant keeps b within [0, B].
        std::string line;
        std::getline(trace, line);
        while (std::getline(trace, line)) {
            std::vector<std::string> f;
            std::stringstream ls(line);
            std::string cell;
            while (std::getline(ls, cell, ','))
                f.push_back(cell);
            if (f.size() != 8)
                return {false, std::string(k.name) + ": malformed trace row"};
            if (f[1] == "grant") {
                ++grants_audited;
                if (std::stoull(f[6]) > c.protocol.global_bucket_bytes)
                    return {false, std::string(k.name) + ": grant above B in trace"};
            }
        }
        ++completed;
    }
    return {true, std::to_string(completed) + " configurations, " + std::to_string(grants_audited) +
                      " grants audited, no violations"};
}

// ---------------------------------------------------------------------------
// 9: loss recovery.

struct LossRun {
    SimTime completion = -1;
    std::vector<std::vector<std::string>> trace;
};

LossRun loss_run(bool drop) {
    RunConfig c = two_rack_config();
    c.workload.duration_ns = 3 * kNsPerMs;
    c.workload.warmup_ns = 0;
    std::stringstream trace;
    ExperimentOptions o;
    o.queue_samples = false;
    o.trace = &trace;
    Experiment exp(c, o);
    if (drop) {
        int seen = 0;
        exp.fabric().set_drop_hook([&seen](const Packet& p) { return p.is_scheduled_data() && ++seen == 5; });
    }
    const MsgId id = exp.inject(16, 0, 1'000'000);
    exp.run();
    LossRun r;
    if (auto t = exp.metrics().messages()[id].completed_ns)
        r.completion = *t;
    std::string line;
    std::getline(trace, line);
    while (std::getline(trace, line)) {
        std::vector<std::string> f;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ','))
            f.push_back(cell);
        r.trace.push_back(f);
    }
    return r;
}

Outcome loss_recovery() {
    const LossRun base = loss_run(false);
    const LossRun lossy = loss_run(true);
    const SimTime timeout = ProtocolParams{}.loss_timeout_ns;
    if (base.completion < 0 || lossy.completion < 0)
        return {false, "message did not complete"};
    const SimTime extra = lossy.completion - base.completion;

    // Find the drop, the reclaim, and the first grant after the reclaim.
    std::uint64_t dropped = 0;
    std::uint64_t reclaimed = 0;
    std::int64_t b_before = -1, b_after_reclaim = -1, b_after_regrant = -1;
    std::uint64_t regrant = 0;
    for (std::size_t i = 0; i < lossy.trace.size(); ++i) {
        const auto& f = lossy.trace[i];
        if (f[1] == "drop")
            dropped = std::stoull(f[5]);
        if (f[1] == "reclaim" && reclaimed == 0) {
            reclaimed = std::stoull(f[5]);
            b_after_reclaim = std::stoll(f[6]);
            b_before = b_after_reclaim + static_cast<std::int64_t>(reclaimed);
            for (std::size_t j = i + 1; j < lossy.trace.size(); ++j)
                if (lossy.trace[j][1] == "grant") {
                    regrant = std::stoull(lossy.trace[j][5]);
                    b_after_regrant = std::stoll(lossy.trace[j][6]);
                    break;
                }
        }
    }
    std::size_t reclaims = 0;
    for (const auto& f : lossy.trace)
        reclaims += f[1] == "reclaim";
    const bool ok = extra >= timeout && extra <= timeout + kLossExtraMaxNs && dropped == 9000 && reclaimed == 9000 &&
                    regrant == 9000 && reclaims == 1 && b_after_regrant - b_after_reclaim == 9000 &&
                    b_before - b_after_reclaim == 9000;
    return {ok, "completion delayed " + fmt(extra / 1e3, 1) + " us (timeout " + fmt(timeout / 1e3, 0) +
                    " us), dropped " + std::to_string(dropped) + " B, reclaimed " + std::to_string(reclaimed) +
                    " B, re-granted " + std::to_string(regrant) + " B, b " + std::to_string(b_before) + " -> " +
                    std::to_string(b_after_reclaim) + " -> " + std::to_string(b_after_regrant)};
}

// ---------------------------------------------------------------------------
// 10: determinism.

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / "sirdsim_acceptance_determinism";
    fs::remove_all(root);
    RunConfig c = parse_config_text("traffic_config = incast\nsize_dist = wkb\napplied_load_fraction = 0.7\n"
                                    "hosts_per_tor = 8\nnum_tors = 4\nduration_ns = 1ms\ntrace = true\nseed = 42\n",
                                    "determinism");
    run_config(c, (root / "a").string());
    run_config(c, (root / "b").string());
    std::size_t files = 0;
    for (const char* name : {"messages.csv", "queues.csv", "goodput.csv", "credit.csv", "summary.csv", "trace.csv"}) {
        const std::string a = slurp(root / "a" / name);
        const std::string b = slurp(root / "b" / name);
        if (a.empty() || a != b)
            return {false, std::string(name) + " differs between runs"};
        ++files;
    }
    fs::remove_all(root);
    return {true, std::to_string(files) + " artifacts byte-identical across two runs"};
}

}  // namespace

int main() {
    int failures = 0;
    auto report = [&](int id, const char* name, const Outcome& o) {
        std::cout << "criterion " << id << " [" << (o.pass ? "PASS" : "FAIL") << "] " << name << ": " << o.detail
                  << std::endl;
        failures += o.pass ? 0 : 1;
    };
    auto guarded = [](const std::function<Outcome()>& fn) -> Outcome {
        try {
            return fn();
        } catch (const std::exception& e) {
            return {false, std::string("exception: ") + e.what()};
        }
    };

    IncastRun inc;
    const Outcome inc_err = guarded([&] {
        inc = incast_run();
        return Outcome{true, ""};
    });
    report(1, "incast utilization", inc_err.pass ? Outcome{inc.victim_gbps >= kIncastMinGoodputGbps && inc.sched_peak <= inc.sched_bound,
                                                           "victim goodput " + fmt(inc.victim_gbps) + " Gbps (>= " +
                                                               fmt(kIncastMinGoodputGbps, 0) +
                                                               "), peak scheduled downlink queue " +
                                                               std::to_string(inc.sched_peak) + " B (<= " +
                                                               std::to_string(inc.sched_bound) + ")"}
                                                 : inc_err);
    report(2, "probe latency under incast",
           inc_err.pass ? Outcome{inc.probes > 0 && inc.probe_p99_excess <= static_cast<double>(kProbeSlackNs),
                                  std::to_string(inc.probes) + " probes, p99 latency ideal + " +
                                      fmt(inc.probe_p99_excess, 0) + " ns (ideal " + std::to_string(inc.probe_ideal) +
                                      " ns, allowed + " + std::to_string(kProbeSlackNs) + " ns)"}
                        : inc_err);

    report(3, "outcast credit convergence", guarded([] {
               const double bdp = 100'000;
               const OutcastRun half = outcast_run(50'000);
               const OutcastRun inf = outcast_run(kInfiniteBytes);
               const double target = (bdp + 50'000) / 3.0;
               bool ok = half.mean_credit >= kOutcastCreditLo * bdp && half.mean_credit <= kOutcastCreditHi * bdp;
               std::string alloc;
               for (double a : half.mean_alloc) {
                   ok = ok && std::abs(a - target) <= kOutcastAllocTolerance * target;
                   alloc += (alloc.empty() ? "" : "/") + fmt(a / 1e3, 1);
               }
               ok = ok && inf.mean_credit >= kOutcastInfCreditLo * bdp && inf.mean_credit <= kOutcastInfCreditHi * bdp;
               std::string inf_alloc;
               for (double a : inf.mean_alloc) {
                   ok = ok && std::abs(a - bdp) <= kOutcastInfAllocTolerance * bdp;
                   inf_alloc += (inf_alloc.empty() ? "" : "/") + fmt(a / 1e3, 1);
               }
               return Outcome{ok, "SThr=0.5BDP: sender credit " + fmt(half.mean_credit / bdp) + " BDP, allocations " +
                                      alloc + " KB (target " + fmt(target / 1e3, 1) + " KB +-30%); SThr=inf: " +
                                      fmt(inf.mean_credit / bdp) + " BDP at the sender, allocations " + inf_alloc +
                                      " KB (target 100.0 KB +-10%)"};
           }));

    report(4, "steady-state sufficiency sweep", guarded([] {
               const ProtocolParams p;
               double worst = 2.0;
               std::string worst_at;
               bool oracle_ok = true;
               int n = 0;
               for (std::uint32_t k = 1; k <= 4; ++k)
                   for (std::uint32_t f = std::max(2u, k + 1); f <= 5; ++f) {
                       oracle_ok = oracle_ok && steady_state_oracle({k, f}, p) <=
                                                    static_cast<double>(min_global_bucket(p.sender_threshold_bytes, p.bdp_bytes));
                       const double u = eq2_probe_utilization(k, f);
                       ++n;
                       if (u < worst) {
                           worst = u;
                           worst_at = "k=" + std::to_string(k) + ",f=" + std::to_string(f);
                       }
                   }
               return Outcome{oracle_ok && worst >= kEq2MinUtilization,
                              std::to_string(n) + " (k,f) scenarios, min probe utilization " + fmt(100 * worst, 1) +
                                  "% at " + worst_at + " (>= 95%), oracle <= B bound " +
                                  (oracle_ok ? "holds" : "VIOLATED")};
           }));

    SharedRun half, inf;
    const Outcome shared_err = guarded([&] {
        half = shared_sender_run(50'000);
        inf = shared_sender_run(kInfiniteBytes);
        return Outcome{true, ""};
    });
    report(5, "informed overcommitment benefit",
           shared_err.pass ? Outcome{half.goodput_gbps >= kOvercommitMinGain * inf.goodput_gbps,
                                     "goodput SThr=0.5BDP " + fmt(half.goodput_gbps, 1) + " Gbps vs SThr=inf " +
                                         fmt(inf.goodput_gbps, 1) + " Gbps (gain " +
                                         fmt(100 * (half.goodput_gbps / inf.goodput_gbps - 1), 1) + "%, need >= 15%)"}
                           : shared_err);

    report(6, "queuing-vs-B frontier", guarded([] {
               const std::vector<double> mults{1.0, 1.5, 2.0, 4.0};
               std::vector<SweepPoint> pts;
               for (double m : mults)
                   pts.push_back(b_sweep_point(m));
               bool ok = true;
               std::string desc;
               for (std::size_t i = 0; i < pts.size(); ++i) {
                   if (i > 0)
                       ok = ok && pts[i].goodput >= pts[i - 1].goodput && pts[i].mean_queue >= pts[i - 1].mean_queue;
                   desc += (i ? "; " : "") + fmt(mults[i], 1) + "xBDP: " + fmt(pts[i].goodput) + " Gbps, " +
                           fmt(pts[i].mean_queue / 1e3, 1) + " KB";
               }
               ok = ok && (pts[3].goodput - pts[2].goodput) < (pts[1].goodput - pts[0].goodput);
               return Outcome{ok, desc};
           }));

    report(7, "credit-location accounting",
           shared_err.pass ? Outcome{half.snapshots_exact && inf.snapshots_exact &&
                                         half.mean_at_senders < inf.mean_at_senders,
                                     std::to_string(half.snapshots + inf.snapshots) +
                                         " snapshots sum exactly to the budget; mean credit at senders " +
                                         fmt(half.mean_at_senders / 1e3, 1) + " KB (SThr=0.5BDP) < " +
                                         fmt(inf.mean_at_senders / 1e3, 1) + " KB (SThr=inf)"}
                           : shared_err);

    report(8, "protocol invariant suite", guarded(invariant_suite));
    report(9, "loss recovery", guarded(loss_recovery));
    report(10, "determinism", guarded(determinism));

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
    return failures == 0 ? 0 : 1;
}
