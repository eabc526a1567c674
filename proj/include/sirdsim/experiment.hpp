// Experiment orchestration: builds a fabric and cluster from a RunConfig,
// drives traffic, samples metrics and writes the CSV artifacts.
#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "sirdsim/config.hpp"
#include "sirdsim/engine.hpp"
#include "sirdsim/fabric.hpp"
#include "sirdsim/host.hpp"
#include "sirdsim/metrics.hpp"
#include "sirdsim/workload.hpp"

namespace sirdsim {

struct ExperimentOptions {
    bool queue_samples = true;  // keep per-sample rows for queues.csv
    std::ostream* trace = nullptr;
};

class Experiment {
public:
    explicit Experiment(const RunConfig& cfg, ExperimentOptions opts = {});
    Experiment(const Experiment&) = delete;
    Experiment& operator=(const Experiment&) = delete;

    Simulator& sim() { return sim_; }
    Fabric& fabric() { return *fabric_; }
    SirdCluster& cluster() { return *cluster_; }
    MetricsCollector& metrics() { return *metrics_; }
    const RunConfig& config() const { return cfg_; }

    /// Starts a message now and registers it with the metrics.
    MsgId inject(HostId src, HostId dst, std::uint64_t size, bool incast = false);
    /// Starts a message at a future time.
    void inject_at(SimTime at, HostId src, HostId dst, std::uint64_t size, bool incast = false);

    /// Runs to the configured duration (generating the configured traffic)
    /// and finalizes the metrics.
    void run();
    /// Advances to `t` with periodic sampling active; may be called repeatedly.
    void advance_to(SimTime t);
    /// Closes the metrics at the current time.
    void finish();

    /// Hook called after every periodic sample.
    void set_sample_hook(std::function<void(SimTime)> hook) { sample_hook_ = std::move(hook); }

    void write_outputs(const std::string& dir) const;

private:
    void start_traffic();
    void schedule_poisson(HostId h);
    void schedule_incast(SimTime at);
    void sample();

    RunConfig cfg_;
    Simulator sim_;
    std::unique_ptr<Fabric> fabric_;
    std::unique_ptr<SirdCluster> cluster_;
    std::unique_ptr<MetricsCollector> metrics_;
    std::unique_ptr<SizeDistribution> sizes_;
    std::vector<std::unique_ptr<PoissonSource>> sources_;
    std::unique_ptr<RngStream> incast_rng_;
    double incast_period_ = 0;
    MsgId next_id_ = 0;
    bool sampler_started_ = false;
    bool traffic_started_ = false;
    bool finished_ = false;
    std::function<void(SimTime)> sample_hook_;
};

/// Column names of summary.csv, in order.
const std::vector<std::string>& summary_columns();
std::vector<std::string> summary_values(const Summary& s);

/// Runs one configuration and writes its artifacts into `out_dir`.
Summary run_config(const RunConfig& cfg, const std::string& out_dir);

struct SweepPointResult {
    std::string value;
    bool ok = false;
    std::string error;
    Summary summary;
};

/// Runs one point per value; failures are reported per point. Writes
/// sweep.csv into `out_dir` and each point's artifacts into a subdirectory.
std::vector<SweepPointResult> run_sweep(const RunConfig& base, const std::string& axis,
                                        const std::vector<std::string>& values, const std::string& out_dir);

}  // namespace sirdsim
