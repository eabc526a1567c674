#include "sirdsim/experiment.hpp"

#include <filesystem>
#include <iostream>
#include <locale>

#include "sirdsim/invariants.hpp"

namespace sirdsim {

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write " + path.string());
    out.imbue(std::locale::classic());
    return out;
}

std::string sanitize(const std::string& s) {
    std::string out;
    for (char c : s)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '_') ? c : '_';
    return out;
}

}  // namespace

Experiment::Experiment(const RunConfig& cfg, ExperimentOptions opts) : cfg_(cfg) {
    validate_config(cfg_);
    fabric_ = std::make_unique<Fabric>(sim_, cfg_.effective_topology(), cfg_.seed);
    cluster_ = std::make_unique<SirdCluster>(sim_, *fabric_, cfg_.protocol);
    CollectorOptions co;
    co.warmup_ns = cfg_.workload.warmup_ns;
    co.goodput_window_ns = cfg_.goodput_window_ns;
    co.exclude_incast_from_slowdown = cfg_.traffic == TrafficConfig::Incast;
    co.record_queue_samples = opts.queue_samples;
    metrics_ = std::make_unique<MetricsCollector>(*cluster_, co);
    cluster_->set_trace(opts.trace);
}

MsgId Experiment::inject(HostId src, HostId dst, std::uint64_t size, bool incast) {
    const MsgId id = next_id_++;
    metrics_->on_message_created(id, src, dst, size, incast);
    cluster_->start_message(id, src, dst, size);
    return id;
}

void Experiment::inject_at(SimTime at, HostId src, HostId dst, std::uint64_t size, bool incast) {
    sim_.post(at, [this, src, dst, size, incast] { inject(src, dst, size, incast); });
}

void Experiment::start_traffic() {
    if (traffic_started_)
        return;
    traffic_started_ = true;
    const std::uint32_t hosts = fabric_->num_hosts();
    const std::int64_t host_bps = gbps_to_bps(cfg_.topology.host_link_gbps);
    const bool incast = cfg_.traffic == TrafficConfig::Incast;

    if (cfg_.background_traffic) {
        const double load = cfg_.effective_load() * (incast ? 1.0 - cfg_.incast.load_fraction : 1.0);
        sizes_ = std::make_unique<SizeDistribution>(cfg_.workload);
        const double rate = arrival_rate_per_s(load, host_bps, sizes_->mean());
        for (HostId h = 0; h < hosts; ++h) {
            sources_.push_back(std::make_unique<PoissonSource>(h, hosts, rate, *sizes_,
                                                               RngStream(cfg_.seed, "workload/" + std::to_string(h))));
            schedule_poisson(h);
        }
    }
    if (incast) {
        incast_rng_ = std::make_unique<RngStream>(cfg_.seed, "incast");
        incast_period_ = cfg_.incast.period_ns > 0
                             ? static_cast<double>(cfg_.incast.period_ns)
                             : incast_period_ns(cfg_.incast, cfg_.effective_load(), hosts, host_bps);
        schedule_incast(static_cast<SimTime>(incast_rng_->uniform() * incast_period_));
    }
    if (!cfg_.workload.flows_file.empty()) {
        for (const FlowLine& f : load_flows(cfg_.workload.flows_file))
            for (std::uint64_t i = 0; i < f.count; ++i) {
                const SimTime at = f.start_ns + static_cast<SimTime>(i) * f.period_ns;
                if (at < cfg_.workload.duration_ns)
                    inject_at(at, f.src, f.dst, f.size);
            }
    }
}

void Experiment::schedule_poisson(HostId h) {
    const Arrival a = sources_[h]->next();
    if (a.at >= cfg_.workload.duration_ns)
        return;
    sim_.post(a.at, [this, h, a] {
        inject(h, a.dst, a.size);
        schedule_poisson(h);
    });
}

void Experiment::schedule_incast(SimTime at) {
    if (at >= cfg_.workload.duration_ns)
        return;
    sim_.post(at, [this, at] {
        const IncastBurst b = incast_burst(cfg_.incast, fabric_->num_hosts(), *incast_rng_);
        for (HostId s : b.senders)
            inject(s, b.victim, b.size, true);
        schedule_incast(at + static_cast<SimTime>(std::llround(incast_period_)));
    });
}

void Experiment::sample() {
    const SimTime now = sim_.now();
    metrics_->sample_queues(now);
    metrics_->sample_credit(now);
    metrics_->check_packet_conservation();
    cluster_->audit();
    if (sample_hook_)
        sample_hook_(now);
    sim_.post(now + cfg_.sample_interval_ns, [this] { sample(); });
}

void Experiment::advance_to(SimTime t) {
    if (!sampler_started_) {
        sampler_started_ = true;
        sim_.post(sim_.now() + cfg_.sample_interval_ns, [this] { sample(); });
    }
    sim_.run_until(t);
}

void Experiment::run() {
    start_traffic();
    advance_to(cfg_.workload.duration_ns);
    finish();
}

void Experiment::finish() {
    if (finished_)
        return;
    finished_ = true;
    metrics_->check_packet_conservation();
    cluster_->audit();
    cluster_->credit_snapshot();
    metrics_->finish(sim_.now());
}

const std::vector<std::string>& summary_columns() {
    static const std::vector<std::string> cols{
        "max_goodput_gbps", "mean_tor_queue_bytes", "max_tor_queue_bytes", "p50_slowdown", "p99_slowdown",
        "p50_slowdown_A",   "p99_slowdown_A",       "p50_slowdown_B",      "p99_slowdown_B", "p50_slowdown_C",
        "p99_slowdown_C",   "p50_slowdown_D",       "p99_slowdown_D"};
    return cols;
}

std::vector<std::string> summary_values(const Summary& s) {
    std::vector<std::string> v{format_double(s.max_goodput_gbps), format_double(s.mean_tor_queue_bytes),
                               format_double(s.max_tor_queue_bytes), format_double(s.p50_slowdown),
                               format_double(s.p99_slowdown)};
    for (std::size_t c = 0; c < 4; ++c) {
        v.push_back(format_double(s.p50_by_class[c]));
        v.push_back(format_double(s.p99_by_class[c]));
    }
    return v;
}

namespace {

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i)
        out << (i ? "," : "") << cells[i];
    out << '\n';
}

}  // namespace

void Experiment::write_outputs(const std::string& dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    const fs::path d(dir);

    {
        auto out = open_csv(d / "messages.csv");
        out << "msg_id,src,dst,size,created_ns,completed_ns,slowdown,class\n";
        for (const MessageRecord& r : metrics_->messages()) {
            out << r.id << ',' << r.src << ',' << r.dst << ',' << r.size << ',' << r.created_ns << ',';
            if (r.completed_ns)
                out << *r.completed_ns << ',' << format_double(r.slowdown());
            else
                out << ',';
            out << ',' << r.cls << '\n';
        }
    }
    {
        auto out = open_csv(d / "queues.csv");
        out << "time_ns,switch,port,lane,bytes\n";
        for (const QueueRow& q : metrics_->queue_rows()) {
            out << q.time << ',' << q.node << ',' << q.port << ',';
            if (q.lane < 0)
                out << "peak";
            else
                out << q.lane;
            out << ',' << q.bytes << '\n';
        }
    }
    {
        auto out = open_csv(d / "goodput.csv");
        out << "window_end_ns,host,gbps\n";
        for (const GoodputRow& g : metrics_->goodput_rows())
            out << g.window_end << ',' << g.host << ',' << format_double(g.gbps) << '\n';
    }
    {
        auto out = open_csv(d / "credit.csv");
        out << "time_ns,at_receivers,in_flight,at_senders\n";
        for (const CreditSnapshot& c : metrics_->credit_rows())
            out << c.time << ',' << c.at_receivers << ',' << c.in_flight << ',' << c.at_senders << '\n';
    }
    {
        auto out = open_csv(d / "summary.csv");
        write_row(out, summary_columns());
        write_row(out, summary_values(metrics_->summary()));
    }
    {
        std::ofstream out(d / "config.txt");
        out << emit_config(cfg_);
    }
}

Summary run_config(const RunConfig& cfg, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::ofstream trace;
    ExperimentOptions opts;
    if (cfg.trace) {
        trace = open_csv(std::filesystem::path(out_dir) / "trace.csv");
        opts.trace = &trace;
    }
    Experiment exp(cfg, opts);
    exp.run();
    exp.write_outputs(out_dir);
    return exp.metrics().summary();
}

std::vector<SweepPointResult> run_sweep(const RunConfig& base, const std::string& axis,
                                        const std::vector<std::string>& values, const std::string& out_dir) {
    const auto& axes = sweep_axes();
    if (std::find(axes.begin(), axes.end(), axis) == axes.end())
        throw ConfigError(ConfigError::Kind::Invalid, "unsupported sweep axis '" + axis + "'");
    if (values.empty())
        throw ConfigError(ConfigError::Kind::Invalid, "sweep needs at least one value");

    std::vector<SweepPointResult> results;
    for (const std::string& v : values) {
        SweepPointResult r;
        r.value = v;
        try {
            RunConfig cfg = base;
            set_config_key(cfg, axis, v);
            validate_config(cfg);
            const std::string dir = (std::filesystem::path(out_dir) / (axis + "_" + sanitize(v))).string();
            cfg.output_dir = dir;
            r.summary = run_config(cfg, dir);
            r.ok = true;
        } catch (const InvariantViolation& e) {
            r.error = std::string("invariant violation: ") + e.what();
        } catch (const std::exception& e) {
            r.error = e.what();
        }
        results.push_back(std::move(r));
    }

    std::filesystem::create_directories(out_dir);
    auto out = open_csv(std::filesystem::path(out_dir) / "sweep.csv");
    std::vector<std::string> header{"axis", "value"};
    for (const auto& c : summary_columns())
        header.push_back(c);
    write_row(out, header);
    for (const SweepPointResult& r : results) {
        if (!r.ok)
            continue;
        std::vector<std::string> row{axis, r.value};
        for (auto& v : summary_values(r.summary))
            row.push_back(v);
        write_row(out, row);
    }
    return results;
}

}  // namespace sirdsim
