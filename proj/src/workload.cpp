#include "sirdsim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace sirdsim {

EmpiricalCdf::EmpiricalCdf(std::vector<std::pair<double, double>> points) : points_(std::move(points)) {
    if (points_.empty())
        throw WorkloadError("empirical CDF has no points");
    for (std::size_t i = 0; i < points_.size(); ++i) {
        const auto [s, p] = points_[i];
        if (!(s >= 1.0) || !(p > 0.0 && p <= 1.0))
            throw WorkloadError("empirical CDF point " + std::to_string(i + 1) + " out of range");
        if (i > 0 && (s <= points_[i - 1].first || p <= points_[i - 1].second))
            throw WorkloadError("empirical CDF must be strictly increasing in both columns (line " +
                                std::to_string(i + 1) + ")");
    }
    if (std::abs(points_.back().second - 1.0) > 1e-9)
        throw WorkloadError("empirical CDF must end at probability 1.0");
    points_.back().second = 1.0;
}

EmpiricalCdf EmpiricalCdf::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw WorkloadError("cannot open CDF file: " + path);
    std::vector<std::pair<double, double>> pts;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        ls.imbue(std::locale::classic());
        double s = 0;
        double p = 0;
        if (!(ls >> s))
            continue;
        if (!(ls >> p))
            throw WorkloadError(path + ":" + std::to_string(lineno) + ": expected 'size probability'");
        pts.emplace_back(s, p);
    }
    return EmpiricalCdf(std::move(pts));
}

double EmpiricalCdf::quantile(double u) const {
    if (u <= points_.front().second)
        return points_.front().first;
    auto it = std::lower_bound(points_.begin(), points_.end(), u,
                               [](const std::pair<double, double>& pt, double v) { return pt.second < v; });
    if (it == points_.end())
        return points_.back().first;
    const auto& [s1, p1] = *it;
    const auto& [s0, p0] = *std::prev(it);
    return s0 + (s1 - s0) * (u - p0) / (p1 - p0);
}

double EmpiricalCdf::mean() const {
    double m = points_.front().first * points_.front().second;
    for (std::size_t i = 1; i < points_.size(); ++i)
        m += (points_[i].second - points_[i - 1].second) * 0.5 * (points_[i].first + points_[i - 1].first);
    return m;
}

SizeDistribution::SizeDistribution(const WorkloadSpec& spec) : kind_(spec.size_dist) {
    const double mean = static_cast<double>(spec.mean_size_bytes);
    if (kind_ != SizeDistKind::Empirical && !(mean >= 1.0))
        throw WorkloadError("mean_size_bytes must be >= 1");
    switch (kind_) {
    case SizeDistKind::Fixed:
    case SizeDistKind::Exponential:
        mean_ = mean;
        break;
    case SizeDistKind::Lognormal:
        if (!(spec.lognormal_sigma > 0.0))
            throw WorkloadError("lognormal_sigma must be > 0");
        sigma_ = spec.lognormal_sigma;
        mu_ = std::log(mean) - sigma_ * sigma_ / 2.0;
        mean_ = mean;
        break;
    case SizeDistKind::Bimodal:
        small_ = static_cast<double>(spec.bimodal_small_bytes);
        small_prob_ = spec.bimodal_small_prob;
        if (!(small_prob_ > 0.0 && small_prob_ < 1.0))
            throw WorkloadError("bimodal_small_prob must be in (0, 1)");
        large_ = (mean - small_prob_ * small_) / (1.0 - small_prob_);
        if (!(small_ >= 1.0) || large_ < small_)
            throw WorkloadError("bimodal_small_bytes must be >= 1 and not exceed mean_size_bytes");
        mean_ = mean;
        break;
    case SizeDistKind::Empirical:
        if (spec.cdf_file.empty())
            throw WorkloadError("size_dist = empirical requires cdf_file");
        cdf_ = EmpiricalCdf::load(spec.cdf_file);
        mean_ = cdf_->mean();
        break;
    }
}

std::uint64_t SizeDistribution::sample(RngStream& rng) const {
    double v = mean_;
    switch (kind_) {
    case SizeDistKind::Fixed:
        break;
    case SizeDistKind::Exponential:
        v = rng.exponential(mean_);
        break;
    case SizeDistKind::Lognormal:
        v = std::exp(rng.normal(mu_, sigma_));
        break;
    case SizeDistKind::Bimodal:
        v = rng.uniform() < small_prob_ ? small_ : large_;
        break;
    case SizeDistKind::Empirical:
        v = cdf_->quantile(rng.uniform());
        break;
    }
    return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::llround(v)));
}

double arrival_rate_per_s(double load, std::int64_t link_bps, double mean_size_bytes) {
    return load * static_cast<double>(link_bps) / (mean_size_bytes * 8.0);
}

HostId uniform_peer(HostId self, std::uint32_t num_hosts, RngStream& rng) {
    if (num_hosts < 2)
        throw WorkloadError("traffic needs at least two hosts");
    auto d = static_cast<HostId>(rng.below(num_hosts - 1));
    return d >= self ? d + 1 : d;
}

PoissonSource::PoissonSource(HostId self, std::uint32_t num_hosts, double rate_per_s, const SizeDistribution& sizes,
                             RngStream rng)
    : self_(self), num_hosts_(num_hosts), mean_gap_ns_(1e9 / rate_per_s), sizes_(sizes), rng_(std::move(rng)) {
    if (!(rate_per_s > 0.0))
        throw WorkloadError("arrival rate must be > 0");
}

Arrival PoissonSource::next() {
    clock_ns_ += rng_.exponential(mean_gap_ns_);
    Arrival a;
    a.at = static_cast<SimTime>(std::llround(clock_ns_));
    a.dst = uniform_peer(self_, num_hosts_, rng_);
    a.size = sizes_.sample(rng_);
    return a;
}

double incast_period_ns(const IncastSpec& spec, double total_load, std::uint32_t num_hosts, std::int64_t link_bps) {
    if (!(spec.load_fraction > 0.0 && spec.load_fraction < 1.0))
        throw WorkloadError("incast_load_fraction must be in (0, 1)");
    const double burst_bits = static_cast<double>(spec.num_senders) * static_cast<double>(spec.burst_size_bytes) * 8.0;
    const double incast_bps = spec.load_fraction * total_load * num_hosts * static_cast<double>(link_bps);
    return burst_bits / incast_bps * 1e9;
}

IncastBurst incast_burst(const IncastSpec& spec, std::uint32_t num_hosts, RngStream& rng) {
    if (spec.num_senders == 0 || spec.num_senders > num_hosts - 1)
        throw WorkloadError("incast_senders must be in [1, hosts - 1]");
    IncastBurst b;
    b.size = spec.burst_size_bytes;
    b.victim = static_cast<HostId>(rng.below(num_hosts));
    std::vector<HostId> pool;
    pool.reserve(num_hosts - 1);
    for (HostId h = 0; h < num_hosts; ++h)
        if (h != b.victim)
            pool.push_back(h);
    // Partial Fisher-Yates: the first num_senders entries become a uniform sample.
    for (std::uint32_t i = 0; i < spec.num_senders; ++i) {
        const std::size_t j = i + rng.below(pool.size() - i);
        std::swap(pool[i], pool[j]);
        b.senders.push_back(pool[i]);
    }
    return b;
}

std::vector<FlowLine> load_flows(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw WorkloadError("cannot open flows file: " + path);
    std::vector<FlowLine> flows;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        ls.imbue(std::locale::classic());
        std::vector<std::int64_t> f;
        std::int64_t v = 0;
        while (ls >> v)
            f.push_back(v);
        if (!ls.eof())
            throw WorkloadError(path + ":" + std::to_string(lineno) + ": non-numeric field");
        if (f.empty())
            continue;
        if (f.size() != 4 && f.size() != 6)
            throw WorkloadError(path + ":" + std::to_string(lineno) +
                                ": expected 'start_ns src dst size [period_ns count]'");
        if (f[0] < 0 || f[1] < 0 || f[2] < 0 || f[3] <= 0 || f[1] == f[2])
            throw WorkloadError(path + ":" + std::to_string(lineno) + ": invalid flow");
        FlowLine fl{f[0], static_cast<HostId>(f[1]), static_cast<HostId>(f[2]), static_cast<std::uint64_t>(f[3])};
        if (f.size() == 6) {
            if (f[4] <= 0 || f[5] <= 0)
                throw WorkloadError(path + ":" + std::to_string(lineno) + ": period and count must be > 0");
            fl.period_ns = f[4];
            fl.count = static_cast<std::uint64_t>(f[5]);
        }
        flows.push_back(fl);
    }
    return flows;
}

}  // namespace sirdsim
