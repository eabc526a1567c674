#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <vector>

#include "doctest.h"
#include "sirdsim/metrics.hpp"
#include "sirdsim/workload.hpp"

using namespace sirdsim;

namespace {

std::filesystem::path temp_file(const std::string& name, const std::string& body) {
    const auto p = std::filesystem::temp_directory_path() / name;
    std::ofstream(p) << body;
    return p;
}

// Linear interpolation on (size, cdf) points, written out independently.
// The first point's probability is an atom at the smallest size.
double cdf_quantile(const std::vector<std::pair<double, double>>& pts, double u) {
    if (u <= pts.front().second)
        return pts.front().first;
    for (std::size_t i = 1; i < pts.size(); ++i)
        if (u <= pts[i].second) {
            const auto [x0, p0] = pts[i - 1];
            const auto [x1, p1] = pts[i];
            return x0 + (x1 - x0) * (u - p0) / (p1 - p0);
        }
    return pts.back().first;
}

}  // namespace

TEST_CASE("arrival rate and mean inter-arrival gap") {
    const double rate = arrival_rate_per_s(0.5, 100'000'000'000, 125'000);
    CHECK(rate == doctest::Approx(0.5 * 100e9 / (125'000 * 8.0)));
    CHECK(rate == doctest::Approx(50'000));

    WorkloadSpec w;
    const SizeDistribution sizes(w);
    PoissonSource src(3, 144, rate, sizes, RngStream(7, "workload-test/gaps"));
    constexpr int kDraws = 100'000;
    SimTime last = 0;
    double sum = 0;
    for (int i = 0; i < kDraws; ++i) {
        const Arrival a = src.next();
        CHECK(a.at >= last);
        sum += static_cast<double>(a.at - last);
        last = a.at;
    }
    CHECK(sum / kDraws == doctest::Approx(20'000).epsilon(0.02));
}

TEST_CASE("fixed size distribution") {
    WorkloadSpec w;
    w.size_dist = SizeDistKind::Fixed;
    w.mean_size_bytes = 9'000;
    const SizeDistribution sizes(w);
    RngStream rng(1, "fixed");
    for (int i = 0; i < 1000; ++i)
        CHECK(sizes.sample(rng) == 9'000);
}

TEST_CASE("sampled means match the configured mean") {
    for (SizeDistKind kind : {SizeDistKind::Exponential, SizeDistKind::Lognormal, SizeDistKind::Bimodal}) {
        for (std::uint64_t mean : {3'000ull, 125'000ull, 2'500'000ull}) {
            WorkloadSpec w;
            w.size_dist = kind;
            w.mean_size_bytes = mean;
            const SizeDistribution sizes(w);
            RngStream rng(11, "mean-check");
            double sum = 0;
            constexpr int kDraws = 1'000'000;
            bool positive = true;
            for (int i = 0; i < kDraws; ++i) {
                const std::uint64_t s = sizes.sample(rng);
                positive = positive && s > 0;
                sum += static_cast<double>(s);
            }
            INFO("kind " << static_cast<int>(kind) << " mean " << mean);
            CHECK(positive);
            CHECK(sum / kDraws == doctest::Approx(static_cast<double>(mean)).epsilon(0.02));
        }
    }
}

TEST_CASE("destinations are uniform over peers and never self") {
    RngStream rng(5, "peers");
    std::vector<std::uint64_t> hits(144, 0);
    constexpr int kDraws = 1'000'000;
    for (int i = 0; i < kDraws; ++i)
        ++hits[uniform_peer(17, 144, rng)];
    CHECK(hits[17] == 0);
    const double expect = kDraws / 143.0;
    double chi2 = 0;
    for (HostId h = 0; h < 144; ++h)
        if (h != 17)
            chi2 += (hits[h] - expect) * (hits[h] - expect) / expect;
    // 142 degrees of freedom; the 0.999 quantile is about 201.
    CHECK(chi2 < 201);
    CHECK_THROWS_AS(uniform_peer(0, 1, rng), WorkloadError);
}

TEST_CASE("incast bursts") {
    IncastSpec spec;
    RngStream rng(2, "incast-test");
    for (int i = 0; i < 200; ++i) {
        const IncastBurst b = incast_burst(spec, 144, rng);
        CHECK(b.size == 500'000);
        REQUIRE(b.senders.size() == 30);
        CHECK(b.victim < 144);
        const std::set<HostId> distinct(b.senders.begin(), b.senders.end());
        CHECK(distinct.size() == 30);
        CHECK(distinct.count(b.victim) == 0);
    }
    spec.num_senders = 1;
    const IncastBurst single = incast_burst(spec, 144, rng);
    REQUIRE(single.senders.size() == 1);
    CHECK(single.senders[0] != single.victim);

    spec.num_senders = 144;
    CHECK_THROWS_AS(incast_burst(spec, 144, rng), WorkloadError);
}

TEST_CASE("incast period from the load fraction") {
    const IncastSpec spec;
    const double period = incast_period_ns(spec, 0.5, 144, 100'000'000'000);
    CHECK(period == doctest::Approx(30.0 * 500'000 * 8 / (0.07 * 0.5 * 144 * 100e9) * 1e9));
    CHECK(period == doctest::Approx(238'095).epsilon(0.001));
}

TEST_CASE("empirical CDF sampling reproduces the file quantiles") {
    const std::vector<std::pair<double, double>> pts{
        {1'000, 0.05}, {10'000, 0.4}, {100'000, 0.95}, {1'000'000, 1.0}};
    std::string body = "# size cdf\n";
    for (const auto& [x, p] : pts)
        body += std::to_string(static_cast<long>(x)) + " " + std::to_string(p) + "\n";
    const auto path = temp_file("sirdsim-cdf-test.txt", body);

    WorkloadSpec w;
    w.size_dist = SizeDistKind::Empirical;
    w.cdf_file = path.string();
    const SizeDistribution sizes(w);
    RngStream rng(4, "cdf-test");
    std::vector<double> draws;
    for (int i = 0; i < 400'000; ++i)
        draws.push_back(static_cast<double>(sizes.sample(rng)));
    for (double p : {50.0, 90.0, 99.0}) {
        INFO("p" << p);
        CHECK(percentile(draws, p) == doctest::Approx(cdf_quantile(pts, p / 100.0)).epsilon(0.01));
    }

    // Atom plus trapezoid mean of the piecewise-linear CDF.
    double mean = pts.front().first * pts.front().second;
    for (std::size_t i = 1; i < pts.size(); ++i)
        mean += (pts[i].second - pts[i - 1].second) * (pts[i].first + pts[i - 1].first) / 2;
    CHECK(sizes.mean() == doctest::Approx(mean));
    std::filesystem::remove(path);
}

TEST_CASE("malformed CDFs are rejected") {
    CHECK_THROWS(EmpiricalCdf({{100, 0.5}}));
    CHECK_THROWS(EmpiricalCdf({{100, 0.0}, {200, 1.0}}));
    CHECK_THROWS(EmpiricalCdf({{100, 0.1}, {50, 1.0}}));
    CHECK_THROWS(EmpiricalCdf({{100, 0.0}, {200, 0.4}}));
    CHECK_THROWS(EmpiricalCdf::load("/nonexistent/cdf.txt"));
}

TEST_CASE("offered load converges to the applied fraction") {
    for (double load : {0.3, 0.5, 0.9}) {
        WorkloadSpec w;
        const SizeDistribution sizes(w);
        const double rate = arrival_rate_per_s(load, 100'000'000'000, sizes.mean());
        PoissonSource src(0, 144, rate, sizes, RngStream(8, "load-test"));
        constexpr SimTime kHorizon = 2000 * kNsPerMs;
        double bytes = 0;
        for (Arrival a = src.next(); a.at < kHorizon; a = src.next())
            bytes += static_cast<double>(a.size);
        const double bps = bytes * 8 / (static_cast<double>(kHorizon) / 1e9);
        INFO("load " << load);
        CHECK(bps == doctest::Approx(load * 100e9).epsilon(0.02));
    }
}

TEST_CASE("flow files") {
    const auto path = temp_file("sirdsim-flows-test.txt", "# start src dst size [period count]\n"
                                                          "0 1 2 9000\n"
                                                          "1000 3 0 500000 20000 4\n");
    const std::vector<FlowLine> flows = load_flows(path.string());
    REQUIRE(flows.size() == 2);
    CHECK(flows[0].count == 1);
    CHECK(flows[1].start_ns == 1000);
    CHECK(flows[1].src == 3);
    CHECK(flows[1].size == 500'000);
    CHECK(flows[1].period_ns == 20'000);
    CHECK(flows[1].count == 4);

    const auto bad = temp_file("sirdsim-flows-bad.txt", "0 1 two 9000\n");
    CHECK_THROWS(load_flows(bad.string()));
    std::filesystem::remove(path);
    std::filesystem::remove(bad);
}
