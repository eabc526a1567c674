#include <vector>

#include "doctest.h"
#include "sirdsim/byte_ranges.hpp"
#include "sirdsim/rng.hpp"

using namespace sirdsim;

TEST_CASE("insert coalesces and reports new bytes") {
    ByteRangeSet s;
    CHECK(s.insert({0, 100}) == 100);
    CHECK(s.insert({200, 300}) == 100);
    CHECK(s.insert({50, 250}) == 100);
    CHECK(s.total() == 300);
    CHECK(s.intervals() == std::vector<ByteRange>{{0, 300}});
    CHECK(s.insert({0, 300}) == 0);
    CHECK(s.insert({300, 310}) == 10);
    CHECK(s.intervals().size() == 1);
}

TEST_CASE("erase splits intervals") {
    ByteRangeSet s({0, 1000});
    CHECK(s.erase({100, 200}) == 100);
    CHECK(s.intervals() == std::vector<ByteRange>{{0, 100}, {200, 1000}});
    CHECK(s.erase({50, 250}) == 100);
    CHECK(s.erase({5000, 6000}) == 0);
    CHECK(s.total() == 800);
}

TEST_CASE("front, gaps, overlap") {
    ByteRangeSet s;
    s.insert({100, 20'000});
    s.insert({30'000, 31'000});
    CHECK(s.front(9000) == ByteRange{100, 9100});
    CHECK(s.front(1'000'000) == ByteRange{100, 20'000});
    CHECK(s.gaps({0, 40'000}) == std::vector<ByteRange>{{0, 100}, {20'000, 30'000}, {31'000, 40'000}});
    CHECK(s.overlap({0, 200}) == 100);
    CHECK(s.contains({200, 300}));
    CHECK_FALSE(s.contains({19'000, 21'000}));
    CHECK_FALSE(ByteRangeSet{}.front(10).has_value());
}

TEST_CASE("random operations agree with a bitmap") {
    constexpr std::uint64_t kSpan = 512;
    RngStream rng(9, "byte-ranges");
    ByteRangeSet s;
    std::vector<bool> bits(kSpan, false);
    for (int step = 0; step < 5000; ++step) {
        std::uint64_t a = rng.below(kSpan), b = rng.below(kSpan + 1);
        if (a > b)
            std::swap(a, b);
        const ByteRange r{a, b};
        std::uint64_t expect = 0;
        const bool ins = rng.below(2) == 0;
        for (std::uint64_t i = a; i < b; ++i) {
            if (bits[i] != ins)
                ++expect;
            bits[i] = ins;
        }
        CHECK((ins ? s.insert(r) : s.erase(r)) == expect);

        std::uint64_t total = 0;
        for (bool bit : bits)
            total += bit;
        CHECK(s.total() == total);
    }
    // Intervals are disjoint, sorted, non-adjacent and match the bitmap.
    std::vector<bool> rebuilt(kSpan, false);
    std::uint64_t prev_end = 0;
    bool first = true;
    for (const ByteRange& r : s.intervals()) {
        CHECK(r.begin < r.end);
        if (!first)
            CHECK(r.begin > prev_end);
        first = false;
        prev_end = r.end;
        for (std::uint64_t i = r.begin; i < r.end; ++i)
            rebuilt[i] = true;
    }
    CHECK(rebuilt == bits);
}
