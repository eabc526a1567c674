#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace sirdsim {

/// Half-open byte interval [begin, end).
struct ByteRange {
    std::uint64_t begin = 0;
    std::uint64_t end = 0;

    std::uint64_t size() const { return end - begin; }
    bool operator==(const ByteRange&) const = default;
};

/// A set of disjoint, coalesced byte intervals.
class ByteRangeSet {
public:
    ByteRangeSet() = default;
    explicit ByteRangeSet(ByteRange r) { insert(r); }

    /// Returns the number of bytes that were not already present.
    std::uint64_t insert(ByteRange r);
    /// Returns the number of bytes that were present and removed.
    std::uint64_t erase(ByteRange r);
    std::uint64_t overlap(ByteRange r) const;
    bool contains(ByteRange r) const { return overlap(r) == r.size(); }

    std::uint64_t total() const { return total_; }
    bool empty() const { return total_ == 0; }
    /// Lowest interval, truncated to at most max_bytes.
    std::optional<ByteRange> front(std::uint64_t max_bytes) const;
    std::vector<ByteRange> intervals() const;
    /// Sub-ranges of `within` not covered by this set.
    std::vector<ByteRange> gaps(ByteRange within) const;

private:
    std::map<std::uint64_t, std::uint64_t> spans_;  // begin -> end
    std::uint64_t total_ = 0;
};

}  // namespace sirdsim
