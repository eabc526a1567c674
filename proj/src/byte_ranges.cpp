#include "sirdsim/byte_ranges.hpp"

#include <algorithm>

namespace sirdsim {

std::uint64_t ByteRangeSet::insert(ByteRange r) {
    if (r.begin >= r.end)
        return 0;
    const std::uint64_t before = overlap(r);
    std::uint64_t begin = r.begin;
    std::uint64_t end = r.end;

    auto it = spans_.upper_bound(begin);
    if (it != spans_.begin()) {
        auto prev = std::prev(it);
        if (prev->second >= begin)
            it = prev;
    }
    while (it != spans_.end() && it->first <= end) {
        begin = std::min(begin, it->first);
        end = std::max(end, it->second);
        total_ -= it->second - it->first;
        it = spans_.erase(it);
    }
    spans_.emplace(begin, end);
    total_ += end - begin;
    return r.size() - before;
}

std::uint64_t ByteRangeSet::erase(ByteRange r) {
    if (r.begin >= r.end)
        return 0;
    std::uint64_t removed = 0;
    auto it = spans_.upper_bound(r.begin);
    if (it != spans_.begin())
        --it;
    while (it != spans_.end() && it->first < r.end) {
        const std::uint64_t b = it->first;
        const std::uint64_t e = it->second;
        if (e <= r.begin) {
            ++it;
            continue;
        }
        it = spans_.erase(it);
        total_ -= e - b;
        if (b < r.begin) {
            spans_.emplace(b, r.begin);
            total_ += r.begin - b;
        }
        if (e > r.end) {
            it = spans_.emplace(r.end, e).first;
            total_ += e - r.end;
        }
        removed += std::min(e, r.end) - std::max(b, r.begin);
    }
    return removed;
}

std::uint64_t ByteRangeSet::overlap(ByteRange r) const {
    if (r.begin >= r.end)
        return 0;
    std::uint64_t n = 0;
    auto it = spans_.upper_bound(r.begin);
    if (it != spans_.begin())
        --it;
    for (; it != spans_.end() && it->first < r.end; ++it) {
        const std::uint64_t b = std::max(it->first, r.begin);
        const std::uint64_t e = std::min(it->second, r.end);
        if (e > b)
            n += e - b;
    }
    return n;
}

std::optional<ByteRange> ByteRangeSet::front(std::uint64_t max_bytes) const {
    if (spans_.empty() || max_bytes == 0)
        return std::nullopt;
    const auto& [b, e] = *spans_.begin();
    return ByteRange{b, std::min(e, b + max_bytes)};
}

std::vector<ByteRange> ByteRangeSet::intervals() const {
    std::vector<ByteRange> out;
    out.reserve(spans_.size());
    for (const auto& [b, e] : spans_)
        out.push_back({b, e});
    return out;
}

std::vector<ByteRange> ByteRangeSet::gaps(ByteRange within) const {
    std::vector<ByteRange> out;
    std::uint64_t cursor = within.begin;
    for (const auto& [b, e] : spans_) {
        if (e <= cursor)
            continue;
        if (b >= within.end)
            break;
        if (b > cursor)
            out.push_back({cursor, std::min(b, within.end)});
        cursor = std::max(cursor, e);
        if (cursor >= within.end)
            break;
    }
    if (cursor < within.end)
        out.push_back({cursor, within.end});
    return out;
}

}  // namespace sirdsim
