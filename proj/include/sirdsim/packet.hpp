#pragma once

#include <cstdint>
#include <string_view>

namespace sirdsim {

using HostId = std::uint32_t;
using MsgId = std::uint64_t;

enum class PacketKind : std::uint8_t {
    Data,    // payload; zero-length scheduled DATA is a credit request
    Credit,  // receiver -> sender grant for a byte range
    Resend,  // receiver -> sender request to retransmit an unscheduled range
};

std::string_view to_string(PacketKind kind);

constexpr std::uint8_t kLaneHigh = 0;
constexpr std::uint8_t kLaneNormal = 1;

struct Packet {
    PacketKind kind = PacketKind::Data;
    HostId src = 0;
    HostId dst = 0;
    MsgId msg_id = 0;
    std::uint64_t msg_size = 0;       // total message size, carried by DATA
    std::uint32_t unsched_bytes = 0;  // unscheduled prefix length of the message
    std::uint64_t offset = 0;         // DATA: payload offset; CREDIT/RESEND: start of the range
    std::uint32_t length = 0;         // DATA payload bytes (0 for control packets)
    std::uint32_t range_bytes = 0;    // CREDIT/RESEND: size of the referenced range
    std::uint32_t carries_credit = 0; // consumed (scheduled DATA) or granted (CREDIT) credit
    bool csn = false;
    bool ecn_ce = false;
    bool unscheduled = false;
    std::uint8_t priority = kLaneNormal;
    std::uint64_t uid = 0;            // assigned by the fabric on injection

    bool is_credit_request() const { return kind == PacketKind::Data && length == 0 && !unscheduled; }
    bool is_scheduled_data() const { return kind == PacketKind::Data && !unscheduled && length > 0; }
    std::uint32_t wire_bytes(std::uint32_t header_bytes) const { return length + header_bytes; }
};

}  // namespace sirdsim
