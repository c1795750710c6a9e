#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sixmap/codec.hpp"

namespace sixmap {

struct RawResponse {
    std::vector<std::uint8_t> wire;  // full IPv6 response packet
    std::uint64_t recv_us = 0;       // microseconds since campaign epoch

    std::uint64_t recv_ms() const { return recv_us / 1000; }
};

/// Packet transport the engine drives. The transport owns the campaign
/// clock: a simulator backend advances virtual time, a raw-socket backend
/// tracks the wall clock. Both deliver each response at most once.
class PacketTransport {
public:
    virtual ~PacketTransport() = default;

    virtual void send(const ProbePacket& p) = 0;

    /// Non-blocking: next response that has arrived by now, if any.
    virtual std::optional<RawResponse> receive() = 0;

    /// Microseconds since the campaign epoch.
    virtual std::uint64_t now_us() const = 0;

    /// Blocks (or advances virtual time) until something is deliverable or
    /// the deadline passes; returns the current time.
    virtual std::uint64_t wait_for_activity(std::uint64_t deadline_us) = 0;

    virtual bool ok() const { return true; }

    std::uint64_t now_ms() const { return now_us() / 1000; }
};

class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace sixmap
