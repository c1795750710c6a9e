#pragma once

#include <cstdint>

#include "sixmap/transport.hpp"

namespace sixmap {

/// Live ICMPv6 transport over raw sockets. Requires CAP_NET_RAW. Outgoing
/// probes are handed to the kernel transport-first (the kernel builds the
/// IPv6 header; the hop limit travels via IPV6_UNICAST_HOPS), and received
/// ICMPv6 messages are re-framed with a synthetic IPv6 header so the decoder
/// sees the same wire shape the simulator produces.
class RawSocketTransport : public PacketTransport {
public:
    RawSocketTransport();
    ~RawSocketTransport() override;

    RawSocketTransport(const RawSocketTransport&) = delete;
    RawSocketTransport& operator=(const RawSocketTransport&) = delete;

    void send(const ProbePacket& p) override;
    std::optional<RawResponse> receive() override;
    std::uint64_t now_us() const override;
    std::uint64_t wait_for_activity(std::uint64_t deadline_us) override;
    bool ok() const override { return ok_; }

private:
    int send_fd_ = -1;
    int recv_fd_ = -1;
    std::uint64_t epoch_us_ = 0;
    bool ok_ = true;
};

}  // namespace sixmap
