#include "sixmap/rawsock.hpp"

#include <cerrno>
#include <chrono>
#include <cstring>

#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

namespace sixmap {

namespace {

std::uint64_t monotonic_us() {
    return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::microseconds>(
                                          std::chrono::steady_clock::now().time_since_epoch())
                                          .count());
}

}  // namespace

RawSocketTransport::RawSocketTransport() {
    send_fd_ = ::socket(AF_INET6, SOCK_RAW, IPPROTO_ICMPV6);
    recv_fd_ = ::socket(AF_INET6, SOCK_RAW, IPPROTO_ICMPV6);
    if (send_fd_ < 0 || recv_fd_ < 0) {
        int err = errno;
        if (send_fd_ >= 0)
            ::close(send_fd_);
        if (recv_fd_ >= 0)
            ::close(recv_fd_);
        throw TransportError(std::string("raw ICMPv6 socket: ") + std::strerror(err) +
                             (err == EPERM || err == EACCES ? " (needs CAP_NET_RAW)" : ""));
    }
    epoch_us_ = monotonic_us();
}

RawSocketTransport::~RawSocketTransport() {
    if (send_fd_ >= 0)
        ::close(send_fd_);
    if (recv_fd_ >= 0)
        ::close(recv_fd_);
}

void RawSocketTransport::send(const ProbePacket& p) {
    if (p.protocol != Protocol::Icmp6Echo)
        throw TransportError("raw transport currently sends ICMPv6 probes only");

    int hops = p.state.hop_limit;
    if (::setsockopt(send_fd_, IPPROTO_IPV6, IPV6_UNICAST_HOPS, &hops, sizeof hops) < 0) {
        ok_ = false;
        throw TransportError(std::string("IPV6_UNICAST_HOPS: ") + std::strerror(errno));
    }

    sockaddr_in6 dst{};
    dst.sin6_family = AF_INET6;
    auto bytes = p.target.bytes();
    std::memcpy(dst.sin6_addr.s6_addr, bytes.data(), 16);

    // Hand the kernel the transport part; it prepends the IPv6 header and
    // rewrites the ICMPv6 checksum (to the same value we computed).
    const std::uint8_t* upper = p.wire.data() + kIpv6HeaderLen;
    std::size_t upper_len = p.wire.size() - kIpv6HeaderLen;
    if (::sendto(send_fd_, upper, upper_len, 0, reinterpret_cast<sockaddr*>(&dst),
                 sizeof dst) < 0) {
        ok_ = false;
        throw TransportError(std::string("sendto: ") + std::strerror(errno));
    }
}

std::optional<RawResponse> RawSocketTransport::receive() {
    std::uint8_t buf[2048];
    sockaddr_in6 from{};
    socklen_t fromlen = sizeof from;
    ssize_t n = ::recvfrom(recv_fd_, buf, sizeof buf, MSG_DONTWAIT,
                           reinterpret_cast<sockaddr*>(&from), &fromlen);
    if (n < 0) {
        if (errno == EAGAIN || errno == EWOULDBLOCK)
            return std::nullopt;
        ok_ = false;
        throw TransportError(std::string("recvfrom: ") + std::strerror(errno));
    }

    // Normalize to a full IPv6 packet: raw ICMPv6 sockets strip the header.
    RawResponse r;
    r.recv_us = now_us();
    r.wire.resize(kIpv6HeaderLen + static_cast<std::size_t>(n));
    r.wire[0] = 0x60;
    r.wire[4] = static_cast<std::uint8_t>(n >> 8);
    r.wire[5] = static_cast<std::uint8_t>(n);
    r.wire[6] = 58;
    r.wire[7] = 64;
    std::memcpy(r.wire.data() + 8, from.sin6_addr.s6_addr, 16);
    std::memcpy(r.wire.data() + kIpv6HeaderLen, buf, static_cast<std::size_t>(n));
    return r;
}

std::uint64_t RawSocketTransport::now_us() const {
    return monotonic_us() - epoch_us_;
}

std::uint64_t RawSocketTransport::wait_for_activity(std::uint64_t deadline_us) {
    std::uint64_t now = now_us();
    if (now >= deadline_us)
        return now;
    pollfd pfd{recv_fd_, POLLIN, 0};
    int timeout_ms = static_cast<int>((deadline_us - now) / 1000);
    ::poll(&pfd, 1, timeout_ms > 0 ? timeout_ms : 1);
    return now_us();
}

}  // namespace sixmap
