#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sixmap/addr.hpp"

namespace sixmap {

/// RFC 1071 Internet checksum: ones'-complement sum of 16-bit words,
/// odd trailing byte zero-padded on the right, result complemented.
std::uint16_t internet_checksum(std::span<const std::uint8_t> data);

enum class Protocol { Icmp6Echo, TcpSyn, TcpAck, Udp };

std::string_view to_string(Protocol p);
std::optional<Protocol> parse_protocol(std::string_view s);

/// Transport header length preceding the 12-byte state payload.
int transport_header_len(Protocol p);

inline constexpr std::uint32_t kDefaultMagic = 0x364d4150;  // "6MAP"
inline constexpr std::size_t kPayloadLen = 12;
inline constexpr std::size_t kIpv6HeaderLen = 40;

/// Campaign-constant header inputs shared by every probe of one instance.
struct ProbeEndpoint {
    Address source;
    std::uint32_t magic = kDefaultMagic;
    std::uint8_t instance = 0;
    std::uint16_t dest_port = 80;  // TCP/UDP probes only
};

/// The 12-byte payload plus the target checksum carried in the transport
/// source port (TCP/UDP) or identifier (ICMPv6).
struct ProbeState {
    std::uint32_t magic = 0;
    std::uint8_t instance = 0;
    std::uint8_t hop_limit = 0;
    std::uint32_t timestamp_ms = 0;
    std::uint16_t fudge = 0;
    std::uint16_t target_checksum = 0;
};

struct ProbePacket {
    Address target;
    Protocol protocol = Protocol::Icmp6Echo;
    ProbeState state;
    std::vector<std::uint8_t> wire;  // full IPv6 packet
};

/// Builds the full probe packet. Every header byte except the IPv6 hop-limit
/// byte is constant per (endpoint, protocol, target): the state payload's
/// fudge field absorbs the hop-limit and timestamp deltas so the transport
/// checksum always equals the value obtained with zeroed state.
ProbePacket encode_probe(const ProbeEndpoint& ep, Protocol proto, const Address& target,
                         std::uint8_t hop_limit, std::uint32_t timestamp_ms);

/// Fields a simulator or forwarder needs from a probe on the wire.
struct ParsedProbe {
    Address source;
    Address target;
    std::uint8_t ip_hop_limit = 0;
    Protocol protocol = Protocol::Icmp6Echo;
    ProbeState state;
};

std::optional<ParsedProbe> parse_probe(std::span<const std::uint8_t> wire);

// Response builders. Each returns a full IPv6 packet from `responder` back to
// the probe's source. Error responses quote the probe with its hop-limit byte
// zeroed, as an expiring router would have seen it.
std::vector<std::uint8_t> build_time_exceeded(const Address& responder,
                                              std::span<const std::uint8_t> probe_wire);
std::vector<std::uint8_t> build_dest_unreachable(const Address& responder, std::uint8_t code,
                                                 std::span<const std::uint8_t> probe_wire);
std::vector<std::uint8_t> build_echo_reply(const Address& responder,
                                           std::span<const std::uint8_t> probe_wire);

struct DecodedResponse {
    Address responder;
    Address quoted_target;
    std::uint8_t sent_hop_limit = 0;
    std::uint32_t sent_timestamp_ms = 0;
    std::int64_t rtt_ms = 0;
    std::uint8_t icmp_type = 0;
    std::uint8_t icmp_code = 0;
    bool checksum_ok = false;
    std::uint16_t fudge = 0;
    std::uint16_t transport_field = 0;
};

enum class DecodeStatus {
    Ok,
    Foreign,      // well-formed item that is not ours (magic/instance mismatch)
    Unparseable,  // truncated or not a recognizable response
};

struct DecodeResult {
    DecodeStatus status = DecodeStatus::Unparseable;
    DecodedResponse response;
    std::string error;
};

/// Decodes a full IPv6 response packet (Time Exceeded, Destination
/// Unreachable, or Echo Reply). Matching is stateless: everything is
/// recovered from the packet bytes; `recv_ms` is milliseconds since the
/// campaign epoch the quoted timestamps were written against.
DecodeResult decode_response(std::span<const std::uint8_t> wire, std::uint64_t recv_ms,
                             std::uint32_t expected_magic, std::uint8_t expected_instance);

}  // namespace sixmap
