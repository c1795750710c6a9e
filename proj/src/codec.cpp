#include "sixmap/codec.hpp"

#include <cstring>

namespace sixmap {

namespace {

// Ones'-complement 16-bit add with end-around carry.
std::uint16_t oc_add(std::uint16_t a, std::uint16_t b) {
    std::uint32_t s = static_cast<std::uint32_t>(a) + b;
    return static_cast<std::uint16_t>((s & 0xffff) + (s >> 16));
}

void put16(std::vector<std::uint8_t>& v, std::size_t off, std::uint16_t x) {
    v[off] = static_cast<std::uint8_t>(x >> 8);
    v[off + 1] = static_cast<std::uint8_t>(x);
}

void put32(std::vector<std::uint8_t>& v, std::size_t off, std::uint32_t x) {
    for (int i = 0; i < 4; i++)
        v[off + static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(x >> (24 - 8 * i));
}

std::uint16_t get16(std::span<const std::uint8_t> v, std::size_t off) {
    return static_cast<std::uint16_t>(v[off] << 8 | v[off + 1]);
}

std::uint32_t get32(std::span<const std::uint8_t> v, std::size_t off) {
    return static_cast<std::uint32_t>(v[off]) << 24 | static_cast<std::uint32_t>(v[off + 1]) << 16 |
           static_cast<std::uint32_t>(v[off + 2]) << 8 | v[off + 3];
}

Address addr_at(std::span<const std::uint8_t> v, std::size_t off) {
    return Address::from_bytes(std::span<const std::uint8_t, 16>(v.data() + off, 16));
}

std::uint8_t next_header(Protocol p) {
    switch (p) {
    case Protocol::Icmp6Echo: return 58;
    case Protocol::TcpSyn:
    case Protocol::TcpAck: return 6;
    case Protocol::Udp: return 17;
    }
    return 0;
}

std::size_t checksum_offset(Protocol p) {
    switch (p) {
    case Protocol::Icmp6Echo: return 2;
    case Protocol::Udp: return 6;
    case Protocol::TcpSyn:
    case Protocol::TcpAck: return 16;
    }
    return 0;
}

// Internet checksum of an upper-layer packet under the IPv6 pseudo-header.
std::uint16_t upper_checksum(const Address& src, const Address& dst, std::uint8_t next,
                             std::span<const std::uint8_t> upper) {
    std::vector<std::uint8_t> buf;
    buf.reserve(40 + upper.size());
    auto sb = src.bytes();
    auto db = dst.bytes();
    buf.insert(buf.end(), sb.begin(), sb.end());
    buf.insert(buf.end(), db.begin(), db.end());
    std::uint32_t len = static_cast<std::uint32_t>(upper.size());
    buf.push_back(static_cast<std::uint8_t>(len >> 24));
    buf.push_back(static_cast<std::uint8_t>(len >> 16));
    buf.push_back(static_cast<std::uint8_t>(len >> 8));
    buf.push_back(static_cast<std::uint8_t>(len));
    buf.push_back(0);
    buf.push_back(0);
    buf.push_back(0);
    buf.push_back(next);
    buf.insert(buf.end(), upper.begin(), upper.end());
    return internet_checksum(buf);
}

void write_ipv6_header(std::vector<std::uint8_t>& v, const Address& src, const Address& dst,
                       std::uint8_t next, std::uint8_t hop_limit, std::uint16_t payload_len) {
    v[0] = 0x60;
    v[1] = v[2] = v[3] = 0;  // traffic class and flow label zero
    put16(v, 4, payload_len);
    v[6] = next;
    v[7] = hop_limit;
    auto sb = src.bytes();
    auto db = dst.bytes();
    std::memcpy(v.data() + 8, sb.data(), 16);
    std::memcpy(v.data() + 24, db.data(), 16);
}

}  // namespace

std::uint16_t internet_checksum(std::span<const std::uint8_t> data) {
    std::uint32_t sum = 0;
    std::size_t i = 0;
    for (; i + 1 < data.size(); i += 2)
        sum += static_cast<std::uint32_t>(data[i]) << 8 | data[i + 1];
    if (i < data.size())
        sum += static_cast<std::uint32_t>(data[i]) << 8;
    while (sum >> 16)
        sum = (sum & 0xffff) + (sum >> 16);
    return static_cast<std::uint16_t>(~sum & 0xffff);
}

std::string_view to_string(Protocol p) {
    switch (p) {
    case Protocol::Icmp6Echo: return "icmp6";
    case Protocol::TcpSyn: return "tcp-syn";
    case Protocol::TcpAck: return "tcp-ack";
    case Protocol::Udp: return "udp";
    }
    return "?";
}

std::optional<Protocol> parse_protocol(std::string_view s) {
    if (s == "icmp6" || s == "icmp")
        return Protocol::Icmp6Echo;
    if (s == "tcp-syn" || s == "tcp")
        return Protocol::TcpSyn;
    if (s == "tcp-ack")
        return Protocol::TcpAck;
    if (s == "udp")
        return Protocol::Udp;
    return std::nullopt;
}

int transport_header_len(Protocol p) {
    switch (p) {
    case Protocol::Icmp6Echo: return 8;
    case Protocol::Udp: return 8;
    case Protocol::TcpSyn:
    case Protocol::TcpAck: return 20;
    }
    return 0;
}

ProbePacket encode_probe(const ProbeEndpoint& ep, Protocol proto, const Address& target,
                         std::uint8_t hop_limit, std::uint32_t timestamp_ms) {
    const std::size_t thl = static_cast<std::size_t>(transport_header_len(proto));
    const std::size_t upper_len = thl + kPayloadLen;

    ProbePacket pkt;
    pkt.target = target;
    pkt.protocol = proto;
    pkt.state.magic = ep.magic;
    pkt.state.instance = ep.instance;
    pkt.state.hop_limit = hop_limit;
    pkt.state.timestamp_ms = timestamp_ms;
    pkt.state.target_checksum = internet_checksum(target.bytes());

    // The fudge word cancels the state field deltas in ones'-complement
    // arithmetic, so the transport checksum matches the zeroed-state value
    // for this target no matter which hop limit and timestamp we carry.
    std::uint16_t delta = oc_add(hop_limit, oc_add(static_cast<std::uint16_t>(timestamp_ms >> 16),
                                                   static_cast<std::uint16_t>(timestamp_ms)));
    pkt.state.fudge = static_cast<std::uint16_t>(~delta);

    std::vector<std::uint8_t> wire(kIpv6HeaderLen + upper_len, 0);
    write_ipv6_header(wire, ep.source, target, next_header(proto),
                      hop_limit, static_cast<std::uint16_t>(upper_len));

    std::size_t t = kIpv6HeaderLen;
    switch (proto) {
    case Protocol::Icmp6Echo:
        wire[t] = 128;  // echo request
        wire[t + 1] = 0;
        put16(wire, t + 4, pkt.state.target_checksum);  // identifier
        put16(wire, t + 6, 0);                          // sequence
        break;
    case Protocol::Udp:
        put16(wire, t, pkt.state.target_checksum);  // source port
        put16(wire, t + 2, ep.dest_port);
        put16(wire, t + 4, static_cast<std::uint16_t>(upper_len));
        break;
    case Protocol::TcpSyn:
    case Protocol::TcpAck:
        put16(wire, t, pkt.state.target_checksum);  // source port
        put16(wire, t + 2, ep.dest_port);
        wire[t + 12] = 0x50;  // data offset 5 words
        wire[t + 13] = proto == Protocol::TcpSyn ? 0x02 : 0x10;
        put16(wire, t + 14, 0xffff);  // window
        break;
    }

    std::size_t pl = t + thl;
    put32(wire, pl, pkt.state.magic);
    wire[pl + 4] = pkt.state.instance;
    wire[pl + 5] = pkt.state.hop_limit;
    put32(wire, pl + 6, pkt.state.timestamp_ms);
    put16(wire, pl + 10, pkt.state.fudge);

    std::uint16_t csum = upper_checksum(ep.source, target, next_header(proto),
                                        std::span(wire).subspan(t));
    if (proto == Protocol::Udp && csum == 0)
        csum = 0xffff;
    put16(wire, t + checksum_offset(proto), csum);

    pkt.wire = std::move(wire);
    return pkt;
}

std::optional<ParsedProbe> parse_probe(std::span<const std::uint8_t> wire) {
    if (wire.size() < kIpv6HeaderLen + 8 || (wire[0] >> 4) != 6)
        return std::nullopt;
    ParsedProbe p;
    p.source = addr_at(wire, 8);
    p.target = addr_at(wire, 24);
    p.ip_hop_limit = wire[7];

    std::size_t t = kIpv6HeaderLen;
    switch (wire[6]) {
    case 58:
        if (wire[t] != 128)
            return std::nullopt;
        p.protocol = Protocol::Icmp6Echo;
        break;
    case 17: p.protocol = Protocol::Udp; break;
    case 6:
        if (wire.size() < t + 20)
            return std::nullopt;
        p.protocol = (wire[t + 13] & 0x02) ? Protocol::TcpSyn : Protocol::TcpAck;
        break;
    default: return std::nullopt;
    }

    std::size_t thl = static_cast<std::size_t>(transport_header_len(p.protocol));
    if (wire.size() < t + thl + kPayloadLen)
        return std::nullopt;
    std::size_t pl = t + thl;
    p.state.magic = get32(wire, pl);
    p.state.instance = wire[pl + 4];
    p.state.hop_limit = wire[pl + 5];
    p.state.timestamp_ms = get32(wire, pl + 6);
    p.state.fudge = get16(wire, pl + 10);
    p.state.target_checksum =
        p.protocol == Protocol::Icmp6Echo ? get16(wire, t + 4) : get16(wire, t);
    return p;
}

namespace {

std::vector<std::uint8_t> build_error(const Address& responder, std::uint8_t type,
                                      std::uint8_t code, std::span<const std::uint8_t> probe_wire) {
    Address probe_src = addr_at(probe_wire, 8);
    std::size_t upper_len = 8 + probe_wire.size();
    std::vector<std::uint8_t> wire(kIpv6HeaderLen + upper_len, 0);
    write_ipv6_header(wire, responder, probe_src, 58, 64,
                      static_cast<std::uint16_t>(upper_len));
    wire[40] = type;
    wire[41] = code;
    std::memcpy(wire.data() + 48, probe_wire.data(), probe_wire.size());
    wire[48 + 7] = 0;  // quoted hop limit as seen at expiry
    std::uint16_t csum = upper_checksum(responder, probe_src, 58, std::span(wire).subspan(40));
    put16(wire, 42, csum);
    return wire;
}

}  // namespace

std::vector<std::uint8_t> build_time_exceeded(const Address& responder,
                                              std::span<const std::uint8_t> probe_wire) {
    return build_error(responder, 3, 0, probe_wire);
}

std::vector<std::uint8_t> build_dest_unreachable(const Address& responder, std::uint8_t code,
                                                 std::span<const std::uint8_t> probe_wire) {
    return build_error(responder, 1, code, probe_wire);
}

std::vector<std::uint8_t> build_echo_reply(const Address& responder,
                                           std::span<const std::uint8_t> probe_wire) {
    Address probe_src = addr_at(probe_wire, 8);
    std::size_t upper_len = 8 + kPayloadLen;
    std::vector<std::uint8_t> wire(kIpv6HeaderLen + upper_len, 0);
    write_ipv6_header(wire, responder, probe_src, 58, 64,
                      static_cast<std::uint16_t>(upper_len));
    wire[40] = 129;  // echo reply
    wire[41] = 0;
    // identifier, sequence and payload echoed from the request
    std::memcpy(wire.data() + 44, probe_wire.data() + kIpv6HeaderLen + 4, 4);
    std::memcpy(wire.data() + 48, probe_wire.data() + kIpv6HeaderLen + 8, kPayloadLen);
    std::uint16_t csum = upper_checksum(responder, probe_src, 58, std::span(wire).subspan(40));
    put16(wire, 42, csum);
    return wire;
}

namespace {

DecodeResult fail(DecodeStatus st, std::string why) {
    DecodeResult r;
    r.status = st;
    r.error = std::move(why);
    return r;
}

std::int64_t rtt_from(std::uint64_t recv_ms, std::uint32_t sent_ms) {
    // 32-bit wrap-aware difference, signed.
    std::uint32_t d = static_cast<std::uint32_t>(recv_ms) - sent_ms;
    return d <= 0x7fffffffu ? static_cast<std::int64_t>(d)
                            : -static_cast<std::int64_t>(sent_ms - static_cast<std::uint32_t>(recv_ms));
}

}  // namespace

DecodeResult decode_response(std::span<const std::uint8_t> wire, std::uint64_t recv_ms,
                             std::uint32_t expected_magic, std::uint8_t expected_instance) {
    if (wire.size() < kIpv6HeaderLen + 8)
        return fail(DecodeStatus::Unparseable, "short packet");
    if ((wire[0] >> 4) != 6)
        return fail(DecodeStatus::Unparseable, "not IPv6");
    if (wire[6] != 58)
        return fail(DecodeStatus::Foreign, "not ICMPv6");

    DecodedResponse out;
    out.responder = addr_at(wire, 8);
    out.icmp_type = wire[40];
    out.icmp_code = wire[41];

    if (out.icmp_type == 129) {
        // Direct echo reply: identifier plus echoed payload, no quotation.
        if (wire.size() < 48 + kPayloadLen)
            return fail(DecodeStatus::Unparseable, "truncated echo reply");
        out.transport_field = get16(wire, 44);
        std::size_t pl = 48;
        if (get32(wire, pl) != expected_magic)
            return fail(DecodeStatus::Foreign, "magic mismatch");
        if (wire[pl + 4] != expected_instance)
            return fail(DecodeStatus::Foreign, "instance mismatch");
        out.quoted_target = out.responder;
        out.sent_hop_limit = wire[pl + 5];
        out.sent_timestamp_ms = get32(wire, pl + 6);
        out.fudge = get16(wire, pl + 10);
        out.checksum_ok = internet_checksum(out.responder.bytes()) == out.transport_field;
        out.rtt_ms = rtt_from(recv_ms, out.sent_timestamp_ms);
        return DecodeResult{DecodeStatus::Ok, out, {}};
    }

    if (out.icmp_type != 1 && out.icmp_type != 3)
        return fail(DecodeStatus::Foreign, "unexpected ICMPv6 type");

    // Quoted probe starts after the 8-byte error header.
    std::size_t q = 48;
    if (wire.size() < q + kIpv6HeaderLen + 8)
        return fail(DecodeStatus::Unparseable, "truncated quotation");
    std::span<const std::uint8_t> quote = wire.subspan(q);
    if ((quote[0] >> 4) != 6)
        return fail(DecodeStatus::Unparseable, "quoted packet not IPv6");

    Protocol proto;
    switch (quote[6]) {
    case 58: proto = Protocol::Icmp6Echo; break;
    case 17: proto = Protocol::Udp; break;
    case 6: proto = Protocol::TcpSyn; break;  // header layout shared with ACK
    default: return fail(DecodeStatus::Foreign, "quoted protocol not ours");
    }
    std::size_t thl = static_cast<std::size_t>(transport_header_len(proto));
    if (quote.size() < kIpv6HeaderLen + thl + kPayloadLen)
        return fail(DecodeStatus::Unparseable, "quotation missing payload");

    std::size_t pl = kIpv6HeaderLen + thl;
    if (get32(quote, pl) != expected_magic)
        return fail(DecodeStatus::Foreign, "magic mismatch");
    if (quote[pl + 4] != expected_instance)
        return fail(DecodeStatus::Foreign, "instance mismatch");

    out.quoted_target = addr_at(quote, 24);
    out.sent_hop_limit = quote[pl + 5];
    out.sent_timestamp_ms = get32(quote, pl + 6);
    out.fudge = get16(quote, pl + 10);
    out.transport_field = proto == Protocol::Icmp6Echo ? get16(quote, kIpv6HeaderLen + 4)
                                                       : get16(quote, kIpv6HeaderLen);
    out.checksum_ok = internet_checksum(out.quoted_target.bytes()) == out.transport_field;
    out.rtt_ms = rtt_from(recv_ms, out.sent_timestamp_ms);
    return DecodeResult{DecodeStatus::Ok, out, {}};
}

}  // namespace sixmap
