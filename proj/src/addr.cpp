#include "sixmap/addr.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstdio>

namespace sixmap {

namespace {

bool is_hex_digit(char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

[[noreturn]] void parse_fail(std::string_view text, std::string_view what) {
    throw AddressParseError("bad IPv6 address \"" + std::string(text) + "\": " + std::string(what));
}

// Parses one 16-bit group of 1..4 hex digits.
std::uint16_t parse_group(std::string_view text, std::string_view tok) {
    if (tok.empty() || tok.size() > 4)
        parse_fail(text, "invalid hextet \"" + std::string(tok) + "\"");
    std::uint32_t v = 0;
    for (char c : tok) {
        if (!is_hex_digit(c))
            parse_fail(text, "invalid hextet \"" + std::string(tok) + "\"");
        v = v << 4 | static_cast<std::uint32_t>(c <= '9' ? c - '0' : (c | 0x20) - 'a' + 10);
    }
    return static_cast<std::uint16_t>(v);
}

// Parses a trailing dotted quad into two 16-bit groups.
void parse_v4_tail(std::string_view text, std::string_view tok, std::uint16_t out[2]) {
    std::uint32_t octets[4];
    std::size_t pos = 0;
    for (int i = 0; i < 4; i++) {
        std::size_t dot = i < 3 ? tok.find('.', pos) : tok.size();
        if (dot == std::string_view::npos)
            parse_fail(text, "invalid embedded IPv4 \"" + std::string(tok) + "\"");
        std::string_view part = tok.substr(pos, dot - pos);
        std::uint32_t v = 0;
        auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), v, 10);
        if (ec != std::errc{} || p != part.data() + part.size() || v > 255 || part.empty() ||
            (part.size() > 1 && part.front() == '0'))
            parse_fail(text, "invalid IPv4 octet \"" + std::string(part) + "\"");
        octets[i] = v;
        pos = dot + 1;
    }
    out[0] = static_cast<std::uint16_t>(octets[0] << 8 | octets[1]);
    out[1] = static_cast<std::uint16_t>(octets[2] << 8 | octets[3]);
}

// Splits on ':' and appends the parsed groups; handles an embedded IPv4 tail.
void parse_side(std::string_view text, std::string_view side, std::vector<std::uint16_t>& out) {
    if (side.empty())
        return;
    std::size_t pos = 0;
    while (true) {
        std::size_t colon = side.find(':', pos);
        std::string_view tok =
            colon == std::string_view::npos ? side.substr(pos) : side.substr(pos, colon - pos);
        bool last = colon == std::string_view::npos;
        if (last && tok.find('.') != std::string_view::npos) {
            std::uint16_t v4[2];
            parse_v4_tail(text, tok, v4);
            out.push_back(v4[0]);
            out.push_back(v4[1]);
        } else {
            out.push_back(parse_group(text, tok));
        }
        if (last)
            break;
        pos = colon + 1;
    }
}

}  // namespace

Address Address::parse(std::string_view text) {
    if (text.empty())
        parse_fail(text, "empty string");
    std::size_t gap = text.find("::");
    std::vector<std::uint16_t> head, tail;
    if (gap != std::string_view::npos) {
        if (text.find("::", gap + 1) != std::string_view::npos)
            parse_fail(text, "more than one \"::\"");
        parse_side(text, text.substr(0, gap), head);
        parse_side(text, text.substr(gap + 2), tail);
        if (head.size() + tail.size() > 7)
            parse_fail(text, "too many hextets around \"::\"");
    } else {
        parse_side(text, text, head);
        if (head.size() != 8)
            parse_fail(text, head.size() > 8 ? "too many hextets" : "too few hextets");
    }

    std::array<std::uint16_t, 8> groups{};
    for (std::size_t i = 0; i < head.size(); i++)
        groups[i] = head[i];
    for (std::size_t i = 0; i < tail.size(); i++)
        groups[8 - tail.size() + i] = tail[i];

    Address a;
    for (int i = 0; i < 4; i++)
        a.hi = a.hi << 16 | groups[static_cast<std::size_t>(i)];
    for (int i = 4; i < 8; i++)
        a.lo = a.lo << 16 | groups[static_cast<std::size_t>(i)];
    return a;
}

std::optional<Address> Address::try_parse(std::string_view text) noexcept {
    try {
        return parse(text);
    } catch (const AddressParseError&) {
        return std::nullopt;
    }
}

Address Address::from_bytes(std::span<const std::uint8_t, 16> b) {
    Address a;
    for (int i = 0; i < 8; i++)
        a.hi = a.hi << 8 | b[static_cast<std::size_t>(i)];
    for (int i = 8; i < 16; i++)
        a.lo = a.lo << 8 | b[static_cast<std::size_t>(i)];
    return a;
}

std::array<std::uint8_t, 16> Address::bytes() const {
    std::array<std::uint8_t, 16> b{};
    for (int i = 0; i < 8; i++)
        b[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(hi >> (56 - 8 * i));
    for (int i = 0; i < 8; i++)
        b[static_cast<std::size_t>(8 + i)] = static_cast<std::uint8_t>(lo >> (56 - 8 * i));
    return b;
}

std::string Address::str() const {
    std::uint16_t groups[8];
    for (int i = 0; i < 4; i++)
        groups[i] = static_cast<std::uint16_t>(hi >> (48 - 16 * i));
    for (int i = 0; i < 4; i++)
        groups[4 + i] = static_cast<std::uint16_t>(lo >> (48 - 16 * i));

    // Longest run of >= 2 zero groups wins; leftmost on ties.
    int best_start = -1, best_len = 0;
    for (int i = 0; i < 8;) {
        if (groups[i] != 0) {
            i++;
            continue;
        }
        int j = i;
        while (j < 8 && groups[j] == 0)
            j++;
        if (j - i > best_len) {
            best_start = i;
            best_len = j - i;
        }
        i = j;
    }
    if (best_len < 2)
        best_start = -1;

    char buf[48];
    char* p = buf;
    for (int i = 0; i < 8;) {
        if (i == best_start) {
            *p++ = ':';
            *p++ = ':';
            i += best_len;
            continue;
        }
        p += std::snprintf(p, 6, "%x", groups[i]);
        i++;
        if (i < 8 && i != best_start)
            *p++ = ':';
    }
    return std::string(buf, static_cast<std::size_t>(p - buf));
}

int common_prefix_len(const Address& a, const Address& b) {
    std::uint64_t x = a.hi ^ b.hi;
    if (x != 0)
        return std::countl_zero(x);
    std::uint64_t y = a.lo ^ b.lo;
    if (y != 0)
        return 64 + std::countl_zero(y);
    return 128;
}

Address masked(const Address& a, int len) {
    Address m = a;
    if (len <= 0) {
        m.hi = m.lo = 0;
    } else if (len < 64) {
        m.hi &= ~0ULL << (64 - len);
        m.lo = 0;
    } else if (len == 64) {
        m.lo = 0;
    } else if (len < 128) {
        m.lo &= ~0ULL << (128 - len);
    }
    return m;
}

Prefix Prefix::parse(std::string_view text) {
    std::size_t slash = text.rfind('/');
    if (slash == std::string_view::npos)
        throw AddressParseError("bad prefix \"" + std::string(text) + "\": missing '/'");
    Address base = Address::parse(text.substr(0, slash));
    std::string_view lenpart = text.substr(slash + 1);
    int len = -1;
    auto [p, ec] = std::from_chars(lenpart.data(), lenpart.data() + lenpart.size(), len, 10);
    if (ec != std::errc{} || p != lenpart.data() + lenpart.size() || len < 0 || len > 128)
        throw AddressParseError("bad prefix \"" + std::string(text) + "\": invalid length \"" +
                                std::string(lenpart) + "\"");
    return of(base, len);
}

Prefix Prefix::of(const Address& addr, int len) {
    if (len < 0 || len > 128)
        throw AddressParseError("prefix length " + std::to_string(len) + " out of [0,128]");
    return Prefix{masked(addr, len), len};
}

bool Prefix::contains(const Address& a) const {
    return masked(a, length) == base;
}

std::string Prefix::str() const {
    return base.str() + "/" + std::to_string(length);
}

std::string_view to_string(IidClass c) {
    switch (c) {
    case IidClass::Eui64: return "eui64";
    case IidClass::LowByte: return "lowbyte";
    case IidClass::Randomized: return "randomized";
    }
    return "?";
}

IidClass classify_iid(const Address& a) {
    // 0xfffe infix at IID bytes 3-4, i.e. address bits [88,104).
    if ((a.lo >> 24 & 0xffff) == 0xfffe)
        return IidClass::Eui64;
    if ((a.lo >> 16) == 0 && (a.lo & 0xffff) < 0x1000)
        return IidClass::LowByte;
    return IidClass::Randomized;
}

DplSet compute_dpl(std::vector<Address> members) {
    if (members.empty())
        throw std::invalid_argument("compute_dpl: empty member set");
    std::sort(members.begin(), members.end());
    members.erase(std::unique(members.begin(), members.end()), members.end());

    DplSet out;
    out.dpl.resize(members.size(), 1);
    // Sorted order makes the nearest member (by common prefix) an adjacent one.
    for (std::size_t i = 0; i + 1 < members.size(); i++) {
        int cpl = common_prefix_len(members[i], members[i + 1]);
        out.dpl[i] = std::max(out.dpl[i], 1 + cpl);
        out.dpl[i + 1] = std::max(out.dpl[i + 1], 1 + cpl);
    }
    out.members = std::move(members);
    return out;
}

}  // namespace sixmap
