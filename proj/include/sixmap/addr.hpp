#pragma once

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sixmap {

class AddressParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// 128-bit IPv6 address. `hi` holds bytes 0..7, `lo` bytes 8..15 (the IID),
/// both in host integer order so bitwise arithmetic works naturally.
struct Address {
    std::uint64_t hi = 0;
    std::uint64_t lo = 0;

    static Address parse(std::string_view text);
    static std::optional<Address> try_parse(std::string_view text) noexcept;
    static Address from_bytes(std::span<const std::uint8_t, 16> bytes);

    std::array<std::uint8_t, 16> bytes() const;

    /// Canonical RFC 5952 text form: lowercase, longest zero run compressed.
    std::string str() const;

    std::uint64_t iid() const { return lo; }

    auto operator<=>(const Address&) const = default;
};

struct AddressHash {
    std::size_t operator()(const Address& a) const noexcept {
        std::uint64_t x = a.hi * 0x9e3779b97f4a7c15ULL ^ a.lo;
        x ^= x >> 32;
        return static_cast<std::size_t>(x * 0xff51afd7ed558ccdULL);
    }
};

/// Number of identical leading bits, in [0,128]; 128 iff a == b.
int common_prefix_len(const Address& a, const Address& b);

/// Copy of `a` with all bits at positions >= len zeroed.
Address masked(const Address& a, int len);

struct Prefix {
    Address base;
    int length = 0;

    /// Parses "<address>/<length>". Host bits beyond the length are masked off.
    static Prefix parse(std::string_view text);
    /// Masks host bits; throws on length outside [0,128].
    static Prefix of(const Address& addr, int len);

    bool contains(const Address& a) const;
    std::string str() const;

    auto operator<=>(const Prefix&) const = default;
};

struct PrefixHash {
    std::size_t operator()(const Prefix& p) const noexcept {
        return AddressHash{}(p.base) ^ (static_cast<std::size_t>(p.length) << 1);
    }
};

enum class IidClass { Eui64, LowByte, Randomized };

std::string_view to_string(IidClass c);

/// Total classification of the low 64 bits. EUI-64 wins over LowByte: the
/// 0xff,0xfe infix (address bytes 11-12) is checked first; LowByte requires
/// the top 48 IID bits zero and the low 16 bits < 0x1000.
IidClass classify_iid(const Address& a);

/// Per-member discriminating prefix lengths over a sorted unique member list.
struct DplSet {
    std::vector<Address> members;  // sorted, unique
    std::vector<int> dpl;          // parallel to members, each in [1,128]
};

/// Sorts and deduplicates `members`, then assigns each member
/// 1 + max common prefix length against its sorted neighbors.
/// A singleton set gets dpl = 1. Throws on empty input.
DplSet compute_dpl(std::vector<Address> members);

}  // namespace sixmap
