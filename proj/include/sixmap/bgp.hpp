#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sixmap/addr.hpp"

namespace sixmap {

struct BgpMatch {
    Prefix prefix;
    std::uint32_t asn = 0;
};

/// Longest-prefix-match table of (prefix, origin ASN) rows plus declared
/// ASN equivalence groups. Supplemental registry prefixes load the same way.
class BgpTable {
public:
    void add(const Prefix& p, std::uint32_t asn);
    void add_equivalence(const std::vector<std::uint32_t>& group);

    std::optional<BgpMatch> lookup(const Address& a) const;
    std::optional<std::uint32_t> origin_asn(const Address& a) const;

    /// Canonical representative of the ASN's equivalence class.
    std::uint32_t resolve(std::uint32_t asn) const;

    /// Equivalence-resolved equality; an unknown ASN matches nothing.
    bool same_asn(std::optional<std::uint32_t> a, std::optional<std::uint32_t> b) const;

    std::size_t size() const { return count_; }

    /// CSV rows "prefix,asn"; '#' comments and blank lines ignored.
    static BgpTable load_csv(const std::string& path);
    /// One whitespace-separated ASN group per line, merged into this table.
    void load_equivalence_file(const std::string& path);

private:
    std::uint32_t find_root(std::uint32_t asn) const;

    // per-length exact-match maps, probed from longest to shortest
    std::map<int, std::unordered_map<Address, std::uint32_t, AddressHash>, std::greater<int>>
        by_length_;
    mutable std::unordered_map<std::uint32_t, std::uint32_t> parent_;  // union-find
    std::size_t count_ = 0;
};

}  // namespace sixmap
