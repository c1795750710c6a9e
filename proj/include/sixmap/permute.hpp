#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sixmap {

/// Probe domain: target index cross hop limit. The TTL range must be chosen
/// up front; it is part of the permuted space.
struct ProbeDomain {
    std::uint64_t target_count = 1;
    int ttl_min = 1;
    int ttl_max = 1;

    std::uint64_t size() const {
        return target_count * static_cast<std::uint64_t>(ttl_max - ttl_min + 1);
    }
    void validate() const;
};

struct PermutationKey {
    std::array<std::uint8_t, 16> key{};
    int rounds = 4;  // >= 3

    static PermutationKey from_hex(const std::string& hex);
    static PermutationKey random();
    std::string hex() const;
};

struct ProbeSlot {
    std::uint64_t target_index = 0;
    int ttl = 0;
    bool operator==(const ProbeSlot&) const = default;
};

/// Keyed pseudorandom bijection over a probe domain. A balanced Feistel
/// network over ceil(log2 size) bits, cycle-walked back into range, gives an
/// exact permutation of arbitrary domain sizes with no materialized state.
class ProbePermutation {
public:
    ProbePermutation(ProbeDomain d, PermutationKey k);

    std::uint64_t size() const { return size_; }
    const ProbeDomain& domain() const { return domain_; }

    /// Pure function of (domain, key, i). Throws on i >= size().
    ProbeSlot at(std::uint64_t i) const;

private:
    std::uint64_t walk(std::uint64_t x) const;
    std::uint64_t feistel(std::uint64_t x) const;

    ProbeDomain domain_;
    std::uint64_t size_ = 0;
    int lo_bits_ = 0;
    std::uint64_t lo_mask_ = 0, hi_mask_ = 0;
    std::vector<std::uint64_t> round_keys_;
};

/// Stream over a permutation, resumable from any checkpoint index.
class ProbeSequence {
public:
    ProbeSequence(ProbeDomain d, PermutationKey k, std::uint64_t start = 0)
        : perm_(d, std::move(k)), index_(start) {}

    bool done() const { return index_ >= perm_.size(); }
    std::uint64_t index() const { return index_; }
    void seek(std::uint64_t i) { index_ = i; }
    ProbeSlot next() { return perm_.at(index_++); }

private:
    ProbePermutation perm_;
    std::uint64_t index_ = 0;
};

}  // namespace sixmap
