#include "sixmap/permute.hpp"

#include <bit>
#include <random>

namespace sixmap {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

int hex_val(char c) {
    if (c >= '0' && c <= '9')
        return c - '0';
    if (c >= 'a' && c <= 'f')
        return c - 'a' + 10;
    if (c >= 'A' && c <= 'F')
        return c - 'A' + 10;
    return -1;
}

}  // namespace

void ProbeDomain::validate() const {
    if (target_count < 1)
        throw std::invalid_argument("probe domain needs at least one target");
    if (ttl_min < 1 || ttl_max > 255 || ttl_min > ttl_max)
        throw std::invalid_argument("probe domain TTL range must satisfy 1 <= min <= max <= 255");
}

PermutationKey PermutationKey::from_hex(const std::string& hex) {
    if (hex.size() != 32)
        throw std::invalid_argument("permutation key must be 32 hex digits");
    PermutationKey k;
    for (std::size_t i = 0; i < 16; i++) {
        int hi = hex_val(hex[2 * i]), lo = hex_val(hex[2 * i + 1]);
        if (hi < 0 || lo < 0)
            throw std::invalid_argument("permutation key must be 32 hex digits");
        k.key[i] = static_cast<std::uint8_t>(hi << 4 | lo);
    }
    return k;
}

PermutationKey PermutationKey::random() {
    std::random_device rd;
    PermutationKey k;
    for (std::size_t i = 0; i < 16; i += 4) {
        std::uint32_t w = rd();
        k.key[i] = static_cast<std::uint8_t>(w >> 24);
        k.key[i + 1] = static_cast<std::uint8_t>(w >> 16);
        k.key[i + 2] = static_cast<std::uint8_t>(w >> 8);
        k.key[i + 3] = static_cast<std::uint8_t>(w);
    }
    return k;
}

std::string PermutationKey::hex() const {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(32);
    for (std::uint8_t b : key) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xf]);
    }
    return s;
}

ProbePermutation::ProbePermutation(ProbeDomain d, PermutationKey k) : domain_(d) {
    domain_.validate();
    if (k.rounds < 3)
        throw std::invalid_argument("permutation needs at least 3 rounds");
    size_ = domain_.size();

    int bits = size_ > 1 ? std::bit_width(size_ - 1) : 1;
    lo_bits_ = bits / 2;
    int hi_bits = bits - lo_bits_;
    lo_mask_ = lo_bits_ > 0 ? (1ULL << lo_bits_) - 1 : 0;
    hi_mask_ = (1ULL << hi_bits) - 1;

    std::uint64_t kh = 0, kl = 0;
    for (int i = 0; i < 8; i++)
        kh = kh << 8 | k.key[static_cast<std::size_t>(i)];
    for (int i = 8; i < 16; i++)
        kl = kl << 8 | k.key[static_cast<std::size_t>(i)];
    round_keys_.resize(static_cast<std::size_t>(k.rounds));
    for (int r = 0; r < k.rounds; r++)
        round_keys_[static_cast<std::size_t>(r)] =
            splitmix64(kh ^ splitmix64(kl + static_cast<std::uint64_t>(r) + 1));
}

std::uint64_t ProbePermutation::feistel(std::uint64_t x) const {
    // Near-balanced halves; odd rounds mix the high half, even rounds the low.
    std::uint64_t hi = x >> lo_bits_, lo = x & lo_mask_;
    for (std::size_t r = 0; r < round_keys_.size(); r++) {
        if (r % 2 == 0)
            hi = (hi + splitmix64(lo ^ round_keys_[r])) & hi_mask_;
        else
            lo = (lo + splitmix64(hi ^ round_keys_[r])) & lo_mask_;
    }
    return hi << lo_bits_ | lo;
}

std::uint64_t ProbePermutation::walk(std::uint64_t x) const {
    // Cycle walking: re-encrypt until the value lands back inside the domain.
    do {
        x = feistel(x);
    } while (x >= size_);
    return x;
}

ProbeSlot ProbePermutation::at(std::uint64_t i) const {
    if (i >= size_)
        throw std::out_of_range("permutation index " + std::to_string(i) + " >= domain size " +
                                std::to_string(size_));
    std::uint64_t j = walk(i);
    return ProbeSlot{j % domain_.target_count,
                     domain_.ttl_min + static_cast<int>(j / domain_.target_count)};
}

}  // namespace sixmap
