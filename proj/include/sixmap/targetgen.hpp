#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sixmap/addr.hpp"
#include "sixmap/bgp.hpp"

namespace sixmap {

/// Seed entries are prefixes; bare addresses read as /128.
struct SeedList {
    std::string name;
    std::vector<Prefix> entries;
    std::string source_date;  // optional
};

/// UTF-8 text, one address or prefix per line, '#' comments ignored.
/// Throws with the offending line number on unreadable entries.
SeedList read_seed_file(const std::string& path, const std::string& name = "");

/// The zn prefix transformation: normalize every seed to length n by
/// zero-extension (shorter seeds) or truncation (longer seeds).
struct Transformation {
    int n = 64;  // in [1,64]
};

std::vector<Prefix> transform(const SeedList& seeds, Transformation t);

struct SynthesisMethod {
    std::uint64_t iid = 1;
    std::string name = "lowbyte1";

    static SynthesisMethod lowbyte1() { return {1, "lowbyte1"}; }
    static SynthesisMethod fixed_iid(std::uint64_t iid = 0x1234567812345678ULL);
};

struct Provenance {
    std::string seed_name;
    int transform_n = 0;
    std::string synthesis;
};

struct TargetSet {
    std::string name;
    std::vector<Address> targets;  // sorted, unique
    Provenance provenance;
};

/// One target per prefix (base OR iid), deduplicated and sorted.
/// Throws if any prefix is longer than 64 bits.
TargetSet synthesize(const std::vector<Prefix>& prefixes, const SynthesisMethod& m,
                     const std::string& name = "");

struct SetAlgebra {
    std::vector<Address> unique_to_a;
    std::vector<Address> unique_to_b;
    std::vector<Address> shared;
};

SetAlgebra set_algebra(const TargetSet& a, const TargetSet& b);

struct CoverageStats {
    std::size_t total = 0;
    std::size_t routed = 0;
    std::size_t bgp_prefixes = 0;
    std::size_t asns = 0;
    std::size_t six_to_four = 0;  // targets under 2002::/16
};

CoverageStats coverage_stats(const TargetSet& t, const BgpTable& bgp);

/// One canonical address per line, sorted, no duplicates.
void write_target_file(const TargetSet& t, const std::string& path);
std::vector<Address> read_target_file(const std::string& path);

}  // namespace sixmap
