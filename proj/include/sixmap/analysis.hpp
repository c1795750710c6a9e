#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sixmap/addr.hpp"
#include "sixmap/bgp.hpp"
#include "sixmap/engine.hpp"

namespace sixmap {

struct HopInfo {
    Address responder;
    int icmp_type = 0;
    std::int64_t rtt_ms = 0;
};

/// A per-target TTL-ordered hop sequence reassembled from unordered
/// responses. `hops` holds only TTLs that produced a response.
struct Trace {
    Address target;
    std::map<int, HopInfo> hops;
    bool reached = false;  // destination echoed or reported unreachability

    /// Highest TTL with a Time Exceeded responder, 0 if none.
    int last_te_ttl() const;
    std::optional<Address> last_te_hop() const;
};

struct ReassemblyStats {
    std::size_t traces = 0;
    std::size_t duplicate_responses = 0;  // same (target, TTL) seen again
};

/// Groups responses by quoted target. Duplicate (target, TTL) responses keep
/// the earliest record and are counted as anomalies.
std::vector<Trace> reassemble(const CampaignLog& log, ReassemblyStats* stats = nullptr);

struct YieldReport {
    std::uint64_t traces = 0;
    std::uint64_t probes = 0;
    std::uint64_t responses = 0;
    std::uint64_t interface_addrs = 0;  // distinct Time Exceeded sources
    std::uint64_t interface_bgp_prefixes = 0;
    std::uint64_t interface_asns = 0;
    double reach_target_asn_fraction = 0.0;
    int path_len_median = 0;
    int path_len_p95 = 0;
    std::uint64_t eui64_interface_addrs = 0;
    double eui64_share = 0.0;
    int eui64_offset_median = 0;  // hop position minus last-hop position, <= 0
    int eui64_offset_p5 = 0;
    double yield_percent = 0.0;  // interface addrs per probe
};

YieldReport yield_report(const std::vector<Trace>& traces, const BgpTable& bgp,
                         std::uint64_t probes_total);

/// Path-divergence acceptance knobs; defaults follow the conservative
/// operating point the technique was designed around.
struct DivergenceParams {
    int c = 2;  // minimum LCS length
    int C = 1;  // LCS hops whose ASN matches the target's
    int A = 1;  // last LCS hop must not be in the vantage ASN
    int s = 1;  // minimum divergent-suffix length
    int S = 1;  // DS hops whose ASN matches the target's
    int z = 0;  // number of DS sides allowed to be empty
    int T = 1;  // target ASNs must match across the pair
};

struct CandidateSubnet {
    Address base;    // owner target masked to min_length
    int min_length;  // lower bound on the subnet's prefix length
    Address owner;   // the target this candidate was derived from
    std::vector<Address> diverged_with;
};

/// Pairwise path-divergence subnet discovery. For every accepted pair both
/// targets gain a witness; a target's candidate masks it to 1 + the maximum
/// common prefix length over all of its diverged counterparts.
std::vector<CandidateSubnet> discover_by_path_div(const std::vector<Trace>& traces,
                                                  const BgpTable& bgp,
                                                  const DivergenceParams& params,
                                                  std::uint32_t vantage_asn);

struct IaHackResult {
    std::vector<CandidateSubnet> candidates;  // always length exactly 64
    std::vector<Address> reached_lan_targets;
};

/// Emits the /64 candidate for every trace whose last responding hop has IID
/// ::1 and shares the target's top 64 bits.
IaHackResult ia_hack(const std::vector<Trace>& traces);

struct ValidationReport {
    std::size_t candidates = 0;
    std::size_t exact = 0;          // base and length match a truth subnet
    std::size_t more_specific = 0;  // strictly inside a truth subnet
    std::map<int, std::size_t> short_by;  // length deficit -> count
    std::size_t truth_total = 0;
    std::size_t truth_exact_matched = 0;
    std::size_t truth_with_more_specific = 0;
};

ValidationReport validate_subnets(const std::vector<CandidateSubnet>& candidates,
                                  const std::vector<Prefix>& truth);

/// One trace per truth subnet, chosen by lowest target address.
std::vector<Trace> stratified_sample(const std::vector<Trace>& traces,
                                     const std::vector<Prefix>& truth);

struct StratifiedResult {
    std::vector<CandidateSubnet> candidates;
    ValidationReport report;
    std::size_t sampled_traces = 0;
};

StratifiedResult stratified_rerun(const std::vector<Trace>& traces,
                                  const std::vector<Prefix>& truth, const BgpTable& bgp,
                                  const DivergenceParams& params, std::uint32_t vantage_asn);

std::vector<Prefix> read_prefix_file(const std::string& path);

// Report emission ----------------------------------------------------------

struct PerHopRow {
    int ttl = 0;
    std::uint64_t sent = 0;
    std::uint64_t answered = 0;
};

std::vector<PerHopRow> per_hop_fractions(const CampaignLog& log);
std::string per_hop_csv(const std::vector<PerHopRow>& rows);

/// CDF rows over the discriminating prefix lengths of an address set.
std::string dpl_cdf_csv(const std::vector<Address>& addrs);

/// Candidate counts by minimum prefix length.
std::string subnet_length_csv(const std::vector<CandidateSubnet>& candidates);

std::string yield_report_json(const YieldReport& y);
std::string validation_report_json(const ValidationReport& v);

}  // namespace sixmap
