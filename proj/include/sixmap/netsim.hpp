#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include "sixmap/addr.hpp"
#include "sixmap/transport.hpp"

namespace sixmap {

/// Continuous-refill token bucket; one token per generated ICMPv6 response.
struct TokenBucket {
    double rate = 0.0;   // tokens per second
    double burst = 0.0;  // capacity
    double level = 0.0;
    std::uint64_t last_us = 0;

    bool try_consume(std::uint64_t now_us);
};

enum class DestBehavior { EchoReply, Silent, Unreachable };

struct DestSpec {
    DestBehavior behavior = DestBehavior::Silent;
    std::uint8_t code = 3;  // address unreachable, for Unreachable
};

struct InterfaceSpec {
    Address addr;
    double rate = 1e9;
    double burst = 1e9;
};

/// Router topology with per-interface rate limits, per-target paths, and
/// optional ground truth for validating inference. Serialized as versioned
/// JSON; see docs in README.
struct SimTopology {
    int schema = 1;
    Address vantage;
    double per_hop_delay_ms = 0.5;
    std::vector<InterfaceSpec> interfaces;
    std::unordered_map<Address, std::vector<Address>, AddressHash> paths;
    std::vector<Address> default_path;  // used for targets with no entry
    std::unordered_map<Address, DestSpec, AddressHash> destinations;
    DestSpec default_destination;
    std::vector<Prefix> ground_truth_subnets;
    std::vector<Address> targets;  // convenience list for campaigns

    const std::vector<Address>& path_for(const Address& target) const;
    DestSpec destination_for(const Address& target) const;

    /// Throws if any path repeats an interface (paths must be loop-free).
    void validate() const;

    std::string to_json() const;
    static SimTopology from_json(const std::string& text);
    static SimTopology load(const std::string& path);
    void save(const std::string& path) const;
};

struct SimCounters {
    std::uint64_t delivered = 0;
    std::uint64_t te_answered = 0;
    std::uint64_t rate_dropped = 0;
    std::uint64_t dest_answered = 0;
    std::uint64_t dest_silent = 0;
};

/// Deterministic single-threaded discrete-event transport. Probes arrive at
/// their expiring hop after a per-hop forwarding delay; responses travel the
/// same distance back. Identical inputs produce identical event traces.
class SimTransport : public PacketTransport {
public:
    explicit SimTransport(SimTopology topo);

    void send(const ProbePacket& p) override;
    std::optional<RawResponse> receive() override;
    std::uint64_t now_us() const override { return now_us_; }
    std::uint64_t wait_for_activity(std::uint64_t deadline_us) override;

    const SimCounters& counters() const { return counters_; }
    const SimTopology& topology() const { return topo_; }

    /// Per-interface answered-response counts (for bucket-law checks).
    const std::unordered_map<Address, std::uint64_t, AddressHash>& answered_by_interface() const {
        return answered_;
    }

private:
    struct Delivery {
        std::uint64_t at_us;
        std::uint64_t seq;  // tie-break: insertion order
        std::vector<std::uint8_t> wire;
    };
    struct DeliveryLater {
        bool operator()(const Delivery& a, const Delivery& b) const {
            return a.at_us != b.at_us ? a.at_us > b.at_us : a.seq > b.seq;
        }
    };

    void deliver_probe(const ProbePacket& p);
    void schedule(std::uint64_t at_us, std::vector<std::uint8_t> wire);

    SimTopology topo_;
    std::unordered_map<Address, TokenBucket, AddressHash> buckets_;
    std::priority_queue<Delivery, std::vector<Delivery>, DeliveryLater> pending_;
    std::uint64_t now_us_ = 0;
    std::uint64_t seq_ = 0;
    SimCounters counters_;
    std::unordered_map<Address, std::uint64_t, AddressHash> answered_;
};

enum class GatewayStyle { LowByte1, Eui64 };

/// Parameters for synthetic vantage-rooted hierarchies: shared access hops,
/// one core chain per AS, distribution routers splitting the AS prefix into
/// equal children, and /64 leaf LANs behind per-leaf gateways.
struct TopologyParams {
    std::uint64_t seed = 1;
    int as_count = 1;
    int access_depth = 3;
    int core_depth = 2;
    std::vector<int> split_fanouts = {4};  // per level; powers of two keep lengths exact
    int leaves_per_subnet = 2;
    int targets_per_leaf = 1;
    GatewayStyle gateway = GatewayStyle::LowByte1;
    std::uint64_t target_iid = 0x1234567812345678ULL;
    double if_rate = 1e9;
    double if_burst = 1e9;
    double per_hop_delay_ms = 0.1;
    DestBehavior dest_behavior = DestBehavior::Silent;
};

/// Deterministic under (params, seed). Ground truth holds every distribution
/// subnet plus the leaf /64s; the BGP table maps each AS prefix to its ASN
/// and the vantage prefix to `vantage_asn()`.
SimTopology generate_topology(const TopologyParams& params);

std::uint32_t vantage_asn();
std::uint32_t as_number(int as_index);

/// BGP rows covering a generated topology (AS prefixes + vantage prefix).
std::vector<std::pair<Prefix, std::uint32_t>> topology_bgp_rows(const TopologyParams& params);

}  // namespace sixmap
