#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "sixmap/addr.hpp"
#include "sixmap/codec.hpp"
#include "sixmap/permute.hpp"
#include "sixmap/transport.hpp"

namespace sixmap {

enum class Strategy { Randomized, Sequential, Doubletree };

std::string_view to_string(Strategy s);
std::optional<Strategy> parse_strategy(std::string_view s);

struct DoubletreeOpts {
    int start_ttl = 5;
    int attempts = 2;   // probes per unresponsive hop
    int gap_limit = 3;  // consecutive silent forward hops before giving up
    std::uint64_t probe_timeout_us = 1'000'000;
};

struct CampaignConfig {
    std::vector<Address> targets;
    int ttl_min = 1;
    int ttl_max = 16;
    int fill_cap = 32;
    bool fill = false;
    double rate_pps = 1000.0;
    Protocol protocol = Protocol::Icmp6Echo;
    ProbeEndpoint endpoint;
    PermutationKey key;
    Strategy strategy = Strategy::Randomized;
    DoubletreeOpts doubletree;
    std::uint64_t linger_ms = 10'000;

    void validate() const;
    ProbeDomain domain() const {
        return ProbeDomain{targets.size(), ttl_min, ttl_max};
    }
};

struct ResponseRecord {
    Address target;
    Address responder;
    int sent_ttl = 0;
    std::int64_t rtt_ms = 0;
    int icmp_type = 0;
    int icmp_code = 0;
    bool fill = false;
    bool checksum_ok = false;
};

struct CampaignLog {
    // metadata
    std::string mode = "sim";
    std::string strategy = "random";
    std::string protocol = "icmp6";
    int ttl_min = 1, ttl_max = 16, fill_cap = 32;
    bool fill = false;
    double rate_pps = 0.0;
    std::uint8_t instance = 0;
    std::uint32_t magic = kDefaultMagic;
    std::string key_hex;
    std::uint64_t epoch_ms = 0;
    std::string source;
    std::uint64_t target_count = 0;
    std::map<std::string, std::string> extra;  // CLI-owned (topology path, digests, ...)

    // results
    std::vector<ResponseRecord> records;
    std::map<int, std::uint64_t> sent_per_ttl;
    std::uint64_t probes_total = 0;
    std::uint64_t fills_sent = 0;
    std::uint64_t foreign = 0;
    std::uint64_t unparseable = 0;
    bool incomplete = false;
};

using RecordSink = std::function<void(const ResponseRecord&)>;

/// JSON-lines: one metadata header object, one object per decoded response,
/// one trailing counters object.
void write_log(const CampaignLog& log, std::ostream& out);
CampaignLog read_log(std::istream& in);
CampaignLog read_log_file(const std::string& path);

/// Drives one campaign: sender pacing, stateless response decoding, fill
/// chains, and the per-strategy probe order. Single-threaded over the
/// transport's clock, so a virtual-clock simulator run is deterministic.
class CampaignRunner {
public:
    CampaignRunner(CampaignConfig cfg, PacketTransport& transport, RecordSink sink = {});

    CampaignLog run();

    /// One Doubletree trace against the shared stop set; returns the TTLs
    /// probed, in order. Exposed for direct use and tests.
    std::vector<int> run_doubletree_trace(const Address& target);

    /// Drains and processes everything arriving before `deadline_us`.
    void drain_until(std::uint64_t deadline_us);

    CampaignLog take_log() { return std::move(log_); }
    const std::unordered_set<Address, AddressHash>& seen_interfaces() const { return seen_; }

private:
    struct Hit {
        Address responder;
        int icmp_type = 0;
    };

    void send_probe(const Address& target, int ttl, bool fill);
    void process_arrivals();
    void pace_to_next_slot();
    std::optional<Hit> probe_hop(const Address& target, int ttl);
    void run_linear();  // randomized + sequential
    void run_doubletree();

    CampaignConfig cfg_;
    PacketTransport& transport_;
    RecordSink sink_;
    CampaignLog log_;
    std::uint64_t interval_us_ = 1000;
    std::uint64_t next_send_us_ = 0;
    std::uint64_t linger_deadline_us_ = 0;
    std::unordered_map<Address, int, AddressHash> fill_hwm_;
    std::unordered_set<Address, AddressHash> seen_;
    std::optional<std::pair<Address, int>> await_key_;
    std::optional<Hit> await_hit_;
    std::vector<int>* trace_ttl_log_ = nullptr;  // per-trace probe order, tests
};

CampaignLog run_campaign(const CampaignConfig& cfg, PacketTransport& transport,
                         const RecordSink& sink = {});

}  // namespace sixmap
