#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memory>
#include <set>
#include <sstream>

#include "sixmap/analysis.hpp"
#include "sixmap/engine.hpp"
#include "sixmap/netsim.hpp"
#include "sixmap/rawsock.hpp"

using namespace sixmap;

namespace {

Address addr(const char* s) {
    return Address::parse(s);
}

PermutationKey fixed_key() {
    return PermutationKey::from_hex("00112233445566778899aabbccddeeff");
}

// Per-target path lengths over a shared spine; unique interfaces per target
// beyond the shared depth. `silent_at[t]` marks one non-responding hop.
struct PathSpec {
    int length;
    int silent_at = 0;  // 0: none
};

SimTopology branchy_topology(int shared_depth, const std::vector<PathSpec>& specs,
                             DestBehavior dest = DestBehavior::Silent) {
    SimTopology topo;
    topo.vantage = addr("2001:db8:ffff::100");
    topo.per_hop_delay_ms = 0.01;
    topo.default_destination = DestSpec{dest, 3};
    std::vector<Address> spine;
    for (int h = 1; h <= shared_depth; h++) {
        Address a = addr("2001:db8:ffff::");
        a.lo = static_cast<std::uint64_t>(h);
        topo.interfaces.push_back(InterfaceSpec{a, 1e9, 1e9});
        spine.push_back(a);
    }
    for (std::size_t t = 0; t < specs.size(); t++) {
        std::vector<Address> path = spine;
        for (int h = shared_depth + 1; h <= specs[t].length; h++) {
            Address a = addr("2001:db8:1::");
            a.lo = (static_cast<std::uint64_t>(t + 1) << 16) | static_cast<std::uint64_t>(h);
            double rate = h == specs[t].silent_at ? 0.0 : 1e9;
            topo.interfaces.push_back(InterfaceSpec{a, rate, rate == 0.0 ? 0.0 : 1e9});
            path.push_back(a);
        }
        Address target = addr("2001:db8:2::");
        target.lo = 0x10000 + static_cast<std::uint64_t>(t);
        topo.paths.emplace(target, path);
        topo.targets.push_back(target);
    }
    return topo;
}

CampaignConfig base_config(const SimTopology& topo) {
    CampaignConfig cfg;
    cfg.targets = topo.targets;
    cfg.endpoint.source = topo.vantage;
    cfg.key = fixed_key();
    cfg.linger_ms = 100;
    return cfg;
}

}  // namespace

TEST_CASE("config validation") {
    SimTopology topo = branchy_topology(2, {{4}});
    CampaignConfig cfg = base_config(topo);
    cfg.targets.clear();
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = base_config(topo);
    cfg.ttl_max = 40;
    cfg.fill_cap = 32;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = base_config(topo);
    cfg.rate_pps = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("randomized campaign covers the domain exactly once") {
    SimTopology topo = branchy_topology(1, {{3}, {3}, {3}});
    CampaignConfig cfg = base_config(topo);
    cfg.ttl_min = 1;
    cfg.ttl_max = 2;
    SimTransport sim(topo);
    CampaignLog log = run_campaign(cfg, sim);
    CHECK(log.probes_total == 6);
    CHECK(log.sent_per_ttl.at(1) == 3);
    CHECK(log.sent_per_ttl.at(2) == 3);
    // every (target, ttl) answered exactly once -> 6 distinct records
    std::set<std::pair<Address, int>> seen;
    for (const ResponseRecord& r : log.records)
        CHECK(seen.emplace(r.target, r.sent_ttl).second);
    CHECK(seen.size() == 6);
}

TEST_CASE("record fields decode from the simulator end to end") {
    SimTopology topo = branchy_topology(2, {{4}});
    CampaignConfig cfg = base_config(topo);
    cfg.ttl_min = 1;
    cfg.ttl_max = 4;
    SimTransport sim(topo);
    CampaignLog log = run_campaign(cfg, sim);
    REQUIRE(log.records.size() == 4);
    for (const ResponseRecord& r : log.records) {
        CHECK(r.target == topo.targets[0]);
        CHECK(r.icmp_type == 3);
        CHECK(r.checksum_ok);
        CHECK(!r.fill);
        CHECK(r.responder == topo.paths.at(r.target)[static_cast<std::size_t>(r.sent_ttl - 1)]);
    }
}

TEST_CASE("fill mode") {
    SUBCASE("no fill below the threshold") {
        SimTopology topo = branchy_topology(1, {{12}});
        CampaignConfig cfg = base_config(topo);
        cfg.ttl_max = 8;
        cfg.fill = false;
        SimTransport sim(topo);
        CampaignLog log = run_campaign(cfg, sim);
        CHECK(log.fills_sent == 0);
        CHECK(log.probes_total == 8);
    }
    SUBCASE("responsive 12-hop path with ttl_max 8 fills 9..13") {
        SimTopology topo = branchy_topology(1, {{12}});
        CampaignConfig cfg = base_config(topo);
        cfg.ttl_max = 8;
        cfg.fill = true;
        SimTransport sim(topo);
        CampaignLog log = run_campaign(cfg, sim);
        CHECK(log.fills_sent == 5);  // TTLs 9,10,11,12,13; 13 goes unanswered
        CHECK(log.probes_total == 8 + 5);
        std::set<int> fill_ttls;
        int discovered_past_max = 0;
        for (const ResponseRecord& r : log.records) {
            if (r.fill) {
                fill_ttls.insert(r.sent_ttl);
                discovered_past_max++;
            }
        }
        CHECK(fill_ttls == std::set<int>{9, 10, 11, 12});
        CHECK(discovered_past_max == 4);
        CHECK(log.sent_per_ttl.at(13) == 1);
    }
    SUBCASE("a silent hop right past ttl_max kills the chain") {
        SimTopology topo = branchy_topology(1, {{12, 9}});  // hop 9 silent
        CampaignConfig cfg = base_config(topo);
        cfg.ttl_max = 8;
        cfg.fill = true;
        SimTransport sim(topo);
        CampaignLog log = run_campaign(cfg, sim);
        CHECK(log.fills_sent == 1);  // the probe to 9, which dies silently
        for (const ResponseRecord& r : log.records)
            CHECK(r.sent_ttl <= 8);
    }
    SUBCASE("echoing destinations keep the chain alive up to fill_cap") {
        SimTopology topo = branchy_topology(1, {{6}}, DestBehavior::EchoReply);
        CampaignConfig cfg = base_config(topo);
        cfg.ttl_max = 8;
        cfg.fill = true;
        cfg.fill_cap = 12;
        SimTransport sim(topo);
        CampaignLog log = run_campaign(cfg, sim);
        // TTL 7,8 reach the destination (echo), fills walk 9..12 and stop at the cap
        CHECK(log.fills_sent == 4);
        CHECK(log.sent_per_ttl.count(13) == 0);
    }
}

TEST_CASE("statelessness: records decode identically from raw bytes alone") {
    SimTopology topo = branchy_topology(1, {{4}});
    SimTransport sim(topo);
    ProbeEndpoint ep;
    ep.source = topo.vantage;
    ProbePacket p = encode_probe(ep, Protocol::Icmp6Echo, topo.targets[0], 3, 0);
    sim.send(p);
    sim.wait_for_activity(10'000'000);
    auto raw = sim.receive();
    REQUIRE(raw);
    DecodeResult first = decode_response(raw->wire, raw->recv_ms(), ep.magic, ep.instance);
    DecodeResult again = decode_response(raw->wire, raw->recv_ms(), ep.magic, ep.instance);
    REQUIRE(first.status == DecodeStatus::Ok);
    CHECK(first.response.sent_hop_limit == again.response.sent_hop_limit);
    CHECK(first.response.quoted_target == again.response.quoted_target);
    CHECK(first.response.rtt_ms == again.response.rtt_ms);
}

TEST_CASE("doubletree traces") {
    //   spine: hops 1..4 shared, then per-target tails to length 8
    SimTopology topo = branchy_topology(4, {{8}, {8}}, DestBehavior::EchoReply);
    CampaignConfig cfg = base_config(topo);
    cfg.strategy = Strategy::Doubletree;
    cfg.ttl_max = 16;
    cfg.fill_cap = 16;
    cfg.doubletree.start_ttl = 5;
    cfg.doubletree.attempts = 2;
    cfg.doubletree.probe_timeout_us = 5000;
    SimTransport sim(topo);
    CampaignRunner runner(cfg, sim);

    SUBCASE("first trace probes forward then all the way back") {
        std::vector<int> ttls = runner.run_doubletree_trace(topo.targets[0]);
        // forward 5..8 responsive, 9 reaches the echoing destination, then
        // backward 4,3,2,1 over an empty stop set
        CHECK(ttls == std::vector<int>{5, 6, 7, 8, 9, 4, 3, 2, 1});
    }
    SUBCASE("second trace stops backward at the first shared hop") {
        runner.run_doubletree_trace(topo.targets[0]);
        std::vector<int> ttls = runner.run_doubletree_trace(topo.targets[1]);
        CHECK(ttls == std::vector<int>{5, 6, 7, 8, 9, 4});
    }
}

TEST_CASE("doubletree keeps probing backward through silent hops") {
    // hop 3 never answers; the stop set cannot match there
    SimTopology topo = branchy_topology(1, {{8, 3}, {8, 3}}, DestBehavior::EchoReply);
    CampaignConfig cfg = base_config(topo);
    cfg.strategy = Strategy::Doubletree;
    cfg.ttl_max = 16;
    cfg.fill_cap = 16;
    cfg.doubletree.start_ttl = 5;
    cfg.doubletree.attempts = 2;
    cfg.doubletree.probe_timeout_us = 5000;
    SimTransport sim(topo);
    CampaignRunner runner(cfg, sim);
    std::vector<int> first = runner.run_doubletree_trace(topo.targets[0]);
    CHECK(first == std::vector<int>{5, 6, 7, 8, 9, 4, 3, 3, 2, 1});
    std::vector<int> second = runner.run_doubletree_trace(topo.targets[1]);
    // hops 4..2 belong to the second target's own tail (hop 3 silent), so the
    // walk only meets a known interface at the shared hop 1
    CHECK(second == std::vector<int>{5, 6, 7, 8, 9, 4, 3, 3, 2, 1});
}

TEST_CASE("campaign log JSONL round trip") {
    SimTopology topo = branchy_topology(2, {{5}, {6}});
    CampaignConfig cfg = base_config(topo);
    cfg.ttl_max = 6;
    cfg.fill = true;
    SimTransport sim(topo);
    CampaignLog log = run_campaign(cfg, sim);
    log.extra["topology"] = "test.json";

    std::stringstream ss;
    write_log(log, ss);
    CampaignLog back = read_log(ss);
    CHECK(back.strategy == log.strategy);
    CHECK(back.protocol == log.protocol);
    CHECK(back.ttl_max == log.ttl_max);
    CHECK(back.fill == log.fill);
    CHECK(back.key_hex == log.key_hex);
    CHECK(back.magic == log.magic);
    CHECK(back.target_count == log.target_count);
    CHECK(back.extra.at("topology") == "test.json");
    CHECK(back.probes_total == log.probes_total);
    CHECK(back.fills_sent == log.fills_sent);
    CHECK(back.sent_per_ttl == log.sent_per_ttl);
    REQUIRE(back.records.size() == log.records.size());
    for (std::size_t i = 0; i < back.records.size(); i++) {
        CHECK(back.records[i].target == log.records[i].target);
        CHECK(back.records[i].responder == log.records[i].responder);
        CHECK(back.records[i].sent_ttl == log.records[i].sent_ttl);
        CHECK(back.records[i].rtt_ms == log.records[i].rtt_ms);
        CHECK(back.records[i].fill == log.records[i].fill);
        CHECK(back.records[i].checksum_ok == log.records[i].checksum_ok);
    }

    std::stringstream empty;
    CampaignLog none = read_log(empty);
    CHECK(none.records.empty());
    CHECK(none.probes_total == 0);
}

namespace {

// Wraps a sim transport and fails after a fixed number of sends.
class FlakyTransport : public PacketTransport {
public:
    FlakyTransport(SimTransport& inner, int sends_before_failure)
        : inner_(inner), remaining_(sends_before_failure) {}
    void send(const ProbePacket& p) override {
        if (remaining_-- <= 0)
            throw TransportError("carrier lost");
        inner_.send(p);
    }
    std::optional<RawResponse> receive() override { return inner_.receive(); }
    std::uint64_t now_us() const override { return inner_.now_us(); }
    std::uint64_t wait_for_activity(std::uint64_t deadline_us) override {
        return inner_.wait_for_activity(deadline_us);
    }

private:
    SimTransport& inner_;
    int remaining_;
};

}  // namespace

TEST_CASE("raw transport probes loopback when privileges allow") {
    // Environment-dependent: needs CAP_NET_RAW and an IPv6 loopback. Without
    // them the constructor's privilege error is the expected behavior.
    std::unique_ptr<RawSocketTransport> raw;
    try {
        raw = std::make_unique<RawSocketTransport>();
    } catch (const TransportError& e) {
        MESSAGE("raw sockets unavailable here: ", e.what());
        return;
    }
    ProbeEndpoint ep;
    ep.source = addr("::1");
    ProbePacket p = encode_probe(ep, Protocol::Icmp6Echo, addr("::1"), 64, 0);
    try {
        raw->send(p);
    } catch (const TransportError& e) {
        MESSAGE("raw send failed here: ", e.what());
        return;
    }
    // loopback echoes; give it a few polls but tolerate silence
    for (int i = 0; i < 10; i++) {
        raw->wait_for_activity(raw->now_us() + 20'000);
        if (auto resp = raw->receive()) {
            DecodeResult d = decode_response(resp->wire, resp->recv_ms(), ep.magic, ep.instance);
            if (d.status == DecodeStatus::Ok) {
                CHECK(d.response.icmp_type == 129);
                CHECK(d.response.sent_hop_limit == 64);
                return;
            }
        }
    }
    MESSAGE("no loopback echo observed; send path exercised only");
}

TEST_CASE("transport failure aborts with a partial log flagged incomplete") {
    SimTopology topo = branchy_topology(1, {{4}, {4}, {4}});
    CampaignConfig cfg = base_config(topo);
    cfg.ttl_min = 1;
    cfg.ttl_max = 4;
    SimTransport sim(topo);
    FlakyTransport flaky(sim, 5);
    CampaignLog log = run_campaign(cfg, flaky);
    CHECK(log.incomplete);
    CHECK(log.probes_total == 5);
}

TEST_CASE("fills count against responses at or past ttl_max") {
    SimTopology topo = branchy_topology(1, {{12}, {14}, {9}});
    CampaignConfig cfg = base_config(topo);
    cfg.ttl_max = 8;
    cfg.fill = true;
    SimTransport sim(topo);
    CampaignLog log = run_campaign(cfg, sim);
    std::uint64_t at_or_past = 0;
    for (const ResponseRecord& r : log.records)
        if (r.sent_ttl >= cfg.ttl_max)
            at_or_past++;
    CHECK(log.fills_sent <= at_or_past);
    for (const auto& [ttl, n] : log.sent_per_ttl) {
        CHECK(ttl <= cfg.fill_cap);
        if (ttl > cfg.ttl_max)
            CHECK(n >= 1);
    }
}
