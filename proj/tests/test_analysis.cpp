#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "sixmap/analysis.hpp"
#include "sixmap/netsim.hpp"

using namespace sixmap;

namespace {

Address addr(const char* s) {
    return Address::parse(s);
}

ResponseRecord rec(const char* target, const char* responder, int ttl, int type = 3) {
    ResponseRecord r;
    r.target = addr(target);
    r.responder = addr(responder);
    r.sent_ttl = ttl;
    r.icmp_type = type;
    r.checksum_ok = true;
    return r;
}

Trace make_trace(const char* target, std::initializer_list<std::pair<int, const char*>> hops) {
    Trace t;
    t.target = addr(target);
    for (const auto& [ttl, hop] : hops)
        t.hops.emplace(ttl, HopInfo{addr(hop), 3, 1});
    return t;
}

// BGP table that owns everything under 2001:db8:a::/48 as ASN 65001 and
// 2001:db8:b::/48 as 65002; vantage prefix is 64500.
BgpTable test_bgp() {
    BgpTable bgp;
    bgp.add(Prefix::parse("2001:db8:a::/48"), 65001);
    bgp.add(Prefix::parse("2001:db8:b::/48"), 65002);
    bgp.add(Prefix::parse("2001:db8:ffff::/48"), 64500);
    return bgp;
}

}  // namespace

TEST_CASE("reassembly orders unordered responses and keeps the earliest dupe") {
    CampaignLog log;
    log.records = {rec("2001:db8:a::1", "2001:db8:ffff::2", 2),
                   rec("2001:db8:a::1", "2001:db8:ffff::1", 1),
                   rec("2001:db8:a::1", "2001:db8:ffff::3", 3),
                   rec("2001:db8:a::1", "2001:db8:ffff::9", 2)};  // duplicate TTL 2
    ReassemblyStats stats;
    std::vector<Trace> traces = reassemble(log, &stats);
    REQUIRE(traces.size() == 1);
    CHECK(stats.duplicate_responses == 1);
    const Trace& t = traces[0];
    REQUIRE(t.hops.size() == 3);
    CHECK(t.hops.at(1).responder == addr("2001:db8:ffff::1"));
    CHECK(t.hops.at(2).responder == addr("2001:db8:ffff::2"));  // earliest kept
    CHECK(t.hops.at(3).responder == addr("2001:db8:ffff::3"));
    CHECK(!t.reached);
    CHECK(t.last_te_ttl() == 3);
}

TEST_CASE("missing hops stay missing") {
    CampaignLog log;
    log.records = {rec("2001:db8:a::1", "2001:db8:ffff::1", 1),
                   rec("2001:db8:a::1", "2001:db8:ffff::3", 3)};
    std::vector<Trace> traces = reassemble(log);
    REQUIRE(traces.size() == 1);
    CHECK(traces[0].hops.count(2) == 0);
}

TEST_CASE("reached marks destination answers") {
    CampaignLog log;
    log.records = {rec("2001:db8:a::1", "2001:db8:a::1", 7, 129)};
    std::vector<Trace> traces = reassemble(log);
    REQUIRE(traces.size() == 1);
    CHECK(traces[0].reached);
    CHECK(traces[0].last_te_ttl() == 0);  // an echo reply is not an interface
}

TEST_CASE("netsim campaign with limits off reproduces constructed paths") {
    TopologyParams p;
    p.as_count = 2;
    p.split_fanouts = {8};
    p.leaves_per_subnet = 8;
    p.targets_per_leaf = 8;  // 2 * 8 * 8 * 8 = 1024 targets
    SimTopology topo = generate_topology(p);
    REQUIRE(topo.targets.size() >= 1000);

    CampaignConfig cfg;
    cfg.targets = topo.targets;
    cfg.ttl_min = 1;
    int longest = 0;
    for (const auto& [t, path] : topo.paths)
        longest = std::max(longest, static_cast<int>(path.size()));
    cfg.ttl_max = longest;
    cfg.rate_pps = 1e6;
    cfg.endpoint.source = topo.vantage;
    cfg.key = PermutationKey::from_hex("00112233445566778899aabbccddeeff");
    cfg.linger_ms = 10;

    SimTransport sim(topo);
    CampaignLog log = run_campaign(cfg, sim);
    std::vector<Trace> traces = reassemble(log);
    REQUIRE(traces.size() == topo.targets.size());
    for (const Trace& t : traces) {
        const std::vector<Address>& path = topo.paths.at(t.target);
        REQUIRE(t.hops.size() == path.size());
        for (std::size_t h = 0; h < path.size(); h++)
            CHECK(t.hops.at(static_cast<int>(h + 1)).responder == path[h]);
    }
}

TEST_CASE("yield report on a hand-built fixture") {
    std::vector<Trace> traces = {
        make_trace("2001:db8:a::1", {{1, "2001:db8:ffff::1"}, {2, "2001:db8:a::aa"}}),
        make_trace("2001:db8:a::2", {{1, "2001:db8:ffff::1"}, {2, "2001:db8:a::bb"}}),
    };
    BgpTable bgp = test_bgp();
    YieldReport y = yield_report(traces, bgp, 100);
    CHECK(y.traces == 2);
    CHECK(y.interface_addrs == 3);  // ffff::1 shared
    CHECK(y.interface_bgp_prefixes == 2);
    CHECK(y.interface_asns == 2);
    CHECK(y.reach_target_asn_fraction == 1.0);
    CHECK(y.path_len_median == 2);
    CHECK(y.yield_percent == doctest::Approx(3.0));
    CHECK(y.eui64_interface_addrs == 0);
}

TEST_CASE("disjoint paths count h*L interfaces") {
    std::vector<Trace> traces;
    for (int i = 0; i < 5; i++) {
        Trace t;
        t.target = Address{0x20010db8000a0000ULL, static_cast<std::uint64_t>(i + 1)};
        for (int h = 1; h <= 4; h++)
            t.hops.emplace(h, HopInfo{Address{0x20010db8000a0000ULL,
                                              0x1000 + static_cast<std::uint64_t>(i * 4 + h)},
                                      3, 1});
        traces.push_back(t);
    }
    BgpTable bgp;
    YieldReport y = yield_report(traces, bgp, 20);
    CHECK(y.interface_addrs == 20);
}

TEST_CASE("EUI-64 last hops have offset zero") {
    std::vector<Trace> traces = {make_trace(
        "2001:db8:a::1", {{1, "2001:db8:ffff::1"}, {2, "2001:db8:a::211:22ff:fe33:1"}})};
    BgpTable bgp = test_bgp();
    YieldReport y = yield_report(traces, bgp, 10);
    CHECK(y.eui64_interface_addrs == 1);
    CHECK(y.eui64_offset_median == 0);
    CHECK(y.eui64_offset_p5 == 0);
}

TEST_CASE("path divergence discovery") {
    BgpTable bgp = test_bgp();
    DivergenceParams params;

    SUBCASE("identical paths yield nothing") {
        std::vector<Trace> traces = {
            make_trace("2001:db8:a::1",
                       {{1, "2001:db8:ffff::1"}, {2, "2001:db8:a::aa"}, {3, "2001:db8:a::cc"}}),
            make_trace("2001:db8:a::2",
                       {{1, "2001:db8:ffff::1"}, {2, "2001:db8:a::aa"}, {3, "2001:db8:a::cc"}}),
        };
        CHECK(discover_by_path_div(traces, bgp, params, 64500).empty());
    }

    SUBCASE("a clean split yields one candidate per target") {
        // shared: vantage hop + in-AS hop, then divergent in-AS tails
        std::vector<Trace> traces = {
            make_trace("2001:db8:a:0::1",
                       {{1, "2001:db8:ffff::1"},
                        {2, "2001:db8:a::aa"},
                        {3, "2001:db8:a::cc"},
                        {4, "2001:db8:a::d1"}}),
            make_trace("2001:db8:a:8000::1",
                       {{1, "2001:db8:ffff::1"},
                        {2, "2001:db8:a::aa"},
                        {3, "2001:db8:a::cc"},
                        {4, "2001:db8:a::d2"}}),
        };
        auto cands = discover_by_path_div(traces, bgp, params, 64500);
        REQUIRE(cands.size() == 2);
        // the two targets differ first at bit 48 -> DPL 49
        CHECK(cands[0].min_length == 49);
        CHECK(cands[1].min_length == 49);
        CHECK(cands[0].base == addr("2001:db8:a::"));
        CHECK(cands[1].base == addr("2001:db8:a:8000::"));
        CHECK(cands[0].diverged_with.size() == 1);
    }

    SUBCASE("LCS shorter than c rejects the pair") {
        std::vector<Trace> traces = {
            make_trace("2001:db8:a:0::1", {{1, "2001:db8:ffff::1"}, {2, "2001:db8:a::d1"},
                                           {3, "2001:db8:a::e1"}}),
            make_trace("2001:db8:a:8000::1", {{1, "2001:db8:ffff::1"}, {2, "2001:db8:a::d2"},
                                              {3, "2001:db8:a::e2"}}),
        };
        CHECK(discover_by_path_div(traces, bgp, params, 64500).empty());
    }

    SUBCASE("a missing hop inside the leading run ends the LCS") {
        std::vector<Trace> traces = {
            make_trace("2001:db8:a:0::1", {{1, "2001:db8:ffff::1"},
                                           {3, "2001:db8:a::cc"},
                                           {4, "2001:db8:a::d1"}}),
            make_trace("2001:db8:a:8000::1", {{1, "2001:db8:ffff::1"},
                                              {2, "2001:db8:a::aa"},
                                              {3, "2001:db8:a::cc"},
                                              {4, "2001:db8:a::d2"}}),
        };
        CHECK(discover_by_path_div(traces, bgp, params, 64500).empty());
    }

    SUBCASE("divergence only at the last hop fails s=2") {
        std::vector<Trace> traces = {
            make_trace("2001:db8:a:0::1",
                       {{1, "2001:db8:ffff::1"}, {2, "2001:db8:a::aa"}, {3, "2001:db8:a::d1"}}),
            make_trace("2001:db8:a:8000::1",
                       {{1, "2001:db8:ffff::1"}, {2, "2001:db8:a::aa"}, {3, "2001:db8:a::d2"}}),
        };
        CHECK(discover_by_path_div(traces, bgp, params, 64500).size() == 2);
        DivergenceParams strict = params;
        strict.s = 2;
        CHECK(discover_by_path_div(traces, bgp, strict, 64500).empty());
    }

    SUBCASE("pairs across different target ASNs are skipped") {
        std::vector<Trace> traces = {
            make_trace("2001:db8:a::1",
                       {{1, "2001:db8:ffff::1"}, {2, "2001:db8:a::aa"}, {3, "2001:db8:a::d1"}}),
            make_trace("2001:db8:b::1",
                       {{1, "2001:db8:ffff::1"}, {2, "2001:db8:a::aa"}, {3, "2001:db8:b::d2"}}),
        };
        CHECK(discover_by_path_div(traces, bgp, params, 64500).empty());

        // declaring the ASNs equivalent revives the pair
        BgpTable merged = test_bgp();
        merged.add_equivalence({65001, 65002});
        auto cands = discover_by_path_div(traces, merged, params, 64500);
        CHECK(cands.size() == 2);
    }

    SUBCASE("vantage-ASN last LCS hop rejects the pair") {
        std::vector<Trace> traces = {
            make_trace("2001:db8:a:0::1", {{1, "2001:db8:ffff::1"},
                                           {2, "2001:db8:ffff::2"},
                                           {3, "2001:db8:a::d1"},
                                           {4, "2001:db8:a::e1"}}),
            make_trace("2001:db8:a:8000::1", {{1, "2001:db8:ffff::1"},
                                              {2, "2001:db8:ffff::2"},
                                              {3, "2001:db8:a::d2"},
                                              {4, "2001:db8:a::e2"}}),
        };
        CHECK(discover_by_path_div(traces, bgp, params, 64500).empty());
        // but an in-AS hop at the end of the LCS passes
        traces[0].hops.at(2) = HopInfo{addr("2001:db8:a::aa"), 3, 1};
        traces[1].hops.at(2) = HopInfo{addr("2001:db8:a::aa"), 3, 1};
        CHECK(discover_by_path_div(traces, bgp, params, 64500).size() == 2);
    }
}

TEST_CASE("divergence is symmetric and monotone in added traces") {
    BgpTable bgp = test_bgp();
    DivergenceParams params;
    auto t1 = make_trace("2001:db8:a:0::1", {{1, "2001:db8:ffff::1"},
                                             {2, "2001:db8:a::aa"},
                                             {3, "2001:db8:a::d1"},
                                             {4, "2001:db8:a::e1"}});
    auto t2 = make_trace("2001:db8:a:8000::1", {{1, "2001:db8:ffff::1"},
                                                {2, "2001:db8:a::aa"},
                                                {3, "2001:db8:a::d2"},
                                                {4, "2001:db8:a::e2"}});
    auto t3 = make_trace("2001:db8:a:4000::1", {{1, "2001:db8:ffff::1"},
                                                {2, "2001:db8:a::aa"},
                                                {3, "2001:db8:a::d3"},
                                                {4, "2001:db8:a::e3"}});
    auto forward = discover_by_path_div({t1, t2}, bgp, params, 64500);
    auto reversed = discover_by_path_div({t2, t1}, bgp, params, 64500);
    REQUIRE(forward.size() == reversed.size());
    for (std::size_t i = 0; i < forward.size(); i++) {
        CHECK(forward[i].base == reversed[i].base);
        CHECK(forward[i].min_length == reversed[i].min_length);
    }

    auto more = discover_by_path_div({t1, t2, t3}, bgp, params, 64500);
    // t1's bound grows: 2001:db8:a:4000 shares 49 bits with t1 -> DPL 50
    for (const CandidateSubnet& c : more)
        if (c.owner == t1.target)
            CHECK(c.min_length == 50);
    for (const CandidateSubnet& c : forward)
        if (c.owner == t1.target)
            CHECK(c.min_length == 49);
}

TEST_CASE("EUI-64 leaf gateways dominate the last hop position") {
    TopologyParams p;
    p.as_count = 2;
    p.split_fanouts = {4};
    p.leaves_per_subnet = 3;
    p.targets_per_leaf = 2;
    p.gateway = GatewayStyle::Eui64;
    SimTopology topo = generate_topology(p);

    CampaignConfig cfg;
    cfg.targets = topo.targets;
    cfg.ttl_min = 1;
    cfg.ttl_max = 7;  // access 3 + core 2 + dist 1 + gateway 1
    cfg.rate_pps = 1e6;
    cfg.endpoint.source = topo.vantage;
    cfg.key = PermutationKey::from_hex("00112233445566778899aabbccddeeff");
    cfg.linger_ms = 10;
    SimTransport sim(topo);
    CampaignLog log = run_campaign(cfg, sim);

    BgpTable bgp;
    for (const auto& [prefix, asn] : topology_bgp_rows(p))
        bgp.add(prefix, asn);
    YieldReport y = yield_report(reassemble(log), bgp, log.probes_total);
    CHECK(y.eui64_interface_addrs == 24);  // 2 ASes x 4 children x 3 leaves
    CHECK(y.eui64_share > 0.5);
    // gateways are the last hop on every path
    CHECK(y.eui64_offset_median == 0);
    CHECK(y.eui64_offset_p5 == 0);
}

TEST_CASE("merging ASNs into an equivalence group never shrinks the result") {
    BgpTable bgp = test_bgp();
    // paths whose tails sit in a different ASN than the targets
    std::vector<Trace> traces = {
        make_trace("2001:db8:a:0::1",
                   {{1, "2001:db8:ffff::1"}, {2, "2001:db8:a::aa"}, {3, "2001:db8:b::d1"},
                    {4, "2001:db8:b::e1"}}),
        make_trace("2001:db8:a:8000::1",
                   {{1, "2001:db8:ffff::1"}, {2, "2001:db8:a::aa"}, {3, "2001:db8:b::d2"},
                    {4, "2001:db8:b::e2"}}),
        make_trace("2001:db8:b::1",
                   {{1, "2001:db8:ffff::1"}, {2, "2001:db8:b::aa"}, {3, "2001:db8:b::f1"},
                    {4, "2001:db8:b::f2"}}),
    };
    DivergenceParams params;
    std::size_t before = discover_by_path_div(traces, bgp, params, 64500).size();
    bgp.add_equivalence({65001, 65002});
    std::size_t after = discover_by_path_div(traces, bgp, params, 64500).size();
    CHECK(after >= before);
    CHECK(after >= 2);  // the divergent suffixes in 65002 now count for 65001 targets
}

TEST_CASE("IA hack") {
    SUBCASE("matching ::1 last hop yields the /64") {
        std::vector<Trace> traces = {make_trace(
            "2001:db8:0:7::abcd", {{1, "2001:db8:ffff::1"}, {2, "2001:db8:0:7::1"}})};
        IaHackResult r = ia_hack(traces);
        REQUIRE(r.candidates.size() == 1);
        CHECK(r.candidates[0].base == addr("2001:db8:0:7::"));
        CHECK(r.candidates[0].min_length == 64);
        CHECK(r.reached_lan_targets == std::vector<Address>{addr("2001:db8:0:7::abcd")});
    }
    SUBCASE("prefix mismatch yields nothing") {
        std::vector<Trace> traces = {make_trace(
            "2001:db8:0:7::abcd", {{1, "2001:db8:ffff::1"}, {2, "2001:db8:0:8::1"}})};
        CHECK(ia_hack(traces).candidates.empty());
    }
    SUBCASE("non-::1 gateways yield nothing") {
        std::vector<Trace> traces = {make_trace(
            "2001:db8:0:7::abcd", {{1, "2001:db8:ffff::1"}, {2, "2001:db8:0:7::2"}})};
        CHECK(ia_hack(traces).candidates.empty());
    }
}

TEST_CASE("validation classifies exact, more-specific, and short candidates") {
    std::vector<Prefix> truth = {Prefix::parse("2001:db8:a::/49"),
                                 Prefix::parse("2001:db8:a:8000::/49")};
    SUBCASE("identity") {
        std::vector<CandidateSubnet> cands = {
            {addr("2001:db8:a::"), 49, addr("2001:db8:a::1"), {}},
            {addr("2001:db8:a:8000::"), 49, addr("2001:db8:a:8000::1"), {}}};
        ValidationReport v = validate_subnets(cands, truth);
        CHECK(v.exact == 2);
        CHECK(v.truth_exact_matched == 2);
        CHECK(v.more_specific == 0);
    }
    SUBCASE("more-specific containment") {
        std::vector<CandidateSubnet> cands = {
            {addr("2001:db8:a:4000::"), 50, addr("2001:db8:a:4000::1"), {}}};
        ValidationReport v = validate_subnets(cands, truth);
        CHECK(v.exact == 0);
        CHECK(v.more_specific == 1);
        CHECK(v.truth_with_more_specific == 1);
    }
    SUBCASE("one bit short") {
        std::vector<CandidateSubnet> cands = {
            {addr("2001:db8:a::"), 48, addr("2001:db8:a::1"), {}}};
        ValidationReport v = validate_subnets(cands, truth);
        CHECK(v.exact == 0);
        CHECK(v.short_by.at(1) == 1);
    }
}

TEST_CASE("bgp: longest prefix match and transitive equivalence") {
    BgpTable bgp;
    bgp.add(Prefix::parse("2001:db8::/32"), 1);
    bgp.add(Prefix::parse("2001:db8:a::/48"), 2);
    bgp.add(Prefix::parse("2001:db8:a:8000::/49"), 3);
    CHECK(bgp.origin_asn(addr("2001:db8:ffff::1")) == 1);
    CHECK(bgp.origin_asn(addr("2001:db8:a::1")) == 2);
    CHECK(bgp.origin_asn(addr("2001:db8:a:8000::1")) == 3);
    CHECK(!bgp.origin_asn(addr("2001:db9::1")).has_value());
    CHECK(bgp.lookup(addr("2001:db8:a:8000::1"))->prefix.length == 49);

    // unknown matches nothing, not even itself
    CHECK(!bgp.same_asn(std::nullopt, std::nullopt));
    CHECK(!bgp.same_asn(1, std::nullopt));
    CHECK(bgp.same_asn(1, 1));
    CHECK(!bgp.same_asn(1, 2));

    // transitivity across separately declared groups
    bgp.add_equivalence({1, 2});
    bgp.add_equivalence({2, 3});
    CHECK(bgp.same_asn(1, 3));
    CHECK(bgp.resolve(1) == bgp.resolve(3));
    CHECK(!bgp.same_asn(1, 999));
}

TEST_CASE("malformed topologies are rejected on load") {
    SimTopology topo;
    topo.vantage = addr("2001:db8:ffff::100");
    topo.default_path = {addr("2001:db8::1"), addr("2001:db8::2"), addr("2001:db8::1")};
    CHECK_THROWS_WITH_AS(topo.validate(), doctest::Contains("repeats interface"),
                         std::runtime_error);
}

TEST_CASE("stratified sampling picks the lowest target per truth subnet") {
    std::vector<Trace> traces = {
        make_trace("2001:db8:a::9", {{1, "2001:db8:ffff::1"}}),
        make_trace("2001:db8:a::3", {{1, "2001:db8:ffff::1"}}),
        make_trace("2001:db8:a:8000::7", {{1, "2001:db8:ffff::1"}}),
    };
    std::vector<Prefix> truth = {Prefix::parse("2001:db8:a::/49"),
                                 Prefix::parse("2001:db8:a:8000::/49")};
    std::vector<Trace> sample = stratified_sample(traces, truth);
    REQUIRE(sample.size() == 2);
    CHECK(sample[0].target == addr("2001:db8:a::3"));
    CHECK(sample[1].target == addr("2001:db8:a:8000::7"));
}

TEST_CASE("report emission") {
    CampaignLog log;
    log.sent_per_ttl = {{1, 10}, {2, 10}};
    log.records = {rec("2001:db8:a::1", "2001:db8:ffff::1", 1),
                   rec("2001:db8:a::1", "2001:db8:a::aa", 2),
                   rec("2001:db8:a::2", "2001:db8:ffff::1", 1)};
    auto rows = per_hop_fractions(log);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].sent == 10);
    CHECK(rows[0].answered == 2);
    CHECK(per_hop_csv(rows).find("1,10,2,0.2") != std::string::npos);

    std::string cdf = dpl_cdf_csv({addr("2001:db8:a::1"), addr("2001:db8:a::2"),
                                   addr("2001:db8:b::1")});
    CHECK(cdf.find("dpl,count,cumulative,fraction") == 0);
    CHECK(dpl_cdf_csv({}) == "dpl,count,cumulative,fraction\n");

    std::vector<CandidateSubnet> cands = {{addr("2001:db8:a::"), 49, addr("2001:db8:a::1"), {}},
                                          {addr("2001:db8:a:8000::"), 49,
                                           addr("2001:db8:a:8000::1"), {}},
                                          {addr("2001:db8:b::"), 52, addr("2001:db8:b::1"), {}}};
    std::string lens = subnet_length_csv(cands);
    CHECK(lens.find("49,2") != std::string::npos);
    CHECK(lens.find("52,1") != std::string::npos);

    YieldReport y;
    y.interface_addrs = 3;
    CHECK(yield_report_json(y).find("\"interface_addrs\": 3") != std::string::npos);
    ValidationReport v;
    v.short_by[1] = 4;
    CHECK(validation_report_json(v).find("\"1\": 4") != std::string::npos);
}
