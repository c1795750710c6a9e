#include "sixmap/netsim.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace sixmap {

bool TokenBucket::try_consume(std::uint64_t now_us) {
    if (now_us > last_us) {
        level = std::min(burst, level + rate * static_cast<double>(now_us - last_us) / 1e6);
        last_us = now_us;
    }
    if (level >= 1.0) {
        level -= 1.0;
        return true;
    }
    return false;
}

const std::vector<Address>& SimTopology::path_for(const Address& target) const {
    auto it = paths.find(target);
    return it != paths.end() ? it->second : default_path;
}

DestSpec SimTopology::destination_for(const Address& target) const {
    auto it = destinations.find(target);
    if (it != destinations.end())
        return it->second;
    if (paths.find(target) != paths.end())
        return default_destination;
    return DestSpec{DestBehavior::Silent, 0};  // unknown target: default route, then silence
}

namespace {

std::string behavior_name(DestBehavior b) {
    switch (b) {
    case DestBehavior::EchoReply: return "echo";
    case DestBehavior::Silent: return "silent";
    case DestBehavior::Unreachable: return "unreachable";
    }
    return "?";
}

DestBehavior behavior_from(const std::string& s) {
    if (s == "echo")
        return DestBehavior::EchoReply;
    if (s == "silent")
        return DestBehavior::Silent;
    if (s == "unreachable")
        return DestBehavior::Unreachable;
    throw std::runtime_error("unknown destination behavior \"" + s + "\"");
}

}  // namespace

std::string SimTopology::to_json() const {
    nlohmann::ordered_json j;
    j["schema"] = schema;
    j["vantage"] = vantage.str();
    j["per_hop_delay_ms"] = per_hop_delay_ms;
    auto& ifs = j["interfaces"] = nlohmann::ordered_json::array();
    for (const InterfaceSpec& i : interfaces)
        ifs.push_back({{"addr", i.addr.str()}, {"rate", i.rate}, {"burst", i.burst}});
    auto& ps = j["paths"] = nlohmann::ordered_json::object();
    std::vector<Address> keys;
    keys.reserve(paths.size());
    for (const auto& [t, _] : paths)
        keys.push_back(t);
    std::sort(keys.begin(), keys.end());
    for (const Address& t : keys) {
        auto arr = nlohmann::ordered_json::array();
        for (const Address& hop : paths.at(t))
            arr.push_back(hop.str());
        ps[t.str()] = std::move(arr);
    }
    if (!default_path.empty()) {
        auto arr = nlohmann::ordered_json::array();
        for (const Address& hop : default_path)
            arr.push_back(hop.str());
        j["default_path"] = std::move(arr);
    }
    j["default_destination"] = {{"behavior", behavior_name(default_destination.behavior)},
                                {"code", default_destination.code}};
    if (!destinations.empty()) {
        auto& ds = j["destinations"] = nlohmann::ordered_json::object();
        std::vector<Address> dkeys;
        for (const auto& [t, _] : destinations)
            dkeys.push_back(t);
        std::sort(dkeys.begin(), dkeys.end());
        for (const Address& t : dkeys)
            ds[t.str()] = {{"behavior", behavior_name(destinations.at(t).behavior)},
                           {"code", destinations.at(t).code}};
    }
    if (!ground_truth_subnets.empty()) {
        auto arr = nlohmann::ordered_json::array();
        for (const Prefix& p : ground_truth_subnets)
            arr.push_back(p.str());
        j["ground_truth_subnets"] = std::move(arr);
    }
    if (!targets.empty()) {
        auto arr = nlohmann::ordered_json::array();
        for (const Address& t : targets)
            arr.push_back(t.str());
        j["targets"] = std::move(arr);
    }
    return j.dump(2);
}

SimTopology SimTopology::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    SimTopology t;
    t.schema = j.at("schema").get<int>();
    if (t.schema != 1)
        throw std::runtime_error("unsupported topology schema " + std::to_string(t.schema));
    t.vantage = Address::parse(j.at("vantage").get<std::string>());
    t.per_hop_delay_ms = j.value("per_hop_delay_ms", 0.5);
    for (const auto& e : j.at("interfaces"))
        t.interfaces.push_back(InterfaceSpec{Address::parse(e.at("addr").get<std::string>()),
                                             e.value("rate", 1e9), e.value("burst", 1e9)});
    if (j.contains("paths"))
        for (const auto& [key, arr] : j.at("paths").items()) {
            std::vector<Address> hops;
            for (const auto& h : arr)
                hops.push_back(Address::parse(h.get<std::string>()));
            t.paths.emplace(Address::parse(key), std::move(hops));
        }
    if (j.contains("default_path"))
        for (const auto& h : j.at("default_path"))
            t.default_path.push_back(Address::parse(h.get<std::string>()));
    if (j.contains("default_destination")) {
        const auto& d = j.at("default_destination");
        t.default_destination = DestSpec{behavior_from(d.at("behavior").get<std::string>()),
                                         static_cast<std::uint8_t>(d.value("code", 3))};
    }
    if (j.contains("destinations"))
        for (const auto& [key, d] : j.at("destinations").items())
            t.destinations.emplace(
                Address::parse(key),
                DestSpec{behavior_from(d.at("behavior").get<std::string>()),
                         static_cast<std::uint8_t>(d.value("code", 3))});
    if (j.contains("ground_truth_subnets"))
        for (const auto& p : j.at("ground_truth_subnets"))
            t.ground_truth_subnets.push_back(Prefix::parse(p.get<std::string>()));
    if (j.contains("targets"))
        for (const auto& a : j.at("targets"))
            t.targets.push_back(Address::parse(a.get<std::string>()));
    return t;
}

namespace {

void check_loop_free(const std::vector<Address>& path, const std::string& what) {
    std::unordered_map<Address, bool, AddressHash> seen;
    for (const Address& hop : path)
        if (!seen.emplace(hop, true).second)
            throw std::runtime_error("topology path for " + what + " repeats interface " +
                                     hop.str());
}

}  // namespace

void SimTopology::validate() const {
    for (const auto& [target, path] : paths)
        check_loop_free(path, target.str());
    check_loop_free(default_path, "the default route");
}

SimTopology SimTopology::load(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open topology " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        SimTopology t = from_json(ss.str());
        t.validate();
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("bad topology file " + path + ": " + e.what());
    }
}

void SimTopology::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write topology " + path);
    out << to_json() << "\n";
}

SimTransport::SimTransport(SimTopology topo) : topo_(std::move(topo)) {
    for (const InterfaceSpec& i : topo_.interfaces)
        buckets_.emplace(i.addr, TokenBucket{i.rate, i.burst, i.burst, 0});
}

void SimTransport::send(const ProbePacket& p) {
    deliver_probe(p);
}

void SimTransport::deliver_probe(const ProbePacket& p) {
    counters_.delivered++;
    const std::vector<Address>& path = topo_.path_for(p.target);
    const std::uint64_t hop_delay_us =
        static_cast<std::uint64_t>(topo_.per_hop_delay_ms * 1000.0);
    int h = p.state.hop_limit;

    if (h >= 1 && static_cast<std::size_t>(h) <= path.size()) {
        // Expires at the h-th hop; consume a token there or drop silently.
        const Address& iface = path[static_cast<std::size_t>(h - 1)];
        std::uint64_t at_hop_us = now_us_ + static_cast<std::uint64_t>(h) * hop_delay_us;
        auto bucket = buckets_.find(iface);
        bool respond = bucket == buckets_.end() || bucket->second.try_consume(at_hop_us);
        if (respond) {
            counters_.te_answered++;
            answered_[iface]++;
            schedule(at_hop_us + static_cast<std::uint64_t>(h) * hop_delay_us,
                     build_time_exceeded(iface, p.wire));
        } else {
            counters_.rate_dropped++;
        }
        return;
    }

    // Past the path end: the destination decides.
    DestSpec dest = topo_.destination_for(p.target);
    std::uint64_t pos = path.size() + 1;
    std::uint64_t at_dest_us = now_us_ + pos * hop_delay_us;
    switch (dest.behavior) {
    case DestBehavior::Silent:
        counters_.dest_silent++;
        return;
    case DestBehavior::EchoReply: {
        // Echo replies are not ICMPv6 errors, so no rate limiting applies.
        std::vector<std::uint8_t> wire =
            p.protocol == Protocol::Icmp6Echo
                ? build_echo_reply(p.target, p.wire)
                : build_dest_unreachable(p.target, 4, p.wire);  // port unreachable
        counters_.dest_answered++;
        schedule(at_dest_us + pos * hop_delay_us, std::move(wire));
        return;
    }
    case DestBehavior::Unreachable: {
        if (path.empty()) {
            counters_.dest_silent++;
            return;
        }
        // The target's gateway reports unreachability, spending its token.
        const Address& gw = path.back();
        auto bucket = buckets_.find(gw);
        if (bucket != buckets_.end() && !bucket->second.try_consume(at_dest_us)) {
            counters_.rate_dropped++;
            return;
        }
        counters_.dest_answered++;
        answered_[gw]++;
        schedule(at_dest_us + pos * hop_delay_us,
                 build_dest_unreachable(gw, dest.code, p.wire));
        return;
    }
    }
}

void SimTransport::schedule(std::uint64_t at_us, std::vector<std::uint8_t> wire) {
    pending_.push(Delivery{at_us, seq_++, std::move(wire)});
}

std::optional<RawResponse> SimTransport::receive() {
    if (pending_.empty() || pending_.top().at_us > now_us_)
        return std::nullopt;
    RawResponse r;
    r.wire = pending_.top().wire;
    r.recv_us = pending_.top().at_us;
    pending_.pop();
    return r;
}

std::uint64_t SimTransport::wait_for_activity(std::uint64_t deadline_us) {
    if (!pending_.empty() && pending_.top().at_us <= deadline_us)
        now_us_ = std::max(now_us_, pending_.top().at_us);
    else
        now_us_ = std::max(now_us_, deadline_us);
    return now_us_;
}

std::uint32_t vantage_asn() {
    return 64500;
}

std::uint32_t as_number(int as_index) {
    return 65000 + static_cast<std::uint32_t>(as_index);
}

namespace {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// value occupies address bits ending at to_bit (exclusive), within the high 64.
Address with_bits(Address base, std::uint64_t value, int to_bit) {
    base.hi |= value << (64 - to_bit);
    return base;
}

Prefix vantage_prefix() {
    return Prefix::parse("2001:db8:ffff::/48");
}

Prefix as_prefix(int as_index) {
    Address a = Address::parse("2001:db8::");
    a.hi |= static_cast<std::uint64_t>(as_index + 1) << 16;
    return Prefix{a, 48};
}

}  // namespace

std::vector<std::pair<Prefix, std::uint32_t>> topology_bgp_rows(const TopologyParams& params) {
    std::vector<std::pair<Prefix, std::uint32_t>> rows;
    rows.emplace_back(vantage_prefix(), vantage_asn());
    for (int i = 0; i < params.as_count; i++)
        rows.emplace_back(as_prefix(i), as_number(i));
    return rows;
}

SimTopology generate_topology(const TopologyParams& params) {
    if (params.as_count < 1 || params.access_depth < 0 || params.core_depth < 1 ||
        params.leaves_per_subnet < 1 || params.targets_per_leaf < 1)
        throw std::invalid_argument("topology parameters out of range");
    for (int f : params.split_fanouts)
        if (f < 1)
            throw std::invalid_argument("split fanouts must be >= 1");

    SimTopology topo;
    topo.per_hop_delay_ms = params.per_hop_delay_ms;
    topo.default_destination = DestSpec{params.dest_behavior, 3};
    topo.vantage = Address::parse("2001:db8:ffff::100");

    auto add_interface = [&](const Address& a) {
        topo.interfaces.push_back(InterfaceSpec{a, params.if_rate, params.if_burst});
        return a;
    };

    // Shared access chain in the vantage network.
    std::vector<Address> access;
    for (int d = 0; d < params.access_depth; d++) {
        Address a = vantage_prefix().base;
        a.lo = static_cast<std::uint64_t>(d + 1);
        access.push_back(add_interface(a));
    }

    for (int as = 0; as < params.as_count; as++) {
        Prefix asp = as_prefix(as);
        Address infra = asp.base;
        infra.hi |= 0xffff;  // per-AS infrastructure /64
        std::uint64_t router_counter = 0;

        std::vector<Address> spine = access;
        for (int d = 0; d < params.core_depth; d++) {
            Address a = infra;
            a.lo = ++router_counter;
            spine.push_back(add_interface(a));
        }

        // Recursive split into equal children; each child gets its own
        // distribution router on the way down.
        struct Node {
            Prefix prefix;
            std::vector<Address> path;
        };
        std::vector<Node> frontier{Node{asp, spine}};
        for (int fanout : params.split_fanouts) {
            int bits = fanout > 1 ? std::bit_width(static_cast<unsigned>(fanout - 1)) : 0;
            std::vector<Node> next;
            for (const Node& node : frontier) {
                int child_len = node.prefix.length + bits;
                if (child_len > 64)
                    throw std::invalid_argument("split levels exceed /64");
                for (int c = 0; c < fanout; c++) {
                    Node child;
                    child.prefix = Prefix{
                        with_bits(node.prefix.base, static_cast<std::uint64_t>(c), child_len),
                        child_len};
                    child.path = node.path;
                    Address r = infra;
                    r.lo = ++router_counter;
                    child.path.push_back(add_interface(r));
                    topo.ground_truth_subnets.push_back(child.prefix);
                    next.push_back(std::move(child));
                }
            }
            frontier = std::move(next);
        }

        std::uint64_t leaf_counter = 0;
        for (const Node& node : frontier) {
            int avail = 64 - node.prefix.length;
            if (avail < 63 && params.leaves_per_subnet > (1 << avail))
                throw std::invalid_argument("leaves_per_subnet exceeds room below " +
                                            node.prefix.str());
            for (int l = 0; l < params.leaves_per_subnet; l++) {
                Prefix leaf{with_bits(node.prefix.base, static_cast<std::uint64_t>(l), 64), 64};
                leaf_counter++;
                Address gw = leaf.base;
                if (params.gateway == GatewayStyle::LowByte1)
                    gw.lo = 1;
                else
                    gw.lo = 0x021122fffe000000ULL | (leaf_counter & 0xffffff);
                add_interface(gw);
                topo.ground_truth_subnets.push_back(leaf);

                std::vector<Address> path = node.path;
                path.push_back(gw);
                for (int t = 0; t < params.targets_per_leaf; t++) {
                    Address target = leaf.base;
                    std::uint64_t jitter =
                        mix64(params.seed ^ (leaf_counter << 20) ^ static_cast<std::uint64_t>(t)) &
                        0xffffffffULL;
                    target.lo = (params.target_iid & 0xffffffff00000000ULL) | jitter;
                    if (topo.paths.count(target))
                        continue;  // jitter collision inside one leaf; vanishingly rare
                    topo.paths.emplace(target, path);
                    topo.targets.push_back(target);
                }
            }
        }
    }
    std::sort(topo.targets.begin(), topo.targets.end());
    std::sort(topo.ground_truth_subnets.begin(), topo.ground_truth_subnets.end());
    topo.ground_truth_subnets.erase(
        std::unique(topo.ground_truth_subnets.begin(), topo.ground_truth_subnets.end()),
        topo.ground_truth_subnets.end());
    return topo;
}

}  // namespace sixmap
