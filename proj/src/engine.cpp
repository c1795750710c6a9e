#include "sixmap/engine.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace sixmap {

std::string_view to_string(Strategy s) {
    switch (s) {
    case Strategy::Randomized: return "random";
    case Strategy::Sequential: return "seq";
    case Strategy::Doubletree: return "doubletree";
    }
    return "?";
}

std::optional<Strategy> parse_strategy(std::string_view s) {
    if (s == "random" || s == "randomized")
        return Strategy::Randomized;
    if (s == "seq" || s == "sequential")
        return Strategy::Sequential;
    if (s == "doubletree" || s == "dt")
        return Strategy::Doubletree;
    return std::nullopt;
}

void CampaignConfig::validate() const {
    if (targets.empty())
        throw std::invalid_argument("campaign needs at least one target");
    if (!(ttl_min >= 1 && ttl_min <= ttl_max && ttl_max <= fill_cap && fill_cap <= 255))
        throw std::invalid_argument("campaign needs 1 <= ttl_min <= ttl_max <= fill_cap <= 255");
    if (!(rate_pps > 0))
        throw std::invalid_argument("campaign rate must be positive");
    if (strategy == Strategy::Doubletree &&
        (doubletree.start_ttl < 1 || doubletree.start_ttl > fill_cap ||
         doubletree.attempts < 1))
        throw std::invalid_argument("doubletree needs 1 <= start_ttl <= fill_cap, attempts >= 1");
}

CampaignRunner::CampaignRunner(CampaignConfig cfg, PacketTransport& transport, RecordSink sink)
    : cfg_(std::move(cfg)), transport_(transport), sink_(std::move(sink)) {
    cfg_.validate();
    interval_us_ = static_cast<std::uint64_t>(std::llround(1e6 / cfg_.rate_pps));
    if (interval_us_ == 0)
        interval_us_ = 1;
    log_.strategy = std::string(to_string(cfg_.strategy));
    log_.protocol = std::string(to_string(cfg_.protocol));
    log_.ttl_min = cfg_.ttl_min;
    log_.ttl_max = cfg_.ttl_max;
    log_.fill_cap = cfg_.fill_cap;
    log_.fill = cfg_.fill;
    log_.rate_pps = cfg_.rate_pps;
    log_.instance = cfg_.endpoint.instance;
    log_.magic = cfg_.endpoint.magic;
    log_.key_hex = cfg_.key.hex();
    log_.source = cfg_.endpoint.source.str();
    log_.target_count = cfg_.targets.size();
}

void CampaignRunner::send_probe(const Address& target, int ttl, bool fill) {
    ProbePacket pkt = encode_probe(cfg_.endpoint, cfg_.protocol, target,
                                   static_cast<std::uint8_t>(ttl),
                                   static_cast<std::uint32_t>(transport_.now_ms()));
    transport_.send(pkt);
    log_.sent_per_ttl[ttl]++;
    log_.probes_total++;
    if (fill)
        log_.fills_sent++;
    if (trace_ttl_log_)
        trace_ttl_log_->push_back(ttl);
}

void CampaignRunner::process_arrivals() {
    while (auto raw = transport_.receive()) {
        DecodeResult d = decode_response(raw->wire, raw->recv_ms(), cfg_.endpoint.magic,
                                         cfg_.endpoint.instance);
        if (d.status == DecodeStatus::Foreign) {
            log_.foreign++;
            continue;
        }
        if (d.status == DecodeStatus::Unparseable) {
            log_.unparseable++;
            continue;
        }
        const DecodedResponse& resp = d.response;
        ResponseRecord rec;
        rec.target = resp.quoted_target;
        rec.responder = resp.responder;
        rec.sent_ttl = resp.sent_hop_limit;
        rec.rtt_ms = resp.rtt_ms;
        rec.icmp_type = resp.icmp_type;
        rec.icmp_code = resp.icmp_code;
        rec.fill = resp.sent_hop_limit > cfg_.ttl_max;
        rec.checksum_ok = resp.checksum_ok;
        log_.records.push_back(rec);
        if (sink_)
            sink_(rec);

        if (await_key_ && !await_hit_ && rec.target == await_key_->first &&
            rec.sent_ttl == await_key_->second)
            await_hit_ = Hit{rec.responder, rec.icmp_type};

        // Fill mode: a response at or past the initial maximum TTL extends
        // the probe ladder by one, while the cap and a per-target high-water
        // mark (the one bounded piece of sender state) stop runaway chains.
        if (cfg_.fill && cfg_.strategy != Strategy::Doubletree) {
            int h = rec.sent_ttl;
            if (h >= cfg_.ttl_max && h + 1 <= cfg_.fill_cap) {
                int& hwm = fill_hwm_[rec.target];
                if (h + 1 > hwm) {
                    hwm = h + 1;
                    send_probe(rec.target, h + 1, true);
                    linger_deadline_us_ =
                        std::max(linger_deadline_us_,
                                 transport_.now_us() + cfg_.linger_ms * 1000);
                }
            }
        }
    }
}

void CampaignRunner::drain_until(std::uint64_t deadline_us) {
    std::uint64_t now;
    while ((now = transport_.wait_for_activity(deadline_us)) < deadline_us)
        process_arrivals();
    process_arrivals();
}

void CampaignRunner::pace_to_next_slot() {
    drain_until(next_send_us_);
    next_send_us_ = std::max(transport_.now_us(), next_send_us_) + interval_us_;
}

void CampaignRunner::run_linear() {
    ProbeDomain dom = cfg_.domain();
    const std::uint64_t n = dom.size();
    ProbePermutation perm(dom, cfg_.key);

    for (std::uint64_t k = 0; k < n; k++) {
        ProbeSlot slot;
        if (cfg_.strategy == Strategy::Randomized) {
            slot = perm.at(k);
        } else {
            // Sequential probes in lockstep TTL rounds: every target at TTL h
            // before any probe at h+1, the way synchronized per-hop probers
            // load the path.
            slot.target_index = k % dom.target_count;
            slot.ttl = dom.ttl_min + static_cast<int>(k / dom.target_count);
        }
        pace_to_next_slot();
        send_probe(cfg_.targets[slot.target_index], slot.ttl, false);
    }
    linger_deadline_us_ =
        std::max(linger_deadline_us_, transport_.now_us() + cfg_.linger_ms * 1000);
    while (transport_.now_us() < linger_deadline_us_)
        drain_until(linger_deadline_us_);
}

std::optional<CampaignRunner::Hit> CampaignRunner::probe_hop(const Address& target, int ttl) {
    for (int attempt = 0; attempt < cfg_.doubletree.attempts; attempt++) {
        pace_to_next_slot();
        await_key_ = {target, ttl};
        await_hit_.reset();
        send_probe(target, ttl, false);
        std::uint64_t deadline = transport_.now_us() + cfg_.doubletree.probe_timeout_us;
        std::uint64_t now;
        while (!await_hit_ && (now = transport_.wait_for_activity(deadline)) <= deadline) {
            process_arrivals();
            if (now >= deadline)
                break;
        }
        if (await_hit_) {
            Hit h = *await_hit_;
            await_key_.reset();
            await_hit_.reset();
            return h;
        }
    }
    await_key_.reset();
    return std::nullopt;
}

std::vector<int> CampaignRunner::run_doubletree_trace(const Address& target) {
    std::vector<int> probed;
    trace_ttl_log_ = &probed;
    auto probe = [&](int ttl) { return probe_hop(target, ttl); };

    // Forward until destination, gap limit, or the hop-limit cap.
    int gap = 0;
    for (int h = cfg_.doubletree.start_ttl; h <= cfg_.fill_cap; h++) {
        auto hit = probe(h);
        if (!hit) {
            if (++gap >= cfg_.doubletree.gap_limit)
                break;
            continue;
        }
        gap = 0;
        bool terminal = hit->responder == target || hit->icmp_type == 129 || hit->icmp_type == 1;
        seen_.insert(hit->responder);
        if (terminal)
            break;
    }

    // Backward to TTL 1, stopping only at a previously seen interface; a
    // silent hop cannot match the stop set, so probing continues through it.
    for (int h = cfg_.doubletree.start_ttl - 1; h >= 1; h--) {
        auto hit = probe(h);
        if (!hit)
            continue;
        bool known = seen_.count(hit->responder) > 0;
        seen_.insert(hit->responder);
        if (known)
            break;
    }
    trace_ttl_log_ = nullptr;
    return probed;
}

void CampaignRunner::run_doubletree() {
    for (const Address& target : cfg_.targets)
        run_doubletree_trace(target);
    linger_deadline_us_ =
        std::max(linger_deadline_us_, transport_.now_us() + cfg_.linger_ms * 1000);
    while (transport_.now_us() < linger_deadline_us_)
        drain_until(linger_deadline_us_);
}

CampaignLog CampaignRunner::run() {
    try {
        if (cfg_.strategy == Strategy::Doubletree)
            run_doubletree();
        else
            run_linear();
    } catch (const TransportError&) {
        log_.incomplete = true;
    }
    return take_log();
}

CampaignLog run_campaign(const CampaignConfig& cfg, PacketTransport& transport,
                         const RecordSink& sink) {
    CampaignRunner runner(cfg, transport, sink);
    return runner.run();
}

namespace {

std::string magic_hex(std::uint32_t magic) {
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08x", magic);
    return buf;
}

}  // namespace

void write_log(const CampaignLog& log, std::ostream& out) {
    nlohmann::ordered_json meta;
    meta["mode"] = log.mode;
    meta["strategy"] = log.strategy;
    meta["protocol"] = log.protocol;
    meta["ttl_min"] = log.ttl_min;
    meta["ttl_max"] = log.ttl_max;
    meta["fill_cap"] = log.fill_cap;
    meta["fill"] = log.fill;
    meta["rate_pps"] = log.rate_pps;
    meta["instance"] = log.instance;
    meta["magic"] = magic_hex(log.magic);
    meta["key"] = log.key_hex;
    meta["epoch_ms"] = log.epoch_ms;
    meta["source"] = log.source;
    meta["target_count"] = log.target_count;
    for (const auto& [k, v] : log.extra)
        meta[k] = v;
    out << meta.dump() << "\n";

    for (const ResponseRecord& r : log.records) {
        nlohmann::ordered_json j;
        j["target"] = r.target.str();
        j["responder"] = r.responder.str();
        j["sent_ttl"] = r.sent_ttl;
        j["rtt_ms"] = r.rtt_ms;
        j["icmp_type"] = r.icmp_type;
        j["icmp_code"] = r.icmp_code;
        j["fill"] = r.fill;
        j["checksum_ok"] = r.checksum_ok;
        out << j.dump() << "\n";
    }

    nlohmann::ordered_json tail;
    auto& per_ttl = tail["sent_per_ttl"] = nlohmann::ordered_json::object();
    for (const auto& [ttl, n] : log.sent_per_ttl)
        per_ttl[std::to_string(ttl)] = n;
    tail["probes_total"] = log.probes_total;
    tail["fills_sent"] = log.fills_sent;
    tail["foreign"] = log.foreign;
    tail["unparseable"] = log.unparseable;
    tail["incomplete"] = log.incomplete;
    out << tail.dump() << "\n";
}

CampaignLog read_log(std::istream& in) {
    CampaignLog log;
    log.mode.clear();
    std::string line;
    bool have_meta = false;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        nlohmann::json j = nlohmann::json::parse(line);
        if (j.contains("target")) {
            ResponseRecord r;
            r.target = Address::parse(j.at("target").get<std::string>());
            r.responder = Address::parse(j.at("responder").get<std::string>());
            r.sent_ttl = j.at("sent_ttl").get<int>();
            r.rtt_ms = j.at("rtt_ms").get<std::int64_t>();
            r.icmp_type = j.at("icmp_type").get<int>();
            r.icmp_code = j.at("icmp_code").get<int>();
            r.fill = j.at("fill").get<bool>();
            r.checksum_ok = j.at("checksum_ok").get<bool>();
            log.records.push_back(r);
        } else if (j.contains("sent_per_ttl")) {
            for (const auto& [ttl, n] : j.at("sent_per_ttl").items())
                log.sent_per_ttl[std::stoi(ttl)] = n.get<std::uint64_t>();
            log.probes_total = j.value("probes_total", std::uint64_t{0});
            log.fills_sent = j.value("fills_sent", std::uint64_t{0});
            log.foreign = j.value("foreign", std::uint64_t{0});
            log.unparseable = j.value("unparseable", std::uint64_t{0});
            log.incomplete = j.value("incomplete", false);
        } else if (!have_meta) {
            have_meta = true;
            log.mode = j.value("mode", "sim");
            log.strategy = j.value("strategy", "random");
            log.protocol = j.value("protocol", "icmp6");
            log.ttl_min = j.value("ttl_min", 1);
            log.ttl_max = j.value("ttl_max", 16);
            log.fill_cap = j.value("fill_cap", 32);
            log.fill = j.value("fill", false);
            log.rate_pps = j.value("rate_pps", 0.0);
            log.instance = static_cast<std::uint8_t>(j.value("instance", 0));
            if (j.contains("magic"))
                log.magic = static_cast<std::uint32_t>(
                    std::stoul(j.at("magic").get<std::string>(), nullptr, 16));
            log.key_hex = j.value("key", "");
            log.epoch_ms = j.value("epoch_ms", std::uint64_t{0});
            log.source = j.value("source", "");
            log.target_count = j.value("target_count", std::uint64_t{0});
            for (const auto& [k, v] : j.items())
                if (v.is_string() && k != "mode" && k != "strategy" && k != "protocol" &&
                    k != "magic" && k != "key" && k != "source")
                    log.extra[k] = v.get<std::string>();
        }
    }
    return log;
}

CampaignLog read_log_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open log " + path);
    return read_log(in);
}

}  // namespace sixmap
