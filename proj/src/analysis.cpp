#include "sixmap/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace sixmap {

namespace {

// Nearest-rank percentile over a sorted ascending vector.
template <typename T>
T percentile(const std::vector<T>& sorted, double p) {
    if (sorted.empty())
        return T{};
    std::size_t rank = static_cast<std::size_t>(
        std::ceil(p / 100.0 * static_cast<double>(sorted.size())));
    if (rank < 1)
        rank = 1;
    return sorted[rank - 1];
}

}  // namespace

int Trace::last_te_ttl() const {
    int best = 0;
    for (const auto& [ttl, hop] : hops)
        if (hop.icmp_type == 3)
            best = ttl;
    return best;
}

std::optional<Address> Trace::last_te_hop() const {
    std::optional<Address> best;
    for (const auto& [ttl, hop] : hops)
        if (hop.icmp_type == 3)
            best = hop.responder;
    return best;
}

std::vector<Trace> reassemble(const CampaignLog& log, ReassemblyStats* stats) {
    std::unordered_map<Address, Trace, AddressHash> by_target;
    std::size_t dupes = 0;
    for (const ResponseRecord& r : log.records) {
        Trace& t = by_target[r.target];
        t.target = r.target;
        auto [it, inserted] = t.hops.emplace(r.sent_ttl, HopInfo{r.responder,
                                                                 r.icmp_type, r.rtt_ms});
        if (!inserted)
            dupes++;  // keep the earliest response for this (target, TTL)
        if (r.responder == r.target)
            t.reached = true;
    }
    std::vector<Trace> traces;
    traces.reserve(by_target.size());
    for (auto& [_, t] : by_target)
        traces.push_back(std::move(t));
    std::sort(traces.begin(), traces.end(),
              [](const Trace& a, const Trace& b) { return a.target < b.target; });
    if (stats) {
        stats->traces = traces.size();
        stats->duplicate_responses = dupes;
    }
    return traces;
}

YieldReport yield_report(const std::vector<Trace>& traces, const BgpTable& bgp,
                         std::uint64_t probes_total) {
    YieldReport y;
    y.traces = traces.size();
    y.probes = probes_total;

    std::unordered_set<Address, AddressHash> interfaces;
    std::unordered_set<Prefix, PrefixHash> int_prefixes;
    std::unordered_set<std::uint32_t> int_asns;
    std::vector<int> path_lens;
    std::vector<int> eui_offsets;
    std::uint64_t reach = 0;

    for (const Trace& t : traces) {
        y.responses += t.hops.size();
        auto target_asn = bgp.origin_asn(t.target);
        bool reached_asn = false;
        int last_ttl = 0;
        for (const auto& [ttl, hop] : t.hops)
            last_ttl = std::max(last_ttl, ttl);
        int last_te = t.last_te_ttl();
        for (const auto& [ttl, hop] : t.hops) {
            if (hop.icmp_type == 3) {
                interfaces.insert(hop.responder);
                if (classify_iid(hop.responder) == IidClass::Eui64)
                    eui_offsets.push_back(ttl - last_te);
            }
            if (bgp.same_asn(bgp.origin_asn(hop.responder), target_asn))
                reached_asn = true;
        }
        if (reached_asn)
            reach++;
        if (last_ttl > 0)
            path_lens.push_back(last_ttl);
    }

    for (const Address& a : interfaces) {
        if (auto m = bgp.lookup(a)) {
            int_prefixes.insert(m->prefix);
            int_asns.insert(m->asn);
        }
        if (classify_iid(a) == IidClass::Eui64)
            y.eui64_interface_addrs++;
    }

    y.interface_addrs = interfaces.size();
    y.interface_bgp_prefixes = int_prefixes.size();
    y.interface_asns = int_asns.size();
    y.reach_target_asn_fraction =
        y.traces ? static_cast<double>(reach) / static_cast<double>(y.traces) : 0.0;
    std::sort(path_lens.begin(), path_lens.end());
    y.path_len_median = percentile(path_lens, 50);
    y.path_len_p95 = percentile(path_lens, 95);
    std::sort(eui_offsets.begin(), eui_offsets.end());
    y.eui64_offset_median = percentile(eui_offsets, 50);
    y.eui64_offset_p5 = percentile(eui_offsets, 5);
    y.eui64_share = y.interface_addrs
                        ? static_cast<double>(y.eui64_interface_addrs) /
                              static_cast<double>(y.interface_addrs)
                        : 0.0;
    y.yield_percent = y.probes ? 100.0 * static_cast<double>(y.interface_addrs) /
                                     static_cast<double>(y.probes)
                               : 0.0;
    return y;
}

namespace {

struct DivergenceView {
    const Trace* trace;
    std::map<int, Address> te_hops;
    std::optional<std::uint32_t> target_asn;
};

// Leading common run of present, equal hops; 0 when TTL 1 already disagrees.
int lcs_end(const DivergenceView& a, const DivergenceView& b) {
    int end = 0;
    for (int ttl = 1;; ttl++) {
        auto ha = a.te_hops.find(ttl);
        auto hb = b.te_hops.find(ttl);
        if (ha == a.te_hops.end() || hb == b.te_hops.end() || ha->second != hb->second)
            break;
        end = ttl;
    }
    return end;
}

bool pair_diverges(const DivergenceView& a, const DivergenceView& b, const BgpTable& bgp,
                   const DivergenceParams& p, std::uint32_t vantage) {
    int end = lcs_end(a, b);
    if (end < p.c)
        return false;

    // By construction the LCS has no missing hops: it is the run of
    // TTL-aligned positions where both traces answered identically.
    if (p.C > 0) {
        int matches = 0;
        for (int ttl = 1; ttl <= end; ttl++)
            if (bgp.same_asn(bgp.origin_asn(a.te_hops.at(ttl)), a.target_asn))
                matches++;
        if (matches < p.C)
            return false;
    }
    if (p.A > 0) {
        auto last_asn = bgp.origin_asn(a.te_hops.at(end));
        if (last_asn && bgp.resolve(*last_asn) == bgp.resolve(vantage))
            return false;
    }

    // Divergent suffixes: everything past the LCS; gaps inside are fine.
    for (const DivergenceView* side : {&a, &b}) {
        int len = 0, asn_matches = 0;
        for (const auto& [ttl, hop] : side->te_hops) {
            if (ttl <= end)
                continue;
            len++;
            if (bgp.same_asn(bgp.origin_asn(hop), side->target_asn))
                asn_matches++;
        }
        int min_len = std::max(p.s, p.z == 0 ? 1 : 0);
        if (len < min_len)
            return false;
        if (asn_matches < p.S)
            return false;
    }
    return true;
}

}  // namespace

std::vector<CandidateSubnet> discover_by_path_div(const std::vector<Trace>& traces,
                                                  const BgpTable& bgp,
                                                  const DivergenceParams& params,
                                                  std::uint32_t vantage_asn) {
    std::vector<DivergenceView> views;
    views.reserve(traces.size());
    for (const Trace& t : traces) {
        DivergenceView v;
        v.trace = &t;
        for (const auto& [ttl, hop] : t.hops)
            if (hop.icmp_type == 3)
                v.te_hops.emplace(ttl, hop.responder);
        v.target_asn = bgp.origin_asn(t.target);
        views.push_back(std::move(v));
    }
    std::sort(views.begin(), views.end(), [](const DivergenceView& a, const DivergenceView& b) {
        return a.trace->target < b.trace->target;
    });

    // Witnesses per target: max common prefix length over diverged partners.
    std::map<Address, std::pair<int, std::vector<Address>>> witness;
    for (std::size_t i = 0; i < views.size(); i++) {
        for (std::size_t j = i + 1; j < views.size(); j++) {
            const DivergenceView& a = views[i];
            const DivergenceView& b = views[j];
            if (a.trace->target == b.trace->target)
                continue;
            if (params.T > 0) {
                if (!a.target_asn || !b.target_asn ||
                    !bgp.same_asn(a.target_asn, b.target_asn))
                    continue;
            }
            if (!pair_diverges(a, b, bgp, params, vantage_asn))
                continue;
            int cpl = common_prefix_len(a.trace->target, b.trace->target);
            auto& wa = witness[a.trace->target];
            wa.first = std::max(wa.first, cpl);
            wa.second.push_back(b.trace->target);
            auto& wb = witness[b.trace->target];
            wb.first = std::max(wb.first, cpl);
            wb.second.push_back(a.trace->target);
        }
    }

    std::map<std::pair<Address, int>, CandidateSubnet> dedup;
    for (const auto& [target, w] : witness) {
        int len = std::min(w.first + 1, 64);
        Address base = masked(target, len);
        auto key = std::make_pair(base, len);
        auto it = dedup.find(key);
        if (it == dedup.end()) {
            CandidateSubnet c;
            c.base = base;
            c.min_length = len;
            c.owner = target;
            c.diverged_with = w.second;
            dedup.emplace(key, std::move(c));
        } else {
            auto& dst = it->second.diverged_with;
            dst.insert(dst.end(), w.second.begin(), w.second.end());
        }
    }

    std::vector<CandidateSubnet> out;
    out.reserve(dedup.size());
    for (auto& [_, c] : dedup)
        out.push_back(std::move(c));
    return out;
}

IaHackResult ia_hack(const std::vector<Trace>& traces) {
    IaHackResult r;
    std::set<Address> seen_bases;
    for (const Trace& t : traces) {
        auto last = t.last_te_hop();
        if (!last)
            continue;
        if (last->lo != 1 || last->hi != t.target.hi)
            continue;
        r.reached_lan_targets.push_back(t.target);
        Address base = masked(t.target, 64);
        if (seen_bases.insert(base).second)
            r.candidates.push_back(CandidateSubnet{base, 64, t.target, {}});
    }
    return r;
}

ValidationReport validate_subnets(const std::vector<CandidateSubnet>& candidates,
                                  const std::vector<Prefix>& truth) {
    ValidationReport rep;
    rep.candidates = candidates.size();
    rep.truth_total = truth.size();

    std::set<std::pair<Address, int>> truth_set;
    for (const Prefix& t : truth)
        truth_set.insert({t.base, t.length});

    for (const CandidateSubnet& c : candidates) {
        if (truth_set.count({c.base, c.min_length})) {
            rep.exact++;
            continue;
        }
        bool specific = false;
        std::optional<int> deficit;
        for (const Prefix& t : truth) {
            if (t.length < c.min_length && masked(c.base, t.length) == t.base)
                specific = true;  // candidate sits strictly inside coarser truth
            if (t.length > c.min_length && masked(t.base, c.min_length) == c.base) {
                int d = t.length - c.min_length;
                if (!deficit || d < *deficit)
                    deficit = d;  // candidate is a short lower bound for t
            }
        }
        if (specific)
            rep.more_specific++;
        else if (deficit)
            rep.short_by[*deficit]++;
    }

    std::set<std::pair<Address, int>> cand_set;
    for (const CandidateSubnet& c : candidates)
        cand_set.insert({c.base, c.min_length});
    for (const Prefix& t : truth) {
        if (cand_set.count({t.base, t.length}))
            rep.truth_exact_matched++;
        for (const CandidateSubnet& c : candidates)
            if (c.min_length > t.length && masked(c.base, t.length) == t.base) {
                rep.truth_with_more_specific++;
                break;
            }
    }
    return rep;
}

std::vector<Trace> stratified_sample(const std::vector<Trace>& traces,
                                     const std::vector<Prefix>& truth) {
    std::set<Address> chosen;
    for (const Prefix& subnet : truth) {
        std::optional<Address> pick;
        for (const Trace& t : traces)
            if (subnet.contains(t.target) && (!pick || t.target < *pick))
                pick = t.target;
        if (pick)
            chosen.insert(*pick);
    }
    std::vector<Trace> out;
    for (const Trace& t : traces)
        if (chosen.count(t.target))
            out.push_back(t);
    return out;
}

StratifiedResult stratified_rerun(const std::vector<Trace>& traces,
                                  const std::vector<Prefix>& truth, const BgpTable& bgp,
                                  const DivergenceParams& params, std::uint32_t vantage_asn) {
    StratifiedResult r;
    std::vector<Trace> sample = stratified_sample(traces, truth);
    r.sampled_traces = sample.size();
    r.candidates = discover_by_path_div(sample, bgp, params, vantage_asn);
    r.report = validate_subnets(r.candidates, truth);
    return r;
}

std::vector<Prefix> read_prefix_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open prefix file " + path);
    std::vector<Prefix> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        std::string s = line;
        if (auto hash = s.find('#'); hash != std::string::npos)
            s.resize(hash);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
            s.pop_back();
        std::size_t start = s.find_first_not_of(" \t");
        if (start == std::string::npos)
            continue;
        s = s.substr(start);
        try {
            if (s.find('/') == std::string::npos)
                out.push_back(Prefix::of(Address::parse(s), 128));
            else
                out.push_back(Prefix::parse(s));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::vector<PerHopRow> per_hop_fractions(const CampaignLog& log) {
    std::map<int, PerHopRow> rows;
    for (const auto& [ttl, sent] : log.sent_per_ttl) {
        rows[ttl].ttl = ttl;
        rows[ttl].sent = sent;
    }
    for (const ResponseRecord& r : log.records) {
        rows[r.sent_ttl].ttl = r.sent_ttl;
        rows[r.sent_ttl].answered++;
    }
    std::vector<PerHopRow> out;
    for (auto& [_, row] : rows)
        out.push_back(row);
    return out;
}

std::string per_hop_csv(const std::vector<PerHopRow>& rows) {
    std::ostringstream os;
    os << "ttl,sent,answered,fraction\n";
    for (const PerHopRow& r : rows) {
        double f = r.sent ? static_cast<double>(r.answered) / static_cast<double>(r.sent) : 0.0;
        os << r.ttl << "," << r.sent << "," << r.answered << "," << f << "\n";
    }
    return os.str();
}

std::string dpl_cdf_csv(const std::vector<Address>& addrs) {
    std::ostringstream os;
    os << "dpl,count,cumulative,fraction\n";
    if (addrs.empty())
        return os.str();
    DplSet d = compute_dpl(addrs);
    std::map<int, std::size_t> hist;
    for (int v : d.dpl)
        hist[v]++;
    std::size_t cum = 0;
    for (const auto& [dpl, n] : hist) {
        cum += n;
        os << dpl << "," << n << "," << cum << ","
           << static_cast<double>(cum) / static_cast<double>(d.members.size()) << "\n";
    }
    return os.str();
}

std::string subnet_length_csv(const std::vector<CandidateSubnet>& candidates) {
    std::map<int, std::size_t> hist;
    for (const CandidateSubnet& c : candidates)
        hist[c.min_length]++;
    std::ostringstream os;
    os << "min_length,count\n";
    for (const auto& [len, n] : hist)
        os << len << "," << n << "\n";
    return os.str();
}

std::string yield_report_json(const YieldReport& y) {
    nlohmann::ordered_json j;
    j["traces"] = y.traces;
    j["probes"] = y.probes;
    j["responses"] = y.responses;
    j["interface_addrs"] = y.interface_addrs;
    j["interface_bgp_prefixes"] = y.interface_bgp_prefixes;
    j["interface_asns"] = y.interface_asns;
    j["reach_target_asn_fraction"] = y.reach_target_asn_fraction;
    j["path_len_median"] = y.path_len_median;
    j["path_len_p95"] = y.path_len_p95;
    j["eui64_interface_addrs"] = y.eui64_interface_addrs;
    j["eui64_share"] = y.eui64_share;
    j["eui64_offset_median"] = y.eui64_offset_median;
    j["eui64_offset_p5"] = y.eui64_offset_p5;
    j["yield_percent"] = y.yield_percent;
    return j.dump(2);
}

std::string validation_report_json(const ValidationReport& v) {
    nlohmann::ordered_json j;
    j["candidates"] = v.candidates;
    j["exact"] = v.exact;
    j["more_specific"] = v.more_specific;
    auto& sb = j["short_by"] = nlohmann::ordered_json::object();
    for (const auto& [d, n] : v.short_by)
        sb[std::to_string(d)] = n;
    j["truth_total"] = v.truth_total;
    j["truth_exact_matched"] = v.truth_exact_matched;
    j["truth_with_more_specific"] = v.truth_with_more_specific;
    return j.dump(2);
}

}  // namespace sixmap
