#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "sixmap/analysis.hpp"
#include "sixmap/engine.hpp"
#include "sixmap/netsim.hpp"
#include "sixmap/rawsock.hpp"
#include "sixmap/strategy_matrix.hpp"
#include "sixmap/targetgen.hpp"

namespace fs = std::filesystem;
using namespace sixmap;

namespace {

constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 ok, 2 config error, 3 I/O error, 4 privilege error.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[8192];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); i++) {
            h ^= static_cast<std::uint8_t>(buf[i]);
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t wallclock_ms() {
    return static_cast<std::uint64_t>(std::time(nullptr)) * 1000;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write " + path);
    out << content;
    if (!out)
        throw IoError("write failed for " + path);
}

// Campaign flags shared by `sim` and `probe`.
struct CampaignFlags {
    std::string targets_file;
    std::string topo_file;
    std::string transport = "raw";
    std::string output = "campaign.jsonl";
    std::string key_hex;
    std::string proto = "icmp6";
    std::string strategy = "random";
    std::string source;
    std::string contact_url;
    std::string from_manifest;
    int ttl_min = 1, ttl_max = 16, fill_cap = 32;
    bool fill = false;
    double rate = 1000.0;
    int instance = 0;
    std::uint64_t linger_ms = 10000;
    int start_ttl = 5, dt_attempts = 2, dt_gap = 3;
    std::uint64_t dt_timeout_ms = 1000;
    std::uint16_t dest_port = 80;
};

void add_campaign_flags(CLI::App* cmd, CampaignFlags& f, bool sim_mode) {
    cmd->add_option("--targets", f.targets_file,
                    sim_mode ? "Target file (defaults to the topology's target list)"
                             : "Target file, one address per line");
    cmd->add_option("--ttl-min", f.ttl_min, "Lowest probed hop limit");
    cmd->add_option("--ttl-max", f.ttl_max, "Initial maximum hop limit");
    cmd->add_option("--fill-cap", f.fill_cap, "Absolute hop-limit cap for fill probes");
    cmd->add_flag("--fill", f.fill, "Extend ladders past --ttl-max while responses arrive");
    cmd->add_option("--rate", f.rate, "Probes per second");
    cmd->add_option("--proto", f.proto, "icmp6 | tcp-syn | tcp-ack | udp");
    cmd->add_option("--strategy", f.strategy, "random | seq | doubletree");
    cmd->add_option("--key", f.key_hex, "Permutation key, 32 hex digits (random if omitted)");
    cmd->add_option("--instance", f.instance, "Instance ID byte");
    cmd->add_option("--linger-ms", f.linger_ms, "Receiver linger after the send window");
    cmd->add_option("--src", f.source, "Source address override");
    cmd->add_option("--dport", f.dest_port, "Destination port for TCP/UDP probes");
    cmd->add_option("--start-ttl", f.start_ttl, "Doubletree midpoint TTL");
    cmd->add_option("--dt-attempts", f.dt_attempts, "Doubletree probes per silent hop");
    cmd->add_option("--dt-gap", f.dt_gap, "Doubletree forward gap limit");
    cmd->add_option("--dt-timeout-ms", f.dt_timeout_ms, "Doubletree per-probe timeout");
    cmd->add_option("--output,-o", f.output, "Campaign log (JSON lines)");
}

nlohmann::ordered_json flags_to_json(const CampaignFlags& f, const std::string& mode) {
    nlohmann::ordered_json j;
    j["mode"] = mode;
    j["targets"] = f.targets_file;
    j["topo"] = f.topo_file;
    j["ttl_min"] = f.ttl_min;
    j["ttl_max"] = f.ttl_max;
    j["fill_cap"] = f.fill_cap;
    j["fill"] = f.fill;
    j["rate"] = f.rate;
    j["proto"] = f.proto;
    j["strategy"] = f.strategy;
    j["key"] = f.key_hex;
    j["instance"] = f.instance;
    j["linger_ms"] = f.linger_ms;
    j["src"] = f.source;
    j["dport"] = f.dest_port;
    j["start_ttl"] = f.start_ttl;
    j["dt_attempts"] = f.dt_attempts;
    j["dt_gap"] = f.dt_gap;
    j["dt_timeout_ms"] = f.dt_timeout_ms;
    return j;
}

void flags_from_json(const nlohmann::json& j, CampaignFlags& f) {
    f.targets_file = j.value("targets", "");
    f.topo_file = j.value("topo", "");
    f.ttl_min = j.value("ttl_min", 1);
    f.ttl_max = j.value("ttl_max", 16);
    f.fill_cap = j.value("fill_cap", 32);
    f.fill = j.value("fill", false);
    f.rate = j.value("rate", 1000.0);
    f.proto = j.value("proto", "icmp6");
    f.strategy = j.value("strategy", "random");
    f.key_hex = j.value("key", "");
    f.instance = j.value("instance", 0);
    f.linger_ms = j.value("linger_ms", std::uint64_t{10000});
    f.source = j.value("src", "");
    f.dest_port = static_cast<std::uint16_t>(j.value("dport", 80));
    f.start_ttl = j.value("start_ttl", 5);
    f.dt_attempts = j.value("dt_attempts", 2);
    f.dt_gap = j.value("dt_gap", 3);
    f.dt_timeout_ms = j.value("dt_timeout_ms", std::uint64_t{1000});
}

/// Manifest written before execution; a sim manifest reproduces the run
/// bit-identically.
void write_manifest(const std::string& out_path, const std::string& subcommand,
                    nlohmann::ordered_json flags, std::uint64_t epoch_ms,
                    const std::vector<std::string>& input_files) {
    nlohmann::ordered_json m;
    m["tool"] = "sixmap";
    m["version"] = kVersion;
    m["subcommand"] = subcommand;
    m["created_ms"] = wallclock_ms();
    m["epoch_ms"] = epoch_ms;
    m["flags"] = std::move(flags);
    auto& in = m["inputs"] = nlohmann::ordered_json::object();
    for (const std::string& p : input_files)
        if (!p.empty())
            in[p] = hex64(fnv1a_file(p));
    write_file(out_path, m.dump(2) + "\n");
}

CampaignConfig build_config(const CampaignFlags& f, const std::vector<Address>& targets,
                            const Address& source) {
    CampaignConfig cfg;
    cfg.targets = targets;
    cfg.ttl_min = f.ttl_min;
    cfg.ttl_max = f.ttl_max;
    cfg.fill_cap = f.fill_cap;
    cfg.fill = f.fill;
    cfg.rate_pps = f.rate;
    auto proto = parse_protocol(f.proto);
    if (!proto)
        throw ConfigError("unknown protocol \"" + f.proto + "\"");
    cfg.protocol = *proto;
    auto strat = parse_strategy(f.strategy);
    if (!strat)
        throw ConfigError("unknown strategy \"" + f.strategy + "\"");
    cfg.strategy = *strat;
    cfg.endpoint.source = source;
    cfg.endpoint.instance = static_cast<std::uint8_t>(f.instance);
    cfg.endpoint.dest_port = f.dest_port;
    cfg.key = f.key_hex.empty() ? PermutationKey::random() : PermutationKey::from_hex(f.key_hex);
    cfg.linger_ms = f.linger_ms;
    cfg.doubletree.start_ttl = f.start_ttl;
    cfg.doubletree.attempts = f.dt_attempts;
    cfg.doubletree.gap_limit = f.dt_gap;
    cfg.doubletree.probe_timeout_us = f.dt_timeout_ms * 1000;
    return cfg;
}

int cmd_synth(const std::vector<std::string>& seed_files, const std::string& transform_spec,
              const std::string& synthesis_spec, const std::string& output,
              const std::string& bgp_file, const std::string& name) {
    if (transform_spec.size() < 2 || transform_spec[0] != 'z')
        throw ConfigError("transformation must be z<n>, e.g. z48");
    Transformation t{std::stoi(transform_spec.substr(1))};

    SynthesisMethod method = SynthesisMethod::lowbyte1();
    if (synthesis_spec == "lowbyte1") {
        method = SynthesisMethod::lowbyte1();
    } else if (synthesis_spec == "fixediid") {
        method = SynthesisMethod::fixed_iid();
    } else if (synthesis_spec.rfind("fixediid:", 0) == 0) {
        method = SynthesisMethod::fixed_iid(
            std::stoull(synthesis_spec.substr(9), nullptr, 16));
    } else {
        throw ConfigError("synthesis must be lowbyte1, fixediid, or fixediid:<hex16>");
    }

    SeedList combined;
    combined.name = name.empty() ? "combined" : name;
    for (const std::string& file : seed_files) {
        SeedList s = read_seed_file(file);
        combined.entries.insert(combined.entries.end(), s.entries.begin(), s.entries.end());
    }

    std::vector<Prefix> intermediate = transform(combined, t);
    TargetSet targets = synthesize(intermediate, method, combined.name);
    targets.provenance.seed_name = combined.name;
    targets.provenance.transform_n = t.n;
    write_target_file(targets, output);

    std::vector<std::string> inputs = seed_files;
    write_manifest(output + ".manifest.json", "synth",
                   {{"seeds", seed_files},
                    {"transform", transform_spec},
                    {"synthesis", synthesis_spec},
                    {"output", output},
                    {"bgp", bgp_file}},
                   0, inputs);

    nlohmann::ordered_json stats;
    stats["seeds"] = combined.entries.size();
    stats["intermediate_prefixes"] = intermediate.size();
    stats["unique_targets"] = targets.targets.size();
    if (!bgp_file.empty()) {
        BgpTable bgp = BgpTable::load_csv(bgp_file);
        CoverageStats c = coverage_stats(targets, bgp);
        stats["routed_targets"] = c.routed;
        stats["bgp_prefixes"] = c.bgp_prefixes;
        stats["asns"] = c.asns;
        stats["6to4"] = c.six_to_four;
    }
    std::cout << stats.dump(2) << "\n";
    return 0;
}

int run_campaign_cmd(CampaignFlags f, bool sim_mode) {
    if (!f.from_manifest.empty()) {
        std::ifstream in(f.from_manifest);
        if (!in)
            throw IoError("cannot open manifest " + f.from_manifest);
        nlohmann::json m = nlohmann::json::parse(in);
        std::string out_keep = f.output;
        flags_from_json(m.at("flags"), f);
        f.output = out_keep;
        nlohmann::json inputs = m.value("inputs", nlohmann::json::object());
        for (const auto& [path, digest] : inputs.items())
            if (hex64(fnv1a_file(path)) != digest.get<std::string>())
                throw IoError("input " + path + " changed since the manifest was written");
    }
    if (f.key_hex.empty())
        f.key_hex = PermutationKey::random().hex();

    std::vector<Address> targets;
    std::unique_ptr<PacketTransport> transport;
    Address source;
    SimTopology topo;

    bool use_sim = sim_mode || f.transport.rfind("sim:", 0) == 0;
    if (use_sim) {
        if (!sim_mode)
            f.topo_file = f.transport.substr(4);
        if (f.topo_file.empty())
            throw ConfigError("sim mode needs --topo");
        topo = SimTopology::load(f.topo_file);
        transport = std::make_unique<SimTransport>(topo);
        source = f.source.empty() ? topo.vantage : Address::parse(f.source);
        targets = f.targets_file.empty() ? topo.targets : read_target_file(f.targets_file);
        if (targets.empty())
            throw ConfigError("no targets: give --targets or a topology with a target list");
    } else {
        if (f.transport != "raw")
            throw ConfigError("--transport must be raw or sim:<topology.json>");
        if (parse_protocol(f.proto) != Protocol::Icmp6Echo)
            throw ConfigError("the raw transport sends icmp6 probes only");
        if (f.contact_url.empty())
            throw ConfigError(
                "raw probing requires --contact-url so probe sources can reach an "
                "informative page with opt-out instructions");
        if (f.targets_file.empty())
            throw ConfigError("raw probing requires --targets");
        std::cerr << "NOTICE: active campaign; " << f.contact_url
                  << " must describe the measurement and how to opt out.\n";
        targets = read_target_file(f.targets_file);
        if (f.source.empty())
            throw ConfigError("raw probing requires --src (the vantage source address)");
        source = Address::parse(f.source);
        try {
            transport = std::make_unique<RawSocketTransport>();
        } catch (const TransportError& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 4;
        }
    }

    std::uint64_t epoch_ms = use_sim ? 0 : wallclock_ms();
    std::vector<std::string> inputs{f.targets_file};
    if (use_sim)
        inputs.push_back(f.topo_file);
    write_manifest(f.output + ".manifest.json", sim_mode ? "sim" : "probe",
                   flags_to_json(f, use_sim ? "sim" : "raw"), epoch_ms, inputs);

    CampaignConfig cfg = build_config(f, targets, source);
    CampaignLog log;
    {
        CampaignRunner runner(cfg, *transport);
        log = runner.run();
    }
    log.mode = use_sim ? "sim" : "raw";
    log.epoch_ms = epoch_ms;
    if (use_sim) {
        log.extra["topology"] = f.topo_file;
        log.extra["topology_digest"] = hex64(fnv1a_file(f.topo_file));
    }
    if (!f.targets_file.empty())
        log.extra["targets_file"] = f.targets_file;

    std::ofstream out(f.output);
    if (!out)
        throw IoError("cannot write " + f.output);
    write_log(log, out);

    std::cerr << "probes=" << log.probes_total << " responses=" << log.records.size()
              << " fills=" << log.fills_sent << (log.incomplete ? " INCOMPLETE" : "") << "\n";
    return log.incomplete ? 3 : 0;
}

int cmd_analyze(const std::vector<std::string>& log_files, const std::string& bgp_file,
                const std::string& equiv_file, const std::string& truth_file, bool stratified,
                std::uint32_t vantage, const std::string& outdir) {
    if ((stratified || !truth_file.empty() || !equiv_file.empty()) && bgp_file.empty())
        throw ConfigError("subnet discovery needs --bgp");

    fs::create_directories(outdir);
    write_manifest((fs::path(outdir) / "manifest.json").string(), "analyze",
                   {{"logs", log_files},
                    {"bgp", bgp_file},
                    {"equiv", equiv_file},
                    {"truth", truth_file},
                    {"stratified", stratified},
                    {"vantage_asn", vantage}},
                   0, log_files);

    BgpTable bgp;
    if (!bgp_file.empty())
        bgp = BgpTable::load_csv(bgp_file);
    if (!equiv_file.empty())
        bgp.load_equivalence_file(equiv_file);

    std::vector<Trace> all_traces;
    std::vector<Address> all_targets;
    std::uint64_t probes_total = 0;
    std::vector<CandidateSubnet> div_candidates;
    IaHackResult ia_all;
    std::map<int, PerHopRow> perhop;

    for (const std::string& file : log_files) {
        CampaignLog log = read_log_file(file);
        probes_total += log.probes_total;
        std::vector<Trace> traces = reassemble(log);
        for (const Trace& t : traces)
            all_targets.push_back(t.target);
        if (!bgp_file.empty()) {
            // Divergence evidence is per vantage; candidates union across logs.
            auto c = discover_by_path_div(traces, bgp, DivergenceParams{}, vantage);
            div_candidates.insert(div_candidates.end(), c.begin(), c.end());
        }
        IaHackResult ia = ia_hack(traces);
        ia_all.candidates.insert(ia_all.candidates.end(), ia.candidates.begin(),
                                 ia.candidates.end());
        ia_all.reached_lan_targets.insert(ia_all.reached_lan_targets.end(),
                                          ia.reached_lan_targets.begin(),
                                          ia.reached_lan_targets.end());
        for (const PerHopRow& row : per_hop_fractions(log)) {
            perhop[row.ttl].ttl = row.ttl;
            perhop[row.ttl].sent += row.sent;
            perhop[row.ttl].answered += row.answered;
        }
        all_traces.insert(all_traces.end(), traces.begin(), traces.end());
    }

    // Dedup unions.
    std::map<std::pair<Address, int>, CandidateSubnet> dd;
    for (const CandidateSubnet& c : div_candidates)
        dd.emplace(std::make_pair(c.base, c.min_length), c);
    div_candidates.clear();
    for (auto& [_, c] : dd)
        div_candidates.push_back(std::move(c));
    std::map<Address, CandidateSubnet> iad;
    for (const CandidateSubnet& c : ia_all.candidates)
        iad.emplace(c.base, c);
    ia_all.candidates.clear();
    for (auto& [_, c] : iad)
        ia_all.candidates.push_back(std::move(c));

    YieldReport yield = yield_report(all_traces, bgp, probes_total);
    write_file((fs::path(outdir) / "yield.json").string(), yield_report_json(yield) + "\n");

    std::vector<PerHopRow> rows;
    for (auto& [_, r] : perhop)
        rows.push_back(r);
    write_file((fs::path(outdir) / "per_hop.csv").string(), per_hop_csv(rows));

    std::sort(all_targets.begin(), all_targets.end());
    all_targets.erase(std::unique(all_targets.begin(), all_targets.end()), all_targets.end());
    write_file((fs::path(outdir) / "targets_dpl_cdf.csv").string(), dpl_cdf_csv(all_targets));

    std::ostringstream cand;
    cand << "base,min_length,owner,witnesses\n";
    for (const CandidateSubnet& c : div_candidates)
        cand << c.base.str() << "," << c.min_length << "," << c.owner.str() << ","
             << c.diverged_with.size() << "\n";
    write_file((fs::path(outdir) / "candidates.csv").string(), cand.str());
    write_file((fs::path(outdir) / "subnet_lengths.csv").string(),
               subnet_length_csv(div_candidates));

    std::ostringstream ia_csv;
    ia_csv << "base\n";
    for (const CandidateSubnet& c : ia_all.candidates)
        ia_csv << c.base.str() << "/64\n";
    write_file((fs::path(outdir) / "ia_candidates.csv").string(), ia_csv.str());

    nlohmann::ordered_json summary;
    summary["logs"] = log_files.size();
    summary["traces"] = all_traces.size();
    summary["divergence_candidates"] = div_candidates.size();
    summary["ia_candidates"] = ia_all.candidates.size();
    summary["ia_reached_lan_traces"] = ia_all.reached_lan_targets.size();

    if (!truth_file.empty()) {
        std::vector<Prefix> truth = read_prefix_file(truth_file);
        ValidationReport v = validate_subnets(div_candidates, truth);
        write_file((fs::path(outdir) / "validation.json").string(),
                   validation_report_json(v) + "\n");
        if (stratified) {
            StratifiedResult s =
                stratified_rerun(all_traces, truth, bgp, DivergenceParams{}, vantage);
            write_file((fs::path(outdir) / "stratified_validation.json").string(),
                       validation_report_json(s.report) + "\n");
            summary["stratified_sampled_traces"] = s.sampled_traces;
            summary["stratified_candidates"] = s.candidates.size();
        }
    }
    write_file((fs::path(outdir) / "summary.json").string(), summary.dump(2) + "\n");
    std::cout << summary.dump(2) << "\n";
    return 0;
}

int cmd_matrix(const std::string& topo_file, const std::string& targets_file,
               const std::string& strategies_spec, const std::string& rates_spec,
               const CampaignFlags& f, const std::string& output) {
    SimTopology topo = SimTopology::load(topo_file);
    std::vector<Strategy> strategies;
    {
        std::stringstream ss(strategies_spec);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            auto s = parse_strategy(tok);
            if (!s)
                throw ConfigError("unknown strategy \"" + tok + "\"");
            strategies.push_back(*s);
        }
    }
    std::vector<double> rates;
    {
        std::stringstream ss(rates_spec);
        std::string tok;
        while (std::getline(ss, tok, ','))
            rates.push_back(std::stod(tok));
    }
    if (strategies.empty() || rates.empty())
        throw ConfigError("matrix needs at least one strategy and one rate");

    std::vector<Address> targets =
        targets_file.empty() ? topo.targets : read_target_file(targets_file);
    CampaignConfig base = build_config(f, targets, topo.vantage);

    write_manifest(output + ".manifest.json", "matrix",
                   {{"topo", topo_file},
                    {"targets", targets_file},
                    {"strategies", strategies_spec},
                    {"rates", rates_spec},
                    {"ttl_min", f.ttl_min},
                    {"ttl_max", f.ttl_max},
                    {"key", base.key.hex()}},
                   0, {topo_file, targets_file});

    auto rows = run_strategy_matrix(topo, strategies, rates, base);
    write_file(output, matrix_to_csv(rows));
    std::cerr << "wrote " << rows.size() << " rows to " << output << "\n";
    return 0;
}

int cmd_gentopo(TopologyParams params, const std::string& fanouts_spec, const std::string& gateway,
                const std::string& dest, const std::string& out, const std::string& bgp_out,
                const std::string& truth_out, const std::string& targets_out) {
    if (!fanouts_spec.empty()) {
        params.split_fanouts.clear();
        std::stringstream ss(fanouts_spec);
        std::string tok;
        while (std::getline(ss, tok, ','))
            params.split_fanouts.push_back(std::stoi(tok));
    }
    if (gateway == "lowbyte")
        params.gateway = GatewayStyle::LowByte1;
    else if (gateway == "eui64")
        params.gateway = GatewayStyle::Eui64;
    else
        throw ConfigError("--gateway must be lowbyte or eui64");
    if (dest == "silent")
        params.dest_behavior = DestBehavior::Silent;
    else if (dest == "echo")
        params.dest_behavior = DestBehavior::EchoReply;
    else if (dest == "unreachable")
        params.dest_behavior = DestBehavior::Unreachable;
    else
        throw ConfigError("--dest must be silent, echo, or unreachable");

    SimTopology topo = generate_topology(params);
    topo.save(out);
    if (!bgp_out.empty()) {
        std::ostringstream os;
        for (const auto& [prefix, asn] : topology_bgp_rows(params))
            os << prefix.str() << "," << asn << "\n";
        write_file(bgp_out, os.str());
    }
    if (!truth_out.empty()) {
        std::ostringstream os;
        for (const Prefix& p : topo.ground_truth_subnets)
            os << p.str() << "\n";
        write_file(truth_out, os.str());
    }
    if (!targets_out.empty()) {
        std::ostringstream os;
        for (const Address& a : topo.targets)
            os << a.str() << "\n";
        write_file(targets_out, os.str());
    }
    std::cerr << "interfaces=" << topo.interfaces.size() << " targets=" << topo.targets.size()
              << " truth_subnets=" << topo.ground_truth_subnets.size() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"IPv6 topology discovery toolkit: target synthesis, randomized "
                 "stateless probing, simulation, and trace analysis"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.footer(
        "File formats:\n"
        "  seed file      one IPv6 address or prefix per line; '#' comments\n"
        "  target file    one canonical address per line, sorted, unique\n"
        "  BGP table      CSV rows 'prefix,asn'\n"
        "  equivalence    one whitespace-separated ASN group per line\n"
        "  truth subnets  one prefix per line\n"
        "  topology       JSON: schema, vantage, per_hop_delay_ms, interfaces\n"
        "                 (addr/rate/burst), paths, default_path, destinations\n"
        "                 (echo|silent|unreachable), ground_truth_subnets, targets\n"
        "  campaign log   JSON lines: metadata header, then one object per decoded\n"
        "                 response {target, responder, sent_ttl, rtt_ms, icmp_type,\n"
        "                 icmp_code, fill, checksum_ok}, then a counters trailer\n"
        "  manifest       JSON written before each run; 'sim --from-manifest' re-runs\n"
        "                 a campaign bit-identically\n"
        "Exit codes: 0 ok, 2 config error, 3 I/O error, 4 privilege error.");

    // synth
    auto* synth = app.add_subcommand("synth", "Seed -> intermediate prefixes -> targets");
    std::vector<std::string> seed_files;
    std::string transform_spec = "z64", synthesis_spec = "fixediid";
    std::string synth_out = "targets.txt", synth_bgp, synth_name;
    synth->add_option("--seeds", seed_files, "Seed files (addresses or prefixes per line)")
        ->required();
    synth->add_option("--transform", transform_spec, "z<n> prefix transformation");
    synth->add_option("--synthesis", synthesis_spec, "lowbyte1 | fixediid | fixediid:<hex16>");
    synth->add_option("--output,-o", synth_out, "Target file");
    synth->add_option("--bgp", synth_bgp, "BGP table CSV for coverage stats");
    synth->add_option("--name", synth_name, "Set name for provenance");

    // sim
    auto* sim = app.add_subcommand("sim", "Run a campaign against a simulated topology");
    CampaignFlags simf;
    simf.output = "sim.jsonl";
    sim->add_option("--topo", simf.topo_file, "Topology JSON");
    sim->add_option("--from-manifest", simf.from_manifest, "Reproduce a previous sim run");
    add_campaign_flags(sim, simf, true);

    // probe
    auto* probe = app.add_subcommand("probe", "Run a live (or sim-backed) campaign");
    CampaignFlags probef;
    probe->add_option("--transport", probef.transport, "raw | sim:<topology.json>");
    probe->add_option("--contact-url", probef.contact_url,
                      "URL describing the campaign and opt-out (required for raw)");
    add_campaign_flags(probe, probef, false);

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Reassemble logs and report");
    std::vector<std::string> log_files;
    std::string an_bgp, an_equiv, an_truth, an_outdir = "reports";
    bool an_stratified = false;
    std::uint32_t an_vantage = 64500;
    analyze->add_option("--log", log_files, "Campaign logs (JSONL)")->required();
    analyze->add_option("--bgp", an_bgp, "BGP table CSV (enables subnet discovery)");
    analyze->add_option("--equiv", an_equiv, "ASN equivalence groups, one per line");
    analyze->add_option("--truth", an_truth, "Ground-truth subnets, one prefix per line");
    analyze->add_flag("--stratified", an_stratified,
                      "Re-run discovery on one trace per truth subnet");
    analyze->add_option("--vantage-asn", an_vantage, "ASN of the probing vantage");
    analyze->add_option("--outdir", an_outdir, "Report directory");

    // matrix
    auto* matrix = app.add_subcommand(
        "matrix", "Per-hop response fractions across strategies and rates (simulated)");
    CampaignFlags mf;
    std::string m_topo, m_targets, m_strategies = "random,seq", m_rates = "20,1000";
    std::string m_out = "matrix.csv";
    matrix->add_option("--topo", m_topo, "Topology JSON")->required();
    matrix->add_option("--targets", m_targets, "Target file (defaults to the topology's list)");
    matrix->add_option("--strategies", m_strategies, "Comma-separated strategies");
    matrix->add_option("--rates", m_rates, "Comma-separated probe rates (pps)");
    matrix->add_option("--ttl-min", mf.ttl_min, "Lowest probed hop limit");
    matrix->add_option("--ttl-max", mf.ttl_max, "Initial maximum hop limit");
    matrix->add_option("--key", mf.key_hex, "Permutation key, 32 hex digits");
    matrix->add_option("--linger-ms", mf.linger_ms, "Receiver linger after the send window");
    matrix->add_option("--start-ttl", mf.start_ttl, "Doubletree midpoint TTL");
    matrix->add_option("--dt-attempts", mf.dt_attempts, "Doubletree probes per silent hop");
    matrix->add_option("--output,-o", m_out, "CSV output");

    // gentopo
    auto* gen = app.add_subcommand("gentopo", "Generate a synthetic topology");
    TopologyParams gp;
    std::string gen_fanouts, gen_gateway = "lowbyte", gen_dest = "silent";
    std::string gen_out = "topo.json", gen_bgp, gen_truth, gen_targets;
    gen->add_option("--seed", gp.seed, "Generator seed");
    gen->add_option("--ases", gp.as_count, "Autonomous systems");
    gen->add_option("--access-depth", gp.access_depth, "Shared hops near the vantage");
    gen->add_option("--core-depth", gp.core_depth, "Per-AS hops before the first split");
    gen->add_option("--fanouts", gen_fanouts, "Split fanouts per level, e.g. 4,2");
    gen->add_option("--leaves", gp.leaves_per_subnet, "Leaf /64s per deepest subnet");
    gen->add_option("--targets-per-leaf", gp.targets_per_leaf, "Targets per leaf LAN");
    gen->add_option("--gateway", gen_gateway, "lowbyte | eui64 leaf gateway style");
    gen->add_option("--if-rate", gp.if_rate, "Token bucket refill rate (tokens/s)");
    gen->add_option("--if-burst", gp.if_burst, "Token bucket capacity");
    gen->add_option("--delay", gp.per_hop_delay_ms, "Per-hop one-way delay (ms)");
    gen->add_option("--dest", gen_dest, "silent | echo | unreachable destinations");
    gen->add_option("--out,-o", gen_out, "Topology JSON output");
    gen->add_option("--bgp-out", gen_bgp, "Write the matching BGP table CSV");
    gen->add_option("--truth-out", gen_truth, "Write ground-truth subnets");
    gen->add_option("--targets-out", gen_targets, "Write the target list");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed())
            return cmd_synth(seed_files, transform_spec, synthesis_spec, synth_out, synth_bgp,
                             synth_name);
        if (sim->parsed())
            return run_campaign_cmd(simf, true);
        if (probe->parsed())
            return run_campaign_cmd(probef, false);
        if (analyze->parsed())
            return cmd_analyze(log_files, an_bgp, an_equiv, an_truth, an_stratified, an_vantage,
                               an_outdir);
        if (matrix->parsed())
            return cmd_matrix(m_topo, m_targets, m_strategies, m_rates, mf, m_out);
        if (gen->parsed())
            return cmd_gentopo(gp, gen_fanouts, gen_gateway, gen_dest, gen_out, gen_bgp,
                               gen_truth, gen_targets);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const AddressParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
