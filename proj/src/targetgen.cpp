#include "sixmap/targetgen.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_set>

namespace sixmap {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

}  // namespace

SeedList read_seed_file(const std::string& path, const std::string& name) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open seed file " + path);
    SeedList out;
    out.name = name.empty() ? path : name;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        std::string_view s = trim(line);
        std::size_t hash = s.find('#');
        if (hash != std::string_view::npos)
            s = trim(s.substr(0, hash));
        if (s.empty())
            continue;
        try {
            if (s.find('/') != std::string_view::npos)
                out.entries.push_back(Prefix::parse(s));
            else
                out.entries.push_back(Prefix::of(Address::parse(s), 128));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (out.entries.empty())
        throw std::runtime_error("seed file " + path + " has no entries");
    return out;
}

std::vector<Prefix> transform(const SeedList& seeds, Transformation t) {
    if (t.n < 1 || t.n > 64)
        throw std::invalid_argument("zn transformation needs n in [1,64]");
    std::set<Prefix> out;
    for (const Prefix& p : seeds.entries)
        out.insert(Prefix::of(p.base, t.n));  // extend or truncate to /n
    return {out.begin(), out.end()};
}

SynthesisMethod SynthesisMethod::fixed_iid(std::uint64_t iid) {
    return {iid, "fixediid"};
}

TargetSet synthesize(const std::vector<Prefix>& prefixes, const SynthesisMethod& m,
                     const std::string& name) {
    TargetSet out;
    out.name = name;
    out.provenance.synthesis = m.name;
    out.targets.reserve(prefixes.size());
    for (const Prefix& p : prefixes) {
        if (p.length > 64)
            throw std::invalid_argument("cannot synthesize IID into " + p.str() +
                                        ": prefix longer than 64 bits");
        out.targets.push_back(Address{p.base.hi, p.base.lo | m.iid});
    }
    std::sort(out.targets.begin(), out.targets.end());
    out.targets.erase(std::unique(out.targets.begin(), out.targets.end()), out.targets.end());
    return out;
}

SetAlgebra set_algebra(const TargetSet& a, const TargetSet& b) {
    SetAlgebra r;
    std::set_difference(a.targets.begin(), a.targets.end(), b.targets.begin(), b.targets.end(),
                        std::back_inserter(r.unique_to_a));
    std::set_difference(b.targets.begin(), b.targets.end(), a.targets.begin(), a.targets.end(),
                        std::back_inserter(r.unique_to_b));
    std::set_intersection(a.targets.begin(), a.targets.end(), b.targets.begin(), b.targets.end(),
                          std::back_inserter(r.shared));
    return r;
}

CoverageStats coverage_stats(const TargetSet& t, const BgpTable& bgp) {
    static const Prefix six_to_four = Prefix::parse("2002::/16");
    CoverageStats s;
    s.total = t.targets.size();
    std::unordered_set<Prefix, PrefixHash> prefixes;
    std::unordered_set<std::uint32_t> asns;
    for (const Address& a : t.targets) {
        if (auto m = bgp.lookup(a)) {
            s.routed++;
            prefixes.insert(m->prefix);
            asns.insert(m->asn);
        }
        if (six_to_four.contains(a))
            s.six_to_four++;
    }
    s.bgp_prefixes = prefixes.size();
    s.asns = asns.size();
    return s;
}

void write_target_file(const TargetSet& t, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write target file " + path);
    for (const Address& a : t.targets)
        out << a.str() << "\n";
    if (!out)
        throw std::runtime_error("write failed for target file " + path);
}

std::vector<Address> read_target_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open target file " + path);
    std::vector<Address> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        std::string_view s = trim(line);
        if (s.empty() || s.front() == '#')
            continue;
        try {
            out.push_back(Address::parse(s));
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace sixmap
