#include "sixmap/bgp.hpp"

#include <fstream>
#include <sstream>

namespace sixmap {

void BgpTable::add(const Prefix& p, std::uint32_t asn) {
    auto [it, inserted] = by_length_[p.length].emplace(p.base, asn);
    if (inserted)
        count_++;
    else
        it->second = asn;
    parent_.emplace(asn, asn);
}

void BgpTable::add_equivalence(const std::vector<std::uint32_t>& group) {
    if (group.empty())
        return;
    for (std::uint32_t a : group)
        parent_.emplace(a, a);
    std::uint32_t root = find_root(group.front());
    for (std::uint32_t a : group)
        parent_[find_root(a)] = root;
}

std::uint32_t BgpTable::find_root(std::uint32_t asn) const {
    auto it = parent_.find(asn);
    if (it == parent_.end())
        return asn;
    std::uint32_t r = asn;
    while (parent_.at(r) != r)
        r = parent_.at(r);
    // path compression
    while (parent_.at(asn) != r) {
        std::uint32_t next = parent_.at(asn);
        parent_[asn] = r;
        asn = next;
    }
    return r;
}

std::optional<BgpMatch> BgpTable::lookup(const Address& a) const {
    for (const auto& [len, table] : by_length_) {
        auto it = table.find(masked(a, len));
        if (it != table.end())
            return BgpMatch{Prefix{it->first, len}, it->second};
    }
    return std::nullopt;
}

std::optional<std::uint32_t> BgpTable::origin_asn(const Address& a) const {
    auto m = lookup(a);
    if (!m)
        return std::nullopt;
    return m->asn;
}

std::uint32_t BgpTable::resolve(std::uint32_t asn) const {
    return find_root(asn);
}

bool BgpTable::same_asn(std::optional<std::uint32_t> a, std::optional<std::uint32_t> b) const {
    if (!a || !b)
        return false;
    return resolve(*a) == resolve(*b);
}

BgpTable BgpTable::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open BGP table " + path);
    BgpTable t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        lineno++;
        if (line.empty() || line[0] == '#')
            continue;
        std::size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": expected \"prefix,asn\"");
        try {
            Prefix p = Prefix::parse(line.substr(0, comma));
            std::uint32_t asn = static_cast<std::uint32_t>(std::stoul(line.substr(comma + 1)));
            t.add(p, asn);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return t;
}

void BgpTable::load_equivalence_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open equivalence file " + path);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        std::istringstream ss(line);
        std::vector<std::uint32_t> group;
        std::uint32_t asn;
        while (ss >> asn)
            group.push_back(asn);
        add_equivalence(group);
    }
}

}  // namespace sixmap
