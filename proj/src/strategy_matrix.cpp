#include <sstream>

#include "sixmap/engine.hpp"
#include "sixmap/netsim.hpp"
#include "sixmap/strategy_matrix.hpp"

namespace sixmap {

std::vector<MatrixRow> run_strategy_matrix(const SimTopology& topo,
                                           const std::vector<Strategy>& strategies,
                                           const std::vector<double>& rates,
                                           const CampaignConfig& base) {
    std::vector<MatrixRow> rows;
    for (Strategy strategy : strategies) {
        for (double rate : rates) {
            CampaignConfig cfg = base;
            cfg.strategy = strategy;
            cfg.rate_pps = rate;
            if (cfg.targets.empty())
                cfg.targets = topo.targets;
            if (cfg.endpoint.source == Address{})
                cfg.endpoint.source = topo.vantage;
            SimTransport transport(topo);  // fresh buckets per run
            CampaignLog log = run_campaign(cfg, transport);
            std::map<int, std::uint64_t> answered;
            for (const ResponseRecord& r : log.records)
                answered[r.sent_ttl]++;
            for (const auto& [ttl, sent] : log.sent_per_ttl)
                rows.push_back(MatrixRow{std::string(to_string(strategy)), rate, ttl, sent,
                                         answered.count(ttl) ? answered.at(ttl) : 0});
        }
    }
    return rows;
}

std::string matrix_to_csv(const std::vector<MatrixRow>& rows) {
    std::ostringstream os;
    os << "strategy,rate_pps,ttl,sent,answered,fraction\n";
    for (const MatrixRow& r : rows) {
        double f = r.sent ? static_cast<double>(r.answered) / static_cast<double>(r.sent) : 0.0;
        os << r.strategy << "," << r.rate_pps << "," << r.ttl << "," << r.sent << ","
           << r.answered << "," << f << "\n";
    }
    return os.str();
}

}  // namespace sixmap
