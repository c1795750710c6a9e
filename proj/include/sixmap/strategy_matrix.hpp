#pragma once

#include <string>
#include <vector>

#include "sixmap/engine.hpp"
#include "sixmap/netsim.hpp"

namespace sixmap {

struct MatrixRow {
    std::string strategy;
    double rate_pps = 0.0;
    int ttl = 0;
    std::uint64_t sent = 0;
    std::uint64_t answered = 0;
};

/// Runs a fresh campaign per (strategy, rate) against copies of the topology
/// and tabulates the per-TTL response fractions.
std::vector<MatrixRow> run_strategy_matrix(const SimTopology& topo,
                                           const std::vector<Strategy>& strategies,
                                           const std::vector<double>& rates,
                                           const CampaignConfig& base);

std::string matrix_to_csv(const std::vector<MatrixRow>& rows);

}  // namespace sixmap
