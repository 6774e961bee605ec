#pragma once

#include <string>
#include <vector>

#include "rows.hpp"

namespace leadlag {

struct CascadeChain {
    std::vector<std::string> symbols; // length = edges + 1
    std::vector<int> lags;            // per-edge lags, bars
    int cumulative_lag = 0;

    std::string path_string() const; // "A->B->C"
};

struct CascadeReport {
    std::vector<CascadeChain> chains; // maximal simple paths, >= 2 edges
    bool cycle_detected = false;
    std::vector<std::string> cycle_edges; // "A->B" participating in cycles
};

// Chains of confirmed leader->follower edges within one granularity.
// Ordering: path length descending, cumulative lag ascending, lexicographic.
CascadeReport detect_cascades(const std::vector<Stage2Row>& rows);

struct IndustryRow {
    std::string label; // "Within X" or "A -> B"
    bool within = false;
    std::size_t frequency = 0;
    double mean_abs_ccf = 0.0;
};

// Table-3-shaped aggregation of confirmed relationships by (leader industry,
// follower industry). Symbols missing from the map fall into "Unknown" with
// a warning.
std::vector<IndustryRow> industry_report(const std::vector<Stage2Row>& rows,
                                         const std::string& map_path,
                                         std::vector<std::string>& warnings);

// Ranking CSV content in Table-2 column order; rows must already be ranked.
std::string ranking_csv(const std::vector<Stage2Row>& rows);

// Qualitative per-granularity comparison counts.
std::string granularity_summary_csv(const std::vector<Stage2Row>& rows);

} // namespace leadlag
