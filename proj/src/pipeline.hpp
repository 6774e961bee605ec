#pragma once

#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "coupling.hpp"
#include "ingest.hpp"
#include "rows.hpp"

namespace leadlag {

enum class RunStatus { Complete, Partial };

struct StageOptions {
    std::string run_id = "default";
    bool resume = false;
    // Stop after completing this many new units this invocation (interruption
    // hook for resume testing); negative = unlimited.
    long max_units = -1;
};

// Stage-2 analysis of one oriented pair at one granularity: CCF, optimal lag,
// Granger both ways, Eq.7/Eq.8 regressions. Failures become skip rows.
Stage2Row analyze_pair(const ReturnSeries& a, const ReturnSeries& b,
                       const ReturnSeries& market, const PipelineConfig& cfg);

// Equal-weighted mean return over all series sharing a timestamp.
ReturnSeries equal_weight_market(const std::vector<ReturnSeries>& universe,
                                 Granularity granularity);

RunStatus run_stage1(const PipelineConfig& cfg, const StageOptions& opts);
RunStatus run_stage2(const PipelineConfig& cfg, const StageOptions& opts);

// ranking.csv, cascades.csv, granularity_summary.csv, industry.csv (when an
// industry map is configured). Requires a completed stage 2.
void write_reports(const PipelineConfig& cfg, const std::string& run_id);

struct PlotSelection {
    std::size_t top_n = 10;
    std::optional<std::pair<std::string, std::string>> pair; // leader, follower
    std::optional<Granularity> granularity;
};

// Four data files per selected pair: ccf, prices, scatter, rolling.
std::vector<std::string> emit_plots(const PipelineConfig& cfg,
                                    const std::string& run_id,
                                    const PlotSelection& selection);

// JSON summary for `ingest --validate`.
std::string ingest_report_json(const PipelineConfig& cfg, Granularity granularity);

std::string run_directory(const PipelineConfig& cfg, const std::string& run_id);

} // namespace leadlag
