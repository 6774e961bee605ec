#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "coupling.hpp"
#include "series.hpp"

namespace leadlag {

enum class MarketMode { EqualWeight, IndexFile };

// Every run parameter lives here; nothing is hardcoded downstream. The file
// format is a small INI/TOML subset: [section] headers, key = value lines,
// values are quoted strings, numbers, booleans, or [..] arrays. Unknown keys
// are rejected so typos cannot silently fall back to defaults.
struct PipelineConfig {
    // [data]
    std::string data_root;
    std::vector<Granularity> granularities = {Granularity::Daily, Granularity::Min1};
    ReturnKind return_kind = ReturnKind::Log;
    bool drop_session_boundary = false;
    std::size_t min_obs_intraday = 100;
    std::size_t min_obs_daily = 60;

    // [universe]
    std::string min_listing_date = "2019-01-01";
    std::size_t max_halt_run = 20;
    std::string industry_map; // optional CSV path (symbol,industry)

    // [coupling]
    CouplingWeights weights;
    double coupling_threshold = 0.6;
    double dtw_band_fraction = 0.10; // 0 disables banding

    // [lag]
    std::size_t max_lag_1min = 30;
    std::size_t max_lag_5min = 12;
    std::size_t max_lag_15min = 8;
    std::size_t max_lag_daily = 10;
    std::size_t granger_max_order = 5;
    double significance = 0.05;
    MarketMode market_mode = MarketMode::EqualWeight;
    std::string market_index_path;
    std::size_t rolling_window = 50;

    // [run]
    std::string output_dir = "out";
    std::size_t workers = 0; // 0 = hardware concurrency
    std::size_t checkpoint_batch = 64;

    std::size_t max_lag_for(Granularity g) const;
    std::size_t min_obs_for(Granularity g) const;
    std::int64_t min_listing_epoch_day() const;

    // Full canonical rendering (every key present, fixed order); reloading it
    // reproduces this config exactly.
    std::string canonical_text() const;
    std::string digest() const; // fnv1a64 of canonical_text, hex

    void validate() const; // DomainError names the offending key path
};

PipelineConfig load_config(const std::string& path);
PipelineConfig parse_config(const std::string& text, const std::string& source);

} // namespace leadlag
