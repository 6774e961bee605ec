#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "series.hpp"

namespace leadlag {

// One Stage-2 analysis result: pair oriented so the leader comes first and
// the lag is non-negative. NaN fields render as empty CSV cells.
struct Stage2Row {
    std::string leader;
    std::string follower;
    Granularity granularity = Granularity::Min1;
    int lag_bars = 0;
    double ccf_value = std::numeric_limits<double>::quiet_NaN();
    bool ccf_significant = false;
    double granger_p = std::numeric_limits<double>::quiet_NaN();         // leader -> follower
    double granger_p_reverse = std::numeric_limits<double>::quiet_NaN(); // follower -> leader
    std::size_t granger_order = 0;
    bool direction_confirmed = false;
    double alpha = std::numeric_limits<double>::quiet_NaN();
    double beta = std::numeric_limits<double>::quiet_NaN();
    double r_squared = std::numeric_limits<double>::quiet_NaN();
    double beta_t_pvalue = std::numeric_limits<double>::quiet_NaN();
    double beta_ext = std::numeric_limits<double>::quiet_NaN();
    double gamma_market = std::numeric_limits<double>::quiet_NaN();
    double delta_autoreg = std::numeric_limits<double>::quiet_NaN();
    double r_squared_ext = std::numeric_limits<double>::quiet_NaN();
    std::size_t n = 0;
    double bonferroni_threshold = std::numeric_limits<double>::quiet_NaN();
    std::size_t rank = 0;
    std::string dropped_controls; // ';'-joined names of dropped Eq.8 columns
    std::string skip_reason;

    std::string lag_wallclock() const { return format_lag(lag_bars, granularity); }
};

extern const char* const kStage1CsvHeader;
extern const char* const kStage2CsvHeader;
extern const char* const kRankingCsvHeader;

std::string stage2_csv_row(const Stage2Row& row);
Stage2Row stage2_row_from_csv(const std::vector<std::string>& fields);

// Ranking order: Granger p ascending (absent last), then |CCF| descending,
// then granularity, leader, follower for total determinism. Assigns dense
// ranks starting at 1.
void sort_and_rank_rows(std::vector<Stage2Row>& rows);

} // namespace leadlag
