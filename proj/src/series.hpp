#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "error.hpp"

namespace leadlag {

enum class Granularity { Min1, Min5, Min15, Daily };

// Bar spacing in seconds; Daily advances by one calendar day on the grid.
int bar_seconds(Granularity g);
const char* granularity_label(Granularity g);     // "1min", "5min", "15min", "daily"
Granularity granularity_from_label(const std::string& label);
int bars_per_day(Granularity g);

// Wall-clock rendering of a bar count, Table-2 style: 3 bars at 5min -> "15m",
// 2 bars at daily -> "2d".
std::string format_lag(int lag_bars, Granularity g);

struct Bar {
    std::int64_t timestamp = 0; // epoch seconds, exchange-local wall time
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    std::int64_t volume = 0;
};

struct BarSeries {
    std::string symbol;
    Granularity granularity = Granularity::Daily;
    std::vector<Bar> bars;

    // Throws Error on any invariant violation (OHLC consistency, ordering,
    // positivity); `where` names the source for diagnostics.
    void validate(const std::string& where) const;
};

enum class ReturnKind { Log, Simple };

struct ReturnSeries {
    std::string symbol;
    Granularity granularity = Granularity::Daily;
    std::vector<std::int64_t> timestamps;
    std::vector<double> values;
    ReturnKind kind = ReturnKind::Log;

    std::size_t size() const { return values.size(); }
};

struct AlignedPair {
    ReturnSeries a;
    ReturnSeries b;
    std::size_t n = 0;
};

struct SummaryStats {
    std::size_t n = 0;
    double mean = 0.0;
    double std_dev = 0.0;
    double skewness = 0.0;
    double kurtosis = 0.0; // non-excess: a normal sample sits near 3
    double autocorr_lag1 = 0.0;
};

// Per-bar returns from closes. Output starts at the second bar's timestamp.
// When drop_session_boundary is set, intraday returns spanning a gap larger
// than one bar interval (overnight, lunch) are removed; daily series are
// unaffected since calendar gaps are the norm there.
ReturnSeries compute_returns(const BarSeries& series, ReturnKind kind,
                             bool drop_session_boundary = false);

// Restrict both series to the sorted intersection of their timestamps.
AlignedPair align(const ReturnSeries& a, const ReturnSeries& b,
                  std::size_t min_obs);

SummaryStats summary_stats(const ReturnSeries& r);

// Trailing-window Pearson correlation; NaN marks windows where either side
// has zero variance.
std::vector<std::pair<std::int64_t, double>>
rolling_correlation(const AlignedPair& pair, std::size_t window);

ReturnSeries zscore_normalize(const ReturnSeries& r);

// Aggregate bars to a coarser granularity (first open, max high, min low,
// last close, summed volume). Buckets are closed at ceil(ts / bucket) on the
// intraday grid and at calendar-day ends for Daily.
BarSeries resample(const BarSeries& series, Granularity target);

// Shared helpers used across modules.
double mean_of(const std::vector<double>& v);
double sample_std(const std::vector<double>& v); // n-1 denominator
double pearson_raw(const double* a, const double* b, std::size_t n);

} // namespace leadlag
