#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "series.hpp"

namespace leadlag {

struct UniverseFilters {
    std::int64_t min_listing_epoch_day = 0; // first bar must be on/before this day
    std::size_t max_halt_run = 20;          // trading days, on the union calendar
};

struct Exclusion {
    std::string symbol;
    std::string reason; // malformed | too_short | listed_after_cutoff | halt_run
    std::string detail;
};

struct Diagnostic {
    std::string file;
    std::size_t line = 0;
    std::string message;
};

struct IngestResult {
    std::vector<BarSeries> series;     // sorted by symbol
    std::vector<Exclusion> exclusions; // sorted by symbol
    std::vector<Diagnostic> diagnostics;
    std::vector<std::string> warnings;
};

// Reads every data_<granularity>_fixed/<symbol>.csv under root. Malformed
// rows are reported per file (file skipped, batch continues); the universe
// filters then exclude late listings and symbols with a calendar gap longer
// than max_halt_run trading days, trading days being the union of observed
// dates across all parsed symbols. Every symbol lands in exactly one of
// series or exclusions.
IngestResult ingest(const std::string& root, Granularity granularity,
                    const UniverseFilters& filters);

} // namespace leadlag
