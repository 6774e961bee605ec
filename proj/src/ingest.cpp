#include "ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "csv.hpp"
#include "timeutil.hpp"

namespace leadlag {

namespace {

bool parse_price(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
}

bool parse_volume(const std::string& s, std::int64_t& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtoll(s.c_str(), &end, 10);
    return end == s.c_str() + s.size();
}

// Returns empty optional and fills diag on the first bad row.
bool parse_bar_file(const std::string& path, const std::string& symbol,
                    Granularity granularity, BarSeries& out, Diagnostic& diag) {
    std::string text;
    if (!read_file(path, text)) {
        diag = {path, 0, "cannot open file"};
        return false;
    }
    out.symbol = symbol;
    out.granularity = granularity;
    out.bars.clear();
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::int64_t prev_ts = std::numeric_limits<std::int64_t>::min();
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1) {
            if (line != "timestamp,open,high,low,close,volume") {
                diag = {path, 1, "bad header '" + line + "'"};
                return false;
            }
            continue;
        }
        std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != 6) {
            diag = {path, line_no, "expected 6 fields, got " + std::to_string(fields.size())};
            return false;
        }
        Bar bar;
        try {
            bar.timestamp = parse_iso8601(fields[0]);
        } catch (const Error& e) {
            diag = {path, line_no, e.what()};
            return false;
        }
        if (!parse_price(fields[1], bar.open) || !parse_price(fields[2], bar.high) ||
            !parse_price(fields[3], bar.low) || !parse_price(fields[4], bar.close)) {
            diag = {path, line_no, "unparseable price field"};
            return false;
        }
        if (!parse_volume(fields[5], bar.volume)) {
            diag = {path, line_no, "unparseable volume field"};
            return false;
        }
        if (bar.timestamp <= prev_ts) {
            diag = {path, line_no, "timestamps not strictly increasing"};
            return false;
        }
        if (!(bar.open > 0) || !(bar.high > 0) || !(bar.low > 0) || !(bar.close > 0)) {
            diag = {path, line_no, "non-positive price"};
            return false;
        }
        if (bar.low > std::min(bar.open, bar.close) ||
            bar.high < std::max(bar.open, bar.close)) {
            diag = {path, line_no, "OHLC range violated (low/high inconsistent)"};
            return false;
        }
        if (bar.volume < 0) {
            diag = {path, line_no, "negative volume"};
            return false;
        }
        prev_ts = bar.timestamp;
        out.bars.push_back(bar);
    }
    return true;
}

} // namespace

IngestResult ingest(const std::string& root, Granularity granularity,
                    const UniverseFilters& filters) {
    namespace fs = std::filesystem;
    fs::path dir = fs::path(root) / (std::string("data_") +
                                     granularity_label(granularity) + "_fixed");
    if (!fs::is_directory(dir))
        raise(Errc::MissingDirectory, dir.string() + " does not exist");

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".csv")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    IngestResult result;
    if (files.empty())
        result.warnings.push_back("no CSV files under " + dir.string() +
                                  "; universe is empty");

    std::vector<BarSeries> parsed;
    for (const fs::path& file : files) {
        std::string symbol = file.stem().string();
        BarSeries series;
        Diagnostic diag;
        if (!parse_bar_file(file.string(), symbol, granularity, series, diag)) {
            result.diagnostics.push_back(diag);
            result.exclusions.push_back(
                {symbol, "malformed",
                 diag.file + ":" + std::to_string(diag.line) + ": " + diag.message});
            continue;
        }
        if (series.bars.size() < 2) {
            result.exclusions.push_back(
                {symbol, "too_short",
                 std::to_string(series.bars.size()) + " bars; need at least 2"});
            continue;
        }
        parsed.push_back(std::move(series));
    }

    // Union trading calendar over everything that parsed; halt runs are
    // measured in positions on this calendar.
    std::set<std::int64_t> calendar_set;
    for (const BarSeries& s : parsed)
        for (const Bar& b : s.bars) calendar_set.insert(epoch_day(b.timestamp));
    std::map<std::int64_t, std::size_t> day_index;
    {
        std::size_t i = 0;
        for (std::int64_t d : calendar_set) day_index[d] = i++;
    }

    // The listing filter proxies a symbol's listing date by its first bar.
    // Symbols present on the sample's first observed trading day are never
    // "late", even when that day falls after the configured cutoff (the
    // cutoff may be a holiday).
    std::int64_t effective_cutoff = filters.min_listing_epoch_day;
    if (!calendar_set.empty())
        effective_cutoff = std::max(effective_cutoff, *calendar_set.begin());

    for (BarSeries& s : parsed) {
        std::int64_t first_day = epoch_day(s.bars.front().timestamp);
        if (first_day > effective_cutoff) {
            result.exclusions.push_back(
                {s.symbol, "listed_after_cutoff",
                 "first bar " + format_iso_date(s.bars.front().timestamp)});
            continue;
        }
        std::size_t worst_gap = 0;
        std::int64_t gap_at = 0;
        std::size_t prev_idx = day_index[first_day];
        for (const Bar& b : s.bars) {
            std::size_t idx = day_index[epoch_day(b.timestamp)];
            if (idx > prev_idx + 1) {
                std::size_t gap = idx - prev_idx - 1;
                if (gap > worst_gap) {
                    worst_gap = gap;
                    gap_at = epoch_day(b.timestamp);
                }
            }
            prev_idx = idx;
        }
        if (worst_gap > filters.max_halt_run) {
            result.exclusions.push_back(
                {s.symbol, "halt_run",
                 std::to_string(worst_gap) + " trading days missing before " +
                     format_iso_date(gap_at * 86400)});
            continue;
        }
        result.series.push_back(std::move(s));
    }

    std::sort(result.series.begin(), result.series.end(),
              [](const BarSeries& a, const BarSeries& b) { return a.symbol < b.symbol; });
    std::sort(result.exclusions.begin(), result.exclusions.end(),
              [](const Exclusion& a, const Exclusion& b) { return a.symbol < b.symbol; });
    return result;
}

} // namespace leadlag
