#pragma once

#include <cstdint>
#include <string>

namespace leadlag {

// Timestamps are epoch seconds of exchange-local wall time; no timezone is
// attached anywhere, so conversions below are pure calendar arithmetic.
struct CivilTime {
    int year = 1970;
    int month = 1; // 1..12
    int day = 1;   // 1..31
    int hour = 0;
    int minute = 0;
    int second = 0;
};

std::int64_t days_from_civil(int year, int month, int day);
void civil_from_days(std::int64_t days, int& year, int& month, int& day);

std::int64_t to_epoch(const CivilTime& c);
CivilTime from_epoch(std::int64_t ts);

// 0 = Monday .. 6 = Sunday.
int weekday_from_days(std::int64_t days);

inline std::int64_t epoch_day(std::int64_t ts) {
    // Floor division; timestamps may predate 1970 in principle.
    return ts >= 0 ? ts / 86400 : (ts - 86399) / 86400;
}

// Accepts "YYYY-MM-DD" and "YYYY-MM-DDTHH:MM:SS" (space also allowed as the
// separator). Throws Error(ParseError) on anything else.
std::int64_t parse_iso8601(const std::string& text);

std::string format_iso8601(std::int64_t ts);
std::string format_iso_date(std::int64_t ts);

} // namespace leadlag
