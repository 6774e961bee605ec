#include "timeutil.hpp"

#include <cstdio>

#include "error.hpp"

namespace leadlag {

// Days-from-civil / civil-from-days follow Howard Hinnant's public-domain
// algorithms; exact over the full int range used here.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);            // [0, 399]
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1; // [0, 365]
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;           // [0, 146096]
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& year, int& month, int& day) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
    month = static_cast<int>(mp + (mp < 10 ? 3 : -9));
    year = static_cast<int>(y + (month <= 2));
}

std::int64_t to_epoch(const CivilTime& c) {
    return days_from_civil(c.year, c.month, c.day) * 86400 + c.hour * 3600 +
           c.minute * 60 + c.second;
}

CivilTime from_epoch(std::int64_t ts) {
    CivilTime c;
    std::int64_t days = epoch_day(ts);
    std::int64_t rem = ts - days * 86400;
    civil_from_days(days, c.year, c.month, c.day);
    c.hour = static_cast<int>(rem / 3600);
    c.minute = static_cast<int>((rem % 3600) / 60);
    c.second = static_cast<int>(rem % 60);
    return c;
}

int weekday_from_days(std::int64_t days) {
    // 1970-01-01 was a Thursday (index 3 with Monday = 0).
    std::int64_t w = (days + 3) % 7;
    return static_cast<int>(w < 0 ? w + 7 : w);
}

namespace {

bool parse_int_field(const std::string& s, size_t pos, size_t len, int& out) {
    if (pos + len > s.size()) return false;
    int v = 0;
    for (size_t i = pos; i < pos + len; ++i) {
        char c = s[i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

} // namespace

std::int64_t parse_iso8601(const std::string& text) {
    CivilTime c;
    bool ok = text.size() == 10 || text.size() == 19;
    ok = ok && parse_int_field(text, 0, 4, c.year) && text[4] == '-' &&
         parse_int_field(text, 5, 2, c.month) && text[7] == '-' &&
         parse_int_field(text, 8, 2, c.day);
    if (ok && text.size() == 19) {
        ok = (text[10] == 'T' || text[10] == ' ') &&
             parse_int_field(text, 11, 2, c.hour) && text[13] == ':' &&
             parse_int_field(text, 14, 2, c.minute) && text[16] == ':' &&
             parse_int_field(text, 17, 2, c.second);
    }
    ok = ok && c.month >= 1 && c.month <= 12 && c.day >= 1 && c.day <= 31 &&
         c.hour < 24 && c.minute < 60 && c.second < 60;
    if (!ok) raise(Errc::ParseError, "bad timestamp '" + text + "'");
    return to_epoch(c);
}

std::string format_iso8601(std::int64_t ts) {
    CivilTime c = from_epoch(ts);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d", c.year,
                  c.month, c.day, c.hour, c.minute, c.second);
    return buf;
}

std::string format_iso_date(std::int64_t ts) {
    CivilTime c = from_epoch(ts);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", c.year, c.month, c.day);
    return buf;
}

} // namespace leadlag
