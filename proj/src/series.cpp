#include "series.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "timeutil.hpp"

namespace leadlag {

int bar_seconds(Granularity g) {
    switch (g) {
        case Granularity::Min1: return 60;
        case Granularity::Min5: return 300;
        case Granularity::Min15: return 900;
        case Granularity::Daily: return 86400;
    }
    return 86400;
}

const char* granularity_label(Granularity g) {
    switch (g) {
        case Granularity::Min1: return "1min";
        case Granularity::Min5: return "5min";
        case Granularity::Min15: return "15min";
        case Granularity::Daily: return "daily";
    }
    return "daily";
}

Granularity granularity_from_label(const std::string& label) {
    if (label == "1min") return Granularity::Min1;
    if (label == "5min") return Granularity::Min5;
    if (label == "15min") return Granularity::Min15;
    if (label == "daily") return Granularity::Daily;
    raise(Errc::DomainError, "unknown granularity '" + label + "'");
}

int bars_per_day(Granularity g) {
    // A-share session: 4 trading hours per day.
    switch (g) {
        case Granularity::Min1: return 240;
        case Granularity::Min5: return 48;
        case Granularity::Min15: return 16;
        case Granularity::Daily: return 1;
    }
    return 1;
}

std::string format_lag(int lag_bars, Granularity g) {
    int minutes = 0;
    switch (g) {
        case Granularity::Min1: minutes = 1; break;
        case Granularity::Min5: minutes = 5; break;
        case Granularity::Min15: minutes = 15; break;
        case Granularity::Daily:
            return std::to_string(lag_bars) + "d";
    }
    return std::to_string(lag_bars * minutes) + "m";
}

void BarSeries::validate(const std::string& where) const {
    std::int64_t prev_ts = std::numeric_limits<std::int64_t>::min();
    for (std::size_t i = 0; i < bars.size(); ++i) {
        const Bar& b = bars[i];
        std::string at = where + " bar " + std::to_string(i);
        if (b.timestamp <= prev_ts)
            raise(Errc::MalformedRow, at + ": timestamps not strictly increasing");
        if (!(b.open > 0.0) || !(b.high > 0.0) || !(b.low > 0.0) || !(b.close > 0.0))
            raise(Errc::NonPositivePrice, at + ": non-positive price");
        if (b.low > std::min(b.open, b.close) || b.high < std::max(b.open, b.close))
            raise(Errc::MalformedRow, at + ": OHLC range violated");
        if (b.volume < 0)
            raise(Errc::MalformedRow, at + ": negative volume");
        prev_ts = b.timestamp;
    }
}

ReturnSeries compute_returns(const BarSeries& series, ReturnKind kind,
                             bool drop_session_boundary) {
    if (series.bars.size() < 2)
        raise(Errc::TooShort, "need at least 2 bars, have " +
                                  std::to_string(series.bars.size()));
    ReturnSeries out;
    out.symbol = series.symbol;
    out.granularity = series.granularity;
    out.kind = kind;
    out.timestamps.reserve(series.bars.size() - 1);
    out.values.reserve(series.bars.size() - 1);
    const int step = bar_seconds(series.granularity);
    const bool intraday = series.granularity != Granularity::Daily;
    for (std::size_t k = 1; k < series.bars.size(); ++k) {
        double prev = series.bars[k - 1].close;
        double cur = series.bars[k].close;
        if (!(prev > 0.0) || !(cur > 0.0))
            raise(Errc::NonPositivePrice,
                  series.symbol + ": non-positive close at index " + std::to_string(k));
        if (drop_session_boundary && intraday &&
            series.bars[k].timestamp - series.bars[k - 1].timestamp > step)
            continue;
        double r = kind == ReturnKind::Log ? std::log(cur / prev) : cur / prev - 1.0;
        out.timestamps.push_back(series.bars[k].timestamp);
        out.values.push_back(r);
    }
    return out;
}

AlignedPair align(const ReturnSeries& a, const ReturnSeries& b,
                  std::size_t min_obs) {
    if (a.granularity != b.granularity)
        raise(Errc::GranularityMismatch,
              a.symbol + " is " + granularity_label(a.granularity) + ", " +
                  b.symbol + " is " + granularity_label(b.granularity));
    AlignedPair out;
    out.a.symbol = a.symbol;
    out.b.symbol = b.symbol;
    out.a.granularity = out.b.granularity = a.granularity;
    out.a.kind = a.kind;
    out.b.kind = b.kind;
    // Both timestamp sequences are strictly increasing; two-pointer sweep.
    std::size_t i = 0, j = 0;
    while (i < a.timestamps.size() && j < b.timestamps.size()) {
        if (a.timestamps[i] < b.timestamps[j]) {
            ++i;
        } else if (a.timestamps[i] > b.timestamps[j]) {
            ++j;
        } else {
            out.a.timestamps.push_back(a.timestamps[i]);
            out.b.timestamps.push_back(b.timestamps[j]);
            out.a.values.push_back(a.values[i]);
            out.b.values.push_back(b.values[j]);
            ++i;
            ++j;
        }
    }
    out.n = out.a.values.size();
    if (out.n < min_obs)
        raise(Errc::InsufficientOverlap,
              a.symbol + "/" + b.symbol + ": " + std::to_string(out.n) +
                  " common observations, need " + std::to_string(min_obs));
    return out;
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) {
        double d = x - m;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double pearson_raw(const double* a, const double* b, std::size_t n) {
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double saa = 0.0, sbb = 0.0, sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double da = a[i] - ma;
        double db = b[i] - mb;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    double den = std::sqrt(saa) * std::sqrt(sbb);
    if (den <= 0.0) return std::numeric_limits<double>::quiet_NaN();
    double r = sab / den;
    return std::clamp(r, -1.0, 1.0);
}

SummaryStats summary_stats(const ReturnSeries& r) {
    const std::size_t n = r.size();
    if (n < 4)
        raise(Errc::TooShort, "summary_stats needs n >= 4, have " + std::to_string(n));
    SummaryStats s;
    s.n = n;
    s.mean = mean_of(r.values);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double x : r.values) {
        double d = x - s.mean;
        double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    double nn = static_cast<double>(n);
    s.std_dev = std::sqrt(m2 / (nn - 1.0));
    if (!(s.std_dev > 0.0))
        raise(Errc::ZeroVariance, r.symbol + ": constant series");
    // Standardized central moments against the sample std.
    double sd3 = s.std_dev * s.std_dev * s.std_dev;
    s.skewness = (m3 / nn) / sd3;
    s.kurtosis = (m4 / nn) / (sd3 * s.std_dev);
    // Lag-1 autocorrelation as the Pearson correlation of (x_t, x_{t+1}).
    s.autocorr_lag1 = pearson_raw(r.values.data(), r.values.data() + 1, n - 1);
    return s;
}

std::vector<std::pair<std::int64_t, double>>
rolling_correlation(const AlignedPair& pair, std::size_t window) {
    if (window < 3)
        raise(Errc::WindowTooSmall, "window " + std::to_string(window) + " < 3");
    if (window > pair.n)
        raise(Errc::WindowTooLarge, "window " + std::to_string(window) +
                                        " exceeds n=" + std::to_string(pair.n));
    std::vector<std::pair<std::int64_t, double>> out;
    out.reserve(pair.n - window + 1);
    for (std::size_t k = window - 1; k < pair.n; ++k) {
        std::size_t start = k + 1 - window;
        double r = pearson_raw(pair.a.values.data() + start,
                               pair.b.values.data() + start, window);
        out.emplace_back(pair.a.timestamps[k], r); // NaN = undefined window
    }
    return out;
}

ReturnSeries zscore_normalize(const ReturnSeries& r) {
    double sd = sample_std(r.values);
    if (!(sd > 0.0))
        raise(Errc::ZeroVariance, r.symbol + ": cannot z-score constant series");
    double m = mean_of(r.values);
    ReturnSeries out = r;
    for (double& x : out.values) x = (x - m) / sd;
    return out;
}

BarSeries resample(const BarSeries& series, Granularity target) {
    if (bar_seconds(target) <= bar_seconds(series.granularity) &&
        target != series.granularity)
        raise(Errc::DomainError, "resample target must be coarser than source");
    if (target == series.granularity) return series;

    BarSeries out;
    out.symbol = series.symbol;
    out.granularity = target;
    std::map<std::int64_t, Bar> buckets;
    const std::int64_t step = bar_seconds(target);
    for (const Bar& b : series.bars) {
        std::int64_t key;
        if (target == Granularity::Daily) {
            key = epoch_day(b.timestamp);
        } else {
            key = (b.timestamp + step - 1) / step; // bucket by close time
        }
        auto it = buckets.find(key);
        if (it == buckets.end()) {
            buckets.emplace(key, b);
        } else {
            Bar& agg = it->second;
            agg.high = std::max(agg.high, b.high);
            agg.low = std::min(agg.low, b.low);
            agg.close = b.close;
            agg.timestamp = b.timestamp;
            agg.volume += b.volume;
        }
    }
    out.bars.reserve(buckets.size());
    for (auto& [key, bar] : buckets) out.bars.push_back(bar);
    return out;
}

} // namespace leadlag
