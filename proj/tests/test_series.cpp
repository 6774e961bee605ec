#include <doctest.h>

#include <cmath>
#include <set>

#include "series.hpp"
#include "synth.hpp"
#include "test_util.hpp"

using namespace leadlag;
using testutil::make_aligned;
using testutil::make_series;

namespace {

BarSeries bars_from_closes(const std::vector<double>& closes,
                           Granularity g = Granularity::Daily,
                           std::int64_t step = 86400) {
    BarSeries s;
    s.symbol = "TEST";
    s.granularity = g;
    for (std::size_t i = 0; i < closes.size(); ++i) {
        Bar b;
        b.timestamp = 1000 + static_cast<std::int64_t>(i) * step;
        b.open = b.high = b.low = b.close = closes[i];
        b.volume = 100;
        s.bars.push_back(b);
    }
    return s;
}

} // namespace

TEST_CASE("simple returns match direct arithmetic") {
    ReturnSeries r = compute_returns(bars_from_closes({100, 101, 100}), ReturnKind::Simple);
    REQUIRE(r.size() == 2);
    CHECK(r.values[0] == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(r.values[1] == doctest::Approx(100.0 / 101.0 - 1.0).epsilon(1e-12));
    CHECK(r.timestamps[0] == 1000 + 86400);
}

TEST_CASE("log returns of a constant price are zero") {
    ReturnSeries r = compute_returns(bars_from_closes({5, 5, 5}), ReturnKind::Log);
    CHECK(r.values[0] == 0.0);
    CHECK(r.values[1] == 0.0);
}

TEST_CASE("log returns reconstruct the price path") {
    Rng rng(42);
    std::vector<double> closes{100.0};
    for (int i = 0; i < 999; ++i)
        closes.push_back(closes.back() * std::exp(0.01 * rng.normal()));
    ReturnSeries r = compute_returns(bars_from_closes(closes), ReturnKind::Log);
    double acc = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) {
        acc += r.values[k];
        CHECK(std::exp(acc) == doctest::Approx(closes[k + 1] / closes[0]).epsilon(1e-12));
    }
}

TEST_CASE("returns error paths") {
    CHECK_THROWS_AS(compute_returns(bars_from_closes({100}), ReturnKind::Log), Error);
    BarSeries bad = bars_from_closes({100, 100});
    bad.bars[1].close = -1;
    try {
        compute_returns(bad, ReturnKind::Log);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NonPositivePrice);
    }
}

TEST_CASE("session-boundary returns can be dropped at intraday granularity") {
    BarSeries s;
    s.symbol = "X";
    s.granularity = Granularity::Min1;
    std::vector<std::int64_t> ts{0, 60, 120, 7200, 7260}; // gap after 120
    for (std::size_t i = 0; i < ts.size(); ++i) {
        Bar b;
        b.timestamp = ts[i];
        b.open = b.high = b.low = b.close = 100.0 + i;
        b.volume = 1;
        s.bars.push_back(b);
    }
    ReturnSeries all = compute_returns(s, ReturnKind::Log, false);
    CHECK(all.size() == 4);
    ReturnSeries trimmed = compute_returns(s, ReturnKind::Log, true);
    CHECK(trimmed.size() == 3); // the 120 -> 7200 gap return is gone
    for (std::int64_t t : trimmed.timestamps) CHECK(t != 7200);
}

TEST_CASE("align restricts to the timestamp intersection") {
    ReturnSeries a = make_series("a", {1, 2, 3}, Granularity::Daily, 1, 1);
    ReturnSeries b = make_series("b", {4, 5, 6}, Granularity::Daily, 2, 1);
    AlignedPair p = align(a, b, 2);
    CHECK(p.n == 2);
    CHECK(p.a.timestamps == std::vector<std::int64_t>{2, 3});
    CHECK(p.a.values == std::vector<double>{2, 3});
    CHECK(p.b.values == std::vector<double>{4, 5});
}

TEST_CASE("align rejects disjoint series and granularity mismatches") {
    ReturnSeries a = make_series("a", {1, 2}, Granularity::Daily, 0, 1);
    ReturnSeries b = make_series("b", {1, 2}, Granularity::Daily, 100, 1);
    try {
        align(a, b, 1);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::InsufficientOverlap);
    }
    ReturnSeries c = make_series("c", {1, 2}, Granularity::Min1, 0, 60);
    try {
        align(a, c, 1);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::GranularityMismatch);
    }
}

TEST_CASE("align overlap equals an independent set-intersection oracle") {
    Rng rng(7);
    std::vector<std::int64_t> ta, tb;
    std::vector<double> va, vb;
    for (int i = 0; i < 500; ++i) {
        if (rng.uniform01() > 0.1) {
            ta.push_back(i);
            va.push_back(rng.normal());
        }
        if (rng.uniform01() > 0.1) {
            tb.push_back(i);
            vb.push_back(rng.normal());
        }
    }
    ReturnSeries a = make_series("a", va);
    a.timestamps = ta;
    ReturnSeries b = make_series("b", vb);
    b.timestamps = tb;
    std::set<std::int64_t> sa(ta.begin(), ta.end()), sb(tb.begin(), tb.end());
    std::size_t expected = 0;
    for (std::int64_t t : sa) expected += sb.count(t);
    AlignedPair p = align(a, b, 1);
    CHECK(p.n == expected);
    AlignedPair q = align(b, a, 1);
    CHECK(q.a.timestamps == p.a.timestamps); // commutative in content
}

TEST_CASE("summary stats on the alternating series") {
    SummaryStats s = summary_stats(make_series("x", {1, -1, 1, -1}));
    CHECK(s.mean == doctest::Approx(0.0));
    CHECK(s.autocorr_lag1 == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(s.skewness == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("summary stats kurtosis near 3 for a big normal sample") {
    SummaryStats s = summary_stats(make_series("x", testutil::random_normal(11, 100000)));
    CHECK(std::fabs(s.kurtosis - 3.0) < 0.1);
    CHECK(std::fabs(s.mean) < 0.02);
    CHECK(s.std_dev == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("summary stats rejects constants and short input") {
    try {
        summary_stats(make_series("x", {2, 2, 2, 2}));
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ZeroVariance);
    }
    CHECK_THROWS_AS(summary_stats(make_series("x", {1, 2, 3})), Error);
}

TEST_CASE("summary stats shape measures are location-free") {
    std::vector<double> v = testutil::random_normal(3, 2000, 0.0, 0.01);
    SummaryStats base = summary_stats(make_series("x", v));
    for (double& x : v) x += 7.25;
    SummaryStats moved = summary_stats(make_series("x", v));
    CHECK(std::fabs(base.skewness - moved.skewness) < 1e-10);
    CHECK(std::fabs(base.kurtosis - moved.kurtosis) < 1e-10);
    CHECK(std::fabs(base.autocorr_lag1 - moved.autocorr_lag1) < 1e-10);
}

TEST_CASE("rolling correlation of identical and negated series") {
    std::vector<double> v = testutil::random_normal(5, 100);
    AlignedPair same = make_aligned(v, v);
    for (auto& [ts, r] : rolling_correlation(same, 10)) {
        (void)ts;
        CHECK(r == doctest::Approx(1.0));
    }
    std::vector<double> neg = v;
    for (double& x : neg) x = -x;
    AlignedPair anti = make_aligned(v, neg);
    for (auto& [ts, r] : rolling_correlation(anti, 10)) {
        (void)ts;
        CHECK(r == doctest::Approx(-1.0));
    }
}

TEST_CASE("rolling correlation matches a per-window oracle") {
    std::vector<double> a = testutil::random_normal(21, 200);
    std::vector<double> b = testutil::random_normal(22, 200);
    AlignedPair p = make_aligned(a, b);
    const std::size_t w = 50;
    auto out = rolling_correlation(p, w);
    REQUIRE(out.size() == 200 - w + 1);
    for (std::size_t k = 0; k < out.size(); ++k) {
        std::vector<double> wa(a.begin() + k, a.begin() + k + w);
        std::vector<double> wb(b.begin() + k, b.begin() + k + w);
        CHECK(std::fabs(out[k].second - testutil::pearson_oracle(wa, wb)) < 1e-12);
        CHECK(out[k].second >= -1.0);
        CHECK(out[k].second <= 1.0);
    }
}

TEST_CASE("rolling correlation window validation and null windows") {
    std::vector<double> v = testutil::random_normal(6, 20);
    AlignedPair p = make_aligned(v, v);
    CHECK_THROWS_AS(rolling_correlation(p, 2), Error);
    CHECK_THROWS_AS(rolling_correlation(p, 21), Error);
    // A constant window on one side yields a null marker, not an error.
    std::vector<double> flat(20, 1.0);
    AlignedPair q = make_aligned(v, flat);
    for (auto& [ts, r] : rolling_correlation(q, 5)) {
        (void)ts;
        CHECK(std::isnan(r));
    }
}

TEST_CASE("zscore normalization") {
    ReturnSeries z = zscore_normalize(make_series("x", {1, 2, 3}));
    double m = mean_of(z.values), sd = sample_std(z.values);
    CHECK(std::fabs(m) < 1e-12);
    CHECK(std::fabs(sd - 1.0) < 1e-12);

    ReturnSeries again = zscore_normalize(z);
    for (std::size_t i = 0; i < z.size(); ++i)
        CHECK(std::fabs(again.values[i] - z.values[i]) < 1e-12);

    ReturnSeries big =
        zscore_normalize(make_series("x", testutil::random_normal(9, 1000, 5, 3)));
    CHECK(std::fabs(mean_of(big.values)) < 1e-12);
    CHECK(std::fabs(sample_std(big.values) - 1.0) < 1e-12);

    CHECK_THROWS_AS(zscore_normalize(make_series("x", {4, 4, 4})), Error);
}

TEST_CASE("granularity mapping is bijective") {
    for (Granularity g : {Granularity::Min1, Granularity::Min5, Granularity::Min15,
                          Granularity::Daily}) {
        CHECK(granularity_from_label(granularity_label(g)) == g);
        CHECK(bar_seconds(g) > 0);
    }
    CHECK(bar_seconds(Granularity::Min1) == 60);
    CHECK(bar_seconds(Granularity::Min5) == 300);
    CHECK(bar_seconds(Granularity::Min15) == 900);
    CHECK(format_lag(2, Granularity::Min1) == "2m");
    CHECK(format_lag(3, Granularity::Min5) == "15m");
    CHECK(format_lag(2, Granularity::Min15) == "30m");
    CHECK(format_lag(4, Granularity::Daily) == "4d");
}

TEST_CASE("bar series validation catches invariant violations") {
    BarSeries s = bars_from_closes({10, 11, 12});
    CHECK_NOTHROW(s.validate("test"));
    BarSeries bad = s;
    bad.bars[1].low = bad.bars[1].close + 1; // low above close
    CHECK_THROWS_AS(bad.validate("test"), Error);
    bad = s;
    bad.bars[2].timestamp = bad.bars[1].timestamp;
    CHECK_THROWS_AS(bad.validate("test"), Error);
}

TEST_CASE("resample aggregates OHLCV per bucket") {
    BarSeries fine;
    fine.symbol = "X";
    fine.granularity = Granularity::Min1;
    // Two days, three 1-min bars each (partial days are fine).
    std::vector<std::int64_t> ts{86400 + 60,     86400 + 120,     86400 + 180,
                                 2 * 86400 + 60, 2 * 86400 + 120, 2 * 86400 + 180};
    std::vector<double> closes{10, 12, 11, 20, 18, 19};
    for (std::size_t i = 0; i < ts.size(); ++i) {
        Bar b;
        b.timestamp = ts[i];
        b.open = closes[i] - 1;
        b.close = closes[i];
        b.high = std::max(b.open, b.close) + 1;
        b.low = std::min(b.open, b.close) - 1;
        b.volume = 10;
        fine.bars.push_back(b);
    }
    BarSeries daily = resample(fine, Granularity::Daily);
    REQUIRE(daily.bars.size() == 2);
    CHECK(daily.bars[0].open == 9);
    CHECK(daily.bars[0].close == 11);
    CHECK(daily.bars[0].high == 13);
    CHECK(daily.bars[0].low == 8);
    CHECK(daily.bars[0].volume == 30);
    CHECK(daily.bars[1].close == 19);

    BarSeries m5 = resample(fine, Granularity::Min5);
    CHECK(m5.bars.size() == 2); // one 5-min bucket per day covers 60..180
    CHECK(m5.bars[0].volume == 30);
    CHECK_THROWS_AS(resample(daily, Granularity::Min5), Error);
}
