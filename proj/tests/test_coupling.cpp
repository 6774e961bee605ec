#include <doctest.h>

#include <cmath>

#include "coupling.hpp"
#include "synth.hpp"
#include "test_util.hpp"

using namespace leadlag;
using testutil::make_aligned;
using testutil::make_series;

namespace {

// Pairwise enumeration oracle for tau-b; same tail formula, independent
// counting path.
double kendall_oracle(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    long long concordant = 0, discordant = 0;
    unsigned long long ties_x = 0, ties_y = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double dx = x[i] - x[j];
            double dy = y[i] - y[j];
            if (dx == 0.0) ++ties_x;
            if (dy == 0.0) ++ties_y;
            if (dx == 0.0 || dy == 0.0) continue;
            if (dx * dy > 0)
                ++concordant;
            else
                ++discordant;
        }
    }
    unsigned long long n0 = static_cast<unsigned long long>(n) * (n - 1) / 2;
    double den = std::sqrt(static_cast<double>(n0 - ties_x)) *
                 std::sqrt(static_cast<double>(n0 - ties_y));
    return static_cast<double>(concordant - discordant) / den;
}

// Exhaustive enumeration of every boundary-anchored monotone warping path.
double dtw_oracle(const std::vector<double>& a, const std::vector<double>& b,
                  std::size_t i, std::size_t j, double acc) {
    acc += std::fabs(a[i] - b[j]);
    if (i == a.size() - 1 && j == b.size() - 1) return acc;
    double best = std::numeric_limits<double>::infinity();
    if (i + 1 < a.size()) best = std::min(best, dtw_oracle(a, b, i + 1, j, acc));
    if (j + 1 < b.size()) best = std::min(best, dtw_oracle(a, b, i, j + 1, acc));
    if (i + 1 < a.size() && j + 1 < b.size())
        best = std::min(best, dtw_oracle(a, b, i + 1, j + 1, acc));
    return best;
}

std::vector<double> random_values(Rng& rng, std::size_t n, bool with_ties) {
    std::vector<double> out(n);
    for (double& v : out) {
        v = rng.normal();
        if (with_ties) v = std::round(v * 4.0) / 4.0;
    }
    return out;
}

} // namespace

TEST_CASE("pearson basics") {
    std::vector<double> v = testutil::random_normal(31, 100);
    CHECK(pearson(make_aligned(v, v)) == doctest::Approx(1.0));
    std::vector<double> w = v;
    for (double& x : w) x = -2.0 * x + 3.0;
    CHECK(pearson(make_aligned(v, w)) == doctest::Approx(-1.0));
    std::vector<double> r1 = testutil::random_normal(32, 500);
    std::vector<double> r2 = testutil::random_normal(33, 500);
    CHECK(std::fabs(pearson(make_aligned(r1, r2)) - testutil::pearson_oracle(r1, r2)) < 1e-12);

    CHECK_THROWS_AS(pearson(make_aligned({1, 2}, {3, 4})), Error);
    try {
        pearson(make_aligned({1, 1, 1}, {1, 2, 3}));
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::ZeroVariance);
    }
}

TEST_CASE("kendall tau on small known inputs") {
    CHECK(kendall_tau(make_aligned({1, 2, 3}, {10, 20, 30})) == doctest::Approx(1.0));
    // 5 concordant, 1 discordant of 6 pairs
    CHECK(kendall_tau(make_aligned({1, 2, 3, 4}, {1, 3, 2, 4})) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(kendall_tau(make_aligned({1, 2, 3}, {30, 20, 10})) == doctest::Approx(-1.0));
}

TEST_CASE("kendall tau equals the quadratic enumeration oracle exactly") {
    Rng rng(404);
    for (int rep = 0; rep < 60; ++rep) {
        std::size_t n = 3 + static_cast<std::size_t>(rng.uniform01() * 297);
        bool ties = rep % 2 == 0;
        std::vector<double> x = random_values(rng, n, ties);
        std::vector<double> y = random_values(rng, n, ties);
        double fast = kendall_tau(make_aligned(x, y));
        double slow = kendall_oracle(x, y);
        CHECK(fast == slow);
    }
}

TEST_CASE("kendall tau rejects fully tied input") {
    try {
        kendall_tau(make_aligned({1, 1, 1, 1}, {1, 2, 3, 4}));
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::AllTied);
    }
    CHECK_THROWS_AS(kendall_tau(make_aligned({1, 2}, {1, 2})), Error);
}

TEST_CASE("dtw on known inputs") {
    std::vector<double> x = testutil::random_normal(51, 40);
    CHECK(dtw_distance(x, x) == 0.0);
    CHECK(dtw_distance(std::vector<double>{0.0}, std::vector<double>{1.0}) == 1.0);
    CHECK(dtw_distance(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 2, 3}) ==
          0.0);
}

TEST_CASE("dtw equals the exhaustive path oracle on short sequences") {
    Rng rng(66);
    for (int rep = 0; rep < 120; ++rep) {
        std::size_t na = 1 + static_cast<std::size_t>(rng.uniform01() * 7);
        std::size_t nb = 1 + static_cast<std::size_t>(rng.uniform01() * 7);
        std::vector<double> a = random_values(rng, na, false);
        std::vector<double> b = random_values(rng, nb, false);
        CHECK(dtw_distance(a, b) == dtw_oracle(a, b, 0, 0, 0.0));
        CHECK(dtw_distance(a, b) == dtw_distance(b, a));
    }
}

TEST_CASE("banded dtw dominates unbanded and validates the band") {
    Rng rng(67);
    for (int rep = 0; rep < 50; ++rep) {
        std::size_t n = 10 + static_cast<std::size_t>(rng.uniform01() * 30);
        std::vector<double> a = random_values(rng, n, false);
        std::vector<double> b = random_values(rng, n, false);
        double full = dtw_distance(a, b);
        for (std::size_t band : {1ul, 3ul, 8ul})
            CHECK(dtw_distance(a, b, band) >= full - 1e-15);
    }
    CHECK_THROWS_AS(dtw_distance(std::vector<double>{}, std::vector<double>{1.0}), Error);
    try {
        dtw_distance(std::vector<double>{1, 2, 3, 4, 5}, std::vector<double>{1.0}, 2);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::BandTooNarrow);
    }
}

TEST_CASE("composite score follows the weighted formula") {
    CouplingWeights only_rho{1.0, 0.0, 0.0};
    CHECK(composite_score(0.73, 0.4, 0.2, only_rho) == doctest::Approx(0.73));
    CouplingWeights w{0.4, 0.3, 0.3};
    CHECK(composite_score(0.8, 0.5, 0.6, w) == doctest::Approx(0.65));
    // identical series hit the perfect-coupling bound for any valid weights
    CHECK(composite_score(1.0, 0.0, 1.0, w) == doctest::Approx(1.0));
    CHECK(composite_score(1.0, 0.0, 1.0, CouplingWeights{0.2, 0.5, 0.3}) == doctest::Approx(1.0));
}

TEST_CASE("composite score domain checks") {
    CouplingWeights bad_sum{0.5, 0.5, 0.5};
    CHECK_THROWS_AS(composite_score(0.5, 0.5, 0.5, bad_sum), Error);
    CouplingWeights neg{1.2, -0.1, -0.1};
    CHECK_THROWS_AS(composite_score(0.5, 0.5, 0.5, neg), Error);
    CouplingWeights ok{0.4, 0.3, 0.3};
    CHECK_THROWS_AS(composite_score(0.5, 1.5, 0.5, ok), Error);
}

TEST_CASE("composite score monotonicity") {
    CouplingWeights w{0.4, 0.3, 0.3};
    double base = composite_score(0.5, 0.5, 0.5, w);
    CHECK(composite_score(0.6, 0.5, 0.5, w) > base);
    CHECK(composite_score(0.5, 0.4, 0.5, w) > base);
    CHECK(composite_score(0.5, 0.5, 0.6, w) > base);
}

TEST_CASE("pair metrics are symmetric under relabeling") {
    std::vector<double> a = testutil::random_normal(81, 300);
    std::vector<double> b = testutil::random_normal(82, 300);
    RawCoupling ab = evaluate_pair(make_series("a", a), make_series("b", b),
                                   DtwBand::fraction(0.1), 10);
    RawCoupling ba = evaluate_pair(make_series("b", b), make_series("a", a),
                                   DtwBand::fraction(0.1), 10);
    CHECK(ab.pearson == doctest::Approx(ba.pearson).epsilon(1e-15));
    CHECK(ab.kendall_tau == ba.kendall_tau);
    CHECK(ab.dtw_distance == doctest::Approx(ba.dtw_distance).epsilon(1e-12));
}

TEST_CASE("screen_pairs yields one row per unordered pair") {
    std::vector<ReturnSeries> universe;
    for (int s = 0; s < 3; ++s)
        universe.push_back(make_series("S" + std::to_string(s),
                                       testutil::random_normal(90 + s, 200)));
    auto results = screen_pairs(universe, CouplingWeights{}, 0.6, std::nullopt, 10);
    CHECK(results.size() == 3);
    CHECK_THROWS_AS(screen_pairs({universe[0]}, CouplingWeights{}, 0.6, std::nullopt, 10),
                    Error);
}

TEST_CASE("a planted coupled pair ranks first among independent series") {
    SynthSpec spec;
    spec.seed = 9090;
    spec.n_symbols = 20;
    spec.bars_per_symbol = 400;
    spec.granularity = Granularity::Daily;
    spec.base_vol = 0.02;
    spec.groups.push_back({{3, 11}, 0.95});
    GenerateResult gen = generate(spec);
    std::vector<ReturnSeries> universe;
    for (const BarSeries& s : gen.bars)
        universe.push_back(compute_returns(s, ReturnKind::Log));
    auto results = screen_pairs(universe, CouplingWeights{}, 0.6, std::nullopt, 60);
    REQUIRE(results.size() == 190);
    CHECK(results.front().symbol_a == synth_symbol_name(3));
    CHECK(results.front().symbol_b == synth_symbol_name(11));
    CHECK(results.front().passed);
    // The pair attaining DTW_max carries dtw_normalized exactly 1.
    double max_norm = 0.0;
    int at_max = 0;
    for (const auto& r : results) {
        if (!r.evaluated()) continue;
        max_norm = std::max(max_norm, r.dtw_normalized);
        if (r.dtw_normalized == 1.0) ++at_max;
    }
    CHECK(max_norm == 1.0);
    CHECK(at_max >= 1);
}

TEST_CASE("screen results are deterministic and fully ordered") {
    std::vector<ReturnSeries> universe;
    for (int s = 0; s < 6; ++s)
        universe.push_back(make_series("S" + std::to_string(s),
                                       testutil::random_normal(700 + s, 150)));
    auto r1 = screen_pairs(universe, CouplingWeights{}, 0.2, std::nullopt, 10);
    auto r2 = screen_pairs(universe, CouplingWeights{}, 0.2, std::nullopt, 10);
    REQUIRE(r1.size() == r2.size());
    for (std::size_t i = 0; i < r1.size(); ++i) {
        CHECK(r1[i].symbol_a == r2[i].symbol_a);
        CHECK(r1[i].composite == r2[i].composite);
    }
    for (std::size_t i = 1; i < r1.size(); ++i)
        if (r1[i - 1].evaluated() && r1[i].evaluated())
            CHECK(r1[i - 1].composite >= r1[i].composite);
}

TEST_CASE("skip records carry reasons instead of aborting the batch") {
    std::vector<ReturnSeries> universe;
    universe.push_back(make_series("A", testutil::random_normal(1, 150)));
    universe.push_back(make_series("B", testutil::random_normal(2, 150)));
    universe.push_back(make_series("C", std::vector<double>(150, 0.5))); // constant
    auto results = screen_pairs(universe, CouplingWeights{}, 0.6, std::nullopt, 10);
    REQUIRE(results.size() == 3);
    int skips = 0;
    for (const auto& r : results)
        if (!r.evaluated()) {
            ++skips;
            CHECK(r.skip_reason == "zero_variance");
        }
    CHECK(skips == 2);
}
