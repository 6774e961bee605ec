#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "coupling.hpp"
#include "csv.hpp"
#include "ingest.hpp"
#include "lag.hpp"
#include "synth.hpp"
#include "test_util.hpp"
#include "timeutil.hpp"

using namespace leadlag;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("leadlag_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

SynthSpec base_spec() {
    SynthSpec spec;
    spec.seed = 42;
    spec.n_symbols = 4;
    spec.bars_per_symbol = 600;
    spec.granularity = Granularity::Min1;
    spec.base_vol = 0.001;
    return spec;
}

} // namespace

TEST_CASE("generation is a pure function of the spec") {
    SynthSpec spec = base_spec();
    spec.links.push_back({0, 1, 2, 0.5, 2.0});
    GenerateResult one = generate(spec);
    GenerateResult two = generate(spec);
    REQUIRE(one.bars.size() == two.bars.size());
    for (std::size_t s = 0; s < one.bars.size(); ++s) {
        REQUIRE(one.bars[s].bars.size() == two.bars[s].bars.size());
        for (std::size_t k = 0; k < one.bars[s].bars.size(); ++k) {
            CHECK(one.bars[s].bars[k].close == two.bars[s].bars[k].close);
            CHECK(one.bars[s].bars[k].volume == two.bars[s].bars[k].volume);
        }
    }
    CHECK(one.rng_id == std::string("mt19937_64/box-muller"));
}

TEST_CASE("generated bars satisfy every bar invariant") {
    SynthSpec spec = base_spec();
    spec.market_beta_range = {0.1, 0.3};
    spec.groups.push_back({{0, 1, 2}, 0.5});
    spec.links.push_back({0, 3, 1, 0.4, 1.5});
    GenerateResult gen = generate(spec);
    for (const BarSeries& s : gen.bars) CHECK_NOTHROW(s.validate(s.symbol));
}

TEST_CASE("independent symbols show no spurious correlation") {
    SynthSpec spec = base_spec();
    spec.n_symbols = 20;
    spec.bars_per_symbol = 2001;
    GenerateResult gen = generate(spec);
    std::vector<ReturnSeries> returns;
    for (const BarSeries& s : gen.bars)
        returns.push_back(compute_returns(s, ReturnKind::Log));
    const double bound = 4.0 / std::sqrt(2000.0);
    for (std::size_t i = 0; i < returns.size(); ++i) {
        for (std::size_t j = i + 1; j < returns.size(); ++j) {
            AlignedPair pair = align(returns[i], returns[j], 100);
            CHECK(std::fabs(pearson(pair)) < bound);
        }
    }
}

TEST_CASE("a planted link is recovered with its analytic r-squared") {
    SynthSpec spec = base_spec();
    spec.n_symbols = 2;
    spec.bars_per_symbol = 50001;
    // population R^2 0.09 -> noise_ratio sqrt(1/0.09 - 1)
    double nr = std::sqrt(1.0 / 0.09 - 1.0);
    spec.links.push_back({0, 1, 3, 0.5, nr});
    GenerateResult gen = generate(spec);
    REQUIRE(gen.truth.size() == 1);
    CHECK(gen.truth[0].population_r2 == doctest::Approx(0.09).epsilon(1e-9));
    CHECK(gen.truth[0].population_ccf_peak == doctest::Approx(0.3).epsilon(1e-9));

    ReturnSeries leader = compute_returns(gen.bars[0], ReturnKind::Log);
    ReturnSeries follower = compute_returns(gen.bars[1], ReturnKind::Log);
    AlignedPair pair = align(leader, follower, 100);
    OptimalLag opt = optimal_lag(ccf(pair, 30));
    CHECK(opt.lag == 3);
    LagRegressionResult reg = lag_regression(pair, 3);
    CHECK(std::fabs(reg.r_squared - 0.09) < 0.015);
}

TEST_CASE("population ccf peaks exactly at the planted lag") {
    SynthSpec spec = base_spec();
    spec.n_symbols = 3;
    spec.market_beta_range = {0.0, 0.2};
    spec.links.push_back({0, 1, 2, 0.6, 1.0});
    spec.links.push_back({1, 2, 3, 0.5, 1.2});
    GenerateResult gen = generate(spec);
    // Chain truth: sample CCF of each link peaks at its planted lag.
    spec.bars_per_symbol = 20001;
    gen = generate(spec);
    std::vector<ReturnSeries> r;
    for (const BarSeries& s : gen.bars) r.push_back(compute_returns(s, ReturnKind::Log));
    {
        AlignedPair ab = align(r[0], r[1], 100);
        CHECK(optimal_lag(ccf(ab, 10)).lag == 2);
        AlignedPair bc = align(r[1], r[2], 100);
        CHECK(optimal_lag(ccf(bc, 10)).lag == 3);
        AlignedPair ac = align(r[0], r[2], 100);
        CHECK(optimal_lag(ccf(ac, 10)).lag == 5); // transitive path lag 2+3
    }
    for (const LinkTruth& t : gen.truth) {
        CHECK(t.population_ccf_peak > 0.0);
        CHECK(t.population_r2 > 0.0);
    }
}

TEST_CASE("cycles and bad specs are rejected") {
    SynthSpec spec = base_spec();
    spec.links.push_back({0, 1, 1, 0.5, 1.0});
    spec.links.push_back({1, 0, 2, 0.5, 1.0});
    try {
        generate(spec);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::CyclicLinks);
    }
    SynthSpec bad = base_spec();
    bad.links.push_back({0, 0, 1, 0.5, 1.0});
    CHECK_THROWS_AS(generate(bad), Error);
    bad = base_spec();
    bad.links.push_back({0, 9, 1, 0.5, 1.0});
    CHECK_THROWS_AS(generate(bad), Error);
    bad = base_spec();
    bad.links.push_back({0, 1, 0, 0.5, 1.0});
    CHECK_THROWS_AS(generate(bad), Error);
    bad = base_spec();
    bad.market_beta_range = {0.5, 1.2};
    CHECK_THROWS_AS(generate(bad), Error);
    bad = base_spec();
    bad.groups.push_back({{0}, 0.5});
    CHECK_THROWS_AS(generate(bad), Error);
    bad = base_spec();
    bad.groups.push_back({{0, 1}, 0.8});
    bad.market_beta_range = {0.7, 0.7}; // 0.64 + 0.49 > 1
    CHECK_THROWS_AS(generate(bad), Error);
}

TEST_CASE("fixtures round-trip through ingestion") {
    SynthSpec spec = base_spec();
    spec.n_symbols = 3;
    spec.bars_per_symbol = 500;
    GenerateResult gen = generate(spec);
    fs::path root = fresh_dir("roundtrip");
    Manifest manifest = write_fixture(gen.bars, root.string());
    REQUIRE(manifest.files.size() == 3);
    for (const ManifestFile& f : manifest.files) {
        CHECK(f.rows == 500);
        CHECK(f.digest.rfind("fnv1a64:", 0) == 0);
    }
    CHECK(fs::exists(root / "manifest.json"));

    IngestResult ing = ingest(root.string(), Granularity::Min1,
                              {days_from_civil(2030, 1, 1), 20});
    REQUIRE(ing.series.size() == 3);
    CHECK(ing.exclusions.empty());
    for (std::size_t s = 0; s < 3; ++s) {
        const BarSeries& orig = gen.bars[s];
        const BarSeries& parsed = ing.series[s];
        REQUIRE(parsed.bars.size() == orig.bars.size());
        for (std::size_t k = 0; k < orig.bars.size(); ++k) {
            CHECK(parsed.bars[k].timestamp == orig.bars[k].timestamp);
            CHECK(parsed.bars[k].close ==
                  doctest::Approx(orig.bars[k].close).epsilon(1e-11));
            CHECK(parsed.bars[k].volume == orig.bars[k].volume);
        }
    }
}

TEST_CASE("same seed same digests, different seeds different digests") {
    SynthSpec spec = base_spec();
    spec.n_symbols = 2;
    spec.bars_per_symbol = 300;
    fs::path r1 = fresh_dir("digest1");
    fs::path r2 = fresh_dir("digest2");
    Manifest m1 = write_fixture(generate(spec).bars, r1.string());
    Manifest m2 = write_fixture(generate(spec).bars, r2.string());
    REQUIRE(m1.files.size() == m2.files.size());
    for (std::size_t i = 0; i < m1.files.size(); ++i)
        CHECK(m1.files[i].digest == m2.files[i].digest);

    std::set<std::string> digests;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        SynthSpec s = spec;
        s.seed = seed;
        s.bars_per_symbol = 50;
        GenerateResult g = generate(s);
        std::string key;
        for (const Bar& b : g.bars[0].bars) key += format_double(b.close) + ",";
        char hex[24];
        std::snprintf(hex, sizeof(hex), "%016llx",
                      static_cast<unsigned long long>(fnv1a64(key)));
        digests.insert(hex);
    }
    CHECK(digests.size() == 100);
}

TEST_CASE("timestamps follow the weekday grid") {
    SynthSpec spec = base_spec();
    spec.granularity = Granularity::Daily;
    spec.bars_per_symbol = 10;
    GenerateResult gen = generate(spec);
    for (const Bar& b : gen.bars[0].bars) {
        int wd = weekday_from_days(epoch_day(b.timestamp));
        CHECK(wd < 5);
        CivilTime c = from_epoch(b.timestamp);
        CHECK(c.hour == 15);
    }
    // 1-min idealized grid: starts 09:31, continuous 240 bars per day
    SynthSpec m1 = base_spec();
    m1.bars_per_symbol = 241;
    GenerateResult g1 = generate(m1);
    CivilTime first = from_epoch(g1.bars[0].bars[0].timestamp);
    CHECK(first.hour == 9);
    CHECK(first.minute == 31);
    CivilTime last_of_day = from_epoch(g1.bars[0].bars[239].timestamp);
    CHECK(last_of_day.hour == 13);
    CHECK(last_of_day.minute == 30);
    CivilTime next_day = from_epoch(g1.bars[0].bars[240].timestamp);
    CHECK(next_day.hour == 9);
    CHECK(next_day.minute == 31);
}

TEST_CASE("session calendar splits the day around lunch") {
    SynthSpec spec = base_spec();
    spec.session_calendar = true;
    spec.bars_per_symbol = 241;
    GenerateResult gen = generate(spec);
    CivilTime morning_last = from_epoch(gen.bars[0].bars[119].timestamp);
    CHECK(morning_last.hour == 11);
    CHECK(morning_last.minute == 30);
    CivilTime afternoon_first = from_epoch(gen.bars[0].bars[120].timestamp);
    CHECK(afternoon_first.hour == 13);
    CHECK(afternoon_first.minute == 1);
}

TEST_CASE("synth jobs parse, reject unknown keys, and emit multiple granularities") {
    std::string text = R"({
      "seed": 7, "n_symbols": 2, "bars_per_symbol": 3300,
      "granularity": "1min", "base_vol": 0.001,
      "links": [{"leader": 0, "follower": 1, "lag": 2, "beta": 0.5, "noise_ratio": 2.0}],
      "emit": ["1min", "daily"]
    })";
    SynthJob job = synth_job_from_json(text, "<test>");
    CHECK(job.spec.seed == 7);
    CHECK(job.emit.size() == 2);

    fs::path root = fresh_dir("job");
    Manifest manifest = run_synth_job(job, root.string());
    CHECK(manifest.files.size() == 4); // 2 symbols x 2 granularities
    CHECK(fs::exists(root / "data_1min_fixed" / "000001.csv"));
    CHECK(fs::exists(root / "data_daily_fixed" / "000002.csv"));
    CHECK(fs::exists(root / "truth.json"));

    CHECK_THROWS_AS(synth_job_from_json(R"({"n_symbols": 2})", "<t>"), Error);
    CHECK_THROWS_AS(
        synth_job_from_json(
            R"({"n_symbols": 2, "bars_per_symbol": 10, "mystery": 1})", "<t>"),
        Error);
    CHECK_THROWS_AS(
        synth_job_from_json(
            R"({"n_symbols": 2, "bars_per_symbol": 10, "granularity": "daily", "emit": ["1min"]})",
            "<t>"),
        Error);
}
