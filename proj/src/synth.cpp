#include "synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <queue>

#include <json.hpp>

#include "timeutil.hpp"

namespace leadlag {

double Rng::uniform01() {
    // 53-bit mantissa, shifted into (0, 1] so log() is always finite.
    return (static_cast<double>(eng_() >> 11) + 1.0) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

namespace {

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t tag) {
    return splitmix64(seed ^ splitmix64(tag));
}

constexpr std::uint64_t kTagMarket = 0x01ULL << 56;
constexpr std::uint64_t kTagGroup = 0x02ULL << 56;
constexpr std::uint64_t kTagIdio = 0x03ULL << 56;
constexpr std::uint64_t kTagPriceNoise = 0x04ULL << 56;
constexpr std::uint64_t kTagVolume = 0x05ULL << 56;
constexpr std::uint64_t kTagBeta = 0x06ULL << 56;

} // namespace

void SynthSpec::validate() const {
    if (n_symbols < 1) raise(Errc::SpecDomain, "n_symbols must be >= 1");
    if (bars_per_symbol < 2) raise(Errc::SpecDomain, "bars_per_symbol must be >= 2");
    if (!(base_vol > 0.0) || base_vol > 0.2)
        raise(Errc::SpecDomain, "base_vol must be in (0, 0.2]");
    auto [lo, hi] = market_beta_range;
    if (lo < 0.0 || hi < lo || hi >= 1.0)
        raise(Errc::SpecDomain, "market_beta_range must satisfy 0 <= lo <= hi < 1");
    for (const PlantedLink& l : links) {
        if (l.leader >= n_symbols || l.follower >= n_symbols)
            raise(Errc::SpecDomain, "link symbol index out of range");
        if (l.leader == l.follower) raise(Errc::SpecDomain, "self-link not allowed");
        if (l.lag < 1) raise(Errc::SpecDomain, "link lag must be >= 1");
        if (!(l.noise_ratio > 0.0)) raise(Errc::SpecDomain, "noise_ratio must be > 0");
        if (l.beta == 0.0) raise(Errc::SpecDomain, "link beta must be non-zero");
        double r2 = 1.0 / (1.0 + l.noise_ratio * l.noise_ratio);
        if (!(r2 > 0.0 && r2 < 1.0))
            raise(Errc::SpecDomain, "implied link R^2 outside (0,1)");
    }
    std::vector<double> loading_sq(n_symbols, 0.0);
    for (const CouplingGroup& g : groups) {
        if (g.members.size() < 2)
            raise(Errc::SpecDomain, "coupling group needs >= 2 members");
        if (!(g.loading > 0.0) || g.loading >= 1.0)
            raise(Errc::SpecDomain, "group loading must be in (0, 1)");
        for (std::size_t m : g.members) {
            if (m >= n_symbols) raise(Errc::SpecDomain, "group member out of range");
            loading_sq[m] += g.loading * g.loading;
        }
    }
    for (std::size_t i = 0; i < n_symbols; ++i)
        if (loading_sq[i] + hi * hi >= 1.0)
            raise(Errc::SpecDomain,
                  "market beta and group loadings leave no idiosyncratic variance for " +
                      synth_symbol_name(i));
}

std::string synth_symbol_name(std::size_t index) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%06zu", index + 1);
    return buf;
}

namespace {

// Per-symbol return decomposition over unit-variance shocks, used both to
// derive exact population moments and to size follower noise.
// Key: (source id, delay); value: coefficient (shock std folded in).
using ShockCoeffs = std::map<std::pair<std::size_t, std::size_t>, double>;

double coeff_variance(const ShockCoeffs& c) {
    double v = 0.0;
    for (const auto& [key, coef] : c) v += coef * coef;
    return v;
}

double cross_covariance(const ShockCoeffs& lead, const ShockCoeffs& follow,
                        long lag) {
    // cov(r_lead,t, r_follow,t+lag) = sum over shared shocks with delays
    // offset by lag.
    double cov = 0.0;
    for (const auto& [key, coef] : lead) {
        long d = static_cast<long>(key.second) + lag;
        if (d < 0) continue;
        auto it = follow.find({key.first, static_cast<std::size_t>(d)});
        if (it != follow.end()) cov += coef * it->second;
    }
    return cov;
}

std::vector<std::size_t> topological_order(const SynthSpec& spec) {
    std::vector<std::vector<std::size_t>> out_edges(spec.n_symbols);
    std::vector<std::size_t> in_degree(spec.n_symbols, 0);
    for (const PlantedLink& l : spec.links) {
        out_edges[l.leader].push_back(l.follower);
        ++in_degree[l.follower];
    }
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
    for (std::size_t i = 0; i < spec.n_symbols; ++i)
        if (in_degree[i] == 0) ready.push(i);
    std::vector<std::size_t> order;
    order.reserve(spec.n_symbols);
    while (!ready.empty()) {
        std::size_t u = ready.top();
        ready.pop();
        order.push_back(u);
        for (std::size_t v : out_edges[u])
            if (--in_degree[v] == 0) ready.push(v);
    }
    if (order.size() != spec.n_symbols)
        raise(Errc::CyclicLinks, "planted links contain a cycle");
    return order;
}

struct DayGrid {
    std::vector<std::int64_t> closes; // bar close offsets within a day, seconds
};

DayGrid day_grid(Granularity g, bool session_calendar) {
    DayGrid grid;
    const int step = bar_seconds(g);
    const int per_day = bars_per_day(g);
    if (g == Granularity::Daily) {
        grid.closes.push_back(15 * 3600); // 15:00 close
        return grid;
    }
    const std::int64_t morning = 9 * 3600 + 30 * 60;
    if (!session_calendar) {
        for (int j = 0; j < per_day; ++j)
            grid.closes.push_back(morning + static_cast<std::int64_t>(step) * (j + 1));
    } else {
        const std::int64_t afternoon = 13 * 3600;
        const int half = per_day / 2;
        for (int j = 0; j < half; ++j)
            grid.closes.push_back(morning + static_cast<std::int64_t>(step) * (j + 1));
        for (int j = 0; j < half; ++j)
            grid.closes.push_back(afternoon + static_cast<std::int64_t>(step) * (j + 1));
    }
    return grid;
}

std::vector<std::int64_t> build_timestamps(const SynthSpec& spec) {
    DayGrid grid = day_grid(spec.granularity, spec.session_calendar);
    std::vector<std::int64_t> out;
    out.reserve(spec.bars_per_symbol);
    std::int64_t day = days_from_civil(2019, 1, 2);
    while (out.size() < spec.bars_per_symbol) {
        int wd = weekday_from_days(day);
        if (wd < 5) {
            for (std::int64_t off : grid.closes) {
                out.push_back(day * 86400 + off);
                if (out.size() == spec.bars_per_symbol) break;
            }
        }
        ++day;
    }
    return out;
}

} // namespace

GenerateResult generate(const SynthSpec& spec) {
    spec.validate();
    std::vector<std::size_t> order = topological_order(spec);

    const std::size_t n_sym = spec.n_symbols;
    const std::size_t n_groups = spec.groups.size();
    // Shock source ids: 0 market, 1..G groups, 1+G+i idiosyncratic.
    const std::size_t src_market = 0;
    auto src_group = [&](std::size_t g) { return 1 + g; };
    auto src_idio = [&](std::size_t i) { return 1 + n_groups + i; };

    std::vector<std::vector<const PlantedLink*>> incoming(n_sym);
    for (const PlantedLink& l : spec.links) incoming[l.follower].push_back(&l);
    for (auto& in : incoming)
        std::sort(in.begin(), in.end(), [](const PlantedLink* a, const PlantedLink* b) {
            return std::tie(a->leader, a->lag) < std::tie(b->leader, b->lag);
        });

    // Market betas drawn in symbol order from a dedicated stream so results
    // do not depend on topological tie-breaking.
    std::vector<double> market_beta(n_sym, 0.0);
    {
        Rng beta_rng(stream_seed(spec.seed, kTagBeta));
        auto [lo, hi] = spec.market_beta_range;
        for (std::size_t i = 0; i < n_sym; ++i)
            market_beta[i] = lo + (hi - lo) * beta_rng.uniform01();
    }

    std::vector<std::vector<std::size_t>> symbol_groups(n_sym);
    for (std::size_t g = 0; g < n_groups; ++g)
        for (std::size_t m : spec.groups[g].members) symbol_groups[m].push_back(g);

    // Pass 1: exact shock decomposition per symbol, in topological order.
    std::vector<ShockCoeffs> coeffs(n_sym);
    std::vector<double> idio_std(n_sym, 0.0);
    std::vector<double> pop_std(n_sym, 0.0);
    for (std::size_t i : order) {
        ShockCoeffs& c = coeffs[i];
        double own_load_sq = market_beta[i] * market_beta[i];
        if (market_beta[i] != 0.0)
            c[{src_market, 0}] += market_beta[i] * spec.base_vol;
        for (std::size_t g : symbol_groups[i]) {
            double lam = spec.groups[g].loading;
            c[{src_group(g), 0}] += lam * spec.base_vol;
            own_load_sq += lam * lam;
        }
        if (incoming[i].empty()) {
            // Root symbols are normalized to a total std of base_vol.
            idio_std[i] = spec.base_vol * std::sqrt(1.0 - own_load_sq);
        } else {
            double noise_var = 0.0;
            for (const PlantedLink* l : incoming[i]) {
                double transmitted = l->beta * pop_std[l->leader];
                noise_var += l->noise_ratio * l->noise_ratio * transmitted * transmitted;
                for (const auto& [key, coef] : coeffs[l->leader])
                    c[{key.first, key.second + l->lag}] += l->beta * coef;
            }
            idio_std[i] = std::sqrt(noise_var);
        }
        c[{src_idio(i), 0}] += idio_std[i];
        pop_std[i] = std::sqrt(coeff_variance(c));
    }

    // Pass 2: sample the return grid. Burn-in covers the longest cumulative
    // lag so the emitted window is exactly stationary.
    std::size_t burn = 0;
    {
        std::vector<std::size_t> depth(n_sym, 0);
        for (std::size_t i : order)
            for (const PlantedLink* l : incoming[i])
                depth[i] = std::max(depth[i], depth[l->leader] + l->lag);
        for (std::size_t d : depth) burn = std::max(burn, d);
    }
    const std::size_t n_returns = spec.bars_per_symbol - 1;
    const std::size_t total = n_returns + burn;

    std::vector<double> market(total, 0.0);
    {
        Rng rng(stream_seed(spec.seed, kTagMarket));
        for (double& x : market) x = spec.base_vol * rng.normal();
    }
    std::vector<std::vector<double>> group_factors(n_groups);
    for (std::size_t g = 0; g < n_groups; ++g) {
        Rng rng(stream_seed(spec.seed, kTagGroup | g));
        group_factors[g].resize(total);
        for (double& x : group_factors[g]) x = spec.base_vol * rng.normal();
    }

    std::vector<std::vector<double>> returns(n_sym);
    for (std::size_t i : order) {
        std::vector<double>& r = returns[i];
        r.resize(total);
        Rng rng(stream_seed(spec.seed, kTagIdio | i));
        for (std::size_t t = 0; t < total; ++t) {
            double x = idio_std[i] * rng.normal() + market_beta[i] * market[t];
            for (std::size_t g : symbol_groups[i])
                x += spec.groups[g].loading * group_factors[g][t];
            for (const PlantedLink* l : incoming[i])
                if (t >= l->lag) x += l->beta * returns[l->leader][t - l->lag];
            r[t] = x;
        }
    }

    // Bars: price path from base 100, OHLC noise and lognormal volume from
    // per-symbol streams.
    std::vector<std::int64_t> timestamps = build_timestamps(spec);
    GenerateResult out;
    out.rng_id = Rng::algorithm_id();
    out.bars.reserve(n_sym);
    for (std::size_t i = 0; i < n_sym; ++i) {
        BarSeries series;
        series.symbol = synth_symbol_name(i);
        series.granularity = spec.granularity;
        series.bars.resize(spec.bars_per_symbol);
        Rng price_rng(stream_seed(spec.seed, kTagPriceNoise | i));
        Rng vol_rng(stream_seed(spec.seed, kTagVolume | i));
        double close = 100.0;
        for (std::size_t k = 0; k < spec.bars_per_symbol; ++k) {
            Bar& bar = series.bars[k];
            double open = close;
            if (k > 0) close = close * std::exp(returns[i][burn + k - 1]);
            double u = std::min(0.2, 0.5 * spec.base_vol * price_rng.uniform01());
            bar.timestamp = timestamps[k];
            bar.open = open;
            bar.close = close;
            bar.high = std::max(open, close) * (1.0 + u);
            bar.low = std::min(open, close) * (1.0 - u);
            bar.volume =
                static_cast<std::int64_t>(std::llround(std::exp(std::log(50000.0) + 0.6 * vol_rng.normal())));
            if (bar.volume < 0) bar.volume = 0;
        }
        out.bars.push_back(std::move(series));
    }

    for (const PlantedLink& l : spec.links) {
        LinkTruth t;
        t.link = l;
        t.leader_symbol = synth_symbol_name(l.leader);
        t.follower_symbol = synth_symbol_name(l.follower);
        double cov = cross_covariance(coeffs[l.leader], coeffs[l.follower],
                                      static_cast<long>(l.lag));
        t.population_ccf_peak = cov / (pop_std[l.leader] * pop_std[l.follower]);
        t.population_r2 = t.population_ccf_peak * t.population_ccf_peak;
        out.truth.push_back(t);
    }
    return out;
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {

std::string format_price(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

} // namespace

Manifest write_fixture(const std::vector<BarSeries>& bars,
                       const std::string& root_dir) {
    namespace fs = std::filesystem;
    Manifest manifest;
    manifest.generator = Rng::algorithm_id();
    std::error_code ec;
    fs::create_directories(root_dir, ec);
    if (ec) raise(Errc::IoFailure, "cannot create " + root_dir + ": " + ec.message());

    for (const BarSeries& series : bars) {
        std::string dir = std::string("data_") + granularity_label(series.granularity) + "_fixed";
        fs::create_directories(fs::path(root_dir) / dir, ec);
        if (ec) raise(Errc::IoFailure, "cannot create " + dir + ": " + ec.message());
        std::string rel = dir + "/" + series.symbol + ".csv";
        std::string content = "timestamp,open,high,low,close,volume\n";
        for (const Bar& b : series.bars) {
            content += format_iso8601(b.timestamp);
            content += ',';
            content += format_price(b.open);
            content += ',';
            content += format_price(b.high);
            content += ',';
            content += format_price(b.low);
            content += ',';
            content += format_price(b.close);
            content += ',';
            content += std::to_string(b.volume);
            content += '\n';
        }
        fs::path full = fs::path(root_dir) / rel;
        std::ofstream f(full, std::ios::binary | std::ios::trunc);
        if (!f) raise(Errc::IoFailure, "cannot open " + full.string());
        f << content;
        f.close();
        if (!f) raise(Errc::IoFailure, "write failed for " + full.string());

        ManifestFile mf;
        mf.path = rel;
        mf.symbol = series.symbol;
        mf.granularity = series.granularity;
        mf.rows = series.bars.size();
        char hex[32];
        std::snprintf(hex, sizeof(hex), "fnv1a64:%016llx",
                      static_cast<unsigned long long>(fnv1a64(content)));
        mf.digest = hex;
        manifest.files.push_back(std::move(mf));
    }
    std::sort(manifest.files.begin(), manifest.files.end(),
              [](const ManifestFile& a, const ManifestFile& b) { return a.path < b.path; });

    std::ofstream mf(fs::path(root_dir) / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!mf) raise(Errc::IoFailure, "cannot write manifest.json under " + root_dir);
    mf << manifest.to_json() << '\n';
    return manifest;
}

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (key == k) known = true;
        if (!known) raise(Errc::ParseError, where + ": unknown key '" + key + "'");
    }
}

} // namespace

SynthJob synth_job_from_json(const std::string& text, const std::string& source) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        raise(Errc::ParseError, source + ": not a JSON object");
    reject_unknown_keys(j,
                        {"seed", "n_symbols", "bars_per_symbol", "granularity", "base_vol",
                         "market_beta_range", "links", "groups", "session_calendar", "emit"},
                        source);
    SynthJob job;
    SynthSpec& spec = job.spec;
    try {
        spec.seed = j.value("seed", std::uint64_t{1});
        spec.n_symbols = j.at("n_symbols").get<std::size_t>();
        spec.bars_per_symbol = j.at("bars_per_symbol").get<std::size_t>();
        spec.granularity = granularity_from_label(j.value("granularity", "1min"));
        spec.base_vol = j.value("base_vol", 0.001);
        if (j.contains("market_beta_range")) {
            const json& r = j["market_beta_range"];
            if (!r.is_array() || r.size() != 2)
                raise(Errc::ParseError, source + ": market_beta_range must be [lo, hi]");
            spec.market_beta_range = {r[0].get<double>(), r[1].get<double>()};
        }
        spec.session_calendar = j.value("session_calendar", false);
        for (const json& l : j.value("links", json::array())) {
            reject_unknown_keys(l, {"leader", "follower", "lag", "beta", "noise_ratio"},
                                source + ".links");
            PlantedLink link;
            link.leader = l.at("leader").get<std::size_t>();
            link.follower = l.at("follower").get<std::size_t>();
            link.lag = l.at("lag").get<std::size_t>();
            link.beta = l.at("beta").get<double>();
            link.noise_ratio = l.at("noise_ratio").get<double>();
            spec.links.push_back(link);
        }
        for (const json& g : j.value("groups", json::array())) {
            reject_unknown_keys(g, {"members", "loading"}, source + ".groups");
            CouplingGroup group;
            group.members = g.at("members").get<std::vector<std::size_t>>();
            group.loading = g.at("loading").get<double>();
            spec.groups.push_back(group);
        }
        for (const json& e : j.value("emit", json::array()))
            job.emit.push_back(granularity_from_label(e.get<std::string>()));
    } catch (const json::exception& e) {
        raise(Errc::ParseError, source + ": " + e.what());
    }
    if (job.emit.empty()) job.emit.push_back(spec.granularity);
    spec.validate();
    for (Granularity g : job.emit)
        if (bar_seconds(g) < bar_seconds(spec.granularity))
            raise(Errc::SpecDomain,
                  std::string("cannot emit ") + granularity_label(g) +
                      " from coarser base " + granularity_label(spec.granularity));
    return job;
}

SynthJob load_synth_job(const std::string& path) {
    std::string text;
    std::ifstream f(path, std::ios::binary);
    if (!f) raise(Errc::IoFailure, "cannot read synth spec " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return synth_job_from_json(ss.str(), path);
}

Manifest run_synth_job(const SynthJob& job, const std::string& out_root) {
    GenerateResult gen = generate(job.spec);
    std::vector<BarSeries> all;
    for (Granularity g : job.emit) {
        for (const BarSeries& s : gen.bars)
            all.push_back(g == job.spec.granularity ? s : resample(s, g));
    }
    Manifest manifest = write_fixture(all, out_root);

    json truth;
    truth["generator"] = gen.rng_id;
    truth["seed"] = job.spec.seed;
    truth["base_granularity"] = granularity_label(job.spec.granularity);
    truth["links"] = json::array();
    for (const LinkTruth& t : gen.truth) {
        truth["links"].push_back({{"leader", t.leader_symbol},
                                  {"follower", t.follower_symbol},
                                  {"lag", t.link.lag},
                                  {"beta", t.link.beta},
                                  {"noise_ratio", t.link.noise_ratio},
                                  {"population_ccf_peak", t.population_ccf_peak},
                                  {"population_r2", t.population_r2}});
    }
    std::ofstream tf(std::filesystem::path(out_root) / "truth.json",
                     std::ios::binary | std::ios::trunc);
    if (!tf) raise(Errc::IoFailure, "cannot write truth.json under " + out_root);
    tf << truth.dump(2) << '\n';
    return manifest;
}

std::string Manifest::to_json() const {
    nlohmann::json j;
    j["generator"] = generator;
    j["files"] = nlohmann::json::array();
    for (const ManifestFile& f : files) {
        j["files"].push_back({{"path", f.path},
                              {"symbol", f.symbol},
                              {"granularity", granularity_label(f.granularity)},
                              {"rows", f.rows},
                              {"digest", f.digest}});
    }
    return j.dump(2);
}

} // namespace leadlag
