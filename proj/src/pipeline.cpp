#include "pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <fcntl.h>
#include <signal.h>
#include <unistd.h>

#include <json.hpp>

#include "csv.hpp"
#include "lag.hpp"
#include "report.hpp"
#include "timeutil.hpp"

namespace leadlag {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json num_or_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

double num_from(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

// One pipeline per run directory; a stale lock from a dead process is stolen.
class RunLock {
  public:
    explicit RunLock(const fs::path& dir) : path_(dir / ".lock") {
        for (int attempt = 0; attempt < 3; ++attempt) {
            int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
            if (fd >= 0) {
                std::string pid = std::to_string(::getpid()) + "\n";
                ssize_t written = ::write(fd, pid.data(), pid.size());
                (void)written;
                ::close(fd);
                held_ = true;
                return;
            }
            std::string text;
            long pid = 0;
            if (read_file(path_.string(), text)) pid = std::strtol(text.c_str(), nullptr, 10);
            if (pid > 0 && ::kill(static_cast<pid_t>(pid), 0) == 0)
                raise(Errc::StateError, "run directory locked by live process " +
                                            std::to_string(pid) + " (" + path_.string() + ")");
            std::error_code ec;
            fs::remove(path_, ec);
        }
        raise(Errc::StateError, "cannot acquire run lock " + path_.string());
    }

    ~RunLock() {
        if (held_) {
            std::error_code ec;
            fs::remove(path_, ec);
        }
    }

    RunLock(const RunLock&) = delete;
    RunLock& operator=(const RunLock&) = delete;

  private:
    fs::path path_;
    bool held_ = false;
};

void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& fn) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    if (workers <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> g(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(std::min(workers, count));
    for (std::size_t w = 0; w < std::min(workers, count); ++w) pool.emplace_back(body);
    for (std::thread& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// checkpoint log: one JSON object per line, append-only. A truncated final
// line (killed mid-write) is dropped on load.
// ---------------------------------------------------------------------------

struct CheckpointState {
    std::map<std::string, json> begins;                         // stage -> begin record
    std::map<std::string, std::map<std::size_t, json>> records; // stage -> unit -> record
};

CheckpointState load_checkpoint(const fs::path& file) {
    CheckpointState state;
    std::string text;
    if (!read_file(file.string(), text)) return state;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json rec = json::parse(line, nullptr, false);
        if (rec.is_discarded()) break; // torn tail record
        std::string type = rec.value("type", "");
        if (type == "begin") {
            state.begins[rec.value("stage", "")] = rec;
        } else if (type == "s1" || type == "s2") {
            state.records[type][rec.at("i").get<std::size_t>()] = rec;
        }
    }
    return state;
}

class CheckpointWriter {
  public:
    explicit CheckpointWriter(const fs::path& file)
        : out_(file, std::ios::binary | std::ios::app) {
        if (!out_) raise(Errc::IoFailure, "cannot open checkpoint log " + file.string());
    }

    void append(const json& rec) { out_ << rec.dump() << '\n'; }
    void flush() { out_.flush(); }

  private:
    std::ofstream out_;
};

json load_meta(const fs::path& run_dir) {
    std::string text;
    if (!read_file((run_dir / "run_meta.json").string(), text)) return json::object();
    json j = json::parse(text, nullptr, false);
    return j.is_discarded() ? json::object() : j;
}

void save_meta(const fs::path& run_dir, const json& meta) {
    write_file((run_dir / "run_meta.json").string(), meta.dump(2) + "\n");
}

std::string now_iso() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    return format_iso8601(static_cast<std::int64_t>(t));
}

void ensure_run_dir(const fs::path& run_dir) {
    std::error_code ec;
    fs::create_directories(run_dir, ec);
    if (ec) raise(Errc::IoFailure, "cannot create " + run_dir.string() + ": " + ec.message());
}

std::string exclusions_csv(const IngestResult& ing) {
    std::string out = "symbol,reason,detail\n";
    for (const Exclusion& e : ing.exclusions) {
        std::string detail = e.detail;
        std::replace(detail.begin(), detail.end(), ',', ';');
        out += e.symbol + "," + e.reason + "," + detail + "\n";
    }
    return out;
}

std::vector<Granularity> intraday_granularities(const PipelineConfig& cfg) {
    std::vector<Granularity> out;
    for (Granularity g : {Granularity::Min1, Granularity::Min5, Granularity::Min15})
        if (std::find(cfg.granularities.begin(), cfg.granularities.end(), g) !=
            cfg.granularities.end())
            out.push_back(g);
    return out;
}

std::string error_tag(const Error& e) { return errc_name(e.code()); }

// ---------------------------------------------------------------------------
// stage-1 record serialization
// ---------------------------------------------------------------------------

json raw_to_json(std::size_t index, const RawCoupling& raw) {
    return json{{"type", "s1"},          {"i", index},
                {"a", raw.symbol_a},     {"b", raw.symbol_b},
                {"n", raw.n},            {"pearson", num_or_null(raw.pearson)},
                {"dtw", num_or_null(raw.dtw_distance)},
                {"tau", num_or_null(raw.kendall_tau)},
                {"skip", raw.skip_reason}};
}

RawCoupling raw_from_json(const json& rec) {
    RawCoupling raw;
    raw.symbol_a = rec.at("a").get<std::string>();
    raw.symbol_b = rec.at("b").get<std::string>();
    raw.n = rec.at("n").get<std::size_t>();
    raw.pearson = num_from(rec.at("pearson"));
    raw.dtw_distance = num_from(rec.at("dtw"));
    raw.kendall_tau = num_from(rec.at("tau"));
    raw.skip_reason = rec.at("skip").get<std::string>();
    return raw;
}

json row_to_json(std::size_t index, const Stage2Row& r) {
    return json{{"type", "s2"},
                {"i", index},
                {"leader", r.leader},
                {"follower", r.follower},
                {"gran", granularity_label(r.granularity)},
                {"lag", r.lag_bars},
                {"ccf", num_or_null(r.ccf_value)},
                {"ccf_sig", r.ccf_significant},
                {"gp", num_or_null(r.granger_p)},
                {"gpr", num_or_null(r.granger_p_reverse)},
                {"gorder", r.granger_order},
                {"confirmed", r.direction_confirmed},
                {"alpha", num_or_null(r.alpha)},
                {"beta", num_or_null(r.beta)},
                {"r2", num_or_null(r.r_squared)},
                {"beta_p", num_or_null(r.beta_t_pvalue)},
                {"beta_ext", num_or_null(r.beta_ext)},
                {"gamma", num_or_null(r.gamma_market)},
                {"delta", num_or_null(r.delta_autoreg)},
                {"r2_ext", num_or_null(r.r_squared_ext)},
                {"n", r.n},
                {"dropped", r.dropped_controls},
                {"skip", r.skip_reason}};
}

Stage2Row row_from_json(const json& rec) {
    Stage2Row r;
    r.leader = rec.at("leader").get<std::string>();
    r.follower = rec.at("follower").get<std::string>();
    r.granularity = granularity_from_label(rec.at("gran").get<std::string>());
    r.lag_bars = rec.at("lag").get<int>();
    r.ccf_value = num_from(rec.at("ccf"));
    r.ccf_significant = rec.at("ccf_sig").get<bool>();
    r.granger_p = num_from(rec.at("gp"));
    r.granger_p_reverse = num_from(rec.at("gpr"));
    r.granger_order = rec.at("gorder").get<std::size_t>();
    r.direction_confirmed = rec.at("confirmed").get<bool>();
    r.alpha = num_from(rec.at("alpha"));
    r.beta = num_from(rec.at("beta"));
    r.r_squared = num_from(rec.at("r2"));
    r.beta_t_pvalue = num_from(rec.at("beta_p"));
    r.beta_ext = num_from(rec.at("beta_ext"));
    r.gamma_market = num_from(rec.at("gamma"));
    r.delta_autoreg = num_from(rec.at("delta"));
    r.r_squared_ext = num_from(rec.at("r2_ext"));
    r.n = rec.at("n").get<std::size_t>();
    r.dropped_controls = rec.at("dropped").get<std::string>();
    r.skip_reason = rec.at("skip").get<std::string>();
    return r;
}

std::string stage1_csv(const std::vector<CouplingResult>& results) {
    std::string out = kStage1CsvHeader;
    out += '\n';
    for (const CouplingResult& r : results) {
        out += r.symbol_a + "," + r.symbol_b + "," + std::to_string(r.n) + ",";
        out += format_double(r.pearson) + "," + format_double(r.dtw_distance) + ",";
        out += format_double(r.dtw_normalized) + "," + format_double(r.kendall_tau) + ",";
        out += format_double(r.composite) + ",";
        out += r.evaluated() ? (r.passed ? "true" : "false") : "false";
        out += "," + r.skip_reason + "\n";
    }
    return out;
}

} // namespace

std::string run_directory(const PipelineConfig& cfg, const std::string& run_id) {
    return (fs::path(cfg.output_dir) / run_id).string();
}

ReturnSeries equal_weight_market(const std::vector<ReturnSeries>& universe,
                                 Granularity granularity) {
    std::map<std::int64_t, std::pair<double, std::size_t>> acc;
    for (const ReturnSeries& r : universe) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            auto& slot = acc[r.timestamps[i]];
            slot.first += r.values[i];
            slot.second += 1;
        }
    }
    ReturnSeries market;
    market.symbol = "__market__";
    market.granularity = granularity;
    market.kind = universe.empty() ? ReturnKind::Log : universe.front().kind;
    market.timestamps.reserve(acc.size());
    market.values.reserve(acc.size());
    for (const auto& [ts, slot] : acc) {
        market.timestamps.push_back(ts);
        market.values.push_back(slot.first / static_cast<double>(slot.second));
    }
    return market;
}

Stage2Row analyze_pair(const ReturnSeries& a, const ReturnSeries& b,
                       const ReturnSeries& market, const PipelineConfig& cfg) {
    Stage2Row row;
    row.leader = a.symbol;
    row.follower = b.symbol;
    row.granularity = a.granularity;

    AlignedPair pair;
    try {
        pair = align(a, b, cfg.min_obs_for(a.granularity));
    } catch (const Error& e) {
        row.skip_reason = error_tag(e);
        return row;
    }
    row.n = pair.n;

    const std::size_t L = cfg.max_lag_for(a.granularity);
    if (pair.n <= 3 * L) {
        row.skip_reason = "TooShortForLag";
        return row;
    }
    const double z = normal_quantile(1.0 - cfg.significance / 2.0);
    CcfCurve curve = ccf(pair, L, z);
    OptimalLag opt;
    try {
        opt = optimal_lag(curve);
    } catch (const Error& e) {
        row.skip_reason = error_tag(e);
        return row;
    }

    AlignedPair oriented;
    if (opt.lag >= 0) {
        oriented = pair;
        row.lag_bars = opt.lag;
    } else {
        oriented.a = pair.b;
        oriented.b = pair.a;
        oriented.n = pair.n;
        row.leader = b.symbol;
        row.follower = a.symbol;
        row.lag_bars = -opt.lag;
    }
    row.ccf_value = opt.value;
    row.ccf_significant = opt.significant;

    if (row.lag_bars < 1 || !opt.significant) return row;

    std::vector<std::string> notes;
    try {
        GrangerResult forward =
            granger_test(oriented, GrangerDirection::AtoB, cfg.granger_max_order);
        GrangerResult reverse =
            granger_test(oriented, GrangerDirection::BtoA, cfg.granger_max_order);
        row.granger_p = forward.f_test.p_value;
        row.granger_p_reverse = reverse.f_test.p_value;
        row.granger_order = forward.selected_order;
        row.direction_confirmed = forward.f_test.p_value < cfg.significance;
    } catch (const Error& e) {
        notes.push_back(std::string("granger:") + error_tag(e));
    }
    try {
        LagRegressionResult ext = extended_lag_regression(
            oriented, static_cast<std::size_t>(row.lag_bars), market,
            cfg.min_obs_for(a.granularity));
        row.alpha = ext.alpha;
        row.beta = ext.beta;
        row.r_squared = ext.r_squared;
        row.beta_t_pvalue = ext.beta_t_pvalue;
        if (ext.extended) {
            row.beta_ext = ext.extended->beta_ext;
            row.gamma_market = ext.extended->gamma_market;
            row.delta_autoreg = ext.extended->delta_autoreg;
            row.r_squared_ext = ext.extended->r_squared_ext;
            std::string joined;
            for (const std::string& d : ext.extended->dropped_columns) {
                if (!joined.empty()) joined += ';';
                joined += d;
            }
            row.dropped_controls = joined;
        }
    } catch (const Error& e) {
        notes.push_back(std::string("regression:") + error_tag(e));
    }
    if (!notes.empty()) {
        std::string joined;
        for (const std::string& s : notes) {
            if (!joined.empty()) joined += ';';
            joined += s;
        }
        row.skip_reason = joined;
    }
    return row;
}

// ---------------------------------------------------------------------------
// stage 1
// ---------------------------------------------------------------------------

RunStatus run_stage1(const PipelineConfig& cfg, const StageOptions& opts) {
    cfg.validate();
    const fs::path run_dir = run_directory(cfg, opts.run_id);
    ensure_run_dir(run_dir);
    RunLock lock(run_dir);
    json meta = load_meta(run_dir);
    meta["run_id"] = opts.run_id;
    meta["code_version"] = "0.1.0";
    meta["config_digest"] = cfg.digest();
    meta["config_echo"] = cfg.canonical_text();
    if (!meta.contains("created_at")) meta["created_at"] = now_iso();

    const auto t0 = std::chrono::steady_clock::now();
    UniverseFilters filters{cfg.min_listing_epoch_day(), cfg.max_halt_run};
    IngestResult ing = ingest(cfg.data_root, Granularity::Daily, filters);
    write_file((run_dir / "exclusions_daily.csv").string(), exclusions_csv(ing));

    std::vector<ReturnSeries> universe;
    universe.reserve(ing.series.size());
    for (const BarSeries& s : ing.series)
        universe.push_back(compute_returns(s, cfg.return_kind, cfg.drop_session_boundary));

    std::vector<std::pair<std::size_t, std::size_t>> units;
    for (std::size_t i = 0; i < universe.size(); ++i)
        for (std::size_t j = i + 1; j < universe.size(); ++j) units.emplace_back(i, j);

    const fs::path ckpt = run_dir / "checkpoint.log";
    CheckpointState state = load_checkpoint(ckpt);
    if (state.begins.count("s1")) {
        if (!opts.resume)
            raise(Errc::StateError,
                  "run '" + opts.run_id + "' already has stage1 state; pass resume "
                  "or use a fresh run id");
        const json& begin = state.begins["s1"];
        if (begin.value("config_digest", "") != cfg.digest())
            raise(Errc::StateError,
                  "config digest mismatch: checkpoint was written by a different "
                  "configuration; refusing to resume");
        if (begin.value("units", std::size_t{0}) != units.size())
            raise(Errc::StateError, "checkpoint unit count does not match the data");
    }

    CheckpointWriter writer(ckpt);
    if (!state.begins.count("s1")) {
        writer.append({{"type", "begin"},
                       {"stage", "s1"},
                       {"config_digest", cfg.digest()},
                       {"units", units.size()}});
        writer.flush();
    }

    std::vector<RawCoupling> raws(units.size());
    std::vector<bool> done(units.size(), false);
    for (const auto& [idx, rec] : state.records["s1"]) {
        if (idx >= units.size()) continue;
        raws[idx] = raw_from_json(rec);
        done[idx] = true;
    }
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < units.size(); ++i)
        if (!done[i]) todo.push_back(i);

    std::size_t budget = opts.max_units < 0 ? todo.size()
                                            : std::min<std::size_t>(todo.size(),
                                                                    static_cast<std::size_t>(opts.max_units));
    std::size_t pos = 0;
    while (pos < budget) {
        std::size_t chunk = std::min(cfg.checkpoint_batch, budget - pos);
        parallel_for(chunk, cfg.workers, [&](std::size_t k) {
            std::size_t idx = todo[pos + k];
            const auto& [i, j] = units[idx];
            raws[idx] = evaluate_pair(universe[i], universe[j],
                                      DtwBand::fraction(cfg.dtw_band_fraction),
                                      cfg.min_obs_daily);
        });
        for (std::size_t k = 0; k < chunk; ++k)
            writer.append(raw_to_json(todo[pos + k], raws[todo[pos + k]]));
        writer.flush();
        pos += chunk;
    }

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (pos < todo.size()) {
        meta["stage1"] = {{"complete", false},
                          {"units", units.size()},
                          {"completed_units", units.size() - (todo.size() - pos)},
                          {"timing_seconds", seconds}};
        save_meta(run_dir, meta);
        return RunStatus::Partial;
    }

    ScreenOutcome outcome =
        finalize_screen(raws, cfg.weights, cfg.coupling_threshold);
    write_file((run_dir / "stage1.csv").string(), stage1_csv(outcome.results));

    json passed = json::array();
    {
        std::vector<std::pair<std::string, std::string>> pairs;
        for (const CouplingResult& r : outcome.results)
            if (r.evaluated() && r.passed) pairs.emplace_back(r.symbol_a, r.symbol_b);
        std::sort(pairs.begin(), pairs.end());
        for (const auto& [a, b] : pairs) passed.push_back(json::array({a, b}));
    }
    meta["stage1"] = {{"complete", true},
                      {"units", units.size()},
                      {"universe_size", universe.size()},
                      {"excluded", ing.exclusions.size()},
                      {"dtw_max", outcome.dtw_max},
                      {"passed", passed},
                      {"passed_count", passed.size()},
                      {"timing_seconds", seconds}};
    json warnings = json::array();
    for (const std::string& w : ing.warnings) warnings.push_back(w);
    meta["stage1"]["warnings"] = warnings;
    save_meta(run_dir, meta);
    return RunStatus::Complete;
}

// ---------------------------------------------------------------------------
// stage 2
// ---------------------------------------------------------------------------

namespace {

struct GranularityData {
    std::map<std::string, ReturnSeries> returns;
    ReturnSeries market;
};

GranularityData load_granularity(const PipelineConfig& cfg, Granularity g,
                                 const fs::path& run_dir) {
    UniverseFilters filters{cfg.min_listing_epoch_day(), cfg.max_halt_run};
    IngestResult ing = ingest(cfg.data_root, g, filters);
    write_file((run_dir / (std::string("exclusions_") + granularity_label(g) + ".csv")).string(),
               exclusions_csv(ing));
    GranularityData data;
    std::vector<ReturnSeries> universe;
    universe.reserve(ing.series.size());
    for (const BarSeries& s : ing.series)
        universe.push_back(compute_returns(s, cfg.return_kind, cfg.drop_session_boundary));
    if (cfg.market_mode == MarketMode::EqualWeight) {
        data.market = equal_weight_market(universe, g);
    } else {
        BarSeries index_bars;
        std::string path = cfg.market_index_path;
        std::string text;
        if (!read_file(path, text))
            raise(Errc::IoFailure, "cannot read market index file " + path);
        // Reuse the fixture format for index files.
        std::istringstream in(text);
        std::string line;
        std::size_t line_no = 0;
        index_bars.symbol = "__index__";
        index_bars.granularity = g;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line_no == 1) continue;
            std::vector<std::string> f = split_csv_line(line);
            if (f.size() != 6)
                raise(Errc::MalformedRow, path + ":" + std::to_string(line_no));
            Bar bar;
            bar.timestamp = parse_iso8601(f[0]);
            bar.open = std::strtod(f[1].c_str(), nullptr);
            bar.high = std::strtod(f[2].c_str(), nullptr);
            bar.low = std::strtod(f[3].c_str(), nullptr);
            bar.close = std::strtod(f[4].c_str(), nullptr);
            bar.volume = std::strtoll(f[5].c_str(), nullptr, 10);
            index_bars.bars.push_back(bar);
        }
        index_bars.validate(path);
        data.market = compute_returns(index_bars, cfg.return_kind, cfg.drop_session_boundary);
    }
    for (ReturnSeries& r : universe) data.returns.emplace(r.symbol, std::move(r));
    return data;
}

} // namespace

RunStatus run_stage2(const PipelineConfig& cfg, const StageOptions& opts) {
    cfg.validate();
    const fs::path run_dir = run_directory(cfg, opts.run_id);
    ensure_run_dir(run_dir);
    RunLock lock(run_dir);
    json meta = load_meta(run_dir);
    if (!meta.contains("stage1") || !meta["stage1"].value("complete", false))
        raise(Errc::StateError,
              "stage1 has not completed for run '" + opts.run_id + "'; run stage1 first");
    if (meta.value("config_digest", "") != cfg.digest())
        raise(Errc::StateError,
              "config digest mismatch against this run's stage1; refusing stage2");

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::pair<std::string, std::string>> passed;
    for (const json& p : meta["stage1"]["passed"])
        passed.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    std::sort(passed.begin(), passed.end());

    const std::vector<Granularity> grans = intraday_granularities(cfg);
    struct Unit {
        Granularity g;
        std::size_t pair_index;
    };
    std::vector<Unit> units;
    for (Granularity g : grans)
        for (std::size_t p = 0; p < passed.size(); ++p) units.push_back({g, p});

    const fs::path ckpt = run_dir / "checkpoint.log";
    CheckpointState state = load_checkpoint(ckpt);
    if (state.begins.count("s2")) {
        if (!opts.resume)
            raise(Errc::StateError,
                  "run '" + opts.run_id + "' already has stage2 state; pass resume "
                  "or use a fresh run id");
        const json& begin = state.begins["s2"];
        if (begin.value("config_digest", "") != cfg.digest())
            raise(Errc::StateError,
                  "config digest mismatch: checkpoint was written by a different "
                  "configuration; refusing to resume");
        if (begin.value("units", std::size_t{0}) != units.size())
            raise(Errc::StateError, "checkpoint unit count does not match stage1 output");
    }
    CheckpointWriter writer(ckpt);
    if (!state.begins.count("s2")) {
        writer.append({{"type", "begin"},
                       {"stage", "s2"},
                       {"config_digest", cfg.digest()},
                       {"units", units.size()}});
        writer.flush();
    }

    std::vector<Stage2Row> rows(units.size());
    std::vector<bool> done(units.size(), false);
    for (const auto& [idx, rec] : state.records["s2"]) {
        if (idx >= units.size()) continue;
        rows[idx] = row_from_json(rec);
        done[idx] = true;
    }
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < units.size(); ++i)
        if (!done[i]) todo.push_back(i);

    // Load only granularities that still have pending work.
    std::map<Granularity, GranularityData> data;
    for (std::size_t idx : todo)
        if (!data.count(units[idx].g))
            data.emplace(units[idx].g, load_granularity(cfg, units[idx].g, run_dir));

    std::size_t budget = opts.max_units < 0 ? todo.size()
                                            : std::min<std::size_t>(todo.size(),
                                                                    static_cast<std::size_t>(opts.max_units));
    std::size_t pos = 0;
    while (pos < budget) {
        std::size_t chunk = std::min(cfg.checkpoint_batch, budget - pos);
        parallel_for(chunk, cfg.workers, [&](std::size_t k) {
            std::size_t idx = todo[pos + k];
            const Unit& unit = units[idx];
            const auto& [sym_a, sym_b] = passed[unit.pair_index];
            const GranularityData& gd = data.at(unit.g);
            auto ita = gd.returns.find(sym_a);
            auto itb = gd.returns.find(sym_b);
            if (ita == gd.returns.end() || itb == gd.returns.end()) {
                Stage2Row row;
                row.leader = sym_a;
                row.follower = sym_b;
                row.granularity = unit.g;
                row.skip_reason = "missing_at_granularity";
                rows[idx] = row;
                return;
            }
            rows[idx] = analyze_pair(ita->second, itb->second, gd.market, cfg);
        });
        for (std::size_t k = 0; k < chunk; ++k)
            writer.append(row_to_json(todo[pos + k], rows[todo[pos + k]]));
        writer.flush();
        pos += chunk;
    }

    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (pos < todo.size()) {
        meta["stage2"] = {{"complete", false},
                          {"units", units.size()},
                          {"completed_units", units.size() - (todo.size() - pos)},
                          {"timing_seconds", seconds}};
        save_meta(run_dir, meta);
        return RunStatus::Partial;
    }

    std::size_t tested = 0;
    for (const Stage2Row& r : rows)
        if (!std::isnan(r.granger_p)) ++tested;
    const double bonferroni = cfg.significance / static_cast<double>(std::max<std::size_t>(tested, 1));
    for (Stage2Row& r : rows) r.bonferroni_threshold = bonferroni;

    sort_and_rank_rows(rows);
    std::string csv = kStage2CsvHeader;
    csv += '\n';
    for (const Stage2Row& r : rows) {
        csv += stage2_csv_row(r);
        csv += '\n';
    }
    write_file((run_dir / "stage2.csv").string(), csv);

    json analyzed = json::array();
    for (const Unit& u : units)
        analyzed.push_back(json::array({passed[u.pair_index].first,
                                        passed[u.pair_index].second,
                                        granularity_label(u.g)}));
    meta["stage2"] = {{"complete", true},
                      {"units", units.size()},
                      {"analyzed", analyzed},
                      {"rows", rows.size()},
                      {"bonferroni_threshold", bonferroni},
                      {"timing_seconds", seconds}};
    save_meta(run_dir, meta);
    return RunStatus::Complete;
}

// ---------------------------------------------------------------------------
// reports and plots
// ---------------------------------------------------------------------------

namespace {

std::vector<Stage2Row> load_stage2_rows(const fs::path& run_dir) {
    std::string text;
    if (!read_file((run_dir / "stage2.csv").string(), text))
        raise(Errc::StateError, "stage2.csv not found; run stage2 first");
    std::vector<Stage2Row> rows;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line_no == 1) continue;
        rows.push_back(stage2_row_from_csv(split_csv_line(line)));
    }
    return rows;
}

} // namespace

void write_reports(const PipelineConfig& cfg, const std::string& run_id) {
    const fs::path run_dir = run_directory(cfg, run_id);
    json meta = load_meta(run_dir);
    if (!meta.contains("stage2") || !meta["stage2"].value("complete", false))
        raise(Errc::StateError, "stage2 has not completed for run '" + run_id + "'");
    std::vector<Stage2Row> rows = load_stage2_rows(run_dir);

    write_file((run_dir / "ranking.csv").string(), ranking_csv(rows));
    write_file((run_dir / "granularity_summary.csv").string(),
               granularity_summary_csv(rows));

    std::string cascade_csv =
        "granularity,path,edges,cumulative_lag_bars,cumulative_lag\n";
    json cycles = json::array();
    for (Granularity g :
         {Granularity::Min1, Granularity::Min5, Granularity::Min15, Granularity::Daily}) {
        std::vector<Stage2Row> sub;
        for (const Stage2Row& r : rows)
            if (r.granularity == g) sub.push_back(r);
        if (sub.empty()) continue;
        CascadeReport report = detect_cascades(sub);
        for (const CascadeChain& chain : report.chains) {
            cascade_csv += granularity_label(g);
            cascade_csv += ',';
            cascade_csv += chain.path_string();
            cascade_csv += ',';
            cascade_csv += std::to_string(chain.symbols.size() - 1);
            cascade_csv += ',';
            cascade_csv += std::to_string(chain.cumulative_lag);
            cascade_csv += ',';
            cascade_csv += format_lag(chain.cumulative_lag, g);
            cascade_csv += '\n';
        }
        for (const std::string& e : report.cycle_edges)
            cycles.push_back(std::string(granularity_label(g)) + ":" + e);
    }
    write_file((run_dir / "cascades.csv").string(), cascade_csv);

    json report_meta = {{"cascade_cycles", cycles}};
    if (!cfg.industry_map.empty()) {
        std::vector<std::string> warnings;
        std::vector<IndustryRow> industry = industry_report(rows, cfg.industry_map, warnings);
        std::string csv = "relationship,within,frequency,mean_abs_ccf\n";
        for (const IndustryRow& r : industry) {
            csv += r.label + "," + (r.within ? "true" : "false") + "," +
                   std::to_string(r.frequency) + "," + format_double(r.mean_abs_ccf) + "\n";
        }
        write_file((run_dir / "industry.csv").string(), csv);
        json w = json::array();
        for (const std::string& s : warnings) w.push_back(s);
        report_meta["industry_warnings"] = w;
    }
    meta["reports"] = report_meta;
    save_meta(run_dir, meta);
}

std::vector<std::string> emit_plots(const PipelineConfig& cfg,
                                    const std::string& run_id,
                                    const PlotSelection& selection) {
    const fs::path run_dir = run_directory(cfg, run_id);
    std::vector<Stage2Row> all_rows = load_stage2_rows(run_dir);

    std::vector<Stage2Row> selected;
    for (const Stage2Row& r : all_rows) {
        if (!r.skip_reason.empty() || r.lag_bars < 1) continue;
        if (selection.granularity && r.granularity != *selection.granularity) continue;
        if (selection.pair) {
            if (r.leader != selection.pair->first || r.follower != selection.pair->second)
                continue;
        }
        selected.push_back(r);
        if (!selection.pair && selected.size() >= selection.top_n) break;
    }
    if (selected.empty())
        raise(Errc::StateError, "no analyzed rows match the plot selection");

    fs::path plot_dir = run_dir / "plots";
    std::error_code ec;
    fs::create_directories(plot_dir, ec);
    if (ec) raise(Errc::IoFailure, "cannot create " + plot_dir.string());

    std::map<Granularity, GranularityData> data;
    std::vector<std::string> written;
    const double z = normal_quantile(1.0 - cfg.significance / 2.0);
    for (const Stage2Row& row : selected) {
        if (!data.count(row.granularity))
            data.emplace(row.granularity, load_granularity(cfg, row.granularity, run_dir));
        const GranularityData& gd = data.at(row.granularity);
        auto ita = gd.returns.find(row.leader);
        auto itb = gd.returns.find(row.follower);
        if (ita == gd.returns.end() || itb == gd.returns.end())
            raise(Errc::StateError, "series for " + row.leader + "/" + row.follower +
                                        " missing at " + granularity_label(row.granularity));
        AlignedPair pair =
            align(ita->second, itb->second, cfg.min_obs_for(row.granularity));
        const std::string stem = row.leader + "_" + row.follower + "_" +
                                 granularity_label(row.granularity) + "_";

        // ccf.csv
        {
            CcfCurve curve = ccf(pair, cfg.max_lag_for(row.granularity), z);
            std::string csv = "lag,ccf,band\n";
            for (std::size_t i = 0; i < curve.lags.size(); ++i) {
                csv += std::to_string(curve.lags[i]) + "," +
                       format_double_exact(curve.values[i]) + "," +
                       format_double_exact(curve.significance_band) + "\n";
            }
            std::string path = (plot_dir / (stem + "ccf.csv")).string();
            write_file(path, csv);
            written.push_back(path);
        }
        // prices.csv: z-scored cumulative returns
        {
            auto zcum = [](const ReturnSeries& r) {
                ReturnSeries cum = r;
                double acc = 0.0;
                for (double& v : cum.values) {
                    acc += v;
                    v = acc;
                }
                try {
                    return zscore_normalize(cum).values;
                } catch (const Error&) {
                    return cum.values; // constant path; emit unscaled
                }
            };
            std::vector<double> za = zcum(pair.a);
            std::vector<double> zb = zcum(pair.b);
            std::string csv = "timestamp,leader,follower\n";
            for (std::size_t i = 0; i < pair.n; ++i) {
                csv += format_iso8601(pair.a.timestamps[i]) + "," +
                       format_double_exact(za[i]) + "," + format_double_exact(zb[i]) + "\n";
            }
            std::string path = (plot_dir / (stem + "prices.csv")).string();
            write_file(path, csv);
            written.push_back(path);
        }
        // scatter.csv: leader lagged vs follower, n - lag rows
        const auto lag = static_cast<std::size_t>(row.lag_bars);
        {
            std::string csv = "leader_lagged_return,follower_return\n";
            for (std::size_t t = lag; t < pair.n; ++t) {
                csv += format_double_exact(pair.a.values[t - lag]) + "," +
                       format_double_exact(pair.b.values[t]) + "\n";
            }
            std::string path = (plot_dir / (stem + "scatter.csv")).string();
            write_file(path, csv);
            written.push_back(path);
        }
        // rolling.csv: trimmed series plus rolling correlation
        {
            std::size_t m = pair.n - lag;
            std::vector<double> lead(m), foll(m);
            for (std::size_t t = lag; t < pair.n; ++t) {
                lead[t - lag] = pair.a.values[t - lag];
                foll[t - lag] = pair.b.values[t];
            }
            std::string csv = "timestamp,leader_lagged_return,follower_return,rolling_corr\n";
            const std::size_t w = cfg.rolling_window;
            for (std::size_t i = 0; i < m; ++i) {
                csv += format_iso8601(pair.b.timestamps[lag + i]) + "," +
                       format_double_exact(lead[i]) + "," + format_double_exact(foll[i]) + ",";
                if (w >= 3 && w <= m && i + 1 >= w) {
                    double r = pearson_raw(lead.data() + (i + 1 - w),
                                           foll.data() + (i + 1 - w), w);
                    csv += format_double_exact(r); // empty when NaN
                }
                csv += '\n';
            }
            std::string path = (plot_dir / (stem + "rolling.csv")).string();
            write_file(path, csv);
            written.push_back(path);
        }
    }
    return written;
}

std::string ingest_report_json(const PipelineConfig& cfg, Granularity granularity) {
    UniverseFilters filters{cfg.min_listing_epoch_day(), cfg.max_halt_run};
    IngestResult ing = ingest(cfg.data_root, granularity, filters);
    json j;
    j["granularity"] = granularity_label(granularity);
    j["ingested"] = json::array();
    for (const BarSeries& s : ing.series)
        j["ingested"].push_back({{"symbol", s.symbol}, {"bars", s.bars.size()}});
    j["excluded"] = json::array();
    for (const Exclusion& e : ing.exclusions)
        j["excluded"].push_back(
            {{"symbol", e.symbol}, {"reason", e.reason}, {"detail", e.detail}});
    j["diagnostics"] = json::array();
    for (const Diagnostic& d : ing.diagnostics)
        j["diagnostics"].push_back(
            {{"file", d.file}, {"line", d.line}, {"message", d.message}});
    j["warnings"] = json::array();
    for (const std::string& w : ing.warnings) j["warnings"].push_back(w);
    return j.dump(2);
}

} // namespace leadlag
