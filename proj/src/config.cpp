#include "config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "csv.hpp"
#include "synth.hpp" // fnv1a64
#include "timeutil.hpp"

namespace leadlag {

std::size_t PipelineConfig::max_lag_for(Granularity g) const {
    switch (g) {
        case Granularity::Min1: return max_lag_1min;
        case Granularity::Min5: return max_lag_5min;
        case Granularity::Min15: return max_lag_15min;
        case Granularity::Daily: return max_lag_daily;
    }
    return max_lag_daily;
}

std::size_t PipelineConfig::min_obs_for(Granularity g) const {
    return g == Granularity::Daily ? min_obs_daily : min_obs_intraday;
}

std::int64_t PipelineConfig::min_listing_epoch_day() const {
    return epoch_day(parse_iso8601(min_listing_date));
}

namespace {

[[noreturn]] void bad_key(const std::string& path, const std::string& why) {
    raise(Errc::DomainError, path + ": " + why);
}

struct RawValue {
    std::string text; // trimmed raw token(s)
    std::string path; // section.key for diagnostics

    bool is_quoted() const {
        return text.size() >= 2 && text.front() == '"' && text.back() == '"';
    }
    std::string as_string() const {
        if (!is_quoted()) bad_key(path, "expected a quoted string");
        return text.substr(1, text.size() - 2);
    }
    bool as_bool() const {
        if (text == "true") return true;
        if (text == "false") return false;
        bad_key(path, "expected true or false");
    }
    double as_number() const {
        char* end = nullptr;
        double v = std::strtod(text.c_str(), &end);
        if (end != text.c_str() + text.size() || text.empty())
            bad_key(path, "expected a number");
        return v;
    }
    std::size_t as_count(std::size_t lo, std::size_t hi) const {
        double v = as_number();
        if (v < 0 || v != std::floor(v)) bad_key(path, "expected a non-negative integer");
        auto n = static_cast<std::size_t>(v);
        if (n < lo || n > hi)
            bad_key(path, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        return n;
    }
    std::vector<std::string> as_string_array() const {
        if (text.size() < 2 || text.front() != '[' || text.back() != ']')
            bad_key(path, "expected an array");
        std::vector<std::string> out;
        std::string inner = text.substr(1, text.size() - 2);
        std::string cur;
        bool in_quote = false;
        auto flush = [&]() {
            // trim
            std::size_t b = cur.find_first_not_of(" \t");
            std::size_t e = cur.find_last_not_of(" \t");
            std::string item = b == std::string::npos ? "" : cur.substr(b, e - b + 1);
            if (!item.empty()) {
                if (item.size() < 2 || item.front() != '"' || item.back() != '"')
                    bad_key(path, "array items must be quoted strings");
                out.push_back(item.substr(1, item.size() - 2));
            }
            cur.clear();
        };
        for (char c : inner) {
            if (c == '"') in_quote = !in_quote;
            if (c == ',' && !in_quote) {
                flush();
            } else {
                cur += c;
            }
        }
        flush();
        return out;
    }
};

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

PipelineConfig parse_config(const std::string& text, const std::string& source) {
    PipelineConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    bool saw_weight = false;
    while (std::getline(in, line)) {
        ++line_no;
        // strip comments outside quotes
        std::string stripped;
        bool in_quote = false;
        for (char c : line) {
            if (c == '"') in_quote = !in_quote;
            if (c == '#' && !in_quote) break;
            stripped += c;
        }
        stripped = trim(stripped);
        if (stripped.empty()) continue;
        if (stripped.front() == '[') {
            if (stripped.back() != ']')
                raise(Errc::ParseError, source + ":" + std::to_string(line_no) +
                                            ": unterminated section header");
            section = trim(stripped.substr(1, stripped.size() - 2));
            if (section != "data" && section != "universe" && section != "coupling" &&
                section != "lag" && section != "run")
                bad_key(section, "unknown section");
            continue;
        }
        std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            raise(Errc::ParseError,
                  source + ":" + std::to_string(line_no) + ": expected key = value");
        std::string key = trim(stripped.substr(0, eq));
        RawValue v{trim(stripped.substr(eq + 1)), section + "." + key};
        if (section.empty()) bad_key(key, "key outside any [section]");

        if (section == "data") {
            if (key == "root") {
                cfg.data_root = v.as_string();
            } else if (key == "granularities") {
                cfg.granularities.clear();
                for (const std::string& label : v.as_string_array())
                    cfg.granularities.push_back(granularity_from_label(label));
            } else if (key == "return_kind") {
                std::string k = v.as_string();
                if (k == "log")
                    cfg.return_kind = ReturnKind::Log;
                else if (k == "simple")
                    cfg.return_kind = ReturnKind::Simple;
                else
                    bad_key(v.path, "must be \"log\" or \"simple\"");
            } else if (key == "drop_session_boundary") {
                cfg.drop_session_boundary = v.as_bool();
            } else if (key == "min_obs_intraday") {
                cfg.min_obs_intraday = v.as_count(4, 1000000);
            } else if (key == "min_obs_daily") {
                cfg.min_obs_daily = v.as_count(4, 1000000);
            } else {
                bad_key(v.path, "unknown key");
            }
        } else if (section == "universe") {
            if (key == "min_listing_date") {
                cfg.min_listing_date = v.as_string();
            } else if (key == "max_halt_run") {
                cfg.max_halt_run = v.as_count(1, 100000);
            } else if (key == "industry_map") {
                cfg.industry_map = v.as_string();
            } else {
                bad_key(v.path, "unknown key");
            }
        } else if (section == "coupling") {
            if (key == "w_pearson") {
                cfg.weights.w_pearson = v.as_number();
                saw_weight = true;
            } else if (key == "w_dtw") {
                cfg.weights.w_dtw = v.as_number();
                saw_weight = true;
            } else if (key == "w_tau") {
                cfg.weights.w_tau = v.as_number();
                saw_weight = true;
            } else if (key == "threshold") {
                cfg.coupling_threshold = v.as_number();
                if (cfg.coupling_threshold < -1.0 || cfg.coupling_threshold > 1.0)
                    bad_key(v.path, "must be in [-1, 1]");
            } else if (key == "dtw_band_fraction") {
                cfg.dtw_band_fraction = v.as_number();
                if (cfg.dtw_band_fraction < 0.0 || cfg.dtw_band_fraction > 1.0)
                    bad_key(v.path, "must be in [0, 1]");
            } else {
                bad_key(v.path, "unknown key");
            }
        } else if (section == "lag") {
            if (key == "max_lag_1min") {
                cfg.max_lag_1min = v.as_count(1, 10000);
            } else if (key == "max_lag_5min") {
                cfg.max_lag_5min = v.as_count(1, 10000);
            } else if (key == "max_lag_15min") {
                cfg.max_lag_15min = v.as_count(1, 10000);
            } else if (key == "max_lag_daily") {
                cfg.max_lag_daily = v.as_count(1, 10000);
            } else if (key == "granger_max_order") {
                cfg.granger_max_order = v.as_count(1, 50);
            } else if (key == "significance") {
                cfg.significance = v.as_number();
                if (!(cfg.significance > 0.0 && cfg.significance < 1.0))
                    bad_key(v.path, "must be in (0, 1)");
            } else if (key == "market_mode") {
                std::string m = v.as_string();
                if (m == "equal_weight") {
                    cfg.market_mode = MarketMode::EqualWeight;
                    cfg.market_index_path.clear();
                } else if (m.rfind("index:", 0) == 0) {
                    cfg.market_mode = MarketMode::IndexFile;
                    cfg.market_index_path = m.substr(6);
                    if (cfg.market_index_path.empty())
                        bad_key(v.path, "index mode needs a path: \"index:<path>\"");
                } else {
                    bad_key(v.path, "must be \"equal_weight\" or \"index:<path>\"");
                }
            } else if (key == "rolling_window") {
                cfg.rolling_window = v.as_count(3, 1000000);
            } else {
                bad_key(v.path, "unknown key");
            }
        } else if (section == "run") {
            if (key == "output_dir") {
                cfg.output_dir = v.as_string();
            } else if (key == "workers") {
                cfg.workers = v.as_count(0, 256);
            } else if (key == "checkpoint_batch") {
                cfg.checkpoint_batch = v.as_count(1, 1000000);
            } else {
                bad_key(v.path, "unknown key");
            }
        }
    }
    (void)saw_weight;
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    std::string text;
    if (!read_file(path, text))
        raise(Errc::IoFailure, "cannot read config file " + path);
    return parse_config(text, path);
}

void PipelineConfig::validate() const {
    if (data_root.empty()) raise(Errc::DomainError, "data.root: required");
    if (granularities.empty()) raise(Errc::DomainError, "data.granularities: empty");
    for (std::size_t i = 0; i < granularities.size(); ++i)
        for (std::size_t j = i + 1; j < granularities.size(); ++j)
            if (granularities[i] == granularities[j])
                raise(Errc::DomainError, "data.granularities: duplicate entry");
    if (std::find(granularities.begin(), granularities.end(), Granularity::Daily) ==
        granularities.end())
        raise(Errc::DomainError,
              "data.granularities: must include \"daily\" (Stage 1 screens daily data)");
    try {
        (void)min_listing_epoch_day();
    } catch (const Error&) {
        raise(Errc::DomainError, "universe.min_listing_date: not a YYYY-MM-DD date");
    }
    try {
        weights.validate();
    } catch (const Error& e) {
        raise(Errc::DomainError, std::string("coupling.w_pearson/w_dtw/w_tau: ") + e.what());
    }
    if (market_mode == MarketMode::IndexFile && market_index_path.empty())
        raise(Errc::DomainError, "lag.market_mode: index mode needs a path");
    if (output_dir.empty()) raise(Errc::DomainError, "run.output_dir: required");
}

namespace {

void write_analysis_sections(std::ostringstream& out, const PipelineConfig& cfg);

} // namespace

std::string PipelineConfig::canonical_text() const {
    std::ostringstream out;
    write_analysis_sections(out, *this);
    out << "\n[run]\n";
    out << "output_dir = \"" << output_dir << "\"\n";
    out << "workers = " << workers << "\n";
    out << "checkpoint_batch = " << checkpoint_batch << "\n";
    return out.str();
}

std::string PipelineConfig::digest() const {
    // Execution knobs ([run]) are excluded: worker count and batch size must
    // not invalidate a checkpoint, since they cannot change results.
    std::ostringstream out;
    write_analysis_sections(out, *this);
    char hex[24];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(out.str())));
    return hex;
}

namespace {

void write_analysis_sections(std::ostringstream& out, const PipelineConfig& cfg) {
    const auto& granularities = cfg.granularities;
    const auto& weights = cfg.weights;
    out << "[data]\n";
    out << "root = \"" << cfg.data_root << "\"\n";
    out << "granularities = [";
    for (std::size_t i = 0; i < granularities.size(); ++i)
        out << (i ? ", " : "") << '"' << granularity_label(granularities[i]) << '"';
    out << "]\n";
    out << "return_kind = \"" << (cfg.return_kind == ReturnKind::Log ? "log" : "simple")
        << "\"\n";
    out << "drop_session_boundary = " << (cfg.drop_session_boundary ? "true" : "false")
        << "\n";
    out << "min_obs_intraday = " << cfg.min_obs_intraday << "\n";
    out << "min_obs_daily = " << cfg.min_obs_daily << "\n";
    out << "\n[universe]\n";
    out << "min_listing_date = \"" << cfg.min_listing_date << "\"\n";
    out << "max_halt_run = " << cfg.max_halt_run << "\n";
    out << "industry_map = \"" << cfg.industry_map << "\"\n";
    out << "\n[coupling]\n";
    out << "w_pearson = " << format_double(weights.w_pearson) << "\n";
    out << "w_dtw = " << format_double(weights.w_dtw) << "\n";
    out << "w_tau = " << format_double(weights.w_tau) << "\n";
    out << "threshold = " << format_double(cfg.coupling_threshold) << "\n";
    out << "dtw_band_fraction = " << format_double(cfg.dtw_band_fraction) << "\n";
    out << "\n[lag]\n";
    out << "max_lag_1min = " << cfg.max_lag_1min << "\n";
    out << "max_lag_5min = " << cfg.max_lag_5min << "\n";
    out << "max_lag_15min = " << cfg.max_lag_15min << "\n";
    out << "max_lag_daily = " << cfg.max_lag_daily << "\n";
    out << "granger_max_order = " << cfg.granger_max_order << "\n";
    out << "significance = " << format_double(cfg.significance) << "\n";
    out << "market_mode = \""
        << (cfg.market_mode == MarketMode::EqualWeight
                ? std::string("equal_weight")
                : "index:" + cfg.market_index_path)
        << "\"\n";
    out << "rolling_window = " << cfg.rolling_window << "\n";
}

} // namespace

} // namespace leadlag
