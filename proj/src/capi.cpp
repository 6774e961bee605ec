#include "leadlag/leadlag.h"

#include <cstring>
#include <exception>
#include <string>

#include "config.hpp"
#include "coupling.hpp"
#include "lag.hpp"
#include "pipeline.hpp"
#include "stats.hpp"
#include "synth.hpp"

namespace {

using namespace leadlag;

thread_local std::string g_last_error;

leadlag_status status_for(Errc code) {
    switch (code) {
        case Errc::IoFailure:
            return LEADLAG_ERR_IO;
        case Errc::StateError:
            return LEADLAG_ERR_STATE;
        case Errc::MissingDirectory:
        case Errc::MalformedRow:
        case Errc::MalformedMap:
        case Errc::ParseError:
        case Errc::InsufficientOverlap:
        case Errc::UniverseTooSmall:
            return LEADLAG_ERR_DATA;
        default:
            return LEADLAG_ERR_INVALID;
    }
}

template <typename Fn>
leadlag_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        g_last_error = e.what();
        return status_for(e.code());
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return LEADLAG_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return LEADLAG_ERR_INTERNAL;
    }
}

leadlag_status invalid(const char* msg) {
    g_last_error = msg;
    return LEADLAG_ERR_INVALID;
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

// Builds an aligned pair on a shared synthetic index grid; the kernel entry
// points take plain arrays without timestamps.
AlignedPair pair_from_arrays(const double* a, const double* b, std::size_t n) {
    AlignedPair pair;
    pair.a.symbol = "a";
    pair.b.symbol = "b";
    pair.n = n;
    pair.a.timestamps.resize(n);
    pair.b.timestamps.resize(n);
    pair.a.values.assign(a, a + n);
    pair.b.values.assign(b, b + n);
    for (std::size_t i = 0; i < n; ++i) {
        pair.a.timestamps[i] = static_cast<std::int64_t>(i);
        pair.b.timestamps[i] = static_cast<std::int64_t>(i);
    }
    return pair;
}

} // namespace

extern "C" {

struct leadlag_config {
    leadlag::PipelineConfig cfg;
};

const char* leadlag_version(void) { return "0.1.0"; }

const char* leadlag_last_error(void) { return g_last_error.c_str(); }

void leadlag_string_free(char* s) { delete[] s; }

leadlag_status leadlag_config_load(const char* path, leadlag_config** out) {
    if (!path || !out) return invalid("null argument");
    return guarded([&] {
        auto* handle = new leadlag_config{leadlag::load_config(path)};
        *out = handle;
        return LEADLAG_OK;
    });
}

leadlag_status leadlag_config_parse(const char* text, leadlag_config** out) {
    if (!text || !out) return invalid("null argument");
    return guarded([&] {
        auto* handle = new leadlag_config{leadlag::parse_config(text, "<memory>")};
        *out = handle;
        return LEADLAG_OK;
    });
}

leadlag_status leadlag_config_default(const char* data_root, leadlag_config** out) {
    if (!data_root || !out) return invalid("null argument");
    return guarded([&] {
        leadlag::PipelineConfig cfg;
        cfg.data_root = data_root;
        cfg.validate();
        *out = new leadlag_config{std::move(cfg)};
        return LEADLAG_OK;
    });
}

void leadlag_config_free(leadlag_config* cfg) { delete cfg; }

leadlag_status leadlag_config_dump(const leadlag_config* cfg, char** text) {
    if (!cfg || !text) return invalid("null argument");
    return guarded([&] {
        *text = dup_string(cfg->cfg.canonical_text());
        return LEADLAG_OK;
    });
}

leadlag_status leadlag_config_set_workers(leadlag_config* cfg, int workers) {
    if (!cfg) return invalid("null argument");
    if (workers < 0 || workers > 256) return invalid("workers must be in [0, 256]");
    cfg->cfg.workers = static_cast<std::size_t>(workers);
    return LEADLAG_OK;
}

leadlag_status leadlag_config_set_output_dir(leadlag_config* cfg, const char* dir) {
    if (!cfg || !dir || !*dir) return invalid("null or empty output dir");
    cfg->cfg.output_dir = dir;
    return LEADLAG_OK;
}

leadlag_status leadlag_synth_generate(const char* spec_path, const char* out_root,
                                      uint64_t seed_override, char** manifest_json) {
    if (!spec_path || !out_root) return invalid("null argument");
    return guarded([&] {
        SynthJob job = load_synth_job(spec_path);
        if (seed_override != 0) job.spec.seed = seed_override;
        Manifest manifest = run_synth_job(job, out_root);
        if (manifest_json) *manifest_json = dup_string(manifest.to_json());
        return LEADLAG_OK;
    });
}

leadlag_status leadlag_ingest_validate(const leadlag_config* cfg,
                                       const char* granularity, char** report_json) {
    if (!cfg || !granularity || !report_json) return invalid("null argument");
    return guarded([&] {
        Granularity g = granularity_from_label(granularity);
        *report_json = dup_string(ingest_report_json(cfg->cfg, g));
        return LEADLAG_OK;
    });
}

leadlag_status leadlag_run_stage1(const leadlag_config* cfg, const char* run_id,
                                  int resume, long max_units) {
    if (!cfg || !run_id || !*run_id) return invalid("null config or empty run id");
    return guarded([&] {
        StageOptions opts{run_id, resume != 0, max_units};
        return run_stage1(cfg->cfg, opts) == RunStatus::Complete ? LEADLAG_OK
                                                                 : LEADLAG_PARTIAL;
    });
}

leadlag_status leadlag_run_stage2(const leadlag_config* cfg, const char* run_id,
                                  int resume, long max_units) {
    if (!cfg || !run_id || !*run_id) return invalid("null config or empty run id");
    return guarded([&] {
        StageOptions opts{run_id, resume != 0, max_units};
        return run_stage2(cfg->cfg, opts) == RunStatus::Complete ? LEADLAG_OK
                                                                 : LEADLAG_PARTIAL;
    });
}

leadlag_status leadlag_write_reports(const leadlag_config* cfg, const char* run_id) {
    if (!cfg || !run_id || !*run_id) return invalid("null config or empty run id");
    return guarded([&] {
        write_reports(cfg->cfg, run_id);
        return LEADLAG_OK;
    });
}

leadlag_status leadlag_emit_plots(const leadlag_config* cfg, const char* run_id,
                                  int top_n, const char* pair,
                                  const char* granularity) {
    if (!cfg || !run_id || !*run_id) return invalid("null config or empty run id");
    if (top_n < 1 && !pair) return invalid("top_n must be >= 1 when no pair is given");
    return guarded([&] {
        PlotSelection sel;
        sel.top_n = static_cast<std::size_t>(top_n < 1 ? 1 : top_n);
        if (pair) {
            std::string p = pair;
            std::size_t comma = p.find(',');
            if (comma == std::string::npos || comma == 0 || comma + 1 == p.size())
                return invalid("pair must be \"LEADER,FOLLOWER\"");
            sel.pair = {{p.substr(0, comma), p.substr(comma + 1)}};
        }
        if (granularity) sel.granularity = granularity_from_label(granularity);
        emit_plots(cfg->cfg, run_id, sel);
        return LEADLAG_OK;
    });
}

leadlag_status leadlag_ccf(const double* a, const double* b, size_t n, int max_lag,
                           double* values_out, double* band_out) {
    if (!a || !b || !values_out) return invalid("null argument");
    if (max_lag < 1) return invalid("max_lag must be >= 1");
    return guarded([&] {
        CcfCurve curve = ccf(pair_from_arrays(a, b, n),
                             static_cast<std::size_t>(max_lag));
        for (std::size_t i = 0; i < curve.values.size(); ++i)
            values_out[i] = curve.values[i];
        if (band_out) *band_out = curve.significance_band;
        return LEADLAG_OK;
    });
}

leadlag_status leadlag_optimal_lag(const double* values, int max_lag, double band,
                                   int positive_only, int* lag_out,
                                   double* value_out, int* significant_out) {
    if (!values || max_lag < 1) return invalid("null values or max_lag < 1");
    return guarded([&] {
        CcfCurve curve;
        curve.significance_band = band;
        for (int l = -max_lag; l <= max_lag; ++l) {
            curve.lags.push_back(l);
            curve.values.push_back(values[l + max_lag]);
            curve.n_effective.push_back(0);
        }
        OptimalLag opt = optimal_lag(curve, positive_only ? LagSearch::PositiveOnly
                                                          : LagSearch::FullRange);
        if (lag_out) *lag_out = opt.lag;
        if (value_out) *value_out = opt.value;
        if (significant_out) *significant_out = opt.significant ? 1 : 0;
        return LEADLAG_OK;
    });
}

leadlag_status leadlag_dtw(const double* a, size_t na, const double* b, size_t nb,
                           long band, double* out) {
    if (!a || !b || !out) return invalid("null argument");
    return guarded([&] {
        std::optional<std::size_t> width;
        if (band >= 0) width = static_cast<std::size_t>(band);
        *out = dtw_distance(std::span<const double>(a, na),
                            std::span<const double>(b, nb), width);
        return LEADLAG_OK;
    });
}

leadlag_status leadlag_pearson(const double* a, const double* b, size_t n,
                               double* out) {
    if (!a || !b || !out) return invalid("null argument");
    return guarded([&] {
        *out = pearson(pair_from_arrays(a, b, n));
        return LEADLAG_OK;
    });
}

leadlag_status leadlag_kendall_tau(const double* a, const double* b, size_t n,
                                   double* out) {
    if (!a || !b || !out) return invalid("null argument");
    return guarded([&] {
        *out = kendall_tau(pair_from_arrays(a, b, n));
        return LEADLAG_OK;
    });
}

leadlag_status leadlag_granger(const double* cause, const double* effect, size_t n,
                               int max_order, int* order_out, double* f_out,
                               double* p_out) {
    if (!cause || !effect) return invalid("null argument");
    if (max_order < 1) return invalid("max_order must be >= 1");
    return guarded([&] {
        GrangerResult res = granger_test(pair_from_arrays(cause, effect, n),
                                         GrangerDirection::AtoB,
                                         static_cast<std::size_t>(max_order));
        if (order_out) *order_out = static_cast<int>(res.selected_order);
        if (f_out) *f_out = res.f_test.f_statistic;
        if (p_out) *p_out = res.f_test.p_value;
        return LEADLAG_OK;
    });
}

leadlag_status leadlag_lag_regression(const double* leader, const double* follower,
                                      size_t n, int lag, double* alpha_out,
                                      double* beta_out, double* r2_out,
                                      double* beta_pvalue_out) {
    if (!leader || !follower) return invalid("null argument");
    if (lag < 1) return invalid("lag must be >= 1");
    return guarded([&] {
        LagRegressionResult res = lag_regression(pair_from_arrays(leader, follower, n),
                                                 static_cast<std::size_t>(lag));
        if (alpha_out) *alpha_out = res.alpha;
        if (beta_out) *beta_out = res.beta;
        if (r2_out) *r2_out = res.r_squared;
        if (beta_pvalue_out) *beta_pvalue_out = res.beta_t_pvalue;
        return LEADLAG_OK;
    });
}

leadlag_status leadlag_f_cdf(double x, int df_num, int df_den, double* out) {
    if (!out) return invalid("null argument");
    if (df_num < 1 || df_den < 1) return invalid("degrees of freedom must be >= 1");
    return guarded([&] {
        *out = f_cdf(x, static_cast<std::size_t>(df_num),
                     static_cast<std::size_t>(df_den));
        return LEADLAG_OK;
    });
}

leadlag_status leadlag_t_cdf(double x, int df, double* out) {
    if (!out) return invalid("null argument");
    if (df < 1) return invalid("degrees of freedom must be >= 1");
    return guarded([&] {
        *out = t_cdf(x, static_cast<std::size_t>(df));
        return LEADLAG_OK;
    });
}

} // extern "C"
