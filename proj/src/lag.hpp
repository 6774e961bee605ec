#pragma once

#include <optional>
#include <string>
#include <vector>

#include "series.hpp"
#include "stats.hpp"

namespace leadlag {

struct CcfCurve {
    std::vector<int> lags;           // -L .. +L inclusive
    std::vector<double> values;      // NaN marks a zero-variance window
    std::vector<std::size_t> n_effective;
    double significance_band = 0.0;  // two-sided white-noise threshold
};

struct OptimalLag {
    int lag = 0;
    double value = 0.0;
    bool significant = false;
};

enum class LagSearch { FullRange, PositiveOnly };

struct VarFit {
    // Equation for each series: unrestricted includes both series' lags,
    // restricted drops the cross terms.
    double rss_unrestricted_a = 0.0;
    double rss_restricted_a = 0.0;
    double rss_unrestricted_b = 0.0;
    double rss_restricted_b = 0.0;
    std::size_t n_used = 0;
};

struct OrderSelection {
    std::size_t selected = 1;
    std::vector<double> bic_by_order; // index 0 = order 1
};

struct GrangerResult {
    std::string cause_symbol;
    std::string effect_symbol;
    std::size_t selected_order = 1;
    std::vector<double> bic_by_order;
    FTestResult f_test;
    bool causal_at_5pct = false;
};

enum class GrangerDirection { AtoB, BtoA };

struct ExtendedFit {
    double beta_ext = 0.0; // leader coefficient with controls in place
    double gamma_market = 0.0;
    double delta_autoreg = 0.0;
    double r_squared_ext = 0.0;
    std::vector<std::string> dropped_columns; // zero/collinear controls removed
};

struct LagRegressionResult {
    double alpha = 0.0;
    double beta = 0.0;
    double r_squared = 0.0;
    double beta_t_pvalue = 1.0;
    std::optional<ExtendedFit> extended;
};

// Sample cross-correlation of (a_t, b_{t+l}) for l in [-L, L], each lag using
// its own window's means and standard deviations. A positive significant lag
// means a leads b. Band defaults to 1.96/sqrt(n); pass a custom z for other
// significance levels.
CcfCurve ccf(const AlignedPair& pair, std::size_t max_lag, double band_z = 1.96);

// Argmax of |value| over the searched lags; ties prefer the smallest |lag|,
// then the positive sign.
OptimalLag optimal_lag(const CcfCurve& curve,
                       LagSearch search = LagSearch::FullRange);

VarFit fit_var(const AlignedPair& pair, std::size_t order);

// BIC(p) = ln(RSS_p / T) + p ln(T) / T for the equation of pair.b, with all
// candidate orders fitted on the same T = n - max_order rows so RSS values
// are comparable. Ties go to the smaller order.
OrderSelection select_order_bic(const AlignedPair& pair, std::size_t max_order);

GrangerResult granger_test(const AlignedPair& pair, GrangerDirection direction,
                           std::size_t max_order);

// Eq-7-style regression of follower (pair.b) on leader (pair.a) lagged by
// `lag` bars.
LagRegressionResult lag_regression(const AlignedPair& pair, std::size_t lag,
                                   std::size_t min_obs = 3);

// Adds contemporaneous market return and the follower's own first lag as
// controls. `market` must cover every pair timestamp. Zero or collinear
// control columns are dropped (market first, then the autoregressive term)
// and reported in the result.
LagRegressionResult extended_lag_regression(const AlignedPair& pair,
                                            std::size_t lag,
                                            const ReturnSeries& market,
                                            std::size_t min_obs = 3);

} // namespace leadlag
