#include "lag.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace leadlag {

CcfCurve ccf(const AlignedPair& pair, std::size_t max_lag, double band_z) {
    const std::size_t n = pair.n;
    if (max_lag == 0) raise(Errc::DomainError, "max_lag must be >= 1");
    if (n <= 3 * max_lag)
        raise(Errc::TooShortForLag, "ccf needs n > 3L, have n=" + std::to_string(n) +
                                        " L=" + std::to_string(max_lag));
    CcfCurve curve;
    const int L = static_cast<int>(max_lag);
    curve.lags.reserve(2 * max_lag + 1);
    curve.values.reserve(2 * max_lag + 1);
    curve.n_effective.reserve(2 * max_lag + 1);
    curve.significance_band = band_z / std::sqrt(static_cast<double>(n));
    const double* a = pair.a.values.data();
    const double* b = pair.b.values.data();
    for (int l = -L; l <= L; ++l) {
        std::size_t m = n - static_cast<std::size_t>(std::abs(l));
        // corr(a_t, b_{t+l}) over the overlapping window.
        const double* ap = l >= 0 ? a : a - l;
        const double* bp = l >= 0 ? b + l : b;
        curve.lags.push_back(l);
        curve.values.push_back(pearson_raw(ap, bp, m)); // NaN when degenerate
        curve.n_effective.push_back(m);
    }
    return curve;
}

OptimalLag optimal_lag(const CcfCurve& curve, LagSearch search) {
    if (curve.lags.empty()) raise(Errc::AllNull, "empty CCF curve");
    bool found = false;
    OptimalLag best;
    for (std::size_t i = 0; i < curve.lags.size(); ++i) {
        int lag = curve.lags[i];
        double v = curve.values[i];
        if (search == LagSearch::PositiveOnly && lag < 1) continue;
        if (std::isnan(v)) continue;
        bool better = false;
        if (!found) {
            better = true;
        } else if (std::fabs(v) != std::fabs(best.value)) {
            better = std::fabs(v) > std::fabs(best.value);
        } else if (std::abs(lag) != std::abs(best.lag)) {
            better = std::abs(lag) < std::abs(best.lag);
        } else {
            better = lag > best.lag;
        }
        if (better) {
            best.lag = lag;
            best.value = v;
            found = true;
        }
    }
    if (!found) raise(Errc::AllNull, "no defined CCF value in searched range");
    best.significant = std::fabs(best.value) > curve.significance_band;
    return best;
}

namespace {

// Lagged design over rows t = start..n-1: intercept, own lags, then (when
// unrestricted) the other series' lags.
DesignMatrix var_design(const std::vector<double>& own,
                        const std::vector<double>& other, std::size_t order,
                        std::size_t start, std::size_t n, bool unrestricted) {
    std::size_t rows = n - start;
    std::size_t cols = 1 + order + (unrestricted ? order : 0);
    DesignMatrix m = DesignMatrix::zeros(rows, cols);
    for (std::size_t t = start; t < n; ++t) {
        std::size_t r = t - start;
        m.at(r, 0) = 1.0;
        for (std::size_t k = 1; k <= order; ++k) m.at(r, k) = own[t - k];
        if (unrestricted)
            for (std::size_t k = 1; k <= order; ++k)
                m.at(r, order + k) = other[t - k];
    }
    return m;
}

std::vector<double> slice_from(const std::vector<double>& v, std::size_t start) {
    return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(start), v.end());
}

} // namespace

VarFit fit_var(const AlignedPair& pair, std::size_t order) {
    if (order == 0) raise(Errc::DomainError, "VAR order must be >= 1");
    const std::size_t n = pair.n;
    if (n <= order || n - order <= 2 * order + 1)
        raise(Errc::TooShort, "VAR(" + std::to_string(order) + ") needs n - p > 2p + 1, have n=" +
                                  std::to_string(n));
    VarFit out;
    out.n_used = n - order;
    std::vector<double> ya = slice_from(pair.a.values, order);
    std::vector<double> yb = slice_from(pair.b.values, order);
    out.rss_unrestricted_a =
        ols_fit(var_design(pair.a.values, pair.b.values, order, order, n, true), ya)
            .residual_sum_squares;
    out.rss_restricted_a =
        ols_fit(var_design(pair.a.values, pair.b.values, order, order, n, false), ya)
            .residual_sum_squares;
    out.rss_unrestricted_b =
        ols_fit(var_design(pair.b.values, pair.a.values, order, order, n, true), yb)
            .residual_sum_squares;
    out.rss_restricted_b =
        ols_fit(var_design(pair.b.values, pair.a.values, order, order, n, false), yb)
            .residual_sum_squares;
    return out;
}

OrderSelection select_order_bic(const AlignedPair& pair, std::size_t max_order) {
    if (max_order == 0) raise(Errc::DomainError, "max_order must be >= 1");
    const std::size_t n = pair.n;
    if (n <= max_order || n - max_order <= 2 * max_order + 1)
        raise(Errc::TooShort,
              "BIC selection at max_order " + std::to_string(max_order) +
                  " needs n - p > 2p + 1, have n=" + std::to_string(n));
    // Fixed estimation window across candidate orders keeps RSS comparable.
    const std::size_t start = max_order;
    const double T = static_cast<double>(n - start);
    std::vector<double> yb = slice_from(pair.b.values, start);
    OrderSelection sel;
    sel.bic_by_order.reserve(max_order);
    for (std::size_t p = 1; p <= max_order; ++p) {
        double rss =
            ols_fit(var_design(pair.b.values, pair.a.values, p, start, n, true), yb)
                .residual_sum_squares;
        double bic = std::log(rss / T) +
                     static_cast<double>(p) * std::log(T) / T;
        sel.bic_by_order.push_back(bic);
    }
    sel.selected = 1;
    for (std::size_t p = 2; p <= max_order; ++p)
        if (sel.bic_by_order[p - 1] < sel.bic_by_order[sel.selected - 1])
            sel.selected = p;
    return sel;
}

GrangerResult granger_test(const AlignedPair& pair, GrangerDirection direction,
                           std::size_t max_order) {
    // Orient so that pair.b is the effect equation under test.
    AlignedPair oriented;
    if (direction == GrangerDirection::AtoB) {
        oriented = pair;
    } else {
        oriented.a = pair.b;
        oriented.b = pair.a;
        oriented.n = pair.n;
    }
    GrangerResult res;
    res.cause_symbol = oriented.a.symbol;
    res.effect_symbol = oriented.b.symbol;

    OrderSelection sel = select_order_bic(oriented, max_order);
    res.selected_order = sel.selected;
    res.bic_by_order = std::move(sel.bic_by_order);

    const std::size_t p = res.selected_order;
    const std::size_t n = oriented.n;
    std::vector<double> yb = slice_from(oriented.b.values, p);
    double rss_u =
        ols_fit(var_design(oriented.b.values, oriented.a.values, p, p, n, true), yb)
            .residual_sum_squares;
    double rss_r =
        ols_fit(var_design(oriented.b.values, oriented.a.values, p, p, n, false), yb)
            .residual_sum_squares;
    std::size_t n_used = n - p;
    if (n_used <= 2 * p + 1)
        raise(Errc::TooShort, "no denominator degrees of freedom");
    res.f_test = nested_f_test(rss_r, rss_u, p, n_used - 2 * p - 1);
    res.causal_at_5pct = res.f_test.p_value < 0.05;
    return res;
}

namespace {

double two_sided_t_pvalue(double coef, double se, std::size_t df) {
    if (!(se > 0.0)) return coef != 0.0 ? 0.0 : 1.0;
    double t = std::fabs(coef / se);
    return 2.0 * (1.0 - t_cdf(t, df));
}

} // namespace

LagRegressionResult lag_regression(const AlignedPair& pair, std::size_t lag,
                                   std::size_t min_obs) {
    if (lag == 0) raise(Errc::DomainError, "lag regression needs lag >= 1");
    const std::size_t n = pair.n;
    if (n <= lag || n - lag < std::max<std::size_t>(min_obs, 3))
        raise(Errc::TooShort, "n - lag too small for regression");
    const std::size_t rows = n - lag;
    DesignMatrix x = DesignMatrix::zeros(rows, 2);
    std::vector<double> y(rows);
    for (std::size_t t = lag; t < n; ++t) {
        x.at(t - lag, 0) = 1.0;
        x.at(t - lag, 1) = pair.a.values[t - lag];
        y[t - lag] = pair.b.values[t];
    }
    OlsFit fit = ols_fit(x, y);
    LagRegressionResult res;
    res.alpha = fit.coefficients[0];
    res.beta = fit.coefficients[1];
    res.r_squared = fit.r_squared;
    res.beta_t_pvalue = two_sided_t_pvalue(res.beta, fit.std_errors[1], rows - 2);
    return res;
}

LagRegressionResult extended_lag_regression(const AlignedPair& pair,
                                            std::size_t lag,
                                            const ReturnSeries& market,
                                            std::size_t min_obs) {
    if (lag == 0) raise(Errc::DomainError, "extended regression needs lag >= 1");
    const std::size_t n = pair.n;
    if (n <= lag || n - lag < std::max<std::size_t>(min_obs, 4))
        raise(Errc::TooShort, "n - lag too small for extended regression");

    // Market values looked up on the pair's timestamp grid.
    std::vector<double> mkt(n, 0.0);
    {
        std::size_t j = 0;
        for (std::size_t i = 0; i < n; ++i) {
            std::int64_t ts = pair.a.timestamps[i];
            while (j < market.timestamps.size() && market.timestamps[j] < ts) ++j;
            if (j >= market.timestamps.size() || market.timestamps[j] != ts)
                raise(Errc::MarketAlignmentFailure,
                      "market series missing timestamp " + std::to_string(ts));
            mkt[i] = market.values[j];
        }
    }

    const std::size_t rows = n - lag; // lag >= 1 also covers the b_{t-1} term
    LagRegressionResult res = lag_regression(pair, lag, min_obs);

    struct Col {
        const char* name;
        bool present;
    };
    std::vector<Col> controls = {{"market", true}, {"autoreg", true}};
    ExtendedFit ext;

    // Constant columns are collinear with the intercept; drop them up front.
    {
        double mn = mkt[lag], mx = mkt[lag];
        for (std::size_t t = lag; t < n; ++t) {
            mn = std::min(mn, mkt[t]);
            mx = std::max(mx, mkt[t]);
        }
        if (mn == mx) {
            controls[0].present = false;
            ext.dropped_columns.push_back("market");
        }
        double an = pair.b.values[lag - 1], ax = an;
        for (std::size_t t = lag; t < n; ++t) {
            an = std::min(an, pair.b.values[t - 1]);
            ax = std::max(ax, pair.b.values[t - 1]);
        }
        if (an == ax) {
            controls[1].present = false;
            ext.dropped_columns.push_back("autoreg");
        }
    }

    for (;;) {
        std::size_t cols = 2 + (controls[0].present ? 1 : 0) + (controls[1].present ? 1 : 0);
        DesignMatrix x = DesignMatrix::zeros(rows, cols);
        std::vector<double> y(rows);
        for (std::size_t t = lag; t < n; ++t) {
            std::size_t r = t - lag;
            std::size_t c = 0;
            x.at(r, c++) = 1.0;
            x.at(r, c++) = pair.a.values[t - lag];
            if (controls[0].present) x.at(r, c++) = mkt[t];
            if (controls[1].present) x.at(r, c++) = pair.b.values[t - 1];
            y[r] = pair.b.values[t];
        }
        try {
            OlsFit fit = ols_fit(x, y);
            std::size_t c = 2;
            ext.gamma_market = controls[0].present ? fit.coefficients[c++] : 0.0;
            ext.delta_autoreg = controls[1].present ? fit.coefficients[c++] : 0.0;
            ext.r_squared_ext = fit.r_squared;
            ext.beta_ext = fit.coefficients[1];
            res.extended = std::move(ext);
            return res;
        } catch (const Error& e) {
            if (e.code() != Errc::RankDeficient) throw;
            if (controls[0].present) {
                controls[0].present = false;
                ext.dropped_columns.push_back("market");
            } else if (controls[1].present) {
                controls[1].present = false;
                ext.dropped_columns.push_back("autoreg");
            } else {
                throw;
            }
        }
    }
}

} // namespace leadlag
