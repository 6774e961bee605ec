#include "coupling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace leadlag {

void CouplingWeights::validate() const {
    if (w_pearson < 0.0 || w_dtw < 0.0 || w_tau < 0.0)
        raise(Errc::WeightDomain, "coupling weights must be non-negative");
    if (std::fabs(w_pearson + w_dtw + w_tau - 1.0) > 1e-9)
        raise(Errc::WeightDomain, "coupling weights must sum to 1");
}

double pearson(const AlignedPair& pair) {
    if (pair.n < 3)
        raise(Errc::TooShort, "pearson needs n >= 3, have " + std::to_string(pair.n));
    double r = pearson_raw(pair.a.values.data(), pair.b.values.data(), pair.n);
    if (std::isnan(r))
        raise(Errc::ZeroVariance, pair.a.symbol + "/" + pair.b.symbol +
                                      ": constant series in pair");
    return r;
}

namespace {

// Count strict inversions of v by merge sort.
unsigned long long merge_count(std::vector<double>& v, std::vector<double>& tmp,
                               std::size_t lo, std::size_t hi) {
    if (hi - lo < 2) return 0;
    std::size_t mid = lo + (hi - lo) / 2;
    unsigned long long swaps = merge_count(v, tmp, lo, mid) + merge_count(v, tmp, mid, hi);
    std::size_t i = lo, j = mid, k = lo;
    while (i < mid && j < hi) {
        if (v[j] < v[i]) {
            swaps += mid - i;
            tmp[k++] = v[j++];
        } else {
            tmp[k++] = v[i++];
        }
    }
    while (i < mid) tmp[k++] = v[i++];
    while (j < hi) tmp[k++] = v[j++];
    std::copy(tmp.begin() + lo, tmp.begin() + hi, v.begin() + lo);
    return swaps;
}

unsigned long long tie_pairs(const std::vector<double>& sorted) {
    unsigned long long t = 0, run = 1;
    for (std::size_t i = 1; i <= sorted.size(); ++i) {
        if (i < sorted.size() && sorted[i] == sorted[i - 1]) {
            ++run;
        } else {
            t += run * (run - 1) / 2;
            run = 1;
        }
    }
    return t;
}

} // namespace

double kendall_tau(const AlignedPair& pair) {
    const std::size_t n = pair.n;
    if (n < 3)
        raise(Errc::TooShort, "kendall_tau needs n >= 3, have " + std::to_string(n));

    // Knight (1966): sort by (x, y), count x-ties and joint ties, then count
    // the inversions of y as discordance, then y-ties.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const auto& x = pair.a.values;
    const auto& y = pair.b.values;
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        if (x[i] != x[j]) return x[i] < x[j];
        return y[i] < y[j];
    });

    unsigned long long n1 = 0, n3 = 0;
    {
        unsigned long long run_x = 1, run_xy = 1;
        for (std::size_t i = 1; i <= n; ++i) {
            bool same_x = i < n && x[order[i]] == x[order[i - 1]];
            bool same_xy = same_x && y[order[i]] == y[order[i - 1]];
            if (same_x) {
                ++run_x;
            } else {
                n1 += run_x * (run_x - 1) / 2;
                run_x = 1;
            }
            if (same_xy) {
                ++run_xy;
            } else {
                n3 += run_xy * (run_xy - 1) / 2;
                run_xy = 1;
            }
        }
    }

    std::vector<double> ys(n);
    for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];
    std::vector<double> tmp(n);
    unsigned long long swaps = merge_count(ys, tmp, 0, n); // ys now sorted
    unsigned long long n2 = tie_pairs(ys);

    unsigned long long n0 = static_cast<unsigned long long>(n) * (n - 1) / 2;
    if (n1 == n0 || n2 == n0)
        raise(Errc::AllTied, pair.a.symbol + "/" + pair.b.symbol +
                                 ": a fully tied series has no rank order");

    // P - Q = n0 - n1 - n2 + n3 - 2*swaps (swaps counts discordant pairs among
    // those not tied in x).
    long long num = static_cast<long long>(n0) - static_cast<long long>(n1) -
                    static_cast<long long>(n2) + static_cast<long long>(n3) -
                    2 * static_cast<long long>(swaps);
    double den = std::sqrt(static_cast<double>(n0 - n1)) *
                 std::sqrt(static_cast<double>(n0 - n2));
    return static_cast<double>(num) / den;
}

double dtw_distance(std::span<const double> a, std::span<const double> b,
                    std::optional<std::size_t> band) {
    const std::size_t na = a.size(), nb = b.size();
    if (na == 0 || nb == 0)
        raise(Errc::EmptySequence, "dtw requires non-empty sequences");
    std::size_t diff = na > nb ? na - nb : nb - na;
    if (band && *band < diff)
        raise(Errc::BandTooNarrow, "band " + std::to_string(*band) +
                                       " < length difference " + std::to_string(diff));

    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(nb + 1, inf), cur(nb + 1, inf);
    prev[0] = 0.0;
    for (std::size_t i = 1; i <= na; ++i) {
        std::size_t jlo = 1, jhi = nb;
        if (band) {
            jlo = i > *band ? i - *band : 1;
            jhi = std::min(nb, i + *band);
        }
        std::fill(cur.begin(), cur.end(), inf);
        for (std::size_t j = jlo; j <= jhi; ++j) {
            double cost = std::fabs(a[i - 1] - b[j - 1]);
            double best = std::min({prev[j - 1], prev[j], cur[j - 1]});
            cur[j] = cost + best;
        }
        std::swap(prev, cur);
    }
    double d = prev[nb];
    if (!std::isfinite(d))
        raise(Errc::BandTooNarrow, "band leaves no feasible warping path");
    return d;
}

double composite_score(double pearson, double dtw_normalized, double tau,
                       const CouplingWeights& weights) {
    weights.validate();
    if (!(dtw_normalized >= 0.0 && dtw_normalized <= 1.0))
        raise(Errc::DomainError, "dtw_normalized outside [0,1]");
    return weights.w_pearson * pearson + weights.w_dtw * (1.0 - dtw_normalized) +
           weights.w_tau * tau;
}

namespace {

std::string skip_reason_for(const Error& e) {
    switch (e.code()) {
        case Errc::InsufficientOverlap: return "insufficient_overlap";
        case Errc::GranularityMismatch: return "granularity_mismatch";
        case Errc::ZeroVariance: return "zero_variance";
        case Errc::AllTied: return "all_tied";
        case Errc::TooShort: return "too_short";
        default: return errc_name(e.code());
    }
}

} // namespace

std::optional<std::size_t> DtwBand::resolve(std::size_t aligned_n) const {
    if (is_absolute_) return absolute_;
    if (fraction_ <= 0.0) return std::nullopt;
    auto width = static_cast<std::size_t>(
        std::ceil(fraction_ * static_cast<double>(aligned_n)));
    return std::max<std::size_t>(width, 1);
}

RawCoupling evaluate_pair(const ReturnSeries& a, const ReturnSeries& b,
                          const DtwBand& dtw_band, std::size_t min_obs) {
    RawCoupling raw;
    raw.symbol_a = a.symbol;
    raw.symbol_b = b.symbol;
    try {
        AlignedPair pair = align(a, b, std::max<std::size_t>(min_obs, 3));
        raw.n = pair.n;
        raw.pearson = pearson(pair);
        raw.kendall_tau = kendall_tau(pair);
        // DTW runs on z-scored returns so distances compare across pairs with
        // heterogeneous volatilities.
        ReturnSeries za = zscore_normalize(pair.a);
        ReturnSeries zb = zscore_normalize(pair.b);
        raw.dtw_distance = dtw_distance(za.values, zb.values, dtw_band.resolve(pair.n));
    } catch (const Error& e) {
        raw.skip_reason = skip_reason_for(e);
    }
    return raw;
}

ScreenOutcome finalize_screen(std::vector<RawCoupling> raw,
                              const CouplingWeights& weights, double threshold) {
    weights.validate();
    ScreenOutcome out;
    out.dtw_max = 0.0;
    for (const RawCoupling& r : raw)
        if (r.evaluated() && std::isfinite(r.dtw_distance))
            out.dtw_max = std::max(out.dtw_max, r.dtw_distance);

    out.results.reserve(raw.size());
    for (const RawCoupling& r : raw) {
        CouplingResult res;
        res.symbol_a = r.symbol_a;
        res.symbol_b = r.symbol_b;
        res.n = r.n;
        res.skip_reason = r.skip_reason;
        if (r.evaluated()) {
            res.pearson = r.pearson;
            res.dtw_distance = r.dtw_distance;
            res.kendall_tau = r.kendall_tau;
            res.dtw_normalized = out.dtw_max > 0.0 ? r.dtw_distance / out.dtw_max : 0.0;
            res.composite =
                composite_score(res.pearson, res.dtw_normalized, res.kendall_tau, weights);
            res.passed = res.composite >= threshold;
        }
        out.results.push_back(std::move(res));
    }
    std::sort(out.results.begin(), out.results.end(),
              [](const CouplingResult& lhs, const CouplingResult& rhs) {
                  if (lhs.evaluated() != rhs.evaluated()) return lhs.evaluated();
                  if (lhs.evaluated() && lhs.composite != rhs.composite)
                      return lhs.composite > rhs.composite;
                  if (lhs.symbol_a != rhs.symbol_a) return lhs.symbol_a < rhs.symbol_a;
                  return lhs.symbol_b < rhs.symbol_b;
              });
    return out;
}

std::vector<CouplingResult> screen_pairs(const std::vector<ReturnSeries>& universe,
                                         const CouplingWeights& weights,
                                         double threshold,
                                         std::optional<std::size_t> dtw_band,
                                         std::size_t min_obs) {
    if (universe.size() < 2)
        raise(Errc::UniverseTooSmall, "screening needs at least 2 symbols");
    std::vector<const ReturnSeries*> sorted;
    sorted.reserve(universe.size());
    for (const ReturnSeries& r : universe) sorted.push_back(&r);
    std::sort(sorted.begin(), sorted.end(),
              [](const ReturnSeries* a, const ReturnSeries* b) {
                  return a->symbol < b->symbol;
              });
    std::vector<RawCoupling> raw;
    raw.reserve(sorted.size() * (sorted.size() - 1) / 2);
    for (std::size_t i = 0; i < sorted.size(); ++i)
        for (std::size_t j = i + 1; j < sorted.size(); ++j)
            raw.push_back(
                evaluate_pair(*sorted[i], *sorted[j], DtwBand::absolute(dtw_band), min_obs));
    return finalize_screen(std::move(raw), weights, threshold).results;
}

} // namespace leadlag
