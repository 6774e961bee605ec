#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "series.hpp"

namespace leadlag {

struct CouplingWeights {
    double w_pearson = 0.4;
    double w_dtw = 0.3;
    double w_tau = 0.3;

    void validate() const; // non-negative, sum to 1 within 1e-9
};

struct CouplingResult {
    std::string symbol_a;
    std::string symbol_b;
    std::size_t n = 0;
    double pearson = std::numeric_limits<double>::quiet_NaN();
    double dtw_distance = std::numeric_limits<double>::quiet_NaN();
    double dtw_normalized = std::numeric_limits<double>::quiet_NaN();
    double kendall_tau = std::numeric_limits<double>::quiet_NaN();
    double composite = std::numeric_limits<double>::quiet_NaN();
    bool passed = false;
    std::string skip_reason; // empty for evaluated pairs

    bool evaluated() const { return skip_reason.empty(); }
};

// Raw per-pair metrics before the run-level DTW normalization pass.
struct RawCoupling {
    std::string symbol_a;
    std::string symbol_b;
    std::size_t n = 0;
    double pearson = std::numeric_limits<double>::quiet_NaN();
    double dtw_distance = std::numeric_limits<double>::quiet_NaN();
    double kendall_tau = std::numeric_limits<double>::quiet_NaN();
    std::string skip_reason;

    bool evaluated() const { return skip_reason.empty(); }
};

struct ScreenOutcome {
    std::vector<CouplingResult> results;
    double dtw_max = 0.0; // max finite DTW over this run's evaluated pairs
};

double pearson(const AlignedPair& pair);

// Tie-corrected tau-b via Knight's O(n log n) merge-count algorithm.
double kendall_tau(const AlignedPair& pair);

// Absolute-difference local cost, {match, insert, delete} steps, boundary
// anchored. A finite band applies the Sakoe-Chiba constraint |i - j| <= band.
double dtw_distance(std::span<const double> a, std::span<const double> b,
                    std::optional<std::size_t> band = std::nullopt);

double composite_score(double pearson, double dtw_normalized, double tau,
                       const CouplingWeights& weights);

// Band policy: either a fixed width, or a fraction of each pair's aligned
// length (resolved after alignment). Fraction 0 disables banding.
struct DtwBand {
    static DtwBand absolute(std::optional<std::size_t> width) {
        DtwBand b;
        b.absolute_ = width;
        b.is_absolute_ = true;
        return b;
    }
    static DtwBand fraction(double f) {
        DtwBand b;
        b.fraction_ = f;
        return b;
    }

    std::optional<std::size_t> resolve(std::size_t aligned_n) const;

  private:
    std::optional<std::size_t> absolute_;
    double fraction_ = 0.0;
    bool is_absolute_ = false;
};

// One pair's raw metrics; alignment/variance failures become a skip reason
// instead of an exception so batches never abort.
RawCoupling evaluate_pair(const ReturnSeries& a, const ReturnSeries& b,
                          const DtwBand& dtw_band, std::size_t min_obs);

// Second pass: normalize DTW by the run maximum, score, decide, sort
// (composite descending, ties lexicographic; skips trail in lexicographic
// order).
ScreenOutcome finalize_screen(std::vector<RawCoupling> raw,
                              const CouplingWeights& weights, double threshold);

std::vector<CouplingResult> screen_pairs(const std::vector<ReturnSeries>& universe,
                                         const CouplingWeights& weights,
                                         double threshold,
                                         std::optional<std::size_t> dtw_band,
                                         std::size_t min_obs);

} // namespace leadlag
