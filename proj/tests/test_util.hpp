#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "series.hpp"
#include "synth.hpp"

namespace testutil {

using leadlag::AlignedPair;
using leadlag::Granularity;
using leadlag::ReturnSeries;

inline ReturnSeries make_series(const std::string& symbol,
                                const std::vector<double>& values,
                                Granularity g = Granularity::Daily,
                                std::int64_t start_ts = 1000,
                                std::int64_t step = 86400) {
    ReturnSeries r;
    r.symbol = symbol;
    r.granularity = g;
    r.values = values;
    r.timestamps.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        r.timestamps[i] = start_ts + static_cast<std::int64_t>(i) * step;
    return r;
}

inline AlignedPair make_aligned(const std::vector<double>& a,
                             const std::vector<double>& b,
                             Granularity g = Granularity::Daily) {
    AlignedPair p;
    p.a = make_series("a", a, g);
    p.b = make_series("b", b, g);
    p.n = a.size();
    return p;
}

inline std::vector<double> random_normal(std::uint64_t seed, std::size_t n,
                                         double mean = 0.0, double std_dev = 1.0) {
    leadlag::Rng rng(seed);
    std::vector<double> out(n);
    for (double& x : out) x = mean + std_dev * rng.normal();
    return out;
}

// Two-pass textbook Pearson, kept separate from the library implementation.
inline double pearson_oracle(const std::vector<double>& a,
                             const std::vector<double>& b) {
    const std::size_t n = a.size();
    double ma = 0, mb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double saa = 0, sbb = 0, sab = 0;
    for (std::size_t i = 0; i < n; ++i) {
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
        sab += (a[i] - ma) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

// Kolmogorov-Smirnov distance of a sample against Uniform(0,1).
inline double ks_uniform(std::vector<double> sample) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        double hi = (i + 1) / n - sample[i];
        double lo = sample[i] - i / n;
        d = std::max({d, hi, lo});
    }
    return d;
}

} // namespace testutil
