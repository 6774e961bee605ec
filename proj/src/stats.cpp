#include "stats.hpp"

#include <algorithm>
#include <cmath>

namespace leadlag {

namespace {

constexpr double kRankTol = 1e-10;
constexpr double kBetaTol = 1e-14;
constexpr int kBetaMaxIter = 300;

} // namespace

OlsFit ols_fit(const DesignMatrix& design, const std::vector<double>& response) {
    const std::size_t n = design.rows;
    const std::size_t k = design.cols;
    if (response.size() != n || design.data.size() != n * k)
        raise(Errc::DimensionMismatch,
              "design " + std::to_string(n) + "x" + std::to_string(k) +
                  " vs response " + std::to_string(response.size()));
    if (n <= k)
        raise(Errc::TooShort, "OLS needs n > k, have n=" + std::to_string(n) +
                                  " k=" + std::to_string(k));

    // Householder QR applied to [A | y] in place; A becomes R in the upper
    // triangle, y becomes Q'y.
    std::vector<double> a = design.data;
    std::vector<double> y = response;
    auto A = [&](std::size_t r, std::size_t c) -> double& { return a[r * k + c]; };

    for (std::size_t j = 0; j < k; ++j) {
        double norm = 0.0;
        for (std::size_t i = j; i < n; ++i) norm += A(i, j) * A(i, j);
        norm = std::sqrt(norm);
        if (norm == 0.0) continue; // zero column; caught by the rank check
        double alpha = A(j, j) > 0 ? -norm : norm;
        double v0 = A(j, j) - alpha;
        // Householder vector v = (v0, A(j+1..n-1, j)); beta = 2 / v'v.
        double vtv = v0 * v0;
        for (std::size_t i = j + 1; i < n; ++i) vtv += A(i, j) * A(i, j);
        if (vtv == 0.0) continue;
        double beta = 2.0 / vtv;
        for (std::size_t c = j; c < k; ++c) {
            double dot = v0 * A(j, c);
            for (std::size_t i = j + 1; i < n; ++i) dot += A(i, j) * A(i, c);
            dot *= beta;
            if (c == j) {
                A(j, j) -= dot * v0; // equals alpha
            } else {
                A(j, c) -= dot * v0;
                for (std::size_t i = j + 1; i < n; ++i) A(i, c) -= dot * A(i, j);
            }
        }
        double doty = v0 * y[j];
        for (std::size_t i = j + 1; i < n; ++i) doty += A(i, j) * y[i];
        doty *= beta;
        y[j] -= doty * v0;
        for (std::size_t i = j + 1; i < n; ++i) y[i] -= doty * A(i, j);
        // Store the reflector below the diagonal is not needed again past this
        // column for y, so leave it; R is read from the upper triangle only.
        A(j, j) = alpha;
    }

    double diag_max = 0.0;
    for (std::size_t j = 0; j < k; ++j) diag_max = std::max(diag_max, std::fabs(A(j, j)));
    if (diag_max == 0.0) raise(Errc::RankDeficient, "all-zero design");
    for (std::size_t j = 0; j < k; ++j)
        if (std::fabs(A(j, j)) < kRankTol * diag_max)
            raise(Errc::RankDeficient,
                  "column " + std::to_string(j) + " effectively dependent");

    OlsFit fit;
    fit.n = n;
    fit.k = k;
    fit.coefficients.assign(k, 0.0);
    for (std::size_t jj = k; jj-- > 0;) {
        double s = y[jj];
        for (std::size_t c = jj + 1; c < k; ++c) s -= A(jj, c) * fit.coefficients[c];
        fit.coefficients[jj] = s / A(jj, jj);
    }

    double rss = 0.0;
    for (std::size_t i = k; i < n; ++i) rss += y[i] * y[i];
    fit.residual_sum_squares = rss;

    double ybar = 0.0;
    for (double v : response) ybar += v;
    ybar /= static_cast<double>(n);
    double tss = 0.0;
    for (double v : response) tss += (v - ybar) * (v - ybar);
    fit.r_squared = tss > 0.0 ? std::clamp(1.0 - rss / tss, 0.0, 1.0)
                              : (rss <= 0.0 ? 1.0 : 0.0);

    // (X'X)^-1 = R^-1 R^-T; only the diagonal is needed for standard errors.
    // Solve R' z = e_j (forward), then R w = z (backward); diag = ||w||-free:
    // simpler: invert R, diag((X'X)^-1)_j = sum_c Rinv(j,c)^2.
    std::vector<double> rinv(k * k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        rinv[j * k + j] = 1.0 / A(j, j);
        for (std::size_t i = j; i-- > 0;) {
            double s = 0.0;
            for (std::size_t c = i + 1; c <= j; ++c) s += A(i, c) * rinv[c * k + j];
            rinv[i * k + j] = -s / A(i, i);
        }
    }
    double sigma2 = n > k ? rss / static_cast<double>(n - k) : 0.0;
    fit.std_errors.assign(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        double d = 0.0;
        for (std::size_t c = j; c < k; ++c) d += rinv[j * k + c] * rinv[j * k + c];
        fit.std_errors[j] = std::sqrt(sigma2 * d);
    }
    return fit;
}

namespace {

double beta_cont_fraction(double a, double b, double x) {
    // Modified Lentz evaluation of the continued fraction for I_x(a,b),
    // Numerical Recipes form.
    const double tiny = 1e-300;
    double qab = a + b;
    double qap = a + 1.0;
    double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kBetaMaxIter; ++m) {
        double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kBetaTol) return h;
    }
    raise(Errc::Unconverged, "incomplete beta did not converge in " +
                                 std::to_string(kBetaMaxIter) + " iterations");
}

} // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0))
        raise(Errc::InvalidDegreesOfFreedom, "beta parameters must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                      a * std::log(x) + b * std::log1p(-x);
    double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * beta_cont_fraction(a, b, x) / a;
    return 1.0 - front * beta_cont_fraction(b, a, 1.0 - x) / b;
}

double f_cdf(double x, std::size_t df_num, std::size_t df_den) {
    if (df_num == 0 || df_den == 0)
        raise(Errc::InvalidDegreesOfFreedom, "F degrees of freedom must be positive");
    if (x <= 0.0) return 0.0;
    double d1 = static_cast<double>(df_num);
    double d2 = static_cast<double>(df_den);
    double xb = d1 * x / (d1 * x + d2);
    return std::clamp(incomplete_beta(d1 / 2.0, d2 / 2.0, xb), 0.0, 1.0);
}

double t_cdf(double x, std::size_t df) {
    if (df == 0)
        raise(Errc::InvalidDegreesOfFreedom, "t degrees of freedom must be positive");
    if (x == 0.0) return 0.5;
    double d = static_cast<double>(df);
    double xb = d / (d + x * x);
    double tail = 0.5 * incomplete_beta(d / 2.0, 0.5, xb);
    return x > 0.0 ? 1.0 - tail : tail;
}

double normal_quantile(double p) {
    if (!(p > 0.0) || !(p < 1.0))
        raise(Errc::DomainError, "normal quantile needs p in (0,1)");
    if (p == 0.5) return 0.0;
    if (p < 0.5) return -normal_quantile(1.0 - p);
    // Bisection on the standard normal CDF via erf; plenty for band widths.
    double lo = 0.0, hi = 40.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        double cdf = 0.5 * (1.0 + std::erf(mid / std::sqrt(2.0)));
        if (cdf < p)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-12) break;
    }
    return 0.5 * (lo + hi);
}

FTestResult nested_f_test(double restricted_rss, double unrestricted_rss,
                          std::size_t num_restrictions, std::size_t df_den) {
    if (num_restrictions == 0 || df_den == 0)
        raise(Errc::InvalidDegreesOfFreedom, "F test needs q > 0 and df_den > 0");
    if (!(unrestricted_rss > 0.0))
        raise(Errc::NonPositiveDenominator,
              "unrestricted RSS <= 0: degenerate perfectly-fit system");
    double diff = restricted_rss - unrestricted_rss;
    if (diff < 0.0) {
        if (-diff < 1e-12 * unrestricted_rss) {
            diff = 0.0; // floating-point noise on a no-cost restriction
        } else {
            raise(Errc::DomainError, "restricted RSS below unrestricted RSS");
        }
    }
    FTestResult res;
    res.df_num = num_restrictions;
    res.df_den = df_den;
    res.f_statistic = (diff / static_cast<double>(num_restrictions)) /
                      (unrestricted_rss / static_cast<double>(df_den));
    res.p_value = 1.0 - f_cdf(res.f_statistic, num_restrictions, df_den);
    return res;
}

} // namespace leadlag
