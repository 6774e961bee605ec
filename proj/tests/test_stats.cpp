#include <doctest.h>

#include <cmath>

#include "stats.hpp"
#include "synth.hpp"
#include "test_util.hpp"

using namespace leadlag;

namespace {

// Test-only oracle: solve the normal equations X'X b = X'y by Gaussian
// elimination with partial pivoting. Deliberately the path the production
// solver avoids.
std::vector<double> normal_equations_oracle(const DesignMatrix& x,
                                            const std::vector<double>& y) {
    const std::size_t k = x.cols;
    std::vector<std::vector<double>> m(k, std::vector<double>(k + 1, 0.0));
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            double s = 0;
            for (std::size_t r = 0; r < x.rows; ++r) s += x.at(r, i) * x.at(r, j);
            m[i][j] = s;
        }
        double s = 0;
        for (std::size_t r = 0; r < x.rows; ++r) s += x.at(r, i) * y[r];
        m[i][k] = s;
    }
    for (std::size_t col = 0; col < k; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < k; ++r)
            if (std::fabs(m[r][col]) > std::fabs(m[piv][col])) piv = r;
        std::swap(m[col], m[piv]);
        for (std::size_t r = 0; r < k; ++r) {
            if (r == col) continue;
            double f = m[r][col] / m[col][col];
            for (std::size_t c = col; c <= k; ++c) m[r][c] -= f * m[col][c];
        }
    }
    std::vector<double> b(k);
    for (std::size_t i = 0; i < k; ++i) b[i] = m[i][k] / m[i][i];
    return b;
}

DesignMatrix random_design(Rng& rng, std::size_t n, std::size_t k) {
    DesignMatrix x = DesignMatrix::zeros(n, k);
    for (std::size_t r = 0; r < n; ++r) {
        x.at(r, 0) = 1.0;
        for (std::size_t c = 1; c < k; ++c) x.at(r, c) = rng.normal();
    }
    return x;
}

} // namespace

TEST_CASE("ols recovers an exact linear relationship") {
    DesignMatrix x = DesignMatrix::zeros(10, 2);
    std::vector<double> y(10);
    for (std::size_t i = 0; i < 10; ++i) {
        x.at(i, 0) = 1.0;
        x.at(i, 1) = static_cast<double>(i);
        y[i] = 1.0 + 2.0 * static_cast<double>(i);
    }
    OlsFit fit = ols_fit(x, y);
    CHECK(fit.coefficients[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.coefficients[1] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.residual_sum_squares < 1e-18);
}

TEST_CASE("ols slopes vanish when the response is orthogonal to regressors") {
    // Columns sum to zero, response is constant.
    DesignMatrix x = DesignMatrix::zeros(8, 3);
    std::vector<double> c1{1, -1, 1, -1, 1, -1, 1, -1};
    std::vector<double> c2{1, 1, -1, -1, 1, 1, -1, -1};
    std::vector<double> y(8, 5.0);
    for (std::size_t i = 0; i < 8; ++i) {
        x.at(i, 0) = 1.0;
        x.at(i, 1) = c1[i];
        x.at(i, 2) = c2[i];
    }
    OlsFit fit = ols_fit(x, y);
    CHECK(std::fabs(fit.coefficients[1]) < 1e-10);
    CHECK(std::fabs(fit.coefficients[2]) < 1e-10);
    CHECK(fit.coefficients[0] == doctest::Approx(5.0));
}

TEST_CASE("ols matches the normal-equations oracle on random systems") {
    Rng rng(101);
    for (int rep = 0; rep < 20; ++rep) {
        DesignMatrix x = random_design(rng, 200, 4);
        std::vector<double> y(200);
        for (double& v : y) v = rng.normal();
        OlsFit fit = ols_fit(x, y);
        std::vector<double> oracle = normal_equations_oracle(x, y);
        for (std::size_t j = 0; j < 4; ++j)
            CHECK(std::fabs(fit.coefficients[j] - oracle[j]) < 1e-8);
    }
}

TEST_CASE("ols residuals are orthogonal to the design") {
    Rng rng(55);
    DesignMatrix x = random_design(rng, 300, 5);
    std::vector<double> y(300);
    for (std::size_t i = 0; i < 300; ++i) y[i] = x.at(i, 1) * 0.5 + rng.normal();
    OlsFit fit = ols_fit(x, y);
    std::vector<double> resid(300);
    for (std::size_t i = 0; i < 300; ++i) {
        double pred = 0;
        for (std::size_t j = 0; j < 5; ++j) pred += x.at(i, j) * fit.coefficients[j];
        resid[i] = y[i] - pred;
    }
    double rnorm = 0;
    for (double v : resid) rnorm += v * v;
    rnorm = std::sqrt(rnorm);
    for (std::size_t j = 0; j < 5; ++j) {
        double dot = 0, cnorm = 0;
        for (std::size_t i = 0; i < 300; ++i) {
            dot += x.at(i, j) * resid[i];
            cnorm += x.at(i, j) * x.at(i, j);
        }
        CHECK(std::fabs(dot) < 1e-8 * std::sqrt(cnorm) * rnorm);
    }
}

TEST_CASE("ols r-squared never drops when a regressor is appended") {
    Rng rng(77);
    for (int rep = 0; rep < 10; ++rep) {
        DesignMatrix x3 = random_design(rng, 80, 3);
        DesignMatrix x4 = DesignMatrix::zeros(80, 4);
        for (std::size_t i = 0; i < 80; ++i) {
            for (std::size_t j = 0; j < 3; ++j) x4.at(i, j) = x3.at(i, j);
            x4.at(i, 3) = rng.normal();
        }
        std::vector<double> y(80);
        for (double& v : y) v = rng.normal();
        CHECK(ols_fit(x4, y).r_squared >= ols_fit(x3, y).r_squared - 1e-10);
    }
}

TEST_CASE("ols error paths") {
    DesignMatrix x = DesignMatrix::zeros(6, 2);
    std::vector<double> y(6, 1.0);
    for (std::size_t i = 0; i < 6; ++i) {
        x.at(i, 0) = 1.0;
        x.at(i, 1) = 2.0; // collinear with intercept
    }
    try {
        ols_fit(x, y);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::RankDeficient);
    }
    std::vector<double> short_y(5, 1.0);
    CHECK_THROWS_AS(ols_fit(x, short_y), Error);
    DesignMatrix tiny = DesignMatrix::zeros(2, 2);
    std::vector<double> y2(2, 1.0);
    CHECK_THROWS_AS(ols_fit(tiny, y2), Error); // n <= k
}

TEST_CASE("f_cdf reference values") {
    CHECK(f_cdf(0.0, 3, 7) == 0.0);
    // chi-square(1) 95th percentile limit: F(1, inf) at 3.8415
    CHECK(std::fabs(f_cdf(3.8415, 1, 1000000) - 0.95) < 1e-3);
    for (std::size_t d : {1u, 2u, 5u, 10u, 100u, 1000u})
        CHECK(std::fabs(f_cdf(1.0, d, d) - 0.5) < 1e-9);
    CHECK_THROWS_AS(f_cdf(1.0, 0, 5), Error);
}

TEST_CASE("f_cdf is monotone and bounded") {
    double prev = 0.0;
    for (double x = 0.0; x <= 20.0; x += 0.25) {
        double v = f_cdf(x, 4, 17);
        CHECK(v >= prev - 1e-15);
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
        prev = v;
    }
}

TEST_CASE("t_cdf symmetry and limits") {
    CHECK(t_cdf(0.0, 7) == 0.5);
    for (std::size_t df : {1u, 3u, 7u, 30u}) {
        for (double x = -6.0; x <= 6.0; x += 0.1)
            CHECK(std::fabs(t_cdf(-x, df) + t_cdf(x, df) - 1.0) < 1e-12);
    }
    CHECK(std::fabs(t_cdf(1.96, 1000000) - 0.975) < 1e-4);
    CHECK_THROWS_AS(t_cdf(1.0, 0), Error);
}

TEST_CASE("normal quantile matches known points") {
    CHECK(std::fabs(normal_quantile(0.975) - 1.959964) < 1e-5);
    CHECK(std::fabs(normal_quantile(0.5)) < 1e-12);
    CHECK(std::fabs(normal_quantile(0.025) + 1.959964) < 1e-5);
}

TEST_CASE("nested F test arithmetic") {
    FTestResult same = nested_f_test(1.0, 1.0, 2, 50);
    CHECK(same.f_statistic == 0.0);
    CHECK(same.p_value == doctest::Approx(1.0));

    FTestResult big = nested_f_test(2.0, 1.0, 1, 100);
    CHECK(big.f_statistic == doctest::Approx(100.0));
    CHECK(big.p_value < 1e-10);

    // Tiny negative differences clamp to zero.
    FTestResult clamp = nested_f_test(1.0 - 1e-15, 1.0, 1, 10);
    CHECK(clamp.f_statistic == 0.0);

    try {
        nested_f_test(1.0, 0.0, 1, 10);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::NonPositiveDenominator);
    }
    CHECK_THROWS_AS(nested_f_test(0.5, 1.0, 1, 10), Error); // beyond tolerance
}

TEST_CASE("nested F p-values are uniform under the null") {
    Rng rng(2024);
    std::vector<double> pvals;
    const std::size_t n = 60;
    for (int rep = 0; rep < 1000; ++rep) {
        DesignMatrix xu = DesignMatrix::zeros(n, 3);
        DesignMatrix xr = DesignMatrix::zeros(n, 1);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            xu.at(i, 0) = 1.0;
            xu.at(i, 1) = rng.normal();
            xu.at(i, 2) = rng.normal();
            xr.at(i, 0) = 1.0;
            y[i] = 1.0 + rng.normal(); // restricted model is true
        }
        double rss_u = ols_fit(xu, y).residual_sum_squares;
        double rss_r = ols_fit(xr, y).residual_sum_squares;
        pvals.push_back(nested_f_test(rss_r, rss_u, 2, n - 3).p_value);
    }
    CHECK(testutil::ks_uniform(pvals) < 0.05);
}
