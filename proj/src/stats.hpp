#pragma once

#include <cstddef>
#include <vector>

#include "error.hpp"

namespace leadlag {

// Row-major dense design matrix. Small k, potentially large n.
struct DesignMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data; // rows * cols

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    static DesignMatrix zeros(std::size_t rows, std::size_t cols) {
        DesignMatrix m;
        m.rows = rows;
        m.cols = cols;
        m.data.assign(rows * cols, 0.0);
        return m;
    }
};

struct OlsFit {
    std::vector<double> coefficients; // intercept first when the caller puts it first
    std::vector<double> std_errors;   // same order; s^2 * diag((X'X)^-1)
    double residual_sum_squares = 0.0;
    double r_squared = 0.0;
    std::size_t n = 0;
    std::size_t k = 0;
};

struct FTestResult {
    double f_statistic = 0.0;
    std::size_t df_num = 0;
    std::size_t df_den = 0;
    double p_value = 1.0;
};

// Least squares by Householder QR. Rank deficiency is flagged when any
// |R_jj| falls below 1e-10 times the largest diagonal magnitude.
OlsFit ols_fit(const DesignMatrix& design, const std::vector<double>& response);

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation
// (modified Lentz), tolerance 1e-14, at most 300 iterations.
double incomplete_beta(double a, double b, double x);

double f_cdf(double x, std::size_t df_num, std::size_t df_den);
double t_cdf(double x, std::size_t df);

// Two-sided normal quantile via bisection on the large-df t CDF; used for
// configurable significance bands.
double normal_quantile(double p);

FTestResult nested_f_test(double restricted_rss, double unrestricted_rss,
                          std::size_t num_restrictions, std::size_t df_den);

} // namespace leadlag
