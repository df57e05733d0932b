// stats.hpp — small statistics toolbox shared by tests and the harness:
// summary accumulators, least squares, two-sample Kolmogorov-Smirnov,
// chi-square quantiles, jackknife and batch-means standard errors.

#pragma once

#include <cstddef>
#include <vector>

namespace gw {

struct Summary {
    std::size_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;  // sum of squared deviations

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (x - mean);
    }
    double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
    double stderr_mean() const;
};

Summary summarize(const std::vector<double>& xs);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Two-sample Kolmogorov-Smirnov asymptotic p-value.
double ks_two_sample_pvalue(std::vector<double> a, std::vector<double> b);

// Chi-square quantile via the Wilson-Hilferty cube approximation.
double chi2_quantile(double p, double dof);

// Inverse standard normal CDF (Acklam's rational approximation).
double normal_quantile(double p);

// Per-test z threshold with Bonferroni correction: the family-wise false
// failure rate of n two-sided tests stays at the single-test 3 sigma level.
double bonferroni_z(int n_tests);

// Standard error of the mean of a correlated series via batch means.
double batch_means_stderr(const std::vector<double>& series, int n_batches = 20);

// Jackknife standard error of the plain mean.
double jackknife_mean_stderr(const std::vector<double>& xs);

} // namespace gw
