#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace cardesign {

struct TestResult {
    double statistic = 0.0;
    double pValue = 1.0;
    bool significant = false;  // pValue < alpha
    /// Normal deviate when the p-value came from a normal approximation.
    std::optional<double> z;
    bool exact = false;
};

/// Mid-ranks (1-based, ties share the mean rank).
std::vector<double> mid_ranks(std::span<const double> values);

struct MannWhitneyOptions {
    /// Exact null distribution when both samples are at most this large.
    std::size_t exactThreshold = 20;
    double alpha = 0.05;
};

/// Two-sided Mann-Whitney U. statistic = U for x = #{x_i > y_j} + 0.5 #{x_i = y_j}.
/// Exact p enumerates the tie-aware rank-sum distribution; otherwise a normal
/// approximation with tie and continuity correction.
TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y, const MannWhitneyOptions& options = {});

/// Spearman rank correlation (Pearson on mid-ranks), two-sided t-approximation p-value.
TestResult spearman_rho(std::span<const double> x, std::span<const double> y, double alpha = 0.05);

/// Per-comparison threshold alpha / m.
double bonferroni(double alpha, int m);

/// Two-sided test for a difference between independent correlations.
TestResult fisher_z_compare(double r1, int n1, double r2, int n2, double alpha = 0.05);

/// 0.9 min(sd, IQR / 1.34) n^(-1/5). Throws ValidationError for zero-variance input.
double silverman_bandwidth(std::span<const double> samples);

/// Gaussian KDE on `grid`. Without a bandwidth Silverman's rule is used.
std::vector<double> kde_serial(std::span<const double> samples, std::span<const double> grid,
                               std::optional<double> bandwidth = std::nullopt);
/// Same values as kde_serial (bit-identical); grid points evaluated in parallel.
std::vector<double> kde_parallel(std::span<const double> samples, std::span<const double> grid,
                                 std::optional<double> bandwidth = std::nullopt);
inline std::vector<double> kde(std::span<const double> samples, std::span<const double> grid,
                               std::optional<double> bandwidth = std::nullopt)
{
    return kde_parallel(samples, grid, bandwidth);
}

/// `points` evenly spaced values from lo to hi inclusive.
std::vector<double> linear_grid(double lo, double hi, std::size_t points);

/// Trapezoid rule over a sampled function.
double trapezoid(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> v);
double median(std::span<const double> v);

} // namespace cardesign
