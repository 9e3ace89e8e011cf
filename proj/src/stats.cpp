#include "cardesign/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "cardesign/error.hpp"

namespace cardesign {

namespace {

void require_finite(std::span<const double> v, const char* what)
{
    if (v.empty())
        throw ValidationError(std::string(what) + ": empty sample");
    for (double x : v)
        if (!std::isfinite(x))
            throw ValidationError(std::string(what) + ": non-finite value");
}

double two_sided_normal_p(double z) { return std::erfc(std::abs(z) / std::numbers::sqrt2); }

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

} // namespace

std::vector<double> mid_ranks(std::span<const double> values)
{
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]])
            ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k)
            ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

TestResult mann_whitney_u(std::span<const double> x, std::span<const double> y, const MannWhitneyOptions& options)
{
    require_finite(x, "mann_whitney_u x");
    require_finite(y, "mann_whitney_u y");
    const std::size_t n = x.size(), m = y.size(), total = n + m;

    std::vector<double> pooled(x.begin(), x.end());
    pooled.insert(pooled.end(), y.begin(), y.end());
    const auto ranks = mid_ranks(pooled);

    // Doubled ranks are integers even with ties.
    std::vector<std::int64_t> doubled(total);
    for (std::size_t i = 0; i < total; ++i)
        doubled[i] = std::llround(2.0 * ranks[i]);
    const std::int64_t observed = std::accumulate(doubled.begin(), doubled.begin() + static_cast<std::ptrdiff_t>(n),
                                                  std::int64_t{0});

    TestResult r;
    const double nm = static_cast<double>(n) * static_cast<double>(m);
    r.statistic = 0.5 * static_cast<double>(observed) - 0.5 * static_cast<double>(n) * static_cast<double>(n + 1);
    const double mu = 0.5 * nm;

    if (n <= options.exactThreshold && m <= options.exactThreshold) {
        // count[k][s]: subsets of size k with doubled rank sum s.
        const std::int64_t maxSum = std::accumulate(doubled.begin(), doubled.end(), std::int64_t{0});
        std::vector<std::vector<std::uint64_t>> count(n + 1, std::vector<std::uint64_t>(static_cast<std::size_t>(maxSum) + 1, 0));
        count[0][0] = 1;
        for (std::size_t i = 0; i < total; ++i) {
            const auto d = static_cast<std::size_t>(doubled[i]);
            for (std::size_t k = std::min(n, i + 1); k >= 1; --k)
                for (std::size_t s = static_cast<std::size_t>(maxSum); s >= d; --s) {
                    count[k][s] += count[k - 1][s - d];
                    if (s == d)
                        break;
                }
        }
        // Doubled sums are centred on n (N + 1), twice the mean rank sum.
        const std::int64_t centre = static_cast<std::int64_t>(n * (total + 1));
        const std::int64_t distObs = std::abs(observed - centre);
        std::uint64_t extreme = 0, all = 0;
        for (std::size_t s = 0; s <= static_cast<std::size_t>(maxSum); ++s) {
            all += count[n][s];
            if (std::abs(static_cast<std::int64_t>(s) - centre) >= distObs)
                extreme += count[n][s];
        }
        r.pValue = clamp01(static_cast<double>(extreme) / static_cast<double>(all));
        r.exact = true;
    }
    else {
        std::vector<double> sorted = pooled;
        std::sort(sorted.begin(), sorted.end());
        double tieSum = 0.0;
        for (std::size_t i = 0; i < total;) {
            std::size_t j = i;
            while (j < total && sorted[j] == sorted[i])
                ++j;
            const double t = static_cast<double>(j - i);
            tieSum += t * t * t - t;
            i = j;
        }
        const double N = static_cast<double>(total);
        const double variance = nm / 12.0 * ((N + 1.0) - tieSum / (N * (N - 1.0)));
        if (!(variance > 0.0)) {
            r.pValue = 1.0;
            r.z = 0.0;
        }
        else {
            const double dev = std::max(0.0, std::abs(r.statistic - mu) - 0.5);
            const double z = std::copysign(dev / std::sqrt(variance), r.statistic - mu);
            r.z = z;
            r.pValue = clamp01(two_sided_normal_p(z));
        }
    }
    r.significant = r.pValue < options.alpha;
    return r;
}

TestResult spearman_rho(std::span<const double> x, std::span<const double> y, double alpha)
{
    if (x.size() != y.size())
        throw ValidationError("spearman_rho: length mismatch");
    if (x.size() < 3)
        throw ValidationError("spearman_rho: needs at least 3 pairs");
    require_finite(x, "spearman_rho x");
    require_finite(y, "spearman_rho y");
    const auto rx = mid_ranks(x), ry = mid_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mx = mean(rx), my = mean(ry);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        throw ValidationError("spearman_rho: constant input, correlation undefined");
    const double rho = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);

    TestResult r;
    r.statistic = rho;
    if (std::abs(rho) >= 1.0) {
        r.pValue = 0.0;
    }
    else {
        const double df = n - 2.0;
        const double t = rho * std::sqrt(df / (1.0 - rho * rho));
        const boost::math::students_t dist(df);
        r.pValue = clamp01(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
    }
    r.significant = r.pValue < alpha;
    return r;
}

double bonferroni(double alpha, int m)
{
    if (!(alpha > 0.0 && alpha < 1.0) || m < 1)
        throw ValidationError("bonferroni requires 0 < alpha < 1 and m >= 1");
    return alpha / m;
}

TestResult fisher_z_compare(double r1, int n1, double r2, int n2, double alpha)
{
    if (!(std::abs(r1) < 1.0) || !(std::abs(r2) < 1.0))
        throw ValidationError("fisher_z_compare requires |r| < 1");
    if (n1 < 4 || n2 < 4)
        throw ValidationError("fisher_z_compare requires n >= 4");
    const double z = (std::atanh(r1) - std::atanh(r2)) / std::sqrt(1.0 / (n1 - 3) + 1.0 / (n2 - 3));
    TestResult r;
    r.statistic = z;
    r.z = z;
    r.pValue = clamp01(two_sided_normal_p(z));
    r.significant = r.pValue < alpha;
    return r;
}

double mean(std::span<const double> v)
{
    if (v.empty())
        throw ValidationError("mean of empty sample");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

namespace {
// Linear-interpolation quantile on sorted data.
double quantile_sorted(const std::vector<double>& s, double q)
{
    const double pos = q * static_cast<double>(s.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}
} // namespace

double median(std::span<const double> v)
{
    if (v.empty())
        throw ValidationError("median of empty sample");
    std::vector<double> s(v.begin(), v.end());
    std::sort(s.begin(), s.end());
    return quantile_sorted(s, 0.5);
}

double silverman_bandwidth(std::span<const double> samples)
{
    require_finite(samples, "silverman_bandwidth");
    const double n = static_cast<double>(samples.size());
    double sd = 0.0;
    if (samples.size() > 1) {
        const double mu = mean(samples);
        double ss = 0.0;
        for (double x : samples)
            ss += (x - mu) * (x - mu);
        sd = std::sqrt(ss / (n - 1.0));
    }
    if (!(sd > 0.0))
        throw ValidationError("zero-variance samples: an explicit KDE bandwidth is required");
    std::vector<double> s(samples.begin(), samples.end());
    std::sort(s.begin(), s.end());
    const double iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
    // Heavy ties can collapse the IQR; fall back to the standard deviation.
    const double spread = iqr > 0.0 ? std::min(sd, iqr / 1.34) : sd;
    return 0.9 * spread * std::pow(n, -0.2);
}

namespace {

double resolve_bandwidth(std::span<const double> samples, std::optional<double> bandwidth)
{
    require_finite(samples, "kde");
    if (bandwidth) {
        if (!(*bandwidth > 0.0) || !std::isfinite(*bandwidth))
            throw ValidationError("kde bandwidth must be positive and finite");
        return *bandwidth;
    }
    return silverman_bandwidth(samples);
}

double density_at(std::span<const double> samples, double h, double g)
{
    double sum = 0.0;
    for (double x : samples) {
        const double u = (g - x) / h;
        sum += std::exp(-0.5 * u * u);
    }
    return sum / (static_cast<double>(samples.size()) * h * std::sqrt(2.0 * std::numbers::pi));
}

} // namespace

std::vector<double> kde_serial(std::span<const double> samples, std::span<const double> grid,
                               std::optional<double> bandwidth)
{
    const double h = resolve_bandwidth(samples, bandwidth);
    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        out[i] = density_at(samples, h, grid[i]);
    return out;
}

std::vector<double> kde_parallel(std::span<const double> samples, std::span<const double> grid,
                                 std::optional<double> bandwidth)
{
    const double h = resolve_bandwidth(samples, bandwidth);
    std::vector<double> out(grid.size());
    const auto count = static_cast<std::ptrdiff_t>(grid.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < count; ++i)
        out[static_cast<std::size_t>(i)] = density_at(samples, h, grid[static_cast<std::size_t>(i)]);
    return out;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t points)
{
    if (points < 2 || !(lo < hi))
        throw ValidationError("linear_grid requires lo < hi and at least 2 points");
    std::vector<double> g(points);
    const double step = (hi - lo) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i)
        g[i] = lo + step * static_cast<double>(i);
    g.back() = hi;
    return g;
}

double trapezoid(std::span<const double> x, std::span<const double> y)
{
    if (x.size() != y.size())
        throw ValidationError("trapezoid: length mismatch");
    double area = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i)
        area += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return area;
}

} // namespace cardesign
