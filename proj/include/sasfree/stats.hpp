#pragma once

#include "error.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

namespace sasfree {

inline void require_sorted(std::span<const double> x)
{
    if (!std::is_sorted(x.begin(), x.end()))
        throw InvalidArgument("sample must be sorted");
}

// sup_x |F_n(x) - F(x)| for a sorted sample.
inline double ks_distance(std::span<const double> sorted, const std::function<double(double)>& cdf)
{
    require(!sorted.empty(), "KS distance of an empty sample");
    require_sorted(sorted);
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        double f = cdf(sorted[i]);
        d = std::max(d, std::max(static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n));
    }
    return d;
}

// P(K > lambda) for the Kolmogorov distribution.
inline double kolmogorov_survival(double lambda)
{
    if (lambda <= 0.0)
        return 1.0;
    if (lambda < 0.3)
        return 1.0;
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        double term = std::exp(-2.0 * k * k * lambda * lambda);
        s += (k % 2 ? 2.0 : -2.0) * term;
        if (term < 1e-17)
            break;
    }
    return std::clamp(s, 0.0, 1.0);
}

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double dof = 0.0;
};

inline TestResult ks_two_sample(std::vector<double> a, std::vector<double> b)
{
    require(!a.empty() && !b.empty(), "two-sample KS needs nonempty samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    while (i < a.size() && j < b.size()) {
        double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x)
            ++i;
        while (j < b.size() && b[j] <= x)
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    double ne = na * nb / (na + nb);
    double sq = std::sqrt(ne);
    TestResult r;
    r.statistic = d;
    r.p_value = kolmogorov_survival((sq + 0.12 + 0.11 / sq) * d);
    return r;
}

inline double chi_square_survival(double statistic, double dof)
{
    require(dof > 0, "chi-square needs positive degrees of freedom");
    boost::math::chi_squared dist(dof);
    return boost::math::cdf(boost::math::complement(dist, std::max(statistic, 0.0)));
}

// Pearson goodness of fit. Expected probabilities must sum to 1; the last
// cell is typically a tail bin.
inline TestResult chi_square_test(std::span<const double> observed, std::span<const double> expected_prob)
{
    require(observed.size() == expected_prob.size() && observed.size() >= 2, "chi-square needs matching cells");
    double n = 0.0;
    for (double o : observed)
        n += o;
    double stat = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        double e = n * expected_prob[i];
        require(e > 0.0, "chi-square cell with zero expectation");
        stat += (observed[i] - e) * (observed[i] - e) / e;
    }
    TestResult r;
    r.statistic = stat;
    r.dof = static_cast<double>(observed.size() - 1);
    r.p_value = chi_square_survival(stat, r.dof);
    return r;
}

// Type-7 quantile of a sorted sample.
inline double quantile(std::span<const double> sorted, double q)
{
    require(!sorted.empty(), "quantile of an empty sample");
    require(q >= 0.0 && q <= 1.0, "quantile level must be in [0, 1]");
    double h = (static_cast<double>(sorted.size()) - 1.0) * q;
    auto lo = static_cast<std::size_t>(std::floor(h));
    std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

struct EcdfRow {
    double s = 0.0;
    double p_hat = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

// Wilson score interval at the given z.
inline EcdfRow binomial_row(double s, std::size_t hits, std::size_t n, double z = 1.96)
{
    EcdfRow r;
    r.s = s;
    const double nn = static_cast<double>(n);
    r.p_hat = static_cast<double>(hits) / nn;
    double denom = 1.0 + z * z / nn;
    double centre = (r.p_hat + z * z / (2.0 * nn)) / denom;
    double half = z * std::sqrt(r.p_hat * (1.0 - r.p_hat) / nn + z * z / (4.0 * nn * nn)) / denom;
    r.ci_low = std::max(0.0, centre - half);
    r.ci_high = std::min(1.0, centre + half);
    return r;
}

inline std::vector<EcdfRow> empirical_cdf_table(std::vector<double> sample, std::span<const double> grid, double z = 1.96)
{
    require(!sample.empty(), "empirical CDF of an empty sample");
    require_sorted(grid);
    std::sort(sample.begin(), sample.end());
    std::vector<EcdfRow> out;
    for (double s : grid) {
        auto hits = static_cast<std::size_t>(std::upper_bound(sample.begin(), sample.end(), s) - sample.begin());
        out.push_back(binomial_row(s, hits, sample.size(), z));
    }
    return out;
}

struct Estimate {
    double mean = 0.0;
    double se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t samples = 0;
};

// Mean with a 95% confidence interval from non-overlapping batch means.
inline Estimate batch_means(std::span<const double> x, std::size_t batches = 20)
{
    require(x.size() >= 2, "batch means need at least two samples");
    batches = std::clamp<std::size_t>(batches, 2, x.size());
    const std::size_t per = x.size() / batches;
    std::vector<double> means;
    for (std::size_t b = 0; b < batches; ++b) {
        double s = 0.0;
        for (std::size_t i = b * per; i < (b + 1) * per; ++i)
            s += x[i];
        means.push_back(s / static_cast<double>(per));
    }
    double total = 0.0;
    for (double v : x)
        total += v;
    Estimate e;
    e.samples = x.size();
    e.mean = total / static_cast<double>(x.size());
    double bm = 0.0;
    for (double m : means)
        bm += m;
    bm /= static_cast<double>(batches);
    double var = 0.0;
    for (double m : means)
        var += (m - bm) * (m - bm);
    var /= static_cast<double>(batches - 1);
    e.se = std::sqrt(var / static_cast<double>(batches));
    boost::math::students_t t(static_cast<double>(batches - 1));
    double q = boost::math::quantile(boost::math::complement(t, 0.025));
    e.ci_low = e.mean - q * e.se;
    e.ci_high = e.mean + q * e.se;
    return e;
}

} // namespace sasfree
