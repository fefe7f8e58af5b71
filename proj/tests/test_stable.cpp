#include <sasfree/stable.hpp>
#include <sasfree/stats.hpp>

#include <gtest/gtest.h>

#include <boost/math/constants/constants.hpp>

#include <algorithm>

using namespace sasfree;

namespace {

constexpr double kPi = boost::math::constants::pi<double>();

double cauchy_cdf(double x, double scale) { return 0.5 + std::atan(x / scale) / kPi; }

} // namespace

TEST(TailConstant, ClosedFormAgainstQuadrature)
{
    for (int i = 1; i <= 9; ++i) {
        double a = 0.2 * i;
        EXPECT_NEAR(stable_tail_constant(a), stable_tail_constant_quadrature(a), 1e-8) << a;
    }
    EXPECT_EQ(stable_tail_constant(1.0), 2.0 / kPi);
    // Away from 1 the cosine form is well conditioned.
    for (double a : {0.3, 0.7, 1.3, 1.9})
        EXPECT_NEAR(stable_tail_constant(a), (1 - a) / (std::tgamma(2 - a) * std::cos(kPi * a / 2)), 1e-13);
    EXPECT_THROW(stable_tail_constant(2.0), InvalidArgument);
    EXPECT_THROW(stable_tail_constant(0.0), InvalidArgument);
}

TEST(Sampler, CauchyCaseMatchesCdf)
{
    Stream rng(21, 0, StreamRole::generic);
    std::vector<double> x(20000);
    for (auto& v : x)
        v = sample_sas({1.0, 2.0}, rng);
    std::sort(x.begin(), x.end());
    // DKW: P(KS > 0.015) <= 2 exp(-2 n eps^2) ~ 2e-4
    EXPECT_LT(ks_distance(x, [](double t) { return cauchy_cdf(t, 2.0); }), 0.015);
}

TEST(Sampler, CharacteristicFunction)
{
    for (double a : {0.6, 1.0, 1.5, 1.9}) {
        Stream rng(22, static_cast<std::uint64_t>(a * 10), StreamRole::generic);
        const int n = 100000;
        const double sigma = 0.7;
        std::vector<double> x(n);
        for (auto& v : x)
            v = sample_sas({a, sigma}, rng);
        for (double theta : {0.5, 1.0, 2.0}) {
            double s = 0.0;
            for (double v : x)
                s += std::cos(theta * v);
            // var(cos) <= 1/2
            EXPECT_NEAR(s / n, std::exp(-std::pow(sigma * theta, a)), 5 * std::sqrt(0.5 / n)) << a << " " << theta;
        }
    }
}

TEST(Sampler, TailMatchesConstant)
{
    const double a = 1.5, sigma = 1.3, x0 = 30.0;
    Stream rng(23, 0, StreamRole::generic);
    const int n = 1000000;
    int hits = 0;
    for (int i = 0; i < n; ++i)
        if (std::abs(sample_sas({a, sigma}, rng)) > x0)
            ++hits;
    double expected = std::pow(sigma, a) * stable_tail_constant(a) * std::pow(x0, -a);
    EXPECT_NEAR(hits / double(n) / expected, 1.0, 0.1);
}

TEST(Sampler, EdgeCases)
{
    Stream rng(24, 0, StreamRole::generic);
    for (int i = 0; i < 100; ++i)
        EXPECT_LT(std::abs(sample_sas({1.2, 1e-12}, rng)), 1e-6);
    EXPECT_THROW(StableParams({1.0, 0.0}).validate(), InvalidArgument);
    EXPECT_THROW(StableParams({2.5, 1.0}).validate(), InvalidArgument);
}

TEST(LePage, TailSecondMoment)
{
    // alpha = 1: E Gamma_i^-2 = 1/((i-1)(i-2)), which telescopes to 1/(N-1).
    for (std::size_t n : {3u, 10u, 1000u})
        EXPECT_NEAR(lepage_tail_second_moment(1.0, n) * (n - 1.0), 1.0, 1e-12);
    // alpha = 0.8: direct summation of Gamma(i-p)/Gamma(i) plus an integral tail.
    const double a = 0.8, p = 2.0 / a;
    const std::size_t n = 50, m = 200000;
    double s = 0.0;
    for (std::size_t i = m; i > n; --i)
        s += std::exp(std::lgamma(i - p) - std::lgamma(static_cast<double>(i)));
    s += std::pow(static_cast<double>(m) + 0.5, 1.0 - p) / (p - 1.0);
    EXPECT_NEAR(lepage_tail_second_moment(a, n) / s, 1.0, 1e-6);
    EXPECT_TRUE(std::isinf(lepage_tail_second_moment(1.0, 1)));
}

TEST(LePage, TermsForBoundIsMinimal)
{
    // The remainder decays like N^(1/2 - 1/alpha): slowly as alpha approaches 2.
    for (auto [a, target] : {std::pair{0.7, 0.05}, {1.0, 0.05}, {1.6, 5.0}}) {
        std::size_t n = lepage_terms_for_bound(a, 1.0, target);
        EXPECT_LT(lepage_tail_bound(a, n, 1.0), target);
        EXPECT_GE(lepage_tail_bound(a, n - 1, 1.0), target);
    }
    EXPECT_THROW(lepage_terms_for_bound(1.9, 1.0, 1e-9, 1024), ResourceError);
}

TEST(LePage, SeriesHasTheStableLaw)
{
    // f = 1 under a probability control measure: the integral is SaS(1).
    const std::size_t terms = 400;
    std::vector<double> f(terms, 1.0), x(5000);
    for (std::size_t i = 0; i < x.size(); ++i) {
        Stream rng(25, i, StreamRole::series);
        x[i] = lepage_integral(f, 1.0, {terms, 25, false}, rng).value;
    }
    std::sort(x.begin(), x.end());
    EXPECT_LT(ks_distance(x, [](double t) { return cauchy_cdf(t, 1.0); }), 0.03);

    Stream rng(26, 0, StreamRole::series);
    EXPECT_THROW(lepage_integral(f, 1.0, {0, 1, true}, rng), InvalidArgument);
    auto r = lepage_integral(f, 1.0, {terms, 1, true}, rng);
    EXPECT_EQ(r.num_terms, terms);
    EXPECT_GT(r.tail_bound, 0.0);
}

TEST(Prm, TruncatedCountsAndMagnitudes)
{
    const double a = 1.2, eps = 0.5;
    const std::vector<double> masses{0.3, 0.0, 1.7};
    std::size_t total = 0, big = 0;
    const int reps = 4000;
    std::vector<std::size_t> per_site(3);
    for (int i = 0; i < reps; ++i) {
        Stream rng(27, static_cast<std::uint64_t>(i), StreamRole::poisson);
        for (const auto& atom : sample_truncated_prm({a, eps}, masses, rng)) {
            ++total;
            ++per_site[atom.site];
            EXPECT_GT(std::abs(atom.j), eps);
            if (std::abs(atom.j) > 2 * eps)
                ++big;
        }
    }
    double mean = 2 * std::pow(eps, -a) * 2.0;
    EXPECT_NEAR(total / double(reps), mean, 5 * std::sqrt(mean / reps));
    EXPECT_EQ(per_site[1], 0u);
    double p = std::pow(2.0, -a);
    EXPECT_NEAR(big / double(total), p, 5 * std::sqrt(p * (1 - p) / total));
    Stream rng(28, 0, StreamRole::poisson);
    EXPECT_THROW(sample_truncated_prm({a, 0.0}, masses, rng), InvalidArgument);
}
