#pragma once

#include "error.hpp"
#include "random.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/sinc.hpp>

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace sasfree {

inline void check_alpha(double alpha)
{
    if (!(alpha > 0.0 && alpha < 2.0))
        throw InvalidArgument("alpha must lie in (0, 2), got " + std::to_string(alpha));
}

struct StableParams {
    double alpha = 1.0;
    double scale = 1.0;

    void validate() const
    {
        check_alpha(alpha);
        if (!(scale > 0.0) || !std::isfinite(scale))
            throw InvalidArgument("stable scale must be positive and finite");
    }
};

// Chambers-Mallows-Stuck, symmetric case.
inline double sample_sas(const StableParams& p, Stream& rng)
{
    constexpr double pi = boost::math::constants::pi<double>();
    double v = pi * (rng.uniform01() - 0.5);
    if (p.alpha == 1.0)
        return p.scale * std::tan(v);
    double w = rng.exponential();
    double a = p.alpha;
    double x = std::sin(a * v) / std::pow(std::cos(v), 1.0 / a) *
               std::pow(std::cos((1.0 - a) * v) / w, (1.0 - a) / a);
    return p.scale * x;
}

// C_alpha = (int_0^inf x^-alpha sin x dx)^-1 = (1-alpha) / (Gamma(2-alpha) cos(pi alpha/2)).
// Written through sinc so that alpha = 1 gives 2/pi without a 0/0.
inline double stable_tail_constant(double alpha)
{
    check_alpha(alpha);
    constexpr double pi = boost::math::constants::pi<double>();
    double h = pi * (1.0 - alpha) / 2.0;
    return (2.0 / pi) / (boost::math::tgamma(2.0 - alpha) * boost::math::sinc_pi(h));
}

namespace detail {

// Cohen-Villegas-Zagier acceleration of sum_{k>=0} (-1)^k a_k.
inline double cvz_alternating_sum(const std::vector<double>& a)
{
    const auto n = static_cast<int>(a.size());
    double d = std::pow(3.0 + std::sqrt(8.0), n);
    d = (d + 1.0 / d) / 2.0;
    double b = -1.0;
    double c = -d;
    double s = 0.0;
    for (int k = 0; k < n; ++k) {
        c = b - c;
        s += c * a[static_cast<std::size_t>(k)];
        b = (k + n) * (k - n) * b / ((k + 0.5) * (k + 1.0));
    }
    return s / d;
}

} // namespace detail

// Independent evaluation of int_0^inf x^-alpha sin x dx: tanh-sinh on [0, pi]
// (handles the x^(1-alpha) endpoint), Gauss-Kronrod on each later half period,
// and the alternating half-period series accelerated by CVZ.
inline double sine_integral_by_quadrature(double alpha, int half_periods = 48)
{
    check_alpha(alpha);
    constexpr double pi = boost::math::constants::pi<double>();
    auto f = [alpha](double x) { return std::pow(x, -alpha) * std::sin(x); };
    auto near0 = [alpha](double x) { return std::pow(x, 1.0 - alpha) * boost::math::sinc_pi(x); };
    boost::math::quadrature::tanh_sinh<double> ts;
    double head = ts.integrate(near0, 0.0, pi, 1e-14);
    std::vector<double> mags;
    for (int k = 1; k <= half_periods; ++k) {
        double lo = k * pi;
        double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, lo, lo + pi, 0, 0);
        mags.push_back(std::abs(v));
    }
    return head - detail::cvz_alternating_sum(mags);
}

inline double stable_tail_constant_quadrature(double alpha) { return 1.0 / sine_integral_by_quadrature(alpha); }

inline double frechet_cdf(double x, double alpha)
{
    check_alpha(alpha);
    return x > 0.0 ? std::exp(-std::pow(x, -alpha)) : 0.0;
}

// Law of C^(1/alpha) Z_alpha.
inline double scaled_frechet_cdf(double x, double alpha, double c)
{
    check_alpha(alpha);
    require(c > 0.0, "Frechet scale constant must be positive");
    return x > 0.0 ? std::exp(-c * std::pow(x, -alpha)) : 0.0;
}

struct SeriesConfig {
    std::size_t num_terms = 0;
    std::uint64_t seed = 0;
    bool diagnostics = true;
};

struct LePageResult {
    double value = 0.0;
    std::size_t num_terms = 0;
    // Chebyshev 10-sigma bound on the discarded remainder: exceeded with
    // probability at most 1%.
    double tail_bound = 0.0;
};

// sum_{i > N} E Gamma_i^(-2/alpha) = Gamma(N+1-p) / ((p-1) Gamma(N)), p = 2/alpha.
inline double lepage_tail_second_moment(double alpha, std::size_t n)
{
    check_alpha(alpha);
    double p = 2.0 / alpha;
    double nn = static_cast<double>(n);
    if (nn + 1.0 <= p)
        return std::numeric_limits<double>::infinity();
    return boost::math::tgamma_delta_ratio(nn + 1.0 - p, p - 1.0) / (p - 1.0);
}

// m2 bounds E f(s)^2 under the control measure.
inline double lepage_tail_bound(double alpha, std::size_t n, double m2)
{
    double c = std::pow(stable_tail_constant(alpha), 1.0 / alpha);
    return 10.0 * c * std::sqrt(m2 * lepage_tail_second_moment(alpha, n));
}

inline std::size_t lepage_terms_for_bound(double alpha, double m2, double target,
                                          std::size_t max_terms = std::size_t{1} << 40)
{
    require(target > 0.0, "target bound must be positive");
    std::size_t lo = 1, hi = 1;
    while (!(lepage_tail_bound(alpha, hi, m2) < target)) {
        if (hi >= max_terms)
            throw ResourceError("LePage series needs more than " + std::to_string(max_terms) + " terms");
        lo = hi;
        hi *= 2;
    }
    while (lo < hi) {
        std::size_t mid = lo + (hi - lo) / 2;
        if (lepage_tail_bound(alpha, mid, m2) < target)
            hi = mid;
        else
            lo = mid + 1;
    }
    return hi;
}

// C_alpha^(1/alpha) sum_{i<=N} eps_i Gamma_i^(-1/alpha) f(s_i), with f evaluated by
// the caller at N iid draws s_i of the probability control measure. The tail
// bound uses the empirical second moment of the supplied values.
inline LePageResult lepage_integral(std::span<const double> f_values, double alpha, const SeriesConfig& cfg, Stream& rng)
{
    check_alpha(alpha);
    std::size_t n = cfg.num_terms;
    if (n == 0)
        throw InvalidArgument("LePage series needs at least one term");
    if (f_values.size() < n)
        throw InvalidArgument("fewer f values than series terms");
    double c = std::pow(stable_tail_constant(alpha), 1.0 / alpha);
    double gamma = 0.0, sum = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        gamma += rng.exponential();
        double f = f_values[i];
        sum += rng.sign() * std::pow(gamma, -1.0 / alpha) * f;
        m2 += f * f;
    }
    LePageResult r;
    r.value = c * sum;
    r.num_terms = n;
    if (cfg.diagnostics)
        r.tail_bound = lepage_tail_bound(alpha, n, m2 / static_cast<double>(n));
    return r;
}

struct NuAlphaTruncation {
    double alpha = 1.0;
    double epsilon = 1.0;

    void validate() const
    {
        check_alpha(alpha);
        if (!(epsilon > 0.0) || !std::isfinite(epsilon))
            throw InvalidArgument("truncation level must be positive and finite");
    }
    double mass() const { return 2.0 * std::pow(epsilon, -alpha); }
};

struct PrmAtom {
    std::size_t site = 0;
    double j = 0.0;
};

// Atoms of PRM(nu_alpha x sum_s mass_s delta_s) with |j| > epsilon.
inline std::vector<PrmAtom> sample_truncated_prm(const NuAlphaTruncation& tr, std::span<const double> site_masses, Stream& rng)
{
    tr.validate();
    std::vector<PrmAtom> out;
    for (std::size_t s = 0; s < site_masses.size(); ++s) {
        double m = site_masses[s];
        if (!(m >= 0.0) || !std::isfinite(m))
            throw InvalidArgument("site masses must be finite and nonnegative");
        if (m == 0.0)
            continue;
        std::uint64_t count = rng.poisson(tr.mass() * m);
        for (std::uint64_t k = 0; k < count; ++k) {
            double mag = tr.epsilon * std::pow(rng.uniform01(), -1.0 / tr.alpha);
            out.push_back(PrmAtom{s, rng.sign() * mag});
        }
    }
    return out;
}

} // namespace sasfree
