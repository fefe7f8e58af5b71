#pragma once

#include "error.hpp"
#include "fields.hpp"
#include "free_group.hpp"
#include "kernel.hpp"
#include "random.hpp"
#include "stable.hpp"
#include "stats.hpp"
#include "subgraphs.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

namespace sasfree {

struct PointMeasure {
    double delta = 1.0;
    std::vector<double> atoms;

    std::size_t count_above(double s) const
    {
        return static_cast<std::size_t>(std::count_if(atoms.begin(), atoms.end(), [s](double x) { return std::abs(x) > s; }));
    }
};

struct EnrichedAtom {
    double j = 0.0;
    std::size_t w = 0;
    Word u = Word::identity(2);
    int s = 0;
    int ell = 0;
    std::optional<EllPath> r;
};

// g >= 0, constant on (b_{i-1}, b_i] with b_{-1} = -inf and b_last+1 = +inf.
class PiecewiseConstant {
public:
    PiecewiseConstant() : values_{0.0} {}

    PiecewiseConstant(std::vector<double> breaks, std::vector<double> values)
        : breaks_(std::move(breaks)), values_(std::move(values))
    {
        require(values_.size() == breaks_.size() + 1, "piecewise function needs one more value than breakpoints");
        for (std::size_t i = 1; i < breaks_.size(); ++i)
            require(breaks_[i - 1] < breaks_[i], "breakpoints must be strictly increasing");
        for (double b : breaks_)
            require(std::isfinite(b), "breakpoints must be finite");
        for (double v : values_)
            require(v >= 0.0 && std::isfinite(v), "test function must be finite and nonnegative");
    }

    // theta * 1{|y| > s}
    static PiecewiseConstant symmetric_step(double theta, double s)
    {
        require(s > 0.0, "step threshold must be positive");
        return PiecewiseConstant({-s, s}, {theta, 0.0, theta});
    }

    double operator()(double y) const
    {
        auto i = static_cast<std::size_t>(std::lower_bound(breaks_.begin(), breaks_.end(), y) - breaks_.begin());
        return values_[i];
    }

    const std::vector<double>& breaks() const { return breaks_; }
    const std::vector<double>& values() const { return values_; }

    // Largest r with g = 0 on [-r, r]; 0 if g does not vanish near 0.
    double zero_radius() const
    {
        auto i = static_cast<std::size_t>(std::lower_bound(breaks_.begin(), breaks_.end(), 0.0) - breaks_.begin());
        if (values_[i] != 0.0)
            return 0.0;
        double lo = i == 0 ? -INFINITY : breaks_[i - 1];
        double hi = i == breaks_.size() ? INFINITY : breaks_[i];
        if (hi == 0.0) {
            if (values_[i + 1] != 0.0)
                return 0.0;
            hi = i + 1 == breaks_.size() ? INFINITY : breaks_[i + 1];
        }
        return std::min(-lo, hi);
    }

    bool is_zero() const
    {
        return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
    }

private:
    std::vector<double> breaks_;
    std::vector<double> values_;
};

inline double apply(const PointMeasure& n, const PiecewiseConstant& g)
{
    if (g.zero_radius() < n.delta && !g.is_zero())
        throw InvalidArgument("test function does not vanish below the truncation threshold");
    double s = 0.0;
    for (double x : n.atoms)
        s += g(x);
    return s;
}

// (2d)(2d-1)^(ell-1): the size of C_ell for ell >= 1, and d/(d-1) times mu(ell) for ell <= 0.
inline double level_weight(int d, int ell) { return 2.0 * d * std::pow(2.0 * d - 1.0, ell - 1); }

// sum_{ell <= -m} level_weight = d/(d-1) (2d-1)^-m. For such ell, xi contains E_m.
inline double deep_level_weight(int d, int m) { return d / (d - 1.0) * std::pow(2.0 * d - 1.0, -m); }

// int (1 - exp(-sum_k g(x c_k))) nu_alpha(dx), exactly: the integrand is
// constant between the points b / c_k, and nu_alpha(a, b] = a^-alpha - b^-alpha.
inline double nu_alpha_integral(std::span<const double> c, const PiecewiseConstant& g, double alpha)
{
    double total = 0.0;
    for (int side : {1, -1}) {
        std::vector<double> xs;
        for (double ck : c) {
            if (ck == 0.0)
                continue;
            for (double b : g.breaks()) {
                double x = b / (side * ck);
                if (x > 0.0)
                    xs.push_back(x);
            }
        }
        std::sort(xs.begin(), xs.end());
        xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
        auto h_at = [&](double x) {
            double h = 0.0;
            for (double ck : c)
                if (ck != 0.0)
                    h += g(side * x * ck);
            return h;
        };
        double first = xs.empty() ? 1.0 : xs.front() / 2.0;
        if (h_at(first) != 0.0)
            throw InvalidArgument("test function does not vanish near 0; the integral diverges");
        for (std::size_t i = 0; i < xs.size(); ++i) {
            double a = xs[i];
            double b = i + 1 < xs.size() ? xs[i + 1] : INFINITY;
            double mid = std::isfinite(b) ? (a + b) / 2.0 : 2.0 * a;
            double h = h_at(mid);
            if (h == 0.0)
                continue;
            double mass = std::pow(a, -alpha) - (std::isfinite(b) ? std::pow(b, -alpha) : 0.0);
            total += -std::expm1(-h) * mass;
        }
    }
    return total;
}

namespace detail {

inline std::size_t path_length_for(int ell, int m) { return static_cast<std::size_t>(m + 2 * std::abs(ell) + 2); }

// Values of the thinned reflected kernel over E_m for one atom.
inline std::vector<double> thinned(const std::vector<double>& fprime, const std::vector<char>& mask)
{
    std::vector<double> out(fprime.size(), 0.0);
    for (std::size_t k = 0; k < fprime.size(); ++k)
        if (mask[k])
            out[k] = fprime[k];
    return out;
}

// Calls fn(ell, weight, atom, thinned values) for every level of the sum with
// one subgraph per level drawn from rng; deep negative levels use all of E_m.
template <class Fn>
void for_each_level(const KernelTable& fprime, Stream& rng, Fn&& fn)
{
    const int d = fprime.rank();
    const int m = fprime.radius();
    for (int ell = -m + 1; ell <= m; ++ell) {
        auto xi = sample_gamma_ell(ell, d, path_length_for(ell, m), rng);
        auto mask = members_in_ball(xi, fprime.indexer());
        for (std::size_t a = 0; a < fprime.atoms().size(); ++a)
            fn(ell, level_weight(d, ell), a, thinned(fprime.atoms()[a].values, mask));
    }
    for (std::size_t a = 0; a < fprime.atoms().size(); ++a)
        fn(-m, deep_level_weight(d, m), a, fprime.atoms()[a].values);
}

} // namespace detail

// Randomly thinned cluster Poisson limit, restricted to |x| > delta.
inline PointMeasure sample_N_star(const MixedMovingAverage& model, double delta, int u_radius_cap, Stream& rng,
                                  std::vector<EnrichedAtom>* trace = nullptr)
{
    if (!(delta > 0.0))
        throw InvalidArgument("delta must be positive");
    require(u_radius_cap >= 0, "u radius cap must be nonnegative");
    const double alpha = model.alpha;
    check_alpha(alpha);
    const KernelTable fp = model.f.reflected();
    const int d = fp.rank();
    const int m = fp.radius();
    const int levels = std::min(u_radius_cap, m);
    const double c = std::pow(d / (d - 1.0), 1.0 / alpha);
    std::vector<char> full(fp.ball_size(), 1);

    PointMeasure out;
    out.delta = delta;
    auto emit = [&](double scale, const std::vector<double>& vals, const std::vector<char>& mask) {
        for (std::size_t k = 0; k < vals.size(); ++k) {
            if (!mask[k] || vals[k] == 0.0)
                continue;
            double x = scale * vals[k];
            if (std::abs(x) > delta)
                out.atoms.push_back(x);
        }
    };

    for (std::size_t a = 0; a < fp.atoms().size(); ++a) {
        const auto& atom = fp.atoms()[a];
        const double sup = fp.sup_abs(a);
        if (sup == 0.0)
            continue;
        if (levels >= 1) {
            std::vector<double> masses;
            for (int ell = 1; ell <= levels; ++ell)
                masses.push_back(atom.mass * level_weight(d, ell));
            auto atoms = sample_truncated_prm({alpha, delta / sup}, masses, rng);
            for (const auto& p : atoms) {
                int ell = static_cast<int>(p.site) + 1;
                auto xi = sample_gamma_ell(ell, d, detail::path_length_for(ell, m), rng);
                emit(p.j, atom.values, members_in_ball(xi, fp.indexer()));
                if (trace)
                    trace->push_back({p.j, a, xi.vertex(0), 0, ell, xi});
            }
        }
        const double mass_e[] = {atom.mass};
        auto atoms = sample_truncated_prm({alpha, delta / (c * sup)}, mass_e, rng);
        for (const auto& p : atoms) {
            int s = sample_mu(d, rng);
            if (s <= -m) {
                emit(c * p.j, atom.values, full);
                if (trace)
                    trace->push_back({p.j, a, Word::identity(d), s, s, std::nullopt});
                continue;
            }
            auto xi = sample_gamma_ell(s, d, detail::path_length_for(s, m), rng);
            emit(c * p.j, atom.values, members_in_ball(xi, fp.indexer()));
            if (trace)
                trace->push_back({p.j, a, Word::identity(d), s, s, xi});
        }
    }
    return out;
}

struct LaplaceReport {
    double value = 1.0;
    double ci_low = 1.0;
    double ci_high = 1.0;
    Estimate exponent;
    double deep_tail_weight = 0.0;
    std::optional<double> level_symmetric_value;
    std::optional<bool> level_symmetric_agrees;
};

inline bool is_level_symmetric(const KernelTable& f)
{
    const auto& b = f.indexer();
    for (const auto& a : f.atoms())
        for (int L = 1; L <= f.radius(); ++L)
            for (std::uint64_t i = b.level_begin(L) + 1; i < b.level_end(L); ++i)
                if (a.values[i] != a.values[b.level_begin(L)])
                    return false;
    return true;
}

namespace detail {

inline double lap_exponent_sample(const KernelTable& fp, const PiecewiseConstant& g, double alpha, Stream& rng)
{
    double total = 0.0;
    for_each_level(fp, rng, [&](int, double weight, std::size_t a, const std::vector<double>& vals) {
        total += fp.atoms()[a].mass * weight * nu_alpha_integral(vals, g, alpha);
    });
    return total;
}

inline double kx_alpha_sample(const KernelTable& fp, double alpha, Stream& rng)
{
    double total = 0.0;
    for_each_level(fp, rng, [&](int, double weight, std::size_t a, const std::vector<double>& vals) {
        double sup = 0.0;
        for (double v : vals)
            sup = std::max(sup, std::abs(v));
        total += fp.atoms()[a].mass * weight * 2.0 * std::pow(sup, alpha);
    });
    return total;
}

inline Estimate mc_over_subgraphs(std::size_t samples, std::uint64_t seed, const std::function<double(Stream&)>& one)
{
    require(samples >= 2, "need at least two subgraph samples");
    std::vector<double> v(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        Stream rng(seed, i, StreamRole::subgraph);
        v[i] = one(rng);
    }
    return batch_means(v);
}

} // namespace detail

// Exponent of the Laplace functional for level-symmetric f = q(v, |t|): the
// thinned kernel at level ell takes q(v, L) on |xi intersect C_L| points, so the
// sum over ell needs no subgraph at all.
inline double laplace_exponent_level_symmetric(const MixedMovingAverage& model, const PiecewiseConstant& g)
{
    const auto& f = model.f;
    if (!is_level_symmetric(f))
        throw InvalidArgument("kernel is not level-symmetric");
    const int d = f.rank(), m = f.radius();
    const auto& b = f.indexer();
    double total = 0.0;
    for (const auto& atom : f.atoms()) {
        auto integral = [&](auto count) {
            std::vector<double> vals;
            for (int L = 0; L <= m; ++L) {
                auto n = count(L).template convert_to<std::size_t>();
                vals.insert(vals.end(), n, atom.values[b.level_begin(L)]);
            }
            return nu_alpha_integral(vals, g, model.alpha);
        };
        for (int ell = -m + 1; ell <= m; ++ell)
            total += atom.mass * level_weight(d, ell) * integral([&](int L) { return level_profile(ell, L, d); });
        total += atom.mass * deep_level_weight(d, m) * integral([&](int L) { return sphere_size(d, L); });
    }
    return total;
}

// E exp(-N_*(g)): ell in (-m, m] by Monte Carlo over subgraphs (one subgraph
// per level per sample, so every sample is an unbiased draw of the whole
// exponent), ell <= -m in closed form, nu_alpha integrals exact.
inline LaplaceReport laplace_functional(const MixedMovingAverage& model, const PiecewiseConstant& g,
                                        std::size_t mc_subgraphs, std::uint64_t seed)
{
    check_alpha(model.alpha);
    LaplaceReport r;
    const KernelTable fp = model.f.reflected();
    r.deep_tail_weight = deep_level_weight(fp.rank(), fp.radius());
    if (g.is_zero())
        return r;
    if (g.zero_radius() <= 0.0)
        throw InvalidArgument("test function does not vanish near 0; the integral diverges");
    r.exponent = detail::mc_over_subgraphs(mc_subgraphs, seed, [&](Stream& rng) {
        return detail::lap_exponent_sample(fp, g, model.alpha, rng);
    });
    r.value = std::exp(-r.exponent.mean);
    r.ci_low = std::exp(-r.exponent.ci_high);
    r.ci_high = std::exp(-r.exponent.ci_low);
    if (is_level_symmetric(model.f)) {
        double e = laplace_exponent_level_symmetric(model, g);
        r.level_symmetric_value = std::exp(-e);
        double tol = 1e-9 * std::max(1.0, std::abs(e));
        r.level_symmetric_agrees = e >= r.exponent.ci_low - tol && e <= r.exponent.ci_high + tol;
    }
    return r;
}

struct KxReport {
    Estimate kx_alpha;
    double kx = 0.0;
    double kx_ci_low = 0.0;
    double kx_ci_high = 0.0;
    double deep_tail_weight = 0.0;
};

inline KxReport compute_K_X(const MixedMovingAverage& model, std::size_t mc_subgraphs, std::uint64_t seed)
{
    check_alpha(model.alpha);
    if (model.f.is_zero())
        throw InvalidArgument("K_X is degenerate (zero) for the zero kernel");
    const KernelTable fp = model.f.reflected();
    KxReport r;
    r.deep_tail_weight = deep_level_weight(fp.rank(), fp.radius());
    r.kx_alpha = detail::mc_over_subgraphs(mc_subgraphs, seed, [&](Stream& rng) {
        return detail::kx_alpha_sample(fp, model.alpha, rng);
    });
    const double ia = 1.0 / model.alpha;
    r.kx = std::pow(r.kx_alpha.mean, ia);
    r.kx_ci_low = std::pow(std::max(0.0, r.kx_alpha.ci_low), ia);
    r.kx_ci_high = std::pow(r.kx_alpha.ci_high, ia);
    return r;
}

// Enumerates every K-step ell-path (all equally likely under the path-uniform
// law) and averages fn over them. Only feasible for small d, m, ell.
inline double exact_gamma_average(int ell, int d, std::size_t K, const std::function<double(const EllPath&)>& fn,
                                  std::size_t budget = 2'000'000)
{
    const auto a = static_cast<std::size_t>(std::abs(ell));
    BigInt count = sphere_size(d, static_cast<int>(a));
    std::size_t outward = ell >= 0 ? K : (K > a ? K - a : 0);
    if (ell == 0 && outward > 0)
        count *= BigInt(2 * d) * ipow(2 * d - 1, static_cast<unsigned>(outward - 1));
    else
        count *= ipow(2 * d - 1, static_cast<unsigned>(outward));
    check_budget(count, budget, "ell-path enumeration");
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& top : enumerate_sphere(d, static_cast<int>(a))) {
        std::vector<Word> v{top};
        Word cur = top;
        if (ell < 0)
            for (std::size_t k = 0; k < a && v.size() <= K; ++k) {
                cur = cur.prefix(cur.length() - 1);
                v.push_back(cur);
            }
        std::function<void(std::vector<Word>&)> grow = [&](std::vector<Word>& path) {
            if (path.size() == K + 1) {
                sum += fn(EllPath(ell, d, path));
                ++n;
                return;
            }
            const Word last = path.back();
            for (int o = 0; o < 2 * d; ++o) {
                auto g = Generator::from_ordinal(o);
                if (!last.is_identity() && g == last.back().inverse())
                    continue;
                Word next = last.is_identity() ? Word::generator(d, g.index(), g.sign()) : last.extended(g);
                if (path.size() >= 2 && next == path[path.size() - 2])
                    continue;
                path.push_back(next);
                grow(path);
                path.pop_back();
            }
        };
        grow(v);
    }
    return sum / static_cast<double>(n);
}

// Exponent of the Laplace functional and K_X^alpha with every subgraph
// integral done by exact path enumeration.
inline double laplace_exponent_exact(const MixedMovingAverage& model, const PiecewiseConstant& g)
{
    const KernelTable fp = model.f.reflected();
    const int d = fp.rank(), m = fp.radius();
    double total = 0.0;
    for (std::size_t a = 0; a < fp.atoms().size(); ++a) {
        const auto& vals = fp.atoms()[a].values;
        double mass = fp.atoms()[a].mass;
        for (int ell = -m + 1; ell <= m; ++ell) {
            double avg = exact_gamma_average(ell, d, detail::path_length_for(ell, m), [&](const EllPath& xi) {
                return nu_alpha_integral(detail::thinned(vals, members_in_ball(xi, fp.indexer())), g, model.alpha);
            });
            total += mass * level_weight(d, ell) * avg;
        }
        total += mass * deep_level_weight(d, m) * nu_alpha_integral(vals, g, model.alpha);
    }
    return total;
}

inline double kx_alpha_exact(const MixedMovingAverage& model)
{
    const KernelTable fp = model.f.reflected();
    const int d = fp.rank(), m = fp.radius();
    double total = 0.0;
    for (std::size_t a = 0; a < fp.atoms().size(); ++a) {
        const auto& vals = fp.atoms()[a].values;
        double mass = fp.atoms()[a].mass;
        auto sup_pow = [&](const std::vector<double>& v) {
            double s = 0.0;
            for (double x : v)
                s = std::max(s, std::abs(x));
            return 2.0 * std::pow(s, model.alpha);
        };
        for (int ell = -m + 1; ell <= m; ++ell) {
            double avg = exact_gamma_average(ell, d, detail::path_length_for(ell, m), [&](const EllPath& xi) {
                return sup_pow(detail::thinned(vals, members_in_ball(xi, fp.indexer())));
            });
            total += mass * level_weight(d, ell) * avg;
        }
        total += mass * deep_level_weight(d, m) * sup_pow(vals);
    }
    return total;
}

// E[number of atoms of N_* with |x| > delta] = 2 delta^-alpha sum_w nu_w
// sum_ell weight_ell E_gamma sum_k |f'~(w,k)|^alpha, and the cruder bound
// 2 delta^-alpha (sum_ell<=m weight_ell) ||f||_alpha^alpha that dominates it.
struct CountExpectation {
    Estimate expected;
    double bound = 0.0;
};

inline CountExpectation expected_atoms_above(const MixedMovingAverage& model, double delta, std::size_t mc_subgraphs,
                                             std::uint64_t seed)
{
    require(delta > 0.0, "delta must be positive");
    const KernelTable fp = model.f.reflected();
    const double alpha = model.alpha;
    const double scale = 2.0 * std::pow(delta, -alpha);
    CountExpectation r;
    r.expected = detail::mc_over_subgraphs(mc_subgraphs, seed, [&](Stream& rng) {
        double total = 0.0;
        detail::for_each_level(fp, rng, [&](int, double weight, std::size_t a, const std::vector<double>& vals) {
            double s = 0.0;
            for (double v : vals)
                s += std::pow(std::abs(v), alpha);
            total += fp.atoms()[a].mass * weight * s;
        });
        return scale * total;
    });
    const int d = fp.rank(), m = fp.radius();
    double weights = deep_level_weight(d, m);
    for (int ell = -m + 1; ell <= m; ++ell)
        weights += level_weight(d, ell);
    r.bound = scale * weights * fp.lalpha_norm(alpha);
    return r;
}

struct LevelSymmetricReport {
    double formula_kx_alpha = 0.0;
    double formula_kx = 0.0;
    KxReport general;
    double ratio = 1.0; // formula / general, in K_X^alpha
    bool mismatch = false;
    std::vector<std::vector<double>> h; // h_v by level, per atom
};

// K_X^alpha = 2^alpha/(d-1) int L^alpha dnu + int ||2 h_v||_alpha^alpha dnu for
// level-symmetric f, with h_v from the record levels of |f(v, .)|. Compared
// against the general subgraph formula and flagged when they disagree.
inline LevelSymmetricReport compute_K_X_level_symmetric(const MixedMovingAverage& model, std::size_t mc_subgraphs = 2000,
                                                        std::uint64_t seed = 1)
{
    check_alpha(model.alpha);
    const KernelTable& f = model.f;
    if (!is_level_symmetric(f))
        throw InvalidArgument("kernel is not level symmetric");
    const int d = f.rank(), m = f.radius();
    const double alpha = model.alpha;
    LevelSymmetricReport r;
    double total = 0.0;
    for (const auto& atom : f.atoms()) {
        std::vector<double> q(static_cast<std::size_t>(m) + 1);
        for (int L = 0; L <= m; ++L)
            q[L] = atom.values[f.indexer().level_begin(L)];
        std::vector<double> h(q.size(), 0.0);
        int start = 0;
        while (start <= m) {
            int best = start;
            for (int L = start; L <= m; ++L)
                if (std::abs(q[L]) > std::abs(q[best]))
                    best = L;
            for (int L = start; L <= best; ++L)
                h[L] = q[best];
            start = best + 1;
        }
        double sup = 0.0;
        for (double v : q)
            sup = std::max(sup, std::abs(v));
        double norm = 0.0;
        for (int L = 0; L <= m; ++L)
            norm += to_double(sphere_size(d, L)) * std::pow(2.0 * std::abs(h[L]), alpha);
        total += atom.mass * (std::pow(2.0, alpha) / (d - 1.0) * std::pow(sup, alpha) + norm);
        r.h.push_back(std::move(h));
    }
    r.formula_kx_alpha = total;
    r.formula_kx = std::pow(total, 1.0 / alpha);
    r.general = compute_K_X(model, mc_subgraphs, seed);
    r.ratio = total / r.general.kx_alpha.mean;
    double tol = 1e-9 * std::max(1.0, std::abs(r.general.kx_alpha.mean));
    r.mismatch = total < r.general.kx_alpha.ci_low - tol || total > r.general.kx_alpha.ci_high + tol;
    return r;
}

} // namespace sasfree
