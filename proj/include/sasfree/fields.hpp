#pragma once

#include "boundary.hpp"
#include "error.hpp"
#include "free_group.hpp"
#include "kernel.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "rational.hpp"
#include "stable.hpp"
#include "stats.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace sasfree {

// Boundary action phi_t(omega) = t^-1 omega on the Patterson-Sullivan
// boundary, f = 1: X_t = int w_t^(1/alpha) dM.
struct BoundaryField {
    int d = 2;
    double alpha = 1.0;
};

// Action of G on R through the a1-exponent sum, f = 1_(0,1].
struct ShiftField {
    int d = 2;
    double alpha = 1.0;
};

// Shift on the product of iid Pareto(theta) coordinates indexed by G, f = projection at e.
struct ParetoField {
    int d = 2;
    double alpha = 1.0;
    double theta = 3.0;
};

// X_t = sum_{w,u} f(w, t^-1 u) Z_{w,u}, the series form with PRM(nu_alpha x nu x counting).
struct MixedMovingAverage {
    double alpha = 1.0;
    KernelTable f;
};

using FieldModel = std::variant<BoundaryField, ShiftField, ParetoField, MixedMovingAverage>;

inline int model_rank(const FieldModel& m)
{
    return std::visit([](const auto& x) {
        if constexpr (std::is_same_v<std::decay_t<decltype(x)>, MixedMovingAverage>)
            return x.f.rank();
        else
            return x.d;
    }, m);
}

inline double model_alpha(const FieldModel& m)
{
    return std::visit([](const auto& x) { return x.alpha; }, m);
}

inline std::string model_name(const FieldModel& m)
{
    static const char* names[] = {"boundary", "shift", "pareto", "mma"};
    return names[m.index()];
}

inline void validate_model(const FieldModel& m)
{
    check_rank(model_rank(m));
    check_alpha(model_alpha(m));
    if (auto* p = std::get_if<ParetoField>(&m))
        require(p->theta > p->alpha && std::isfinite(p->theta), "Pareto field needs theta > alpha");
    if (auto* p = std::get_if<MixedMovingAverage>(&m))
        require(!p->f.atoms().empty(), "moving average kernel has no atoms");
}

struct SimulationConfig {
    // 0 selects the number of LePage terms by the remainder rule.
    std::size_t num_terms = 0;
    double remainder_fraction = 1e-3;
    std::size_t site_budget = kDefaultWordBudget;
};

struct FieldSample {
    int d = 2;
    int n = 0;
    std::vector<double> values; // shortlex order over E_n
    std::size_t num_terms = 0;
    double tail_bound = 0.0;
    StreamKey stream;

    double at(const Word& t) const { return values.at(BallIndexer(d, n).index(t)); }
};

inline double partial_maximum(const FieldSample& s)
{
    double m = 0.0;
    for (double v : s.values)
        m = std::max(m, std::abs(v));
    return m;
}

inline double boundary_maximum(const FieldSample& s)
{
    BallIndexer b(s.d, s.n);
    double m = 0.0;
    for (std::uint64_t i = b.level_begin(s.n); i < b.level_end(s.n); ++i)
        m = std::max(m, std::abs(s.values[i]));
    return m;
}

// max over |t| <= n of E_omega (2d-1)^(-2 B_omega(t) / alpha).
inline double boundary_field_second_moment(int d, double alpha, int n)
{
    const double q = 2.0 * d - 1.0;
    auto tail = [&](int j) { return j == 0 ? 1.0 : 1.0 / (2.0 * d * std::pow(q, j - 1)); };
    double best = 0.0;
    for (int L = 0; L <= n; ++L) {
        double e = 0.0;
        for (int j = 0; j <= L; ++j) {
            double p = tail(j) - (j < L ? tail(j + 1) : 0.0);
            e += p * std::pow(q, -2.0 * (L - 2 * j) / alpha);
        }
        best = std::max(best, e);
    }
    return best;
}

// For each index of E_n, the last letter (unused at index 0).
inline std::vector<Generator> ball_last_letters(const BallIndexer& b)
{
    std::vector<Generator> last(b.size());
    const auto q = static_cast<std::uint64_t>(2 * b.rank() - 1);
    for (int L = 1; L <= b.radius(); ++L) {
        for (std::uint64_t i = b.level_begin(L); i < b.level_end(L); ++i) {
            std::uint64_t r = i - b.level_begin(L);
            if (L == 1)
                last[i] = Generator::from_ordinal(static_cast<int>(r));
            else
                last[i] = BallIndexer::continuation_letter(last[b.level_begin(L - 1) + r / q], static_cast<int>(r % q));
        }
    }
    return last;
}

// Signed a1-exponent sum of every word of E_n.
inline std::vector<int> ball_a1_exponents(const BallIndexer& b)
{
    auto last = ball_last_letters(b);
    std::vector<int> k(b.size(), 0);
    for (std::uint64_t i = 1; i < b.size(); ++i)
        k[i] = k[b.parent(i)] + (last[i].index() == 1 ? last[i].sign() : 0);
    return k;
}

// Precomputes everything that depends only on (model, n); simulate() is then
// a pure function of the stream.
class FieldSimulator {
public:
    FieldSimulator(FieldModel model, int n, SimulationConfig cfg = {})
        : model_(std::move(model)), n_(n), cfg_(cfg), ball_(model_rank(model_), n)
    {
        validate_model(model_);
        require(n >= 0, "radius must be nonnegative");
        check_budget(BigInt(ball_.size()), cfg_.site_budget, "field index set");
        const int d = model_rank(model_);
        const double alpha = model_alpha(model_);
        const double q = 2.0 * d - 1.0;
        if (std::holds_alternative<BoundaryField>(model_)) {
            double m2 = boundary_field_second_moment(d, alpha, n);
            set_terms(alpha, m2, cfg_.remainder_fraction * std::pow(q, n / alpha));
            deltas_.resize(static_cast<std::size_t>(n) + 1);
            level_scale_.resize(static_cast<std::size_t>(n) + 1);
            deltas_[0] = 1.0;
            for (int j = 1; j <= n; ++j)
                deltas_[j] = std::pow(q, 2.0 * j / alpha) - std::pow(q, 2.0 * (j - 1) / alpha);
            double c = std::pow(stable_tail_constant(alpha), 1.0 / alpha);
            for (int j = 0; j <= n; ++j)
                level_scale_[j] = c * std::pow(q, -j / alpha);
        } else if (std::holds_alternative<ShiftField>(model_)) {
            exponents_ = ball_a1_exponents(ball_);
        } else if (auto* p = std::get_if<ParetoField>(&model_)) {
            double m2 = p->theta > 2.0 ? p->theta / (p->theta - 2.0) : std::numeric_limits<double>::infinity();
            double scale = std::pow(p->theta / (p->theta - alpha), 1.0 / alpha);
            if (cfg_.num_terms == 0 && !std::isfinite(m2))
                throw InvalidArgument("Pareto field with theta <= 2 needs an explicit number of series terms");
            set_terms(alpha, m2, cfg_.remainder_fraction * scale);
        } else {
            const auto& mma = std::get<MixedMovingAverage>(model_);
            const int m = mma.f.radius();
            check_budget(ball_size(d, n + m), cfg_.site_budget, "moving average noise sites");
            outer_ = BallIndexer(d, n + m);
            auto words = enumerate_ball(d, n, cfg_.site_budget);
            auto support = enumerate_ball(d, m, cfg_.site_budget);
            const double c = stable_tail_constant(alpha);
            for (const auto& atom : mma.f.atoms()) {
                z_scale_.push_back(std::pow(2.0 * atom.mass / c, 1.0 / alpha));
                auto& plan = plan_.emplace_back();
                for (std::uint64_t ti = 0; ti < words.size(); ++ti)
                    for (std::uint64_t ki = 0; ki < support.size(); ++ki)
                        if (atom.values[ki] != 0.0)
                            plan.push_back({ti, outer_->index(multiply(words[ti], support[ki])), atom.values[ki]});
            }
        }
    }

    const FieldModel& model() const { return model_; }
    int radius() const { return n_; }
    const BallIndexer& ball() const { return ball_; }
    std::size_t num_terms() const { return terms_; }
    double tail_bound() const { return tail_bound_; }

    FieldSample simulate(Stream& rng) const
    {
        FieldSample s;
        s.d = ball_.rank();
        s.n = n_;
        s.stream = rng.key();
        s.num_terms = terms_;
        s.tail_bound = tail_bound_;
        s.values.assign(ball_.size(), 0.0);
        const double alpha = model_alpha(model_);
        if (std::holds_alternative<BoundaryField>(model_))
            simulate_boundary(s, alpha, rng);
        else if (std::holds_alternative<ShiftField>(model_))
            simulate_shift(s, alpha, rng);
        else if (std::holds_alternative<ParetoField>(model_))
            simulate_pareto(s, alpha, rng);
        else
            simulate_mma(s, alpha, rng);
        return s;
    }

private:
    struct PlanEntry {
        std::uint64_t t;
        std::uint64_t u;
        double value;
    };

    void set_terms(double alpha, double m2, double target)
    {
        terms_ = cfg_.num_terms ? cfg_.num_terms : lepage_terms_for_bound(alpha, m2, target);
        tail_bound_ = lepage_tail_bound(alpha, terms_, m2);
    }

    // With c_i(t) = |t ^ omega_i|, (2d-1)^(2c/alpha) = sum_{j<=c} delta_j, so
    // X_t is a sum over the prefixes v of t of delta_|v| A(v), where A(v) sums
    // the series weights of the omega_i passing through v.
    void simulate_boundary(FieldSample& s, double alpha, Stream& rng) const
    {
        const int n = n_;
        const auto twod = static_cast<std::uint64_t>(2 * ball_.rank());
        const std::uint64_t q = twod - 1;
        std::vector<double> acc(ball_.size(), 0.0);
        double gamma = 0.0;
        const double inv_alpha = -1.0 / alpha;
        for (std::size_t i = 0; i < terms_; ++i) {
            gamma += rng.exponential();
            const double a = (alpha == 1.0 ? 1.0 / gamma : std::pow(gamma, inv_alpha)) * rng.sign();
            acc[0] += a;
            if (n == 0)
                continue;
            std::uint64_t r = rng.bounded(twod);
            acc[ball_.level_begin(1) + r] += a;
            for (int j = 2; j <= n; ++j) {
                r = r * q + rng.bounded(q);
                acc[ball_.level_begin(j) + r] += a;
            }
        }
        std::vector<double> y(ball_.size());
        y[0] = deltas_[0] * acc[0];
        s.values[0] = level_scale_[0] * y[0];
        for (int L = 1; L <= n; ++L) {
            for (std::uint64_t idx = ball_.level_begin(L); idx < ball_.level_end(L); ++idx) {
                std::uint64_t parent = L == 1 ? 0 : ball_.level_begin(L - 1) + (idx - ball_.level_begin(L)) / q;
                y[idx] = y[parent] + deltas_[L] * acc[idx];
                s.values[idx] = level_scale_[L] * y[idx];
            }
        }
    }

    // Values at distinct a1-exponents are iid SaS(1); X_t = X'_{k(t)}.
    void simulate_shift(FieldSample& s, double alpha, Stream& rng) const
    {
        std::vector<double> line(2 * static_cast<std::size_t>(n_) + 1);
        for (auto& v : line)
            v = sample_sas({alpha, 1.0}, rng);
        for (std::size_t i = 0; i < s.values.size(); ++i)
            s.values[i] = line[static_cast<std::size_t>(exponents_[i] + n_)];
    }

    void simulate_pareto(FieldSample& s, double alpha, Stream& rng) const
    {
        const auto& p = std::get<ParetoField>(model_);
        const double c = std::pow(stable_tail_constant(alpha), 1.0 / alpha);
        double gamma = 0.0;
        for (std::size_t i = 0; i < terms_; ++i) {
            gamma += rng.exponential();
            const double a = c * rng.sign() * std::pow(gamma, -1.0 / alpha);
            for (auto& v : s.values)
                v += a * std::pow(rng.uniform01(), -1.0 / p.theta);
        }
    }

    void simulate_mma(FieldSample& s, double alpha, Stream& rng) const
    {
        std::vector<double> z(outer_->size());
        for (std::size_t a = 0; a < plan_.size(); ++a) {
            for (auto& v : z)
                v = sample_sas({alpha, z_scale_[a]}, rng);
            for (const auto& e : plan_[a])
                s.values[e.t] += e.value * z[e.u];
        }
    }

    FieldModel model_;
    int n_;
    SimulationConfig cfg_;
    BallIndexer ball_;
    std::size_t terms_ = 0;
    double tail_bound_ = 0.0;
    std::vector<double> deltas_;
    std::vector<double> level_scale_;
    std::vector<int> exponents_;
    std::optional<BallIndexer> outer_;
    std::vector<double> z_scale_;
    std::vector<std::vector<PlanEntry>> plan_;
};

inline FieldSample simulate_field(const FieldModel& model, int n, const SimulationConfig& cfg, Stream& rng)
{
    return FieldSimulator(model, n, cfg).simulate(rng);
}

// max over t in E_n of (2 |t ^ omega| - |t|), i.e. of -B_omega(t), by
// branch and bound: off the ray of omega the confluent is frozen, so a subtree
// rooted at depth L off the ray can do no better than its root.
inline long max_neg_busemann(const Word& omega_prefix, int n)
{
    require(n >= 0, "radius must be nonnegative");
    if (omega_prefix.length() < static_cast<std::size_t>(n))
        throw InsufficientPrefix("boundary prefix too short for the ball", omega_prefix.length(), static_cast<std::size_t>(n));
    const int d = omega_prefix.rank();
    long best = 0;
    struct Node {
        int depth;
        int conf;
        bool on_ray;
        Generator last;
    };
    std::vector<Node> stack{{0, 0, true, Generator()}};
    while (!stack.empty()) {
        Node x = stack.back();
        stack.pop_back();
        best = std::max(best, 2L * x.conf - x.depth);
        if (x.depth == n)
            continue;
        for (int o = 0; o < 2 * d; ++o) {
            auto g = Generator::from_ordinal(o);
            if (x.depth > 0 && g == x.last.inverse())
                continue;
            bool ray = x.on_ray && omega_prefix[static_cast<std::size_t>(x.depth)] == g;
            Node child{x.depth + 1, ray ? x.conf + 1 : x.conf, ray, g};
            // No word of E_n beats n; off the ray nothing below beats the child itself.
            long bound = ray ? static_cast<long>(n) : 2L * child.conf - child.depth;
            if (bound > best)
                stack.push_back(child);
        }
    }
    return best;
}

// Same maximum by visiting every word of E_n.
inline long max_neg_busemann_exhaustive(const Word& omega_prefix, int n)
{
    require(n >= 0, "radius must be nonnegative");
    if (omega_prefix.length() < static_cast<std::size_t>(n))
        throw InsufficientPrefix("boundary prefix too short for the ball", omega_prefix.length(), static_cast<std::size_t>(n));
    const int d = omega_prefix.rank();
    long best = 0;
    std::function<void(int, int, bool, Generator)> visit = [&](int depth, int conf, bool ray, Generator last) {
        best = std::max(best, 2L * conf - depth);
        if (depth == n)
            return;
        for (int o = 0; o < 2 * d; ++o) {
            auto g = Generator::from_ordinal(o);
            if (depth > 0 && g == last.inverse())
                continue;
            bool r = ray && omega_prefix[static_cast<std::size_t>(depth)] == g;
            visit(depth + 1, r ? conf + 1 : conf, r, g);
        }
    };
    visit(0, 0, true, Generator());
    return best;
}

struct BnValue {
    double value = 0.0;
    std::optional<Rational> exact;
};

// b_n^alpha = int max_{t in E_n} |f_t|^alpha dm.
inline BnValue b_n_exact(const FieldModel& model, int n)
{
    validate_model(model);
    require(n >= 0, "radius must be nonnegative");
    BnValue r;
    if (auto* b = std::get_if<BoundaryField>(&model)) {
        r.exact = Rational(ipow(2 * b->d - 1, static_cast<unsigned>(n)));
    } else if (std::holds_alternative<ShiftField>(model)) {
        r.exact = Rational(2 * n + 1);
    } else if (auto* p = std::get_if<MixedMovingAverage>(&model)) {
        // sum_w mass_w sum_u max_{t in E_n} |f(w, t^-1 u)|^alpha over u in E_{n+m}.
        const int d = p->f.rank();
        const int m = p->f.radius();
        BallIndexer outer(d, n + m);
        auto words = enumerate_ball(d, n);
        auto support = enumerate_ball(d, m);
        double total = 0.0;
        for (const auto& atom : p->f.atoms()) {
            std::vector<double> best(outer.size(), 0.0);
            for (const auto& t : words)
                for (std::size_t k = 0; k < support.size(); ++k)
                    if (atom.values[k] != 0.0) {
                        auto u = outer.index(multiply(t, support[k]));
                        best[u] = std::max(best[u], std::pow(std::abs(atom.values[k]), p->alpha));
                    }
            double s = 0.0;
            for (double v : best)
                s += v;
            total += atom.mass * s;
        }
        r.value = total;
        return r;
    } else {
        throw UnsupportedModel("b_n has no closed form for the Pareto field; use b_n_monte_carlo");
    }
    r.value = to_double(*r.exact);
    return r;
}

// Monte Carlo b_n^alpha for models with a probability control measure.
// Pareto: max of |E_n| iid Pareto(theta) drawn directly by inverting its CDF
// (1 - y^-theta)^N. Boundary: exact maximum per sampled omega.
inline Estimate b_n_monte_carlo(const FieldModel& model, int n, std::size_t reps, std::uint64_t seed)
{
    validate_model(model);
    require(reps >= 2, "Monte Carlo b_n needs at least two replications");
    std::vector<double> v(reps);
    if (auto* p = std::get_if<ParetoField>(&model)) {
        const double count = to_double(ball_size(p->d, n));
        for (std::size_t i = 0; i < reps; ++i) {
            Stream rng(seed, i, StreamRole::pareto);
            double one_minus = -std::expm1(std::log(rng.uniform01()) / count);
            v[i] = std::pow(one_minus, -p->alpha / p->theta);
        }
    } else if (auto* b = std::get_if<BoundaryField>(&model)) {
        for (std::size_t i = 0; i < reps; ++i) {
            Stream rng(seed, i, StreamRole::boundary);
            auto omega = sample_boundary(b->d, static_cast<std::size_t>(std::max(n, 1)), rng);
            v[i] = std::pow(2.0 * b->d - 1.0, static_cast<double>(max_neg_busemann(omega.word(), n)));
        }
    } else {
        throw UnsupportedModel("Monte Carlo b_n needs a probability control measure (pareto or boundary model)");
    }
    return batch_means(v);
}

struct MaximaOptions {
    std::vector<double> s_grid{0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
    unsigned workers = 0; // 0 = default_workers()
    // Known limit CDF of M_n / (2d-1)^(n/alpha), if any.
    std::function<double(double)> limit_cdf;
    std::string limit_label;
};

struct MaximaReport {
    std::string model;
    int d = 2;
    int n = 0;
    double alpha = 1.0;
    std::uint64_t seed = 0;
    double scaling = 1.0;
    std::vector<double> maxima;
    std::vector<double> scaled;
    std::vector<std::pair<double, double>> quantiles;
    std::vector<EcdfRow> ecdf;
    std::optional<double> ks;
    std::string limit_label;
    std::size_t num_terms = 0;
    double tail_bound = 0.0;
    double seconds = 0.0;
};

inline MaximaReport maxima_experiment(const FieldModel& model, int n, std::size_t reps, const SimulationConfig& cfg,
                                      std::uint64_t seed, MaximaOptions opt = {})
{
    require(reps >= 100, "maxima experiment needs at least 100 replications");
    auto start = std::chrono::steady_clock::now();
    FieldSimulator sim(model, n, cfg);
    MaximaReport r;
    r.model = model_name(model);
    r.d = model_rank(model);
    r.n = n;
    r.alpha = model_alpha(model);
    r.seed = seed;
    r.num_terms = sim.num_terms();
    r.tail_bound = sim.tail_bound();
    r.scaling = std::pow(2.0 * r.d - 1.0, n / r.alpha);
    r.maxima.assign(reps, 0.0);
    parallel_for(reps, opt.workers ? opt.workers : default_workers(), [&](std::size_t i) {
        Stream rng(seed, i, StreamRole::series);
        r.maxima[i] = partial_maximum(sim.simulate(rng));
    });
    for (double m : r.maxima)
        r.scaled.push_back(m / r.scaling);
    std::vector<double> sorted = r.scaled;
    std::sort(sorted.begin(), sorted.end());
    for (double q : {0.1, 0.25, 0.5, 0.75, 0.9})
        r.quantiles.emplace_back(q, quantile(sorted, q));
    r.ecdf = empirical_cdf_table(sorted, opt.s_grid);
    if (!opt.limit_cdf && std::holds_alternative<BoundaryField>(model)) {
        const double c = stable_tail_constant(r.alpha);
        const double a = r.alpha;
        opt.limit_cdf = [c, a](double x) { return scaled_frechet_cdf(x, a, c); };
        opt.limit_label = "exp(-C_alpha x^-alpha)";
    }
    if (opt.limit_cdf) {
        r.ks = ks_distance(sorted, opt.limit_cdf);
        r.limit_label = opt.limit_label;
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

} // namespace sasfree
