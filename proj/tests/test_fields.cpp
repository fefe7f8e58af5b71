#include <sasfree/fields.hpp>

#include <gtest/gtest.h>

#include <boost/math/constants/constants.hpp>

#include <map>
#include <set>

using namespace sasfree;

namespace {

constexpr double kPi = boost::math::constants::pi<double>();

double cauchy_cdf(double x, double scale) { return 0.5 + std::atan(x / scale) / kPi; }

// Boundary field site by site from the Busemann function, consuming the stream
// exactly as the simulator does.
std::vector<double> boundary_field_naive(int d, double alpha, int n, std::size_t terms, Stream& rng)
{
    BallIndexer b(d, n);
    auto ball = enumerate_ball(d, n);
    const double q = 2.0 * d - 1.0, c = std::pow(stable_tail_constant(alpha), 1.0 / alpha);
    std::vector<double> x(ball.size(), 0.0);
    double gamma = 0.0;
    for (std::size_t i = 0; i < terms; ++i) {
        gamma += rng.exponential();
        double a = rng.sign() * std::pow(gamma, -1.0 / alpha);
        Word omega = Word::identity(d);
        if (n > 0) {
            std::uint64_t r = rng.bounded(2 * static_cast<std::uint64_t>(d));
            for (int j = 2; j <= n; ++j)
                r = r * (2 * d - 1) + rng.bounded(2 * static_cast<std::uint64_t>(d) - 1);
            omega = b.word(b.level_begin(n) + r);
        }
        for (std::size_t k = 0; k < ball.size(); ++k) {
            auto conf = static_cast<double>(common_prefix_length(ball[k], omega));
            x[k] += c * a * std::pow(q, (2 * conf - ball[k].length()) / alpha);
        }
    }
    return x;
}

std::vector<double> mma_naive(const MixedMovingAverage& m, int n, Stream& rng)
{
    const int d = m.f.rank(), r = m.f.radius();
    auto outer = enumerate_ball(d, n + r);
    auto ball = enumerate_ball(d, n);
    auto support = enumerate_ball(d, r);
    std::vector<double> x(ball.size(), 0.0);
    for (const auto& atom : m.f.atoms()) {
        std::map<std::string, double> z;
        double scale = std::pow(2.0 * atom.mass / stable_tail_constant(m.alpha), 1.0 / m.alpha);
        for (const auto& u : outer)
            z[u.to_string()] = sample_sas({m.alpha, scale}, rng);
        for (std::size_t i = 0; i < ball.size(); ++i)
            for (std::size_t k = 0; k < support.size(); ++k)
                x[i] += atom.values[k] * z.at((ball[i] * support[k]).to_string());
    }
    return x;
}

std::vector<double> sorted_site(const FieldModel& model, int n, const Word& t, std::size_t reps, std::uint64_t seed,
                                SimulationConfig cfg = {})
{
    FieldSimulator sim(model, n, cfg);
    std::vector<double> v;
    for (std::size_t i = 0; i < reps; ++i) {
        Stream rng(seed, i, StreamRole::series);
        v.push_back(sim.simulate(rng).at(t));
    }
    std::sort(v.begin(), v.end());
    return v;
}

} // namespace

TEST(BoundaryField, FastAlgorithmMatchesSiteBySite)
{
    for (double alpha : {0.7, 1.0, 1.4})
        for (int d : {2, 3}) {
            const int n = 3;
            SimulationConfig cfg;
            cfg.num_terms = 300;
            FieldSimulator sim(BoundaryField{d, alpha}, n, cfg);
            Stream r1(41, 0, StreamRole::series), r2(41, 0, StreamRole::series);
            auto fast = sim.simulate(r1).values;
            auto slow = boundary_field_naive(d, alpha, n, 300, r2);
            ASSERT_EQ(fast.size(), slow.size());
            for (std::size_t i = 0; i < fast.size(); ++i)
                EXPECT_NEAR(fast[i], slow[i], 1e-9 * (1 + std::abs(slow[i])));
        }
}

TEST(BoundaryField, MarginalsAreStationaryCauchy)
{
    // alpha = 1: every X_t is SaS(1), i.e. standard Cauchy.
    SimulationConfig cfg;
    cfg.num_terms = 2000;
    for (const char* t : {"e", "a1", "a2^-1.a1.a1"}) {
        auto v = sorted_site(BoundaryField{2, 1.0}, 3, parse_word(2, t), 3000, 42, cfg);
        EXPECT_LT(ks_distance(v, [](double x) { return cauchy_cdf(x, 1.0); }), 0.035) << t;
    }
}

TEST(BoundaryField, SecondMomentBound)
{
    // E q^(-2B/alpha) at t = e is 1; the maximum over levels is attained deep.
    EXPECT_DOUBLE_EQ(boundary_field_second_moment(2, 1.0, 0), 1.0);
    EXPECT_GE(boundary_field_second_moment(2, 1.0, 4), boundary_field_second_moment(2, 1.0, 3));
}

TEST(ShiftField, ValuesDependOnlyOnTheA1Exponent)
{
    FieldSimulator sim(ShiftField{2, 1.3}, 4);
    Stream rng(43, 0, StreamRole::series);
    auto s = sim.simulate(rng);
    std::map<int, double> by_k;
    auto ball = enumerate_ball(2, 4);
    for (std::size_t i = 0; i < ball.size(); ++i) {
        int k = 0;
        for (auto g : ball[i].letters())
            if (g.index() == 1)
                k += g.sign();
        auto [it, fresh] = by_k.emplace(k, s.values[i]);
        if (!fresh) {
            EXPECT_EQ(it->second, s.values[i]);
        }
    }
    EXPECT_EQ(by_k.size(), 9u);
    std::set<double> distinct(s.values.begin(), s.values.end());
    EXPECT_EQ(distinct.size(), 9u);
}

TEST(ParetoField, MarginalIsCauchyWithMomentScale)
{
    // alpha = 1, theta = 3: scale E Y = 3/2.
    SimulationConfig cfg;
    cfg.num_terms = 500;
    auto v = sorted_site(ParetoField{2, 1.0, 3.0}, 1, parse_word(2, "a2"), 3000, 44, cfg);
    EXPECT_LT(ks_distance(v, [](double x) { return cauchy_cdf(x, 1.5); }), 0.035);
    EXPECT_THROW(FieldSimulator(ParetoField{2, 1.0, 0.5}, 1), InvalidArgument);
    EXPECT_THROW(FieldSimulator(ParetoField{2, 1.0, 1.5}, 1), InvalidArgument);
}

TEST(MovingAverage, PlanMatchesDirectSum)
{
    auto f = KernelTable::from_maps(2, {{1.0, {{"e", 1.0}, {"a1", -0.5}, {"a2.a1", 0.25}}}, {0.5, {{"a2^-1", 2.0}}}});
    MixedMovingAverage m{1.2, f};
    FieldSimulator sim(m, 3);
    Stream r1(45, 0, StreamRole::series), r2(45, 0, StreamRole::series);
    auto fast = sim.simulate(r1).values;
    auto slow = mma_naive(m, 3, r2);
    for (std::size_t i = 0; i < fast.size(); ++i)
        EXPECT_NEAR(fast[i], slow[i], 1e-12 * (1 + std::abs(slow[i])));
}

TEST(MovingAverage, MarginalScale)
{
    // f = 1_{u=e}, alpha = 1: X_t ~ SaS((2 / C_1)) = Cauchy(pi).
    MixedMovingAverage m{1.0, KernelTable::identity_indicator(2)};
    auto v = sorted_site(m, 2, parse_word(2, "a1.a2"), 3000, 46);
    EXPECT_LT(ks_distance(v, [](double x) { return cauchy_cdf(x, kPi); }), 0.035);
}

TEST(Bn, ClosedForms)
{
    for (int d : {2, 3})
        for (int n = 0; n <= 10; ++n) {
            EXPECT_EQ(*b_n_exact(BoundaryField{d, 1.0}, n).exact, Rational(ipow(2 * d - 1, static_cast<unsigned>(n))));
            EXPECT_EQ(*b_n_exact(ShiftField{d, 0.8}, n).exact, 2 * n + 1);
        }
    // f = 1_{u=e}: every u in E_n is hit once.
    MixedMovingAverage m{1.0, KernelTable::identity_indicator(2)};
    EXPECT_DOUBLE_EQ(b_n_exact(m, 4).value, 161.0);
    EXPECT_THROW(b_n_exact(ParetoField{2, 1.0, 3.0}, 2), UnsupportedModel);
    EXPECT_THROW(b_n_monte_carlo(ShiftField{2, 1.0}, 2, 10, 1), UnsupportedModel);
}

TEST(Bn, BranchAndBoundMatchesExhaustive)
{
    for (int d : {2, 3})
        for (int i = 0; i < 50; ++i) {
            Stream rng(47, static_cast<std::uint64_t>(i), StreamRole::boundary);
            auto omega = sample_boundary(d, 7, rng);
            for (int n = 0; n <= 6; ++n) {
                EXPECT_EQ(max_neg_busemann(omega.word(), n), max_neg_busemann_exhaustive(omega.word(), n));
                EXPECT_EQ(max_neg_busemann(omega.word(), n), n);
            }
        }
    EXPECT_THROW(max_neg_busemann(parse_word(2, "a1"), 3), InsufficientPrefix);
}

TEST(Maxima, DeterministicAndWorkerInvariant)
{
    SimulationConfig cfg;
    cfg.num_terms = 500;
    MaximaOptions one, three;
    one.workers = 1;
    three.workers = 3;
    auto a = maxima_experiment(BoundaryField{2, 1.0}, 3, 100, cfg, 48, one);
    auto b = maxima_experiment(BoundaryField{2, 1.0}, 3, 100, cfg, 48, three);
    EXPECT_EQ(a.maxima, b.maxima);
    ASSERT_TRUE(a.ks.has_value());
    EXPECT_EQ(*a.ks, *b.ks);
    EXPECT_THROW(maxima_experiment(BoundaryField{2, 1.0}, 3, 10, cfg, 48), InvalidArgument);
}

TEST(Maxima, ResourceBudget)
{
    SimulationConfig cfg;
    cfg.site_budget = 100;
    EXPECT_THROW(FieldSimulator(BoundaryField{2, 1.0}, 5, cfg), ResourceError);
}
