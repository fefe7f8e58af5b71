#include <sasfree/harness.hpp>

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace sasfree;

namespace {

std::string slurp(const std::string& path)
{
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string temp_path(const std::string& name)
{
    return (std::filesystem::temp_directory_path() / ("sasfree_" + name)).string();
}

} // namespace

TEST(Ks, Examples)
{
    std::vector<double> one{0.0};
    EXPECT_DOUBLE_EQ(ks_distance(one, [](double x) { return x < 0 ? 0.0 : x > 1 ? 1.0 : 0.5 + x / 2; }), 0.5);
    std::vector<double> far{10.0, 11.0};
    EXPECT_DOUBLE_EQ(ks_distance(far, [](double x) { return x >= 0 ? 1.0 : 0.0; }), 1.0);
    std::vector<double> unsorted{2.0, 1.0};
    EXPECT_THROW(ks_distance(unsorted, [](double) { return 0.5; }), InvalidArgument);
    EXPECT_THROW(ks_distance(std::vector<double>{}, [](double) { return 0.5; }), InvalidArgument);
}

TEST(Ks, UniformSampleWithinDkw)
{
    Stream rng(61, 0, StreamRole::generic);
    std::vector<double> x(10000);
    for (auto& v : x)
        v = rng.uniform01();
    std::sort(x.begin(), x.end());
    // DKW: P(D > 0.02) <= 2 exp(-8) < 1e-3
    EXPECT_LT(ks_distance(x, [](double t) { return std::clamp(t, 0.0, 1.0); }), 0.02);
    std::vector<double> y(10000);
    for (auto& v : y)
        v = rng.uniform01();
    EXPECT_GT(ks_two_sample(x, y).p_value, 1e-3);
    for (auto& v : y)
        v = v * v;
    EXPECT_LT(ks_two_sample(x, y).p_value, 1e-6);
}

TEST(Ecdf, TableAndIntervals)
{
    Stream rng(62, 0, StreamRole::generic);
    std::vector<double> x(2000);
    for (auto& v : x)
        v = rng.uniform01();
    std::vector<double> grid{-1.0, 0.1, 0.5, 0.9, 2.0};
    auto t = empirical_cdf_table(x, grid);
    ASSERT_EQ(t.size(), grid.size());
    EXPECT_EQ(t.front().p_hat, 0.0);
    EXPECT_EQ(t.back().p_hat, 1.0);
    for (std::size_t i = 1; i + 1 < t.size(); ++i) {
        EXPECT_LE(t[i].ci_low, grid[i]);
        EXPECT_GE(t[i].ci_high, grid[i]);
    }
    std::vector<double> bad{0.5, 0.1};
    EXPECT_THROW(empirical_cdf_table(x, bad), InvalidArgument);
}

TEST(Stats, ChiSquareQuantileBatchMeans)
{
    std::vector<double> obs{50, 50}, p{0.5, 0.5};
    EXPECT_DOUBLE_EQ(chi_square_test(obs, p).statistic, 0.0);
    EXPECT_NEAR(chi_square_survival(3.841458820694124, 1), 0.05, 1e-12);
    std::vector<double> s{1, 2, 3, 4};
    EXPECT_DOUBLE_EQ(quantile(s, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(quantile(s, 0.0), 1.0);
    std::vector<double> c(100, 3.0);
    auto e = batch_means(c);
    EXPECT_DOUBLE_EQ(e.mean, 3.0);
    EXPECT_DOUBLE_EQ(e.se, 0.0);
}

TEST(Config, Validation)
{
    EXPECT_THROW(ExperimentConfig::parse(json::array()), ConfigError);
    EXPECT_THROW(ExperimentConfig::parse({{"experiment", "nope"}}), ConfigError);
    try {
        ExperimentConfig::parse({{"experiment", "selftest"}, {"bogus", 1}, {"other", 2}});
        FAIL();
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("bogus"), std::string::npos);
        EXPECT_NE(msg.find("other"), std::string::npos);
    }
    json sim{{"experiment", "simulate-maxima"}, {"model", {{"kind", "shift"}}}, {"n", 2}, {"reps", 100}};
    EXPECT_THROW(ExperimentConfig::parse(sim), ConfigError);
    sim["seed"] = 1;
    EXPECT_NO_THROW(ExperimentConfig::parse(sim));
    sim["reps"] = 0;
    EXPECT_THROW(ExperimentConfig::parse(sim), ConfigError);
    sim["reps"] = 100;
    sim["model"]["colour"] = "red";
    EXPECT_THROW(ExperimentConfig::parse(sim), ConfigError);
    EXPECT_THROW(model_from_json({{"kind", "other"}}), ConfigError);
    EXPECT_THROW(model_from_json({{"kind", "shift"}, {"alpha", 2.5}}), InvalidArgument);
}

TEST(Config, KernelTables)
{
    auto a = kernel_from_json(2, {{"e", 1.0}, {"a1", -0.5}});
    ASSERT_EQ(a.atoms().size(), 1u);
    EXPECT_EQ(a.radius(), 1);
    auto b = kernel_from_json(2, {{"atoms", {{{"mass", 2.0}, {"f", {{"a2.a1", 1.0}}}}, {{"f", {{"e", 3.0}}}}}}});
    ASSERT_EQ(b.atoms().size(), 2u);
    EXPECT_EQ(b.atoms()[0].mass, 2.0);
    EXPECT_EQ(b.radius(), 2);
    EXPECT_THROW(kernel_from_json(2, {{"a3", 1.0}}), InvalidArgument);
    EXPECT_THROW(kernel_from_json(2, {{"atoms", json::array()}}), ConfigError);
}

TEST(Run, SameConfigSameFiles)
{
    auto csv1 = temp_path("a.csv"), csv2 = temp_path("b.csv");
    auto js1 = temp_path("a.json"), js2 = temp_path("b.json");
    json c{{"experiment", "simulate-maxima"},
           {"model", {{"kind", "boundary"}, {"d", 2}, {"alpha", 1.0}}},
           {"n", 3},
           {"reps", 120},
           {"seed", 9},
           {"series_terms", 400}};
    c["output"] = {{"csv", csv1}, {"json", js1}};
    run(ExperimentConfig::parse(c));
    c["output"] = {{"csv", csv2}, {"json", js2}};
    c["workers"] = 2;
    run(ExperimentConfig::parse(c));
    EXPECT_EQ(slurp(csv1), slurp(csv2));
    auto j1 = json::parse(slurp(js1)), j2 = json::parse(slurp(js2));
    EXPECT_EQ(j1["summary"], j2["summary"]);
    EXPECT_EQ(j1["config"]["seed"], 9);
    EXPECT_EQ(slurp(csv1).substr(0, 28), "replication,max,scaled_max\n0");
    for (const auto& p : {csv1, csv2, js1, js2})
        std::remove(p.c_str());
}

TEST(Run, Experiments)
{
    auto e = run(ExperimentConfig::parse({{"experiment", "enumerate"}, {"model", {{"d", 2}}}, {"n", 2}}));
    EXPECT_EQ(e.csv_rows.size(), 17u);
    EXPECT_TRUE(e.pass);

    auto vb = run(ExperimentConfig::parse(
        {{"experiment", "verify-boundary"}, {"model", {{"d", 2}}}, {"depth_cap", 5}, {"translate_max_n", 4}}));
    EXPECT_TRUE(vb.pass);
    EXPECT_FALSE(vb.summary["weakly_wandering"]["stated_family"]["pairwise_disjoint"].get<bool>());

    auto vl = run(ExperimentConfig::parse(
        {{"experiment", "verify-lemma"}, {"ell_max", 2}, {"k_max", 3}, {"samples", 5}, {"seed", 1}}));
    EXPECT_TRUE(vl.pass);
    EXPECT_EQ(vl.csv_rows.size(), 8u);

    auto kx = run(ExperimentConfig::parse({{"experiment", "limit"},
                                           {"model", {{"kind", "mma"}, {"alpha", 1.5}}},
                                           {"mode", "kx"},
                                           {"mc", 50},
                                           {"seed", 1}}));
    EXPECT_NEAR(kx.summary["K_X"].get<double>(), std::pow(4.0, 1 / 1.5), 1e-12);
    EXPECT_TRUE(kx.summary["level_symmetric"]["mismatch"].get<bool>());

    auto pp = run(ExperimentConfig::parse({{"experiment", "simulate-pp"},
                                           {"model", {{"kind", "mma"}, {"alpha", 1.0}}},
                                           {"n", 3},
                                           {"reps", 50},
                                           {"seed", 2},
                                           {"delta", 0.5},
                                           {"mc", 50}}));
    EXPECT_EQ(pp.csv_header, (std::vector<std::string>{"replication", "atom"}));
    for (const auto& row : pp.csv_rows)
        EXPECT_GT(std::abs(std::stod(row[1])), 0.5);

    EXPECT_THROW(run(ExperimentConfig::parse({{"experiment", "limit"}, {"model", {{"kind", "shift"}}}})), ConfigError);
}

TEST(Selftest, Scopes)
{
    for (const char* s : {"combinatorics", "boundary", "stable"})
        EXPECT_TRUE(selftest(s)["pass"].get<bool>()) << s;
    EXPECT_THROW(selftest("everything"), ConfigError);
}

TEST(Random, StreamsAreReproducibleAndSeparated)
{
    Stream a(1, 2, StreamRole::series), b(1, 2, StreamRole::series), c(1, 3, StreamRole::series),
        d(1, 2, StreamRole::noise);
    auto x = a.next_u64();
    EXPECT_EQ(x, b.next_u64());
    EXPECT_NE(x, c.next_u64());
    EXPECT_NE(x, d.next_u64());
    Stream u(5, 0, StreamRole::generic);
    for (int i = 0; i < 1000; ++i) {
        double v = u.uniform01();
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
        EXPECT_LT(u.bounded(7), 7u);
    }
    // Poisson(3.5) mean and variance
    Stream p(6, 0, StreamRole::poisson);
    double s = 0, s2 = 0;
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        double k = static_cast<double>(p.poisson(3.5));
        s += k;
        s2 += k * k;
    }
    EXPECT_NEAR(s / n, 3.5, 5 * std::sqrt(3.5 / n));
    EXPECT_NEAR(s2 / n - (s / n) * (s / n), 3.5, 0.15);
}

TEST(Parallel, PropagatesExceptions)
{
    std::vector<int> hit(50, 0);
    parallel_for(50, 3, [&](std::size_t i) { hit[i] = 1; });
    EXPECT_EQ(std::count(hit.begin(), hit.end(), 1), 50);
    EXPECT_THROW(parallel_for(10, 2, [](std::size_t i) {
                     if (i == 7)
                         throw ResourceError("boom");
                 }),
                 ResourceError);
}
