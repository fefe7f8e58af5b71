#include <sasfree/boundary.hpp>

#include <gtest/gtest.h>

using namespace sasfree;

namespace {

Word w2(const char* s) { return parse_word(2, s); }

// Measure of t * H_g by brute force: refine H_g to depth |g| + |t| + 1, where
// every image is a single cylinder H_{t w}.
Rational image_measure_bruteforce(const Word& t, const Word& g)
{
    std::vector<Word> level{g};
    for (std::size_t k = g.length(); k < g.length() + t.length() + 1; ++k) {
        std::vector<Word> next;
        for (const auto& w : level)
            for (int o = 0; o < 2 * g.rank(); ++o) {
                auto x = Generator::from_ordinal(o);
                if (x != w.back().inverse())
                    next.push_back(w.extended(x));
            }
        level = std::move(next);
    }
    Rational m = 0;
    for (const auto& w : level)
        m += cylinder_measure(t * w);
    return m;
}

} // namespace

TEST(Measure, CylinderValues)
{
    EXPECT_EQ(cylinder_measure(w2("a1")), Rational(1, 4));
    EXPECT_EQ(cylinder_measure(w2("a1.a2")), Rational(1, 12));
    EXPECT_EQ(cylinder_measure(parse_word(3, "a3^-1.a1.a1")), Rational(1, 150));
    EXPECT_THROW(cylinder_measure(Word::identity(2)), InvalidArgument);
    for (int d : {2, 3})
        for (int n = 1; n <= 4; ++n) {
            Rational total = 0;
            for (const auto& g : enumerate_sphere(d, n))
                total += cylinder_measure(g);
            EXPECT_EQ(total, 1);
        }
}

TEST(Measure, SamplerHitsCylindersAtTheRightRate)
{
    Stream rng(3, 0, StreamRole::boundary);
    const int reps = 40000;
    int hits = 0;
    for (int i = 0; i < reps; ++i)
        if (is_prefix(w2("a1.a2"), sample_boundary(2, 2, rng).word()))
            ++hits;
    // 1/12 +- 5 sigma
    double p = 1.0 / 12, se = std::sqrt(p * (1 - p) / reps);
    EXPECT_NEAR(hits / double(reps), p, 5 * se);
}

TEST(Action, ExamplesAndErrors)
{
    auto img = act_on_cylinder(w2("a1"), CylinderSet::single(w2("a1.a2")));
    EXPECT_EQ(img, CylinderSet::single(w2("a2")));
    EXPECT_EQ(img.measure(), Rational(1, 4));
    // t = a1^-1 maps H_a1 to the union of H_{a1.a1} ... through a1 * H_a1.
    auto up = act_on_cylinder(w2("a1^-1"), CylinderSet::single(w2("a1")));
    EXPECT_EQ(up, CylinderSet::single(w2("a1.a1")));
    // Full refinement when g is a prefix of t.
    auto down = act_on_cylinder(w2("a1"), CylinderSet::single(w2("a1")));
    EXPECT_EQ(down.measure(), Rational(3, 4));
    EXPECT_THROW(act_on_cylinder(parse_word(3, "a1"), CylinderSet::single(w2("a1"))), RankMismatch);

    auto omega = BoundaryPrefix(w2("a1.a2"));
    EXPECT_THROW(act_on_boundary(w2("a1.a2"), omega), InsufficientPrefix);
    EXPECT_EQ(act_on_boundary(w2("a1"), omega).word(), w2("a2"));
}

TEST(Action, ImageMeasureMatchesBruteForce)
{
    for (const auto& t : enumerate_ball(2, 3))
        for (const auto& g : enumerate_ball(2, 2)) {
            if (g.is_identity())
                continue;
            auto img = act_on_cylinder(inverse(t), CylinderSet::single(g));
            EXPECT_EQ(img.measure(), image_measure_bruteforce(t, g)) << t.to_string() << " " << g.to_string();
        }
}

TEST(Action, RadonNikodymIsTheMeasureRatioOfSmallCylinders)
{
    Stream rng(4, 0, StreamRole::boundary);
    for (int d : {2, 3}) {
        for (int trial = 0; trial < 200; ++trial) {
            auto omega = sample_boundary(d, 9, rng);
            auto t = omega.word().prefix(rng.bounded(4));
            for (std::uint64_t k = 0; k < rng.bounded(3); ++k)
                t = t * Word::generator(d, 1 + static_cast<int>(rng.bounded(d)), rng.sign());
            if (t.length() + 1 > omega.depth())
                continue;
            auto c = CylinderSet::single(omega.word());
            auto ratio = act_on_cylinder(t, c).measure() / c.measure();
            EXPECT_EQ(rn_derivative(t, omega), ratio);
        }
    }
}

TEST(Action, CocycleIdentity)
{
    Stream rng(5, 0, StreamRole::boundary);
    for (int trial = 0; trial < 300; ++trial) {
        auto omega = sample_boundary(2, 4, rng);
        auto u = w2("a1.a2^-1").prefix(rng.bounded(3)) * w2("a2").prefix(rng.bounded(2));
        auto v = w2("a2^-1.a1.a1").prefix(rng.bounded(4));
        auto moved = act_on_boundary_extending(u, omega.extended(u.length() + v.length() + 2));
        auto lhs = rn_derivative(u * v, omega.extended(u.length() + v.length() + 2));
        auto rhs = rn_derivative(u, omega.extended(u.length() + 1)) * rn_derivative(v, moved.extended(v.length() + 1));
        EXPECT_EQ(lhs, rhs);
        // Group action: phi_u phi_v = phi_{v u} on boundary points with phi_t(w) = t^-1 w.
        auto a = act_on_boundary_extending(v, act_on_boundary_extending(u, omega));
        auto b = act_on_boundary_extending(u * v, omega);
        auto n = std::min(a.depth(), b.depth());
        EXPECT_EQ(a.word().prefix(n), b.word().prefix(n));
    }
}

TEST(Action, ExtendablePrefixIsConsistent)
{
    Stream rng(6, 0, StreamRole::boundary);
    auto omega = sample_boundary(3, 3, rng);
    auto deep = omega.extended(20);
    EXPECT_EQ(deep.word().prefix(3), omega.word());
    EXPECT_EQ(deep.truncated(3).word(), omega.word());
    EXPECT_THROW(BoundaryPrefix(omega.word()).extended(5), InsufficientPrefix);
}

TEST(Cylinders, ComplementAndOverlap)
{
    auto c = CylinderSet(2, {w2("a1.a2"), w2("a2^-1")});
    auto cc = complement(c);
    EXPECT_EQ(c.measure() + cc.measure(), 1);
    EXPECT_TRUE(disjoint(c, cc));
    EXPECT_EQ(complement(CylinderSet::full(2)).size(), 0u);
    EXPECT_THROW(CylinderSet(2, {w2("a1"), w2("a1.a2")}), InvalidArgument);

    std::vector<CylinderSet> fam{CylinderSet::single(w2("a1")), CylinderSet::single(w2("a2")),
                                 CylinderSet::single(w2("a1.a2.a1"))};
    auto ov = find_overlap(fam);
    ASSERT_TRUE(ov.has_value());
    EXPECT_EQ(ov->first, 0u);
    EXPECT_EQ(ov->second, 2u);
}

TEST(WeaklyWandering, CoverIsExactAndMonotone)
{
    auto r = verify_weakly_wandering(2, 8);
    EXPECT_FALSE(r.stated_family_disjoint);
    EXPECT_TRUE(r.cover_family_disjoint);
    EXPECT_EQ(r.deficit, r.deficit_recursion);
    EXPECT_EQ(r.covered_measure + r.deficit, 1);
    for (std::size_t i = 1; i < r.covered_by_cap.size(); ++i)
        EXPECT_LT(r.covered_by_cap[i - 1], r.covered_by_cap[i]);
    EXPECT_EQ(r.covered_by_cap.front(), Rational(1, 4));
    // Two-state chain: P(no a1^-1 in n letters) for d = 2, n = 1 is 3/4.
    EXPECT_EQ(avoid_a1inv_probability(2, 1), Rational(3, 4));
}

TEST(DisjointTranslates, CorrectedFamilyCountsTheSphere)
{
    for (int d : {2, 3})
        for (int n = 1; n <= 5; ++n) {
            auto r = disjoint_translates(d, n);
            EXPECT_EQ(BigInt(r.corrected_count), r.sphere_count);
            EXPECT_TRUE(r.corrected_disjoint);
            EXPECT_TRUE(r.corrected_in_ball);
            EXPECT_EQ(r.corrected_total_measure, Rational(r.sphere_count) * cylinder_measure(Word::identity(d).extended(Generator(1, 1))) /
                                                     ipow(2 * d - 1, static_cast<unsigned>(n)));
        }
}
