#pragma once

#include "error.hpp"
#include "free_group.hpp"
#include "random.hpp"
#include "rational.hpp"

#include <algorithm>
#include <optional>
#include <utility>
#include <vector>

namespace sasfree {

// Rank-d Patterson-Sullivan letter sequence: letter 0 uniform over the 2d
// generators, every later letter uniform over the 2d-1 non-backtracking ones.
// Letter i depends only on (key, i) and letter i-1.
inline std::vector<Generator> ps_letters(int d, StreamKey key, std::size_t length)
{
    std::vector<Generator> out;
    out.reserve(length);
    for (std::size_t i = 0; i < length; ++i) {
        Stream s(key.child(i));
        if (i == 0)
            out.push_back(Generator::from_ordinal(static_cast<int>(s.bounded(2 * static_cast<std::uint64_t>(d)))));
        else
            out.push_back(BallIndexer::continuation_letter(out.back(), static_cast<int>(s.bounded(2 * static_cast<std::uint64_t>(d) - 1))));
    }
    return out;
}

// Finite prefix [omega]_n of a boundary point. When a source is attached the
// point is left * eta, with eta the Patterson-Sullivan sequence of the key,
// and the prefix can be extended on demand.
class BoundaryPrefix {
public:
    explicit BoundaryPrefix(Word prefix) : prefix_(std::move(prefix)) {}

    BoundaryPrefix(int d, StreamKey key, Word left, std::size_t depth)
        : prefix_(Word::identity(d)), source_(Source{key, std::move(left)})
    {
        check_same_rank(prefix_, source_->left);
        prefix_ = materialize(depth);
    }

    int rank() const { return prefix_.rank(); }
    std::size_t depth() const { return prefix_.length(); }
    const Word& word() const { return prefix_; }
    bool extendable() const { return source_.has_value(); }

    BoundaryPrefix extended(std::size_t depth) const
    {
        if (depth <= prefix_.length())
            return *this;
        if (!source_)
            throw InsufficientPrefix("boundary prefix is not extendable", prefix_.length(), depth);
        BoundaryPrefix out = *this;
        out.prefix_ = materialize(depth);
        return out;
    }

    BoundaryPrefix truncated(std::size_t depth) const
    {
        BoundaryPrefix out = *this;
        out.prefix_ = prefix_.prefix(depth);
        return out;
    }

private:
    struct Source {
        StreamKey key;
        Word left;
    };

    Word materialize(std::size_t depth) const
    {
        const Word& left = source_->left;
        auto eta = Word::from_letters(rank(), ps_letters(rank(), source_->key, depth + left.length()));
        return multiply(left, eta).prefix(depth);
    }

    friend BoundaryPrefix act_on_boundary(const Word&, const BoundaryPrefix&);

    Word prefix_;
    std::optional<Source> source_;
};

inline BoundaryPrefix sample_boundary(int d, std::size_t depth, Stream& rng)
{
    require(depth >= 1, "boundary sample depth must be >= 1");
    return BoundaryPrefix(d, StreamKey{rng.next_u64()}, Word::identity(d), depth);
}

// phi_t(omega) = t^-1 omega. Decidable once the prefix is longer than t.
inline BoundaryPrefix act_on_boundary(const Word& t, const BoundaryPrefix& omega)
{
    check_same_rank(t, omega.word());
    if (omega.depth() < t.length() + 1)
        throw InsufficientPrefix("boundary prefix too short to act by " + t.to_string(), omega.depth(),
                                 t.length() + 1);
    BoundaryPrefix out = omega;
    out.prefix_ = multiply(inverse(t), omega.word());
    if (omega.source_)
        out.source_->left = multiply(inverse(t), omega.source_->left);
    return out;
}

// Same as act_on_boundary but extends an extendable prefix when needed.
inline BoundaryPrefix act_on_boundary_extending(const Word& t, const BoundaryPrefix& omega)
{
    if (omega.depth() < t.length() + 1 && omega.extendable())
        return act_on_boundary(t, omega.extended(t.length() + 1));
    return act_on_boundary(t, omega);
}

// w_t(omega) = (2d-1)^(-B_omega(t)).
inline Rational rn_derivative(const Word& t, const BoundaryPrefix& omega)
{
    check_same_rank(t, omega.word());
    long b = busemann(t, omega.word());
    return rpow(2 * t.rank() - 1, static_cast<int>(-b));
}

inline Rational cylinder_measure(const Word& g)
{
    if (g.is_identity())
        throw InvalidArgument("cylinder H_e is not defined");
    int d = g.rank();
    return Rational(BigInt(1), BigInt(2 * d) * ipow(2 * d - 1, static_cast<unsigned>(g.length() - 1)));
}

// Finite disjoint union of cylinders H_g, stored as a lexicographically sorted
// prefix-free list of nonempty words.
class CylinderSet {
public:
    explicit CylinderSet(int rank) : rank_(rank) { check_rank(rank); }

    CylinderSet(int rank, std::vector<Word> words) : rank_(rank), words_(std::move(words))
    {
        check_rank(rank);
        for (const auto& w : words_) {
            if (w.rank() != rank_)
                throw RankMismatch(w.rank(), rank_);
            if (w.is_identity())
                throw InvalidArgument("cylinder H_e is not defined");
        }
        std::sort(words_.begin(), words_.end(), lex_less);
        for (std::size_t i = 1; i < words_.size(); ++i)
            if (is_prefix(words_[i - 1], words_[i]))
                throw InvalidArgument("cylinder family not prefix-free: " + words_[i - 1].to_string() +
                                      " and " + words_[i].to_string());
    }

    static CylinderSet single(const Word& g) { return CylinderSet(g.rank(), {g}); }

    static CylinderSet full(int d)
    {
        std::vector<Word> w;
        for (int o = 0; o < 2 * d; ++o) {
            auto g = Generator::from_ordinal(o);
            w.push_back(Word::generator(d, g.index(), g.sign()));
        }
        return CylinderSet(d, std::move(w));
    }

    int rank() const { return rank_; }
    const std::vector<Word>& words() const { return words_; }
    std::size_t size() const { return words_.size(); }
    bool empty() const { return words_.empty(); }

    Rational measure() const
    {
        Rational m = 0;
        for (const auto& g : words_)
            m += cylinder_measure(g);
        return m;
    }

    // Whether the boundary point starting with `omega` lies in the set. The
    // prefix must be long enough to decide.
    bool contains(const Word& omega) const
    {
        for (const auto& g : words_) {
            std::size_t c = common_prefix_length(g, omega);
            if (c == g.length())
                return true;
            if (c == omega.length())
                throw InsufficientPrefix("prefix too short for cylinder membership", omega.length(), g.length());
        }
        return false;
    }

    bool operator==(const CylinderSet& o) const { return rank_ == o.rank_ && words_ == o.words_; }

private:
    int rank_;
    std::vector<Word> words_;
};

namespace detail {

inline void append_children(const Word& g, std::vector<Word>& out)
{
    int d = g.rank();
    for (int o = 0; o < 2 * d; ++o) {
        auto x = Generator::from_ordinal(o);
        if (g.is_identity() || x != g.back().inverse())
            out.push_back(g.extended(x));
    }
}

// Image of H_g under left multiplication by s, where t = s^-1. H_g maps to a
// single cylinder unless g is a prefix of t, in which case it is refined.
inline void image_of_cylinder(const Word& s, const Word& t, const Word& g, std::vector<Word>& out)
{
    if (common_prefix_length(t, g) < g.length()) {
        out.push_back(multiply(s, g));
        return;
    }
    std::vector<Word> kids;
    append_children(g, kids);
    for (const auto& k : kids)
        image_of_cylinder(s, t, k, out);
}

} // namespace detail

// Exact image phi_t(c) = t^-1 c as a prefix-free union.
inline CylinderSet act_on_cylinder(const Word& t, const CylinderSet& c)
{
    if (t.rank() != c.rank())
        throw RankMismatch(t.rank(), c.rank());
    Word s = inverse(t);
    std::vector<Word> out;
    for (const auto& g : c.words())
        detail::image_of_cylinder(s, t, g, out);
    return CylinderSet(c.rank(), std::move(out));
}

inline CylinderSet complement(const CylinderSet& c)
{
    const auto& w = c.words();
    std::vector<Word> out;
    std::vector<Word> stack;
    detail::append_children(Word::identity(c.rank()), stack);
    std::reverse(stack.begin(), stack.end());
    while (!stack.empty()) {
        Word x = std::move(stack.back());
        stack.pop_back();
        auto it = std::lower_bound(w.begin(), w.end(), x, lex_less);
        if (it != w.end() && *it == x)
            continue;
        if (it != w.end() && is_prefix(x, *it)) {
            std::vector<Word> kids;
            detail::append_children(x, kids);
            for (auto k = kids.rbegin(); k != kids.rend(); ++k)
                stack.push_back(std::move(*k));
            continue;
        }
        out.push_back(std::move(x));
    }
    return CylinderSet(c.rank(), std::move(out));
}

// First pair (i, j), i < j, of sets that intersect; nullopt if pairwise disjoint.
// After a lexicographic sort of all generating words, any prefix relation
// shows up between neighbours.
inline std::optional<std::pair<std::size_t, std::size_t>> find_overlap(const std::vector<CylinderSet>& sets)
{
    std::vector<std::pair<const Word*, std::size_t>> all;
    for (std::size_t i = 0; i < sets.size(); ++i)
        for (const auto& g : sets[i].words())
            all.emplace_back(&g, i);
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
        if (*a.first == *b.first)
            return a.second < b.second;
        return lex_less(*a.first, *b.first);
    });
    for (std::size_t k = 1; k < all.size(); ++k) {
        if (is_prefix(*all[k - 1].first, *all[k].first)) {
            auto [i, j] = std::minmax(all[k - 1].second, all[k].second);
            return std::make_pair(i, j);
        }
    }
    return std::nullopt;
}

inline bool pairwise_disjoint(const std::vector<CylinderSet>& sets) { return !find_overlap(sets).has_value(); }

inline bool disjoint(const CylinderSet& a, const CylinderSet& b) { return pairwise_disjoint({a, b}); }

struct WeaklyWanderingReport {
    int d = 0;
    int depth_cap = 0;

    // Family t = e, a1^-1 x a1^-k (k = 0..cap, x not a1^{+-1}) acting on H_{a1^-1}.
    std::size_t stated_family_size = 0;
    bool stated_family_disjoint = false;
    std::string stated_overlap_first, stated_overlap_second;
    Rational stated_total_measure;

    // First-occurrence family: t^-1 = w with w free of a1^-1, not ending in a1,
    // |w| <= cap. Images are H_{w a1^-1}.
    std::size_t cover_family_size = 0;
    bool cover_family_disjoint = false;
    Rational covered_measure;
    Rational deficit;
    Rational deficit_recursion;
    std::vector<Rational> covered_by_cap;
};

// Probability that the first `letters` letters of a Patterson-Sullivan point
// avoid a1^-1, via the two-state chain (last letter a1 / other).
inline Rational avoid_a1inv_probability(int d, int letters)
{
    if (letters <= 0)
        return 1;
    Rational q(BigInt(1), BigInt(2 * d - 1));
    Rational on_a1(BigInt(1), BigInt(2 * d));
    Rational other(BigInt(2 * d - 2), BigInt(2 * d));
    for (int j = 1; j < letters; ++j) {
        Rational a = (on_a1 + other) * q;
        Rational o = on_a1 * Rational(2 * d - 2) * q + other * Rational(2 * d - 3) * q;
        on_a1 = a;
        other = o;
    }
    return on_a1 + other;
}

inline WeaklyWanderingReport verify_weakly_wandering(int d, int depth_cap, std::size_t budget = kDefaultWordBudget)
{
    check_rank(d);
    require(depth_cap >= 0, "depth cap must be nonnegative");
    WeaklyWanderingReport r;
    r.d = d;
    r.depth_cap = depth_cap;

    const Word a1 = Word::generator(d, 1, 1);
    const Word a1inv = inverse(a1);
    const auto base = CylinderSet::single(a1inv);

    std::vector<Word> ts{Word::identity(d)};
    for (int k = 0; k <= depth_cap; ++k) {
        for (int o = 2; o < 2 * d; ++o) {
            auto x = Generator::from_ordinal(o);
            Word t = a1inv * Word::generator(d, x.index(), x.sign());
            for (int j = 0; j < k; ++j)
                t = t * a1inv;
            ts.push_back(t);
        }
    }
    std::vector<CylinderSet> images;
    r.stated_total_measure = 0;
    for (const auto& t : ts) {
        images.push_back(act_on_cylinder(t, base));
        r.stated_total_measure += images.back().measure();
    }
    r.stated_family_size = ts.size();
    auto ov = find_overlap(images);
    r.stated_family_disjoint = !ov.has_value();
    if (ov) {
        r.stated_overlap_first = ts[ov->first].to_string();
        r.stated_overlap_second = ts[ov->second].to_string();
    }

    // Words free of a1^-1 by length; those not ending in a1 give images.
    std::vector<CylinderSet> cover;
    r.covered_by_cap.assign(static_cast<std::size_t>(depth_cap) + 1, Rational(0));
    Rational covered = 0;
    std::vector<Word> level{Word::identity(d)};
    for (int len = 0; len <= depth_cap; ++len) {
        for (const auto& w : level) {
            if (!w.is_identity() && w.back() == a1[0])
                continue;
            Word g = w.extended(a1inv[0]);
            covered += cylinder_measure(g);
            cover.push_back(CylinderSet::single(g));
            if (cover.size() > budget)
                throw ResourceError("weakly wandering cover family exceeds budget");
        }
        r.covered_by_cap[static_cast<std::size_t>(len)] = covered;
        if (len == depth_cap)
            break;
        std::vector<Word> next;
        for (const auto& w : level) {
            for (int o = 0; o < 2 * d; ++o) {
                auto x = Generator::from_ordinal(o);
                if (x == a1inv[0] || (!w.is_identity() && x == w.back().inverse()))
                    continue;
                next.push_back(w.extended(x));
            }
        }
        if (next.size() > budget)
            throw ResourceError("weakly wandering cover family exceeds budget");
        level = std::move(next);
    }
    r.cover_family_size = cover.size();
    r.cover_family_disjoint = pairwise_disjoint(cover);
    r.covered_measure = covered;
    r.deficit = 1 - covered;
    r.deficit_recursion = avoid_a1inv_probability(d, depth_cap + 1);
    return r;
}

struct DisjointTranslateReport {
    int d = 0;
    int n = 0;
    BigInt sphere_count; // |C_{n-1}|
    BigInt ball_count;   // |E_n|

    // t = a1 g, g in C_{n-1}, acting on H_{a1}.
    std::size_t stated_distinct_images = 0;
    bool stated_disjoint = false;
    Rational stated_total_measure;

    // t_g^-1 = g y_g with y_g the least letter keeping g y_g a1 reduced.
    std::size_t corrected_count = 0;
    bool corrected_in_ball = false;
    bool corrected_disjoint = false;
    Rational corrected_total_measure;
};

inline DisjointTranslateReport disjoint_translates(int d, int n, std::size_t budget = kDefaultWordBudget)
{
    check_rank(d);
    require(n >= 1, "radius must be >= 1");
    DisjointTranslateReport r;
    r.d = d;
    r.n = n;
    r.sphere_count = sphere_size(d, n - 1);
    r.ball_count = ball_size(d, n);
    const Word a1 = Word::generator(d, 1, 1);
    const auto base = CylinderSet::single(a1);
    auto sphere = enumerate_sphere(d, n - 1, budget);

    std::vector<CylinderSet> stated;
    r.stated_total_measure = 0;
    for (const auto& g : sphere) {
        stated.push_back(act_on_cylinder(a1 * g, base));
        r.stated_total_measure += stated.back().measure();
    }
    {
        std::vector<std::size_t> order(stated.size());
        for (std::size_t i = 0; i < order.size(); ++i)
            order[i] = i;
        auto key_less = [&](std::size_t i, std::size_t j) {
            return std::lexicographical_compare(stated[i].words().begin(), stated[i].words().end(),
                                                stated[j].words().begin(), stated[j].words().end(), lex_less);
        };
        std::sort(order.begin(), order.end(), key_less);
        std::size_t distinct = order.empty() ? 0 : 1;
        for (std::size_t k = 1; k < order.size(); ++k)
            if (!(stated[order[k]] == stated[order[k - 1]]))
                ++distinct;
        r.stated_distinct_images = distinct;
    }
    r.stated_disjoint = pairwise_disjoint(stated);

    std::vector<CylinderSet> corrected;
    r.corrected_total_measure = 0;
    r.corrected_in_ball = true;
    for (const auto& g : sphere) {
        Generator y;
        for (int o = 0; o < 2 * d; ++o) {
            auto x = Generator::from_ordinal(o);
            if (x == a1[0].inverse() || (!g.is_identity() && x == g.back().inverse()))
                continue;
            y = x;
            break;
        }
        Word tinv = g.extended(y);
        Word t = inverse(tinv);
        if (t.length() > static_cast<std::size_t>(n))
            r.corrected_in_ball = false;
        corrected.push_back(act_on_cylinder(t, base));
        r.corrected_total_measure += corrected.back().measure();
    }
    r.corrected_count = corrected.size();
    r.corrected_disjoint = pairwise_disjoint(corrected);
    return r;
}

} // namespace sasfree
