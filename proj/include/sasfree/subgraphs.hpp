#pragma once

#include "error.hpp"
#include "free_group.hpp"
#include "kernel.hpp"
#include "random.hpp"
#include "rational.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>
#include <vector>

namespace sasfree {

// Finite prefix v_0, ..., v_K of the ray defining an ell-subgraph
// xi = U_k {t : d(t, v_k) <= k}.
class EllPath {
public:
    EllPath(int ell, int rank, std::vector<Word> vertices)
        : ell_(ell), rank_(rank), vertices_(std::move(vertices))
    {
        check_rank(rank);
        validate();
    }

    int ell() const { return ell_; }
    int rank() const { return rank_; }
    // Number of steps K; the path has K + 1 vertices.
    std::size_t length() const { return vertices_.size() - 1; }
    const std::vector<Word>& vertices() const { return vertices_; }
    const Word& vertex(std::size_t k) const { return vertices_.at(k); }

    std::size_t expected_norm(std::size_t k) const
    {
        long a = std::labs(ell_);
        long kk = static_cast<long>(k);
        if (ell_ >= 0)
            return static_cast<std::size_t>(a + kk);
        return static_cast<std::size_t>(kk <= a ? a - kk : kk - a);
    }

    // Path length needed to decide membership of words of length `word_length`.
    std::size_t required_length(std::size_t word_length) const
    {
        return word_length + 2 * static_cast<std::size_t>(std::labs(ell_)) + 2;
    }

    EllPath restricted(std::size_t k) const
    {
        require(k >= 1 && k <= length(), "restriction length out of range");
        return EllPath(ell_, rank_, std::vector<Word>(vertices_.begin(), vertices_.begin() + static_cast<std::ptrdiff_t>(k) + 1));
    }

private:
    void validate() const
    {
        if (vertices_.size() < 2)
            throw InvalidArgument("ell-path needs at least one step");
        for (std::size_t k = 0; k < vertices_.size(); ++k) {
            if (vertices_[k].rank() != rank_)
                throw RankMismatch(vertices_[k].rank(), rank_);
            if (vertices_[k].length() != expected_norm(k))
                throw InvalidArgument("ell-path vertex " + std::to_string(k) + " has wrong distance to e");
            if (k > 0 && distance(vertices_[k - 1], vertices_[k]) != 1)
                throw InvalidArgument("ell-path vertices " + std::to_string(k - 1) + ", " + std::to_string(k) +
                                      " are not adjacent");
            // In a tree a walk without immediate reversals is self-avoiding.
            if (k > 1 && vertices_[k - 2] == vertices_[k])
                throw InvalidArgument("ell-path backtracks at vertex " + std::to_string(k));
        }
    }

    int ell_;
    int rank_;
    std::vector<Word> vertices_;
};

// Path-uniform law on ell-paths with K steps: v_0 uniform on C_|ell|, forced
// descent to e when ell < 0, then uniform non-backtracking outward steps.
inline EllPath sample_gamma_ell(int ell, int d, std::size_t K, Stream& rng)
{
    check_rank(d);
    require(K >= 1, "ell-path length must be >= 1");
    const auto a = static_cast<std::size_t>(std::labs(ell));
    const auto q = static_cast<std::uint64_t>(2 * d - 1);

    std::vector<Generator> top;
    for (std::size_t i = 0; i < a; ++i) {
        if (i == 0)
            top.push_back(Generator::from_ordinal(static_cast<int>(rng.bounded(2 * static_cast<std::uint64_t>(d)))));
        else
            top.push_back(BallIndexer::continuation_letter(top.back(), static_cast<int>(rng.bounded(q))));
    }
    std::vector<Word> v;
    v.reserve(K + 1);
    Word cur = Word::from_letters(d, top);
    v.push_back(cur);
    std::size_t k = 0;
    if (ell < 0) {
        for (; k < a && k < K; ++k) {
            cur = cur.prefix(cur.length() - 1);
            v.push_back(cur);
        }
    }
    // Letter forbidden for the first outward step from e after a descent.
    const bool after_descent = ell < 0;
    const Generator came_from = a > 0 ? top.front() : Generator();
    for (; k < K; ++k) {
        Generator x;
        if (cur.is_identity()) {
            if (after_descent) {
                // 2d-1 choices, skipping the first letter of v_0.
                auto r = static_cast<int>(rng.bounded(q));
                x = Generator::from_ordinal(r >= came_from.ordinal() ? r + 1 : r);
            } else {
                x = Generator::from_ordinal(static_cast<int>(rng.bounded(2 * static_cast<std::uint64_t>(d))));
            }
        } else {
            x = BallIndexer::continuation_letter(cur.back(), static_cast<int>(rng.bounded(q)));
        }
        cur = cur.extended(x);
        v.push_back(cur);
    }
    return EllPath(ell, d, std::move(v));
}

// min_k (d(t, v_k) - k) over the stored path. Only exact when the path is at
// least xi.required_length(|t|) long.
inline long membership_margin(const Word& t, const EllPath& xi)
{
    long best = std::numeric_limits<long>::max();
    for (std::size_t k = 0; k < xi.vertices().size(); ++k)
        best = std::min(best, static_cast<long>(distance(t, xi.vertex(k))) - static_cast<long>(k));
    return best;
}

inline bool membership(const Word& t, const EllPath& xi)
{
    check_same_rank(t, xi.vertex(0));
    std::size_t need = xi.required_length(t.length());
    if (xi.length() < need)
        throw InsufficientPrefix("ell-path too short to decide membership of " + t.to_string(), xi.length(), need);
    return membership_margin(t, xi) <= 0;
}

// Number of vertices of xi on C_{ell+k}, ell >= 1.
inline BigInt vertex_count(int ell, int k, int d)
{
    check_rank(d);
    require(ell >= 1, "vertex count closed form needs ell >= 1");
    require(k >= 0, "k must be nonnegative");
    return ipow(2 * d - 1, static_cast<unsigned>(k / 2));
}

// |xi intersect C_L| for every ell, from the distance profile alone: for
// ell >= 0 the sphere point t is in xi iff |t ^ ray| >= ell + ceil((L - ell)/2);
// for ell = -a < 0, xi contains E_a and beyond it only the outward branch counts.
inline BigInt level_profile(int ell, int L, int d)
{
    check_rank(d);
    require(L >= 0, "level must be nonnegative");
    const int q = 2 * d - 1;
    if (ell >= 0)
        return L < ell ? BigInt(0) : ipow(q, static_cast<unsigned>((L - ell) / 2));
    const int a = -ell;
    if (L <= a)
        return sphere_size(d, L);
    return ipow(q, static_cast<unsigned>(a + (L - a) / 2));
}

// Counts |xi intersect C_R| by depth-first search, pruning a subtree rooted at
// x (|x| = h) once min_k(d(x, v_k) - k) > R - h, which no descendant of depth
// R can undo.
inline std::uint64_t count_members_on_sphere(const EllPath& xi, int R)
{
    require(R >= 0, "radius must be nonnegative");
    int d = xi.rank();
    std::size_t need = xi.required_length(static_cast<std::size_t>(R));
    if (xi.length() < need)
        throw InsufficientPrefix("ell-path too short for sphere count", xi.length(), need);
    std::uint64_t count = 0;
    std::vector<Word> stack{Word::identity(d)};
    while (!stack.empty()) {
        Word x = std::move(stack.back());
        stack.pop_back();
        long h = static_cast<long>(x.length());
        long margin = membership_margin(x, xi);
        if (margin > R - h)
            continue;
        if (h == R) {
            ++count;
            continue;
        }
        for (int o = 0; o < 2 * d; ++o) {
            auto g = Generator::from_ordinal(o);
            if (!x.is_identity() && g == x.back().inverse())
                continue;
            stack.push_back(x.extended(g));
        }
    }
    return count;
}

// Mask over E_m (shortlex order) of the vertices lying in xi.
inline std::vector<char> members_in_ball(const EllPath& xi, const BallIndexer& ball)
{
    std::vector<char> mask(ball.size(), 0);
    for (std::uint64_t i = 0; i < ball.size(); ++i)
        mask[i] = membership(ball.word(i), xi) ? 1 : 0;
    return mask;
}

inline KernelTable thin_function(const KernelTable& f, const EllPath& xi)
{
    if (f.rank() != xi.rank())
        throw RankMismatch(f.rank(), xi.rank());
    auto mask = members_in_ball(xi, f.indexer());
    KernelTable out(f.rank(), f.radius());
    for (const auto& a : f.atoms()) {
        KernelAtom b = a;
        for (std::size_t i = 0; i < b.values.size(); ++i)
            if (!mask[i])
                b.values[i] = 0.0;
        out.add_atom(std::move(b));
    }
    return out;
}

// mu(k) = 2d (2d-1)^(k-1) (d-1)/d for k <= 0.
inline Rational mu_pmf(int k, int d)
{
    check_rank(d);
    if (k > 0)
        return 0;
    return Rational(2 * (d - 1)) * rpow(2 * d - 1, k - 1);
}

// mu(s <= -j) = (2d-1)^-j for j >= 0.
inline Rational mu_tail(int j, int d)
{
    check_rank(d);
    require(j >= 0, "tail index must be nonnegative");
    return rpow(2 * d - 1, -j);
}

inline int sample_mu(int d, Stream& rng)
{
    check_rank(d);
    double u = rng.uniform01();
    double j = std::floor(std::log(u) / -std::log(static_cast<double>(2 * d - 1)));
    return -static_cast<int>(j);
}

} // namespace sasfree
