#pragma once

#include "error.hpp"
#include "rational.hpp"

#include <algorithm>
#include <compare>
#include <limits>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace sasfree {

constexpr int kMaxRank = 64;
constexpr std::size_t kDefaultWordBudget = 1'000'000;

inline void check_rank(int d)
{
    if (d < 2 || d > kMaxRank)
        throw InvalidArgument("rank must be in [2, " + std::to_string(kMaxRank) + "], got " +
                              std::to_string(d));
}

// A free generator a_i or its inverse, stored as the signed index +-i.
// Canonical order: a1 < a1^-1 < a2 < a2^-1 < ...
class Generator {
public:
    constexpr Generator() = default;
    constexpr Generator(int index, int sign) : code_(static_cast<std::int8_t>(sign < 0 ? -index : index)) {}

    static constexpr Generator from_code(int code) { return Generator(code < 0 ? -code : code, code < 0 ? -1 : 1); }
    static constexpr Generator from_ordinal(int ord) { return Generator(ord / 2 + 1, (ord % 2) ? -1 : 1); }

    constexpr int index() const { return code_ < 0 ? -code_ : code_; }
    constexpr int sign() const { return code_ < 0 ? -1 : 1; }
    constexpr int code() const { return code_; }
    constexpr int ordinal() const { return 2 * (index() - 1) + (code_ < 0 ? 1 : 0); }
    constexpr Generator inverse() const { return from_code(-code_); }
    constexpr bool valid() const { return code_ != 0; }

    constexpr bool operator==(const Generator&) const = default;
    constexpr std::strong_ordering operator<=>(const Generator& o) const { return ordinal() <=> o.ordinal(); }

    std::string to_string() const
    {
        std::string s = "a" + std::to_string(index());
        if (code_ < 0)
            s += "^-1";
        return s;
    }

private:
    std::int8_t code_ = 0;
};

namespace detail {

inline void reduce_in_place(std::vector<Generator>& v)
{
    std::size_t top = 0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (top > 0 && v[top - 1] == v[i].inverse())
            --top;
        else
            v[top++] = v[i];
    }
    v.resize(top);
}

inline bool is_reduced(std::span<const Generator> v)
{
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] == v[i - 1].inverse())
            return false;
    return true;
}

} // namespace detail

// Reduced word in the free group of rank d. Immutable once constructed.
class Word {
public:
    explicit Word(int rank) : rank_(rank) { check_rank(rank); }

    static Word identity(int rank) { return Word(rank); }

    static Word generator(int rank, int index, int sign = 1)
    {
        check_rank(rank);
        if (index < 1 || index > rank)
            throw InvalidArgument("generator index out of range");
        return Word(rank, std::vector<Generator>{Generator(index, sign)}, trusted{});
    }

    // Freely reduces the given letters.
    static Word from_letters(int rank, std::vector<Generator> letters)
    {
        check_rank(rank);
        for (auto g : letters)
            if (!g.valid() || g.index() > rank)
                throw InvalidArgument("letter " + g.to_string() + " not in rank " + std::to_string(rank));
        detail::reduce_in_place(letters);
        return Word(rank, std::move(letters), trusted{});
    }

    static Word from_codes(int rank, std::initializer_list<int> codes)
    {
        std::vector<Generator> v;
        for (int c : codes)
            v.push_back(Generator::from_code(c));
        return from_letters(rank, std::move(v));
    }

    int rank() const { return rank_; }
    std::size_t length() const { return letters_.size(); }
    bool is_identity() const { return letters_.empty(); }
    std::span<const Generator> letters() const { return letters_; }
    Generator operator[](std::size_t i) const { return letters_[i]; }
    Generator front() const { return letters_.front(); }
    Generator back() const { return letters_.back(); }

    Word prefix(std::size_t n) const
    {
        n = std::min(n, letters_.size());
        return Word(rank_, std::vector<Generator>(letters_.begin(), letters_.begin() + static_cast<std::ptrdiff_t>(n)), trusted{});
    }

    // Appends a letter that must not cancel.
    Word extended(Generator g) const
    {
        if (!letters_.empty() && letters_.back() == g.inverse())
            throw InvalidArgument("extension would backtrack");
        auto v = letters_;
        v.push_back(g);
        return Word(rank_, std::move(v), trusted{});
    }

    bool operator==(const Word& o) const { return rank_ == o.rank_ && letters_ == o.letters_; }

    std::string to_string() const
    {
        if (letters_.empty())
            return "e";
        std::string s;
        for (std::size_t i = 0; i < letters_.size(); ++i) {
            if (i)
                s += '.';
            s += letters_[i].to_string();
        }
        return s;
    }

private:
    struct trusted {};
    Word(int rank, std::vector<Generator> letters, trusted) : rank_(rank), letters_(std::move(letters)) {}

    friend Word multiply(const Word&, const Word&);
    friend Word inverse(const Word&);

    int rank_;
    std::vector<Generator> letters_;
};

inline void check_same_rank(const Word& u, const Word& v)
{
    if (u.rank() != v.rank())
        throw RankMismatch(u.rank(), v.rank());
}

inline Word multiply(const Word& u, const Word& v)
{
    check_same_rank(u, v);
    auto a = u.letters();
    auto b = v.letters();
    std::size_t c = 0;
    while (c < a.size() && c < b.size() && a[a.size() - 1 - c] == b[c].inverse())
        ++c;
    std::vector<Generator> out;
    out.reserve(a.size() + b.size() - 2 * c);
    out.insert(out.end(), a.begin(), a.end() - static_cast<std::ptrdiff_t>(c));
    out.insert(out.end(), b.begin() + static_cast<std::ptrdiff_t>(c), b.end());
    return Word(u.rank(), std::move(out), Word::trusted{});
}

inline Word operator*(const Word& u, const Word& v) { return multiply(u, v); }

inline Word inverse(const Word& u)
{
    std::vector<Generator> out(u.length());
    for (std::size_t i = 0; i < u.length(); ++i)
        out[i] = u[u.length() - 1 - i].inverse();
    return Word(u.rank(), std::move(out), Word::trusted{});
}

inline std::size_t common_prefix_length(std::span<const Generator> a, std::span<const Generator> b)
{
    std::size_t n = std::min(a.size(), b.size());
    std::size_t i = 0;
    while (i < n && a[i] == b[i])
        ++i;
    return i;
}

inline std::size_t common_prefix_length(const Word& u, const Word& v)
{
    check_same_rank(u, v);
    return common_prefix_length(u.letters(), v.letters());
}

// Graph distance in the Cayley tree, |u^-1 v|.
inline std::size_t distance(const Word& u, const Word& v)
{
    std::size_t c = common_prefix_length(u, v);
    return u.length() + v.length() - 2 * c;
}

inline bool is_prefix(const Word& p, const Word& w)
{
    return p.length() <= w.length() && common_prefix_length(p, w) == p.length();
}

// Lexicographic order on letters (a prefix precedes its extensions).
inline bool lex_less(const Word& u, const Word& v)
{
    return std::lexicographical_compare(u.letters().begin(), u.letters().end(),
                                        v.letters().begin(), v.letters().end());
}

// Shortlex: by length, then lexicographic. This is the enumeration order.
inline bool shortlex_less(const Word& u, const Word& v)
{
    if (u.length() != v.length())
        return u.length() < v.length();
    return lex_less(u, v);
}

// Longest common initial segment of t and a boundary point known through the
// prefix omega. Undecidable only if the prefix is exhausted before t is.
inline std::size_t confluent_length(const Word& t, const Word& omega_prefix)
{
    std::size_t c = common_prefix_length(t, omega_prefix);
    if (c == omega_prefix.length() && c < t.length())
        throw InsufficientPrefix("boundary prefix too short for confluent of " + t.to_string(),
                                 omega_prefix.length(), t.length());
    return c;
}

inline long busemann(const Word& t, const Word& omega_prefix)
{
    return static_cast<long>(t.length()) - 2 * static_cast<long>(confluent_length(t, omega_prefix));
}

// |E_n| = 1 + d/(d-1) ((2d-1)^n - 1)
inline BigInt ball_size(int d, int n)
{
    check_rank(d);
    require(n >= 0, "radius must be nonnegative");
    return 1 + BigInt(d) * (ipow(2 * d - 1, static_cast<unsigned>(n)) - 1) / (d - 1);
}

// |C_n| = 2d (2d-1)^(n-1), |C_0| = 1
inline BigInt sphere_size(int d, int n)
{
    check_rank(d);
    require(n >= 0, "radius must be nonnegative");
    if (n == 0)
        return 1;
    return BigInt(2 * d) * ipow(2 * d - 1, static_cast<unsigned>(n - 1));
}

inline std::uint64_t to_u64_checked(const BigInt& z, const char* what)
{
    if (z > BigInt(std::numeric_limits<std::uint64_t>::max() / 2))
        throw ResourceError(std::string(what) + " exceeds 64-bit index range");
    return z.convert_to<std::uint64_t>();
}

// Flat indexing of E_n in shortlex order. Index of a word of length L is
// |E_{L-1}| plus its lexicographic rank in C_L, where the rank has mixed-radix
// digits (first letter in [0, 2d), continuations in [0, 2d-1)).
class BallIndexer {
public:
    BallIndexer(int d, int n) : d_(d), n_(n)
    {
        check_rank(d);
        require(n >= 0, "radius must be nonnegative");
        to_u64_checked(ball_size(d, n), "ball size");
        offsets_.resize(static_cast<std::size_t>(n) + 2);
        offsets_[0] = 0;
        std::uint64_t sphere = 1;
        for (int L = 0; L <= n; ++L) {
            offsets_[L + 1] = offsets_[L] + sphere;
            sphere = (L == 0) ? 2 * d : sphere * static_cast<std::uint64_t>(2 * d - 1);
        }
    }

    int rank() const { return d_; }
    int radius() const { return n_; }
    std::uint64_t size() const { return offsets_[n_ + 1]; }
    // First index of words of length L; level_begin(L+1) - level_begin(L) = |C_L|.
    std::uint64_t level_begin(int L) const { return offsets_[L]; }
    std::uint64_t level_end(int L) const { return offsets_[L + 1]; }

    static int continuation_digit(Generator prev, Generator g)
    {
        int o = g.ordinal();
        return o - (o > prev.inverse().ordinal() ? 1 : 0);
    }

    static Generator continuation_letter(Generator prev, int digit)
    {
        int skip = prev.inverse().ordinal();
        return Generator::from_ordinal(digit >= skip ? digit + 1 : digit);
    }

    std::uint64_t rank_in_sphere(std::span<const Generator> w) const
    {
        if (w.empty())
            return 0;
        std::uint64_t r = static_cast<std::uint64_t>(w[0].ordinal());
        for (std::size_t i = 1; i < w.size(); ++i)
            r = r * static_cast<std::uint64_t>(2 * d_ - 1) + static_cast<std::uint64_t>(continuation_digit(w[i - 1], w[i]));
        return r;
    }

    std::uint64_t index(const Word& w) const
    {
        if (w.rank() != d_)
            throw RankMismatch(w.rank(), d_);
        if (w.length() > static_cast<std::size_t>(n_))
            throw InvalidArgument("word " + w.to_string() + " outside ball of radius " + std::to_string(n_));
        return offsets_[w.length()] + rank_in_sphere(w.letters());
    }

    std::uint64_t index(std::span<const Generator> w) const { return offsets_[w.size()] + rank_in_sphere(w); }

    int length_of(std::uint64_t idx) const
    {
        int L = 0;
        while (offsets_[L + 1] <= idx)
            ++L;
        return L;
    }

    std::uint64_t parent(std::uint64_t idx) const
    {
        int L = length_of(idx);
        if (L == 0)
            throw InvalidArgument("identity has no parent");
        if (L == 1)
            return 0;
        return offsets_[L - 1] + (idx - offsets_[L]) / static_cast<std::uint64_t>(2 * d_ - 1);
    }

    Word word(std::uint64_t idx) const
    {
        require(idx < size(), "ball index out of range");
        int L = length_of(idx);
        std::uint64_t r = idx - offsets_[L];
        std::vector<int> digits(static_cast<std::size_t>(L));
        for (int i = L - 1; i >= 1; --i) {
            digits[i] = static_cast<int>(r % static_cast<std::uint64_t>(2 * d_ - 1));
            r /= static_cast<std::uint64_t>(2 * d_ - 1);
        }
        std::vector<Generator> letters;
        if (L > 0) {
            letters.push_back(Generator::from_ordinal(static_cast<int>(r)));
            for (int i = 1; i < L; ++i)
                letters.push_back(continuation_letter(letters.back(), digits[i]));
        }
        return Word::from_letters(d_, std::move(letters));
    }

private:
    int d_;
    int n_;
    std::vector<std::uint64_t> offsets_;
};

inline void check_budget(const BigInt& count, std::size_t budget, const char* what)
{
    if (count > BigInt(budget))
        throw ResourceError(std::string(what) + " of " + count.str() + " words exceeds budget of " +
                            std::to_string(budget));
}

// All words of E_n in shortlex order.
inline std::vector<Word> enumerate_ball(int d, int n, std::size_t budget = kDefaultWordBudget)
{
    check_budget(ball_size(d, n), budget, "ball");
    std::vector<Word> out;
    out.reserve(ball_size(d, n).convert_to<std::size_t>());
    out.push_back(Word::identity(d));
    std::size_t level_start = 0;
    for (int L = 1; L <= n; ++L) {
        std::size_t level_end = out.size();
        for (std::size_t i = level_start; i < level_end; ++i) {
            for (int o = 0; o < 2 * d; ++o) {
                Generator g = Generator::from_ordinal(o);
                if (L > 1 && out[i].back() == g.inverse())
                    continue;
                out.push_back(out[i].extended(g));
            }
        }
        level_start = level_end;
    }
    return out;
}

inline std::vector<Word> enumerate_sphere(int d, int n, std::size_t budget = kDefaultWordBudget)
{
    check_budget(sphere_size(d, n), budget, "sphere");
    if (n == 0)
        return {Word::identity(d)};
    auto ball = enumerate_ball(d, n, std::max(budget, ball_size(d, n).convert_to<std::size_t>()));
    std::size_t first = ball_size(d, n - 1).convert_to<std::size_t>();
    return std::vector<Word>(ball.begin() + static_cast<std::ptrdiff_t>(first), ball.end());
}

// Parses "e", "a1", "a1.a2^-1", "a3^-1.a1". Whitespace is not allowed.
inline Word parse_word(int d, std::string_view s)
{
    check_rank(d);
    if (s == "e" || s.empty())
        return Word::identity(d);
    std::vector<Generator> letters;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t end = s.find('.', pos);
        if (end == std::string_view::npos)
            end = s.size();
        std::string_view tok = s.substr(pos, end - pos);
        int sign = 1;
        if (tok.size() > 3 && tok.substr(tok.size() - 3) == "^-1") {
            sign = -1;
            tok.remove_suffix(3);
        }
        if (tok.size() < 2 || tok[0] != 'a')
            throw InvalidArgument("bad letter '" + std::string(tok) + "' in word '" + std::string(s) + "'");
        int idx = 0;
        for (char c : tok.substr(1)) {
            if (c < '0' || c > '9')
                throw InvalidArgument("bad letter '" + std::string(tok) + "' in word '" + std::string(s) + "'");
            idx = idx * 10 + (c - '0');
            if (idx > kMaxRank)
                break;
        }
        if (idx < 1 || idx > d)
            throw InvalidArgument("generator index out of range in '" + std::string(s) + "'");
        letters.emplace_back(idx, sign);
        pos = end + 1;
    }
    return Word::from_letters(d, std::move(letters));
}

} // namespace sasfree
