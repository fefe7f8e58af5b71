#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace sasfree {

namespace detail {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace detail

// Named purposes for streams so that independent draws in one replication
// never share a counter sequence.
enum class StreamRole : std::uint64_t {
    generic = 1,
    boundary = 2,
    series = 3,
    noise = 4,
    subgraph = 5,
    poisson = 6,
    mu = 7,
    pareto = 8,
};

// Key of a counter-based stream. Keys are derived, never advanced, so any
// (seed, replication, role) triple can be reconstructed on any worker.
struct StreamKey {
    std::uint64_t value = 0;

    static constexpr StreamKey make(std::uint64_t seed, std::uint64_t replication,
                                    StreamRole role)
    {
        std::uint64_t k = detail::mix64(seed + detail::kGolden);
        k = detail::mix64(k ^ (replication * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
        k = detail::mix64(k ^ (static_cast<std::uint64_t>(role) * 0x8cb92ba72f3d8dd7ULL));
        return StreamKey{k};
    }

    constexpr StreamKey child(std::uint64_t index) const
    {
        return StreamKey{detail::mix64(value ^ detail::mix64(index + 0x2545f4914f6cdd1dULL))};
    }

    // Stateless draw number `i` of this key.
    constexpr std::uint64_t at(std::uint64_t i) const
    {
        return detail::mix64(value + (i + 1) * detail::kGolden);
    }
};

// Sequential view of a StreamKey. Distribution transforms are implemented
// here rather than via <random> so that draws are identical on every platform.
class Stream {
public:
    using result_type = std::uint64_t;

    explicit Stream(StreamKey key) : key_(key) {}
    Stream(std::uint64_t seed, std::uint64_t replication, StreamRole role = StreamRole::generic)
        : key_(StreamKey::make(seed, replication, role))
    {
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return key_.at(counter_++); }
    result_type next_u64() { return (*this)(); }

    // Uniform on the open interval (0, 1).
    double uniform01() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    double exponential() { return -std::log(uniform01()); }

    int sign() { return (next_u64() >> 63) ? -1 : 1; }

    // Uniform on {0, ..., n-1}, unbiased (Lemire's multiply-shift with rejection).
    std::uint64_t bounded(std::uint64_t n)
    {
        unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            std::uint64_t t = (0 - n) % n;
            while (low < t) {
                m = static_cast<unsigned __int128>(next_u64()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    // Poisson(lambda) by counting unit-rate arrivals in [0, lambda].
    std::uint64_t poisson(double lambda)
    {
        std::uint64_t k = 0;
        double t = exponential();
        while (t <= lambda) {
            ++k;
            t += exponential();
        }
        return k;
    }

    Stream split(std::uint64_t index) const { return Stream(key_.child(index)); }
    StreamKey key() const { return key_; }
    std::uint64_t position() const { return counter_; }

private:
    StreamKey key_;
    std::uint64_t counter_ = 0;
};

} // namespace sasfree
