#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sasfree {

class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class RankMismatch : public InvalidArgument {
public:
    RankMismatch(int a, int b)
        : InvalidArgument("rank mismatch: " + std::to_string(a) + " vs " + std::to_string(b))
    {
    }
};

// Thrown when a boundary prefix or subgraph path is too short to decide a
// quantity. `required` is the minimal length that makes it decidable, so the
// caller can extend and retry.
class InsufficientPrefix : public std::runtime_error {
public:
    InsufficientPrefix(const std::string& what, std::size_t have, std::size_t required)
        : std::runtime_error(what + " (have " + std::to_string(have) + ", need " +
                             std::to_string(required) + ")"),
          have_(have), required_(required)
    {
    }
    std::size_t have() const noexcept { return have_; }
    std::size_t required() const noexcept { return required_; }

private:
    std::size_t have_;
    std::size_t required_;
};

class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnsupportedModel : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

inline void require(bool ok, const std::string& msg)
{
    if (!ok)
        throw InvalidArgument(msg);
}

} // namespace sasfree
