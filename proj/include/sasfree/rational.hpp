#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>

namespace sasfree {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline BigInt ipow(std::int64_t base, unsigned exp)
{
    return boost::multiprecision::pow(BigInt(base), exp);
}

// base^exp for a possibly negative exponent, as an exact rational.
inline Rational rpow(std::int64_t base, int exp)
{
    if (exp >= 0)
        return Rational(ipow(base, static_cast<unsigned>(exp)));
    return Rational(BigInt(1), ipow(base, static_cast<unsigned>(-exp)));
}

inline double to_double(const Rational& q) { return q.convert_to<double>(); }
inline double to_double(const BigInt& z) { return z.convert_to<double>(); }

} // namespace sasfree
