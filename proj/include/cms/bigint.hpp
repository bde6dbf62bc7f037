#pragma once

#include <string>

#include <boost/multiprecision/cpp_int.hpp>

namespace cms {

using BigInt = boost::multiprecision::cpp_int;

// Natural logarithm of a nonnegative integer; -inf for zero. Accurate to
// double precision for arbitrarily large values.
double log_big(const BigInt& value);

// value / 2^shift as a double without overflow for huge values.
double to_double(const BigInt& value);

inline std::string to_decimal(const BigInt& value) { return value.str(); }

BigInt from_decimal(const std::string& text);

}  // namespace cms
