#include "cms/bigint.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace cms {

double log_big(const BigInt& value) {
  if (value <= 0) {
    if (value < 0) throw std::domain_error("log_big: negative argument");
    return -std::numeric_limits<double>::infinity();
  }
  const auto bits = static_cast<long>(boost::multiprecision::msb(value)) + 1;
  if (bits <= 960) return std::log(value.convert_to<double>());
  const long shift = bits - 64;
  const BigInt top = value >> shift;
  return std::log(top.convert_to<double>()) +
         static_cast<double>(shift) * std::numbers::ln2;
}

double to_double(const BigInt& value) {
  if (value == 0) return 0.0;
  const auto bits = static_cast<long>(boost::multiprecision::msb(abs(value))) + 1;
  if (bits <= 1020) return value.convert_to<double>();
  return value > 0 ? std::numeric_limits<double>::infinity()
                   : -std::numeric_limits<double>::infinity();
}

BigInt from_decimal(const std::string& text) {
  if (text.empty()) throw std::invalid_argument("empty integer literal");
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (!(c >= '0' && c <= '9') && !(i == 0 && c == '-')) {
      throw std::invalid_argument("invalid integer literal: " + text);
    }
  }
  return BigInt(text);
}

}  // namespace cms
