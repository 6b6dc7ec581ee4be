#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <string>
#include <string_view>

#include "skewjoin/error.hpp"

namespace skewjoin {

// Exact arbitrary-precision rational. Frequencies, selectivities and
// workloads are all kept in this type so equality is decidable.
using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

inline Rational as_rational(std::uint64_t x) { return Rational(x); }

inline Rational make_rational(std::uint64_t num, std::uint64_t den) {
  if (den == 0) throw ConfigError("rational with zero denominator");
  return Rational(BigInt(num), BigInt(den));
}

// Always "p/q", including integers ("3/1"), so files diff cleanly.
inline std::string to_string(const Rational& r) {
  return numerator(r).str() + "/" + denominator(r).str();
}

// Accepts "p/q", "p" or a plain decimal such as "0.25".
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  try {
    if (auto slash = s.find('/'); slash != std::string::npos) {
      BigInt den(s.substr(slash + 1));
      if (den == 0) throw ConfigError("rational with zero denominator: " + s);
      return Rational(BigInt(s.substr(0, slash)), den);
    }
    if (auto dot = s.find('.'); dot != std::string::npos) {
      std::string frac = s.substr(dot + 1);
      std::string whole = s.substr(0, dot);
      bool negative = !whole.empty() && whole[0] == '-';
      if (negative) whole.erase(0, 1);
      if (whole.empty()) whole = "0";
      BigInt scale = 1;
      for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
      BigInt num = BigInt(whole) * scale + (frac.empty() ? BigInt(0) : BigInt(frac));
      Rational r(num, scale);
      return negative ? Rational(-r) : r;
    }
    return Rational(BigInt(s));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("not a rational number: '" + s + "'");
  }
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

inline BigInt ceil_of(const Rational& r) {
  BigInt q = numerator(r) / denominator(r);
  if (q * denominator(r) < numerator(r)) ++q;
  return q;
}

}  // namespace skewjoin
