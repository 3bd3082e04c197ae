#ifndef CBD_RATIONAL_HPP
#define CBD_RATIONAL_HPP

#include <boost/multiprecision/cpp_int.hpp>

#include <cctype>
#include <string>
#include <string_view>

#include "cbd/error.hpp"

namespace cbd {

/// Exact rational scalar used throughout the library.
/// Kept in lowest terms with positive denominator by the backend.
using Q = boost::multiprecision::cpp_rational;
using Z = boost::multiprecision::cpp_int;

namespace detail {

inline bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isdigit(static_cast<unsigned char>(c))) return false;
  return true;
}

// cpp_int's string constructor treats a leading zero as an octal prefix,
// so strip leading zeros before converting.
inline Z z_from_digits(std::string_view s) {
  while (s.size() > 1 && s.front() == '0') s.remove_prefix(1);
  return Z{std::string(s)};
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
    s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
    s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Parses "p/q", an integer, or a decimal ("0.25", "1.5e-3") exactly.
/// Throws Error(parse_error) on anything else.
inline Q parse_rational(std::string_view text) {
  std::string_view s = detail::trim(text);
  if (s.empty()) throw Error(Errc::parse_error, "empty number");

  bool negative = false;
  if (s.front() == '+' || s.front() == '-') {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }

  auto fail = [&] {
    throw Error(Errc::parse_error,
                "not a rational or decimal: '" + std::string(text) + "'");
  };

  if (auto slash = s.find('/'); slash != std::string_view::npos) {
    std::string_view num = s.substr(0, slash), den = s.substr(slash + 1);
    if (!detail::all_digits(num) || !detail::all_digits(den)) fail();
    Z n = detail::z_from_digits(num), d = detail::z_from_digits(den);
    if (d == 0) throw Error(Errc::parse_error, "zero denominator");
    Q r(n, d);
    return negative ? Q(-r) : r;
  }

  std::string_view mantissa = s;
  long long exponent = 0;
  if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
    mantissa = s.substr(0, e);
    std::string_view es = s.substr(e + 1);
    bool eneg = false;
    if (!es.empty() && (es.front() == '+' || es.front() == '-')) {
      eneg = es.front() == '-';
      es.remove_prefix(1);
    }
    if (!detail::all_digits(es) || es.size() > 6) fail();
    exponent = std::stoll(std::string(es));
    if (eneg) exponent = -exponent;
  }

  std::string digits;
  long long scale = 0;  // digits after the decimal point
  if (auto dot = mantissa.find('.'); dot != std::string_view::npos) {
    std::string_view ip = mantissa.substr(0, dot), fp = mantissa.substr(dot + 1);
    if (ip.empty() && fp.empty()) fail();
    if (!ip.empty() && !detail::all_digits(ip)) fail();
    if (!fp.empty() && !detail::all_digits(fp)) fail();
    digits = std::string(ip) + std::string(fp);
    scale = static_cast<long long>(fp.size());
  } else {
    if (!detail::all_digits(mantissa)) fail();
    digits = std::string(mantissa);
  }
  if (digits.empty()) fail();

  Z n = detail::z_from_digits(digits);
  Q r(n);
  long long shift = exponent - scale;
  if (shift > 0) r *= Q(boost::multiprecision::pow(Z(10), static_cast<unsigned>(shift)));
  if (shift < 0) r /= Q(boost::multiprecision::pow(Z(10), static_cast<unsigned>(-shift)));
  return negative ? Q(-r) : r;
}

/// Canonical text form: "p" for integers, "p/q" otherwise, lowest terms.
inline std::string rational_str(const Q& r) {
  Z n = boost::multiprecision::numerator(r);
  Z d = boost::multiprecision::denominator(r);
  if (d == 1) return n.str();
  return n.str() + "/" + d.str();
}

inline double to_double(const Q& r) { return r.template convert_to<double>(); }

/// Absolute value; boost's abs on expression templates is awkward at call sites.
inline Q q_abs(const Q& r) { return r < 0 ? Q(-r) : r; }

}  // namespace cbd

#endif  // CBD_RATIONAL_HPP
