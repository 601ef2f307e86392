#pragma once

// Scalar backends: exact rationals (GMP) and IEEE doubles, plus the literal
// syntax shared by the table format and the CLI.

#include <boost/multiprecision/gmp.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>

#include "slespec/error.hpp"

namespace slespec {

using Rational = boost::multiprecision::mpq_rational;
using BigInt = boost::multiprecision::mpz_int;

enum class Backend { Rational, Float };

template <class S>
inline constexpr bool is_rational_v = std::is_same_v<S, Rational>;

template <class S>
double to_double(const S& x) {
    if constexpr (is_rational_v<S>) {
        return x.template convert_to<double>();
    } else {
        return static_cast<double>(x);
    }
}

template <class S>
S abs_value(const S& x) {
    if constexpr (is_rational_v<S>) {
        return boost::multiprecision::abs(x);
    } else {
        using std::abs;
        return abs(x);
    }
}

template <class S>
bool is_zero(const S& x) {
    return x == S(0);
}

/// Converts an integer to the scalar type without going through double.
template <class S>
S from_int(long long v) {
    return S(v);
}

inline Rational make_rational(long long num, long long den) {
    if (den == 0) throw InvalidParameter("zero denominator");
    return Rational(BigInt(num), BigInt(den));
}

/// "p" or "p/q" (optionally signed), as produced by to_string(Rational).
inline std::string to_string(const Rational& x) {
    const BigInt num = boost::multiprecision::numerator(x);
    const BigInt den = boost::multiprecision::denominator(x);
    if (den == 1) return num.str();
    return num.str() + "/" + den.str();
}

/// Shortest decimal form that round-trips is not required here: 17
/// significant digits always round-trip an IEEE double.
inline std::string to_string(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace detail {

inline bool is_integer_text(std::string_view s) {
    if (!s.empty() && (s.front() == '+' || s.front() == '-')) s.remove_prefix(1);
    if (s.empty()) return false;
    for (char c : s)
        if (c < '0' || c > '9') return false;
    return true;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline BigInt parse_bigint(std::string_view s) {
    bool neg = false;
    if (!s.empty() && (s.front() == '+' || s.front() == '-')) {
        neg = s.front() == '-';
        s.remove_prefix(1);
    }
    BigInt v{std::string(s)};
    return neg ? BigInt(-v) : v;
}

}  // namespace detail

/// True for exact literals: an integer "p" or a fraction "p/q".
inline bool is_exact_literal(std::string_view s) {
    s = detail::trim(s);
    const auto slash = s.find('/');
    if (slash == std::string_view::npos) return detail::is_integer_text(s);
    return detail::is_integer_text(s.substr(0, slash)) &&
           detail::is_integer_text(s.substr(slash + 1));
}

/// Parses "p", "p/q" exactly. Decimals are rejected; use parse_real for those.
inline Rational parse_rational(std::string_view s) {
    s = detail::trim(s);
    if (!is_exact_literal(s))
        throw InvalidParameter("not an exact fraction: '" + std::string(s) + "'");
    const auto slash = s.find('/');
    if (slash == std::string_view::npos) return Rational(detail::parse_bigint(s));
    const BigInt den = detail::parse_bigint(s.substr(slash + 1));
    if (den == 0) throw InvalidParameter("zero denominator in '" + std::string(s) + "'");
    return Rational(detail::parse_bigint(s.substr(0, slash)), den);
}

/// Parses a decimal or a fraction into a double.
inline double parse_real(std::string_view s) {
    s = detail::trim(s);
    if (is_exact_literal(s)) return to_double(parse_rational(s));
    double v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
        throw InvalidParameter("not a number: '" + std::string(s) + "'");
    return v;
}

/// A numeric literal that remembers whether it was written exactly.
struct Number {
    double value = 0;
    std::optional<Rational> exact;
    std::string text;

    static Number parse(std::string_view s) {
        Number n;
        n.text = std::string(detail::trim(s));
        if (is_exact_literal(n.text)) {
            n.exact = parse_rational(n.text);
            n.value = to_double(*n.exact);
        } else {
            n.value = parse_real(n.text);
        }
        return n;
    }
    static Number of(double v) { return Number{v, std::nullopt, to_string(v)}; }
    static Number of(const Rational& r) { return Number{to_double(r), r, to_string(r)}; }

    bool is_exact() const noexcept { return exact.has_value(); }
};

}  // namespace slespec
