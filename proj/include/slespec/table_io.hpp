#pragma once

// Plain-text table export:
//   theta-table v1 gamma=<g> kappa=<k> N=<n> backend=<rational|float>
//   i j value
// Rational values are written as p/q, floats with 17 significant digits.

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "slespec/coeffs.hpp"
#include "slespec/error.hpp"
#include "slespec/scalar.hpp"

namespace slespec {

struct TableHeader {
    std::string gamma;
    std::string kappa;
    int N = 0;
    Backend backend = Backend::Float;
};

template <class S>
void write_table(std::ostream& os, const CoeffTable<S>& t) {
    os << "theta-table v1 gamma=" << to_string(t.gamma()) << " kappa=" << to_string(t.kappa())
       << " N=" << t.order() << " backend=" << (is_rational_v<S> ? "rational" : "float") << '\n';
    for (int i = 1; i <= t.order(); ++i)
        for (int j = 1; j <= t.order(); ++j) os << i << ' ' << j << ' ' << to_string(t(i, j)) << '\n';
}

inline TableHeader read_table_header(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw Error("empty table stream");
    std::istringstream ls(line);
    std::string magic, version;
    ls >> magic >> version;
    if (magic != "theta-table" || version != "v1") throw Error("not a theta-table v1 header: " + line);
    TableHeader h;
    bool seen[4] = {};
    std::string field;
    while (ls >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) throw Error("malformed header field '" + field + "'");
        const auto key = field.substr(0, eq);
        const auto value = field.substr(eq + 1);
        if (key == "gamma") {
            h.gamma = value, seen[0] = true;
        } else if (key == "kappa") {
            h.kappa = value, seen[1] = true;
        } else if (key == "N") {
            h.N = std::stoi(value), seen[2] = true;
        } else if (key == "backend") {
            if (value == "rational") h.backend = Backend::Rational;
            else if (value == "float") h.backend = Backend::Float;
            else throw Error("unknown backend '" + value + "'");
            seen[3] = true;
        } else {
            throw Error("unknown header field '" + key + "'");
        }
    }
    for (bool s : seen)
        if (!s) throw Error("incomplete theta-table header: " + line);
    if (h.N < 1) throw Error("table order must be >= 1");
    return h;
}

namespace detail {
template <class S>
S parse_scalar(const std::string& s) {
    if constexpr (is_rational_v<S>) {
        return parse_rational(s);
    } else {
        return parse_real(s);
    }
}
}  // namespace detail

template <class S>
CoeffTable<S> read_table(std::istream& is) {
    const auto h = read_table_header(is);
    if ((h.backend == Backend::Rational) != is_rational_v<S>)
        throw Error("table backend does not match the requested scalar type");
    CoeffTable<S> t(detail::parse_scalar<S>(h.gamma), detail::parse_scalar<S>(h.kappa), h.N);
    const long long expected = static_cast<long long>(h.N) * h.N;
    long long rows = 0;
    int i = 0, j = 0;
    std::string value;
    while (is >> i >> j >> value) {
        if (i < 1 || j < 1 || i > h.N || j > h.N)
            throw Error("table row index out of range: " + std::to_string(i) + " " + std::to_string(j));
        t.mutable_at(i, j) = detail::parse_scalar<S>(value);
        ++rows;
    }
    if (!is.eof()) throw Error("malformed table row");
    if (rows != expected) throw Error("table has " + std::to_string(rows) + " rows, expected " +
                                      std::to_string(expected));
    return t;
}

}  // namespace slespec
