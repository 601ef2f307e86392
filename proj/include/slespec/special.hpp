#pragma once

// Gauss hypergeometric function, the closed-form M=0 and M=1 moment
// functions, the deterministic kappa=0 map, and a finite-difference check of
// the moment PDE.

#include <cmath>
#include <complex>
#include <string>

#include "slespec/error.hpp"
#include "slespec/scalar.hpp"
#include "slespec/spectrum.hpp"

namespace slespec {

struct Hyp2F1Params {
    double a = 0;
    double b = 0;
    double c = 0;
    double x = 0;
};

namespace detail {

template <class S>
bool is_nonpositive_integer(const S& v) {
    if constexpr (is_rational_v<S>) {
        return boost::multiprecision::denominator(v) == 1 && v <= 0;
    } else {
        return v <= 0 && v == std::floor(v);
    }
}

template <class S>
long long as_count(const S& v) {
    if constexpr (is_rational_v<S>) {
        return -boost::multiprecision::numerator(v).template convert_to<long long>();
    } else {
        return static_cast<long long>(-v);
    }
}

inline double rgamma(double x) {
    if (x <= 0 && x == std::floor(x)) return 0;
    return 1 / std::tgamma(x);
}

// Number of terms of the terminating series, or -1 when it does not terminate.
template <class S>
long long terminating_terms(const S& a, const S& b) {
    long long n = -1;
    if (is_nonpositive_integer(a)) n = as_count(a);
    if (is_nonpositive_integer(b)) {
        const long long m = as_count(b);
        n = n < 0 ? m : std::min(n, m);
    }
    return n;
}

template <class S>
void check_c(const S& c, long long terms) {
    if (!is_nonpositive_integer(c)) return;
    // c = -m is harmless only if the series stops before (c)_k vanishes.
    if (terms < 0 || as_count(c) < terms)
        throw InvalidParameter("hypergeometric c parameter is a non-positive integer");
}

template <class T>
T gauss_series(double a, double b, double c, T x, long long max_terms) {
    T sum = 1;
    T term = 1;
    int small = 0;
    for (long long k = 0; k < max_terms; ++k) {
        term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * x;
        sum += term;
        if (std::abs(term) <= 1e-17 * std::abs(sum)) {
            if (++small >= 2) return sum;
        } else {
            small = 0;
        }
    }
    throw ConvergenceError("hypergeometric series did not converge");
}

}  // namespace detail

/// Terminating 2F1 (a or b a non-positive integer), summed exactly term by
/// term in the scalar type.
template <class S>
S hyp2f1_terminating(const S& a, const S& b, const S& c, const S& x) {
    const long long n = detail::terminating_terms(a, b);
    if (n < 0) throw InvalidParameter("hyp2f1_terminating needs a or b a non-positive integer");
    detail::check_c(c, n);
    S sum = S(1);
    S term = S(1);
    for (long long k = 0; k < n; ++k) {
        term = term * (a + S(k)) * (b + S(k)) / ((c + S(k)) * S(k + 1)) * x;
        sum += term;
    }
    return sum;
}

/// 2F1(a, b; c | x) for real x < 1: direct series up to 0.9, the 1-x
/// connection formula beyond. Terminating cases are summed directly for any x.
inline double hyp2f1(const Hyp2F1Params& p) {
    const long long n = detail::terminating_terms(p.a, p.b);
    detail::check_c(p.c, n);
    if (n >= 0) return hyp2f1_terminating(p.a, p.b, p.c, p.x);
    if (!(p.x < 1)) throw DomainError("non-terminating 2F1 needs x < 1");
    if (p.x <= -1) throw DomainError("2F1 series needs x > -1");
    if (p.x == 0) return 1;
    if (p.x <= 0.9) return detail::gauss_series(p.a, p.b, p.c, p.x, 100000);

    const double s = p.c - p.a - p.b;
    if (std::abs(s - std::round(s)) < 1e-6) {
        // Logarithmic case of the connection formula; the direct series still
        // converges for x < 1, only slowly.
        return detail::gauss_series(p.a, p.b, p.c, p.x, 20000000);
    }
    const double y = 1 - p.x;
    const double g1 = std::tgamma(p.c) * std::tgamma(s) * detail::rgamma(p.c - p.a) *
                      detail::rgamma(p.c - p.b);
    const double g2 = std::tgamma(p.c) * std::tgamma(-s) * detail::rgamma(p.a) *
                      detail::rgamma(p.b);
    const double f1 = g1 == 0 ? 0 : g1 * detail::gauss_series(p.a, p.b, 1 - s, y, 100000);
    const double f2 = g2 == 0 ? 0 : g2 * std::pow(y, s) *
                                        detail::gauss_series(p.c - p.a, p.c - p.b, 1 + s, y, 100000);
    return f1 + f2;
}

/// Complex argument: real arguments in [0, 1) go through the real routine,
/// otherwise the Gauss series inside the unit disk.
inline std::complex<double> hyp2f1(double a, double b, double c, std::complex<double> z) {
    if (z.imag() == 0 && z.real() < 1 && z.real() > -1) return hyp2f1(Hyp2F1Params{a, b, c, z.real()});
    const long long n = detail::terminating_terms(a, b);
    detail::check_c(c, n);
    if (n >= 0) {
        std::complex<double> sum = 1, term = 1;
        for (long long k = 0; k < n; ++k) {
            term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * z;
            sum += term;
        }
        return sum;
    }
    if (!(std::abs(z) < 1)) throw DomainError("complex 2F1 series needs |z| < 1");
    return detail::gauss_series(a, b, c, z, 1000000);
}

/// Moment function on the M=0 curve, q = (2+kappa)(6+kappa)/(8 kappa).
inline std::complex<double> rho_M0(std::complex<double> w, std::complex<double> wb, double kappa) {
    if (!(kappa > 0)) throw InvalidParameter("rho_M0 needs kappa > 0");
    if (!(std::abs(w * wb) < 1)) throw DomainError("rho_M0 needs |w wb| < 1");
    const double e1 = (6 + kappa) / (2 * kappa);
    const double e2 = (6 + kappa) * (6 + kappa) / (8 * kappa);
    return std::pow((1.0 - w) * (1.0 - wb), e1) / std::pow(1.0 - w * wb, e2);
}

/// (q, kappa) of the M=1 closed-form family at curve parameter gamma.
inline SLEParams m1_parameters(double gamma) {
    const double d = 2 * gamma * gamma + gamma + 1;
    return {gamma * (gamma + 1) * (gamma + 3) / d, 2 * (3 * gamma + 1) / d};
}

/// Moment function on the M=1 curve, normalized to rho(0, 0) = 1.
inline std::complex<double> rho_M1(std::complex<double> w, std::complex<double> wb, double gamma) {
    if (!(gamma >= -1.0 / 3)) throw InvalidParameter("rho_M1 needs gamma >= -1/3");
    const std::complex<double> x = w * wb;
    if (!(std::abs(x) < 1)) throw DomainError("rho_M1 diverges at |w wb| >= 1");
    const double g = gamma;
    const double d = 2 * g * g + g + 1;
    const auto phi1 = hyp2f1((g + 1) * (1 - 3 * g) / d, (1 - g - 4 * g * g) / d,
                             (g + 1) * (g + 1) / d, x);
    const auto phi2 = hyp2f1((1 - g) * (2 + g) / d, 2 * (1 - g * g) / d,
                             (3 * g * g + 3 * g + 2) / d, x);
    const double e = -(g + 1) * (3 * g * g + 6 * g - 1) / d;
    const auto mean = (w + wb) / 2.0;
    const auto pref = (g == 0 ? std::complex<double>(1) : std::pow((1.0 - w) * (1.0 - wb), g)) *
                      std::pow(1.0 - x, e);
    return pref * ((1.0 - mean) * phi1 + (1 - 3 * g) / (1 + g) * (1.0 - x) * mean * phi2);
}

/// e^t w / (1+w)^2, the kappa = 0 whole-plane map.
inline std::complex<double> deterministic_map(std::complex<double> w, double t) {
    if (std::abs(1.0 + w) == 0) throw DomainError("deterministic map has a pole at w = -1");
    return std::exp(t) * w / ((1.0 + w) * (1.0 + w));
}

inline std::complex<double> deterministic_map_derivative(std::complex<double> w, double t) {
    const auto s = 1.0 + w;
    if (std::abs(s) == 0) throw DomainError("deterministic map derivative has a pole at w = -1");
    return std::exp(t) * (1.0 - w) / (s * s * s);
}

inline constexpr double kDefaultFdStep = 1e-3;

/// |L[rho] + q rho| / max(1, |rho|) for the interior moment operator, with
/// 4th-order central differences of step h in each argument separately.
template <class Rho>
double pde_residual(Rho&& rho, double q, double kappa, std::complex<double> w,
                    std::complex<double> wb, double h = kDefaultFdStep) {
    if (!(h > 0)) throw InvalidParameter("finite-difference step must be positive");
    if (std::abs(w) + 2 * h >= 1 || std::abs(wb) + 2 * h >= 1)
        throw DomainError("finite-difference stencil leaves the unit bidisk");
    auto f = [&](int a, int b) -> std::complex<double> {
        return rho(w + static_cast<double>(a) * h, wb + static_cast<double>(b) * h);
    };
    // First-derivative weights at offsets -2..2 (times 1/(12h)).
    constexpr double d1[5] = {1, -8, 0, 8, -1};
    constexpr double d2[5] = {-1, 16, -30, 16, -1};

    const std::complex<double> r0 = f(0, 0);
    std::complex<double> fw = 0, fb = 0, fww = 0, fbb = 0, fwb = 0;
    for (int a = -2; a <= 2; ++a) {
        if (a == 0) {
            fww += d2[2] * r0;
            fbb += d2[2] * r0;
            continue;
        }
        const auto along_w = f(a, 0);
        const auto along_b = f(0, a);
        fw += d1[a + 2] * along_w;
        fb += d1[a + 2] * along_b;
        fww += d2[a + 2] * along_w;
        fbb += d2[a + 2] * along_b;
    }
    for (int a = -2; a <= 2; ++a)
        for (int b = -2; b <= 2; ++b)
            if (a != 0 && b != 0) fwb += d1[a + 2] * d1[b + 2] * f(a, b);
    fw /= 12 * h;
    fb /= 12 * h;
    fww /= 12 * h * h;
    fbb /= 12 * h * h;
    fwb /= 144 * h * h;

    // (w d_w - wb d_wb)^2 rho
    const auto rot2 = w * fw + w * w * fww - 2.0 * w * wb * fwb + wb * fb + wb * wb * fbb;
    const auto L = -kappa / 2 * rot2 + (w + 1.0) / (w - 1.0) * w * fw +
                   (wb + 1.0) / (wb - 1.0) * wb * fb - q / ((w - 1.0) * (w - 1.0)) * r0 -
                   q / ((wb - 1.0) * (wb - 1.0)) * r0 + q * r0;
    return std::abs(L + q * r0) / std::max(1.0, std::abs(r0));
}

}  // namespace slespec
