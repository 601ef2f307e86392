#pragma once

// Closed-form scalar formulas for the interior whole-plane SLE integral-means
// spectrum: gamma roots of the moment quadratic, the two transition loci, the
// (2M+1)-band curve families and their boundary-exponent eigenvalues.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "slespec/error.hpp"
#include "slespec/scalar.hpp"

namespace slespec {

/// A point (q, kappa) of the parameter half-plane kappa >= 0.
template <class S = double>
struct BasicSLEParams {
    S q{};
    S kappa{};
};
using SLEParams = BasicSLEParams<double>;

/// Roots of kappa*g^2/2 - (2 + kappa/2)*g + q = 0. At kappa = 0 the quadratic
/// degenerates to a linear equation and gamma_plus is absent.
struct GammaRoots {
    double gamma_minus = 0;
    std::optional<double> gamma_plus;
    double discriminant = 0;
};

/// A point (M, gamma) parametrizing the M-th band-truncation curve.
template <class S = double>
struct CurveParams {
    int M = 0;
    S gamma{};
};

enum class Branch { Tip, Bulk, Derivative };

inline std::string_view to_string(Branch b) {
    switch (b) {
        case Branch::Tip: return "tip";
        case Branch::Bulk: return "bulk";
        case Branch::Derivative: return "derivative";
    }
    return "?";
}

struct SpectrumValue {
    double beta = 0;
    Branch branch = Branch::Bulk;
    double beta_tilde = 0;
    /// Absent on the Derivative branch when the quadratic has no real root.
    std::optional<double> gamma_minus;
};

inline constexpr double kTransitionRelTol = 1e-12;

inline void require_kappa(double kappa) {
    if (!(kappa >= 0)) throw InvalidParameter("kappa must be >= 0, got " + to_string(kappa));
}

inline GammaRoots gamma_roots(const SLEParams& p) {
    require_kappa(p.kappa);
    GammaRoots r;
    const double k4 = p.kappa + 4;
    r.discriminant = k4 * k4 - 8 * p.q * p.kappa;
    if (p.kappa == 0) {
        r.gamma_minus = p.q / 2;
        return r;
    }
    if (r.discriminant < 0)
        throw NoRealGamma("no real gamma for q=" + to_string(p.q) + ", kappa=" +
                          to_string(p.kappa) + " (q > (kappa+4)^2/(8 kappa))");
    const double s = std::sqrt(r.discriminant);
    // Rationalized minus root; no cancellation as kappa -> 0.
    r.gamma_minus = 4 * p.q / (k4 + s);
    r.gamma_plus = (k4 + s) / (2 * p.kappa);
    return r;
}

template <class S>
S q_of_gamma(const S& gamma, const S& kappa) {
    return 2 * gamma + kappa * gamma / 2 - kappa * gamma * gamma / 2;
}

/// Q(kappa), the location of the bulk/derivative transition.
inline double q_transition(double kappa) {
    require_kappa(kappa);
    // Numerator of the textbook form rationalized: it has the factor kappa.
    const double a = kappa * kappa + 8 * kappa + 12;
    const double s = std::sqrt(2 * kappa * kappa + 16 * kappa + 36);
    const double num = kappa * kappa * kappa + 16 * kappa * kappa + 80 * kappa + 128;
    return num / (16 * (a + 2 * s));
}

inline double q_tip(double kappa) {
    require_kappa(kappa);
    return -1 - 3 * kappa / 8;
}

namespace detail {
inline bool at_or_below(double q, double edge) {
    return q <= edge + kTransitionRelTol * std::max(1.0, std::abs(edge));
}
inline bool at_or_above(double q, double edge) {
    return q >= edge - kTransitionRelTol * std::max(1.0, std::abs(edge));
}
}  // namespace detail

inline SpectrumValue beta_spectrum(const SLEParams& p) {
    require_kappa(p.kappa);
    SpectrumValue v;
    if (detail::at_or_above(p.q, q_transition(p.kappa))) {
        v.branch = Branch::Derivative;
        v.beta = 3 * p.q - 0.5 - 0.5 * std::sqrt(1 + 2 * p.q * p.kappa);
        v.beta_tilde = v.beta;
        const double k4 = p.kappa + 4;
        if (p.kappa == 0 || k4 * k4 - 8 * p.q * p.kappa >= 0)
            v.gamma_minus = gamma_roots(p).gamma_minus;
        return v;
    }
    const double g = gamma_roots(p).gamma_minus;
    v.gamma_minus = g;
    v.beta_tilde = p.kappa * g * g / 2;
    if (detail::at_or_below(p.q, q_tip(p.kappa))) {
        v.branch = Branch::Tip;
        v.beta = v.beta_tilde - 2 * g - 1;
    } else {
        v.branch = Branch::Bulk;
        v.beta = v.beta_tilde;
    }
    return v;
}

/// M^2 + 2 M gamma + 2 gamma^2 - gamma; positive on valid curve points.
template <class S>
S curve_denominator(const CurveParams<S>& c) {
    const S M = from_int<S>(c.M);
    return M * M + 2 * M * c.gamma + 2 * c.gamma * c.gamma - c.gamma;
}

template <class S>
void validate_curve(const CurveParams<S>& c) {
    if (c.M < 0) throw InvalidParameter("band half-width M must be >= 0");
    const S M = from_int<S>(c.M);
    if (3 * c.gamma < -M)
        throw InvalidParameter("curve parameter gamma must be >= -M/3");
    if (!(curve_denominator(c) > 0))
        throw InvalidParameter("curve denominator M^2+2M*gamma+2gamma^2-gamma is not positive");
}

/// (q, kappa) on the M-th truncation curve.
template <class S>
BasicSLEParams<S> curve_point(const CurveParams<S>& c) {
    validate_curve(c);
    const S M = from_int<S>(c.M);
    const S den = curve_denominator(c);
    BasicSLEParams<S> p;
    p.kappa = 2 * (M + 3 * c.gamma) / den;
    p.q = c.gamma * (M + c.gamma) * (2 * M + 1 + c.gamma) / den;
    if (p.kappa < 0) throw InvalidParameter("curve point has negative kappa");
    return p;
}

template <class S>
bool is_valid_curve(const CurveParams<S>& c) {
    try {
        curve_point(c);
        return true;
    } catch (const InvalidParameter&) {
        return false;
    }
}

/// gamma_M, where beta_0 and beta_{2M} cross on the M-th curve.
inline double gamma_transition(int M) {
    if (M < 0) throw InvalidParameter("M must be >= 0");
    const double m = M;
    return (std::sqrt(36 * m * m + 20 * m + 1) - 6 * m + 1) / 16;
}

/// beta_l, l = 0..2M: the eigenvalues of the boundary three-term problem.
template <class S>
S eigen_beta_closed(const CurveParams<S>& c, int l) {
    validate_curve(c);
    if (l < 0 || l > 2 * c.M)
        throw InvalidParameter("eigenvalue index l=" + std::to_string(l) + " outside [0, 2M]");
    const S M = from_int<S>(c.M);
    const S L = from_int<S>(l);
    const S& g = c.gamma;
    const S num = 2 * (M + 3 * g) * g * g - (2 * M * M + M - 8 * g * g + g) * L +
                  (M + 3 * g) * L * L;
    return num / (2 * curve_denominator(c));
}

/// The boundary exponent selected on the curve: beta_0 up to gamma_M, then
/// beta_{2M}.
inline double beta_tilde_on_curve(const CurveParams<double>& c) {
    validate_curve(c);
    return c.gamma <= gamma_transition(c.M) ? eigen_beta_closed(c, 0)
                                            : eigen_beta_closed(c, 2 * c.M);
}

/// Integrability shift from the boundary exponent to the spectrum value.
inline double beta_from_tilde(double beta_tilde, double gamma) {
    return gamma <= -0.5 ? beta_tilde - 2 * gamma - 1 : beta_tilde;
}

}  // namespace slespec
