#pragma once

// Batch drivers behind the command-line tool. Each run_* returns plain data;
// formatting lives in the executable.

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "slespec/coeffs.hpp"
#include "slespec/eigen.hpp"
#include "slespec/error.hpp"
#include "slespec/mc.hpp"
#include "slespec/parallel.hpp"
#include "slespec/scalar.hpp"
#include "slespec/special.hpp"
#include "slespec/spectrum.hpp"

namespace slespec {

inline constexpr int kSchemaVersion = 1;

/// Raised for malformed command-line values (exit code 1).
class UsageError : public Error {
public:
    using Error::Error;
};

/// Grid syntax: a comma list "a,b,c" or an inclusive range "lo:hi:n" with n
/// evenly spaced points. Exact endpoints give exact grid points.
inline std::vector<Number> parse_grid(std::string_view text) {
    std::vector<Number> out;
    try {
        if (text.find(':') != std::string_view::npos) {
            std::vector<std::string_view> parts;
            std::size_t start = 0;
            for (;;) {
                const auto pos = text.find(':', start);
                parts.push_back(text.substr(start, pos - start));
                if (pos == std::string_view::npos) break;
                start = pos + 1;
            }
            if (parts.size() != 3) throw UsageError("range grid must be lo:hi:n");
            const Number lo = Number::parse(parts[0]);
            const Number hi = Number::parse(parts[1]);
            if (!detail::is_integer_text(detail::trim(parts[2])))
                throw UsageError("grid point count must be an integer");
            const int n = std::stoi(std::string(detail::trim(parts[2])));
            if (n < 1) throw UsageError("grid point count must be >= 1");
            if (n == 1 && lo.value != hi.value) throw UsageError("a 1-point range needs lo == hi");
            for (int k = 0; k < n; ++k) {
                if (lo.is_exact() && hi.is_exact()) {
                    const Rational v = n == 1 ? *lo.exact
                                              : *lo.exact + (*hi.exact - *lo.exact) * Rational(k) /
                                                                Rational(n - 1);
                    out.push_back(Number::of(v));
                } else {
                    const double v = n == 1 ? lo.value : lo.value + (hi.value - lo.value) * k / (n - 1);
                    out.push_back(Number::of(v));
                }
            }
        } else {
            std::size_t start = 0;
            for (;;) {
                const auto pos = text.find(',', start);
                out.push_back(Number::parse(text.substr(start, pos - start)));
                if (pos == std::string_view::npos) break;
                start = pos + 1;
            }
        }
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception& e) {
        throw UsageError("malformed grid '" + std::string(text) + "': " + e.what());
    }
    return out;
}

// ---------------------------------------------------------------- spectrum

struct SpectrumRow {
    Number q;
    Number kappa;
    SpectrumValue value;
};

/// Rows in grid order: q outer, kappa inner.
inline std::vector<SpectrumRow> run_spectrum(const std::vector<Number>& qs,
                                             const std::vector<Number>& kappas, unsigned threads = 1) {
    for (const auto& k : kappas)
        if (!(k.value >= 0)) throw InvalidParameter("kappa grid must be >= 0, got " + k.text);
    std::vector<SpectrumRow> rows(qs.size() * kappas.size());
    parallel_for(rows.size(), threads, [&](std::size_t idx) {
        const auto& q = qs[idx / kappas.size()];
        const auto& k = kappas[idx % kappas.size()];
        rows[idx] = {q, k, beta_spectrum({q.value, k.value})};
    });
    return rows;
}

// ------------------------------------------------------------------ curves

struct CurveRow {
    int M = 0;
    Number gamma;
    Number q;
    Number kappa;
    Number beta_tilde;
    Number beta;
};

struct LocusRow {
    double kappa = 0;
    double q = 0;
};

struct CurvesReport {
    std::vector<CurveRow> rows;
    std::vector<LocusRow> locus;
    int skipped = 0;
};

namespace detail {

template <class S>
std::optional<CurveRow> curve_row(int M, const S& gamma) {
    const CurveParams<S> c{M, gamma};
    if (!is_valid_curve(c)) return std::nullopt;
    const auto p = curve_point(c);
    const S b0 = eigen_beta_closed(c, 0);
    const S b2m = eigen_beta_closed(c, 2 * M);
    const S bt = b2m > b0 ? b2m : b0;
    const S b = 2 * gamma <= S(-1) ? S(bt - 2 * gamma - 1) : bt;
    return CurveRow{M, Number::of(gamma), Number::of(p.q), Number::of(p.kappa), Number::of(bt),
                    Number::of(b)};
}

}  // namespace detail

/// Valid curve points for M = 0..M_max over the gamma grid, plus the
/// transition locus q = Q(kappa) sampled on locus_kappas.
inline CurvesReport run_curves(int M_max, const std::vector<Number>& gammas,
                               const std::vector<double>& locus_kappas, unsigned threads = 1) {
    if (M_max < 0) throw InvalidParameter("M_max must be >= 0");
    const std::size_t per = gammas.size();
    std::vector<std::optional<CurveRow>> slots(per * (M_max + 1));
    parallel_for(slots.size(), threads, [&](std::size_t idx) {
        const int M = static_cast<int>(idx / per);
        const auto& g = gammas[idx % per];
        slots[idx] = g.is_exact() ? detail::curve_row(M, *g.exact) : detail::curve_row(M, g.value);
    });
    CurvesReport r;
    for (auto& s : slots) {
        if (s) r.rows.push_back(std::move(*s));
        else ++r.skipped;
    }
    for (double k : locus_kappas) r.locus.push_back({k, q_transition(k)});
    return r;
}

// -------------------------------------------------------------- truncation

struct TruncationReport {
    int M = 0;
    Rational gamma;
    Rational q;
    Rational kappa;
    bool kappa_overridden = false;
    int N = 0;
    std::optional<int> width;  ///< max |i-j| with a nonzero entry; none = full table
    bool band_ok = false;
    Rational A_minus_M;
    bool pass = false;
    CoeffTable<Rational> table{Rational(0), Rational(0), 1};
};

/// Exact band certificate on the M-th curve. A kappa override turns the run
/// into a negative control: q is then recomputed from (gamma, kappa).
inline TruncationReport run_truncation_certificate(int M, const Rational& gamma, int N,
                                                   const std::optional<Rational>& kappa = {}) {
    if (N < 2) throw InvalidParameter("certificate order N must be >= 2");
    const CurveParams<Rational> c{M, gamma};
    const auto p = curve_point(c);
    TruncationReport r;
    r.M = M;
    r.gamma = gamma;
    r.N = N;
    r.kappa = kappa ? *kappa : p.kappa;
    r.kappa_overridden = kappa.has_value() && *kappa != p.kappa;
    if (r.kappa < 0) throw InvalidParameter("kappa must be >= 0");
    r.q = r.kappa_overridden ? q_of_gamma(gamma, r.kappa) : p.q;
    r.table = build_theta_table<Rational>(gamma, r.kappa, N);
    r.width = truncation_width(r.table);
    r.band_ok = r.width.has_value() && *r.width <= M;
    r.A_minus_M = coeff_A(-M, gamma, r.kappa);
    r.pass = r.band_ok && is_zero(r.A_minus_M);
    return r;
}

// ----------------------------------------------------------------- betafit

struct BetaFitConfig {
    double q = 0;
    double kappa = 0;
    int N = 400;
    int k_min = 3;
    int k_max = 7;
    int n_phi = 8192;
    double tail_tol = kTailTolerance;
    bool plus_root = false;
    unsigned threads = 1;
};

struct BetaFitSample {
    int k = 0;
    double r = 0;
    double integral = 0;
    double tail = 0;
    double remainder = 0;  ///< remainder_estimate at r
};

struct BetaFitReport {
    BetaFitConfig config;
    double gamma = 0;
    FitResult fit;
    SpectrumValue closed;
    double relative_deviation = 0;
    std::vector<BetaFitSample> samples;
    double slope_error_estimate = 0;  ///< slope shift from the remainder estimates
    double max_admissible_r = 0;
};

inline double fit_radius(int k) { return 1 - std::ldexp(1.0, -k); }

/// Integral means at r = 1 - 2^-k, k = k_min..k_max, and their log-log slope.
/// Throws TailCheckFailed when the order-N table is not converged at some r.
inline BetaFitReport run_beta_fit(const BetaFitConfig& cfg) {
    if (cfg.k_min < 1 || cfg.k_max - cfg.k_min < 3)
        throw InvalidParameter("betafit needs k_min >= 1 and at least 4 radii");
    if (cfg.N < 16) throw InvalidParameter("betafit order N must be >= 16");
    BetaFitReport rep;
    rep.config = cfg;
    const auto roots = gamma_roots({cfg.q, cfg.kappa});
    if (cfg.plus_root && !roots.gamma_plus) throw InvalidParameter("gamma_plus does not exist at kappa = 0");
    rep.gamma = cfg.plus_root ? *roots.gamma_plus : roots.gamma_minus;
    rep.closed = beta_spectrum({cfg.q, cfg.kappa});
    const auto table = build_theta_table<double, long double>(rep.gamma, cfg.kappa, cfg.N);
    rep.max_admissible_r = max_admissible_radius(table, cfg.tail_tol);

    const int n = cfg.k_max - cfg.k_min + 1;
    rep.samples.resize(n);
    parallel_for(n, cfg.threads, [&](std::size_t idx) {
        const int k = cfg.k_min + static_cast<int>(idx);
        const double r = fit_radius(k);
        rep.samples[idx] = {k, r, integral_means(table, r, cfg.n_phi, cfg.tail_tol), radial_tail(table, r),
                            remainder_estimate(table, r)};
    });
    std::vector<std::pair<double, double>> pts;
    std::vector<double> radii, remainders;
    for (const auto& s : rep.samples) {
        pts.emplace_back(s.r, s.integral);
        radii.push_back(s.r);
        remainders.push_back(s.remainder);
    }
    rep.fit = fit_beta(pts);
    rep.slope_error_estimate = slope_error_bound(radii, remainders);
    const double b = rep.closed.beta;
    rep.relative_deviation = b == 0 ? std::abs(rep.fit.slope) : std::abs(rep.fit.slope - b) / std::abs(b);
    return rep;
}

// ---------------------------------------------------------------------- mc

struct MCValidateReport {
    MCConfig config;
    MCEstimate estimate;
    std::optional<double> oracle;
    std::string oracle_method;
    std::optional<double> z_score;
    bool pass = true;
};

inline constexpr double kZThreshold = 3;
inline constexpr double kDeterministicTol = 1e-6;

/// Reference value of rho(w, conj w): the kappa = 0 closed form, or the
/// series at order N built on gamma_minus.
inline std::pair<std::optional<double>, std::string> mc_oracle(const MCConfig& c, int order) {
    if (c.q == 0) return {1.0, "trivial"};
    if (c.kappa == 0) {
        const double d = std::abs(deterministic_map_derivative(c.w, 0.0));
        return {std::pow(d, c.q), "deterministic"};
    }
    const double disc = (c.kappa + 4) * (c.kappa + 4) - 8 * c.q * c.kappa;
    if (disc < 0) return {std::nullopt, "unavailable"};
    const double g = gamma_roots({c.q, c.kappa}).gamma_minus;
    const auto table = build_theta_table<double, long double>(g, c.kappa, order);
    return {eval_rho(table, c.w, std::conj(c.w)).value.real(), "series"};
}

inline MCValidateReport run_mc_validate(const MCConfig& c, int oracle_order = 200,
                                        std::ostream* dump = nullptr) {
    MCValidateReport rep;
    rep.config = c;
    rep.estimate = moment_estimate(c, dump);
    std::tie(rep.oracle, rep.oracle_method) = mc_oracle(c, oracle_order);
    if (!rep.oracle) return rep;
    const double diff = rep.estimate.mean - *rep.oracle;
    if (rep.estimate.std_error > 0) {
        rep.z_score = diff / rep.estimate.std_error;
        rep.pass = std::abs(*rep.z_score) <= kZThreshold;
    } else {
        rep.z_score = 0;
        rep.pass = std::abs(diff) <= kDeterministicTol * std::max(1.0, std::abs(*rep.oracle));
        if (!rep.pass) rep.z_score = std::copysign(INFINITY, diff);
    }
    return rep;
}

}  // namespace slespec
