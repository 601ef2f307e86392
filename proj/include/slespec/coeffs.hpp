#pragma once

// Taylor coefficients theta_{i,j} of the regularized moment function
//   Theta(w, wb) = sum_{i,j>=1} theta_{i,j} w^{i-1} wb^{j-1},
//   rho(w, wb)   = ((1-w)(1-wb))^gamma Theta(w, wb),
// generated by the four-term two-dimensional recurrence, together with series
// evaluation, Fourier components f_n(xi), integral means and exponent fits.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "slespec/eigen.hpp"
#include "slespec/error.hpp"
#include "slespec/scalar.hpp"

namespace slespec {

/// C^{l,k}_{i,j}: weight of theta_{i-l, j-k} in the relation centred at (i, j).
template <class S>
S recurrence_coeff(int i, int j, int l, int k, const S& gamma, const S& kappa) {
    if ((l != 0 && l != 1) || (k != 0 && k != 1))
        throw InvalidParameter("recurrence offsets l, k must be 0 or 1");
    if (l == 1 && k == 0) return recurrence_coeff(j, i, 0, 1, gamma, kappa);
    const S d = from_int<S>(i - j);
    if (l == 0 && k == 0) return -kappa * d * d / 2 - from_int<S>(i + j - 2);
    if (l == 1 && k == 1)
        return -kappa * d * d / 2 + from_int<S>(i + j - 4) - kappa * gamma * gamma +
               kappa * gamma + 6 * gamma;
    // (l, k) = (0, 1)
    const S e = d + 1;
    return kappa * e * e / 2 + (1 - kappa * gamma) * e + kappa * gamma * gamma -
           kappa * gamma / 2 - 3 * gamma;
}

/// Above this order rational tables get expensive; callers default to Float.
inline constexpr int kRationalOrderLimit = 60;

inline Backend default_backend(int N) {
    return N > kRationalOrderLimit ? Backend::Float : Backend::Rational;
}

/// Immutable N x N triangle-of-coefficients table (stored square, 1-based).
template <class S>
class CoeffTable {
public:
    CoeffTable(S gamma, S kappa, int N)
        : gamma_(std::move(gamma)), kappa_(std::move(kappa)), n_(N),
          entries_(static_cast<std::size_t>(N) * N, S(0)) {}

    int order() const noexcept { return n_; }
    const S& gamma() const noexcept { return gamma_; }
    const S& kappa() const noexcept { return kappa_; }

    const S& operator()(int i, int j) const { return entries_[index(i, j)]; }

    /// theta_{i,j}, with indices outside [1, N]^2 reading as zero.
    S get(int i, int j) const {
        if (i < 1 || j < 1 || i > n_ || j > n_) return S(0);
        return (*this)(i, j);
    }

    S& mutable_at(int i, int j) { return entries_[index(i, j)]; }

private:
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(i - 1) * n_ + static_cast<std::size_t>(j - 1);
    }

    S gamma_;
    S kappa_;
    int n_;
    std::vector<S> entries_;
};

/// Solves the recurrence row by row. `Guard` is the accumulation type for the
/// three-term update (e.g. long double for a double table).
template <class S, class Guard = S>
CoeffTable<S> build_theta_table(const S& gamma, const S& kappa, int N) {
    if (N < 1) throw InvalidParameter("table order N must be >= 1");
    if (kappa < 0) throw InvalidParameter("kappa must be >= 0");
    CoeffTable<S> t(gamma, kappa, N);
    t.mutable_at(1, 1) = S(1);
    const Guard g = static_cast<Guard>(gamma);
    const Guard k = static_cast<Guard>(kappa);
    for (int i = 1; i <= N; ++i) {
        for (int j = 1; j <= N; ++j) {
            if (i == 1 && j == 1) continue;
            const Guard c00 = recurrence_coeff<Guard>(i, j, 0, 0, g, k);
            if (is_zero(c00))
                throw InvalidParameter("vanishing diagonal recurrence coefficient at (" +
                                       std::to_string(i) + ", " + std::to_string(j) + ")");
            Guard acc = Guard(0);
            if (j > 1) acc += recurrence_coeff<Guard>(i, j, 0, 1, g, k) * Guard(t(i, j - 1));
            if (i > 1) acc += recurrence_coeff<Guard>(i, j, 1, 0, g, k) * Guard(t(i - 1, j));
            if (i > 1 && j > 1)
                acc += recurrence_coeff<Guard>(i, j, 1, 1, g, k) * Guard(t(i - 1, j - 1));
            S value = static_cast<S>(-acc / c00);
            if constexpr (!is_rational_v<S>) {
                if (!std::isfinite(to_double(value))) throw TableOverflow(i, j);
            }
            t.mutable_at(i, j) = std::move(value);
        }
    }
    return t;
}

/// Sum_{l,k} C^{l,k}_{i,j} theta_{i-l,j-k}; zero for every (i,j) != (1,1).
template <class S>
S recurrence_residual(const CoeffTable<S>& t, int i, int j) {
    const S& g = t.gamma();
    const S& k = t.kappa();
    return recurrence_coeff(i, j, 0, 0, g, k) * t.get(i, j) +
           recurrence_coeff(i, j, 0, 1, g, k) * t.get(i, j - 1) +
           recurrence_coeff(i, j, 1, 0, g, k) * t.get(i - 1, j) +
           recurrence_coeff(i, j, 1, 1, g, k) * t.get(i - 1, j - 1);
}

/// Smallest M with |theta_{i,j}| <= tol whenever |i-j| > M; nullopt when no
/// off-diagonal vanishes within the table.
template <class S>
std::optional<int> truncation_width(const CoeffTable<S>& t, double tol = 0) {
    const int N = t.order();
    int width = 0;
    for (int i = 1; i <= N; ++i)
        for (int j = 1; j <= N; ++j) {
            const bool nonzero = tol == 0 ? !is_zero(t(i, j))
                                          : std::abs(to_double(t(i, j))) > tol;
            if (nonzero) width = std::max(width, std::abs(i - j));
        }
    if (N > 1 && width >= N - 1) return std::nullopt;
    return width;
}

struct SeriesValue {
    std::complex<double> value;
    double tail = 0;  ///< relative size of the last two shells
    bool warning = false;
};

inline constexpr double kTailTolerance = 1e-6;

/// Partial sum of Theta over the N x N table. The tail is the absolute
/// contribution of the shells max(i,j) in {N-1, N} relative to the absolute sum.
template <class S>
SeriesValue eval_theta(const CoeffTable<S>& t, std::complex<double> w, std::complex<double> wb) {
    if (std::abs(w) >= 1 || std::abs(wb) >= 1)
        throw DomainError("series evaluation needs |w|, |wb| < 1");
    const int N = t.order();
    std::complex<double> total = 0;
    double abs_total = 0;
    double abs_tail = 0;
    std::vector<double> wb_pow(N), w_pow(N);
    w_pow[0] = wb_pow[0] = 1;
    for (int k = 1; k < N; ++k) {
        w_pow[k] = w_pow[k - 1] * std::abs(w);
        wb_pow[k] = wb_pow[k - 1] * std::abs(wb);
    }
    for (int i = N; i >= 1; --i) {
        std::complex<double> row = 0;
        for (int j = N; j >= 1; --j) {
            const double th = to_double(t(i, j));
            row = row * wb + th;
            const double mag = std::abs(th) * w_pow[i - 1] * wb_pow[j - 1];
            abs_total += mag;
            if (std::max(i, j) >= N - 1) abs_tail += mag;
        }
        total = total * w + row;
    }
    SeriesValue out;
    out.value = total;
    out.tail = abs_total > 0 ? abs_tail / abs_total : 0;
    out.warning = out.tail > kTailTolerance;
    return out;
}

/// ((1-w)(1-wb))^gamma on the principal branch; for |w|, |wb| < 1 this equals
/// the product of the principal powers.
inline std::complex<double> rho_prefactor(std::complex<double> w, std::complex<double> wb,
                                          double gamma) {
    if (gamma == 0) return 1;
    return std::pow((1.0 - w) * (1.0 - wb), gamma);
}

template <class S>
SeriesValue eval_rho(const CoeffTable<S>& t, std::complex<double> w, std::complex<double> wb) {
    SeriesValue v = eval_theta(t, w, wb);
    v.value *= rho_prefactor(w, wb, to_double(t.gamma()));
    return v;
}

/// Power-series coefficients of f_n(xi) = sum_j theta_{j+n, j} xi^{j-1}; for
/// n < 0 the first |n| coefficients are structural zeros.
template <class S>
std::vector<S> fourier_series(const CoeffTable<S>& t, int n) {
    const int N = t.order();
    if (std::abs(n) > N - 1) throw InvalidParameter("Fourier index |n| must be <= N-1");
    std::vector<S> out;
    for (int k = 0; k < N; ++k) {
        const int i = k + 1 + n;
        const int j = k + 1;
        if (i > N || j > N) break;
        out.push_back(i < 1 ? S(0) : t(i, j));
    }
    return out;
}

/// Max |coefficient| of the three-term relation for f_{n-1}, f_n, f_{n+1}
/// through xi^order, using the tables' own Fourier components.
template <class S>
S rec3_residual(const CoeffTable<S>& t, int n, int order) {
    const int N = t.order();
    // f_k[m] is known from the table when m + 1 + max(k, 0) <= N.
    const int cap = N - 1 - std::max(n + 1, 0);
    if (order < 0 || order > cap)
        throw InvalidParameter("rec3 order must be in [0, " + std::to_string(cap) + "]");
    const S& g = t.gamma();
    const S& k = t.kappa();
    const S a_up = coeff_A(n + 1, g, k);
    const S a_dn = coeff_A(-n + 1, g, k);
    const S b = coeff_B(n, g, k);
    const S c = coeff_C(n, g, k);
    auto f = [&](int idx, int m) -> S {
        if (m < 0) return S(0);
        return t.get(m + 1 + idx, m + 1);
    };
    S worst = S(0);
    for (int m = 0; m <= order; ++m) {
        const S r = a_up * f(n + 1, m - 1) + a_dn * f(n - 1, m) + (b + c) * f(n, m) -
                    c * f(n, m - 1) + from_int<S>(2 * (m - 1)) * f(n, m - 1) -
                    from_int<S>(2 * m) * f(n, m);
        const S mag = abs_value(r);
        if (mag > worst) worst = mag;
    }
    return worst;
}

struct GrowthEstimate {
    double exponent = 0;  ///< Richardson-refined boundary exponent
    double log_fit = 0;   ///< 1 + least-squares slope of log theta_jj vs log j
};

/// Boundary exponent from the growth theta_{j,j} ~ c j^{beta-1} of the diagonal.
template <class S>
GrowthEstimate diagonal_growth_exponent(const CoeffTable<S>& t) {
    const int N = t.order();
    if (N < 16) throw InvalidParameter("diagonal growth fit needs N >= 16");
    const int lo = N / 2;
    std::vector<double> d(N + 1);
    for (int j = lo; j <= N; ++j) {
        d[j] = to_double(t(j, j));
        if (!(d[j] > 0))
            throw InvalidParameter("non-positive diagonal entry at j=" + std::to_string(j) +
                                   " (oscillatory regime)");
    }
    // Least-squares slope of log d against log j.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (int j = lo; j <= N; ++j) {
        const double x = std::log(static_cast<double>(j));
        const double y = std::log(d[j]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++cnt;
    }
    const double slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);

    // e_j = j (d_{j+1}/d_j - 1) = (beta-1) + c1/j + c2/j^2 + ...
    auto e = [&](int j) { return j * std::expm1(std::log(d[j + 1]) - std::log(d[j])); };
    // Two Richardson passes remove the 1/j and 1/j^2 terms.
    auto r1 = [&](int j) { return (j + 1) * e(j + 1) - j * e(j); };
    auto r2 = [&](int j) {
        const double a = static_cast<double>(j + 1) * (j + 1);
        const double b = static_cast<double>(j) * j;
        return (a * r1(j + 1) - b * r1(j)) / (a - b);
    };
    GrowthEstimate g;
    g.exponent = 1 + r2(N - 3);
    g.log_fit = 1 + slope;
    return g;
}

/// Radial components F_n(r^2) = sum_j theta_{j+n,j} r^{2(j-1)} for n = 0..N-1.
template <class S>
std::vector<double> radial_components(const CoeffTable<S>& t, double r) {
    const int N = t.order();
    const double xi = r * r;
    std::vector<double> F(N);
    for (int n = 0; n < N; ++n) {
        double acc = 0;
        for (int j = N - n; j >= 1; --j) acc = acc * xi + to_double(t(j + n, j));
        F[n] = acc;
    }
    return F;
}

/// Relative weight of the last two shells at radius r, sum over |theta| r^{i+j-2}.
template <class S>
double radial_tail(const CoeffTable<S>& t, double r) {
    const int N = t.order();
    // Group absolute coefficients by total degree s = i + j - 2.
    std::vector<double> all(2 * N - 1, 0.0), tail(2 * N - 1, 0.0);
    for (int i = 1; i <= N; ++i)
        for (int j = 1; j <= N; ++j) {
            const double a = std::abs(to_double(t(i, j)));
            all[i + j - 2] += a;
            if (std::max(i, j) >= N - 1) tail[i + j - 2] += a;
        }
    double num = 0, den = 0;
    for (int s = 2 * N - 2; s >= 0; --s) {
        num = num * r + tail[s];
        den = den * r + all[s];
    }
    return den > 0 ? num / den : 0;
}

/// Estimated relative size of the unsummed remainder beyond order N at radius
/// r: the shell sums over max(i,j) = n, extrapolated geometrically with the
/// ratio of the last two shells. Infinite when that ratio is >= 1.
template <class S>
double remainder_estimate(const CoeffTable<S>& t, double r) {
    const int N = t.order();
    if (N < 2) return std::numeric_limits<double>::infinity();
    std::vector<double> rp(2 * N - 1, 1.0);
    for (int k = 1; k < 2 * N - 1; ++k) rp[k] = rp[k - 1] * r;
    std::vector<double> shell(N + 1, 0.0);
    for (int i = 1; i <= N; ++i)
        for (int j = 1; j <= N; ++j) shell[std::max(i, j)] += std::abs(to_double(t(i, j))) * rp[i + j - 2];
    double total = 0;
    for (double v : shell) total += v;
    if (shell[N] == 0) return 0;
    if (shell[N - 1] == 0 || total == 0) return std::numeric_limits<double>::infinity();
    const double ratio = shell[N] / shell[N - 1];
    if (ratio >= 1) return std::numeric_limits<double>::infinity();
    return shell[N] * ratio / (1 - ratio) / total;
}

/// Largest r in [0, 1) whose radial tail is within tol (bisection).
template <class S>
double max_admissible_radius(const CoeffTable<S>& t, double tol = kTailTolerance) {
    if (radial_tail(t, 0.0) > tol) return 0;
    double lo = 0, hi = 1;
    for (int it = 0; it < 60; ++it) {
        const double mid = (lo + hi) / 2;
        (radial_tail(t, mid) <= tol ? lo : hi) = mid;
    }
    return lo;
}

/// Theta(r e^{i phi}, r e^{-i phi}) at each phi (conjugate pairs only).
template <class S>
std::vector<double> angular_profile(const CoeffTable<S>& t, double r, std::span<const double> phis) {
    const auto F = radial_components(t, r);
    const int N = t.order();
    std::vector<double> c(N);
    double rn = 1;
    for (int n = 0; n < N; ++n) {
        c[n] = (n == 0 ? 1.0 : 2.0) * rn * F[n];
        rn *= r;
    }
    std::vector<double> out;
    out.reserve(phis.size());
    for (double phi : phis) {
        // Clenshaw for sum c_n cos(n phi).
        const double x = std::cos(phi);
        double b1 = 0, b2 = 0;
        for (int n = N - 1; n >= 1; --n) {
            const double b0 = c[n] + 2 * x * b1 - b2;
            b2 = b1;
            b1 = b0;
        }
        out.push_back(c[0] + x * b1 - b2);
    }
    return out;
}

/// Trapezoidal value of the integral of rho(r e^{i phi}, r e^{-i phi}) over
/// [0, 2 pi]. Requires the radial tail at r to be within tail_tol.
template <class S>
double integral_means(const CoeffTable<S>& t, double r, int n_phi, double tail_tol = kTailTolerance) {
    if (n_phi < 256 || (n_phi & (n_phi - 1)) != 0)
        throw InvalidParameter("n_phi must be a power of two >= 256");
    if (!(r >= 0 && r < 1)) throw InvalidParameter("radius must be in [0, 1)");
    const double tail = radial_tail(t, r);
    if (tail > tail_tol) throw TailCheckFailed(r, tail, max_admissible_radius(t, tail_tol));
    const double gamma = to_double(t.gamma());
    // rho is even in phi: evaluate the half circle and weight interior nodes twice.
    const int half = n_phi / 2;
    std::vector<double> phis(half + 1);
    for (int k = 0; k <= half; ++k) phis[k] = 2 * std::numbers::pi * k / n_phi;
    const auto theta = angular_profile(t, r, phis);
    double sum = 0;
    for (int k = 0; k <= half; ++k) {
        const double mod2 = 1 - 2 * r * std::cos(phis[k]) + r * r;  // |1 - w|^2
        const double rho = (gamma == 0 ? 1.0 : std::pow(mod2, gamma)) * theta[k];
        sum += (k == 0 || k == half ? 1.0 : 2.0) * rho;
    }
    return sum * 2 * std::numbers::pi / n_phi;
}

struct FitResult {
    double slope = 0;
    double intercept = 0;
    double residual = 0;  ///< max |log I - fit| over the window
    std::vector<double> window;
};

/// Least-squares slope of log I(r) against -log(1 - r).
inline FitResult fit_beta(std::span<const std::pair<double, double>> samples) {
    if (samples.size() < 4) throw InvalidParameter("fit_beta needs at least 4 samples");
    FitResult f;
    std::vector<double> xs, ys;
    double prev_r = -1;
    for (const auto& [r, I] : samples) {
        if (!(r > prev_r) || !(r > 0 && r < 1))
            throw InvalidParameter("fit radii must increase within (0, 1)");
        if (!(I > 0)) throw InvalidParameter("integral means must be positive for a log fit");
        prev_r = r;
        f.window.push_back(r);
        xs.push_back(-std::log1p(-r));
        ys.push_back(std::log(I));
    }
    const double n = static_cast<double>(xs.size());
    double mx = 0, my = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        mx += xs[k];
        my += ys[k];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sxy += (xs[k] - mx) * (ys[k] - my);
        sxx += (xs[k] - mx) * (xs[k] - mx);
    }
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    for (std::size_t k = 0; k < xs.size(); ++k)
        f.residual = std::max(f.residual, std::abs(ys[k] - f.intercept - f.slope * xs[k]));
    return f;
}

/// |d slope / d log I_k| summed against per-sample relative errors: how far
/// errors of size errs[k] in the integral means can move the fitted slope.
inline double slope_error_bound(std::span<const double> radii, std::span<const double> errs) {
    const double n = static_cast<double>(radii.size());
    double mx = 0;
    for (double r : radii) mx += -std::log1p(-r);
    mx /= n;
    double sxx = 0;
    for (double r : radii) sxx += (-std::log1p(-r) - mx) * (-std::log1p(-r) - mx);
    double bound = 0;
    for (std::size_t k = 0; k < radii.size(); ++k) {
        if (!(errs[k] < 1)) return std::numeric_limits<double>::infinity();
        bound += std::abs(-std::log1p(-radii[k]) - mx) / sxx * std::abs(std::log1p(-errs[k]));
    }
    return bound;
}

}  // namespace slespec
