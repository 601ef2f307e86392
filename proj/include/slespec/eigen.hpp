#pragma once

// Boundary-exponent eigenproblem of a (2M+1)-band solution: the three-term
// system for the Fourier amplitudes psi_n at xi -> 1, its symmetric reduction,
// a certified numerical eigensolver and the polynomial eigenfunctions.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <sstream>
#include <string>
#include <vector>

#include "slespec/error.hpp"
#include "slespec/scalar.hpp"
#include "slespec/spectrum.hpp"

namespace slespec {

// Coefficients of the three-term relation for f_n(xi). They are functions of
// (gamma, kappa) only; the band structure enters through A_{-M} = 0.

template <class S>
S coeff_A(int n, const S& gamma, const S& kappa) {
    const S d = from_int<S>(n) - gamma;
    return kappa * d * d / 2 + from_int<S>(n) - 3 * gamma - kappa * gamma * (1 - gamma) / 2;
}

template <class S>
S coeff_B(int n, const S& gamma, const S& kappa) {
    const S nn = from_int<S>(n) * from_int<S>(n);
    return -kappa * (nn + gamma * gamma - gamma) + 6 * gamma;
}

template <class S>
S coeff_C(int n, const S& gamma, const S& kappa) {
    const S nn = from_int<S>(n) * from_int<S>(n);
    return kappa * (nn - 2 * gamma + 2 * gamma * gamma) / 2 - from_int<S>(n) - 6 * gamma;
}

template <class S>
struct TridiagSystem {
    int M = 0;
    S gamma{};
    S kappa{};
    // Index n maps to slot n + M + 1, covering n in [-M-1, M+1].
    std::vector<S> A_, B_, C_;

    S A(int n) const { return A_.at(slot(n)); }
    S B(int n) const { return B_.at(slot(n)); }
    S C(int n) const { return C_.at(slot(n)); }

private:
    std::size_t slot(int n) const {
        if (n < -M - 1 || n > M + 1)
            throw InvalidParameter("coefficient index outside [-M-1, M+1]");
        return static_cast<std::size_t>(n + M + 1);
    }
};

template <class S>
TridiagSystem<S> build_system(const CurveParams<S>& curve) {
    const auto p = curve_point(curve);
    TridiagSystem<S> sys;
    sys.M = curve.M;
    sys.gamma = curve.gamma;
    sys.kappa = p.kappa;
    for (int n = -curve.M - 1; n <= curve.M + 1; ++n) {
        sys.A_.push_back(coeff_A(n, sys.gamma, sys.kappa));
        sys.B_.push_back(coeff_B(n, sys.gamma, sys.kappa));
        sys.C_.push_back(coeff_C(n, sys.gamma, sys.kappa));
    }
    // Band closure; exact in rational arithmetic.
    const S closure = sys.A(-curve.M);
    if constexpr (is_rational_v<S>) {
        if (!is_zero(closure)) throw InvalidParameter("band closure A_{-M} != 0");
    } else {
        const double scale = 1 + std::abs(to_double(sys.kappa)) * (curve.M + 1) * (curve.M + 1);
        if (std::abs(closure) > 1e-9 * scale)
            throw InvalidParameter("band closure A_{-M} != 0");
    }
    return sys;
}

/// Dense row-major matrix; the systems here are at most a few dozen wide.
template <class S>
struct DenseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<S> data;

    DenseMatrix() = default;
    DenseMatrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, S(0)) {}
    S& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
    const S& operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }
};

template <class S>
DenseMatrix<double> to_double(const DenseMatrix<S>& m) {
    DenseMatrix<double> out(m.rows, m.cols);
    for (std::size_t k = 0; k < m.data.size(); ++k) out.data[k] = slespec::to_double(m.data[k]);
    return out;
}

/// The full (2M+1)x(2M+1) matrix R acting on (psi_{-M}, ..., psi_M).
template <class S>
DenseMatrix<S> full_matrix(const TridiagSystem<S>& sys) {
    const int M = sys.M;
    DenseMatrix<S> R(2 * M + 1, 2 * M + 1);
    for (int n = -M; n <= M; ++n) {
        const int row = n + M;
        R(row, row) = sys.B(n) / 2;
        if (n + 1 <= M) R(row, row + 1) = sys.A(n + 1) / 2;
        if (n - 1 >= -M) R(row, row - 1) = sys.A(-n + 1) / 2;
    }
    return R;
}

/// R restricted to psi_n = psi_{-n}, acting on (psi_0, ..., psi_M).
template <class S>
DenseMatrix<S> reduced_matrix(const TridiagSystem<S>& sys) {
    const int M = sys.M;
    DenseMatrix<S> R(M + 1, M + 1);
    R(0, 0) = sys.B(0) / 2;
    if (M >= 1) R(0, 1) = sys.A(1);  // psi_1 and psi_{-1} both couple to row 0
    for (int n = 1; n <= M; ++n) {
        R(n, n - 1) = sys.A(-n + 1) / 2;
        R(n, n) = sys.B(n) / 2;
        if (n + 1 <= M) R(n, n + 1) = sys.A(n + 1) / 2;
    }
    return R;
}

template <class S>
bool is_tridiagonal(const DenseMatrix<S>& m) {
    for (int i = 0; i < m.rows; ++i)
        for (int j = 0; j < m.cols; ++j)
            if (std::abs(i - j) > 1 && !is_zero(m(i, j))) return false;
    return true;
}

/// det(m - lambda I) of a tridiagonal matrix by the three-term continuant.
template <class S>
S charpoly_at(const DenseMatrix<S>& m, const S& lambda) {
    if (m.rows != m.cols || !is_tridiagonal(m))
        throw InvalidParameter("charpoly_at expects a square tridiagonal matrix");
    S prev2 = S(1);
    S prev = m(0, 0) - lambda;
    for (int k = 1; k < m.rows; ++k) {
        S cur = (m(k, k) - lambda) * prev - m(k - 1, k) * m(k, k - 1) * prev2;
        prev2 = prev;
        prev = cur;
    }
    return prev;
}

struct EigenResult {
    std::vector<double> values;                ///< ascending
    std::vector<std::vector<double>> vectors;  ///< unit 2-norm, paired with values
    double selected = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

using LongMatrix = DenseMatrix<long double>;

inline std::string dump(const LongMatrix& m) {
    std::ostringstream os;
    os.precision(17);
    for (int i = 0; i < m.rows; ++i) {
        os << (i == 0 ? "[[" : " [");
        for (int j = 0; j < m.cols; ++j) os << (j ? ", " : "") << static_cast<double>(m(i, j));
        os << (i + 1 == m.rows ? "]]" : "]\n");
    }
    return os.str();
}

inline double residual_norm(const LongMatrix& m, long double lambda, const std::vector<double>& v) {
    long double r2 = 0;
    for (int i = 0; i < m.rows; ++i) {
        long double acc = -lambda * v[i];
        for (int j = 0; j < m.cols; ++j) acc += m(i, j) * v[j];
        r2 += acc * acc;
    }
    return static_cast<double>(std::sqrt(r2));
}

// det(m - x I) and its derivative via the differentiated continuant.
inline std::pair<long double, long double> continuant(const LongMatrix& m, long double x) {
    long double p2 = 1, p1 = m(0, 0) - x, d2 = 0, d1 = -1;
    for (int k = 1; k < m.rows; ++k) {
        const long double off = m(k - 1, k) * m(k, k - 1);
        const long double p = (m(k, k) - x) * p1 - off * p2;
        const long double d = -p1 + (m(k, k) - x) * d1 - off * d2;
        p2 = p1;
        p1 = p;
        d2 = d1;
        d1 = d;
    }
    return {p1, d1};
}

// Newton on det(m - lambda I); keeps the seed unless Newton lowers |det|.
inline long double polish_eigenvalue(const LongMatrix& m, long double seed) {
    if (!is_tridiagonal(m)) return seed;
    long double x = seed;
    for (int it = 0; it < 12; ++it) {
        const auto [p, d] = continuant(m, x);
        if (d == 0 || !std::isfinite(p / d)) break;
        const long double step = p / d;
        x -= step;
        if (std::abs(step) <= 1e-19L * std::max(1.0L, std::abs(x))) break;
    }
    // Guard against Newton jumping to a neighbouring root.
    if (std::abs(x - seed) > 1e-6L * std::max(1.0L, std::abs(seed))) return seed;
    return std::abs(continuant(m, x).first) < std::abs(continuant(m, seed).first) ? x : seed;
}

// Null vector of m - lambda I: the right singular vector of the smallest
// singular value.
inline std::vector<double> null_vector(const LongMatrix& m, long double lambda) {
    using MatL = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
    const int n = m.rows;
    MatL a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = m(i, j) - (i == j ? lambda : 0.0L);
    Eigen::JacobiSVD<MatL> svd(a, Eigen::ComputeFullV);
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = static_cast<double>(svd.matrixV()(i, n - 1));
    return out;
}

}  // namespace detail

inline constexpr double kEigenResidualTol = 1e-10;

/// All eigenpairs of a real matrix whose spectrum is real. Francis QR in
/// double seeds the eigenvalues, which are polished on the characteristic
/// polynomial in long double when the matrix is tridiagonal; every pair is
/// certified by its residual. Build the matrix in long double to keep close
/// eigenvalue pairs accurate.
inline EigenResult eigen_solve(const DenseMatrix<long double>& m) {
    if (m.rows != m.cols || m.rows == 0) throw InvalidParameter("eigen_solve expects a square matrix");
    const int n = m.rows;
    Eigen::MatrixXd a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = static_cast<double>(m(i, j));
    Eigen::EigenSolver<Eigen::MatrixXd> es(a, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
        throw ConvergenceError("QR iteration did not converge for\n" + detail::dump(m));

    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    std::vector<long double> values;
    for (int i = 0; i < n; ++i) {
        const std::complex<double> ev = es.eigenvalues()(i);
        if (std::abs(ev.imag()) > 1e-7 * scale)
            throw ConvergenceError("complex eigenvalue " + to_string(ev.real()) + "+" +
                                   to_string(ev.imag()) + "i for\n" + detail::dump(m));
        values.push_back(detail::polish_eigenvalue(m, ev.real()));
    }
    std::sort(values.begin(), values.end());

    EigenResult res;
    for (long double lambda : values) {
        auto v = detail::null_vector(m, lambda);
        const double r = detail::residual_norm(m, lambda, v);
        if (!(r <= kEigenResidualTol * scale))
            throw ConvergenceError("eigenpair residual " + to_string(r) + " at lambda=" +
                                   to_string(static_cast<double>(lambda)) + " for\n" + detail::dump(m));
        res.values.push_back(static_cast<double>(lambda));
        res.vectors.push_back(std::move(v));
    }
    return res;
}

inline EigenResult eigen_solve(const DenseMatrix<double>& m) {
    DenseMatrix<long double> ml(m.rows, m.cols);
    for (std::size_t k = 0; k < m.data.size(); ++k) ml.data[k] = m.data[k];
    return eigen_solve(ml);
}

/// Dense polynomial, coefficient k multiplies x^k.
template <class S>
struct Polynomial {
    std::vector<S> coeffs;

    int degree() const { return static_cast<int>(coeffs.size()) - 1; }

    template <class T>
    T operator()(const T& x) const {
        T acc = T(0);
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + T(*it);
        return acc;
    }

    Polynomial derivative() const {
        Polynomial d;
        for (std::size_t k = 1; k < coeffs.size(); ++k)
            d.coeffs.push_back(coeffs[k] * from_int<S>(static_cast<long long>(k)));
        if (d.coeffs.empty()) d.coeffs.push_back(S(0));
        return d;
    }
};

/// x^{l/2} 2F1(l/2 - M, b; c | x), the even eigenfunction for beta_l written as
/// a degree-M polynomial in x = (1 - cos phi)/2.
template <class S>
Polynomial<S> eigenfunction_poly(const CurveParams<S>& curve, int l) {
    validate_curve(curve);
    if (l < 0 || l > 2 * curve.M || l % 2 != 0)
        throw InvalidParameter("eigenfunction index l must be even and in [0, 2M]");
    const S M = from_int<S>(curve.M);
    const S& g = curve.gamma;
    if (is_zero(S(M + 3 * g)))
        throw InvalidParameter("eigenfunction undefined at gamma = -M/3");
    const S shift = g * (3 * M + 1 + 4 * g) / (M + 3 * g);
    const S half_l = from_int<S>(l / 2);
    const S a = half_l - M;
    const S b = half_l + shift;
    const S c = S(1) / 2 + from_int<S>(l) - M + shift;
    const int terms = curve.M - l / 2;  // a = -terms

    Polynomial<S> p;
    p.coeffs.assign(static_cast<std::size_t>(l / 2), S(0));
    S term = S(1);
    p.coeffs.push_back(term);
    for (int k = 0; k < terms; ++k) {
        const S ck = c + from_int<S>(k);
        if (is_zero(ck))
            throw InvalidParameter("hypergeometric c parameter hits a non-positive integer");
        term = term * (a + from_int<S>(k)) * (b + from_int<S>(k)) /
               (ck * from_int<S>(k + 1));
        p.coeffs.push_back(term);
    }
    return p;
}

/// Max over phi of the angular ODE residual for Psi(phi) = psi(x(phi)).
inline double lpsi_residual(const Polynomial<double>& psi, double beta_tilde, double gamma,
                            double kappa, std::span<const double> phi_grid) {
    const auto d1 = psi.derivative();
    const auto d2 = d1.derivative();
    double worst = 0;
    for (double phi : phi_grid) {
        const double c = std::cos(phi);
        const double s = std::sin(phi);
        const double x = (1 - c) / 2;
        const double p0 = psi(x);
        const double p1 = d1(x) * s / 2;
        const double p2 = d2(x) * s * s / 4 + d1(x) * c / 2;
        const double pot = (kappa * (2 * gamma - 1) / 2 - 3) * gamma * c -
                           (kappa * (gamma - 1) / 2 - 3) * gamma - beta_tilde;
        const double r = kappa / 2 * (1 - c) * p2 - (1 - kappa * gamma) * s * p1 + pot * p0;
        worst = std::max(worst, std::abs(r));
    }
    return worst;
}

/// The boundary exponent as a quadratic in the continuous label lambda;
/// agrees with eigen_beta_closed at integer lambda in [0, 2M].
template <class S>
S beta_from_lambda(const CurveParams<S>& curve, const S& lambda) {
    const auto p = curve_point(curve);
    const S M = from_int<S>(curve.M);
    const S& g = curve.gamma;
    return 3 * p.q - p.kappa * (M + g) / 2 +
           (p.kappa * (1 - 4 * g - lambda - 2 * M) / 4 + 1) * (2 * M - lambda);
}

inline constexpr int kPositivityGrid = 1024;
inline constexpr double kPositivityTol = -1e-10;

/// Psi(phi) = psi_0 + 2 sum_{n>=1} psi_n cos(n phi) from a symmetric-subspace
/// eigenvector (psi_0, ..., psi_M).
inline double angular_function(std::span<const double> psi, double phi) {
    double acc = psi[0];
    for (std::size_t n = 1; n < psi.size(); ++n) acc += 2 * psi[n] * std::cos(n * phi);
    return acc;
}

/// True if some sign of the eigenfunction is nonnegative on x in [0, 1].
inline bool is_nonnegative_eigenfunction(std::span<const double> psi) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    std::vector<double> vals(kPositivityGrid);
    for (int k = 0; k < kPositivityGrid; ++k) {
        const double x = static_cast<double>(k) / (kPositivityGrid - 1);
        vals[k] = angular_function(psi, std::acos(1 - 2 * x));
        lo = std::min(lo, vals[k]);
        hi = std::max(hi, vals[k]);
    }
    const double amp = std::max(std::abs(lo), std::abs(hi));
    if (amp == 0) return false;
    return lo / amp >= kPositivityTol || -hi / amp >= kPositivityTol;
}

/// Picks the boundary exponent: the largest eigenvalue whose eigenfunction is
/// nonnegative. `result` must come from the reduced (symmetric) matrix.
inline double select_beta_tilde(EigenResult& result, const CurveParams<double>& curve) {
    if (result.vectors.size() != result.values.size() || result.values.empty())
        throw InvalidParameter("select_beta_tilde needs eigenpairs");
    if (static_cast<int>(result.vectors.front().size()) != curve.M + 1)
        throw InvalidParameter("select_beta_tilde expects symmetric-subspace eigenvectors");
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < result.values.size(); ++k)
        if (is_nonnegative_eigenfunction(result.vectors[k])) best = std::max(best, result.values[k]);
    if (!std::isfinite(best))
        throw ConvergenceError("no nonnegative eigenfunction found");
    const double top = result.values.back();
    const double scale = std::max(1.0, std::abs(top));
    if (std::abs(best - top) > 1e-9 * scale)
        throw ConvergenceError("nonnegative eigenfunction is not the top eigenvalue: " +
                               to_string(best) + " vs " + to_string(top));
    const double expected = beta_tilde_on_curve(curve);
    if (std::abs(best - expected) > 1e-8 * scale)
        throw ConvergenceError("selected eigenvalue " + to_string(best) +
                               " disagrees with the closed form " + to_string(expected));
    result.selected = best;
    return best;
}

}  // namespace slespec
