#pragma once

// Monte Carlo estimate of the interior whole-plane moment function: frozen
// driving per time step, radial Loewner flow integrated with an adaptive
// Dormand-Prince 5(4) pair, log-derivative carried along the orbit.

#include <cmath>
#include <complex>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "slespec/error.hpp"
#include "slespec/parallel.hpp"
#include "slespec/scalar.hpp"

namespace slespec {

struct MCConfig {
    double kappa = 0;
    double q = 0;
    double T = 16;
    int n_steps = 3200;
    int n_samples = 10000;
    std::uint64_t seed = 42;
    std::complex<double> w{0.5, 0};
    unsigned threads = 1;

    double delta() const { return T / n_steps; }
};

struct MCEstimate {
    double mean = 0;
    double std_error = 0;
    long long n_samples = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
};

inline constexpr double kMaxDelta = 1e-2;
inline constexpr double kStepTolerance = 1e-12;
inline constexpr double kUnderflowDistance = 1e-12;

inline void validate(const MCConfig& c) {
    if (!(c.kappa >= 0)) throw InvalidParameter("kappa must be >= 0");
    if (!(c.T > 0)) throw InvalidParameter("time horizon T must be positive");
    if (c.n_steps < 1) throw InvalidParameter("n_steps must be >= 1");
    if (c.n_samples < 2) throw InvalidParameter("n_samples must be >= 2");
    if (!(std::abs(c.w) < 1)) throw InvalidParameter("evaluation point must satisfy |w| < 1");
    if (c.delta() > kMaxDelta * (1 + 1e-12))
        throw InvalidParameter("time step T/n_steps = " + to_string(c.delta()) + " exceeds 1e-2");
    if (std::exp(-c.T) > (1 - std::abs(c.w)) / 10)
        throw InvalidParameter("horizon too short: need exp(-T) <= (1-|w|)/10");
}

/// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent generator for path `index` of run `seed`.
inline std::mt19937_64 path_stream(std::uint64_t seed, std::uint64_t index) {
    return std::mt19937_64(mix64(mix64(seed) ^ mix64(index + 0x632be59bd9b4e019ULL)));
}

struct DrivingPath {
    double delta = 0;
    // Frozen value of step k: exp(i (B(t_{k-1}) + B(t_k)) / 2), the midpoint
    // (Strang) choice; freezing at B(t_k) alone leaves an O(delta) bias.
    std::vector<std::complex<double>> u;
    double B_T = 0;
};

template <class Rng>
DrivingPath sample_driving(double kappa, double T, int n_steps, Rng& stream) {
    if (!(kappa >= 0)) throw InvalidParameter("kappa must be >= 0");
    if (n_steps < 1) throw InvalidParameter("n_steps must be >= 1");
    DrivingPath p;
    p.delta = T / n_steps;
    p.u.resize(n_steps);
    const double sd = std::sqrt(kappa * p.delta);
    std::normal_distribution<double> normal;
    double B = 0;
    for (int k = 0; k < n_steps; ++k) {
        const double prev = B;
        if (sd > 0) B += sd * normal(stream);
        p.u[k] = std::polar(1.0, 0.5 * (prev + B));
    }
    p.B_T = B;
    return p;
}

struct FlowState {
    std::complex<double> z;
    std::complex<double> logd;
};

namespace detail {

// Vector field in the frame v = z/u: v' = v(v+1)/(v-1), with the
// log-derivative rate (v^2 - 2v - 1)/(v - 1)^2.
inline void flow_rhs(std::complex<double> v, std::complex<double>& dv, std::complex<double>& dl) {
    const std::complex<double> s = v - 1.0;
    if (std::abs(s) < kUnderflowDistance) throw StepUnderflow("orbit reached the driving point");
    dv = v * (v + 1.0) / s;
    dl = (v * v - 2.0 * v - 1.0) / (s * s);
}

}  // namespace detail

/// Advances (z, logd) by time delta along dz/ds = z(z+u)/(z-u).
inline FlowState elementary_step(std::complex<double> z, std::complex<double> logd,
                                 std::complex<double> u, double delta) {
    if (delta == 0) return {z, logd};
    if (!(delta > 0)) throw InvalidParameter("step length must be >= 0");
    if (z == 0.0) return {z, logd - delta};

    // Dormand-Prince 5(4) tableau; the field is autonomous so the nodes c_i
    // are not needed.
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    std::complex<double> v = z / u;
    std::complex<double> L = logd;
    double s = 0;
    double h = std::min(delta, 0.1 * std::abs(v - 1.0));
    std::complex<double> k1v, k1l;
    detail::flow_rhs(v, k1v, k1l);
    while (s < delta) {
        if (h > delta - s) h = delta - s;
        if (h < 1e-14 * delta) throw StepUnderflow("adaptive step underflow near the driving point");
        std::complex<double> kv[7], kl[7];
        kv[0] = k1v, kl[0] = k1l;
        bool ok = true;
        try {
            detail::flow_rhs(v + h * a21 * kv[0], kv[1], kl[1]);
            detail::flow_rhs(v + h * (a31 * kv[0] + a32 * kv[1]), kv[2], kl[2]);
            detail::flow_rhs(v + h * (a41 * kv[0] + a42 * kv[1] + a43 * kv[2]), kv[3], kl[3]);
            detail::flow_rhs(v + h * (a51 * kv[0] + a52 * kv[1] + a53 * kv[2] + a54 * kv[3]),
                             kv[4], kl[4]);
            detail::flow_rhs(v + h * (a61 * kv[0] + a62 * kv[1] + a63 * kv[2] + a64 * kv[3] +
                                      a65 * kv[4]),
                             kv[5], kl[5]);
        } catch (const StepUnderflow&) {
            ok = false;
        }
        if (ok) {
            const auto vn = v + h * (b1 * kv[0] + b3 * kv[2] + b4 * kv[3] + b5 * kv[4] + b6 * kv[5]);
            const auto ln = L + h * (b1 * kl[0] + b3 * kl[2] + b4 * kl[3] + b5 * kl[4] + b6 * kl[5]);
            detail::flow_rhs(vn, kv[6], kl[6]);
            const auto ev = h * (e1 * kv[0] + e3 * kv[2] + e4 * kv[3] + e5 * kv[4] + e6 * kv[5] +
                                 e7 * kv[6]);
            const auto el = h * (e1 * kl[0] + e3 * kl[2] + e4 * kl[3] + e5 * kl[4] + e6 * kl[5] +
                                 e7 * kl[6]);
            const double err = std::max(std::abs(ev) / (kStepTolerance * (1 + std::abs(v))),
                                        std::abs(el) / kStepTolerance);
            if (err <= 1) {
                v = vn;
                L = ln;
                s += h;
                k1v = kv[6];
                k1l = kl[6];
                h *= std::min(5.0, 0.9 * std::pow(std::max(err, 1e-10), -0.2));
                continue;
            }
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
        } else {
            h *= 0.25;
        }
    }
    return {u * v, L};
}

struct MapValue {
    std::complex<double> value;
    std::complex<double> log_deriv;
};

/// F(w e^{iB(T)}, T) with F = phi_1 o ... o phi_n: the latest increment acts
/// first. log_deriv is log F' at that point.
inline MapValue whole_plane_map_derivative(std::complex<double> w, const DrivingPath& path) {
    if (!(std::abs(w) < 1)) throw InvalidParameter("evaluation point must satisfy |w| < 1");
    FlowState st{w * std::polar(1.0, path.B_T), 0};
    for (auto k = path.u.size(); k-- > 0;) st = elementary_step(st.z, st.logd, path.u[k], path.delta);
    return {st.z, st.logd};
}

namespace detail {

struct Moments {
    double n = 0;
    double mean = 0;
    double m2 = 0;
};

inline Moments merge(const Moments& a, const Moments& b) {
    if (a.n == 0) return b;
    if (b.n == 0) return a;
    Moments r;
    r.n = a.n + b.n;
    const double d = b.mean - a.mean;
    r.mean = a.mean + d * (b.n / r.n);
    r.m2 = a.m2 + b.m2 + d * d * (a.n * b.n / r.n);
    return r;
}

// Pairwise Chan merge over [lo, hi); the tree depends on the range only.
inline Moments pairwise_moments(const std::vector<double>& x, std::size_t lo, std::size_t hi) {
    if (hi - lo <= 16) {
        Moments m;
        for (std::size_t i = lo; i < hi; ++i) {
            m.n += 1;
            const double d = x[i] - m.mean;
            m.mean += d / m.n;
            m.m2 += d * (x[i] - m.mean);
        }
        return m;
    }
    const std::size_t mid = lo + (hi - lo) / 2;
    return merge(pairwise_moments(x, lo, mid), pairwise_moments(x, mid, hi));
}

}  // namespace detail

struct PathSample {
    std::complex<double> log_deriv;
    double B_T = 0;
};

/// One path of the estimator, identified by its index.
inline PathSample simulate_path(const MCConfig& c, std::uint64_t index) {
    auto rng = path_stream(c.seed, index);
    const auto path = sample_driving(c.kappa, c.T, c.n_steps, rng);
    return {whole_plane_map_derivative(c.w, path).log_deriv, path.B_T};
}

/// Mean of exp(q (T + Re log F')) over independent paths. With a dump stream,
/// writes `index log_deriv_re log_deriv_im B_T` per path.
inline MCEstimate moment_estimate(const MCConfig& c, std::ostream* dump = nullptr) {
    validate(c);
    const auto n = static_cast<std::size_t>(c.n_samples);
    std::vector<PathSample> paths(n);
    parallel_for(n, c.threads, [&](std::size_t i) { paths[i] = simulate_path(c, i); });

    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = std::exp(c.q * (c.T + paths[i].log_deriv.real()));
        if (!std::isfinite(x[i]))
            throw Error("sample overflow at path " + std::to_string(i));
    }
    const auto m = detail::pairwise_moments(x, 0, n);

    MCEstimate e;
    e.mean = m.mean;
    e.std_error = std::sqrt(m.m2 / (m.n - 1) / m.n);
    e.n_samples = c.n_samples;
    e.seed = c.seed;
    if (std::abs(c.q) > 2 || std::abs(c.w) > 0.9)
        e.warnings.emplace_back("outside validation envelope |q| <= 2, |w| <= 0.9");
    if (e.std_error > 0.5 * std::abs(e.mean)) e.warnings.emplace_back("estimator not converged");

    if (dump) {
        for (std::size_t i = 0; i < n; ++i)
            *dump << i << ' ' << to_string(paths[i].log_deriv.real()) << ' '
                  << to_string(paths[i].log_deriv.imag()) << ' ' << to_string(paths[i].B_T) << '\n';
    }
    return e;
}

}  // namespace slespec
