#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "slespec/cli.hpp"
#include "slespec/mc.hpp"
#include "slespec/special.hpp"

using namespace slespec;
using cd = std::complex<double>;

namespace {

// exp(a) == exp(b), i.e. equal real parts and imaginary parts mod 2 pi.
double log_distance(cd a, cd b) { return std::abs(std::exp(a - b) - 1.0); }

MCConfig config(double q, double kappa, cd w, int samples) {
    MCConfig c;
    c.q = q;
    c.kappa = kappa;
    c.w = w;
    c.n_samples = samples;
    return c;
}

}  // namespace

TEST(Streams, DistinctAndReproducible) {
    auto a = path_stream(42, 0), b = path_stream(42, 0), c = path_stream(42, 1), d = path_stream(43, 0);
    const auto x = a();
    EXPECT_EQ(x, b());
    EXPECT_NE(x, c());
    EXPECT_NE(x, d());
    EXPECT_NE(mix64(0), mix64(1));
}

TEST(SampleDriving, ZeroKappaIsConstant) {
    auto rng = path_stream(1, 0);
    const auto p = sample_driving(0.0, 4.0, 400, rng);
    EXPECT_DOUBLE_EQ(p.delta, 0.01);
    ASSERT_EQ(p.u.size(), 400u);
    for (auto u : p.u) EXPECT_EQ(u, cd(1));
    EXPECT_EQ(p.B_T, 0);
}

TEST(SampleDriving, VarianceIsKappaT) {
    const double kappa = 3, T = 2;
    const int n = 4000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        auto rng = path_stream(9, i);
        const auto p = sample_driving(kappa, T, 50, rng);
        s += p.B_T;
        s2 += p.B_T * p.B_T;
        for (auto u : p.u) ASSERT_NEAR(std::abs(u), 1, 1e-15);
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    EXPECT_NEAR(mean, 0, 4 * std::sqrt(kappa * T / n));
    EXPECT_NEAR(var, kappa * T, 4 * kappa * T * std::sqrt(2.0 / n));
}

TEST(SampleDriving, MidpointFreezing) {
    auto rng = path_stream(5, 3);
    const auto p = sample_driving(2.0, 1.0, 10, rng);
    // Reconstruct the increments from consecutive midpoints.
    auto again = path_stream(5, 3);
    std::normal_distribution<double> normal;
    double B = 0;
    for (int k = 0; k < 10; ++k) {
        const double prev = B;
        B += std::sqrt(0.2) * normal(again);
        EXPECT_NEAR(std::abs(p.u[k] - std::polar(1.0, (prev + B) / 2)), 0, 1e-15);
    }
    EXPECT_DOUBLE_EQ(p.B_T, B);
    EXPECT_THROW(sample_driving(-1.0, 1.0, 10, rng), InvalidParameter);
    EXPECT_THROW(sample_driving(1.0, 1.0, 0, rng), InvalidParameter);
}

TEST(ElementaryStep, Examples) {
    const auto s0 = elementary_step(0.0, 0.0, 1.0, 0.25);
    EXPECT_EQ(s0.z, cd(0));
    EXPECT_EQ(s0.logd, cd(-0.25));
    const auto id = elementary_step(cd(0.3, 0.1), cd(0.5, 0.2), cd(0, 1), 0);
    EXPECT_EQ(id.z, cd(0.3, 0.1));
    EXPECT_EQ(id.logd, cd(0.5, 0.2));
    EXPECT_THROW(elementary_step(0.5, 0.0, 1.0, -0.1), InvalidParameter);
}

TEST(ElementaryStep, MatchesExactFrozenFlow) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> rad(0, 0.9), ang(0, 2 * std::numbers::pi);
    for (int n = 0; n < 40; ++n) {
        const cd z = std::polar(rad(rng), ang(rng));
        const cd u = std::polar(1.0, ang(rng));
        for (double delta : {0.005, 0.1, 1.0}) {
            const auto got = elementary_step(z, 0.0, u, delta);
            const auto ref = oracle::frozen_flow(z, u, delta);
            EXPECT_NEAR(std::abs(got.z - ref.z), 0, 1e-10) << z << " " << u << " " << delta;
            EXPECT_LT(log_distance(got.logd, ref.log_deriv), 1e-9) << z << " " << u << " " << delta;
        }
    }
}

TEST(ElementaryStep, ContractsTowardOrigin) {
    const auto s = elementary_step(cd(0.5, 0.2), 0.0, cd(-1, 0), 0.5);
    EXPECT_LT(std::abs(s.z), std::abs(cd(0.5, 0.2)));
}

TEST(WholePlaneMap, DeterministicLimit) {
    std::mt19937_64 rng(23);
    // Finite-horizon error grows near the pole at w = -1.
    std::uniform_real_distribution<double> rad(0, 0.5), ang(0, 2 * std::numbers::pi);
    auto stream = path_stream(0, 0);
    const auto path = sample_driving(0.0, 16.0, 3200, stream);
    for (int n = 0; n < 10; ++n) {
        const cd w = std::polar(rad(rng), ang(rng));
        const auto m = whole_plane_map_derivative(w, path);
        const cd ref = deterministic_map_derivative(w, 0);
        EXPECT_NEAR(std::abs(std::exp(16.0 + m.log_deriv) - ref), 0, 1e-6 * std::abs(ref)) << w;
        EXPECT_NEAR(std::abs(std::exp(16.0) * m.value - deterministic_map(w, 0)), 0, 1e-6) << w;
    }
    EXPECT_NEAR(std::exp(16.0 + whole_plane_map_derivative(0.5, path).log_deriv.real()), 4.0 / 27, 1e-6);
    EXPECT_EQ(whole_plane_map_derivative(0.0, path).value, cd(0));
    EXPECT_THROW(whole_plane_map_derivative(1.0, path), InvalidParameter);
}

TEST(WholePlaneMap, DerivativeMatchesDifference) {
    auto stream = path_stream(77, 5);
    const auto path = sample_driving(4.0, 6.0, 600, stream);
    for (cd w : {cd(0.3, 0.1), cd(-0.5, 0.2), cd(0.1, -0.6)}) {
        const double h = 1e-4;
        const auto fd = (whole_plane_map_derivative(w + h, path).value -
                         whole_plane_map_derivative(w - h, path).value) /
                        (2 * h);
        // The map is evaluated at w e^{iB(T)}.
        const auto d = std::exp(whole_plane_map_derivative(w, path).log_deriv) * std::polar(1.0, path.B_T);
        EXPECT_NEAR(std::abs(fd / d - 1.0), 0, 1e-5) << w;
    }
}

TEST(MomentEstimate, ZeroMomentIsExactlyOne) {
    auto c = config(0, 4, 0.5, 50);
    c.T = 8;
    c.n_steps = 800;
    const auto e = moment_estimate(c);
    EXPECT_EQ(e.mean, 1.0);
    EXPECT_EQ(e.std_error, 0.0);
    EXPECT_EQ(e.n_samples, 50);
    EXPECT_TRUE(e.warnings.empty());
}

TEST(MomentEstimate, DeterministicCase) {
    const auto e = moment_estimate(config(2, 0, 0.5, 4));
    EXPECT_NEAR(e.mean, 16.0 / 729, 1e-6);
    EXPECT_EQ(e.std_error, 0.0);
    const auto rep = run_mc_validate(config(2, 0, 0.5, 4));
    EXPECT_EQ(rep.oracle_method, "deterministic");
    EXPECT_TRUE(rep.pass);
}

TEST(MomentEstimate, ThreadCountInvariant) {
    auto c = config(1.5, 3, cd(0.2, 0.3), 97);
    c.T = 8;
    c.n_steps = 800;
    c.seed = 1234;
    std::ostringstream d1, d3;
    const auto a = moment_estimate(c, &d1);
    c.threads = 3;
    const auto b = moment_estimate(c, &d3);
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.std_error, b.std_error);
    EXPECT_EQ(d1.str(), d3.str());
}

TEST(MomentEstimate, DumpFormat) {
    auto c = config(1, 2, 0.5, 5);
    c.T = 8;
    c.n_steps = 800;
    std::ostringstream d;
    moment_estimate(c, &d);
    std::istringstream in(d.str());
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) {
        std::istringstream f(line);
        long long idx;
        double re, im, bt;
        ASSERT_TRUE(static_cast<bool>(f >> idx >> re >> im >> bt)) << line;
        EXPECT_EQ(idx, rows);
        const auto p = simulate_path(c, idx);
        EXPECT_EQ(re, p.log_deriv.real());
        EXPECT_EQ(bt, p.B_T);
        ++rows;
    }
    EXPECT_EQ(rows, 5);
}

TEST(MomentEstimate, Warnings) {
    auto c = config(2.5, 2, 0.5, 20);
    c.T = 8;
    c.n_steps = 800;
    const auto e = moment_estimate(c);
    ASSERT_FALSE(e.warnings.empty());
    EXPECT_EQ(e.warnings.front(), "outside validation envelope |q| <= 2, |w| <= 0.9");
}

TEST(MomentEstimate, Validation) {
    auto ok = config(1, 2, 0.5, 10);
    auto bad = ok;
    bad.kappa = -1;
    EXPECT_THROW(moment_estimate(bad), InvalidParameter);
    bad = ok;
    bad.T = 0;
    EXPECT_THROW(moment_estimate(bad), InvalidParameter);
    bad = ok;
    bad.n_steps = 0;
    EXPECT_THROW(moment_estimate(bad), InvalidParameter);
    bad = ok;
    bad.n_samples = 1;
    EXPECT_THROW(moment_estimate(bad), InvalidParameter);
    bad = ok;
    bad.w = 1.0;
    EXPECT_THROW(moment_estimate(bad), InvalidParameter);
    bad = ok;
    bad.n_steps = 1000;  // delta = 0.016
    EXPECT_THROW(moment_estimate(bad), InvalidParameter);
    bad = ok;
    bad.T = 2;
    bad.n_steps = 400;  // exp(-2) > 0.05
    EXPECT_THROW(moment_estimate(bad), InvalidParameter);
}

TEST(MomentEstimate, HorizonInsensitive) {
    auto c = config(2, 6, 0.5, 2000);
    const auto a = moment_estimate(c);
    c.T = 12;
    c.n_steps = 2400;
    const auto b = moment_estimate(c);
    EXPECT_LE(std::abs(a.mean - b.mean), 3 * std::hypot(a.std_error, b.std_error));
}

// Closed-form oracles at 1e4 paths; |z| <= 3 with the fixed seed.

struct OracleCase {
    double q, kappa, r, expected;
};

class MCOracle : public ::testing::TestWithParam<OracleCase> {};

TEST_P(MCOracle, AgreesWithinThreeSigma) {
    const auto oc = GetParam();
    const auto e = moment_estimate(config(oc.q, oc.kappa, oc.r, 10000));
    const double z = (e.mean - oc.expected) / e.std_error;
    EXPECT_LE(std::abs(z), 3) << "mean " << e.mean << " +- " << e.std_error << " vs " << oc.expected;
}

INSTANTIATE_TEST_SUITE_P(
    ClosedForms, MCOracle,
    ::testing::Values(OracleCase{2, 6, 0.5, rho_M0(0.5, 0.5, 6).real()},
                      OracleCase{2, 6, 0.3, rho_M0(0.3, 0.3, 6).real()},
                      OracleCase{2, 2, 0.5, rho_M1(0.5, 0.5, 1).real()},
                      OracleCase{2, 2, 0.3, rho_M1(0.3, 0.3, 1).real()}));

TEST(MCOracleSeries, GenericPoint) {
    for (double r : {0.3, 0.5}) {
        const auto rep = run_mc_validate(config(1, 4, r, 10000));
        EXPECT_EQ(rep.oracle_method, "series");
        ASSERT_TRUE(rep.z_score.has_value());
        EXPECT_TRUE(rep.pass) << r << " z=" << *rep.z_score;
    }
}
