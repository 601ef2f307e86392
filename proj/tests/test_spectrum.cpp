#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "slespec/spectrum.hpp"

using namespace slespec;

namespace {
Rational frac(long long p, long long q) { return make_rational(p, q); }
}  // namespace

TEST(GammaRoots, Examples) {
    EXPECT_EQ(gamma_roots({0, 2}).gamma_minus, 0);
    const auto r = gamma_roots({2, 6});
    EXPECT_NEAR(r.gamma_minus, 2.0 / 3, 1e-15);
    ASSERT_TRUE(r.gamma_plus);
    EXPECT_NEAR(*r.gamma_plus, 1.0, 1e-15);
    EXPECT_NEAR(gamma_roots({-2, 8.0 / 3}).gamma_minus, -0.5, 1e-15);
}

TEST(GammaRoots, KappaZeroLimit) {
    const auto r = gamma_roots({1.5, 0});
    EXPECT_EQ(r.gamma_minus, 0.75);
    EXPECT_FALSE(r.gamma_plus);
    // The rationalized root is continuous as kappa -> 0.
    EXPECT_NEAR(gamma_roots({1.5, 1e-12}).gamma_minus, 0.75, 1e-10);
}

TEST(GammaRoots, Errors) {
    EXPECT_THROW(gamma_roots({3, 6}), NoRealGamma);  // (6+4)^2 / 48 < 3
    EXPECT_THROW(gamma_roots({1, -1}), InvalidParameter);
}

TEST(GammaRoots, RootsSolveTheQuadratic) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> kd(0.01, 10), qd(-10, 2);
    for (int t = 0; t < 200; ++t) {
        const double k = kd(rng), q = qd(rng);
        const auto r = gamma_roots({q, k});
        ASSERT_TRUE(r.gamma_plus);
        EXPECT_LE(r.gamma_minus, *r.gamma_plus);
        EXPECT_NEAR(q_of_gamma(r.gamma_minus, k), q, 1e-9 * std::max(1.0, std::abs(q)));
        EXPECT_NEAR(q_of_gamma(*r.gamma_plus, k), q, 1e-9 * std::max(1.0, std::abs(q)) * (1 + k));
    }
}

TEST(QOfGamma, Examples) {
    EXPECT_EQ(q_of_gamma(1.0, 6.0), 2.0);
    EXPECT_EQ(q_of_gamma(0.0, 3.0), 0.0);
    EXPECT_EQ(q_of_gamma(frac(1, 2), Rational(0)), Rational(1));
}

TEST(Transition, Examples) {
    EXPECT_NEAR(q_transition(0), 1.0 / 3, 1e-15);
    EXPECT_NEAR(q_transition(2), 1 - std::sqrt(76.0) / 16, 1e-14);
    EXPECT_NEAR(q_transition(6), 1 - std::sqrt(204.0) / 48, 1e-14);
    EXPECT_EQ(q_tip(0), -1);
    EXPECT_NEAR(q_tip(8.0 / 3), -2, 1e-15);
    EXPECT_EQ(q_tip(8), -4);
}

TEST(Transition, TipGivesGammaMinusOneHalf) {
    for (double k : {0.0, 0.5, 1.0, 8.0 / 3, 6.0, 10.0})
        EXPECT_NEAR(gamma_roots({q_tip(k), k}).gamma_minus, -0.5, 1e-14);
}

TEST(BetaSpectrum, Examples) {
    auto v = beta_spectrum({0, 4});
    EXPECT_EQ(v.beta, 0);
    EXPECT_EQ(v.branch, Branch::Bulk);
    v = beta_spectrum({2, 2});
    EXPECT_NEAR(v.beta, 4, 1e-14);
    EXPECT_EQ(v.branch, Branch::Derivative);
    EXPECT_NEAR(beta_spectrum({2, 6}).beta, 3, 1e-14);
    const auto tip = beta_spectrum({-2, 8.0 / 3});
    EXPECT_NEAR(tip.beta, 1.0 / 3, 1e-12);
    const double g = -0.5, k = 8.0 / 3;
    EXPECT_NEAR(k * g * g / 2, 1.0 / 3, 1e-15);
    EXPECT_NEAR(k * g * g / 2 - 2 * g - 1, 1.0 / 3, 1e-15);
}

TEST(BetaSpectrum, DerivativeBranchWithoutRealGamma) {
    const auto v = beta_spectrum({5, 6});
    EXPECT_EQ(v.branch, Branch::Derivative);
    EXPECT_FALSE(v.gamma_minus);
    EXPECT_NEAR(v.beta, 15 - 0.5 - 0.5 * std::sqrt(61.0), 1e-13);
}

TEST(BetaSpectrum, ContinuityAcrossTransitions) {
    const double eps = 1e-6;
    for (double k : {0.5, 1.0, 2.0, 4.0, 6.0, 8.0}) {
        const double Q = q_transition(k), T = q_tip(k);
        EXPECT_LT(std::abs(beta_spectrum({Q - eps, k}).beta - beta_spectrum({Q + eps, k}).beta), 1e-4);
        EXPECT_LT(std::abs(beta_spectrum({T - eps, k}).beta - beta_spectrum({T + eps, k}).beta), 1e-4);
        EXPECT_EQ(beta_spectrum({Q + eps, k}).branch, Branch::Derivative);
        EXPECT_EQ(beta_spectrum({Q - eps, k}).branch, Branch::Bulk);
        EXPECT_EQ(beta_spectrum({T - eps, k}).branch, Branch::Tip);
    }
}

TEST(BetaSpectrum, ZeroAtQZero) {
    for (double k : {0.0, 0.1, 1.0, 4.0, 7.5, 100.0}) EXPECT_EQ(beta_spectrum({0, k}).beta, 0);
}

TEST(BetaSpectrum, NonNegativeOnGrid) {
    for (int a = 0; a <= 100; ++a)
        for (int b = 1; b <= 50; ++b) {
            const double q = -10 + 0.2 * a, k = 0.2 * b;
            EXPECT_GE(beta_spectrum({q, k}).beta, -1e-12) << "q=" << q << " kappa=" << k;
        }
}

TEST(Curves, Examples) {
    auto p = curve_point(CurveParams<Rational>{0, Rational(1)});
    EXPECT_EQ(p.q, 2);
    EXPECT_EQ(p.kappa, 6);
    p = curve_point(CurveParams<Rational>{1, Rational(1)});
    EXPECT_EQ(p.q, 2);
    EXPECT_EQ(p.kappa, 2);
    EXPECT_THROW(curve_point(CurveParams<Rational>{0, frac(1, 4)}), InvalidParameter);
    EXPECT_EQ(curve_denominator(CurveParams<Rational>{0, frac(1, 4)}), frac(-1, 8));
    EXPECT_THROW(curve_point(CurveParams<double>{1, -0.5}), InvalidParameter);
    EXPECT_THROW(curve_point(CurveParams<double>{-1, 1.0}), InvalidParameter);
}

TEST(Curves, ExactConsistencyWithQuadratic) {
    for (int M = 0; M <= 10; ++M)
        for (int num = -3 * M; num <= 40; ++num) {
            const CurveParams<Rational> c{M, frac(num, 9)};
            if (!is_valid_curve(c)) continue;
            const auto p = curve_point(c);
            EXPECT_EQ(q_of_gamma(c.gamma, p.kappa), p.q);
        }
}

TEST(Curves, GammaTransition) {
    EXPECT_NEAR(gamma_transition(0), 1.0 / 8, 1e-16);
    EXPECT_NEAR(gamma_transition(1), (std::sqrt(57.0) - 5) / 16, 1e-15);
    EXPECT_NEAR(gamma_transition(1), 0.159364, 1e-6);
    EXPECT_NEAR(gamma_transition(2), (std::sqrt(185.0) - 11) / 16, 1e-15);
}

TEST(EigenClosed, Examples) {
    const CurveParams<Rational> c{1, Rational(1)};
    EXPECT_EQ(eigen_beta_closed(c, 0), 1);
    EXPECT_EQ(eigen_beta_closed(c, 1), 2);
    EXPECT_EQ(eigen_beta_closed(c, 2), 4);
    EXPECT_THROW(eigen_beta_closed(c, 3), InvalidParameter);
    EXPECT_THROW(eigen_beta_closed(c, -1), InvalidParameter);
}

TEST(EigenClosed, EndpointSpecializations) {
    std::mt19937_64 rng(11);
    for (int M = 0; M <= 10; ++M) {
        std::uniform_real_distribution<double> gd(-M / 3.0, 5);
        int tested = 0;
        while (tested < 20) {
            const CurveParams<double> c{M, gd(rng)};
            if (!is_valid_curve(c)) continue;
            const auto p = curve_point(c);
            const double scale = std::max(1.0, std::abs(eigen_beta_closed(c, 0)));
            EXPECT_NEAR(eigen_beta_closed(c, 0), p.kappa * c.gamma * c.gamma / 2, 1e-12 * scale);
            const double top = eigen_beta_closed(c, 2 * M);
            // The surd form needs sqrt(1 + 2 q kappa) = kappa (M + gamma) - 1.
            if (p.kappa * (M + c.gamma) >= 1) {
                EXPECT_NEAR(top, 3 * p.q - 0.5 - 0.5 * std::sqrt(1 + 2 * p.q * p.kappa),
                            1e-12 * std::max(1.0, std::abs(top)));
            }
            EXPECT_NEAR(top, 3 * p.q - p.kappa * (M + c.gamma) / 2, 1e-12 * std::max(1.0, std::abs(top)));
            ++tested;
        }
    }
}

TEST(EigenClosed, CrossingAtGammaM) {
    // beta_{2M} - beta_0 has the sign of 8g^2 + (6M-1)g - M, whose positive root is gamma_M.
    for (int M = 1; M <= 10; ++M) {
        for (int num = -3 * M; num <= 60; ++num) {
            const CurveParams<Rational> c{M, frac(num, 12)};
            if (!is_valid_curve(c)) continue;
            const Rational g = c.gamma;
            const Rational diff = eigen_beta_closed(c, 2 * M) - eigen_beta_closed(c, 0);
            const Rational poly = 8 * g * g + (6 * M - 1) * g - M;
            EXPECT_EQ(diff, M * poly / curve_denominator(c));
        }
        const double gm = gamma_transition(M);
        EXPECT_NEAR(8 * gm * gm + (6 * M - 1) * gm - M, 0, 1e-12);
        const CurveParams<double> c{M, gm};
        EXPECT_NEAR(eigen_beta_closed(c, 0), eigen_beta_closed(c, 2 * M), 1e-12);
    }
}

TEST(BetaTildeOnCurve, Examples) {
    EXPECT_NEAR(beta_tilde_on_curve({1, 1.0}), 4, 1e-14);
    const double k = 2 * 1.3 / 1.12;
    EXPECT_NEAR(beta_tilde_on_curve({1, 0.1}), k * 0.01 / 2, 1e-14);
    EXPECT_NEAR(beta_tilde_on_curve({0, 1.0}), 3, 1e-14);
}

TEST(BetaTildeOnCurve, IsMaxOverEvenL) {
    for (int M = 0; M <= 6; ++M)
        for (double g = -M / 3.0 + 1e-3; g < 4; g += 0.037) {
            const CurveParams<double> c{M, g};
            if (!is_valid_curve(c)) continue;
            double best = -1e300;
            for (int l = 0; l <= 2 * M; l += 2) best = std::max(best, eigen_beta_closed(c, l));
            EXPECT_NEAR(beta_tilde_on_curve(c), best, 1e-12 * std::max(1.0, std::abs(best)));
        }
}

TEST(BetaTildeOnCurve, MatchesBulkWhereGammaIsTheMinusRoot) {
    int checked = 0;
    for (int M = 0; M <= 6; ++M)
        for (double g = -M / 3.0 + 1e-3; g < 4; g += 0.013) {
            const CurveParams<double> c{M, g};
            if (!is_valid_curve(c) || g > gamma_transition(M)) continue;
            const auto p = curve_point(c);
            const auto v = beta_spectrum({p.q, p.kappa});
            if (v.branch != Branch::Bulk || !v.gamma_minus) continue;
            if (std::abs(*v.gamma_minus - g) > 1e-9) continue;
            EXPECT_NEAR(beta_tilde_on_curve(c), v.beta, 1e-12 * std::max(1.0, v.beta));
            ++checked;
        }
    EXPECT_GT(checked, 20);
}

TEST(BetaFromTilde, IntegrabilityShift) {
    EXPECT_EQ(beta_from_tilde(2.0, 0.3), 2.0);
    EXPECT_NEAR(beta_from_tilde(1.0 / 3, -0.5), 1.0 / 3, 1e-15);
    EXPECT_NEAR(beta_from_tilde(1.0, -0.6), 1.0 + 1.2 - 1, 1e-15);
}
