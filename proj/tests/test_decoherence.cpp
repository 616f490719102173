#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/special_functions/bessel.hpp>
#include <gtest/gtest.h>

#include "decofringe/decoherence.hpp"

using namespace decofringe;

namespace {

// Midpoint sum of the W integrand on [0, 2000], 1e7 points.
double w_riemann(double dx, double t, double m, double g)
{
    const double a = m * std::abs(dx), b = m * t;
    constexpr int n = 10'000'000;
    const double h = 2000.0 / n;
    quad::detail::CompensatedSum s;
    for (int i = 0; i < n; ++i) {
        const double u = (i + 0.5) * h;
        const double s2 = u * u + 1.0;
        s.add((1.0 - std::cos(a * u)) * (1.0 - std::cos(b * std::sqrt(s2))) / (s2 * std::sqrt(s2)));
    }
    return g * g / (std::numbers::pi * m * m) * s.value() * h;
}

} // namespace

TEST(WExact, VanishesWithoutSeparationOrTime)
{
    EXPECT_EQ(w_exact(0.0, 20.0, 0.05, 0.15).w, 0.0);
    EXPECT_EQ(w_exact(20.0, 0.0, 0.05, 0.15).w, 0.0);
    EXPECT_EQ(w_exact(20.0, 20.0, 0.05, 0.0).w, 0.0);
    EXPECT_EQ(w_exact(20.0, 20.0, 0.05, 0.0).grad_g, 0.0);
}

TEST(WExact, DefaultFieldValueMatchesRiemannSum)
{
    const auto w = w_exact(20.0, 20.0, 0.05, 0.15);
    EXPECT_EQ(w.method, WMethod::ExactIntegral);
    EXPECT_NEAR(w.w / w_riemann(20.0, 20.0, 0.05, 0.15), 1.0, 1e-5);
    EXPECT_GT(w.error_estimate, 0.0);
    EXPECT_LT(w.error_estimate, 1e-8);
}

TEST(WExact, EvenInSeparation)
{
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.1, 40.0);
    for (int i = 0; i < 20; ++i) {
        const double dx = u(rng), t = u(rng);
        EXPECT_NEAR(w_exact(dx, t, 0.05, 0.15).w, w_exact(-dx, t, 0.05, 0.15).w, 1e-12);
    }
}

TEST(WExact, QuadraticInCoupling)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> c(0.1, 10.0);
    const double base = w_exact(20.0, 20.0, 0.05, 0.15).w;
    for (int i = 0; i < 20; ++i) {
        const double k = c(rng);
        EXPECT_NEAR(w_exact(20.0, 20.0, 0.05, 0.15 * k).w / (k * k * base), 1.0, 1e-12);
    }
}

TEST(WExact, NonNegativeAndBelowUpperBound)
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> um(0.01, 0.2), ug(0.01, 1.0), ud(-60.0, 60.0), ut(0.0, 200.0);
    for (int i = 0; i < 100; ++i) {
        const double m = um(rng), g = ug(rng), dx = ud(rng), t = ut(rng);
        const double w = w_exact(dx, t, m, g, {}, Gradient::Skip).w;
        EXPECT_GE(w, 0.0);
        EXPECT_LE(w, w_upper_bound(dx, m, g) + 1e-9) << m << ' ' << g << ' ' << dx << ' ' << t;
    }
}

TEST(WExact, SmallMassFloorConverges)
{
    const auto w = w_exact(20.0, 20.0, 1e-4, 0.15, {}, Gradient::Skip);
    EXPECT_GT(w.w, 0.0);
    EXPECT_TRUE(std::isfinite(w.w));
}

TEST(WExact, DomainErrors)
{
    EXPECT_THROW(w_exact(1.0, 1.0, 0.0, 0.1), std::domain_error);
    EXPECT_THROW(w_exact(1.0, 1.0, 0.1, -0.1), std::domain_error);
    EXPECT_THROW(w_exact(1.0, -1.0, 0.1, 0.1), std::domain_error);
    EXPECT_THROW(w_exact(std::nan(""), 1.0, 0.1, 0.1), std::invalid_argument);
}

TEST(WExact, NonConvergenceIsReported)
{
    EXPECT_THROW(w_exact(20.0, 20.0, 0.05, 0.15, {1e-15, 1e-15, 10, 1e-10}), NumericalError);
}

TEST(WExactProgression, MatchesScalarEvaluation)
{
    const auto batch = w_exact_progression(-3.0, 0.25, 120, 20.0, 0.05, 0.15);
    ASSERT_EQ(batch.size(), 120u);
    for (int k = 0; k < 120; k += 7) {
        const double dx = -3.0 + 0.25 * k;
        const double ref = w_exact(dx, 20.0, 0.05, 0.15, {}, Gradient::Skip).w;
        EXPECT_NEAR(batch[k].w, ref, 1e-10 * std::max(ref, 1e-6)) << dx;
    }
}

TEST(WAsymptotic, LimitsAndClosedForm)
{
    const double m = 0.05;
    const double pref = 0.15 * 0.15 / (std::numbers::pi * m * m);
    const auto far = w_asymptotic(25.0 / m, m, 0.15);
    EXPECT_NEAR(far.w / pref, 1.0, 1e-10);
    EXPECT_EQ(far.method, WMethod::AsymptoticBessel);
    EXPECT_LE(w_asymptotic(0.5e-6 / m, m, 0.15).w, 1e-9 * pref);
    EXPECT_NEAR(w_asymptotic(25.0 / m, m, 1.5 * m).w, 2.25 / std::numbers::pi, 1e-8);

    // Bessel-form gradient against Boost
    const double L = 10.0, z = 2.0 * m * L;
    const auto a = w_asymptotic(L, m, 0.15);
    const double ref = -2.0 * pref / m * (1.0 - 2.0 * (m * L) * (m * L) * boost::math::cyl_bessel_k(2, z));
    EXPECT_NEAR(a.grad_m / ref, 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(a.grad_g, 2.0 * a.w / 0.15);
}

TEST(WUpperBound, Limits)
{
    EXPECT_EQ(w_upper_bound(0.0, 0.05, 0.15), 0.0);
    const double m = 0.05, g = 0.15;
    EXPECT_NEAR(w_upper_bound(50.0 / m, m, g) / (2 * g * g / (std::numbers::pi * m * m)), 1.0, 1e-10);
    EXPECT_THROW(w_upper_bound(1.0, -0.05, g), std::domain_error);
}

TEST(GradCheck, AnalyticGradientsAgreeWithFiniteDifferences)
{
    const ExperimentParams p{0.05, 0.15, 10.0, 20.0, 20.0};
    const auto r = grad_check(p, 20.0, 20.0, 1e-4);
    EXPECT_LE(r.exact_g.rel_error, 1e-6);
    EXPECT_LE(r.exact_m.rel_error, 1e-5);
    EXPECT_LE(r.asymptotic_g.rel_error, 1e-6);
    EXPECT_LE(r.asymptotic_m.rel_error, 1e-5);
    EXPECT_LE(r.g_scaling_residual, 1e-14);
    EXPECT_THROW(grad_check(p, 20.0, 20.0, 1e-2), std::invalid_argument);
}
