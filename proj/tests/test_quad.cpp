#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <boost/math/special_functions/bessel.hpp>
#include <gtest/gtest.h>

#include "decofringe/fringe.hpp"
#include "decofringe/quad.hpp"

using namespace decofringe;
using quad::Envelope;
using quad::QuadratureConfig;

namespace {

double one_minus_a_k1(double a) { return 1.0 - a * boost::math::cyl_bessel_k(1, a); }

auto w_family(double a)
{
    return [a](double u) { return 2.0 * std::pow(std::sin(0.5 * a * u), 2) * std::pow(u * u + 1.0, -1.5); };
}

} // namespace

TEST(QuadratureConfig, RejectsBadTolerances)
{
    EXPECT_THROW((QuadratureConfig{0.0, 1e-8, 2000, 1e-10}.validate()), std::invalid_argument);
    EXPECT_THROW((QuadratureConfig{1e-10, -1.0, 2000, 1e-10}.validate()), std::invalid_argument);
    EXPECT_THROW((QuadratureConfig{1e-10, 1e-8, 9, 1e-10}.validate()), std::invalid_argument);
    EXPECT_NO_THROW(QuadratureConfig{}.validate());
}

TEST(IntegrateAdaptive, PolynomialAndSine)
{
    const auto r1 = quad::integrate_adaptive([](double x) { return x * x; }, 0.0, 1.0);
    EXPECT_TRUE(r1.converged);
    EXPECT_NEAR(r1.value, 1.0 / 3.0, 1e-12);
    const auto r2 = quad::integrate_adaptive([](double x) { return std::sin(x); }, 0.0, std::numbers::pi);
    EXPECT_NEAR(r2.value, 2.0, 1e-10);
    EXPECT_LE(r2.error_estimate, QuadratureConfig{}.target(r2.value));
}

TEST(IntegrateAdaptive, BesselIdentityOnLongFiniteInterval)
{
    const double u_max = 1e4;
    auto r = quad::integrate_adaptive(w_family(1.0), 0.0, u_max, {1e-10, 1e-10, 20000, 1e-10});
    ASSERT_TRUE(r.converged);
    const double tail = quad::envelope_tail_bound({3.0, 2.0}, u_max);
    EXPECT_NEAR(r.value, 0.3980928, 1e-7);
    EXPECT_NEAR(r.value, one_minus_a_k1(1.0), 1e-7 + tail);
}

TEST(IntegrateAdaptive, ErrorsAndFlags)
{
    EXPECT_THROW(quad::integrate_adaptive([](double) { return 1.0; }, 1.0, 0.0), std::invalid_argument);
    EXPECT_THROW(quad::integrate_adaptive([](double x) { return 1.0 / x; }, 0.0, 1.0), std::domain_error);
    // a jump cannot be resolved to 1e-15 with 10 subdivisions
    const auto r = quad::integrate_adaptive([](double x) { return x < 0.3 ? 0.0 : 1.0; }, 0.0, 1.0,
                                            {1e-15, 1e-15, 10, 1e-10});
    EXPECT_FALSE(r.converged);
}

TEST(IntegrateAdaptive, Deterministic)
{
    auto f = [](double x) { return std::exp(-x) * std::cos(40.0 * x); };
    const auto a = quad::integrate_adaptive(f, 0.0, 3.0);
    const auto b = quad::integrate_adaptive(f, 0.0, 3.0);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.evaluations, b.evaluations);
}

TEST(SemiInfiniteOscillatory, ZeroIntegrand)
{
    const auto r = quad::integrate_semi_infinite_oscillatory([](double) { return 0.0; }, 1.0, {3.0, 0.0});
    EXPECT_EQ(r.value, 0.0);
    EXPECT_EQ(r.error_estimate, 0.0);
}

TEST(SemiInfiniteOscillatory, BesselIdentityAtTwo)
{
    const auto r = quad::integrate_semi_infinite_oscillatory(w_family(2.0), 2.0, {3.0, 2.0});
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value, 0.7202682, 1e-7);
    EXPECT_NEAR(r.value, one_minus_a_k1(2.0), 1e-7);
}

TEST(SemiInfiniteOscillatory, TailBoundIsCertified)
{
    const Envelope env{3.0, 4.0};
    const double u = quad::envelope_truncation_point(env, 1e-10);
    EXPECT_LE(quad::envelope_tail_bound(env, u), 1e-10);
    EXPECT_GT(quad::envelope_tail_bound(env, 0.999 * u), 1e-10);
    // 4C(1 - U / sqrt(1 + U^2)) for C = 1
    EXPECT_NEAR(quad::envelope_tail_bound(env, 3.0), 4.0 * (1.0 - 3.0 / std::sqrt(10.0)), 1e-15);
    EXPECT_THROW(quad::integrate_semi_infinite_oscillatory([](double) { return 0.0; }, 1.0, {2.0, 1.0}),
                 std::invalid_argument);
}

TEST(SemiInfiniteOscillatory, DecoherenceIntegrandMatchesRiemannSum)
{
    // default field: m = 0.05, dx = 20, t = 20
    const double m = 0.05, g = 0.15, a = m * 20.0, b = m * 20.0;
    auto f = [&](double u) {
        const double s = std::sqrt(u * u + 1.0);
        return 4.0 * std::pow(std::sin(0.5 * a * u), 2) * std::pow(std::sin(0.5 * b * s), 2) / (s * s * s);
    };
    const auto r = quad::integrate_semi_infinite_oscillatory(f, std::max(a, b), {3.0, 4.0});
    const double pref = g * g / (std::numbers::pi * m * m);

    // midpoint sum, 1e7 points on [0, 2000], plus the analytically bounded tail
    constexpr int n = 10'000'000;
    const double h = 2000.0 / n;
    quad::detail::CompensatedSum s;
    for (int i = 0; i < n; ++i)
        s.add(f((i + 0.5) * h));
    const double riemann = pref * s.value() * h;
    EXPECT_NEAR(pref * r.value / riemann, 1.0, 1e-5);
}

TEST(SemiInfiniteOscillatory, ErrorEstimateHonestOnCorpus)
{
    QuadratureConfig cfg;
    int honest = 0, total = 0;
    for (int k = 0; k < 20; ++k) {
        const double a = 0.1 + 19.9 * k / 19.0;
        const auto r = quad::integrate_semi_infinite_oscillatory(w_family(a), a, {3.0, 2.0}, cfg);
        ++total;
        honest += std::abs(r.value - one_minus_a_k1(a)) <= 2.0 * r.error_estimate;
    }
    EXPECT_GE(honest, 19) << honest << " of " << total;
}

TEST(SemiInfiniteOscillatory, Linearity)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 10; ++k) {
        const double al = u(rng), be = u(rng);
        auto f = w_family(1.3);
        auto g = w_family(3.1);
        auto h = [&](double x) { return al * f(x) + be * g(x); };
        const auto rf = quad::integrate_semi_infinite_oscillatory(f, 3.1, {3.0, 2.0});
        const auto rg = quad::integrate_semi_infinite_oscillatory(g, 3.1, {3.0, 2.0});
        const auto rh = quad::integrate_semi_infinite_oscillatory(h, 3.1, {3.0, 2.0 * (std::abs(al) + std::abs(be))});
        const double err = rh.error_estimate + std::abs(al) * rf.error_estimate + std::abs(be) * rg.error_estimate;
        EXPECT_NEAR(rh.value, al * rf.value + be * rg.value, err);
    }
}

TEST(SemiInfiniteOscillatory, RefinementNeverWorsens)
{
    for (double a : {1.0, 2.0}) {
        // the integral over [0, U]: the envelope tail is exact up to an O(1/U^3) cosine remainder
        const double u = quad::envelope_truncation_point({3.0, 2.0}, 1e-10);
        const double truncated = one_minus_a_k1(a) - (1.0 - u / std::sqrt(1.0 + u * u));
        double prev = INFINITY;
        for (double rel : {1e-6, 5e-7, 2.5e-7, 1.25e-7}) {
            const QuadratureConfig cfg{1e-10, rel, 2000, 1e-10};
            const auto r = quad::integrate_semi_infinite_oscillatory(w_family(a), a, {3.0, 2.0}, cfg);
            const double err = std::abs(r.value - truncated);
            EXPECT_LE(err, prev + 1e-15);
            prev = err;
        }
    }
}

TEST(Gaussian2d, NormalizationAndOddSymmetry)
{
    const auto r = quad::integrate_2d_gaussian_weighted(
        [](double x, double y) { return std::complex<double>(std::exp(-0.5 * (x * x + y * y))); });
    EXPECT_TRUE(r.converged);
    EXPECT_NEAR(r.value.real(), 2.0 * std::numbers::pi, 1e-10);
    const auto odd = quad::integrate_2d_gaussian_weighted(
        [](double x, double y) { return std::complex<double>(std::exp(-0.5 * (x * x + y * y)) * (x - y)); });
    EXPECT_NEAR(std::abs(odd.value), 0.0, 1e-12);
}

TEST(Gaussian2d, PacketIntegrandReproducesFreeDensity)
{
    // alpha = beta = +, W = 0: |int a(y) dy|^2 A^2 / (2 pi^(3/2) tau) = A^2 |psi+(x)|^2
    const double tau = 20.0, L = 10.0, x = 0.0;
    auto amp = [&](double y) {
        const double d = x - L - y;
        return std::exp(std::complex<double>(-0.5 * y * y, d * d / (2.0 * tau)));
    };
    const auto r = quad::integrate_2d_gaussian_weighted(
        [&](double y1, double y2) { return amp(y1) * std::conj(amp(y2)); });
    const double a2 = normalization_sq(L);
    const double got = a2 * r.value.real() / (2.0 * std::pow(std::numbers::pi, 1.5) * tau);
    const double want = a2 * std::norm(wavepacket(x, tau, +1, L));
    EXPECT_NEAR(got / want, 1.0, 1e-8);
}

TEST(DifferenceKernel, MatchesGenericTensorRule)
{
    auto a = [](double x) { return std::exp(std::complex<double>(-0.5 * x * x, 0.1 * x)); };
    auto b = [](double x) { return std::exp(std::complex<double>(-0.5 * x * x, -0.2 * x * x)); };
    auto k = [](double d) { return std::exp(-0.05 * d * d); };
    const auto sep = quad::integrate_2d_difference_kernel(a, b, k);
    const auto gen = quad::integrate_2d_gaussian_weighted(
        [&](double x, double y) { return a(x) * b(y) * k(x - y); });
    EXPECT_TRUE(sep.converged);
    EXPECT_NEAR(std::abs(sep.value - gen.value), 0.0, 1e-9);
    auto bad = [](double, int) { return std::vector<double>(3); };
    EXPECT_THROW(quad::integrate_2d_difference_table(a, b, bad), std::logic_error);
}
