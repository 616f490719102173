#include <cmath>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <gtest/gtest.h>

#include "decofringe/specfun.hpp"

namespace sf = decofringe::specfun;
using sf::BesselOrder;

namespace {

// K_nu(z) = int_0^inf exp(-z cosh t) cosh(nu t) dt
double k_integral(int nu, double z)
{
    boost::math::quadrature::exp_sinh<double> q;
    return q.integrate([&](double t) {
        const double e = z * std::cosh(t);
        // past this point the weight underflows and cosh(nu t) would overflow
        return e > 745.0 ? 0.0 : std::exp(-e) * std::cosh(nu * t);
    });
}

std::vector<double> log_grid(double lo, double hi, int n)
{
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i)
        out[i] = lo * std::pow(hi / lo, double(i) / (n - 1));
    return out;
}

} // namespace

TEST(BesselOrder, OnlyZeroOneTwoConstructible)
{
    EXPECT_EQ(BesselOrder::from_int(2), BesselOrder::two());
    EXPECT_THROW(BesselOrder::from_int(3), std::domain_error);
    EXPECT_THROW(BesselOrder::from_int(-1), std::domain_error);
}

TEST(BesselK, K1AtOneMatchesIntegralOracle)
{
    EXPECT_NEAR(sf::bessel_k(BesselOrder::one(), 1.0), 0.6019072302, 1e-9);
    EXPECT_NEAR(sf::bessel_k(BesselOrder::one(), 1.0), k_integral(1, 1.0), 1e-13);
}

TEST(BesselK, SmallArgumentZK1TendsToOne)
{
    EXPECT_NEAR(1e-6 * sf::bessel_k(BesselOrder::one(), 1e-6), 1.0, 1e-9);
    EXPECT_NEAR(sf::z_bessel_k1(1e-6), 1.0, 1e-9);
}

TEST(BesselK, AgreesWithBoostOverFullRange)
{
    for (int nu = 0; nu <= 2; ++nu)
        for (double z : log_grid(1e-8, 700.0, 400)) {
            const double ref = boost::math::cyl_bessel_k(nu, z);
            const double got = sf::bessel_k(BesselOrder::from_int(nu), z);
            EXPECT_NEAR(got / ref, 1.0, 1e-10) << "nu=" << nu << " z=" << z;
        }
}

TEST(BesselK, RandomPointsAgreeWithIntegralOracle)
{
    std::uint64_t s = 12345;
    for (int i = 0; i < 100; ++i) {
        s = s * 6364136223846793005ULL + 1442695040888963407ULL;
        const double z = 1e-3 * std::pow(5e4, double(s >> 11) * 0x1.0p-53);
        for (int nu = 0; nu <= 2; ++nu) {
            const double ref = k_integral(nu, z);
            EXPECT_NEAR(sf::bessel_k(BesselOrder::from_int(nu), z) / ref, 1.0, 1e-9) << "z=" << z;
        }
    }
}

TEST(BesselK, RecurrenceIdentity)
{
    for (double z : log_grid(1e-4, 100.0, 1000)) {
        const double k0 = sf::bessel_k(BesselOrder::zero(), z);
        const double k1 = sf::bessel_k(BesselOrder::one(), z);
        const double k2 = sf::bessel_k(BesselOrder::two(), z);
        EXPECT_LE(std::abs(k2 - k0 - 2.0 / z * k1), 1e-12 * k2) << z;
    }
}

TEST(BesselK, StrictlyDecreasing)
{
    const auto zs = log_grid(1e-3, 600.0, 500);
    for (int nu = 0; nu <= 2; ++nu)
        for (std::size_t i = 1; i < zs.size(); ++i)
            EXPECT_LT(sf::bessel_k(BesselOrder::from_int(nu), zs[i]),
                      sf::bessel_k(BesselOrder::from_int(nu), zs[i - 1]));
}

TEST(BesselK, BranchesAgreeAtSwitchPoint)
{
    // series and continued fraction evaluated on either side of z = 2
    for (int nu = 0; nu <= 2; ++nu) {
        const double below = sf::bessel_k(BesselOrder::from_int(nu), std::nextafter(2.0, 0.0));
        const double above = sf::bessel_k(BesselOrder::from_int(nu), std::nextafter(2.0, 3.0));
        EXPECT_NEAR(below / above, 1.0, 1e-9);
    }
}

TEST(BesselK, DomainAndRangeErrors)
{
    EXPECT_THROW(sf::bessel_k(BesselOrder::zero(), 0.0), std::domain_error);
    EXPECT_THROW(sf::bessel_k(BesselOrder::one(), -1.0), std::domain_error);
    EXPECT_THROW(sf::bessel_k(BesselOrder::zero(), std::nan("")), std::domain_error);
    EXPECT_THROW(sf::bessel_k(BesselOrder::zero(), 800.0), std::underflow_error);
    EXPECT_THROW(sf::bessel_k(BesselOrder::two(), 1e-160), std::overflow_error);
}

TEST(BesselKScaled, KnownValues)
{
    EXPECT_NEAR(sf::bessel_k_scaled(BesselOrder::one(), 1.0), 1.636153486, 1e-8);
    const double z = 1e4;
    EXPECT_NEAR(sf::bessel_k_scaled(BesselOrder::zero(), z) / std::sqrt(M_PI / (2 * z)), 1.0, 1e-4);
    EXPECT_NEAR(sf::bessel_k_scaled(BesselOrder::two(), 5.0) / (std::exp(5.0) * sf::bessel_k(BesselOrder::two(), 5.0)),
                1.0, 1e-12);
    EXPECT_TRUE(std::isfinite(sf::bessel_k_scaled(BesselOrder::two(), 1e8)));
    EXPECT_THROW(sf::bessel_k_scaled(BesselOrder::one(), 0.0), std::domain_error);
}

TEST(BesselCombinations, CancellationFreeForms)
{
    for (double z : log_grid(1e-6, 60.0, 200)) {
        const double k0 = boost::math::cyl_bessel_k(0, z);
        const double k1 = boost::math::cyl_bessel_k(1, z);
        const double k2 = boost::math::cyl_bessel_k(2, z);
        const double ref1 = 1.0 - z * k1;
        const double ref2 = 1.0 - 0.5 * z * z * k2;
        // the references themselves cancel for small z; compare on an absolute scale there
        EXPECT_NEAR(sf::one_minus_z_k1(z), ref1, 1e-13 + 1e-11 * std::abs(ref1)) << z;
        EXPECT_NEAR(sf::one_minus_half_z2_k2(z), ref2, 1e-13 + 1e-11 * std::abs(ref2)) << z;
        EXPECT_NEAR(sf::z_bessel_k0(z), z * k0, 1e-11 * z * k0);
    }
    // leading small-z behaviour: 1 - zK1 ~ (z^2/2) ln(1/z), positive
    EXPECT_GT(sf::one_minus_z_k1(1e-8), 0.0);
    EXPECT_LT(sf::one_minus_z_k1(1e-8), 1e-14);
    EXPECT_EQ(sf::one_minus_z_k1(0.0), 0.0);
}
