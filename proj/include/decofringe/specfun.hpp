#pragma once

// Modified Bessel functions of the second kind for integer orders 0, 1, 2.
//
// K0 and K1 use the ascending power series for z <= 2 and the Temme/Steed
// continued fraction (which yields K0 and K1 together) for z > 2. K2 comes
// from the recurrence K2 = K0 + (2/z) K1.

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>

namespace decofringe::specfun {

class BesselOrder {
public:
    static constexpr BesselOrder zero() { return BesselOrder{0}; }
    static constexpr BesselOrder one() { return BesselOrder{1}; }
    static constexpr BesselOrder two() { return BesselOrder{2}; }

    static BesselOrder from_int(int nu)
    {
        if (nu < 0 || nu > 2)
            throw std::domain_error("BesselOrder: only orders 0, 1, 2 are supported, got " +
                                    std::to_string(nu));
        return BesselOrder{nu};
    }

    constexpr int value() const { return nu_; }
    friend constexpr bool operator==(BesselOrder, BesselOrder) = default;

private:
    constexpr explicit BesselOrder(int nu) : nu_(nu) {}
    int nu_;
};

namespace detail {

inline constexpr double series_branch_limit = 2.0;

struct KPair {
    double k0;
    double k1;
};

// K0, K1 from the ascending series; valid and accurate for 0 < z <= 2.
inline KPair series_k01(double z)
{
    constexpr double euler_gamma = std::numbers::egamma;
    const double q = 0.25 * z * z;
    const double log_half_z = std::log(0.5 * z);

    // term_k = q^k / (k!)^2 for K0/I0 and q^k / (k! (k+1)!) for K1/I1
    double t0 = 1.0;
    double t1 = 1.0;
    double i0 = 1.0;
    double i1 = 1.0;
    double h = 0.0; // harmonic number H_k
    double sum0 = 0.0;
    // psi(k+1) + psi(k+2) = -2 gamma + 2 H_k + 1/(k+1)
    double sum1 = -2.0 * euler_gamma + 1.0;
    for (int k = 1; k < 200; ++k) {
        t0 *= q / (double(k) * double(k));
        t1 *= q / (double(k) * double(k + 1));
        h += 1.0 / k;
        i0 += t0;
        i1 += t1;
        const double d0 = t0 * h;
        const double d1 = t1 * (-2.0 * euler_gamma + 2.0 * h + 1.0 / (k + 1));
        sum0 += d0;
        sum1 += d1;
        if (t0 < 1e-18 * i0 && t1 < 1e-18 * i1)
            break;
    }
    i1 *= 0.5 * z;
    KPair r;
    r.k0 = -(log_half_z + euler_gamma) * i0 + sum0;
    r.k1 = 1.0 / z + log_half_z * i1 - 0.25 * z * sum1;
    return r;
}

// e^z K0(z), e^z K1(z) from the Steed/Temme continued fraction; z > 2.
inline KPair scaled_cf_k01(double z)
{
    constexpr double eps = 1e-17;
    constexpr int max_iter = 100000;
    double b = 2.0 * (1.0 + z);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0;
    double q2 = 1.0;
    const double a1 = 0.25;
    double q = a1;
    double c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 2; i <= max_iter; ++i) {
        a -= 2.0 * (i - 1);
        c = -a * c / i;
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < eps && std::abs(delh / h) < eps)
            break;
    }
    h *= a1;
    KPair r;
    r.k0 = std::sqrt(std::numbers::pi / (2.0 * z)) / s;
    r.k1 = r.k0 * (z + 0.5 - h) / z;
    return r;
}

inline void require_positive(double z, const char* fn)
{
    if (!(z > 0.0) || !std::isfinite(z))
        throw std::domain_error(std::string(fn) + ": argument must be positive and finite");
}

inline double select(BesselOrder nu, KPair k, double z)
{
    switch (nu.value()) {
    case 0:
        return k.k0;
    case 1:
        return k.k1;
    default:
        return k.k0 + 2.0 / z * k.k1;
    }
}

} // namespace detail

/// e^z K_nu(z). Finite for all z > 0 up to at least 1e8.
inline double bessel_k_scaled(BesselOrder nu, double z)
{
    detail::require_positive(z, "bessel_k_scaled");
    if (z <= detail::series_branch_limit) {
        const double v = detail::select(nu, detail::series_k01(z), z) * std::exp(z);
        if (!std::isfinite(v))
            throw std::overflow_error("bessel_k_scaled: result exceeds double range");
        return v;
    }
    return detail::select(nu, detail::scaled_cf_k01(z), z);
}

/// K_nu(z) for z > 0. Throws std::underflow_error instead of returning 0 when
/// the result is below the normal double range (z beyond ~700), and
/// std::overflow_error when K1/K2 exceed it near z = 0.
inline double bessel_k(BesselOrder nu, double z)
{
    detail::require_positive(z, "bessel_k");
    double v;
    if (z <= detail::series_branch_limit) {
        v = detail::select(nu, detail::series_k01(z), z);
    } else {
        const double scaled = detail::select(nu, detail::scaled_cf_k01(z), z);
        v = std::exp(std::log(scaled) - z);
    }
    if (!std::isfinite(v))
        throw std::overflow_error("bessel_k: result exceeds double range");
    if (v < std::numeric_limits<double>::min())
        throw std::underflow_error("bessel_k: result underflows double range");
    return v;
}

/// z K1(z); tends to 1 as z -> 0 and to 0 (without error) as z -> infinity.
inline double z_bessel_k1(double z)
{
    detail::require_positive(z, "z_bessel_k1");
    if (z <= detail::series_branch_limit)
        return z * detail::series_k01(z).k1;
    const double scaled = detail::scaled_cf_k01(z).k1;
    return std::exp(std::log(z) + std::log(scaled) - z);
}

/// z K0(z); tends to 0 at both ends.
inline double z_bessel_k0(double z)
{
    detail::require_positive(z, "z_bessel_k0");
    if (z <= detail::series_branch_limit)
        return z * detail::series_k01(z).k0;
    const double scaled = detail::scaled_cf_k01(z).k0;
    return std::exp(std::log(z) + std::log(scaled) - z);
}

/// (z^2 / 2) K2(z) = (z^2 / 2) K0(z) + z K1(z); tends to 1 as z -> 0.
inline double half_z2_bessel_k2(double z)
{
    detail::require_positive(z, "half_z2_bessel_k2");
    if (z <= detail::series_branch_limit) {
        const auto k = detail::series_k01(z);
        return 0.5 * z * z * k.k0 + z * k.k1;
    }
    const double scaled = bessel_k_scaled(BesselOrder::two(), z);
    return std::exp(2.0 * std::log(z) - std::numbers::ln2 + std::log(scaled) - z);
}

/// 1 - z K1(z), with the leading 1 cancelled analytically on the series branch.
inline double one_minus_z_k1(double z)
{
    if (z == 0.0)
        return 0.0;
    detail::require_positive(z, "one_minus_z_k1");
    if (z <= detail::series_branch_limit) {
        // z K1 = 1 + z ln(z/2) I1(z) - (z^2/4) sum_k [psi(k+1)+psi(k+2)] q^k/(k!(k+1)!)
        constexpr double euler_gamma = std::numbers::egamma;
        const double q = 0.25 * z * z;
        double t1 = 1.0;
        double i1 = 1.0;
        double h = 0.0;
        double sum1 = -2.0 * euler_gamma + 1.0;
        for (int k = 1; k < 200; ++k) {
            t1 *= q / (double(k) * double(k + 1));
            h += 1.0 / k;
            i1 += t1;
            sum1 += t1 * (-2.0 * euler_gamma + 2.0 * h + 1.0 / (k + 1));
            if (t1 < 1e-18 * i1)
                break;
        }
        i1 *= 0.5 * z;
        return -z * std::log(0.5 * z) * i1 + 0.25 * z * z * sum1;
    }
    return 1.0 - z_bessel_k1(z);
}

/// 1 - (z^2 / 2) K2(z) = (1 - z K1(z)) - (z^2 / 2) K0(z).
inline double one_minus_half_z2_k2(double z)
{
    if (z == 0.0)
        return 0.0;
    detail::require_positive(z, "one_minus_half_z2_k2");
    if (z <= detail::series_branch_limit)
        return one_minus_z_k1(z) - 0.5 * z * z * detail::series_k01(z).k0;
    return 1.0 - half_z2_bessel_k2(z);
}

} // namespace decofringe::specfun
