#pragma once

// Fisher information of the screen density with respect to (m, g), the
// classical signal-to-noise bounds it implies, and a Monte-Carlo maximum
// likelihood harness for checking the Cramer-Rao inequality.
//
// The parameters enter the approximate density only through W(2L, T), so
// every Fisher matrix here is proportional to grad W grad W^T: it has rank one
// and the two parameters cannot be estimated jointly from screen positions.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "decofringe/decoherence.hpp"
#include "decofringe/fringe.hpp"
#include "decofringe/parallel.hpp"
#include "decofringe/params.hpp"
#include "decofringe/quad.hpp"

namespace decofringe {

enum class FisherMethod { NumericDefinition, FiniteTimeIntegral, AsymptoticClosedForm };

inline const char* to_string(FisherMethod m)
{
    switch (m) {
    case FisherMethod::NumericDefinition:
        return "numeric_definition";
    case FisherMethod::FiniteTimeIntegral:
        return "finite_time_integral";
    default:
        return "asymptotic_closed_form";
    }
}

enum class Param { m, g };

inline const char* to_string(Param p) { return p == Param::m ? "m" : "g"; }

struct FisherMatrix {
    double f_mm = 0.0;
    double f_mg = 0.0;
    double f_gg = 0.0;
    FisherMethod method = FisherMethod::NumericDefinition;
    double error_estimate = 0.0;
    // W = 0: the closed form is 0 * infinity and is defined as the zero matrix
    bool degenerate = false;
    // certified bound on the mass of the integrand outside the x-grid
    double tail_bound = 0.0;
    // grid points where the density was floored at 1e-300
    std::int64_t floored_points = 0;

    double determinant() const { return f_mm * f_gg - f_mg * f_mg; }
    double entry(Param i, Param j) const
    {
        if (i != j)
            return f_mg;
        return i == Param::m ? f_mm : f_gg;
    }
    double diagonal(Param p) const { return entry(p, p); }
};

/// Unit eigenvector of the smaller eigenvalue: the parameter combination the
/// screen density carries no information about.
inline std::array<double, 2> null_direction(const FisherMatrix& f)
{
    // symmetric 2x2: eigenvector for the smaller eigenvalue, built from the
    // larger-magnitude row of (F - lambda_min I) to avoid cancellation
    const double half_tr = 0.5 * (f.f_mm + f.f_gg);
    const double half_diff = 0.5 * (f.f_mm - f.f_gg);
    const double r = std::hypot(half_diff, f.f_mg);
    const double lambda = half_tr - r;
    std::array<double, 2> v{f.f_mg, lambda - f.f_mm};
    const std::array<double, 2> w{lambda - f.f_gg, f.f_mg};
    if (std::hypot(w[0], w[1]) > std::hypot(v[0], v[1]))
        v = w;
    double n = std::hypot(v[0], v[1]);
    if (n == 0.0)
        return {1.0, 0.0};
    return {v[0] / n, v[1] / n};
}

/// Unit vector orthogonal to grad W = (dW/dm, dW/dg).
inline std::array<double, 2> null_direction(double grad_m, double grad_g)
{
    const double n = std::hypot(grad_m, grad_g);
    if (n == 0.0)
        return {1.0, 0.0};
    return {-grad_g / n, grad_m / n};
}

namespace detail {

inline FisherMatrix rank_one(double scale, double grad_m, double grad_g, FisherMethod method)
{
    FisherMatrix f;
    f.method = method;
    f.f_mm = scale * grad_m * grad_m;
    f.f_mg = scale * grad_m * grad_g;
    f.f_gg = scale * grad_g * grad_g;
    return f;
}

} // namespace detail

/// (1 - e^(-s))^(-1/2) - 1, evaluated as e^(-s) / (sqrt(q) (1 + sqrt(q))) with
/// q = 1 - e^(-s) so neither end of the range cancels.
inline double fisher_bracket(double s)
{
    if (!(s > 0.0))
        throw std::domain_error("fisher_bracket: s must be positive");
    if (std::isinf(s))
        return 0.0;
    const double q = -std::expm1(-s);
    const double rq = std::sqrt(q);
    return std::exp(-s) / (rq * (1.0 + rq));
}

/// Distant-screen, many-fringe closed form [(1 - e^(-2w))^(-1/2) - 1] grad W grad W^T.
inline FisherMatrix fisher_asymptotic(double w, double grad_m, double grad_g)
{
    if (!(w >= 0.0))
        throw std::domain_error("fisher_asymptotic: w must be non-negative");
    if (w == 0.0) {
        FisherMatrix f;
        f.method = FisherMethod::AsymptoticClosedForm;
        f.degenerate = true;
        return f;
    }
    return detail::rank_one(fisher_bracket(2.0 * w), grad_m, grad_g, FisherMethod::AsymptoticClosedForm);
}

inline FisherMatrix fisher_asymptotic(const DecoherenceValue& dv)
{
    return fisher_asymptotic(dv.w, dv.grad_m, dv.grad_g);
}

/// Same closed form written through the visibility V = e^(-w):
/// [(1 - V^2)^(-1/2) - 1] d(log V) d(log V)^T.
inline FisherMatrix fisher_from_visibility(double v, double dlogv_dm, double dlogv_dg)
{
    if (!(v > 0.0 && v <= 1.0))
        throw std::domain_error("fisher_from_visibility: visibility must lie in (0, 1]");
    return fisher_asymptotic(-std::log(v), -dlogv_dm, -dlogv_dg);
}

struct DensityDerivatives {
    double p = 0.0;
    double dp_dm = 0.0;
    double dp_dg = 0.0;
};

/// Approximate screen density and its (m, g) derivatives through W:
/// dp/dtheta = -dW/dtheta A^2 e^(-W) 2 Re[conj(psi+) psi-].
struct ApproxDensityFamily {
    double L = 10.0;
    double tau = 20.0;
    DecoherenceValue w;

    DensityDerivatives operator()(double x) const
    {
        const auto t = packet_terms(x, tau, L);
        const double a2 = normalization_sq(L);
        const double e = std::exp(-w.w);
        DensityDerivatives d;
        d.p = a2 * (t.direct + e * t.interference);
        const double dp_dw = -a2 * e * t.interference;
        d.dp_dm = dp_dw * w.grad_m;
        d.dp_dg = dp_dw * w.grad_g;
        return d;
    }
};

inline constexpr double density_floor = 1e-300;

/// F_ij = int p (d_i log p)(d_j log p) dx by composite Simpson on a uniform
/// grid. `family(x)` returns DensityDerivatives. The error estimate is the
/// change against the same rule on every other grid point.
template <class Family>
FisherMatrix fisher_numeric(const Family& family, const std::vector<double>& xs)
{
    if (xs.size() < 5)
        throw std::invalid_argument("fisher_numeric: grid needs at least 5 points");
    std::vector<double> imm(xs.size()), img(xs.size()), igg(xs.size());
    FisherMatrix f;
    f.method = FisherMethod::NumericDefinition;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const auto d = family(xs[i]);
        if (!std::isfinite(d.p) || d.p < 0.0)
            throw std::domain_error("fisher_numeric: density is negative or non-finite");
        double p = d.p;
        if (p < density_floor) {
            p = density_floor;
            ++f.floored_points;
        }
        imm[i] = d.dp_dm * d.dp_dm / p;
        img[i] = d.dp_dm * d.dp_dg / p;
        igg[i] = d.dp_dg * d.dp_dg / p;
    }
    f.f_mm = grid_integral(xs, imm);
    f.f_mg = grid_integral(xs, img);
    f.f_gg = grid_integral(xs, igg);

    auto coarse = [&](const std::vector<double>& v) {
        std::vector<double> cx, cy;
        for (std::size_t i = 0; i < xs.size(); i += 2) {
            cx.push_back(xs[i]);
            cy.push_back(v[i]);
        }
        return grid_integral(cx, cy);
    };
    f.error_estimate = std::max({std::abs(f.f_mm - coarse(imm)), std::abs(f.f_mg - coarse(img)),
                                 std::abs(f.f_gg - coarse(igg))});
    return f;
}

/// Fisher integration window +-(L + 8 sigma); the integrand mass outside it
/// is below 1e-15 of the packet mass.
inline std::pair<double, double> fisher_screen_range(double L, double tau)
{
    const double r = L + 8.0 * packet_sigma(tau);
    return {-r, r};
}

/// fisher_numeric on the approximate density at (params, tau) with W(2L, T)
/// from w_exact. Adds a certified bound on the part of the integral outside
/// the grid to tail_bound and error_estimate.
inline FisherMatrix fisher_numeric(const ExperimentParams& p, double tau, const quad::QuadratureConfig& cfg = {},
                                   int points = 8001)
{
    p.validate();
    const auto dv = w_exact(2.0 * p.L, p.T, p.m, p.g, cfg);
    const ApproxDensityFamily fam{p.L, tau, dv};
    const auto [lo, hi] = fisher_screen_range(p.L, tau);
    auto f = fisher_numeric(fam, linspace(lo, hi, points));

    // |2Re conj(psi+) psi-| <= |psi+|^2 + |psi-|^2 bounds the integrand by
    // A^2 e^(-2W)/(1 - e^(-W)) (grad W)^2 times the packet mass outside.
    const double e = std::exp(-dv.w);
    const double sig = packet_sigma(tau);
    const double outside = std::erfc((hi - p.L) / (sig * std::numbers::sqrt2)) +
                           std::erfc((hi + p.L) / (sig * std::numbers::sqrt2));
    const double g2 = std::max(dv.grad_m * dv.grad_m, dv.grad_g * dv.grad_g);
    f.tail_bound = g2 > 0.0 ? normalization_sq(p.L) * e * e / -std::expm1(-dv.w) * g2 * outside : 0.0;
    f.error_estimate += f.tail_bound;
    return f;
}

namespace detail {

// Truncation point U for int_U^inf exp(-c u^2) du / (1 - e) <= bound.
inline double gaussian_truncation(double c, double one_minus_e, double bound)
{
    double u = 1.0 / std::sqrt(c);
    while (std::exp(-c * u * u) / (2.0 * c * u * one_minus_e) > bound)
        u *= 1.25;
    return u;
}

// int_{-inf}^{inf} cos^2 u / (cosh(u/tau) + e cos u) exp(-c u^2) du, with
// tau = inf meaning cosh -> 1. Panels of pi/2 follow the cos^2 oscillation.
inline quad::QuadResult<double> fringe_average_integral(double w, double tau, double c,
                                                        const quad::QuadratureConfig& cfg)
{
    const double e = std::exp(-w);
    const bool distant = std::isinf(tau);
    auto f = [e, tau, c, distant](double u) {
        const double cu = std::cos(u);
        const double ch = distant ? 1.0 : std::cosh(u / tau);
        return cu * cu / (ch + e * cu) * std::exp(-c * u * u);
    };
    const double u_max = gaussian_truncation(c, -std::expm1(-w), 0.25 * cfg.tail_tol);
    auto r = quad::integrate_paneled(f, 0.0, u_max, 0.5 * std::numbers::pi, cfg);
    r.value *= 2.0;
    r.error_estimate = 2.0 * r.error_estimate + cfg.tail_tol * 0.5;
    return r;
}

} // namespace detail

/// Fisher matrix of the approximate density at finite screen time tau,
/// reduced to one integral by u = 2 L x tau / (1 + tau^2):
///   F = A^2 sqrt(1 + tau^2) / (sqrt(pi) L tau) e^(-L^2/(1+tau^2) - 2W) I grad W grad W^T
///   I = int cos^2 u / (cosh(u/tau) + e^(-W) cos u) exp(-u^2 (1+tau^2) / (4 L^2 tau^2)) du.
inline FisherMatrix fisher_finite_time(const DecoherenceValue& dv, double L, double tau,
                                       const quad::QuadratureConfig& cfg = {})
{
    if (!(tau > 0.0))
        throw std::domain_error("fisher_finite_time: tau must be positive");
    if (!(L > 0.0))
        throw std::domain_error("fisher_finite_time: L must be positive");
    if (dv.w == 0.0 && dv.grad_m == 0.0 && dv.grad_g == 0.0)
        return detail::rank_one(0.0, 0.0, 0.0, FisherMethod::FiniteTimeIntegral);
    const double e = std::exp(-dv.w);
    if (e == 0.0)
        return detail::rank_one(0.0, dv.grad_m, dv.grad_g, FisherMethod::FiniteTimeIntegral);
    const double s2 = 1.0 + tau * tau;
    const double c = std::isinf(tau) ? 1.0 / (4.0 * L * L) : s2 / (4.0 * L * L * tau * tau);
    const auto integral = detail::fringe_average_integral(dv.w, tau, c, cfg);
    if (!integral.converged)
        throw NumericalError("fisher_finite_time: fringe integral did not converge");
    const double ratio = std::isinf(tau) ? 1.0 : std::sqrt(s2) / tau;
    const double damp = std::isinf(tau) ? 0.0 : L * L / s2;
    const double pref = normalization_sq(L) * ratio / (std::sqrt(std::numbers::pi) * L) * std::exp(-damp - 2.0 * dv.w);
    auto f = detail::rank_one(pref * integral.value, dv.grad_m, dv.grad_g, FisherMethod::FiniteTimeIntegral);
    const double g2 = std::max(dv.grad_m * dv.grad_m, dv.grad_g * dv.grad_g);
    f.error_estimate = pref * integral.error_estimate * g2;
    return f;
}

inline FisherMatrix fisher_finite_time(const ExperimentParams& p, double tau,
                                       const quad::QuadratureConfig& cfg = {})
{
    p.validate();
    return fisher_finite_time(w_exact(2.0 * p.L, p.T, p.m, p.g, cfg), p.L, tau, cfg);
}

/// tau -> infinity limit of fisher_finite_time:
///   F = A^2 / (sqrt(pi) L) e^(-2W) int cos^2 u / (1 + e^(-W) cos u) exp(-u^2 / (4 L^2)) du grad W grad W^T.
inline FisherMatrix fisher_distant_screen(const DecoherenceValue& dv, double L,
                                          const quad::QuadratureConfig& cfg = {})
{
    return fisher_finite_time(dv, L, std::numeric_limits<double>::infinity(), cfg);
}

struct SeriesReport {
    int n_terms = 0;
    // sum_{n < N} (e^(-W)/2)^(2n) C(2n, n)
    double partial_sum = 0.0;
    // (1 - e^(-2W))^(-1/2)
    double closed_form = 0.0;
    double abs_error = 0.0;
    // geometric estimate of the omitted terms
    double remainder_estimate = 0.0;
    bool converged = true;
    // double binomial sum with the e^(-L^2 (n - 2k)^2) overlap factors
    bool double_sum_evaluated = false;
    double double_sum = 0.0;
    double diagonal_sum = 0.0;
    double off_diagonal_sum = 0.0;
    // e^(-L^2) / (1 - e^(-W)) bounds |off_diagonal_sum|
    double off_diagonal_bound = 0.0;
    std::vector<std::string> warnings;
};

/// Resummation of the fringe-averaged expansion of the Fisher integrand.
/// Expanding 1/(1 + E cos u) in powers of E cos u and averaging over fringes
/// leaves sum_n (E/2)^(2n) C(2n, n) = (1 - E^2)^(-1/2) (E = e^(-W)); with the
/// Gaussian overlap kept, each power n carries sum_k C(n, k) e^(-L^2 (n - 2k)^2),
/// whose off-centre (n != 2k) terms are O(e^(-L^2)).
inline SeriesReport series_resummation_check(double w, double L, int n_terms)
{
    if (!(w > 0.0))
        throw std::domain_error("series_resummation_check: w must be positive");
    if (!(L > 0.0))
        throw std::domain_error("series_resummation_check: L must be positive");
    if (n_terms < 1)
        throw std::invalid_argument("series_resummation_check: n_terms must be >= 1");

    SeriesReport r;
    r.n_terms = n_terms;
    const double e = std::exp(-w);
    const double e2 = e * e;
    quad::detail::CompensatedSum sum;
    double term = 1.0;
    for (int n = 0; n < n_terms; ++n) {
        if (n > 0)
            term *= e2 * (2.0 * n - 1.0) / (2.0 * n);
        sum.add(term);
    }
    const double next = term * e2 * (2.0 * n_terms - 1.0) / (2.0 * n_terms);
    r.partial_sum = sum.value();
    const double one_minus_e2 = -std::expm1(-2.0 * w);
    r.closed_form = 1.0 / std::sqrt(one_minus_e2);
    r.abs_error = std::abs(r.partial_sum - r.closed_form);
    r.remainder_estimate = next / one_minus_e2;
    if (r.remainder_estimate > 1e-10) {
        r.converged = false;
        r.warnings.push_back("series not converged: estimated remainder " +
                             detail::fmt_g(r.remainder_estimate) + " with " + std::to_string(n_terms) +
                             " terms");
    }

    if (L >= 3.0) {
        // powers n = 0 .. 2N-1 so the diagonal part matches the N-term partial sum
        r.double_sum_evaluated = true;
        const double log_half_e = std::log(0.5 * e);
        quad::detail::CompensatedSum diag, off;
        for (int n = 0; n < 2 * n_terms; ++n) {
            const double sign = (n % 2 == 0) ? 1.0 : -1.0;
            if (n > 0 && e == 0.0)
                break;
            for (int k = 0; k <= n; ++k) {
                const int gap = n - 2 * k;
                const double log_binom = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
                const double t = n == 0 ? 1.0 : sign * std::exp(n * log_half_e + log_binom - L * L * double(gap) * gap);
                (gap == 0 ? diag : off).add(t);
            }
        }
        r.diagonal_sum = diag.value();
        r.off_diagonal_sum = off.value();
        r.double_sum = r.diagonal_sum + r.off_diagonal_sum;
        r.off_diagonal_bound = std::exp(-L * L) / -std::expm1(-w);
    } else {
        r.warnings.push_back("double sum skipped: L < 3");
    }
    return r;
}

struct ClassicalBounds {
    // m^2 F(m) and g^2 F(g): ceilings on theta^2 / Var(theta) per screen hit
    double m2_fm = 0.0;
    double g2_fg = 0.0;
    double w = 0.0;
};

/// theta^2 times the diagonal of the asymptotic Fisher matrix at the
/// long-interaction W(2L, T):
///   m^2 F(m) = B(2W) [(2 g^2 / pi m^2)(1 - 2 (mL)^2 K2(2mL))]^2
///   g^2 F(g) = B(2W) (2W)^2,   B(s) = (1 - e^(-s))^(-1/2) - 1.
inline ClassicalBounds classical_bounds(double m, double g, double L)
{
    const auto dv = w_asymptotic(L, m, g);
    ClassicalBounds b;
    b.w = dv.w;
    if (dv.w == 0.0)
        return b;
    const auto f = fisher_asymptotic(dv);
    b.m2_fm = m * m * f.f_mm;
    b.g2_fg = g * g * f.f_gg;
    return b;
}

/// m^2 F(m) in the 2mL -> infinity limit as a function of q = g/m:
/// B(s) s^2 with s = 2 q^2 / pi.
inline double fi_limit_profile(double q)
{
    const double s = 2.0 * q * q / std::numbers::pi;
    if (s == 0.0)
        return 0.0;
    return fisher_bracket(s) * s * s;
}

struct FiPeak {
    double ratio = 0.0; // g/m at the maximum
    double value = 0.0;
    // number of local maxima seen on the bracketing scan
    int scan_maxima = 0;
};

/// Maximum of fi_limit_profile over [lo, hi]: a 256-point log scan brackets
/// the best cell, golden-section refines it to 1e-8 in g/m.
inline FiPeak find_fi_peak(double lo, double hi)
{
    if (!(lo > 0.0 && lo < hi) || !std::isfinite(hi))
        throw std::invalid_argument("find_fi_peak: need 0 < lo < hi");
    auto slope = [](double q) {
        const double h = 1e-6 * q;
        return fi_limit_profile(q + h) - fi_limit_profile(q - h);
    };
    if (!(slope(lo) > 0.0 && slope(hi) < 0.0))
        throw std::domain_error("find_fi_peak: no interior maximum in the search range");

    constexpr int scan = 256;
    std::vector<double> qs(scan), hs(scan);
    for (int i = 0; i < scan; ++i) {
        qs[i] = lo * std::pow(hi / lo, double(i) / (scan - 1));
        hs[i] = fi_limit_profile(qs[i]);
    }
    FiPeak peak;
    for (int i = 1; i + 1 < scan; ++i)
        if (hs[i] > hs[i - 1] && hs[i] >= hs[i + 1])
            ++peak.scan_maxima;
    const auto best = static_cast<int>(std::max_element(hs.begin(), hs.end()) - hs.begin());
    double a = qs[std::max(best - 1, 0)];
    double b = qs[std::min(best + 1, scan - 1)];

    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = fi_limit_profile(c);
    double fd = fi_limit_profile(d);
    while (b - a > 1e-8) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = fi_limit_profile(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = fi_limit_profile(d);
        }
    }
    peak.ratio = 0.5 * (a + b);
    peak.value = fi_limit_profile(peak.ratio);
    return peak;
}

/// n draws from the piecewise-linear interpolant of profile.ps on profile.xs,
/// by exact inversion of its piecewise-quadratic CDF. mt19937_64 seeded with
/// `seed`; uniforms carry 53 random bits.
inline std::vector<double> sample_positions(const FringeProfile& profile, std::size_t n, std::uint64_t seed)
{
    const auto& xs = profile.xs;
    const auto& ps = profile.ps;
    if (xs.size() < 2 || xs.size() != ps.size())
        throw std::invalid_argument("sample_positions: profile grid is malformed");
    std::vector<double> cdf(xs.size(), 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(ps[i]) || ps[i] < 0.0)
            throw std::invalid_argument("sample_positions: profile density is negative or non-finite");
        if (i > 0) {
            if (!(xs[i] > xs[i - 1]))
                throw std::invalid_argument("sample_positions: profile grid is not increasing");
            cdf[i] = cdf[i - 1] + 0.5 * (ps[i] + ps[i - 1]) * (xs[i] - xs[i - 1]);
        }
    }
    const double total = cdf.back();
    if (!(total > 0.0))
        throw std::invalid_argument("sample_positions: profile has no mass");

    std::mt19937_64 rng(seed);
    std::vector<double> out(n);
    for (auto& x : out) {
        const double u = double(rng() >> 11) * 0x1.0p-53;
        const double t = u * total;
        auto it = std::upper_bound(cdf.begin(), cdf.end(), t);
        std::size_t i = it == cdf.begin() ? 0 : static_cast<std::size_t>(it - cdf.begin()) - 1;
        i = std::min(i, xs.size() - 2);
        const double h = xs[i + 1] - xs[i];
        const double p0 = ps[i];
        const double slope = (ps[i + 1] - p0) / h;
        const double r = t - cdf[i];
        // solve p0 s + slope s^2 / 2 = r for s in [0, h]
        const double disc = std::max(0.0, p0 * p0 + 2.0 * slope * r);
        const double den = p0 + std::sqrt(disc);
        double s = den > 0.0 ? 2.0 * r / den : 0.0;
        s = std::clamp(s, 0.0, h);
        x = xs[i] + s;
    }
    return out;
}

/// Log-likelihood of screen positions under the renormalized approximate
/// density, as a function of the exponent W alone.
class SlitLikelihood {
public:
    SlitLikelihood(const std::vector<double>& samples, double L, double tau) : L_(L)
    {
        direct_.reserve(samples.size());
        interference_.reserve(samples.size());
        for (double x : samples) {
            const auto t = packet_terms(x, tau, L);
            direct_.push_back(t.direct);
            interference_.push_back(t.interference);
        }
        log_a2_ = std::log(normalization_sq(L));
    }

    double operator()(double w) const
    {
        const double e = std::exp(-w);
        quad::detail::CompensatedSum s;
        for (std::size_t i = 0; i < direct_.size(); ++i)
            s.add(std::log(std::max(direct_[i] + e * interference_[i], density_floor)));
        // norm of the unrenormalized density: (1 + e^(-W-L^2)) / (1 + e^(-L^2))
        const double log_norm = std::log1p(std::exp(-w - L_ * L_)) - std::log1p(std::exp(-L_ * L_));
        return s.value() + double(direct_.size()) * (log_a2_ - log_norm);
    }

    std::size_t size() const { return direct_.size(); }

private:
    double L_;
    double log_a2_ = 0.0;
    std::vector<double> direct_;
    std::vector<double> interference_;
};

struct MleEstimate {
    double theta = 0.0;
    double w = 0.0;
    double log_likelihood = 0.0;
    bool at_boundary = false;
};

namespace detail {

template <class F>
double golden_max(F&& f, double a, double b, double tol)
{
    const double inv_phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

} // namespace detail

/// Maximum-likelihood estimate of one parameter with the other held at its
/// value in `params`. The likelihood depends on theta only through W, so
/// golden-section runs over W between the bracket's images and the estimate
/// is mapped back: exactly (g = sqrt(W / W1), W1 = W at g = 1) for g, by
/// bisection on w_exact for m.
inline MleEstimate mle_single_param(const std::vector<double>& samples, const ExperimentParams& params,
                                    double tau, Param free, std::pair<double, double> bracket,
                                    const quad::QuadratureConfig& cfg = {})
{
    params.validate();
    auto [lo, hi] = bracket;
    if (!(lo > 0.0 && lo < hi) || !std::isfinite(hi))
        throw std::invalid_argument("mle_single_param: bracket must satisfy 0 < lo < hi");
    if (samples.empty())
        throw std::invalid_argument("mle_single_param: no samples");

    auto w_of = [&](double theta) {
        ExperimentParams q = params;
        (free == Param::g ? q.g : q.m) = theta;
        return w_exact(2.0 * q.L, q.T, q.m, q.g, cfg, Gradient::Skip).w;
    };
    const double w_unit = free == Param::g ? w_of(1.0) : 0.0;
    const double w_lo = free == Param::g ? w_unit * lo * lo : w_of(lo);
    const double w_hi = free == Param::g ? w_unit * hi * hi : w_of(hi);
    const double wa = std::min(w_lo, w_hi);
    const double wb = std::max(w_lo, w_hi);
    if (!(wb > wa))
        throw std::domain_error("mle_single_param: W is constant over the bracket");

    const SlitLikelihood like(samples, params.L, tau);
    const double tol = 1e-10 * std::max(1.0, wb);
    MleEstimate est;
    est.w = detail::golden_max(like, wa, wb, tol);
    est.log_likelihood = like(est.w);
    est.at_boundary = est.w - wa < 10.0 * tol || wb - est.w < 10.0 * tol;

    if (free == Param::g) {
        est.theta = std::sqrt(est.w / w_unit);
        return est;
    }
    // W(m) is monotone over the bracket when the interior slope keeps one sign
    const bool increasing = w_hi > w_lo;
    double a = lo;
    double b = hi;
    for (int i = 0; i < 200 && b - a > 1e-12 * b; ++i) {
        const double mid = 0.5 * (a + b);
        const bool below = w_of(mid) < est.w;
        ((below == increasing) ? a : b) = mid;
    }
    est.theta = 0.5 * (a + b);
    return est;
}

struct MleReport {
    Param free = Param::g;
    double truth = 0.0;
    std::size_t n_samples = 0;
    std::size_t n_trials = 0;
    std::uint64_t seed = 0;
    std::vector<double> estimates;
    double mean = 0.0;
    double sample_variance = 0.0;
    double standard_error = 0.0;
    // single-hit Fisher information of the free parameter
    double fisher = 0.0;
    // 1 / (n F)
    double crb = 0.0;
    // sample_variance * n * F
    double ratio = 0.0;
    // theta^2 / Var and its ceiling n theta^2 F
    double snr = 0.0;
    double snr_bound = 0.0;
    std::size_t boundary_hits = 0;
    // likelihood too flat for the bracket (e.g. g near 0)
    bool wide_variance = false;
};

/// Repeats sampling and estimation n_trials times; trial i uses seed + i.
inline MleReport run_mle_experiment(const ExperimentParams& params, double tau, Param free,
                                    std::size_t n_samples, std::size_t n_trials, std::uint64_t seed,
                                    std::pair<double, double> bracket, const quad::QuadratureConfig& cfg = {})
{
    params.validate();
    if (n_samples == 0 || n_trials < 2)
        throw std::invalid_argument("run_mle_experiment: need n_samples >= 1 and n_trials >= 2");
    ProfileOptions opt;
    opt.renormalize = true;
    const auto profile = make_profile(params, tau, DensityMethod::ApproxW, opt, cfg);

    MleReport rep;
    rep.free = free;
    rep.truth = free == Param::g ? params.g : params.m;
    rep.n_samples = n_samples;
    rep.n_trials = n_trials;
    rep.seed = seed;
    rep.estimates.assign(n_trials, 0.0);
    std::vector<char> boundary(n_trials, 0);
    parallel_for(n_trials, [&](std::size_t i) {
        const auto xs = sample_positions(profile, n_samples, seed + i);
        const auto est = mle_single_param(xs, params, tau, free, bracket, cfg);
        rep.estimates[i] = est.theta;
        boundary[i] = est.at_boundary ? 1 : 0;
    });
    rep.boundary_hits = static_cast<std::size_t>(std::count(boundary.begin(), boundary.end(), 1));

    quad::detail::CompensatedSum s;
    for (double e : rep.estimates)
        s.add(e);
    rep.mean = s.value() / double(n_trials);
    quad::detail::CompensatedSum v;
    for (double e : rep.estimates)
        v.add((e - rep.mean) * (e - rep.mean));
    rep.sample_variance = v.value() / double(n_trials - 1);
    rep.standard_error = std::sqrt(rep.sample_variance / double(n_trials));

    rep.fisher = fisher_finite_time(params, tau, cfg).diagonal(free);
    const double n = double(n_samples);
    rep.crb = rep.fisher > 0.0 ? 1.0 / (n * rep.fisher) : std::numeric_limits<double>::infinity();
    rep.ratio = rep.sample_variance * n * rep.fisher;
    rep.snr = rep.sample_variance > 0.0 ? rep.truth * rep.truth / rep.sample_variance
                                        : std::numeric_limits<double>::infinity();
    rep.snr_bound = n * rep.truth * rep.truth * rep.fisher;
    const double width = bracket.second - bracket.first;
    rep.wide_variance = rep.boundary_hits > 0 || !(rep.fisher > 0.0) || std::sqrt(rep.crb) > 0.25 * width;
    return rep;
}

} // namespace decofringe
