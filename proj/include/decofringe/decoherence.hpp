#pragma once

// Decoherence functional W(dx, t) of a massive scalar field coupled to the
// two particle paths, its (m, g) gradient, the large-mT closed form and the
// global upper bound.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "decofringe/params.hpp"
#include "decofringe/quad.hpp"
#include "decofringe/specfun.hpp"

namespace decofringe {

enum class WMethod { ExactIntegral, AsymptoticBessel };

inline const char* to_string(WMethod m)
{
    return m == WMethod::ExactIntegral ? "exact_integral" : "asymptotic_bessel";
}

/// Whether w_exact also integrates dW/dm (roughly doubles the cost).
enum class Gradient { Analytic, Skip };

struct DecoherenceValue {
    double w = 0.0;
    WMethod method = WMethod::ExactIntegral;
    double grad_m = 0.0;
    double grad_g = 0.0;
    double error_estimate = 0.0;
};

namespace detail {

inline void require_finite(double v, const char* what)
{
    if (!std::isfinite(v))
        throw std::invalid_argument(std::string(what) + " must be finite");
}

inline void require_field(double m, double g, const char* fn)
{
    require_finite(m, "m");
    require_finite(g, "g");
    if (!(m > 0.0))
        throw std::domain_error(std::string(fn) + ": m must be positive");
    if (g < 0.0)
        throw std::domain_error(std::string(fn) + ": g must be non-negative");
}

inline std::string fmt_g(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

// 1 - cos(x) without cancellation near x = 0.
inline double one_minus_cos(double x)
{
    const double s = std::sin(0.5 * x);
    return 2.0 * s * s;
}

// W is exactly quadratic in g, so dW/dg = 2W/g; the g -> 0 limit is 0.
inline double grad_g_from_w(double w, double g) { return g > 0.0 ? 2.0 * w / g : 0.0; }

} // namespace detail

/// W(dx, t) = (g^2 / pi m^2) J with
/// J = int_0^inf (u^2+1)^(-3/2) (1 - cos(m dx u)) (1 - cos(m t sqrt(u^2+1))) du.
/// cfg tolerances apply to the dimensionless integral J. With Gradient::Skip
/// grad_m is left at 0.
inline DecoherenceValue w_exact(double dx, double t, double m, double g,
                                const quad::QuadratureConfig& cfg = {},
                                Gradient gradient = Gradient::Analytic)
{
    detail::require_finite(dx, "dx");
    detail::require_finite(t, "t");
    detail::require_field(m, g, "w_exact");
    if (t < 0.0)
        throw std::domain_error("w_exact: t must be non-negative");

    DecoherenceValue out;
    out.method = WMethod::ExactIntegral;
    if (dx == 0.0 || t == 0.0 || g == 0.0)
        return out;

    const double a = m * std::abs(dx);
    const double b = m * t;
    const double omega = std::max(a, b);
    const double pref = g * g / (std::numbers::pi * m * m);

    auto j_integrand = [a, b](double u) {
        const double s2 = u * u + 1.0;
        const double s = std::sqrt(s2);
        return detail::one_minus_cos(a * u) * detail::one_minus_cos(b * s) / (s2 * s);
    };
    const auto j = quad::integrate_semi_infinite_oscillatory(j_integrand, omega, {3.0, 4.0}, cfg);
    if (!j.converged)
        throw NumericalError("w_exact: W integral did not converge (error " +
                             detail::fmt_g(j.error_estimate) + ")");

    out.w = pref * j.value;
    out.error_estimate = pref * j.error_estimate;
    out.grad_g = detail::grad_g_from_w(out.w, g);
    if (gradient == Gradient::Skip)
        return out;

    // dW/dm with v = m u held fixed, which keeps the dx-phase m-independent:
    //   (g^2 / pi m^2) int [ -(3/m) (u^2+1)^(-5/2) (1-cos a u)(1-cos b s)
    //                        + t (u^2+1)^(-2) sin(b s) (1-cos a u) ] du
    auto gm_integrand = [a, b, m, t](double u) {
        const double s2 = u * u + 1.0;
        const double s = std::sqrt(s2);
        const double ca = detail::one_minus_cos(a * u);
        return (-3.0 / m * detail::one_minus_cos(b * s) / (s2 * s2 * s) + t * std::sin(b * s) / (s2 * s2)) *
               ca;
    };
    // The m-derivative integral scales like J / m; so do its absolute tolerances.
    quad::QuadratureConfig gcfg = cfg;
    gcfg.abs_tol = cfg.abs_tol / m;
    gcfg.tail_tol = cfg.tail_tol / m;
    const quad::Envelope genv{4.0, 12.0 / m + 2.0 * t};
    const auto jm = quad::integrate_semi_infinite_oscillatory(gm_integrand, omega, genv, gcfg);
    if (!jm.converged)
        throw NumericalError("w_exact: dW/dm integral did not converge (error " +
                             detail::fmt_g(jm.error_estimate) + ")");

    out.grad_m = pref * jm.value;
    return out;
}

/// W(dx0 + k step, t) for k = 0..count-1 (grad_m left at 0). All members
/// share one panel grid sized for the largest |dx|. Within a node the
/// dx-cosines come in blocks of an exact base angle times precomputed
/// rotation powers. A panel is bisected while any member's G7/K15 gap exceeds
/// rel_tol of its panel value, which bounds the relative error of the whole
/// non-negative integrand. Members that still miss the target are recomputed
/// by w_exact.
inline std::vector<DecoherenceValue> w_exact_progression(double dx0, double step, int count, double t,
                                                         double m, double g,
                                                         const quad::QuadratureConfig& cfg = {})
{
    detail::require_finite(dx0, "dx0");
    detail::require_finite(step, "step");
    detail::require_finite(t, "t");
    detail::require_field(m, g, "w_exact_progression");
    if (count < 0)
        throw std::invalid_argument("w_exact_progression: count must be non-negative");
    if (t < 0.0)
        throw std::domain_error("w_exact_progression: t must be non-negative");
    cfg.validate();

    const auto n = static_cast<std::size_t>(count);
    std::vector<DecoherenceValue> out(n);
    if (count == 0 || t == 0.0 || g == 0.0)
        return out;
    const double dx_max = std::max(std::abs(dx0), std::abs(dx0 + (count - 1) * step));
    const double b = m * t;
    const double omega = m * std::max(dx_max, t);
    if (!(omega > 0.0))
        return out;

    const double pref = g * g / (std::numbers::pi * m * m);
    const quad::Envelope env{3.0, 4.0};
    const double u_max = quad::envelope_truncation_point(env, cfg.tail_tol);
    const double tail = quad::envelope_tail_bound(env, u_max);
    const double panel = std::numbers::pi / omega;
    const auto n_panels = static_cast<std::int64_t>(std::ceil(u_max / panel));

    constexpr int nodes = 15;
    constexpr std::size_t block = 64;
    std::array<double, nodes> offset{}, wk{}, wg{};
    for (int j = 0; j < 7; ++j) {
        offset[2 * j] = -quad::detail::gk15_nodes[j];
        offset[2 * j + 1] = quad::detail::gk15_nodes[j];
        wk[2 * j] = wk[2 * j + 1] = quad::detail::gk15_weights[j];
        wg[2 * j] = wg[2 * j + 1] = (j % 2 == 1) ? quad::detail::g7_weights[j / 2] : 0.0;
    }
    wk[14] = quad::detail::gk15_weights[7];
    wg[14] = quad::detail::g7_weights[3];

    std::vector<quad::detail::CompensatedSum> value(n);
    std::vector<double> error(n, 0.0);
    std::vector<double> pw_re(block), pw_im(block);
    constexpr double roundoff = 50.0 * std::numeric_limits<double>::epsilon();
    constexpr int max_depth = 30;
    // per-depth scratch: K and G weighted cosine sums for every member
    std::vector<std::vector<double>> ck(max_depth + 1, std::vector<double>(n));
    std::vector<std::vector<double>> cg(max_depth + 1, std::vector<double>(n));

    auto process = [&](auto&& self, double lo, double hi, int depth) -> void {
        auto& cK = ck[depth];
        auto& cG = cg[depth];
        std::fill(cK.begin(), cK.end(), 0.0);
        std::fill(cG.begin(), cG.end(), 0.0);
        const double center = 0.5 * (lo + hi);
        const double half = 0.5 * (hi - lo);
        double sum_k = 0.0;
        double sum_g = 0.0;
        for (int j = 0; j < nodes; ++j) {
            const double u = center + half * offset[j];
            const double s2 = u * u + 1.0;
            const double s = std::sqrt(s2);
            const double h = detail::one_minus_cos(b * s) / (s2 * s);
            const double hk = half * wk[j] * h;
            const double hg = half * wg[j] * h;
            sum_k += hk;
            sum_g += hg;
            const double rot = m * step * u;
            const double r_re = std::cos(rot);
            const double r_im = std::sin(rot);
            pw_re[0] = 1.0;
            pw_im[0] = 0.0;
            for (std::size_t i = 1; i < block; ++i) {
                pw_re[i] = pw_re[i - 1] * r_re - pw_im[i - 1] * r_im;
                pw_im[i] = pw_re[i - 1] * r_im + pw_im[i - 1] * r_re;
            }
            for (std::size_t q = 0; q < n; q += block) {
                const double base = m * (dx0 + double(q) * step) * u;
                const double b_re = std::cos(base);
                const double b_im = std::sin(base);
                const std::size_t len = std::min(block, n - q);
                double* kk = cK.data() + q;
                double* gg = cG.data() + q;
                for (std::size_t i = 0; i < len; ++i) {
                    const double c = b_re * pw_re[i] - b_im * pw_im[i];
                    kk[i] += hk * c;
                    gg[i] += hg * c;
                }
            }
        }
        bool refine = false;
        if (depth < max_depth) {
            for (std::size_t k = 0; k < n && !refine; ++k) {
                const double kron = sum_k - cK[k];
                const double gauss = sum_g - cG[k];
                refine = std::abs(kron - gauss) > std::max(cfg.rel_tol * std::abs(kron),
                                                           roundoff * (sum_k + std::abs(cK[k])));
            }
        }
        if (refine) {
            self(self, lo, center, depth + 1);
            self(self, center, hi, depth + 1);
            return;
        }
        for (std::size_t k = 0; k < n; ++k) {
            const double kron = sum_k - cK[k];
            const double gauss = sum_g - cG[k];
            value[k].add(kron);
            error[k] += std::max(std::abs(kron - gauss), roundoff * (sum_k + std::abs(cK[k])));
        }
    };
    for (std::int64_t p = 0; p < n_panels; ++p) {
        const double lo = double(p) * panel;
        const double hi = p + 1 == n_panels ? u_max : lo + panel;
        process(process, lo, hi, 0);
    }

    for (std::size_t k = 0; k < n; ++k) {
        const double dx = dx0 + double(k) * step;
        auto& o = out[k];
        if (dx == 0.0)
            continue;
        const double j = value[k].value();
        if (error[k] > cfg.target(j)) {
            o = w_exact(dx, t, m, g, cfg, Gradient::Skip);
            continue;
        }
        o.w = pref * j;
        o.error_estimate = pref * (error[k] + tail);
        o.grad_g = detail::grad_g_from_w(o.w, g);
    }
    return out;
}

/// Large-mT limit of W(2L, T): (g^2 / pi m^2)(1 - 2mL K1(2mL)).
inline DecoherenceValue w_asymptotic(double L, double m, double g)
{
    detail::require_finite(L, "L");
    detail::require_field(m, g, "w_asymptotic");
    if (!(L > 0.0))
        throw std::domain_error("w_asymptotic: L must be positive");

    const double z = 2.0 * m * L;
    const double pref = g * g / (std::numbers::pi * m * m);
    DecoherenceValue out;
    out.method = WMethod::AsymptoticBessel;
    out.w = pref * specfun::one_minus_z_k1(z);
    out.grad_m = -2.0 * pref / m * specfun::one_minus_half_z2_k2(z);
    out.grad_g = detail::grad_g_from_w(out.w, g);
    out.error_estimate = 0.0;
    return out;
}

/// Upper bound (2 g^2 / pi m^2)(1 - m|dx| K1(m|dx|)) on W(dx, t), valid for all t.
inline double w_upper_bound(double dx, double m, double g)
{
    detail::require_finite(dx, "dx");
    detail::require_field(m, g, "w_upper_bound");
    return 2.0 * g * g / (std::numbers::pi * m * m) * specfun::one_minus_z_k1(m * std::abs(dx));
}

struct GradientComparison {
    double analytic = 0.0;
    double finite_difference = 0.0;
    double rel_error = 0.0;
};

struct GradCheckReport {
    double step = 0.0;
    GradientComparison exact_m;
    GradientComparison exact_g;
    GradientComparison asymptotic_m;
    GradientComparison asymptotic_g;
    // |grad_g * g / 2 - w| / w for the exact value
    double g_scaling_residual = 0.0;
};

namespace detail {

inline GradientComparison compare(double analytic, double fd)
{
    GradientComparison c{analytic, fd, 0.0};
    const double scale = std::max(std::abs(analytic), std::abs(fd));
    c.rel_error = scale > 0.0 ? std::abs(analytic - fd) / scale : 0.0;
    return c;
}

} // namespace detail

/// Central finite differences with relative step h against the analytic
/// gradients of w_exact(dx, t) and w_asymptotic(params.L).
inline GradCheckReport grad_check(const ExperimentParams& params, double dx, double t, double h,
                                  const quad::QuadratureConfig& cfg = {})
{
    params.validate();
    if (!(h >= 1e-7 && h <= 1e-3))
        throw std::invalid_argument("grad_check: h must lie in [1e-7, 1e-3]");
    const double m = params.m;
    const double g = params.g;
    const double dm = h * m;
    const double dg = h * std::max(g, 1e-300);

    GradCheckReport r;
    r.step = h;

    const auto w0 = w_exact(dx, t, m, g, cfg);
    const double fd_m = (w_exact(dx, t, m + dm, g, cfg).w - w_exact(dx, t, m - dm, g, cfg).w) / (2.0 * dm);
    const double fd_g = (w_exact(dx, t, m, g + dg, cfg).w - w_exact(dx, t, m, g - dg, cfg).w) / (2.0 * dg);
    r.exact_m = detail::compare(w0.grad_m, fd_m);
    r.exact_g = detail::compare(w0.grad_g, fd_g);
    r.g_scaling_residual = w0.w > 0.0 ? std::abs(w0.grad_g * g / 2.0 - w0.w) / w0.w : 0.0;

    const double L = params.L;
    const auto a0 = w_asymptotic(L, m, g);
    const double afd_m = (w_asymptotic(L, m + dm, g).w - w_asymptotic(L, m - dm, g).w) / (2.0 * dm);
    const double afd_g = (w_asymptotic(L, m, g + dg).w - w_asymptotic(L, m, g - dg).w) / (2.0 * dg);
    r.asymptotic_m = detail::compare(a0.grad_m, afd_m);
    r.asymptotic_g = detail::compare(a0.grad_g, afd_g);
    return r;
}

} // namespace decofringe
