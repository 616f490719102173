#pragma once

// Two-slit Gaussian wave packets, the screen densities with and without the
// field-induced decoherence factor, visibility, and regime checks.
//
// Units: slit width 1, particle mass 1, so tau is the propagation time and a
// packet released at t = 0 has width sigma(tau)^2 = (1 + tau^2) / 2.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <map>
#include <mutex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "decofringe/decoherence.hpp"
#include "decofringe/parallel.hpp"
#include "decofringe/params.hpp"
#include "decofringe/quad.hpp"

namespace decofringe {

/// A^2 = 1 / (2 + 2 e^(-L^2)), the two-slit normalization.
inline double normalization_sq(double L) { return 1.0 / (2.0 + 2.0 * std::exp(-L * L)); }

/// psi_sign(x, tau) = pi^(-1/4) (1 + i tau)^(-1/2) exp[-(x - sign L)^2 / (2 (1 + i tau))].
inline std::complex<double> wavepacket(double x, double tau, int sign, double L)
{
    if (sign != 1 && sign != -1)
        throw std::invalid_argument("wavepacket: sign must be +1 or -1");
    using C = std::complex<double>;
    const C z(1.0, tau);
    const double d = x - sign * L;
    return std::pow(std::numbers::pi, -0.25) / std::sqrt(z) * std::exp(-d * d / (2.0 * z));
}

/// |psi+|^2 + |psi-|^2 and 2 Re[conj(psi+) psi-], in closed form.
struct PacketTerms {
    double direct = 0.0;
    double interference = 0.0;
};

inline PacketTerms packet_terms(double x, double tau, double L)
{
    const double s2 = 1.0 + tau * tau;
    const double pref = 1.0 / std::sqrt(std::numbers::pi * s2);
    const double dp = x - L;
    const double dm = x + L;
    PacketTerms t;
    t.direct = pref * (std::exp(-dp * dp / s2) + std::exp(-dm * dm / s2));
    t.interference = 2.0 * pref * std::exp(-(x * x + L * L) / s2) * std::cos(2.0 * x * L * tau / s2);
    return t;
}

/// A^2 |psi+ + psi-|^2.
inline double density_free(double x, double tau, double L)
{
    const auto t = packet_terms(x, tau, L);
    return normalization_sq(L) * (t.direct + t.interference);
}

/// A^2 (|psi+|^2 + |psi-|^2 + e^(-w) 2 Re[conj(psi+) psi-]) for a given exponent w.
/// Integrates to (1 + e^(-w - L^2)) / (1 + e^(-L^2)).
inline double density_approx_w(double x, double tau, double L, double w)
{
    const auto t = packet_terms(x, tau, L);
    return normalization_sq(L) * (t.direct + std::exp(-w) * t.interference);
}

enum class WSource { Exact, Asymptotic };

inline const char* to_string(WSource s) { return s == WSource::Exact ? "exact" : "asymptotic"; }

/// W(2L, T) for the approximate density; Exact integrates, Asymptotic uses the Bessel form.
inline DecoherenceValue slit_decoherence(const ExperimentParams& p, WSource source = WSource::Exact,
                                         const quad::QuadratureConfig& cfg = {},
                                         Gradient gradient = Gradient::Analytic)
{
    p.validate();
    if (source == WSource::Asymptotic)
        return w_asymptotic(p.L, p.m, p.g);
    return w_exact(2.0 * p.L, p.T, p.m, p.g, cfg, gradient);
}

/// Approximate density at (x, tau). Computes W(2L, T) on every call; use
/// density_approx_w with a cached exponent for grids.
inline double density_approx(double x, double tau, const ExperimentParams& p,
                             WSource source = WSource::Exact, const quad::QuadratureConfig& cfg = {})
{
    return density_approx_w(x, tau, p.L, slit_decoherence(p, source, cfg, Gradient::Skip).w);
}

struct DensityEvaluation {
    double value = 0.0;
    // imaginary part of the summed path terms, discarded from value
    double imag_residue = 0.0;
    double error_estimate = 0.0;
    std::int64_t evaluations = 0;
};

/// Density with the decoherence factor exp[-W(x' - x'', T)] kept inside the
/// double integral over initial positions x', x'' (no factorization of W).
///
/// Each path pair (alpha, beta) contributes
///   A^2 / (2 pi^(3/2) tau) int int a_alpha(y') conj(a_beta(y'')) exp[-W(y' - y'' + (alpha - beta) L)]
/// with a_alpha(y) = exp[-y^2/2 + i (x - alpha L - y)^2 / (2 tau)].
/// W values are cached on the integration lattice, so one model should be
/// reused across screen points. Thread-safe.
class ExactDensityModel {
public:
    explicit ExactDensityModel(const ExperimentParams& p, const quad::QuadratureConfig& cfg = {},
                               double half_width = 8.0)
        : p_(p), cfg_(cfg), half_width_(half_width)
    {
        p_.validate();
        cfg_.validate();
        if (!(half_width_ > 0.0))
            throw std::invalid_argument("ExactDensityModel: half_width must be positive");
        lattice_step_ = 2.0 * half_width_ / quad::max_intervals_per_axis;
    }

    const ExperimentParams& params() const { return p_; }

    DensityEvaluation evaluate(double x, double tau) const
    {
        if (!std::isfinite(x) || !std::isfinite(tau) || tau < 0.0)
            throw std::invalid_argument("density_exact: x must be finite and tau >= 0");
        DensityEvaluation out;
        if (tau == 0.0) {
            // propagator collapses to x' = x'' = x, where W(0, T) = 0
            out.value = density_free(x, 0.0, p_.L);
            return out;
        }

        using C = std::complex<double>;
        const double L = p_.L;
        C total{};
        double err = 0.0;
        for (int alpha : {1, -1}) {
            for (int beta : {1, -1}) {
                const double xa = x - alpha * L;
                const double xb = x - beta * L;
                auto a = [xa, tau](double y) {
                    const double d = xa - y;
                    return std::exp(C(-0.5 * y * y, d * d / (2.0 * tau)));
                };
                auto b = [xb, tau](double y) {
                    const double d = xb - y;
                    return std::exp(C(-0.5 * y * y, -d * d / (2.0 * tau)));
                };
                const int shift = (alpha - beta) / 2; // 0 or +-1 multiples of 2L
                auto k = [this, shift](double h, int n) { return kernel_table(h, n, shift); };
                const auto r = quad::integrate_2d_difference_table(a, b, k, half_width_, cfg_);
                if (!r.converged)
                    throw NumericalError("density_exact: path integral did not converge at x = " +
                                         std::to_string(x) + " (error " +
                                         detail::fmt_g(r.error_estimate) + ")");
                total += r.value;
                err += r.error_estimate;
                out.evaluations += r.evaluations;
            }
        }
        const double pref = normalization_sq(L) / (2.0 * std::pow(std::numbers::pi, 1.5) * tau);
        out.value = pref * total.real();
        out.imag_residue = pref * total.imag();
        out.error_estimate = pref * err;

        const auto terms = packet_terms(x, tau, L);
        const double scale = normalization_sq(L) * terms.direct + out.error_estimate;
        if (std::abs(out.imag_residue) > 1e-6 * std::max(scale, std::abs(out.value)))
            throw NumericalError("density_exact: imaginary residue " + detail::fmt_g(out.imag_residue) +
                                 " at x = " + std::to_string(x));
        if (out.value < 0.0 && -out.value <= out.error_estimate)
            out.value = 0.0;
        return out;
    }

    double operator()(double x, double tau) const { return evaluate(x, tau).value; }

private:
    // Pairs with |y' - y''| beyond this carry Gaussian weight below e^(-39),
    // under double resolution of the integral; the kernel is not evaluated there.
    static constexpr double kernel_cutoff = 12.5;

    // Cache key of lattice offset d (a multiple of lattice_step_). W is even,
    // so diagonal terms use |d| and the -2L shift folds onto +2L.
    static long long cache_key(long long raw, int shift)
    {
        if (shift == 0)
            return raw < 0 ? -raw : raw;
        return shift > 0 ? raw : -raw;
    }

    double cache_argument(long long key, int shift) const
    {
        return double(key) * lattice_step_ + (shift == 0 ? 0.0 : 2.0 * p_.L);
    }

    // exp(-W) at offsets h d, d = -n..n, filling missing cache entries in
    // arithmetic runs through the batched W evaluator.
    std::vector<double> kernel_table(double h, int n, int shift) const
    {
        const long long stride = std::llround(h / lattice_step_);
        auto& cache = shift == 0 ? diagonal_ : cross_;
        std::vector<double> kv(static_cast<std::size_t>(2 * n + 1), 0.0);
        std::lock_guard lock(mutex_);

        std::vector<long long> missing;
        for (int d = -n; d <= n; ++d) {
            if (std::abs(h * d) > kernel_cutoff)
                continue;
            const long long key = cache_key(stride * d, shift);
            if (!cache.count(key))
                missing.push_back(key);
        }
        std::sort(missing.begin(), missing.end());
        missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
        for (std::size_t i = 0; i < missing.size();) {
            std::size_t j = i + 1;
            const long long diff = j < missing.size() ? missing[j] - missing[i] : 1;
            while (j < missing.size() && missing[j] - missing[j - 1] == diff)
                ++j;
            const auto w = w_exact_progression(cache_argument(missing[i], shift), double(diff) * lattice_step_,
                                               static_cast<int>(j - i), p_.T, p_.m, p_.g, cfg_);
            for (std::size_t k = i; k < j; ++k)
                cache.emplace(missing[k], std::exp(-w[k - i].w));
            i = j;
        }

        for (int d = -n; d <= n; ++d) {
            if (std::abs(h * d) > kernel_cutoff)
                continue;
            kv[d + n] = cache.at(cache_key(stride * d, shift));
        }
        return kv;
    }

    ExperimentParams p_;
    quad::QuadratureConfig cfg_;
    double half_width_;
    double lattice_step_;
    mutable std::mutex mutex_;
    mutable std::map<long long, double> diagonal_;
    mutable std::map<long long, double> cross_;
};

/// One-off exact density; builds a fresh model (and W cache) per call.
inline double density_exact(double x, double tau, const ExperimentParams& p,
                            const quad::QuadratureConfig& cfg = {})
{
    return ExactDensityModel(p, cfg).evaluate(x, tau).value;
}

enum class DensityMethod { Free, ExactW, ApproxW };

inline const char* to_string(DensityMethod m)
{
    switch (m) {
    case DensityMethod::Free:
        return "free";
    case DensityMethod::ExactW:
        return "exact_w";
    default:
        return "approx_w";
    }
}

struct GridOptions {
    std::optional<double> x_min;
    std::optional<double> x_max;
    int points = 4001;
};

struct ProfileOptions {
    GridOptions grid;
    bool renormalize = false;
    WSource w_source = WSource::Exact;
};

struct FringeProfile {
    std::vector<double> xs;
    std::vector<double> ps;
    double tau = 0.0;
    ExperimentParams params;
    DensityMethod method = DensityMethod::Free;
    // integral of ps over the grid
    double norm = 0.0;
    // exact integral of the density over the real line
    double analytic_norm = 1.0;
    bool renormalized = false;
    // W(2L, T) used by ApproxW, 0 otherwise
    double w = 0.0;
};

/// Packet width sigma(tau) = sqrt((1 + tau^2) / 2).
inline double packet_sigma(double tau) { return std::sqrt(0.5 * (1.0 + tau * tau)); }

/// Default screen window +-(L + 6 sigma), which holds all but ~2e-9 of the mass.
inline std::pair<double, double> default_screen_range(double L, double tau)
{
    const double r = L + 6.0 * packet_sigma(tau);
    return {-r, r};
}

inline std::vector<double> linspace(double lo, double hi, int n)
{
    if (n < 2 || !(lo < hi))
        throw std::invalid_argument("linspace: need n >= 2 and lo < hi");
    std::vector<double> xs(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        xs[i] = i == n - 1 ? hi : lo + (hi - lo) * i / (n - 1);
    return xs;
}

/// Integral of samples on a uniform grid: composite Simpson, with a closing
/// trapezoid panel when the interval count is odd.
inline double grid_integral(const std::vector<double>& xs, const std::vector<double>& ys)
{
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("grid_integral: size mismatch or fewer than 2 points");
    const std::size_t intervals = xs.size() - 1;
    const double h = (xs.back() - xs.front()) / double(intervals);
    const std::size_t even = intervals - intervals % 2;
    quad::detail::CompensatedSum s;
    for (std::size_t i = 0; i < even; i += 2)
        s.add(h / 3.0 * (ys[i] + 4.0 * ys[i + 1] + ys[i + 2]));
    if (even != intervals)
        s.add(0.5 * h * (ys[intervals - 1] + ys[intervals]));
    return s.value();
}

inline FringeProfile make_profile(const ExperimentParams& p, double tau, DensityMethod method,
                                  const ProfileOptions& opt = {}, const quad::QuadratureConfig& cfg = {})
{
    p.validate();
    if (!(tau >= 0.0) || !std::isfinite(tau))
        throw std::invalid_argument("make_profile: tau must be finite and >= 0");
    auto [lo, hi] = default_screen_range(p.L, tau);
    if (opt.grid.x_min)
        lo = *opt.grid.x_min;
    if (opt.grid.x_max)
        hi = *opt.grid.x_max;

    FringeProfile prof;
    prof.xs = linspace(lo, hi, opt.grid.points);
    prof.ps.resize(prof.xs.size());
    prof.tau = tau;
    prof.params = p;
    prof.method = method;

    const double L = p.L;
    switch (method) {
    case DensityMethod::Free:
        for (std::size_t i = 0; i < prof.xs.size(); ++i)
            prof.ps[i] = density_free(prof.xs[i], tau, L);
        prof.analytic_norm = 1.0;
        break;
    case DensityMethod::ApproxW: {
        prof.w = slit_decoherence(p, opt.w_source, cfg, Gradient::Skip).w;
        for (std::size_t i = 0; i < prof.xs.size(); ++i)
            prof.ps[i] = density_approx_w(prof.xs[i], tau, L, prof.w);
        prof.analytic_norm = (1.0 + std::exp(-prof.w - L * L)) / (1.0 + std::exp(-L * L));
        break;
    }
    case DensityMethod::ExactW: {
        const ExactDensityModel model(p, cfg);
        parallel_for(prof.xs.size(), [&](std::size_t i) { prof.ps[i] = model(prof.xs[i], tau); });
        prof.analytic_norm = 1.0;
        break;
    }
    }
    prof.norm = grid_integral(prof.xs, prof.ps);
    if (opt.renormalize) {
        if (!(prof.norm > 0.0))
            throw std::domain_error("make_profile: cannot renormalize a profile with zero mass");
        for (auto& v : prof.ps)
            v /= prof.norm;
        prof.analytic_norm = 1.0;
        prof.norm = grid_integral(prof.xs, prof.ps);
        prof.renormalized = true;
    }
    return prof;
}

/// First minimum of the interference cosine, x_* = pi (1 + tau^2) / (2 L tau).
inline double first_minimum(double tau, double L)
{
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw std::domain_error("first_minimum: tau must be positive");
    if (!(L > 0.0))
        throw std::domain_error("first_minimum: L must be positive");
    const double s2 = 1.0 + tau * tau;
    const double x = std::numbers::pi * s2 / (2.0 * L * tau);
    if (std::abs(std::cos(2.0 * x * L * tau / s2) + 1.0) > 1e-12)
        throw std::logic_error("first_minimum: interference phase is not pi at x_*");
    return x;
}

struct VisibilityValue {
    double v = 0.0;
    double x_star = 0.0;
    double p0 = 0.0;
    double p_star = 0.0;
    // both densities vanished; v is set to 0
    bool degenerate = false;
};

/// (p(0) - p(x_*)) / (p(0) + p(x_*)) for a callable density p(x).
template <class Density>
VisibilityValue visibility(Density&& density, double tau, double L)
{
    VisibilityValue r;
    r.x_star = first_minimum(tau, L);
    r.p0 = density(0.0);
    r.p_star = density(r.x_star);
    const double den = r.p0 + r.p_star;
    if (!(den > 0.0)) {
        r.degenerate = true;
        r.v = 0.0;
        return r;
    }
    r.v = (r.p0 - r.p_star) / den;
    return r;
}

/// exp[-(g^2 / pi m^2)(1 - 2mL K1(2mL))], the distant-screen, long-interaction visibility.
inline double visibility_limit(const ExperimentParams& p)
{
    return std::exp(-w_asymptotic(p.L, p.m, p.g).w);
}

enum class RegimeCondition { ShortInteraction, LightField, SeparatedSlits, DistantScreen };

struct RegimeWarning {
    RegimeCondition condition;
    std::string message;
};

/// Checks the conditions under which the approximate density and the
/// distant-screen formulas apply. eps2 is the caller's T / m_p ratio; the
/// short-interaction check is skipped when it is not supplied.
inline std::vector<RegimeWarning> validate_regime(const ExperimentParams& p,
                                                  std::optional<double> eps2 = std::nullopt)
{
    std::vector<RegimeWarning> out;
    auto num = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", v);
        return std::string(buf);
    };
    if (eps2 && !(*eps2 <= 0.1))
        out.push_back({RegimeCondition::ShortInteraction,
                       "interaction time not short against the particle mass: eps^2 = " + num(*eps2) +
                           " > 0.1"});
    if (!(p.m <= 0.2))
        out.push_back({RegimeCondition::LightField,
                       "Compton length not large against the slit width: m = " + num(p.m) + " > 0.2"});
    if (!(2.0 * p.L >= 5.0))
        out.push_back({RegimeCondition::SeparatedSlits,
                       "slits not well separated: 2L = " + num(2.0 * p.L) + " < 5"});
    if (!(p.tau >= 20.0 * p.L))
        out.push_back({RegimeCondition::DistantScreen,
                       "screen not asymptotically distant: tau = " + num(p.tau) + " < 10 * 2L = " +
                           num(20.0 * p.L)});
    return out;
}

} // namespace decofringe
