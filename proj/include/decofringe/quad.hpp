#pragma once

// Quadrature engines: global adaptive Gauss-Kronrod on finite intervals,
// half-period paneling for semi-infinite oscillatory integrands with an
// algebraic envelope, and nested tensor-product trapezoid rules for
// Gaussian-weighted 2-D integrals.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <queue>
#include <stdexcept>
#include <type_traits>
#include <vector>

namespace decofringe::quad {

struct QuadratureConfig {
    double abs_tol = 1e-10;
    double rel_tol = 1e-8;
    int max_subdivisions = 2000;
    double tail_tol = 1e-10;

    void validate() const
    {
        if (!(abs_tol > 0.0) || !(rel_tol > 0.0) || !(tail_tol > 0.0))
            throw std::invalid_argument("QuadratureConfig: tolerances must be strictly positive");
        if (max_subdivisions < 10)
            throw std::invalid_argument("QuadratureConfig: max_subdivisions must be >= 10");
    }

    double target(double magnitude) const { return std::max(abs_tol, rel_tol * std::abs(magnitude)); }
};

template <class T>
struct QuadResult {
    T value{};
    double error_estimate = 0.0;
    std::int64_t evaluations = 0;
    bool converged = true;
};

/// |f(u)| <= constant * (u^2 + 1)^(-power / 2) on [0, inf).
struct Envelope {
    double power = 3.0;
    double constant = 1.0;
};

namespace detail {

// Neumaier compensated accumulator; order-dependent but deterministic.
class CompensatedSum {
public:
    void add(double x)
    {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Gauss-Kronrod 7/15 abscissae and weights (QUADPACK qk15).
inline constexpr std::array<double, 8> gk15_nodes{
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> gk15_weights{
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
// Gauss 7-point weights at gk15_nodes[1], [3], [5], [7].
inline constexpr std::array<double, 4> g7_weights{
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct RuleResult {
    double value;
    double error;
};

inline double checked(double v)
{
    if (!std::isfinite(v))
        throw std::domain_error("quadrature: integrand returned a non-finite value");
    return v;
}

// Embedded pair: Kronrod value with |K - G| as the local error, floored at
// the roundoff level of the absolute integrand.
template <class F>
RuleResult gk15(F& f, double a, double b)
{
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = checked(f(center));
    double kronrod = fc * gk15_weights[7];
    double gauss = fc * g7_weights[3];
    double abs_sum = std::abs(fc) * gk15_weights[7];
    for (int j = 0; j < 7; ++j) {
        const double dx = half * gk15_nodes[j];
        const double f1 = checked(f(center - dx));
        const double f2 = checked(f(center + dx));
        kronrod += gk15_weights[j] * (f1 + f2);
        abs_sum += gk15_weights[j] * (std::abs(f1) + std::abs(f2));
        if (j % 2 == 1)
            gauss += g7_weights[j / 2] * (f1 + f2);
    }
    const double len = std::abs(half);
    const double diff = std::abs(kronrod - gauss) * len;
    const double roundoff = 50.0 * std::numeric_limits<double>::epsilon() * abs_sum * len;
    return {kronrod * half, std::max(diff, roundoff)};
}

// Local bisection of one interval down to `tol`; consumes `budget`.
template <class F>
RuleResult refine_local(F& f, double a, double b, double tol, RuleResult coarse, int& budget,
                        std::int64_t& evals, int depth = 0)
{
    if (coarse.error <= tol || budget <= 0 || depth >= 48)
        return coarse;
    --budget;
    const double mid = 0.5 * (a + b);
    const RuleResult left = gk15(f, a, mid);
    const RuleResult right = gk15(f, mid, b);
    evals += 30;
    const RuleResult l = refine_local(f, a, mid, 0.5 * tol, left, budget, evals, depth + 1);
    const RuleResult r = refine_local(f, mid, b, 0.5 * tol, right, budget, evals, depth + 1);
    return {l.value + r.value, l.error + r.error};
}

// 1 - U / sqrt(1 + U^2) without cancellation.
inline double envelope_tail_p3(double u)
{
    const double s = std::sqrt(1.0 + u * u);
    return 1.0 / (s * (s + u));
}

} // namespace detail

/// Upper bound on the integral of constant * (u^2+1)^(-power/2) over [u, inf).
inline double envelope_tail_bound(const Envelope& env, double u)
{
    const double base = detail::envelope_tail_p3(u);
    const double extra = env.power > 3.0 ? std::pow(1.0 + u * u, -0.5 * (env.power - 3.0)) : 1.0;
    return env.constant * base * extra;
}

/// Smallest truncation point (to bisection precision) with tail bound <= bound.
inline double envelope_truncation_point(const Envelope& env, double bound)
{
    if (env.constant == 0.0)
        return 0.0;
    double hi = 1.0;
    while (envelope_tail_bound(env, hi) > bound) {
        hi *= 2.0;
        if (hi > 1e300)
            throw std::domain_error("envelope_truncation_point: tail bound not attainable");
    }
    double lo = 0.5 * hi;
    if (envelope_tail_bound(env, lo) <= bound)
        return lo;
    for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        (envelope_tail_bound(env, mid) > bound ? lo : hi) = mid;
    }
    return hi;
}

/// Global adaptive bisection with the G7/K15 pair.
template <class F>
QuadResult<double> integrate_adaptive(F&& f, double a, double b, const QuadratureConfig& cfg = {})
{
    cfg.validate();
    if (!(a < b) || !std::isfinite(a) || !std::isfinite(b))
        throw std::invalid_argument("integrate_adaptive: requires finite a < b");

    struct Interval {
        double a, b, value, error;
    };
    auto cmp = [](const Interval& x, const Interval& y) { return x.error < y.error; };
    std::priority_queue<Interval, std::vector<Interval>, decltype(cmp)> heap(cmp);

    QuadResult<double> res;
    const auto first = detail::gk15(f, a, b);
    res.evaluations = 15;
    heap.push({a, b, first.value, first.error});
    double total = first.value;
    double total_err = first.error;
    int subdivisions = 0;
    while (total_err > cfg.target(total) && subdivisions < cfg.max_subdivisions) {
        const Interval worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            heap.push(worst); // interval at machine resolution
            break;
        }
        const auto l = detail::gk15(f, worst.a, mid);
        const auto r = detail::gk15(f, mid, worst.b);
        res.evaluations += 30;
        ++subdivisions;
        total += l.value + r.value - worst.value;
        total_err += l.error + r.error - worst.error;
        heap.push({worst.a, mid, l.value, l.error});
        heap.push({mid, worst.b, r.value, r.error});
    }

    // Re-sum in positional order so the result does not carry drift from the
    // running updates.
    std::vector<Interval> parts;
    parts.reserve(heap.size());
    while (!heap.empty()) {
        parts.push_back(heap.top());
        heap.pop();
    }
    std::sort(parts.begin(), parts.end(), [](const Interval& x, const Interval& y) { return x.a < y.a; });
    detail::CompensatedSum v;
    detail::CompensatedSum e;
    for (const auto& p : parts) {
        v.add(p.value);
        e.add(p.error);
    }
    res.value = v.value();
    res.error_estimate = e.value();
    res.converged = res.error_estimate <= cfg.target(res.value);
    return res;
}

/// Integral of f over [a, b] split into fixed panels of width `panel_width`.
/// Every panel gets one G7/K15 pass; if the summed error misses the config
/// target, a second pass bisects panels whose error exceeds their length share.
template <class F>
QuadResult<double> integrate_paneled(F&& f, double a, double b, double panel_width,
                                     const QuadratureConfig& cfg = {})
{
    cfg.validate();
    if (!(a < b) || !(panel_width > 0.0))
        throw std::invalid_argument("integrate_paneled: requires a < b and positive panel width");
    const auto n_panels = static_cast<std::int64_t>(std::ceil((b - a) / panel_width));
    auto edge = [&](std::int64_t k) { return k >= n_panels ? b : a + double(k) * panel_width; };

    QuadResult<double> res;
    detail::CompensatedSum value;
    detail::CompensatedSum error;
    for (std::int64_t k = 0; k < n_panels; ++k) {
        const auto r = detail::gk15(f, edge(k), edge(k + 1));
        value.add(r.value);
        error.add(r.error);
    }
    res.evaluations = 15 * n_panels;
    double target = cfg.target(value.value());
    if (error.value() <= target) {
        res.value = value.value();
        res.error_estimate = error.value();
        res.converged = true;
        return res;
    }

    int remaining = cfg.max_subdivisions;
    detail::CompensatedSum value2;
    detail::CompensatedSum error2;
    const double per_length = target / (b - a);
    for (std::int64_t k = 0; k < n_panels; ++k) {
        const double lo = edge(k);
        const double hi = edge(k + 1);
        const auto coarse = detail::gk15(f, lo, hi);
        res.evaluations += 15;
        const auto r = detail::refine_local(f, lo, hi, per_length * (hi - lo), coarse, remaining,
                                            res.evaluations);
        value2.add(r.value);
        error2.add(r.error);
    }
    res.value = value2.value();
    res.error_estimate = error2.value();
    res.converged = res.error_estimate <= cfg.target(res.value);
    return res;
}

/// Integral over [0, inf) of an integrand bounded by `env`, whose fastest
/// angular frequency is `omega_max`. The domain is truncated where the
/// envelope tail bound drops below cfg.tail_tol and [0, u_max] is split into
/// half-period panels pi / omega_max. `converged` refers to the panel
/// quadrature; the tail bound is added to error_estimate on top of it.
template <class F>
QuadResult<double> integrate_semi_infinite_oscillatory(F&& f, double omega_max, const Envelope& env,
                                                       const QuadratureConfig& cfg = {})
{
    cfg.validate();
    if (env.power < 3.0)
        throw std::invalid_argument(
            "integrate_semi_infinite_oscillatory: envelope power must be >= 3");
    if (!(env.constant >= 0.0) || !std::isfinite(env.constant))
        throw std::invalid_argument("integrate_semi_infinite_oscillatory: bad envelope constant");
    if (!(omega_max > 0.0) || !std::isfinite(omega_max))
        throw std::invalid_argument("integrate_semi_infinite_oscillatory: omega_max must be positive");

    if (env.constant == 0.0) {
        const double f0 = f(0.0);
        if (f0 != 0.0)
            throw std::invalid_argument(
                "integrate_semi_infinite_oscillatory: zero envelope but nonzero integrand");
        QuadResult<double> zero;
        zero.evaluations = 1;
        return zero;
    }

    const double u_max = envelope_truncation_point(env, cfg.tail_tol);
    const double tail = envelope_tail_bound(env, u_max);
    const double panel = std::numbers::pi / omega_max;

    auto res = integrate_paneled(f, 0.0, u_max, panel, cfg);
    res.error_estimate += tail;
    return res;
}

/// Upper limit on trapezoid intervals per axis used by the 2-D rules. Nodes
/// of every level lie on the lattice -half_width + k * (2 half_width / this).
inline constexpr int max_intervals_per_axis = 2048;

namespace detail {
inline constexpr int first_intervals_per_axis = 32;
}

/// Integral of a complex f(x', x'') over [-w, w]^2, f bounded by a unit
/// Gaussian envelope exp(-(x'^2 + x''^2) / 2). Tensor-product trapezoid with
/// nested halving; the error estimate is the change between the last two
/// levels.
template <class F>
QuadResult<std::complex<double>> integrate_2d_gaussian_weighted(F&& f, double half_width = 8.0,
                                                                const QuadratureConfig& cfg = {})
{
    cfg.validate();
    if (!(half_width > 0.0))
        throw std::invalid_argument("integrate_2d_gaussian_weighted: half_width must be positive");
    using C = std::complex<double>;
    QuadResult<C> res;

    auto eval = [&](double x, double y) {
        const C v = f(x, y);
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw std::domain_error("integrate_2d_gaussian_weighted: non-finite integrand");
        ++res.evaluations;
        return v;
    };

    // Weighted node sum S_n = sum w_i w_j f(x_i, x_j) with end weights 1/2.
    // Refinement keeps old nodes and their weights, so only new nodes are added.
    int n = detail::first_intervals_per_axis;
    auto node = [&](int i, int intervals) { return -half_width + 2.0 * half_width * i / intervals; };
    auto weight = [](int i, int intervals) { return (i == 0 || i == intervals) ? 0.5 : 1.0; };

    C sum{};
    for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j)
            sum += weight(i, n) * weight(j, n) * eval(node(i, n), node(j, n));
    double h = 2.0 * half_width / n;
    C previous = sum * h * h;
    res.value = previous;
    res.converged = false;
    res.error_estimate = std::numeric_limits<double>::infinity();

    while (n < max_intervals_per_axis) {
        const int n2 = 2 * n;
        for (int i = 0; i <= n2; ++i) {
            const bool odd_i = (i % 2) == 1;
            for (int j = odd_i ? 0 : 1; j <= n2; j += odd_i ? 1 : 2)
                sum += weight(i, n2) * weight(j, n2) * eval(node(i, n2), node(j, n2));
        }
        n = n2;
        h = 2.0 * half_width / n;
        const C current = sum * h * h;
        res.value = current;
        res.error_estimate = std::abs(current - previous);
        previous = current;
        if (res.error_estimate <= cfg.target(std::abs(current))) {
            res.converged = true;
            break;
        }
    }
    return res;
}

/// Same integral for the structured integrand a(x') b(x'') k(x' - x'').
/// `table(h, n)` returns k(h d) for d = -n..n (2n + 1 values) at each
/// refinement level of spacing h = 2 half_width / n, so callers can fill a
/// level of a cached lattice in one batch.
template <class A, class B, class Table>
QuadResult<std::complex<double>> integrate_2d_difference_table(A&& a, B&& b, Table&& table,
                                                               double half_width = 8.0,
                                                               const QuadratureConfig& cfg = {})
{
    cfg.validate();
    if (!(half_width > 0.0))
        throw std::invalid_argument("integrate_2d_difference_table: half_width must be positive");
    using C = std::complex<double>;
    QuadResult<C> res;
    res.converged = false;
    res.error_estimate = std::numeric_limits<double>::infinity();

    std::vector<C> av, bv;
    C previous{};
    bool have_previous = false;
    for (int n = detail::first_intervals_per_axis; n <= max_intervals_per_axis; n *= 2) {
        const double h = 2.0 * half_width / n;
        av.resize(n + 1);
        bv.resize(n + 1);
        for (int i = 0; i <= n; ++i) {
            const double x = -half_width + h * i;
            const double w = (i == 0 || i == n) ? 0.5 : 1.0;
            av[i] = w * C(a(x));
            bv[i] = w * C(b(x));
        }
        const auto kv = table(h, n);
        if (kv.size() != static_cast<std::size_t>(2 * n + 1))
            throw std::logic_error("integrate_2d_difference_table: kernel table has wrong size");
        res.evaluations += 2 * (n + 1) + (2 * n + 1);

        C sum{};
        for (int i = 0; i <= n; ++i) {
            C row{};
            const auto* kp = kv.data() + i + n; // k[(i - j) + n] for j = 0..n
            for (int j = 0; j <= n; ++j)
                row += bv[j] * C(kp[-j]);
            sum += av[i] * row;
        }
        const C current = sum * h * h;
        if (!std::isfinite(current.real()) || !std::isfinite(current.imag()))
            throw std::domain_error("integrate_2d_difference_table: non-finite integrand");
        res.value = current;
        if (have_previous) {
            res.error_estimate = std::abs(current - previous);
            if (res.error_estimate <= cfg.target(std::abs(current))) {
                res.converged = true;
                break;
            }
        }
        previous = current;
        have_previous = true;
    }
    return res;
}

/// integrate_2d_difference_table with a pointwise kernel k(d).
template <class A, class B, class K>
QuadResult<std::complex<double>> integrate_2d_difference_kernel(A&& a, B&& b, K&& kernel,
                                                                double half_width = 8.0,
                                                                const QuadratureConfig& cfg = {})
{
    using V = std::decay_t<decltype(kernel(0.0))>;
    auto table = [&](double h, int n) {
        std::vector<V> kv(static_cast<std::size_t>(2 * n + 1));
        for (int d = -n; d <= n; ++d)
            kv[d + n] = kernel(h * d);
        return kv;
    };
    return integrate_2d_difference_table(a, b, table, half_width, cfg);
}

} // namespace decofringe::quad
