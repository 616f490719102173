#pragma once

// Command-line front end. `parse_args` turns argv into a RunConfig, `run`
// executes it. Exit codes: 0 success, 1 usage or validation error,
// 2 numerical failure, 3 I/O failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "decofringe/decoherence.hpp"
#include "decofringe/estimation.hpp"
#include "decofringe/fringe.hpp"
#include "decofringe/io.hpp"
#include "decofringe/parallel.hpp"
#include "decofringe/params.hpp"
#include "decofringe/quad.hpp"

namespace decofringe::cli {

enum class Subcommand { fringe, visibility, fisher, bounds, scan, mle, reproduce };
enum class OutputFormat { csv, json, svg };

inline const char* to_string(Subcommand s)
{
    static constexpr const char* names[] = {"fringe", "visibility", "fisher", "bounds", "scan", "mle", "reproduce"};
    return names[static_cast<int>(s)];
}

enum ExitCode : int { ok = 0, usage_error = 1, numerical_error = 2, io_error = 3 };

struct RunConfig {
    Subcommand subcommand = Subcommand::fringe;
    ExperimentParams params;
    GridOptions grid;
    // file for single-output commands, directory for reproduce; stdout when empty
    std::optional<std::string> out;
    OutputFormat format = OutputFormat::csv;
    std::uint64_t seed = 1;
    quad::QuadratureConfig quad;

    std::string scan_param = "m";
    double scan_from = 0.01;
    double scan_to = 0.2;
    int scan_steps = 20;
    bool scan_log = false;

    Param free = Param::g;
    std::size_t samples = 10000;
    std::size_t trials = 200;
    std::optional<double> bracket_lo;
    std::optional<double> bracket_hi;

    int figure = 0;
};

struct ParseOutcome {
    std::optional<RunConfig> config;
    // set when parsing ended without a runnable config (help, usage error)
    int exit_code = ok;
};

inline ParseOutcome parse_args(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    RunConfig cfg;
    CLI::App app{"Decoherence of a double-slit particle by a massive scalar field: fringes, "
                 "visibility, Fisher information and estimation bounds",
                 tool_name};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", tool_version);

    std::string format = "csv";
    std::string free = "g";
    auto common = [&](CLI::App* s) {
        s->add_option("--m", cfg.params.m, "field mass (inverse slit widths)");
        s->add_option("--g", cfg.params.g, "coupling constant");
        s->add_option("--L", cfg.params.L, "half slit separation");
        s->add_option("--T", cfg.params.T, "interaction time");
        s->add_option("--tau", cfg.params.tau, "screen time ratio t / m_p");
        s->add_option("--x-min", cfg.grid.x_min, "screen window start");
        s->add_option("--x-max", cfg.grid.x_max, "screen window end");
        s->add_option("--points", cfg.grid.points, "screen grid points")->check(CLI::Range(5, 10000000));
        s->add_option("--out", cfg.out, "output file (directory for reproduce)");
        s->add_option("--format", format, "csv, json or svg")->check(CLI::IsMember({"csv", "json", "svg"}));
        s->add_option("--seed", cfg.seed, "random seed");
        s->add_option("--rel-tol", cfg.quad.rel_tol, "relative quadrature tolerance");
        s->add_option("--abs-tol", cfg.quad.abs_tol, "absolute quadrature tolerance");
    };

    auto* fringe = app.add_subcommand("fringe", "screen density with and without decoherence");
    common(fringe);
    auto* vis = app.add_subcommand("visibility", "fringe visibility against e^-W");
    common(vis);
    auto* fisher = app.add_subcommand("fisher", "Fisher information matrix by every method");
    common(fisher);
    auto* bounds = app.add_subcommand("bounds", "classical signal-to-noise bounds");
    common(bounds);
    auto* scan = app.add_subcommand("scan", "sweep one parameter");
    common(scan);
    scan->add_option("--param", cfg.scan_param, "parameter to sweep")
        ->check(CLI::IsMember({"m", "g", "L", "T", "tau"}));
    scan->add_option("--from", cfg.scan_from, "first value");
    scan->add_option("--to", cfg.scan_to, "last value");
    scan->add_option("--steps", cfg.scan_steps, "number of values")->check(CLI::Range(2, 100000));
    scan->add_flag("--log", cfg.scan_log, "log-spaced values");
    auto* mle = app.add_subcommand("mle", "Monte-Carlo maximum likelihood against the Cramer-Rao bound");
    common(mle);
    mle->add_option("--free", free, "parameter to estimate")->check(CLI::IsMember({"m", "g"}));
    mle->add_option("--samples", cfg.samples, "screen hits per trial")->check(CLI::PositiveNumber);
    mle->add_option("--trials", cfg.trials, "repetitions")->check(CLI::Range(2, 100000000));
    mle->add_option("--bracket-lo", cfg.bracket_lo, "lower end of the search bracket");
    mle->add_option("--bracket-hi", cfg.bracket_hi, "upper end of the search bracket");
    auto* repro = app.add_subcommand("reproduce", "regenerate a figure's CSV and SVG files");
    common(repro);
    repro->add_option("figure", cfg.figure, "figure number")->required()->check(CLI::IsMember({2, 4, 5, 7}));

    try {
        std::vector<std::string> args;
        for (int i = argc - 1; i > 0; --i)
            args.emplace_back(argv[i]);
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return {std::nullopt, ok};
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return {std::nullopt, ok};
    } catch (const CLI::CallForVersion& e) {
        out << tool_version << '\n';
        return {std::nullopt, ok};
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return {std::nullopt, usage_error};
    }

    const std::pair<CLI::App*, Subcommand> subs[] = {
        {fringe, Subcommand::fringe}, {vis, Subcommand::visibility}, {fisher, Subcommand::fisher},
        {bounds, Subcommand::bounds}, {scan, Subcommand::scan},      {mle, Subcommand::mle},
        {repro, Subcommand::reproduce}};
    for (const auto& [app_ptr, kind] : subs)
        if (app_ptr->parsed())
            cfg.subcommand = kind;
    cfg.format = format == "json" ? OutputFormat::json : format == "svg" ? OutputFormat::svg : OutputFormat::csv;
    cfg.free = free == "m" ? Param::m : Param::g;
    return {cfg, ok};
}

namespace detail {

inline void add_common_meta(Table& t, const RunConfig& cfg, const ExperimentParams& p)
{
    t.add_meta("tool", tool_name);
    t.add_meta("version", tool_version);
    t.add_meta("command", to_string(cfg.subcommand));
    t.add_meta("m", p.m);
    t.add_meta("g", p.g);
    t.add_meta("L", p.L);
    t.add_meta("T", p.T);
    t.add_meta("tau", p.tau);
    t.add_meta("rel_tol", cfg.quad.rel_tol);
    t.add_meta("abs_tol", cfg.quad.abs_tol);
    t.add_meta("max_subdivisions", double(cfg.quad.max_subdivisions));
    t.add_meta("tail_tol", cfg.quad.tail_tol);
}

inline void warn_regime(const ExperimentParams& p, std::ostream& err)
{
    for (const auto& w : validate_regime(p))
        err << "warning: " << w.message << '\n';
}

struct Chart {
    ChartSpec spec;
    std::vector<std::size_t> y_columns;
};

inline std::vector<Series> chart_series(const Table& t, const Chart& c)
{
    std::vector<Series> out;
    const auto xs = t.numeric_column(0);
    for (auto j : c.y_columns)
        out.push_back({t.columns[j], xs, t.numeric_column(j)});
    return out;
}

inline void emit(const RunConfig& cfg, const Table& t, const Chart& chart, std::ostream& out)
{
    std::string body;
    switch (cfg.format) {
    case OutputFormat::csv:
        body = csv_string(t);
        break;
    case OutputFormat::json:
        body = json_string(t);
        break;
    case OutputFormat::svg:
        body = svg_string(chart.spec, chart_series(t, chart));
        break;
    }
    if (cfg.out)
        write_file(*cfg.out, body);
    else
        out << body;
}

inline Table fringe_table(const RunConfig& cfg, const ExperimentParams& p)
{
    ProfileOptions opt;
    opt.grid = cfg.grid;
    const auto free = make_profile(p, p.tau, DensityMethod::Free, opt, cfg.quad);
    const auto approx = make_profile(p, p.tau, DensityMethod::ApproxW, opt, cfg.quad);
    Table t;
    add_common_meta(t, cfg, p);
    t.add_meta("w", approx.w);
    t.add_meta("norm_free", free.norm);
    t.add_meta("norm_approx", approx.norm);
    t.columns = {"x", "p_free", "p_approx"};
    for (std::size_t i = 0; i < free.xs.size(); ++i)
        t.add_row({free.xs[i], free.ps[i], approx.ps[i]});
    return t;
}

inline Table free_table(const RunConfig& cfg, const ExperimentParams& p)
{
    ProfileOptions opt;
    opt.grid = cfg.grid;
    const auto free = make_profile(p, p.tau, DensityMethod::Free, opt, cfg.quad);
    Table t;
    add_common_meta(t, cfg, p);
    t.add_meta("norm_free", free.norm);
    t.columns = {"x", "p_free"};
    for (std::size_t i = 0; i < free.xs.size(); ++i)
        t.add_row({free.xs[i], free.ps[i]});
    return t;
}

inline Table visibility_table(const RunConfig& cfg, const ExperimentParams& p)
{
    const auto exact = w_exact(2.0 * p.L, p.T, p.m, p.g, cfg.quad);
    const auto asym = w_asymptotic(p.L, p.m, p.g);
    const double L = p.L;
    const double w = exact.w;
    const auto v_approx = visibility([&](double x) { return density_approx_w(x, p.tau, L, w); }, p.tau, L);
    const auto v_free = visibility([&](double x) { return density_free(x, p.tau, L); }, p.tau, L);
    Table t;
    add_common_meta(t, cfg, p);
    t.columns = {"quantity", "value"};
    t.add_row({std::string("w_exact"), w});
    t.add_row({std::string("w_exact_error"), exact.error_estimate});
    t.add_row({std::string("w_asymptotic"), asym.w});
    t.add_row({std::string("exp_minus_w"), std::exp(-w)});
    t.add_row({std::string("visibility_approx"), v_approx.v});
    t.add_row({std::string("visibility_free"), v_free.v});
    t.add_row({std::string("visibility_limit"), visibility_limit(p)});
    t.add_row({std::string("x_star"), v_approx.x_star});
    return t;
}

inline void fisher_row(Table& t, const std::string& name, const FisherMatrix& f)
{
    t.add_row({name, f.f_mm, f.f_mg, f.f_gg, f.error_estimate, f.determinant()});
}

inline Table fisher_table(const RunConfig& cfg, const ExperimentParams& p)
{
    const auto dv = w_exact(2.0 * p.L, p.T, p.m, p.g, cfg.quad);
    Table t;
    add_common_meta(t, cfg, p);
    t.add_meta("w", dv.w);
    t.add_meta("grad_m", dv.grad_m);
    t.add_meta("grad_g", dv.grad_g);
    const auto nd = null_direction(dv.grad_m, dv.grad_g);
    t.add_meta("null_direction_m", nd[0]);
    t.add_meta("null_direction_g", nd[1]);
    t.columns = {"method", "f_mm", "f_mg", "f_gg", "error_estimate", "determinant"};
    std::vector<Cell> points;
    ProfileOptions opt;
    opt.grid = cfg.grid;
    if (p.tau > 0.0) {
        const ApproxDensityFamily fam{p.L, p.tau, dv};
        auto [lo, hi] = fisher_screen_range(p.L, p.tau);
        const auto numeric = cfg.grid.x_min || cfg.grid.x_max
                                 ? fisher_numeric(fam, linspace(cfg.grid.x_min.value_or(lo),
                                                                cfg.grid.x_max.value_or(hi), 2 * cfg.grid.points - 1))
                                 : fisher_numeric(p, p.tau, cfg.quad, 2 * cfg.grid.points - 1);
        fisher_row(t, "numeric_definition", numeric);
        fisher_row(t, "finite_time_integral", fisher_finite_time(dv, p.L, p.tau, cfg.quad));
    }
    fisher_row(t, "distant_screen_integral", fisher_distant_screen(dv, p.L, cfg.quad));
    fisher_row(t, "asymptotic_closed_form", fisher_asymptotic(dv));
    fisher_row(t, "asymptotic_long_interaction", fisher_asymptotic(w_asymptotic(p.L, p.m, p.g)));
    return t;
}

inline Table bounds_table(const RunConfig& cfg, const ExperimentParams& p)
{
    const auto b = classical_bounds(p.m, p.g, p.L);
    Table t;
    add_common_meta(t, cfg, p);
    t.columns = {"quantity", "value"};
    t.add_row({std::string("two_m_L"), 2.0 * p.m * p.L});
    t.add_row({std::string("g_over_m"), p.g / p.m});
    t.add_row({std::string("w_asymptotic"), b.w});
    t.add_row({std::string("visibility_limit"), std::exp(-b.w)});
    t.add_row({std::string("m2_fm"), b.m2_fm});
    t.add_row({std::string("g2_fg"), b.g2_fg});
    return t;
}

inline Table scan_table(const RunConfig& cfg, const ExperimentParams& base)
{
    if (cfg.scan_log && !(cfg.scan_from > 0.0 && cfg.scan_to > 0.0))
        throw std::invalid_argument("scan: --log needs positive --from and --to");
    const int n = cfg.scan_steps;
    std::vector<double> values(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double f = double(i) / (n - 1);
        values[i] = cfg.scan_log ? cfg.scan_from * std::pow(cfg.scan_to / cfg.scan_from, f)
                                 : cfg.scan_from + (cfg.scan_to - cfg.scan_from) * f;
    }
    auto at = [&](double v) {
        ExperimentParams p = base;
        const std::string& k = cfg.scan_param;
        (k == "m" ? p.m : k == "g" ? p.g : k == "L" ? p.L : k == "T" ? p.T : p.tau) = v;
        p.validate();
        return p;
    };
    for (double v : values)
        at(v);

    std::vector<std::vector<Cell>> rows(values.size());
    parallel_for(values.size(), [&](std::size_t i) {
        const auto p = at(values[i]);
        const auto dv = w_exact(2.0 * p.L, p.T, p.m, p.g, cfg.quad);
        const double asym = w_asymptotic(p.L, p.m, p.g).w;
        double vis = std::exp(-dv.w);
        double f_mm = 0.0, f_gg = 0.0;
        if (p.tau > 0.0) {
            const double L = p.L;
            vis = visibility([&](double x) { return density_approx_w(x, p.tau, L, dv.w); }, p.tau, L).v;
            const auto f = fisher_finite_time(dv, p.L, p.tau, cfg.quad);
            f_mm = f.f_mm;
            f_gg = f.f_gg;
        }
        rows[i] = {values[i], dv.w, asym, vis, std::exp(-asym), p.m * p.m * f_mm, p.g * p.g * f_gg};
    });
    Table t;
    add_common_meta(t, cfg, base);
    t.add_meta("scan_param", cfg.scan_param);
    t.columns = {cfg.scan_param, "w_exact", "w_asymptotic", "visibility_approx", "visibility_limit", "m2_fm",
                 "g2_fg"};
    for (auto& r : rows)
        t.add_row(std::move(r));
    return t;
}

inline Table mle_table(const RunConfig& cfg, const ExperimentParams& p)
{
    const double truth = cfg.free == Param::g ? p.g : p.m;
    if (!(truth > 0.0))
        throw std::invalid_argument("mle: the estimated parameter must be positive");
    const std::pair<double, double> bracket{cfg.bracket_lo.value_or(0.5 * truth), cfg.bracket_hi.value_or(2.0 * truth)};
    const auto rep = run_mle_experiment(p, p.tau, cfg.free, cfg.samples, cfg.trials, cfg.seed, bracket, cfg.quad);
    Table t;
    add_common_meta(t, cfg, p);
    t.add_meta("seed", std::to_string(cfg.seed));
    t.add_meta("free", to_string(cfg.free));
    t.add_meta("n_samples", std::to_string(rep.n_samples));
    t.add_meta("n_trials", std::to_string(rep.n_trials));
    t.add_meta("bracket_lo", bracket.first);
    t.add_meta("bracket_hi", bracket.second);
    t.add_meta("mean", rep.mean);
    t.add_meta("standard_error", rep.standard_error);
    t.add_meta("sample_variance", rep.sample_variance);
    t.add_meta("fisher", rep.fisher);
    t.add_meta("crb", rep.crb);
    t.add_meta("ratio", rep.ratio);
    t.add_meta("snr", rep.snr);
    t.add_meta("snr_bound", rep.snr_bound);
    t.add_meta("boundary_hits", std::to_string(rep.boundary_hits));
    t.add_meta("wide_variance", rep.wide_variance ? "true" : "false");
    t.columns = {"trial", "estimate"};
    for (std::size_t i = 0; i < rep.estimates.size(); ++i)
        t.add_row({double(i), rep.estimates[i]});
    return t;
}

struct FigureFile {
    std::string stem;
    Table table;
    Chart chart;
};

inline void write_figure(const std::filesystem::path& dir, const FigureFile& f, std::ostream& out)
{
    const auto csv = (dir / (f.stem + ".csv")).string();
    const auto svg = (dir / (f.stem + ".svg")).string();
    write_file(csv, csv_string(f.table));
    write_file(svg, svg_string(f.chart.spec, chart_series(f.table, f.chart)));
    out << csv << '\n' << svg << '\n';
}

inline std::vector<FigureFile> figure_files(const RunConfig& cfg, std::ostream& err)
{
    std::vector<FigureFile> files;
    RunConfig c = cfg;
    c.grid = {};
    switch (cfg.figure) {
    case 2:
        for (double tau : {0.0, 20.0}) {
            ExperimentParams p;
            p.L = 10.0;
            p.tau = tau;
            const std::string tag = tau == 0.0 ? "0" : "20";
            warn_regime(p, err);
            files.push_back({"fig2_tau" + tag, free_table(c, p),
                             {{"Free two-slit density, L = 10, tau = " + tag, "x", "p(x)"}, {1}}});
        }
        break;
    case 4: {
        ExperimentParams p{0.05, 0.15, 10.0, 20.0, 20.0};
        warn_regime(p, err);
        files.push_back({"fig4", fringe_table(c, p),
                         {{"Density with and without the field, m = 0.05, g = 0.15, T = 20, tau = 20", "x", "p(x)"},
                          {1, 2}}});
        break;
    }
    case 5: {
        constexpr int n = 200;
        constexpr double ratio = 1.5;
        const double m = 0.05;
        Table vis, bnd;
        ExperimentParams base{m, ratio * m, 10.0, 20.0, 1e3};
        add_common_meta(vis, c, base);
        add_common_meta(bnd, c, base);
        for (auto* t : {&vis, &bnd}) {
            t->add_meta("g_over_m", ratio);
            t->add_meta("note", "closed forms at long interaction time and distant screen; L = two_m_L / (2m)");
        }
        vis.columns = {"two_m_L", "visibility"};
        bnd.columns = {"two_m_L", "m2_fm", "g2_fg"};
        for (int i = 0; i < n; ++i) {
            const double z = 0.2 * std::pow(100.0, double(i) / (n - 1));
            ExperimentParams p = base;
            p.L = z / (2.0 * m);
            const auto b = classical_bounds(p.m, p.g, p.L);
            vis.add_row({z, visibility_limit(p)});
            bnd.add_row({z, b.m2_fm, b.g2_fg});
        }
        files.push_back({"fig5_visibility", vis, {{"Visibility at g/m = 1.5", "2mL", "visibility", true}, {1}}});
        files.push_back({"fig5_bounds", bnd, {{"Classical bounds at g/m = 1.5", "2mL", "theta^2 F", true}, {1, 2}}});
        break;
    }
    case 7: {
        constexpr int n = 400;
        const auto peak = find_fi_peak(0.1, 10.0);
        Table t;
        ExperimentParams base;
        add_common_meta(t, c, base);
        t.add_meta("two_m_L", "inf");
        t.add_meta("peak_g_over_m", peak.ratio);
        t.add_meta("peak_value", peak.value);
        t.columns = {"g_over_m", "m2_fm"};
        for (int i = 0; i < n; ++i) {
            const double q = 0.1 * std::pow(100.0, double(i) / (n - 1));
            t.add_row({q, fi_limit_profile(q)});
        }
        files.push_back({"fig7", t, {{"Classical bound as 2mL -> infinity", "g/m", "m^2 F(m)", true}, {1}}});
        break;
    }
    default:
        throw std::invalid_argument("reproduce: figure must be one of 2, 4, 5, 7");
    }
    return files;
}

} // namespace detail

inline int run(const RunConfig& cfg, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    try {
        cfg.quad.validate();
        if (cfg.subcommand != Subcommand::reproduce) {
            cfg.params.validate();
            detail::warn_regime(cfg.params, err);
        }
        const auto& p = cfg.params;
        const auto xy = [](std::string title, std::string xl, std::string yl, std::vector<std::size_t> cols,
                           bool log_x = false) {
            return detail::Chart{{std::move(title), std::move(xl), std::move(yl), log_x}, std::move(cols)};
        };
        switch (cfg.subcommand) {
        case Subcommand::fringe:
            detail::emit(cfg, detail::fringe_table(cfg, p), xy("Screen density", "x", "p(x)", {1, 2}), out);
            break;
        case Subcommand::visibility:
            if (cfg.format == OutputFormat::svg)
                throw std::invalid_argument("visibility: svg output is not available for a summary table");
            detail::emit(cfg, detail::visibility_table(cfg, p), {}, out);
            break;
        case Subcommand::fisher:
            if (cfg.format == OutputFormat::svg)
                throw std::invalid_argument("fisher: svg output is not available for a summary table");
            detail::emit(cfg, detail::fisher_table(cfg, p), {}, out);
            break;
        case Subcommand::bounds:
            if (cfg.format == OutputFormat::svg)
                throw std::invalid_argument("bounds: svg output is not available for a summary table");
            detail::emit(cfg, detail::bounds_table(cfg, p), {}, out);
            break;
        case Subcommand::scan:
            detail::emit(cfg, detail::scan_table(cfg, p),
                         xy("Scan over " + cfg.scan_param, cfg.scan_param, "value", {1, 2}, cfg.scan_log), out);
            break;
        case Subcommand::mle:
            detail::emit(cfg, detail::mle_table(cfg, p), xy("MLE estimates", "trial", "estimate", {1}), out);
            break;
        case Subcommand::reproduce: {
            const std::filesystem::path dir = cfg.out.value_or(".");
            if (!std::filesystem::is_directory(dir))
                throw IoError("reproduce: output directory '" + dir.string() + "' does not exist");
            for (const auto& f : detail::figure_files(cfg, err))
                detail::write_figure(dir, f, out);
            break;
        }
        }
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return io_error;
    } catch (const NumericalError& e) {
        err << "error: " << e.what() << '\n';
        return numerical_error;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return usage_error;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << '\n';
        return usage_error;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return numerical_error;
    }
    return ok;
}

inline int main_entry(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    auto parsed = parse_args(argc, argv, out, err);
    if (!parsed.config)
        return parsed.exit_code;
    return run(*parsed.config, out, err);
}

} // namespace decofringe::cli
