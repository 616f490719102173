#pragma once

// Tabular output: CSV with "# key=value" header lines, JSON, and minimal SVG
// line charts. Numbers are written in shortest round-trip form so identical
// inputs give byte-identical files.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

namespace decofringe {

inline constexpr const char* tool_name = "decofringe";
inline constexpr const char* tool_version = "0.1.0";

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Cell = std::variant<double, std::string>;

struct Table {
    std::vector<std::pair<std::string, std::string>> meta;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add_meta(std::string key, std::string value) { meta.emplace_back(std::move(key), std::move(value)); }
    void add_meta(std::string key, double value);
    void add_row(std::vector<Cell> row)
    {
        if (row.size() != columns.size())
            throw std::logic_error("Table::add_row: row width does not match the column count");
        rows.push_back(std::move(row));
    }
    std::vector<double> numeric_column(std::size_t j) const;
};

inline std::string format_number(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    return fmt::format("{}", v);
}

inline void Table::add_meta(std::string key, double value) { add_meta(std::move(key), format_number(value)); }

inline std::vector<double> Table::numeric_column(std::size_t j) const
{
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) {
        const auto* d = std::get_if<double>(&r.at(j));
        if (!d)
            throw std::logic_error("Table::numeric_column: column holds text");
        out.push_back(*d);
    }
    return out;
}

inline void write_csv(std::ostream& os, const Table& t)
{
    for (const auto& [k, v] : t.meta)
        os << "# " << k << '=' << v << '\n';
    for (std::size_t j = 0; j < t.columns.size(); ++j)
        os << (j ? "," : "") << t.columns[j];
    os << '\n';
    for (const auto& r : t.rows) {
        for (std::size_t j = 0; j < r.size(); ++j) {
            if (j)
                os << ',';
            if (const auto* d = std::get_if<double>(&r[j]))
                os << format_number(*d);
            else
                os << std::get<std::string>(r[j]);
        }
        os << '\n';
    }
}

inline nlohmann::ordered_json to_json(const Table& t)
{
    nlohmann::ordered_json j;
    nlohmann::ordered_json meta = nlohmann::ordered_json::object();
    for (const auto& [k, v] : t.meta)
        meta[k] = v;
    j["meta"] = meta;
    j["columns"] = t.columns;
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& r : t.rows) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (const auto& c : r) {
            if (const auto* d = std::get_if<double>(&c))
                row.push_back(std::isfinite(*d) ? nlohmann::ordered_json(*d) : nlohmann::ordered_json(format_number(*d)));
            else
                row.push_back(std::get<std::string>(c));
        }
        rows.push_back(row);
    }
    j["rows"] = rows;
    return j;
}

inline void write_json(std::ostream& os, const Table& t) { os << to_json(t).dump(2) << '\n'; }

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

struct ChartSpec {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    int width = 720;
    int height = 440;
};

namespace detail {

inline std::string xml_escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '&':
            out += "&amp;";
            break;
        case '"':
            out += "&quot;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

} // namespace detail

/// Line chart: frame, five ticks per axis, one polyline per series, legend.
inline void write_svg(std::ostream& os, const ChartSpec& spec, const std::vector<Series>& series)
{
    constexpr double left = 80, right = 20, top = 40, bottom = 60;
    const double pw = spec.width - left - right;
    const double ph = spec.height - top - bottom;
    auto tx = [&](double x) { return spec.log_x ? std::log10(x) : x; };

    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : series) {
        if (s.x.size() != s.y.size())
            throw std::logic_error("write_svg: series x/y length mismatch");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i]) || (spec.log_x && !(s.x[i] > 0.0)))
                continue;
            x0 = std::min(x0, tx(s.x[i]));
            x1 = std::max(x1, tx(s.x[i]));
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    }
    if (!(x0 < x1)) {
        x0 = 0.0;
        x1 = 1.0;
    }
    if (!(y0 < y1)) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double x) { return left + (tx(x) - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return top + (y1 - y) / (y1 - y0) * ph; };

    static constexpr const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd"};
    os << fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">)",
                      spec.width, spec.height, spec.width, spec.height)
       << '\n';
    os << R"(<rect width="100%" height="100%" fill="white"/>)" << '\n';
    os << fmt::format(R"(<text x="{:.1f}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>)",
                      left + pw / 2, detail::xml_escape(spec.title))
       << '\n';
    os << fmt::format(R"(<rect x="{}" y="{}" width="{:.1f}" height="{:.1f}" fill="none" stroke="black"/>)", left, top,
                      pw, ph)
       << '\n';
    for (int i = 0; i <= 4; ++i) {
        const double fx = x0 + (x1 - x0) * i / 4.0;
        const double label_x = spec.log_x ? std::pow(10.0, fx) : fx;
        const double sx = left + pw * i / 4.0;
        os << fmt::format(R"(<line x1="{0:.1f}" y1="{1:.1f}" x2="{0:.1f}" y2="{2:.1f}" stroke="black"/>)", sx, top + ph,
                          top + ph + 5)
           << '\n';
        os << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-family="sans-serif" font-size="11" text-anchor="middle">{:.4g}</text>)",
                          sx, top + ph + 18, label_x)
           << '\n';
        const double fy = y0 + (y1 - y0) * i / 4.0;
        const double sy = py(fy);
        os << fmt::format(R"(<line x1="{0:.1f}" y1="{2:.1f}" x2="{1:.1f}" y2="{2:.1f}" stroke="black"/>)", left - 5, left,
                          sy)
           << '\n';
        os << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-family="sans-serif" font-size="11" text-anchor="end">{:.4g}</text>)",
                          left - 8, sy + 4, fy)
           << '\n';
    }
    os << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>)",
                      left + pw / 2, spec.height - 16.0, detail::xml_escape(spec.x_label))
       << '\n';
    os << fmt::format(R"svg(<text x="18" y="{0:.1f}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 18 {0:.1f})">{1}</text>)svg",
                      top + ph / 2, detail::xml_escape(spec.y_label))
       << '\n';
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        const char* color = colors[k % std::size(colors)];
        os << fmt::format(R"(<polyline fill="none" stroke="{}" stroke-width="1.5" points=")", color);
        bool first = true;
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.y[i]) || (spec.log_x && !(s.x[i] > 0.0)))
                continue;
            os << (first ? "" : " ") << fmt::format("{:.2f},{:.2f}", px(s.x[i]), py(s.y[i]));
            first = false;
        }
        os << R"("/>)" << '\n';
        const double ly = top + 16.0 + 16.0 * k;
        os << fmt::format(R"(<line x1="{0:.1f}" y1="{2:.1f}" x2="{1:.1f}" y2="{2:.1f}" stroke="{3}" stroke-width="2"/>)",
                          left + pw - 150, left + pw - 126, ly, color)
           << '\n';
        os << fmt::format(R"(<text x="{:.1f}" y="{:.1f}" font-family="sans-serif" font-size="11">{}</text>)",
                          left + pw - 120, ly + 4, detail::xml_escape(s.label))
           << '\n';
    }
    os << "</svg>\n";
}

/// Writes through a temporary string so a failed computation never leaves a
/// partial file behind.
inline void write_file(const std::string& path, const std::string& content)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f)
        throw IoError("cannot open '" + path + "' for writing");
    f << content;
    f.close();
    if (!f)
        throw IoError("failed writing '" + path + "'");
}

inline std::string csv_string(const Table& t)
{
    std::ostringstream os;
    write_csv(os, t);
    return os.str();
}

inline std::string json_string(const Table& t)
{
    std::ostringstream os;
    write_json(os, t);
    return os.str();
}

inline std::string svg_string(const ChartSpec& spec, const std::vector<Series>& series)
{
    std::ostringstream os;
    write_svg(os, spec, series);
    return os.str();
}

} // namespace decofringe
