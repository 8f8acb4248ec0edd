#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mediaseries/color.hpp"
#include "mediaseries/date.hpp"
#include "mediaseries/error.hpp"
#include "mediaseries/io.hpp"
#include "mediaseries/tda.hpp"
#include "mediaseries/timeseries.hpp"

namespace mediaseries::emit {

using io::format_fixed;

// ---------------------------------------------------------------------------
// tag frequencies

struct TagCount {
    std::string tag;
    std::size_t count = 0;
    double percent = 0.0;
    bool operator==(const TagCount&) const = default;
};

struct TagFrequencyReport {
    std::vector<TagCount> rows;  // count descending, then tag
    std::size_t documents = 0;
};

/// Share of documents carrying each tag (a document counts once per tag).
inline TagFrequencyReport tag_frequency(const std::vector<std::set<std::string>>& docs, std::size_t top_n = 20) {
    if (docs.empty()) throw EmptyInput("no documents for tag frequencies");
    std::map<std::string, std::size_t> counts;
    for (const auto& tags : docs)
        for (const auto& t : tags) ++counts[t];
    TagFrequencyReport r;
    r.documents = docs.size();
    for (const auto& [tag, count] : counts)
        r.rows.push_back({tag, count, 100.0 * static_cast<double>(count) / static_cast<double>(docs.size())});
    std::stable_sort(r.rows.begin(), r.rows.end(), [](const TagCount& a, const TagCount& b) { return a.count > b.count; });
    if (r.rows.size() > top_n) r.rows.resize(top_n);
    return r;
}

inline std::string tag_frequency_csv(const TagFrequencyReport& r) {
    std::string out = "tag,count,percent\n";
    for (const auto& row : r.rows) out += io::csv_row({row.tag, std::to_string(row.count), io::format_double(row.percent)});
    return out;
}

inline TagFrequencyReport tag_frequency_from_csv(std::string_view text) {
    auto rows = io::parse_csv(text);
    if (rows.empty() || rows[0] != std::vector<std::string>{"tag", "count", "percent"})
        throw ParseError("unexpected tag frequency header");
    TagFrequencyReport r;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 3) throw ParseError("tag frequency row " + std::to_string(i + 1) + " malformed");
        r.rows.push_back({rows[i][0], static_cast<std::size_t>(io::parse_int(rows[i][1])), io::parse_double(rows[i][2])});
    }
    return r;
}

// ---------------------------------------------------------------------------
// SVG helpers

namespace detail {

inline std::string escape_xml(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string svg_open(double width, double height) {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + format_fixed(width) + "\" height=\"" +
           format_fixed(height) + "\" viewBox=\"0 0 " + format_fixed(width) + " " + format_fixed(height) +
           "\" font-family=\"sans-serif\">\n";
}

inline std::string text(double x, double y, std::string_view content, std::string_view extra = "") {
    std::string out = "<text x=\"" + format_fixed(x) + "\" y=\"" + format_fixed(y) + "\"";
    if (!extra.empty()) out += " " + std::string(extra);
    return out + ">" + escape_xml(content) + "</text>\n";
}

inline std::string rect(double x, double y, double w, double h, std::string_view fill, std::string_view extra = "") {
    std::string out = "<rect x=\"" + format_fixed(x) + "\" y=\"" + format_fixed(y) + "\" width=\"" + format_fixed(w) +
                      "\" height=\"" + format_fixed(h) + "\" fill=\"" + std::string(fill) + "\"";
    if (!extra.empty()) out += " " + std::string(extra);
    return out + "/>\n";
}

/// Maps data coordinates into a plot box.
struct Frame {
    double left = 60, top = 30, width = 720, height = 300;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

    double x(double v) const { return left + (x1 > x0 ? (v - x0) / (x1 - x0) : 0.5) * width; }
    double y(double v) const { return top + height - (y1 > y0 ? (v - y0) / (y1 - y0) : 0.5) * height; }

    std::string axes() const {
        std::string out = "<g stroke=\"#444444\" stroke-width=\"1\">\n";
        out += "<line x1=\"" + format_fixed(left) + "\" y1=\"" + format_fixed(top + height) + "\" x2=\"" +
               format_fixed(left + width) + "\" y2=\"" + format_fixed(top + height) + "\"/>\n";
        out += "<line x1=\"" + format_fixed(left) + "\" y1=\"" + format_fixed(top) + "\" x2=\"" + format_fixed(left) +
               "\" y2=\"" + format_fixed(top + height) + "\"/>\n</g>\n";
        out += text(left - 6, top + 4, format_fixed(y1), "text-anchor=\"end\" font-size=\"10\"");
        out += text(left - 6, top + height + 4, format_fixed(y0), "text-anchor=\"end\" font-size=\"10\"");
        return out;
    }
};

/// Polyline through the defined points; undefined values break the line.
inline std::string polyline(const Frame& f, const std::vector<double>& xs, const std::vector<std::optional<double>>& ys,
                            std::string_view stroke, double width = 1.5) {
    std::string out;
    std::string points;
    auto flush = [&] {
        if (!points.empty())
            out += "<polyline fill=\"none\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"" + format_fixed(width) +
                   "\" points=\"" + points + "\"/>\n";
        points.clear();
    };
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!ys[i]) {
            flush();
            continue;
        }
        if (!points.empty()) points += ' ';
        points += format_fixed(f.x(xs[i])) + "," + format_fixed(f.y(*ys[i]));
    }
    flush();
    return out;
}

inline std::pair<double, double> padded_range(const std::vector<std::optional<double>>& values) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& v : values)
        if (v) {
            lo = std::min(lo, *v);
            hi = std::max(hi, *v);
        }
    if (!std::isfinite(lo)) return {0.0, 1.0};
    if (hi == lo) return {lo - 0.5, hi + 0.5};
    const double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// calendar heatmap

struct ColorScale {
    double min = 0.0;
    double max = 1.0;
    double position(double v) const { return max > min ? (v - min) / (max - min) : 0.0; }
};

struct CalendarHeatmap {
    int year = 0;
    std::map<Date, double> cells;
    ColorScale scale;
    std::string svg;
};

inline ColorScale scale_of(const timeseries::TimeSeries& series) {
    if (series.empty()) return {};
    ColorScale s{series.points[0].value, series.points[0].value};
    for (const auto& p : series.points) {
        s.min = std::min(s.min, p.value);
        s.max = std::max(s.max, p.value);
    }
    return s;
}

/// Twelve month panels (weeks as rows, Monday-first weekdays as columns).
/// Days without data are drawn neutral. Without an explicit scale the
/// colors span the whole series, so panels for different years compare.
inline CalendarHeatmap render_heatmap(const timeseries::TimeSeries& series, int year,
                                      std::optional<ColorScale> scale = std::nullopt) {
    using namespace std::chrono;
    if (series.granularity != timeseries::Granularity::daily) throw ShapeMismatch("heatmap needs a daily series");
    CalendarHeatmap h;
    h.year = year;
    for (const auto& p : series.points)
        if (static_cast<int>(p.date.year()) == year) h.cells[p.date] = p.value;
    if (h.cells.empty()) throw YearOutOfRange("no data in " + std::to_string(year));
    h.scale = scale ? *scale : scale_of(series);

    constexpr double cell = 14.0, gap = 2.0, panel_w = 7 * cell + 20, panel_h = 6 * cell + 30, margin = 20;
    const double width = margin * 2 + 4 * panel_w, height = margin * 2 + 3 * panel_h + 30;
    static const char* months[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
    std::string svg = detail::svg_open(width, height);
    svg += detail::text(margin, margin, std::to_string(year), "font-size=\"14\"");
    for (unsigned m = 1; m <= 12; ++m) {
        const double px = margin + ((m - 1) % 4) * panel_w, py = margin + 20 + ((m - 1) / 4) * panel_h;
        svg += detail::text(px, py + 10, months[m - 1], "font-size=\"10\"");
        const Date first{std::chrono::year{year}, month{m}, day{1}};
        const unsigned offset = iso_weekday_index(first);
        const unsigned days = static_cast<unsigned>(year_month_day_last{std::chrono::year{year}, month_day_last{month{m}}}.day());
        for (unsigned d = 1; d <= days; ++d) {
            const Date date{std::chrono::year{year}, month{m}, day{d}};
            const unsigned slot = offset + d - 1;
            const double x = px + (slot % 7) * cell, y = py + 16 + (slot / 7) * cell;
            auto it = h.cells.find(date);
            const std::string attrs = "data-date=\"" + format_date(date) + "\"" +
                                      (it != h.cells.end() ? " data-value=\"" + format_fixed(it->second) + "\"" : "");
            svg += detail::rect(x, y, cell - gap, cell - gap,
                                it != h.cells.end() ? color::ramp_hex(h.scale.position(it->second)) : color::kNeutral, attrs);
        }
    }
    // legend
    const double ly = height - margin - 10;
    for (int i = 0; i < 10; ++i)
        svg += detail::rect(margin + 60 + i * 12, ly - 10, 12, 10, color::ramp_hex(i / 9.0));
    svg += detail::text(margin, ly, format_fixed(h.scale.min), "font-size=\"10\"");
    svg += detail::text(margin + 60 + 10 * 12 + 6, ly, format_fixed(h.scale.max), "font-size=\"10\"");
    svg += "</svg>\n";
    h.svg = std::move(svg);
    return h;
}

// ---------------------------------------------------------------------------
// line plots and charts

/// Observed series with its moving-average trend.
inline std::string decomposition_svg(const timeseries::Decomposition& d, std::string_view title) {
    detail::Frame f;
    std::vector<double> xs;
    std::vector<std::optional<double>> observed;
    for (std::size_t i = 0; i < d.dates.size(); ++i) {
        xs.push_back(static_cast<double>(i));
        observed.push_back(d.observed[i]);
    }
    f.x1 = xs.empty() ? 1.0 : xs.back();
    std::tie(f.y0, f.y1) = detail::padded_range(observed);
    std::string svg = detail::svg_open(f.left + f.width + 20, f.top + f.height + 40);
    svg += detail::text(f.left, 18, title, "font-size=\"13\"");
    svg += f.axes();
    svg += detail::polyline(f, xs, observed, "#999999", 1.0);
    svg += detail::polyline(f, xs, d.trend, "#a50026", 2.0);
    if (!d.dates.empty()) {
        svg += detail::text(f.left, f.top + f.height + 16, format_date(d.dates.front()), "font-size=\"10\"");
        svg += detail::text(f.left + f.width, f.top + f.height + 16, format_date(d.dates.back()),
                            "text-anchor=\"end\" font-size=\"10\"");
    }
    return svg + "</svg>\n";
}

/// Fit with its 99% band; anomalies as red dots.
inline std::string anomaly_svg(const timeseries::AnomalyReport& r, std::string_view title) {
    auto rows = r.rows;
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.date < b.date; });
    detail::Frame f;
    std::vector<double> xs;
    std::vector<std::optional<double>> obs, exp, lo, hi, all;
    const double start = rows.empty() ? 0.0 : static_cast<double>(day_number(rows.front().date));
    for (const auto& row : rows) {
        xs.push_back(static_cast<double>(day_number(row.date)) - start);
        obs.push_back(row.observed);
        exp.push_back(row.expected);
        lo.push_back(row.lower);
        hi.push_back(row.upper);
        all.insert(all.end(), {row.observed, row.lower, row.upper});
    }
    f.x1 = xs.empty() ? 1.0 : std::max(1.0, xs.back());
    std::tie(f.y0, f.y1) = detail::padded_range(all);
    std::string svg = detail::svg_open(f.left + f.width + 20, f.top + f.height + 40);
    svg += detail::text(f.left, 18, title, "font-size=\"13\"");
    svg += f.axes();
    svg += detail::polyline(f, xs, lo, "#abd9e9", 1.0);
    svg += detail::polyline(f, xs, hi, "#abd9e9", 1.0);
    svg += detail::polyline(f, xs, exp, "#313695", 1.5);
    for (std::size_t i = 0; i < rows.size(); ++i)
        svg += "<circle cx=\"" + format_fixed(f.x(xs[i])) + "\" cy=\"" + format_fixed(f.y(rows[i].observed)) + "\" r=\"" +
               (rows[i].is_anomaly ? "3.0000\" fill=\"#d7191c\" data-date=\"" + format_date(rows[i].date) + "\"/>\n"
                                   : "1.5000\" fill=\"#555555\"/>\n");
    return svg + "</svg>\n";
}

inline std::string ccf_svg(const timeseries::CcfResult& c, std::string_view title) {
    detail::Frame f;
    f.x0 = c.lags.empty() ? 0 : c.lags.front() - 0.5;
    f.x1 = c.lags.empty() ? 1 : c.lags.back() + 0.5;
    f.y0 = -1.0;
    f.y1 = 1.0;
    std::string svg = detail::svg_open(f.left + f.width + 20, f.top + f.height + 40);
    svg += detail::text(f.left, 18, title, "font-size=\"13\"");
    svg += f.axes();
    const double bar = f.width / std::max<double>(1.0, static_cast<double>(c.lags.size())) * 0.6;
    for (std::size_t i = 0; i < c.lags.size(); ++i) {
        const double x = f.x(c.lags[i]) - bar / 2, y0 = f.y(0.0), y1 = f.y(c.correlations[i]);
        svg += detail::rect(x, std::min(y0, y1), bar, std::abs(y1 - y0), c.lags[i] == c.peak_lag ? "#a50026" : "#4575b4",
                            "data-lag=\"" + std::to_string(c.lags[i]) + "\"");
    }
    svg += detail::text(f.left + f.width, 18, "peak lag " + std::to_string(c.peak_lag), "text-anchor=\"end\" font-size=\"11\"");
    return svg + "</svg>\n";
}

/// Horizontal bars, one per tag, labelled with the percentage.
inline std::string tag_frequency_svg(const TagFrequencyReport& r, std::string_view title) {
    const double row_h = 18, left = 160, bar_w = 480;
    const double height = 40 + row_h * static_cast<double>(r.rows.size()) + 10;
    std::string svg = detail::svg_open(left + bar_w + 80, height);
    svg += detail::text(10, 18, title, "font-size=\"13\"");
    double top = 0.0;
    for (const auto& row : r.rows) top = std::max(top, row.percent);
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        const double y = 30 + row_h * static_cast<double>(i);
        const double w = top > 0 ? bar_w * r.rows[i].percent / top : 0.0;
        svg += detail::text(left - 6, y + 12, r.rows[i].tag, "text-anchor=\"end\" font-size=\"11\"");
        svg += detail::rect(left, y, w, row_h - 4, "#4575b4");
        svg += detail::text(left + w + 4, y + 12, format_fixed(r.rows[i].percent, 2) + "%", "font-size=\"10\"");
    }
    return svg + "</svg>\n";
}

// ---------------------------------------------------------------------------
// tables

/// Flagged dates, newest first, with the day's mean GBV probability and a
/// headline when one is known for that date.
inline std::string anomaly_table_csv(const timeseries::AnomalyReport& r, const std::map<Date, std::string>& headlines = {}) {
    std::string out = "date,mean_probability,headline\n";
    auto rows = r.anomalies();
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return b.date < a.date; });
    for (const auto& row : rows) {
        auto it = headlines.find(row.date);
        out += io::csv_row({format_date(row.date), io::format_double(row.observed), it == headlines.end() ? "" : it->second});
    }
    return out;
}

// ---------------------------------------------------------------------------
// report bundles

/// Writes `<stem>.csv` and `<stem>.svg`; returns the paths written.
inline std::vector<std::filesystem::path> render_report(const timeseries::Decomposition& d, const std::filesystem::path& dir,
                                                        const std::string& stem) {
    std::vector<std::filesystem::path> paths = {dir / (stem + ".csv"), dir / (stem + ".svg")};
    io::write_file(paths[0], timeseries::decomposition_to_csv(d));
    io::write_file(paths[1], decomposition_svg(d, stem));
    return paths;
}

inline std::vector<std::filesystem::path> render_report(const timeseries::AnomalyReport& r, const std::filesystem::path& dir,
                                                        const std::string& stem,
                                                        const std::map<Date, std::string>& headlines = {}) {
    std::vector<std::filesystem::path> paths = {dir / (stem + ".csv"), dir / (stem + "_table.csv"), dir / (stem + ".svg")};
    io::write_file(paths[0], timeseries::anomalies_to_csv(r));
    io::write_file(paths[1], anomaly_table_csv(r, headlines));
    io::write_file(paths[2], anomaly_svg(r, stem));
    return paths;
}

inline std::vector<std::filesystem::path> render_report(const timeseries::CcfResult& c, const std::filesystem::path& dir,
                                                        const std::string& stem) {
    std::vector<std::filesystem::path> paths = {dir / (stem + ".csv"), dir / (stem + ".svg")};
    io::write_file(paths[0], timeseries::ccf_to_csv(c));
    io::write_file(paths[1], ccf_svg(c, stem));
    return paths;
}

inline std::vector<std::filesystem::path> render_report(const tda::MapperGraph& g, const std::filesystem::path& dir,
                                                        const std::string& stem) {
    std::vector<std::filesystem::path> paths = {dir / (stem + ".json"), dir / (stem + ".dot")};
    io::write_file(paths[0], tda::graph_to_json(g).dump(1) + "\n");
    io::write_file(paths[1], tda::graph_to_dot(g));
    return paths;
}

inline std::vector<std::filesystem::path> render_report(const TagFrequencyReport& r, const std::filesystem::path& dir,
                                                        const std::string& stem) {
    std::vector<std::filesystem::path> paths = {dir / (stem + ".csv"), dir / (stem + ".svg")};
    io::write_file(paths[0], tag_frequency_csv(r));
    io::write_file(paths[1], tag_frequency_svg(r, stem));
    return paths;
}

}  // namespace mediaseries::emit
