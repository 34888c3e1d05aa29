#pragma once

// Output files: CSV tables, verification reports and static SVG plots.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "analysis.hpp"

namespace scaleclock {

/// Shortest text that reads back to the same double.
inline std::string fmt_exact(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct CsvTable {
    std::string name;  ///< file name without extension
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    CsvTable& add(std::vector<std::string> row) {
        require(row.size() == header.size(), ErrorKind::precondition, "csv row width differs from the header");
        rows.push_back(std::move(row));
        return *this;
    }
    CsvTable& add_numbers(const std::vector<double>& row) {
        std::vector<std::string> r;
        for (double v : row) r.push_back(fmt_exact(v));
        return add(std::move(r));
    }
};

inline void write_csv(const std::filesystem::path& dir, const CsvTable& t) {
    std::ofstream out(dir / (t.name + ".csv"));
    if (!out) fail(ErrorKind::parameter, "cannot write " + (dir / (t.name + ".csv")).string());
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
        out << '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) line(r);
}

inline CsvTable claims_table(const VerificationReport& r) {
    CsvTable t{"claims", {"claim", "target", "estimate", "tolerance", "rule", "pass"}, {}};
    for (const Claim& c : r.claims)
        t.add({c.name, fmt_exact(c.target), fmt_exact(c.estimate), fmt_exact(c.tolerance), "\"" + c.rule + "\"",
               c.pass ? "1" : "0"});
    return t;
}

inline nlohmann::json report_json(const VerificationReport& r, int format_version) {
    nlohmann::json j;
    j["format_version"] = format_version;
    j["scenario"] = r.scenario;
    j["inputs"] = nlohmann::json::object();
    for (const auto& [k, v] : r.inputs) j["inputs"][k] = v;
    j["claims"] = nlohmann::json::array();
    for (const Claim& c : r.claims) {
        auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(fmt_exact(v)); };
        j["claims"].push_back({{"name", c.name},
                               {"target", num(c.target)},
                               {"estimate", num(c.estimate)},
                               {"tolerance", num(c.tolerance)},
                               {"rule", c.rule},
                               {"pass", c.pass}});
    }
    j["all_pass"] = r.all_pass();
    j["runtime_s"] = r.runtime_s;
    return j;
}

// ---------------------------------------------------------------------------
// SVG

class SvgPlot {
public:
    enum class Style { line, step, points };

    SvgPlot(std::string title = "", std::string xlabel = "x", std::string ylabel = "y")
        : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

    SvgPlot& add(std::string name, std::vector<double> x, std::vector<double> y, Style style = Style::line) {
        require(x.size() == y.size(), ErrorKind::precondition, "plot series needs equal lengths");
        series_.push_back({std::move(name), std::move(x), std::move(y), style});
        return *this;
    }
    /// Empirical CDF of a sample as a step series.
    SvgPlot& add_ecdf(std::string name, std::vector<double> sample) {
        std::sort(sample.begin(), sample.end());
        std::vector<double> y(sample.size());
        for (std::size_t i = 0; i < sample.size(); ++i) y[i] = static_cast<double>(i + 1) / sample.size();
        return add(std::move(name), std::move(sample), std::move(y), Style::step);
    }
    SvgPlot& log_x(bool on = true) {
        log_x_ = on;
        return *this;
    }
    bool empty() const { return series_.empty(); }

    std::string render() const {
        const double W = 640, H = 420, L = 70, R = 170, T = 40, B = 50;
        double x0 = kInf, x1 = -kInf, y0 = kInf, y1 = -kInf;
        for (const auto& s : series_)
            for (std::size_t i = 0; i < s.x.size(); ++i) {
                const double x = tx(s.x[i]);
                if (!std::isfinite(x) || !std::isfinite(s.y[i])) continue;
                x0 = std::min(x0, x);
                x1 = std::max(x1, x);
                y0 = std::min(y0, s.y[i]);
                y1 = std::max(y1, s.y[i]);
            }
        if (!(x1 > x0)) x1 = x0 + 1, x0 -= 1;
        if (!(y1 > y0)) y1 = y0 + 1, y0 -= 1;
        auto px = [&](double x) { return L + (tx(x) - x0) / (x1 - x0) * (W - L - R); };
        auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
        static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
        std::string o;
        o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" + num(H) + "\">\n";
        o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        o += "<text x=\"" + num(W / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + esc(title_) +
             "</text>\n";
        o += "<rect x=\"" + num(L) + "\" y=\"" + num(T) + "\" width=\"" + num(W - L - R) + "\" height=\"" +
             num(H - T - B) + "\" fill=\"none\" stroke=\"black\"/>\n";
        for (int k = 0; k <= 4; ++k) {
            const double xv = x0 + (x1 - x0) * k / 4, yv = y0 + (y1 - y0) * k / 4;
            const double gx = L + (W - L - R) * k / 4, gy = H - B - (H - T - B) * k / 4;
            o += "<text x=\"" + num(gx) + "\" y=\"" + num(H - B + 16) + "\" text-anchor=\"middle\" font-size=\"10\">" +
                 tick(log_x_ ? std::pow(10.0, xv) : xv) + "</text>\n";
            o += "<text x=\"" + num(L - 6) + "\" y=\"" + num(gy + 3) + "\" text-anchor=\"end\" font-size=\"10\">" +
                 tick(yv) + "</text>\n";
        }
        o += "<text x=\"" + num(L + (W - L - R) / 2) + "\" y=\"" + num(H - 12) +
             "\" text-anchor=\"middle\" font-size=\"12\">" + esc(xlabel_) + "</text>\n";
        o += "<text x=\"16\" y=\"" + num(T + (H - T - B) / 2) + "\" font-size=\"12\" transform=\"rotate(-90 16 " +
             num(T + (H - T - B) / 2) + ")\" text-anchor=\"middle\">" + esc(ylabel_) + "</text>\n";
        for (std::size_t k = 0; k < series_.size(); ++k) {
            const auto& s = series_[k];
            const std::string col = colors[k % 6];
            if (s.style == Style::points) {
                for (std::size_t i = 0; i < s.x.size(); ++i)
                    if (std::isfinite(tx(s.x[i])) && std::isfinite(s.y[i]))
                        o += "<circle cx=\"" + num(px(s.x[i])) + "\" cy=\"" + num(py(s.y[i])) + "\" r=\"3\" fill=\"" +
                             col + "\"/>\n";
            } else {
                std::string d;
                double prev_y = kNaN;
                // ECDFs of large samples are thinned to about 2000 vertices
                const std::size_t stride = std::max<std::size_t>(1, s.x.size() / 2000);
                for (std::size_t i = 0; i < s.x.size(); i += stride) {
                    if (!std::isfinite(tx(s.x[i])) || !std::isfinite(s.y[i])) continue;
                    const double X = px(s.x[i]), Y = py(s.y[i]);
                    if (d.empty())
                        d += "M" + num(X) + " " + num(Y);
                    else if (s.style == Style::step)
                        d += " L" + num(X) + " " + num(prev_y) + " L" + num(X) + " " + num(Y);
                    else
                        d += " L" + num(X) + " " + num(Y);
                    prev_y = Y;
                }
                o += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + col + "\" stroke-width=\"1.5\"/>\n";
            }
            const double ly = T + 14 + 18.0 * k;
            o += "<rect x=\"" + num(W - R + 10) + "\" y=\"" + num(ly - 8) + "\" width=\"12\" height=\"8\" fill=\"" + col +
                 "\"/>\n";
            o += "<text x=\"" + num(W - R + 28) + "\" y=\"" + num(ly) + "\" font-size=\"11\">" + esc(s.name) +
                 "</text>\n";
        }
        o += "</svg>\n";
        return o;
    }

    void write(const std::filesystem::path& file) const {
        std::ofstream out(file);
        if (!out) fail(ErrorKind::parameter, "cannot write " + file.string());
        out << render();
    }

private:
    struct Series {
        std::string name;
        std::vector<double> x, y;
        Style style;
    };

    double tx(double x) const { return log_x_ ? (x > 0 ? std::log10(x) : kNaN) : x; }

    static std::string num(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return buf;
    }
    static std::string tick(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.3g", v);
        return buf;
    }
    static std::string esc(const std::string& s) {
        std::string o;
        for (char c : s) {
            if (c == '<')
                o += "&lt;";
            else if (c == '>')
                o += "&gt;";
            else if (c == '&')
                o += "&amp;";
            else
                o += c;
        }
        return o;
    }

    std::string title_, xlabel_, ylabel_;
    std::vector<Series> series_;
    bool log_x_ = false;
};

}  // namespace scaleclock
