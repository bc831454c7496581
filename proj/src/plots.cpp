#include "edgesmdp/plots.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "edgesmdp/errors.hpp"

namespace edgesmdp {

namespace {

constexpr double kWidth = 640, kHeight = 360, kMargin = 48;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string escape(const std::string& s) {
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

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

bool MetricsTable::has(const std::string& name) const {
    return std::find(header.begin(), header.end(), name) != header.end();
}

std::vector<double> MetricsTable::column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw IoError("metrics CSV has no column " + name);
    const auto c = static_cast<std::size_t>(it - header.begin());
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
}

MetricsTable read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open metrics CSV " + path);
    MetricsTable t;
    std::string line;
    if (!std::getline(in, line) || line.empty()) throw IoError("metrics CSV " + path + " is empty");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.header.push_back(cell);
    }
    if (t.header.empty() || t.header[0] != "n") throw IoError("metrics CSV " + path + " has no 'n' column");
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (used != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw IoError("metrics CSV " + path + ":" + std::to_string(line_no) + ": bad number '" + cell + "'");
            }
        }
        if (row.size() != t.header.size())
            throw IoError("metrics CSV " + path + ":" + std::to_string(line_no) + ": wrong column count");
        t.rows.push_back(std::move(row));
    }
    if (t.rows.empty()) throw IoError("metrics CSV " + path + " has no data rows");
    return t;
}

std::string line_chart_svg(const std::string& title, const std::vector<double>& x, const std::vector<Series>& series,
                           const std::vector<ReferenceLine>& refs) {
    double x0 = x.empty() ? 0 : *std::min_element(x.begin(), x.end());
    double x1 = x.empty() ? 1 : *std::max_element(x.begin(), x.end());
    double y0 = std::numeric_limits<double>::infinity(), y1 = -y0;
    for (const auto& s : series)
        for (double v : s.y)
            if (std::isfinite(v)) y0 = std::min(y0, v), y1 = std::max(y1, v);
    for (const auto& r : refs) y0 = std::min(y0, r.value), y1 = std::max(y1, r.value);
    if (!std::isfinite(y0)) y0 = 0, y1 = 1;
    if (x1 == x0) x0 -= 0.5, x1 += 0.5;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;

    auto px = [&](double v) { return kMargin + (v - x0) / (x1 - x0) * (kWidth - 2 * kMargin); };
    auto py = [&](double v) { return kHeight - kMargin - (v - y0) / (y1 - y0) * (kHeight - 2 * kMargin); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"14\">"
        << escape(title) << "</text>\n";
    svg << "<g stroke=\"#444\" stroke-width=\"1\">\n"
        << "<line x1=\"" << kMargin << "\" y1=\"" << kHeight - kMargin << "\" x2=\"" << kWidth - kMargin << "\" y2=\""
        << kHeight - kMargin << "\"/>\n"
        << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\""
        << kHeight - kMargin << "\"/>\n</g>\n";
    svg << "<g font-family=\"sans-serif\" font-size=\"10\" fill=\"#444\">\n"
        << "<text x=\"" << kMargin << "\" y=\"" << kHeight - kMargin + 14 << "\">" << num(x0) << "</text>\n"
        << "<text x=\"" << kWidth - kMargin << "\" y=\"" << kHeight - kMargin + 14 << "\" text-anchor=\"end\">"
        << num(x1) << "</text>\n"
        << "<text x=\"" << kMargin - 4 << "\" y=\"" << py(y0 + pad) << "\" text-anchor=\"end\">" << num(y0 + pad)
        << "</text>\n"
        << "<text x=\"" << kMargin - 4 << "\" y=\"" << py(y1 - pad) << "\" text-anchor=\"end\">" << num(y1 - pad)
        << "</text>\n</g>\n";

    for (const auto& r : refs) {
        svg << "<line class=\"reference\" data-label=\"" << escape(r.label) << "\" x1=\"" << kMargin << "\" y1=\""
            << py(r.value) << "\" x2=\"" << kWidth - kMargin << "\" y2=\"" << py(r.value)
            << "\" stroke=\"#888\" stroke-dasharray=\"6 4\"/>\n";
        svg << "<text x=\"" << kWidth - kMargin + 2 << "\" y=\"" << py(r.value)
            << "\" font-family=\"sans-serif\" font-size=\"10\">" << escape(r.label) << "</text>\n";
    }
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto& s = series[k];
        svg << "<polyline class=\"series\" data-name=\"" << escape(s.name) << "\" fill=\"none\" stroke=\""
            << kColors[k % 6] << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.y.size() && i < x.size(); ++i) {
            if (i) svg << ' ';
            svg << num(px(x[i])) << ',' << num(py(std::isfinite(s.y[i]) ? s.y[i] : y0));
        }
        svg << "\"/>\n";
        svg << "<text x=\"" << kMargin + 8 << "\" y=\"" << kMargin + 12 * (k + 1) << "\" fill=\"" << kColors[k % 6]
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(s.name) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

std::vector<std::string> emit_plots(const PlotInputs& in, const std::string& out_dir) {
    const MetricsTable t = read_metrics_csv(in.metrics_csv);
    std::optional<double> j_star;
    std::vector<double> alpha = in.alpha;
    if (in.lp_report) {
        std::ifstream rf(*in.lp_report);
        if (!rf) throw IoError("cannot open LP report " + *in.lp_report);
        try {
            nlohmann::json rep;
            rf >> rep;
            j_star = rep.at("J_star").get<double>();
            alpha = rep.at("alpha").get<std::vector<double>>();
        } catch (const nlohmann::json::exception& e) {
            throw IoError("malformed LP report " + *in.lp_report + ": " + e.what());
        }
    }

    const auto n = t.column("n");
    std::vector<std::pair<std::string, std::string>> charts;
    {
        std::vector<ReferenceLine> refs;
        if (j_star) refs.push_back({"J*", *j_star});
        charts.emplace_back("J.svg", line_chart_svg("windowed J vs n", n, {{"J_window", t.column("J_window")}}, refs));
    }
    for (int p = 1; t.has("G_window_" + std::to_string(p)); ++p) {
        const std::string ps = std::to_string(p);
        std::vector<ReferenceLine> refs;
        if (static_cast<int>(alpha.size()) >= p) refs.push_back({"alpha_" + ps, alpha[p - 1]});
        charts.emplace_back("G_" + ps + ".svg", line_chart_svg("windowed G_" + ps + " vs n", n,
                                                               {{"G_window_" + ps, t.column("G_window_" + ps)}}, refs));
        charts.emplace_back("gamma_" + ps + ".svg",
                            line_chart_svg("gamma_" + ps + " vs n", n, {{"gamma_" + ps, t.column("gamma_" + ps)}}, {}));
    }

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
    std::vector<std::string> written;
    for (const auto& [name, body] : charts) {
        const std::string path = (std::filesystem::path(out_dir) / name).string();
        std::ofstream out(path);
        out << body;
        if (!out) throw IoError("failed writing " + path);
        written.push_back(path);
    }
    return written;
}

}  // namespace edgesmdp
