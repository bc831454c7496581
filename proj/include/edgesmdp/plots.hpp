#pragma once

#include <optional>
#include <string>
#include <vector>

namespace edgesmdp {

struct MetricsTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    // Throws IoError if the column is absent.
    std::vector<double> column(const std::string& name) const;
    bool has(const std::string& name) const;
};

// Throws IoError on unreadable, empty or ragged files.
MetricsTable read_metrics_csv(const std::string& path);

struct Series {
    std::string name;
    std::vector<double> y;
};

struct ReferenceLine {
    std::string label;
    double value;
};

// Self-contained SVG: one <polyline class="series"> per series, one
// <line class="reference"> per reference value.
std::string line_chart_svg(const std::string& title, const std::vector<double>& x, const std::vector<Series>& series,
                           const std::vector<ReferenceLine>& refs);

struct PlotInputs {
    std::string metrics_csv;
    std::optional<std::string> lp_report;  // adds J* and alpha reference lines
    std::vector<double> alpha;             // used when no LP report is given
};

// Writes J.svg, G_<p>.svg and gamma_<p>.svg into out_dir and returns their
// paths. Nothing is written unless every input parses.
std::vector<std::string> emit_plots(const PlotInputs& in, const std::string& out_dir);

}  // namespace edgesmdp
