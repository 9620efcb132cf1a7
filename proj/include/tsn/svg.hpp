#pragma once

#include <string>
#include <vector>

namespace tsn {

// One polyline or point set on a chart.
struct SvgSeries {
    std::string label;
    std::string color = "#1f77b4";
    std::vector<double> xs;
    std::vector<double> ys;
    bool points = false;  // scatter instead of a line
};

/**
 * Renders a small standalone SVG chart: axes with min/max tick labels, the
 * given series, and a legend.  Good enough for forecast overlays and user
 * statistic scatters without an external plotting stack.
 */
std::string render_chart(const std::string& title, const std::string& x_label,
                         const std::string& y_label, const std::vector<SvgSeries>& series);

void write_svg(const std::string& path, const std::string& svg);

}  // namespace tsn
