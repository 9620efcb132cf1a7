#include "tsn/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "tsn/errors.hpp"

namespace tsn {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 400;
constexpr double kMarginLeft = 64;
constexpr double kMarginRight = 16;
constexpr double kMarginTop = 36;
constexpr double kMarginBottom = 44;

struct Range {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void include(double v) {
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }

    // avoid a zero span so the projection below stays finite
    void widen() {
        if (lo > hi) {
            lo = 0;
            hi = 1;
        }
        if (hi == lo) {
            lo -= 0.5;
            hi += 0.5;
        }
    }
};

std::string fmt(double v) {
    std::ostringstream s;
    s.precision(4);
    s << v;
    return s.str();
}

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_chart(const std::string& title, const std::string& x_label,
                         const std::string& y_label, const std::vector<SvgSeries>& series) {
    Range rx, ry;
    for (const SvgSeries& s : series) {
        for (double v : s.xs) rx.include(v);
        for (double v : s.ys) ry.include(v);
    }
    rx.widen();
    ry.widen();

    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const double plot_h = kHeight - kMarginTop - kMarginBottom;
    auto px = [&](double x) { return kMarginLeft + (x - rx.lo) / (rx.hi - rx.lo) * plot_w; };
    auto py = [&](double y) { return kMarginTop + (1.0 - (y - ry.lo) / (ry.hi - ry.lo)) * plot_h; };

    std::ostringstream svg;
    svg.precision(6);
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << kWidth / 2 << "\" y=\"20\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"14\">" << escape(title) << "</text>\n";

    // axes
    svg << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop << "\" x2=\"" << kMarginLeft
        << "\" y2=\"" << kMarginTop + plot_h << "\" stroke=\"#333\"/>\n";
    svg << "<line x1=\"" << kMarginLeft << "\" y1=\"" << kMarginTop + plot_h << "\" x2=\""
        << kMarginLeft + plot_w << "\" y2=\"" << kMarginTop + plot_h << "\" stroke=\"#333\"/>\n";

    // min/max ticks on both axes
    svg << "<text x=\"" << kMarginLeft << "\" y=\"" << kHeight - 24
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(rx.lo)
        << "</text>\n";
    svg << "<text x=\"" << kMarginLeft + plot_w << "\" y=\"" << kHeight - 24
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(rx.hi)
        << "</text>\n";
    svg << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << kMarginTop + plot_h
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(ry.lo)
        << "</text>\n";
    svg << "<text x=\"" << kMarginLeft - 6 << "\" y=\"" << kMarginTop + 10
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(ry.hi)
        << "</text>\n";

    // axis labels
    svg << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 8
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << escape(x_label) << "</text>\n";
    svg << "<text x=\"14\" y=\"" << kMarginTop + plot_h / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
        << "transform=\"rotate(-90 14 " << kMarginTop + plot_h / 2 << ")\">" << escape(y_label)
        << "</text>\n";

    for (const SvgSeries& s : series) {
        std::size_t n = std::min(s.xs.size(), s.ys.size());
        if (s.points) {
            for (std::size_t i = 0; i < n; ++i) {
                if (!std::isfinite(s.xs[i]) || !std::isfinite(s.ys[i])) continue;
                svg << "<circle cx=\"" << px(s.xs[i]) << "\" cy=\"" << py(s.ys[i])
                    << "\" r=\"3\" fill=\"" << s.color << "\" fill-opacity=\"0.7\"/>\n";
            }
        } else if (n >= 2) {
            svg << "<polyline fill=\"none\" stroke=\"" << s.color
                << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < n; ++i) {
                if (i) svg << ' ';
                svg << px(s.xs[i]) << ',' << py(s.ys[i]);
            }
            svg << "\"/>\n";
        }
    }

    // legend in the top-right corner of the plot area
    double ly = kMarginTop + 6;
    for (const SvgSeries& s : series) {
        double lx = kMarginLeft + plot_w - 150;
        svg << "<rect x=\"" << lx << "\" y=\"" << ly << "\" width=\"12\" height=\"12\" fill=\""
            << s.color << "\"/>\n";
        svg << "<text x=\"" << lx + 16 << "\" y=\"" << ly + 10
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << escape(s.label)
            << "</text>\n";
        ly += 16;
    }

    svg << "</svg>\n";
    return svg.str();
}

void write_svg(const std::string& path, const std::string& svg) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataUnreadable("cannot write " + path);
    out << svg;
}

}  // namespace tsn
