#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace hbsim {

/// Minimal self-contained SVG line plots; presentation only, nothing here
/// feeds back into metrics.
namespace svg {

struct Series {
    std::string label;
    std::string color = "#1f77b4";
    std::vector<double> x;
    std::vector<double> y;
};

struct Plot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    std::vector<double> dotted_vlines;  // e.g. a predicted stability cutoff
    bool log_y = false;
};

namespace detail {

inline std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace detail

inline void render(std::ostream& os, const Plot& plot) {
    const double width = 860.0, height = 480.0;
    const double ml = 72.0, mr = 24.0, mt = 40.0, mb = 56.0;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const Series& s : plot.series) {
        for (double v : s.x) { xmin = std::min(xmin, v); xmax = std::max(xmax, v); }
        for (double v : s.y) {
            if (plot.log_y && v <= 0.0) continue;
            ymin = std::min(ymin, v);
            ymax = std::max(ymax, v);
        }
    }
    for (double v : plot.dotted_vlines) { xmin = std::min(xmin, v); xmax = std::max(xmax, v); }
    if (!(xmin < xmax)) { xmin -= 1.0; xmax += 1.0; }
    if (!(ymin < ymax)) { ymin -= 1.0; ymax += 1.0; }
    if (plot.log_y) { ymin = std::log10(ymin); ymax = std::log10(ymax); }
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;

    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) {
        if (plot.log_y) y = std::log10(std::max(y, 1e-300));
        return mt + ph - (y - ymin) / (ymax - ymin) * ph;
    };

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" "
          "font-family=\"sans-serif\">" << plot.title << "</text>\n";

    // frame and ticks
    os << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 5; ++i) {
        const double fx = xmin + (xmax - xmin) * i / 5.0;
        const double gx = px(fx);
        os << "<line x1=\"" << gx << "\" y1=\"" << mt + ph << "\" x2=\"" << gx << "\" y2=\""
           << mt + ph + 5 << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << gx << "\" y=\"" << mt + ph + 20
           << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
           << detail::num(fx) << "</text>\n";
        const double fy = ymin + (ymax - ymin) * i / 5.0;
        const double gy = mt + ph - ph * i / 5.0;
        os << "<line x1=\"" << ml - 5 << "\" y1=\"" << gy << "\" x2=\"" << ml << "\" y2=\"" << gy
           << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << ml - 8 << "\" y=\"" << gy + 4
           << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
           << detail::num(plot.log_y ? std::pow(10.0, fy) : fy) << "</text>\n";
    }
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 12
       << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">"
       << plot.x_label << "</text>\n";
    os << "<text x=\"18\" y=\"" << mt + ph / 2
       << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" "
          "transform=\"rotate(-90 18 " << mt + ph / 2 << ")\">" << plot.y_label << "</text>\n";

    for (double v : plot.dotted_vlines) {
        const double gx = px(v);
        os << "<line x1=\"" << gx << "\" y1=\"" << mt << "\" x2=\"" << gx << "\" y2=\""
           << mt + ph << "\" stroke=\"black\" stroke-dasharray=\"4 4\"/>\n";
    }

    double legend_y = mt + 16.0;
    for (const Series& s : plot.series) {
        // keep the polyline size sane for long traces
        const std::size_t n = s.x.size();
        const std::size_t stride = std::max<std::size_t>(1, n / 4000);
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.2\" points=\"";
        for (std::size_t i = 0; i < n; i += stride) {
            if (plot.log_y && s.y[i] <= 0.0) continue;
            os << detail::num(px(s.x[i])) << ',' << detail::num(py(s.y[i])) << ' ';
        }
        if (n > 0 && (n - 1) % stride != 0 && !(plot.log_y && s.y[n - 1] <= 0.0)) {
            os << detail::num(px(s.x[n - 1])) << ',' << detail::num(py(s.y[n - 1]));
        }
        os << "\"/>\n";
        if (!s.label.empty()) {
            os << "<line x1=\"" << ml + pw - 150 << "\" y1=\"" << legend_y << "\" x2=\""
               << ml + pw - 126 << "\" y2=\"" << legend_y << "\" stroke=\"" << s.color
               << "\" stroke-width=\"2\"/>\n";
            os << "<text x=\"" << ml + pw - 120 << "\" y=\"" << legend_y + 4
               << "\" font-size=\"12\" font-family=\"sans-serif\">" << s.label << "</text>\n";
            legend_y += 18.0;
        }
    }
    os << "</svg>\n";
}

inline void write(const std::string& path, const Plot& plot) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    render(os, plot);
    if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace svg
}  // namespace hbsim
