#include "disorder_stop/plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dstop {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 20.0;
constexpr double kBottom = 60.0;
constexpr std::array<const char*, 6> kColors{"#1f77b4", "#d62728", "#2ca02c",
                                             "#9467bd", "#ff7f0e", "#17becf"};

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

}  // namespace

std::string render_boundary_svg(const std::vector<PlotSeries>& series) {
    if (series.empty()) throw std::invalid_argument("render_boundary_svg: nothing to plot");
    double t_min = std::numeric_limits<double>::infinity();
    double t_max = -t_min;
    double a_min = 0.0;
    double a_max = -t_min;
    for (const auto& s : series) {
        if (s.boundary.grid.size() == 0 || s.boundary.grid.size() != s.boundary.values.size())
            throw std::invalid_argument("render_boundary_svg: malformed boundary '" + s.label + "'");
        t_min = std::min(t_min, s.boundary.grid.minCoeff());
        t_max = std::max(t_max, s.boundary.grid.maxCoeff());
        a_min = std::min(a_min, s.boundary.values.minCoeff());
        a_max = std::max(a_max, s.boundary.values.maxCoeff());
    }
    if (!(t_max > t_min)) t_max = t_min + 1.0;
    if (!(a_max > a_min)) a_max = a_min + 1.0;
    a_max += 0.05 * (a_max - a_min);

    const double plot_w = kWidth - kLeft - kRight;
    const double plot_h = kHeight - kTop - kBottom;
    auto sx = [&](double t) { return kLeft + plot_w * (t - t_min) / (t_max - t_min); };
    auto sy = [&](double a) { return kTop + plot_h * (1.0 - (a - a_min) / (a_max - a_min)); };

    std::ostringstream os;
    os.precision(6);
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
       << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" fill=\"white\"/>\n";

    // axes and ticks
    os << "<g stroke=\"black\" stroke-width=\"1\">\n"
       << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\"" << kLeft + plot_w
       << "\" y2=\"" << kTop + plot_h << "\"/>\n"
       << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\""
       << kTop + plot_h << "\"/>\n</g>\n";
    os << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
    constexpr int ticks = 5;
    for (int i = 0; i <= ticks; ++i) {
        const double t = t_min + (t_max - t_min) * i / ticks;
        const double a = a_min + (a_max - a_min) * i / ticks;
        os << "<text x=\"" << sx(t) << "\" y=\"" << kTop + plot_h + 18 << "\" text-anchor=\"middle\">"
           << t << "</text>\n";
        os << "<text x=\"" << kLeft - 8 << "\" y=\"" << sy(a) + 4 << "\" text-anchor=\"end\">" << a
           << "</text>\n";
    }
    os << "<text class=\"axis-label\" x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kHeight - 15
       << "\" text-anchor=\"middle\">t</text>\n"
       << "<text class=\"axis-label\" x=\"18\" y=\"" << kTop + plot_h / 2
       << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << kTop + plot_h / 2
       << ")\">a(t)</text>\n</g>\n";

    os.precision(10);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const auto& b = series[i].boundary;
        os << "<polyline fill=\"none\" stroke=\"" << kColors[i % kColors.size()]
           << "\" stroke-width=\"1.5\" data-label=\"" << escape(series[i].label) << "\" points=\"";
        for (Eigen::Index k = 0; k < b.grid.size(); ++k) {
            if (k) os << ' ';
            os << sx(b.grid(k)) << ',' << sy(b.values(k));
        }
        os << "\"/>\n";
        os << "<text x=\"" << kLeft + plot_w - 10 << "\" y=\"" << kTop + 16 + 16 * i
           << "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"end\" fill=\""
           << kColors[i % kColors.size()] << "\">" << escape(series[i].label) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace dstop
