#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "plar/errors.hpp"

namespace plar::svg {

/// One polyline on the plot. Points must have positive coordinates (the
/// plot is log-log).
struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
    std::string color = "#1f77b4";
    bool dashed = false;
    bool markers = true;
};

/// Minimal self-contained log-log SVG chart: decade grid lines, labelled
/// axes, legend. Output is deterministic for identical input.
class LogLogPlot {
public:
    LogLogPlot(std::string title, std::string x_label, std::string y_label)
        : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

    void add_series(Series s) { series_.push_back(std::move(s)); }

    std::string render() const {
        double x_min = 0, x_max = 0, y_min = 0, y_max = 0;
        bool first = true;
        for (const auto& s : series_) {
            for (const auto& [x, y] : s.points) {
                if (!(x > 0.0 && y > 0.0)) {
                    throw InvalidInput("LogLogPlot: coordinates must be positive");
                }
                const double lx = std::log10(x), ly = std::log10(y);
                if (first) {
                    x_min = x_max = lx;
                    y_min = y_max = ly;
                    first = false;
                } else {
                    x_min = std::min(x_min, lx);
                    x_max = std::max(x_max, lx);
                    y_min = std::min(y_min, ly);
                    y_max = std::max(y_max, ly);
                }
            }
        }
        if (first) throw InvalidInput("LogLogPlot: no data");
        pad_range(x_min, x_max);
        pad_range(y_min, y_max);

        std::string out;
        out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) +
               "\" height=\"" + num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) + " " +
               num(kHeight) + "\">\n";
        out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        out += "<text x=\"" + num(kWidth / 2) +
               "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"14\">" +
               title_ + "</text>\n";

        // Decade grid and tick labels.
        for (int d = static_cast<int>(std::ceil(x_min)); d <= std::floor(x_max); ++d) {
            const double px = map_x(d, x_min, x_max);
            out += line(px, kTop, px, kHeight - kBottom, "#dddddd", 1.0);
            out += "<text x=\"" + num(px) + "\" y=\"" + num(kHeight - kBottom + 16) +
                   "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
                   pow10_label(d) + "</text>\n";
        }
        for (int d = static_cast<int>(std::ceil(y_min)); d <= std::floor(y_max); ++d) {
            const double py = map_y(d, y_min, y_max);
            out += line(kLeft, py, kWidth - kRight, py, "#dddddd", 1.0);
            out += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(py + 4) +
                   "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
                   pow10_label(d) + "</text>\n";
        }
        out += line(kLeft, kHeight - kBottom, kWidth - kRight, kHeight - kBottom, "#000000", 1.2);
        out += line(kLeft, kTop, kLeft, kHeight - kBottom, "#000000", 1.2);
        out += "<text x=\"" + num((kLeft + kWidth - kRight) / 2) + "\" y=\"" +
               num(kHeight - 8) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" +
               x_label_ + "</text>\n";
        out += "<text x=\"14\" y=\"" + num((kTop + kHeight - kBottom) / 2) +
               "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
               "transform=\"rotate(-90 14 " +
               num((kTop + kHeight - kBottom) / 2) + ")\">" + y_label_ + "</text>\n";

        double legend_y = kTop + 14;
        for (const auto& s : series_) {
            std::string path = "<polyline fill=\"none\" stroke=\"" + s.color +
                               "\" stroke-width=\"1.6\"";
            if (s.dashed) path += " stroke-dasharray=\"6 4\"";
            path += " points=\"";
            for (const auto& [x, y] : s.points) {
                path += num(map_x(std::log10(x), x_min, x_max)) + "," +
                        num(map_y(std::log10(y), y_min, y_max)) + " ";
            }
            path += "\"/>\n";
            out += path;
            if (s.markers) {
                for (const auto& [x, y] : s.points) {
                    out += "<circle cx=\"" + num(map_x(std::log10(x), x_min, x_max)) +
                           "\" cy=\"" + num(map_y(std::log10(y), y_min, y_max)) +
                           "\" r=\"2.6\" fill=\"" + s.color + "\"/>\n";
                }
            }
            out += line(kWidth - kRight - 130, legend_y - 4, kWidth - kRight - 104, legend_y - 4,
                        s.color, 1.6, s.dashed);
            out += "<text x=\"" + num(kWidth - kRight - 98) + "\" y=\"" + num(legend_y) +
                   "\" font-family=\"sans-serif\" font-size=\"11\">" + s.label + "</text>\n";
            legend_y += 16;
        }
        out += "</svg>\n";
        return out;
    }

private:
    static constexpr double kWidth = 640, kHeight = 480;
    static constexpr double kLeft = 64, kRight = 20, kTop = 36, kBottom = 48;

    static void pad_range(double& lo, double& hi) {
        const double pad = std::max(0.05, (hi - lo) * 0.06);
        lo -= pad;
        hi += pad;
    }

    static std::string num(double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", v);
        return buf;
    }

    static std::string pow10_label(int d) {
        char buf[32];
        if (d >= -3 && d <= 5) {
            std::snprintf(buf, sizeof(buf), "%g", std::pow(10.0, d));
        } else {
            std::snprintf(buf, sizeof(buf), "1e%d", d);
        }
        return buf;
    }

    static double map_x(double lx, double lo, double hi) {
        return kLeft + (lx - lo) / (hi - lo) * (kWidth - kLeft - kRight);
    }
    static double map_y(double ly, double lo, double hi) {
        return kHeight - kBottom - (ly - lo) / (hi - lo) * (kHeight - kTop - kBottom);
    }

    static std::string line(double x1, double y1, double x2, double y2,
                            const std::string& color, double width, bool dashed = false) {
        std::string out = "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" +
                          num(x2) + "\" y2=\"" + num(y2) + "\" stroke=\"" + color +
                          "\" stroke-width=\"" + num(width) + "\"";
        if (dashed) out += " stroke-dasharray=\"6 4\"";
        out += "/>\n";
        return out;
    }

    std::string title_, x_label_, y_label_;
    std::vector<Series> series_;
};

}  // namespace plar::svg
