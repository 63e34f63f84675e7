// Copyright 2026 The moe-xray Authors
// SPDX-License-Identifier: Apache-2.0

#include "moexray/figures.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

#include "moexray/errors.hpp"

namespace moexray {

namespace {

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

std::string header(int w, int h) {
    return fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n",
        w, h);
}

std::string scale_color(double v) {
    const double t = std::clamp(v, 0.0, 1.0);
    auto lerp = [t](int a, int b) { return static_cast<int>(std::lround(a + (b - a) * t)); };
    return fmt::format("#{:02x}{:02x}{:02x}", lerp(0xf7, 0x08), lerp(0xfb, 0x30), lerp(0xff, 0x6b));
}

constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                              "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};

std::string glyph(std::size_t kind, double x, double y, const char* color) {
    constexpr double r = 5.0;
    switch (kind % 4) {
        case 0: return fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"{}\" fill=\"{}\"/>", x, y, r, color);
        case 1:
            return fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{}\" height=\"{}\" fill=\"{}\"/>", x - r, y - r,
                               2 * r, 2 * r, color);
        case 2:
            return fmt::format("<polygon points=\"{:.2f},{:.2f} {:.2f},{:.2f} {:.2f},{:.2f}\" fill=\"{}\"/>", x,
                               y - r, x - r, y + r, x + r, y + r, color);
        default:
            return fmt::format("<polygon points=\"{:.2f},{:.2f} {:.2f},{:.2f} {:.2f},{:.2f} {:.2f},{:.2f}\" fill=\"{}\"/>",
                               x, y - r, x + r, y, x, y + r, x - r, y, color);
    }
}

}  // namespace

std::string heatmap_svg(const CategoryMatrix& m) {
    const int n = static_cast<int>(m.categories.size());
    constexpr int cell = 70;
    constexpr int left = 90;
    constexpr int top = 50;
    const int w = left + n * cell + 20;
    const int h = top + n * cell + 40;
    std::string s = header(w, h);
    s += fmt::format("<text x=\"{}\" y=\"24\" font-size=\"14\">Routing signature similarity by category</text>\n", left);
    for (int i = 0; i < n; ++i) {
        const auto& name = escape(m.categories[static_cast<std::size_t>(i)]);
        s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n", left - 6, top + i * cell + cell / 2 + 4,
                         name);
        s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", left + i * cell + cell / 2,
                         top + n * cell + 18, name);
        for (int j = 0; j < n; ++j) {
            const auto& v = m.means[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
            const int x = left + j * cell;
            const int y = top + i * cell;
            s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"{}\" stroke=\"white\"/>\n", x, y,
                             cell, cell, v ? scale_color(*v) : std::string("#cccccc"));
            const char* ink = v && *v > 0.5 ? "white" : "black";
            s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" fill=\"{}\">{}</text>\n", x + cell / 2,
                             y + cell / 2 + 4, ink, v ? fmt::format("{:.3f}", *v) : std::string("NA"));
        }
    }
    s += "</svg>\n";
    return s;
}

std::string bars_svg(const std::vector<BarValue>& bars, const std::string& title) {
    constexpr int bar_w = 80;
    constexpr int gap = 40;
    constexpr int left = 60;
    constexpr int top = 40;
    constexpr int plot_h = 240;
    const int n = static_cast<int>(bars.size());
    const int w = left + n * (bar_w + gap) + 20;
    const int h = top + plot_h + 50;
    std::string s = header(w, h);
    s += fmt::format("<text x=\"{}\" y=\"24\" font-size=\"14\">{}</text>\n", left, escape(title));
    s += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", left, top, top + plot_h);
    s += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"black\"/>\n", left, top + plot_h,
                     w - 10);
    for (int t = 0; t <= 4; ++t) {
        const double v = t * 0.25;
        const double y = top + plot_h * (1.0 - v);
        s += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{:.2f}</text>\n", left - 6, y + 4, v);
    }
    for (int i = 0; i < n; ++i) {
        const auto& b = bars[static_cast<std::size_t>(i)];
        const double v = std::clamp(b.value, 0.0, 1.0);
        const double bh = plot_h * v;
        const int x = left + gap / 2 + i * (bar_w + gap);
        s += fmt::format("<rect x=\"{}\" y=\"{:.2f}\" width=\"{}\" height=\"{:.2f}\" fill=\"{}\"/>\n", x,
                         top + plot_h - bh, bar_w, bh, kPalette[static_cast<std::size_t>(i) % kPalette.size()]);
        s += fmt::format("<text x=\"{}\" y=\"{:.2f}\" text-anchor=\"middle\">{:.4f}</text>\n", x + bar_w / 2,
                         top + plot_h - bh - 4, b.value);
        s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", x + bar_w / 2, top + plot_h + 18,
                         escape(b.label));
    }
    s += "</svg>\n";
    return s;
}

std::string layer_signal_svg(const std::vector<std::optional<double>>& per_layer_d) {
    constexpr int left = 60;
    constexpr int top = 40;
    constexpr int plot_w = 480;
    constexpr int plot_h = 240;
    const int w = left + plot_w + 30;
    const int h = top + plot_h + 50;
    double lo = 0.0;
    double hi = 0.0;
    for (const auto& d : per_layer_d)
        if (d) {
            lo = std::min(lo, *d);
            hi = std::max(hi, *d);
        }
    if (hi - lo < 1e-12) hi = lo + 1.0;
    const std::size_t n = per_layer_d.size();
    auto px = [&](std::size_t l) { return left + (n > 1 ? plot_w * static_cast<double>(l) / static_cast<double>(n - 1) : 0.0); };
    auto py = [&](double v) { return top + plot_h * (1.0 - (v - lo) / (hi - lo)); };

    std::string s = header(w, h);
    s += fmt::format("<text x=\"{}\" y=\"24\" font-size=\"14\">Layer-wise task signal (Cohen's d)</text>\n", left);
    s += fmt::format("<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n", left, top, top + plot_h);
    s += fmt::format("<line x1=\"{0}\" y1=\"{1:.2f}\" x2=\"{2}\" y2=\"{1:.2f}\" stroke=\"#999\"/>\n", left, py(0.0),
                     left + plot_w);
    s += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{:.2f}</text>\n", left - 6, py(hi) + 4, hi);
    s += fmt::format("<text x=\"{}\" y=\"{:.1f}\" text-anchor=\"end\">{:.2f}</text>\n", left - 6, py(lo) + 4, lo);
    std::string path;
    for (std::size_t l = 0; l < n; ++l) {
        s += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", px(l), top + plot_h + 18, l);
        if (!per_layer_d[l]) continue;
        path += fmt::format("{}{:.2f},{:.2f}", path.empty() ? "" : " ", px(l), py(*per_layer_d[l]));
        s += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", px(l), py(*per_layer_d[l]),
                         kPalette[0]);
    }
    s += fmt::format("<polyline points=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"2\"/>\n", path, kPalette[0]);
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">layer</text>\n", left + plot_w / 2, h - 8);
    s += "</svg>\n";
    return s;
}

std::string scatter_svg(const Matrix& coords, const std::vector<std::string>& labels,
                        const std::vector<std::string>& categories) {
    constexpr int left = 50;
    constexpr int top = 40;
    constexpr int plot = 400;
    const int w = left + plot + 140;
    const int h = top + plot + 40;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (coords.rows() > 0 && coords.cols() >= 2) {
        xmin = xmax = coords(0, 0);
        ymin = ymax = coords(0, 1);
        for (std::size_t i = 0; i < coords.rows(); ++i) {
            xmin = std::min(xmin, coords(i, 0));
            xmax = std::max(xmax, coords(i, 0));
            ymin = std::min(ymin, coords(i, 1));
            ymax = std::max(ymax, coords(i, 1));
        }
    }
    if (xmax - xmin < 1e-12) xmax = xmin + 1.0;
    if (ymax - ymin < 1e-12) ymax = ymin + 1.0;
    auto px = [&](double v) { return left + 10 + (plot - 20) * (v - xmin) / (xmax - xmin); };
    auto py = [&](double v) { return top + 10 + (plot - 20) * (1.0 - (v - ymin) / (ymax - ymin)); };

    std::string s = header(w, h);
    s += fmt::format("<text x=\"{}\" y=\"24\" font-size=\"14\">PCA projection of routing signatures</text>\n", left);
    s += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", left, top,
                     plot, plot);
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">PC1</text>\n", left + plot / 2, top + plot + 20);
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 {} {})\">PC2</text>\n",
                     left - 12, top + plot / 2, left - 12, top + plot / 2);
    for (std::size_t i = 0; i < coords.rows() && coords.cols() >= 2; ++i) {
        const auto it = std::find(categories.begin(), categories.end(), labels[i]);
        const auto c = static_cast<std::size_t>(it - categories.begin());
        s += glyph(c, px(coords(i, 0)), py(coords(i, 1)), kPalette[c % kPalette.size()]) + "\n";
    }
    for (std::size_t c = 0; c < categories.size(); ++c) {
        const double y = top + 20 + 20.0 * static_cast<double>(c);
        s += glyph(c, left + plot + 20, y, kPalette[c % kPalette.size()]) + "\n";
        s += fmt::format("<text x=\"{}\" y=\"{:.1f}\">{}</text>\n", left + plot + 32, y + 4, escape(categories[c]));
    }
    s += "</svg>\n";
    return s;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
    out << text;
    if (!out) throw IoError(fmt::format("write error on {}", path.string()));
}

}  // namespace moexray
