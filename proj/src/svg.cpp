#include "erank/svg.hpp"

#include "erank/csv.hpp"
#include "erank/errors.hpp"
#include "erank/version.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace erank {

namespace {

constexpr const char* kFunded = "#e66101";    // orange
constexpr const char* kLottery = "#5e3c99";   // violet
constexpr const char* kRejected = "#4393c3";  // blue
constexpr const char* kNeutral = "#555555";

std::string xml_escape(const std::string& s) {
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

class SvgWriter {
public:
    SvgWriter(double width, double height) : width_(width), height_(height) {
        body_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
              << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
        body_ << "<!-- erank " << ERANK_VERSION << " -->\n";
        body_ << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    }

    void line(double x1, double y1, double x2, double y2, const std::string& color,
              double width = 1.0, bool dashed = false) {
        body_ << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x2)
              << "\" y2=\"" << fmt(y2) << "\" stroke=\"" << color << "\" stroke-width=\"" << width
              << "\"";
        if (dashed) body_ << " stroke-dasharray=\"6,4\"";
        body_ << "/>\n";
    }

    void rect(double x, double y, double w, double h, const std::string& fill,
              double opacity = 1.0) {
        body_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w)
              << "\" height=\"" << fmt(h) << "\" fill=\"" << fill << "\" fill-opacity=\""
              << opacity << "\"/>\n";
    }

    void circle(double x, double y, double r, const std::string& fill) {
        body_ << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y) << "\" r=\"" << r
              << "\" fill=\"" << fill << "\"/>\n";
    }

    void text(double x, double y, const std::string& s, double size = 11.0,
              const std::string& anchor = "start", double rotate = 0.0) {
        body_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-size=\"" << size
              << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\"";
        if (rotate != 0.0)
            body_ << " transform=\"rotate(" << rotate << ' ' << fmt(x) << ' ' << fmt(y) << ")\"";
        body_ << ">" << xml_escape(s) << "</text>\n";
    }

    void save(const std::filesystem::path& path) {
        body_ << "</svg>\n";
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write file: " + path.string());
        out << body_.str();
    }

private:
    static std::string fmt(double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", v);
        return buf;
    }
    double width_, height_;
    std::ostringstream body_;
};

}  // namespace

void write_er_plot_svg(const RankingSummary& summary, const FundingDecision* decision,
                       const std::filesystem::path& path, const std::string& title) {
    const int n = summary.n;
    const double margin_left = 60, margin_right = 20, margin_top = 40, margin_bottom = 70;
    const double slot = std::max(14.0, std::min(34.0, 900.0 / std::max(1, n)));
    const double plot_w = slot * n;
    const double plot_h = 420;
    SvgWriter svg(margin_left + plot_w + margin_right, margin_top + plot_h + margin_bottom);

    // y: rank scale, best (1) on top
    auto y_of = [&](double rank) {
        return margin_top + (rank - 0.5) / static_cast<double>(n) * plot_h;
    };
    const auto order = er_order(summary);
    auto x_of = [&](int pos) { return margin_left + (pos + 0.5) * slot; };

    svg.text(margin_left, margin_top - 16, title, 14.0);
    svg.line(margin_left, margin_top, margin_left, margin_top + plot_h, "#000000");
    svg.line(margin_left, margin_top + plot_h, margin_left + plot_w, margin_top + plot_h,
             "#000000");
    const int tick_step = std::max(1, n / 10);
    for (int r = 1; r <= n; r += tick_step) {
        svg.line(margin_left - 4, y_of(r), margin_left, y_of(r), "#000000");
        svg.text(margin_left - 8, y_of(r) + 4, std::to_string(r), 10.0, "end");
    }
    svg.text(14, margin_top + plot_h / 2, "rank (1 = best)", 11.0, "middle", -90);

    for (int pos = 0; pos < n; ++pos) {
        const int i = order[static_cast<std::size_t>(pos)];
        const auto u = static_cast<std::size_t>(i);
        std::string color = kNeutral;
        if (decision != nullptr) {
            const std::string group = group_of(*decision, i);
            color = group == "funded" ? kFunded
                    : group == "rejected" ? kRejected
                                          : kLottery;
        }
        const double x = x_of(pos);
        const double box_top = y_of(summary.cri_lower[u]) - 0.35 * slot * 0.0 -
                               plot_h / (2.0 * n);
        const double box_bottom = y_of(summary.cri_upper[u]) + plot_h / (2.0 * n);
        svg.rect(x - 0.35 * slot, box_top, 0.7 * slot, box_bottom - box_top, color, 0.25);
        svg.circle(x, y_of(summary.er[u]), 3.2, color);
        if (n <= 60)
            svg.text(x, margin_top + plot_h + 14, summary.labels[u], 9.0, "end", -60);
    }
    if (decision != nullptr) {
        const double y = y_of(decision->funding_line);
        svg.line(margin_left, y, margin_left + plot_w, y, "#1a56b0", 1.5, true);
        svg.text(margin_left + plot_w - 2, y - 5, "funding line", 10.0, "end");
    }
    svg.save(path);
}

void write_rankogram_svg(const RankingSummary& summary, const std::filesystem::path& path,
                         const std::string& title) {
    const int n = summary.n;
    const int cols = std::max(1, std::min(6, n));
    const int rows = (n + cols - 1) / cols;
    const double cell_w = 150, cell_h = 100, pad = 14, top = 40;
    SvgWriter svg(pad + cols * (cell_w + pad), top + rows * (cell_h + pad) + pad);
    svg.text(pad, 24, title, 14.0);
    for (int i = 0; i < n; ++i) {
        const int r = i / cols;
        const int c = i % cols;
        const double x0 = pad + c * (cell_w + pad);
        const double y0 = top + r * (cell_h + pad);
        svg.text(x0, y0 + 10, summary.labels[static_cast<std::size_t>(i)], 10.0);
        const double base = y0 + cell_h;
        svg.line(x0, base, x0 + cell_w, base, "#000000");
        const double bar_w = cell_w / n;
        for (int m = 0; m < n; ++m) {
            const double p = summary.rankogram[static_cast<std::size_t>(i)]
                                              [static_cast<std::size_t>(m)];
            if (p <= 0.0) continue;
            const double h = p * (cell_h - 16);
            svg.rect(x0 + m * bar_w, base - h, std::max(bar_w - 0.5, 0.5), h, kLottery, 0.8);
        }
    }
    svg.save(path);
}

void write_pcer_svg(const RankingSummary& summary, const std::filesystem::path& path,
                    const std::string& title) {
    const int n = summary.n;
    const double margin_left = 60, margin_right = 20, margin_top = 40, margin_bottom = 70;
    const double slot = std::max(14.0, std::min(34.0, 900.0 / std::max(1, n)));
    const double plot_w = slot * n, plot_h = 300;
    SvgWriter svg(margin_left + plot_w + margin_right, margin_top + plot_h + margin_bottom);
    svg.text(margin_left, margin_top - 16, title, 14.0);
    auto y_of = [&](double p) { return margin_top + p / 100.0 * plot_h; };
    svg.line(margin_left, margin_top, margin_left, margin_top + plot_h, "#000000");
    for (int p = 0; p <= 100; p += 25) {
        svg.line(margin_left - 4, y_of(p), margin_left, y_of(p), "#000000");
        svg.text(margin_left - 8, y_of(p) + 4, std::to_string(p), 10.0, "end");
    }
    svg.text(14, margin_top + plot_h / 2, "PCER (%)", 11.0, "middle", -90);
    const auto order = er_order(summary);
    for (int pos = 0; pos < n; ++pos) {
        const int i = order[static_cast<std::size_t>(pos)];
        const double x = margin_left + (pos + 0.5) * slot;
        svg.circle(x, y_of(summary.pcer[static_cast<std::size_t>(i)]), 3.0, kNeutral);
        if (n <= 60)
            svg.text(x, margin_top + plot_h + 14, summary.labels[static_cast<std::size_t>(i)],
                     9.0, "end", -60);
    }
    svg.save(path);
}

}  // namespace erank
