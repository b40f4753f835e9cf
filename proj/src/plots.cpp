#include "kgh/plots.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "kgh/snapshot_io.hpp"

namespace kgh::svg {

namespace {

constexpr double kWidth = 640.0;
constexpr double kChartHeight = 300.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 34.0;
constexpr double kBottom = 46.0;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};

std::string escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += ch;
        }
    }
    return out;
}

std::string header(double height) {
    return fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.0f} {:.0f}\" "
        "font-family=\"sans-serif\" font-size=\"11\">\n<!-- kgh {} -->\n<rect width=\"100%\" height=\"100%\" "
        "fill=\"white\"/>\n",
        kWidth, height, kWidth, height, kToolkitVersion);
}

struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    bool log = false;

    double t(double v) const {
        const double a = log ? std::log10(v) : v;
        return (a - lo) / (hi - lo);
    }
};

Axis make_axis(const std::vector<const std::vector<double>*>& data, bool log) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto* d : data) {
        for (double v : *d) {
            if (!std::isfinite(v) || (log && !(v > 0.0))) continue;
            const double a = log ? std::log10(v) : v;
            lo = std::min(lo, a);
            hi = std::max(hi, a);
        }
    }
    if (!std::isfinite(lo)) throw std::runtime_error("no finite data to plot");
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
        lo -= log ? 0.5 : std::max(0.5, std::abs(lo) * 0.1);
        hi += log ? 0.5 : std::max(0.5, std::abs(hi) * 0.1);
    } else if (!log) {
        const double pad = 0.05 * (hi - lo);
        lo -= pad;
        hi += pad;
    }
    return {lo, hi, log};
}

std::string tick_label(double a, bool log) {
    if (log) return fmt::format("1e{:.0f}", a);
    return fmt::format("{:.3g}", a);
}

std::string chart(const LineChart& c, double y0) {
    std::vector<const std::vector<double>*> xs;
    std::vector<const std::vector<double>*> ys;
    for (const auto& s : c.series) {
        xs.push_back(&s.x);
        ys.push_back(&s.y);
    }
    const Axis ax = make_axis(xs, c.log_x);
    const Axis ay = make_axis(ys, c.log_y);
    const double pw = kWidth - kLeft - kRight;
    const double ph = kChartHeight - kTop - kBottom;
    auto px = [&](double v) { return kLeft + ax.t(v) * pw; };
    auto py = [&](double v) { return y0 + kTop + (1.0 - ay.t(v)) * ph; };

    std::string out;
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n",
                       kWidth / 2, y0 + 20, escape(c.title));
    out += fmt::format("<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"none\" stroke=\"#333\"/>\n",
                       kLeft, y0 + kTop, pw, ph);
    // Ticks: integer decades on log axes, five even steps otherwise.
    auto ticks = [](const Axis& a) {
        std::vector<double> t;
        if (a.log) {
            for (double d = std::ceil(a.lo); d <= std::floor(a.hi) + 1e-9; d += 1.0) t.push_back(d);
        }
        if (t.size() < 2) {
            t.clear();
            for (int k = 0; k <= 4; ++k) t.push_back(a.lo + (a.hi - a.lo) * k / 4.0);
        }
        return t;
    };
    for (double a : ticks(ax)) {
        const double x = kLeft + (a - ax.lo) / (ax.hi - ax.lo) * pw;
        out += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{0:.1f}\" y2=\"{2:.1f}\" stroke=\"#ddd\"/>\n", x,
                           y0 + kTop, y0 + kTop + ph);
        out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", x,
                           y0 + kTop + ph + 14, tick_label(a, ax.log));
    }
    for (double a : ticks(ay)) {
        const double y = y0 + kTop + (1.0 - (a - ay.lo) / (ay.hi - ay.lo)) * ph;
        out += fmt::format("<line x1=\"{0:.1f}\" y1=\"{1:.1f}\" x2=\"{2:.1f}\" y2=\"{1:.1f}\" stroke=\"#ddd\"/>\n", kLeft,
                           y, kLeft + pw);
        out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{}</text>\n", kLeft - 4, y + 4,
                           tick_label(a, ay.log));
    }
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">{}</text>\n", kLeft + pw / 2,
                       y0 + kChartHeight - 10, escape(c.x_label));
    out += fmt::format(
        "<text x=\"14\" y=\"{0:.1f}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {0:.1f})\">{1}</text>\n",
        y0 + kTop + ph / 2, escape(c.y_label));

    for (std::size_t i = 0; i < c.series.size(); ++i) {
        const auto& s = c.series[i];
        const char* color = kPalette[i % std::size(kPalette)];
        std::string pts;
        auto flush = [&] {
            if (!pts.empty()) {
                out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", color,
                                   pts);
            }
            pts.clear();
        };
        for (std::size_t k = 0; k < s.x.size(); ++k) {
            const bool ok = std::isfinite(s.x[k]) && std::isfinite(s.y[k]) && (!ax.log || s.x[k] > 0.0) &&
                            (!ay.log || s.y[k] > 0.0);
            if (!ok) {
                flush();
                continue;
            }
            pts += fmt::format("{:.2f},{:.2f} ", px(s.x[k]), py(s.y[k]));
            if (s.markers) {
                out += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", px(s.x[k]),
                                   py(s.y[k]), color);
            }
        }
        flush();
        out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" fill=\"{}\" text-anchor=\"end\">{}</text>\n",
                           kLeft + pw - 6, y0 + kTop + 14 + 13.0 * static_cast<double>(i), color, escape(s.label));
    }
    if (!c.annotation.empty()) {
        out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" font-size=\"12\">{}</text>\n", kLeft + 8, y0 + kTop + 16,
                           escape(c.annotation));
    }
    return out;
}

std::string color_for(double v, double lo, double hi, bool diverging) {
    if (!std::isfinite(v)) return "#999999";
    auto hex = [](double r, double g, double b) {
        auto c = [](double u) { return static_cast<int>(std::lround(255.0 * std::clamp(u, 0.0, 1.0))); };
        return fmt::format("#{:02x}{:02x}{:02x}", c(r), c(g), c(b));
    };
    if (diverging) {
        const double m = std::max(std::abs(lo), std::abs(hi));
        const double u = m > 0.0 ? v / m : 0.0;
        return u >= 0.0 ? hex(1.0, 1.0 - u, 1.0 - u) : hex(1.0 + u, 1.0 + u, 1.0);
    }
    const double u = hi > lo ? (v - lo) / (hi - lo) : 0.0;
    // Dark blue to yellow.
    return hex(0.1 + 0.9 * u, 0.1 + 0.8 * u, 0.4 * (1.0 - u) + 0.1);
}

}  // namespace

std::string render(const std::vector<LineChart>& charts) {
    std::string out = header(kChartHeight * static_cast<double>(charts.size()));
    for (std::size_t i = 0; i < charts.size(); ++i) out += chart(charts[i], kChartHeight * static_cast<double>(i));
    out += "</svg>\n";
    return out;
}

std::string render(const Heatmap& map) {
    if (map.rows <= 0 || map.cols <= 0 || map.values.size() != static_cast<std::size_t>(map.rows * map.cols)) {
        throw std::invalid_argument("heatmap dimensions do not match its values");
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (double v : map.values) {
        if (!std::isfinite(v)) continue;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double side = 480.0;
    const double cw = side / map.cols;
    const double ch = side / map.rows;
    const double x0 = (kWidth - side) / 2.0;
    const double y0 = 40.0;
    std::string out = header(side + 80.0);
    out += fmt::format("<text x=\"{:.1f}\" y=\"22\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n", kWidth / 2,
                       escape(map.title));
    // Axis 0 runs left to right, axis 1 bottom to top.
    for (int i = 0; i < map.rows; ++i) {
        for (int j = 0; j < map.cols; ++j) {
            const double v = map.values[static_cast<std::size_t>(i * map.cols + j)];
            out += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n",
                               x0 + i * cw, y0 + (map.rows - 1 - j) * ch, cw + 0.05, ch + 0.05,
                               color_for(v, lo, hi, map.diverging));
        }
    }
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"middle\">range [{:.4g}, {:.4g}]</text>\n",
                       kWidth / 2, y0 + side + 22, std::isfinite(lo) ? lo : 0.0, std::isfinite(hi) ? hi : 0.0);
    out += "</svg>\n";
    return out;
}

}  // namespace kgh::svg

namespace kgh {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<double> coordinates(const Grid& grid) {
    std::vector<double> x;
    for (int i = 0; i < grid.points(0); ++i) x.push_back(grid.coordinate(0, i));
    return x;
}

std::string snapshot_plot(const fs::path& dir, const SnapshotEntry& s) {
    fs::path stem = dir / s.csv.path;
    stem.replace_extension();
    const auto snap = import_snapshot(stem);
    const std::string when = fmt::format("t = {:.4g}", snap.time);
    if (snap.grid.dims() == 2) {
        svg::Heatmap map{"|Psi| at " + when, snap.grid.points(0), snap.grid.points(1),
                         {snap.amplitude.values().begin(), snap.amplitude.values().end()}, false};
        return svg::render(map);
    }
    const auto x = coordinates(snap.grid);
    svg::LineChart amp;
    amp.title = "|Psi| at " + when;
    amp.x_label = "x";
    amp.y_label = "|Psi|";
    amp.series.push_back({"|Psi|", x, {snap.amplitude.values().begin(), snap.amplitude.values().end()}});
    svg::LineChart vqu;
    vqu.title = "quantum potential at " + when;
    vqu.x_label = "x";
    vqu.y_label = "V_qu";
    vqu.series.push_back({"V_qu nonrel", x, {snap.vqu_nonrel.values().begin(), snap.vqu_nonrel.values().end()}});
    const auto& rel = snap.vqu_rel.values();
    if (std::any_of(rel.begin(), rel.end(), [](double v) { return std::isfinite(v); })) {
        vqu.series.push_back({"V_qu rel", x, {rel.begin(), rel.end()}});
    }
    return svg::render({amp, vqu});
}

std::string convergence_plot(const json& report) {
    svg::LineChart c{"residual rms under dt halving", "dt_snap", "rms", {}, true, true, {}};
    std::string notes;
    for (const auto& row : report.at("table")) {
        svg::Series s{row.at("equation_id").get<std::string>(), {}, {}, true};
        for (const auto& l : row.at("levels")) {
            if (l.contains("unstable")) continue;
            s.x.push_back(l.at("dt_snap").get<double>());
            s.y.push_back(l.at("rms").get<double>());
        }
        const auto& order = row.at("observed_order");
        const std::string label = order.is_null() ? (row.at("floor_limited").get<bool>() ? "at floor" : "no order")
                                                  : fmt::format("order ≈ {:.1f}", order.get<double>());
        s.label += " (" + label + ")";
        if (!order.is_null() && notes.empty()) notes = label;
        c.series.push_back(std::move(s));
    }
    c.annotation = notes;
    return svg::render({c});
}

std::string classical_plot(const json& report) {
    svg::Series s{"L2 distance", {}, {}, true};
    for (const auto& p : report.at("points")) {
        s.x.push_back(p.at("c").get<double>());
        s.y.push_back(p.at("l2_error").get<double>());
    }
    svg::LineChart c{"stripped K-G vs Schrodinger", "c", "L2 distance", {s}, true, true,
                     fmt::format("slope ≈ {:.2f}", report.at("slope").get<double>())};
    return svg::render({c});
}

std::string winding_plot(const fs::path& csv) {
    std::vector<std::string> header;
    const auto rows = read_numeric_csv(csv, header, std::numeric_limits<double>::quiet_NaN());
    if (header != std::vector<std::string>{"row", "col", "winding"}) throw std::runtime_error("not a winding CSV");
    int nr = 0;
    int nc = 0;
    for (const auto& r : rows) {
        nr = std::max(nr, static_cast<int>(r[0]) + 1);
        nc = std::max(nc, static_cast<int>(r[1]) + 1);
    }
    svg::Heatmap map{"plaquette winding", nr, nc, std::vector<double>(static_cast<std::size_t>(nr * nc)), true};
    int nonzero = 0;
    for (const auto& r : rows) {
        map.values[static_cast<std::size_t>(static_cast<int>(r[0]) * nc + static_cast<int>(r[1]))] = r[2];
        if (std::isfinite(r[2]) && r[2] != 0.0) ++nonzero;
    }
    map.title += fmt::format(" ({} nonzero cells)", nonzero);
    return svg::render(map);
}

}  // namespace

RunManifest emit_plots(const fs::path& dir) {
    RunManifest m = read_manifest(dir);
    m.plots.clear();
    m.skipped_plots.clear();
    fs::create_directories(dir / "plots");
    auto attempt = [&](const std::string& name, auto&& make) {
        try {
            write_text(dir / name, make());
            m.plots.push_back(file_entry(dir, name));
        } catch (const std::exception& e) {
            m.skipped_plots.push_back(name + ": " + e.what());
        }
    };
    for (const auto& s : m.snapshots) {
        attempt(fmt::format("plots/snapshot_{:04d}.svg", s.index), [&] { return snapshot_plot(dir, s); });
    }
    for (const auto& f : m.data) {
        if (f.path.rfind("winding/", 0) != 0) continue;
        const std::string name = "plots/" + fs::path(f.path).stem().string() + ".svg";
        attempt(name, [&] { return winding_plot(dir / f.path); });
    }
    for (const auto& f : m.reports) {
        const std::string base = fs::path(f.path).stem().string();
        if (base == "convergence") {
            attempt("plots/convergence.svg", [&] { return convergence_plot(json::parse(read_text(dir / f.path))); });
        } else if (base == "classical_limit") {
            attempt("plots/classical_limit.svg", [&] { return classical_plot(json::parse(read_text(dir / f.path))); });
        }
    }
    if (m.status != "ok") m.skipped_plots.push_back("run did not finish: " + m.status);
    write_manifest(m, dir);
    return m;
}

}  // namespace kgh
