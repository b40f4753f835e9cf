#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kgh/scenario.hpp"

namespace kgh::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    /// NaN entries break the polyline.
    std::vector<double> y;
    bool markers = false;
};

struct LineChart {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<Series> series;
    bool log_x = false;
    bool log_y = false;
    std::string annotation;
};

struct Heatmap {
    std::string title;
    int rows = 0;
    int cols = 0;
    /// Row-major; NaN cells are drawn grey.
    std::vector<double> values;
    /// Symmetric blue-white-red scale around zero instead of a sequential one.
    bool diverging = false;
};

/// Charts stacked vertically in one document.
std::string render(const std::vector<LineChart>& charts);
std::string render(const Heatmap& map);

}  // namespace kgh::svg

namespace kgh {

/// Renders SVGs for a finished run directory and records them (or the reason
/// they were skipped) in its manifest. Individual plot failures are not fatal.
RunManifest emit_plots(const std::filesystem::path& dir);

}  // namespace kgh
