#include "kgh/snapshot_io.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace kgh {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void put(std::string& line, double v) {
    line += fmt::format("{:.17g}", v);
    line += ',';
}

double parse_double(const std::string& cell, double missing) {
    if (cell.empty()) return missing;
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size()) throw std::runtime_error("malformed number in CSV: '" + cell + "'");
    return v;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::filesystem::path with_ext(const std::filesystem::path& stem, const char* ext) {
    auto p = stem;
    p += ext;
    return p;
}

}  // namespace

std::vector<std::string> snapshot_columns(int dims) {
    std::vector<std::string> cols{"i"};
    if (dims == 2) cols.push_back("j");
    for (const char* c : {"re_psi", "im_psi", "amp", "action", "rho", "j_x"}) cols.emplace_back(c);
    if (dims == 2) cols.emplace_back("j_y");
    for (const char* c : {"vqu_rel", "vqu_nonrel", "mask"}) cols.emplace_back(c);
    return cols;
}

std::string to_string(EnergySign sign) {
    switch (sign) {
        case EnergySign::matter: return "matter";
        case EnergySign::antimatter: return "antimatter";
        case EnergySign::mixed: return "mixed";
    }
    return "mixed";
}

nlohmann::json to_json(const PhysicalParams& params) {
    return {{"hbar", params.hbar}, {"mass", params.mass}, {"c", params.c}, {"charge", params.charge}};
}

nlohmann::json grid_to_json(const Grid& grid) {
    nlohmann::json points = nlohmann::json::array();
    nlohmann::json lengths = nlohmann::json::array();
    nlohmann::json origin = nlohmann::json::array();
    for (int a = 0; a < grid.dims(); ++a) {
        points.push_back(grid.points(a));
        lengths.push_back(grid.length(a));
        origin.push_back(grid.origin(a));
    }
    return {{"points", points}, {"lengths", lengths}, {"origin", origin}};
}

Grid grid_from_json(const nlohmann::json& j) {
    const auto points = j.at("points").get<std::vector<int>>();
    return Grid::create(static_cast<int>(points.size()), points, j.at("lengths").get<std::vector<double>>(),
                        j.at("origin").get<std::vector<double>>());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << text;
    out.close();
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void export_snapshot(const std::filesystem::path& stem, const ComplexField& psi, const HydroState& hydro,
                     double time, const PhysicalParams& params, const std::string& kind) {
    const Grid& grid = psi.grid();
    const int dims = grid.dims();
    const auto cols = snapshot_columns(dims);

    std::string text;
    text.reserve(grid.size() * 200);
    for (std::size_t c = 0; c < cols.size(); ++c) {
        text += cols[c];
        text += c + 1 < cols.size() ? ',' : '\n';
    }
    std::string line;
    for (std::size_t n = 0; n < grid.size(); ++n) {
        line.clear();
        for (int a = 0; a < dims; ++a) line += fmt::format("{},", grid.axis_index(n, a));
        put(line, psi[n].real());
        put(line, psi[n].imag());
        put(line, hydro.amplitude[n]);
        put(line, hydro.action[n]);
        put(line, hydro.rho[n]);
        for (const auto& j : hydro.current) put(line, j[n]);
        const bool masked = hydro.node_mask[n] != 0;
        if (!masked && hydro.vqu_rel) line += fmt::format("{:.17g}", (*hydro.vqu_rel)[n]);
        line += ',';
        if (!masked) line += fmt::format("{:.17g}", hydro.vqu_nonrel[n]);
        line += masked ? ",1\n" : ",0\n";
        text += line;
    }
    write_text(with_ext(stem, ".csv"), text);

    nlohmann::json side = {
        {"time", time},
        {"kind", kind},
        {"params", to_json(params)},
        {"grid", grid_to_json(grid)},
        {"csv", with_ext(stem, ".csv").filename().string()},
        {"columns", cols},
        {"energy_sign", to_string(hydro.energy_sign)},
        {"masked_fraction", hydro.masked_fraction()},
        {"has_vqu_rel", hydro.vqu_rel.has_value()},
    };
    write_text(with_ext(stem, ".json"), side.dump(2) + "\n");
}

std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path, std::vector<std::string>& header,
                                                  double missing) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty CSV: " + path.string());
    header = split(line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != header.size()) throw std::runtime_error("ragged CSV row in " + path.string());
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(parse_double(c, missing));
        rows.push_back(std::move(row));
    }
    return rows;
}

ImportedSnapshot import_snapshot(const std::filesystem::path& stem) {
    const auto side = nlohmann::json::parse(read_text(with_ext(stem, ".json")));
    const Grid grid = grid_from_json(side.at("grid"));
    std::vector<std::string> header;
    const auto rows = read_numeric_csv(with_ext(stem, ".csv"), header, kNaN);
    if (header != snapshot_columns(grid.dims())) throw std::runtime_error("unexpected snapshot header");
    if (rows.size() != grid.size()) throw std::runtime_error("snapshot row count does not match grid");

    const auto& p = side.at("params");
    PhysicalParams params{p.at("hbar").get<double>(), p.at("mass").get<double>(), p.at("c").get<double>(),
                          p.at("charge").get<double>()};
    ImportedSnapshot s{grid,
                       side.at("time").get<double>(),
                       side.at("kind").get<std::string>(),
                       params,
                       ComplexField(grid),
                       RealField(grid),
                       RealField(grid),
                       RealField(grid),
                       {},
                       RealField(grid),
                       RealField(grid),
                       NodeMask(grid.size(), 0)};
    const int dims = grid.dims();
    for (int a = 0; a < dims; ++a) s.current.emplace_back(grid);
    for (const auto& row : rows) {
        const std::size_t n = dims == 1 ? grid.flat_index(static_cast<int>(row[0]))
                                        : grid.flat_index(static_cast<int>(row[0]), static_cast<int>(row[1]));
        std::size_t c = static_cast<std::size_t>(dims);
        s.psi[n] = Complex(row[c], row[c + 1]);
        s.amplitude[n] = row[c + 2];
        s.action[n] = row[c + 3];
        s.rho[n] = row[c + 4];
        c += 5;
        for (int a = 0; a < dims; ++a) s.current[static_cast<std::size_t>(a)][n] = row[c++];
        s.vqu_rel[n] = row[c++];
        s.vqu_nonrel[n] = row[c++];
        s.mask[n] = row[c] != 0.0;
    }
    return s;
}

}  // namespace kgh
