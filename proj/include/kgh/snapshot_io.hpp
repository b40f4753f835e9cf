#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "kgh/field.hpp"
#include "kgh/hydro.hpp"
#include "kgh/physics.hpp"

namespace kgh {

/// Column names of a snapshot CSV for a grid of the given dimension.
std::vector<std::string> snapshot_columns(int dims);

std::string to_string(EnergySign sign);

nlohmann::json to_json(const PhysicalParams& params);
nlohmann::json grid_to_json(const Grid& grid);
Grid grid_from_json(const nlohmann::json& j);

/// Writes `<stem>.csv` and the `<stem>.json` sidecar. Doubles carry 17
/// significant digits; masked points get mask 1 and empty V_qu cells, and
/// an absent vqu_rel leaves that column empty everywhere. Throws on IO failure.
void export_snapshot(const std::filesystem::path& stem, const ComplexField& psi, const HydroState& hydro,
                     double time, const PhysicalParams& params, const std::string& kind);

struct ImportedSnapshot {
    Grid grid;
    double time = 0.0;
    std::string kind;
    PhysicalParams params;
    ComplexField psi;
    RealField amplitude;
    RealField action;
    RealField rho;
    VectorField current;
    /// NaN where the cell was empty.
    RealField vqu_rel;
    RealField vqu_nonrel;
    NodeMask mask;
};

/// Reads a snapshot back from `<stem>.csv` and `<stem>.json`.
ImportedSnapshot import_snapshot(const std::filesystem::path& stem);

/// Reads "row,col,winding" style CSVs back as a dense matrix; empty cells
/// become `missing`.
std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path, std::vector<std::string>& header,
                                                  double missing);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace kgh
