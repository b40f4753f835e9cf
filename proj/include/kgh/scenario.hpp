#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "kgh/hydro.hpp"
#include "kgh/physics.hpp"
#include "kgh/residual.hpp"

namespace kgh {

inline constexpr const char* kToolkitVersion = "1.0.0";

enum class ScenarioKind { free_kg, charged_kg, schrodinger, classical_limit_sweep, vortex, convergence };

std::string to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string& name);
const std::vector<ScenarioKind>& all_scenario_kinds();
/// One-line description for list-scenarios.
std::string describe(ScenarioKind kind);

/// Config rejection; `pointer` is the JSON pointer of the offending value.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string pointer, const std::string& message)
        : std::runtime_error((pointer.empty() ? std::string("/") : pointer) + ": " + message),
          pointer_(std::move(pointer)) {}
    const std::string& pointer() const noexcept { return pointer_; }

private:
    std::string pointer_;
};

struct GridSpec {
    std::vector<int> points;
    std::vector<double> lengths;
    std::vector<double> origin;

    int dims() const { return static_cast<int>(points.size()); }
    Grid build() const;
};

struct InitialSpec {
    enum class Kind { plane_wave, gaussian, vortex };
    Kind kind = Kind::plane_wave;
    std::vector<double> momentum;
    Branch branch = Branch::matter;
    std::vector<double> center;
    double sigma = 1.0;
    int charge = 1;
    double window = 1.0;
};

/// Electromagnetic potentials. Named forms:
///   lorenz_wave        A_x = a cos(k(x - ct)), W = c a cos(k(x - ct)), k = 2 pi mode / L_x
///   oscillating_scalar W = a cos(omega t), A = 0
struct PotentialSpec {
    enum class Kind { none, constant, named };
    Kind kind = Kind::none;
    double scalar = 0.0;
    std::vector<double> vector;
    std::string name;
    std::map<std::string, double> coefficients;

    std::optional<EmPotential> build(const GridSpec& grid, const PhysicalParams& params) const;
};

/// Static external potential energy for Schrodinger runs.
struct ExternalSpec {
    enum class Kind { none, harmonic };
    Kind kind = Kind::none;
    double omega = 1.0;

    std::optional<RealField> build(const Grid& grid, const PhysicalParams& params) const;
};

struct StepSpec {
    double dt = 0.01;
    int steps_per_snapshot = 1;
    int snapshots = 4;
    /// Steps taken before the first snapshot.
    long warmup_steps = 0;
    double cfl_safety = 0.5;
    bool enforce_cfl = true;
};

struct SweepSpec {
    std::vector<double> c_values{5.0, 10.0, 20.0};
    double time = 1.0;
    /// K-G step as a fraction of the rest period scale: dt <= phase_step * hbar / (m c^2).
    double phase_step = 0.02;
    int schrodinger_steps = 100;
};

struct ConvergenceSpec {
    ScenarioKind model = ScenarioKind::free_kg;
    int levels = 3;
    double t_mid = 1.0;
};

struct ScenarioConfig {
    ScenarioKind kind = ScenarioKind::free_kg;
    GridSpec grid;
    PhysicalParams physics;
    InitialSpec initial;
    PotentialSpec potential;
    ExternalSpec external;
    StepSpec steps;
    NodePolicy node_policy;
    std::vector<EquationId> residuals;
    SweepSpec sweep;
    ConvergenceSpec convergence;
    /// Rectangles (lo0, lo1, hi0, hi1) for vortex runs.
    std::vector<std::array<int, 4>> contours;
    std::string output;
};

/// Strict parse: unknown keys, wrong types, incommensurate plane-wave
/// momenta and CFL violations are rejected before any compute.
ScenarioConfig parse_config(const nlohmann::json& doc);
ScenarioConfig parse_config_file(const std::filesystem::path& path);

/// Full config with every default materialized.
nlohmann::json to_json(const ScenarioConfig& config);

struct FileEntry {
    std::string path;
    std::uintmax_t bytes = 0;
};

struct SnapshotEntry {
    int index = 0;
    double time = 0.0;
    FileEntry csv;
    FileEntry json;
};

struct RunManifest {
    nlohmann::json config;
    std::string version = kToolkitVersion;
    std::string start_time;
    std::string end_time;
    std::vector<SnapshotEntry> snapshots;
    std::vector<FileEntry> reports;
    std::vector<FileEntry> data;
    std::vector<FileEntry> plots;
    std::vector<std::string> skipped_plots;
    /// "ok", "instability" or "error".
    std::string status = "ok";
    std::string message;

    int exit_code() const;
};

nlohmann::json to_json(const RunManifest& manifest);
RunManifest manifest_from_json(const nlohmann::json& j);

void write_manifest(const RunManifest& manifest, const std::filesystem::path& dir);
RunManifest read_manifest(const std::filesystem::path& dir);

/// Runs the scenario into `out_dir` and writes manifest.json there. Solver
/// instability is recorded in the manifest, not thrown.
RunManifest run_scenario(const ScenarioConfig& config, const std::filesystem::path& out_dir);

struct VerifyResult {
    bool ok = true;
    std::vector<std::string> problems;
};

/// Every file listed in the manifest exists with its recorded byte length.
VerifyResult verify_manifest(const std::filesystem::path& dir);

FileEntry file_entry(const std::filesystem::path& dir, const std::filesystem::path& relative);

}  // namespace kgh
