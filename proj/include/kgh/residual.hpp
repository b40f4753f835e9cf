#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "kgh/field.hpp"
#include "kgh/hydro.hpp"
#include "kgh/kg_solver.hpp"
#include "kgh/physics.hpp"
#include "kgh/schrodinger.hpp"

namespace kgh {

enum class EquationId {
    continuity_free,
    action_free,
    continuity_charged,
    action_charged,
    madelung_continuity,
    madelung_action,
};

std::string to_string(EquationId id);
EquationId equation_id_from_string(const std::string& name);

/// Uniformly spaced snapshots of one run on one grid.
///
/// Klein-Gordon series carry (Psi, Pi); Schrodinger series carry phi in
/// `psi` and leave `pi` empty. `external` is a static potential energy V(x)
/// used by the Madelung action equation.
struct SnapshotSeries {
    enum class Kind { klein_gordon, schrodinger };

    Kind kind = Kind::klein_gordon;
    std::vector<double> times;
    std::vector<ComplexField> psi;
    std::vector<ComplexField> pi;
    PhysicalParams params;
    std::optional<EmPotential> potential;
    std::optional<RealField> external;
    NodePolicy policy;

    static SnapshotSeries from_kg(const std::vector<KgState>& states, const PhysicalParams& params,
                                  std::optional<EmPotential> potential = std::nullopt, NodePolicy policy = {});
    static SnapshotSeries from_schrodinger(const std::vector<SchState>& states, const PhysicalParams& params,
                                           std::optional<RealField> external = std::nullopt,
                                           std::optional<EmPotential> potential = std::nullopt,
                                           NodePolicy policy = {});

    /// Throws unless there are >= 3 uniformly spaced snapshots on one grid.
    void validate() const;
    double dt_snap() const;
    std::size_t middle() const { return times.size() / 2; }
    const Grid& grid() const { return psi.front().grid(); }
};

/// Norms of one residual evaluated at the middle snapshot over unmasked points.
struct ResidualReport {
    EquationId equation_id = EquationId::continuity_free;
    double max_abs = 0.0;
    double rms = 0.0;
    double masked_fraction = 0.0;
    double dt_snap = 0.0;
    double dx = 0.0;
    double time = 0.0;
    /// max |(1/c^2) W_t + div A| at the evaluation time (charged equations only).
    std::optional<double> gauge_defect_max;

    bool valid() const { return masked_fraction < 0.2 && rms <= max_abs; }
};

/// Switches for negative controls; defaults evaluate the equations as derived.
struct ResidualOptions {
    /// Multiplies the m^2 c^2 term of the relativistic action equation.
    double mass_term_sign = 1.0;
    /// Drops the quantum potential from the action equations when false.
    bool include_quantum_potential = true;
};

/// Pointwise residual values (NaN on masked points) plus the mask used.
struct ResidualField {
    RealField values;
    NodeMask mask;
};

// Continuity: d_t rho + div J = 0 with rho = -|Psi|^2 (S_t + eW)/(m c^2),
// J = |Psi|^2 (grad S - eA)/m. The free equations are the e = 0 case.
//
// Action: ((S_t + eW)^2/c^2 - |grad S - eA|^2 - m^2 c^2)/hbar^2
//         - [(1/c^2) d_t^2 |Psi| - lap |Psi|] / |Psi| = 0,
// i.e. the real part of D_mu D^mu Psi + (mc/hbar)^2 Psi = 0 in polar form;
// the bracket equals m V_qu_rel / hbar^2.
ResidualField continuity_residual_field(const SnapshotSeries& series, bool charged);
ResidualField action_residual_field(const SnapshotSeries& series, bool charged, const ResidualOptions& options = {});

ResidualReport residual_continuity_free(const SnapshotSeries& series);
ResidualReport residual_action_free(const SnapshotSeries& series, const ResidualOptions& options = {});
ResidualReport residual_continuity_charged(const SnapshotSeries& series);
ResidualReport residual_action_charged(const SnapshotSeries& series, const ResidualOptions& options = {});

// Madelung: d_t n + div(n (grad S - eA)/m) = 0 and
// S_t + eW + |grad S - eA|^2/2m + V + V_qu = 0 with S_t from the centered
// phase difference hbar arg(phi_{k+1} conj(phi_{k-1})) / (2 dt).
ResidualReport residual_madelung_continuity(const SnapshotSeries& series);
ResidualReport residual_madelung_action(const SnapshotSeries& series, const ResidualOptions& options = {});

ResidualReport evaluate_residual(EquationId id, const SnapshotSeries& series, const ResidualOptions& options = {});

/// Norms over unmasked points.
ResidualReport summarize(EquationId id, const ResidualField& field, const SnapshotSeries& series);

/// Multiplies every snapshot by exp(-i e k t / hbar) and shifts W by k.
SnapshotSeries gauge_shift(const SnapshotSeries& series, double k);

/// Applies S -> -S (complex conjugation, Pi -> conj Pi) to every snapshot.
SnapshotSeries conjugate_branch(const SnapshotSeries& series);

struct ClassicalLimitPoint {
    double c = 0.0;
    double l2_error = 0.0;
    double amplitude_max_error = 0.0;
};

struct ClassicalLimitReport {
    std::vector<ClassicalLimitPoint> points;
    double slope = 0.0;
    double intercept = 0.0;
    bool monotone = false;
};

/// L2 distance between the mass-phase-stripped K-G state and the
/// Schrodinger state at matched times, and the log-log slope against c.
ClassicalLimitReport classical_limit_compare(const std::vector<double>& c_values,
                                             const std::vector<KgState>& kg_final,
                                             const std::vector<SchState>& sch_final, Branch branch,
                                             const PhysicalParams& base_params);

/// Least-squares slope and intercept of y against x.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y);

struct ConvergenceLevel {
    double dt_snap = 0.0;
    double dx = 0.0;
    std::optional<ResidualReport> report;
    bool unstable = false;
};

struct ConvergenceRow {
    EquationId equation_id = EquationId::continuity_free;
    std::vector<ConvergenceLevel> levels;
    /// log2 ratios of successive rms values.
    std::vector<double> orders;
    std::optional<double> observed_order;
    bool monotone = false;
    bool floor_limited = false;
    bool unstable = false;
};

/// One scenario evaluation per refinement level; the callback returns the
/// reports for that level or throws InstabilityError.
using LevelRunner = std::function<std::vector<ResidualReport>(int level)>;

/// Observed orders per equation_id. Rows for `equations` exist even when
/// every level is unstable. Levels whose rms is below `floor` are reported
/// as floor-limited rather than given an order.
std::vector<ConvergenceRow> convergence_study(const LevelRunner& runner, int levels,
                                              const std::vector<EquationId>& equations = {}, double floor = 1e-12);

nlohmann::json to_json(const ResidualReport& report);
nlohmann::json to_json(const ClassicalLimitReport& report);
nlohmann::json to_json(const std::vector<ConvergenceRow>& table);

}  // namespace kgh
