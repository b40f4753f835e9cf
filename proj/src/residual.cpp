#include "kgh/residual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "kgh/spectral.hpp"

namespace kgh {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Sampled {
    RealField W;
    VectorField A;
};

Sampled sample_potential(const SnapshotSeries& s, double t, bool charged) {
    const Grid& grid = s.grid();
    if (!charged || !s.potential) {
        VectorField zero;
        for (int a = 0; a < grid.dims(); ++a) zero.emplace_back(grid);
        return Sampled{RealField(grid), std::move(zero)};
    }
    return Sampled{s.potential->sample_scalar(grid, t), s.potential->sample_vector(grid, t)};
}

RealField amplitude_of(const ComplexField& f) {
    RealField out(f.grid());
    for (std::size_t n = 0; n < f.size(); ++n) out[n] = std::abs(f[n]);
    return out;
}

// hbar Im(conj(f) grad f) - e A |f|^2, per axis: |f|^2 (grad S - eA).
VectorField gauged_momentum_density(const ComplexField& f, const VectorField& A, const PhysicalParams& p) {
    const auto grad = gradient(f);
    VectorField out;
    for (std::size_t a = 0; a < grad.size(); ++a) {
        RealField comp(f.grid());
        for (std::size_t n = 0; n < f.size(); ++n) {
            comp[n] = p.hbar * (std::conj(f[n]) * grad[a][n]).imag() - p.charge * A[a][n] * std::norm(f[n]);
        }
        out.push_back(std::move(comp));
    }
    return out;
}

void require_kg(const SnapshotSeries& s) {
    s.validate();
    if (s.kind != SnapshotSeries::Kind::klein_gordon) {
        throw std::invalid_argument("relativistic residuals need a Klein-Gordon series");
    }
}

void require_potential(const SnapshotSeries& s) {
    if (!s.potential) throw std::invalid_argument("charged residuals need a series with an EM potential");
}

// Rejects mixed-branch snapshots: -(S_t + eW) must have one sign on unmasked points.
void require_pure_branch(const SnapshotSeries& s, std::size_t k, const RealField& W, const NodeMask& mask) {
    bool pos = false;
    bool neg = false;
    const auto& psi = s.psi[k];
    const auto& pi = s.pi[k];
    for (std::size_t n = 0; n < psi.size(); ++n) {
        if (mask[n]) continue;
        const double energy = -(s.params.hbar * (pi[n] / psi[n]).imag() + s.params.charge * W[n]);
        if (energy > 0.0) pos = true;
        if (energy < 0.0) neg = true;
    }
    if (pos && neg) throw std::invalid_argument("residual needs a pure matter or antimatter series");
}

}  // namespace

std::string to_string(EquationId id) {
    switch (id) {
        case EquationId::continuity_free: return "continuity_free";
        case EquationId::action_free: return "action_free";
        case EquationId::continuity_charged: return "continuity_charged";
        case EquationId::action_charged: return "action_charged";
        case EquationId::madelung_continuity: return "madelung_continuity";
        case EquationId::madelung_action: return "madelung_action";
    }
    return "unknown";
}

EquationId equation_id_from_string(const std::string& name) {
    for (auto id : {EquationId::continuity_free, EquationId::action_free, EquationId::continuity_charged,
                    EquationId::action_charged, EquationId::madelung_continuity, EquationId::madelung_action}) {
        if (to_string(id) == name) return id;
    }
    throw std::invalid_argument("unknown equation id '" + name + "'");
}

SnapshotSeries SnapshotSeries::from_kg(const std::vector<KgState>& states, const PhysicalParams& params,
                                       std::optional<EmPotential> potential, NodePolicy policy) {
    SnapshotSeries s;
    s.kind = Kind::klein_gordon;
    for (const auto& st : states) {
        s.times.push_back(st.time);
        s.psi.push_back(st.psi);
        s.pi.push_back(st.pi);
    }
    s.params = params;
    s.potential = std::move(potential);
    s.policy = policy;
    return s;
}

SnapshotSeries SnapshotSeries::from_schrodinger(const std::vector<SchState>& states, const PhysicalParams& params,
                                                std::optional<RealField> external,
                                                std::optional<EmPotential> potential, NodePolicy policy) {
    SnapshotSeries s;
    s.kind = Kind::schrodinger;
    for (const auto& st : states) {
        s.times.push_back(st.time);
        s.psi.push_back(st.phi);
    }
    s.params = params;
    s.external = std::move(external);
    s.potential = std::move(potential);
    s.policy = policy;
    return s;
}

void SnapshotSeries::validate() const {
    if (times.size() < 3) throw std::invalid_argument("snapshot series needs at least 3 snapshots");
    if (psi.size() != times.size()) throw std::invalid_argument("snapshot series has mismatched field count");
    if (kind == Kind::klein_gordon && pi.size() != times.size()) {
        throw std::invalid_argument("Klein-Gordon series needs dPsi/dt for every snapshot");
    }
    const double dt = times[1] - times[0];
    if (!(dt > 0.0)) throw std::invalid_argument("snapshot times must be strictly increasing");
    for (std::size_t k = 1; k < times.size(); ++k) {
        const double step = times[k] - times[k - 1];
        if (std::abs(step - dt) > 1e-6 * dt) {
            throw std::invalid_argument("snapshot times must be uniformly spaced");
        }
        if (!(psi[k].grid() == psi[0].grid())) throw std::invalid_argument("snapshots must share one grid");
    }
    params.validate();
}

double SnapshotSeries::dt_snap() const {
    return (times.back() - times.front()) / static_cast<double>(times.size() - 1);
}

ResidualReport summarize(EquationId id, const ResidualField& field, const SnapshotSeries& series) {
    ResidualReport r;
    r.equation_id = id;
    std::size_t count = 0;
    std::size_t masked = 0;
    double sum2 = 0.0;
    for (std::size_t n = 0; n < field.values.size(); ++n) {
        if (field.mask[n]) {
            ++masked;
            continue;
        }
        const double v = field.values[n];
        r.max_abs = std::max(r.max_abs, std::abs(v));
        sum2 += v * v;
        ++count;
    }
    r.rms = count > 0 ? std::min(r.max_abs, std::sqrt(sum2 / static_cast<double>(count))) : 0.0;
    r.masked_fraction = static_cast<double>(masked) / static_cast<double>(field.values.size());
    r.dt_snap = series.dt_snap();
    r.dx = series.grid().min_spacing();
    r.time = series.times[series.middle()];
    return r;
}

ResidualField continuity_residual_field(const SnapshotSeries& s, bool charged) {
    require_kg(s);
    if (charged) require_potential(s);
    const std::size_t k = s.middle();
    const double dt = s.dt_snap();
    const auto& p = s.params;

    const auto pot_prev = sample_potential(s, s.times[k - 1], charged);
    const auto pot_mid = sample_potential(s, s.times[k], charged);
    const auto pot_next = sample_potential(s, s.times[k + 1], charged);

    auto mask = node_mask(amplitude_of(s.psi[k]), s.policy);
    require_pure_branch(s, k, pot_mid.W, mask);

    const auto rho_prev = kg_density(s.psi[k - 1], s.pi[k - 1], p, &pot_prev.W);
    const auto rho_next = kg_density(s.psi[k + 1], s.pi[k + 1], p, &pot_next.W);
    auto flux = gauged_momentum_density(s.psi[k], pot_mid.A, p);
    for (auto& comp : flux) comp *= 1.0 / p.mass;
    const auto div = divergence(flux);

    RealField out(s.grid());
    for (std::size_t n = 0; n < out.size(); ++n) {
        out[n] = mask[n] ? kNaN : (rho_next[n] - rho_prev[n]) / (2.0 * dt) + div[n];
    }
    return ResidualField{std::move(out), std::move(mask)};
}

ResidualField action_residual_field(const SnapshotSeries& s, bool charged, const ResidualOptions& options) {
    require_kg(s);
    if (charged) require_potential(s);
    const std::size_t k = s.middle();
    const double dt = s.dt_snap();
    const auto& p = s.params;
    const auto pot = sample_potential(s, s.times[k], charged);

    const auto amp_prev = amplitude_of(s.psi[k - 1]);
    const auto amp = amplitude_of(s.psi[k]);
    const auto amp_next = amplitude_of(s.psi[k + 1]);
    auto mask = node_mask(amp, s.policy);
    require_pure_branch(s, k, pot.W, mask);

    const auto lap = laplacian(amp);
    const auto grad = gradient(s.psi[k]);
    const double c2 = p.c * p.c;
    const double hbar2 = p.hbar * p.hbar;
    const double mass_term = options.mass_term_sign * p.mass * p.mass * c2;

    RealField out(s.grid());
    for (std::size_t n = 0; n < out.size(); ++n) {
        if (mask[n]) {
            out[n] = kNaN;
            continue;
        }
        const Complex psi = s.psi[k][n];
        const double gauged_rate = p.hbar * (s.pi[k][n] / psi).imag() + p.charge * pot.W[n];
        double kinetic2 = 0.0;
        for (std::size_t a = 0; a < grad.size(); ++a) {
            const double q = p.hbar * (grad[a][n] / psi).imag() - p.charge * pot.A[a][n];
            kinetic2 += q * q;
        }
        double value = (gauged_rate * gauged_rate / c2 - kinetic2 - mass_term) / hbar2;
        if (options.include_quantum_potential) {
            const double tt = (amp_next[n] - 2.0 * amp[n] + amp_prev[n]) / (dt * dt);
            value -= (tt / c2 - lap[n]) / amp[n];
        }
        out[n] = value;
    }
    return ResidualField{std::move(out), std::move(mask)};
}

ResidualReport residual_continuity_free(const SnapshotSeries& series) {
    return summarize(EquationId::continuity_free, continuity_residual_field(series, false), series);
}

ResidualReport residual_action_free(const SnapshotSeries& series, const ResidualOptions& options) {
    return summarize(EquationId::action_free, action_residual_field(series, false, options), series);
}

namespace {
void attach_gauge_defect(ResidualReport& r, const SnapshotSeries& s) {
    r.gauge_defect_max = max_abs(lorenz_gauge_defect(*s.potential, s.grid(), r.time, s.params));
}
}  // namespace

ResidualReport residual_continuity_charged(const SnapshotSeries& series) {
    auto r = summarize(EquationId::continuity_charged, continuity_residual_field(series, true), series);
    attach_gauge_defect(r, series);
    return r;
}

ResidualReport residual_action_charged(const SnapshotSeries& series, const ResidualOptions& options) {
    auto r = summarize(EquationId::action_charged, action_residual_field(series, true, options), series);
    attach_gauge_defect(r, series);
    return r;
}

ResidualReport residual_madelung_continuity(const SnapshotSeries& s) {
    s.validate();
    const std::size_t k = s.middle();
    const double dt = s.dt_snap();
    const auto& p = s.params;
    const bool charged = s.potential.has_value();
    const auto pot = sample_potential(s, s.times[k], charged);

    auto mask = node_mask(amplitude_of(s.psi[k]), s.policy);
    auto flux = gauged_momentum_density(s.psi[k], pot.A, p);
    for (auto& comp : flux) comp *= 1.0 / p.mass;
    const auto div = divergence(flux);

    RealField out(s.grid());
    for (std::size_t n = 0; n < out.size(); ++n) {
        const double dn = (std::norm(s.psi[k + 1][n]) - std::norm(s.psi[k - 1][n])) / (2.0 * dt);
        out[n] = mask[n] ? kNaN : dn + div[n];
    }
    return summarize(EquationId::madelung_continuity, ResidualField{std::move(out), std::move(mask)}, s);
}

ResidualReport residual_madelung_action(const SnapshotSeries& s, const ResidualOptions& options) {
    s.validate();
    const std::size_t k = s.middle();
    const double dt = s.dt_snap();
    const auto& p = s.params;
    const bool charged = s.potential.has_value();
    const auto pot = sample_potential(s, s.times[k], charged);

    const auto amp = amplitude_of(s.psi[k]);
    auto mask = node_mask(amp, s.policy);
    const auto vqu = quantum_potential_nonrel(amp, mask, p);
    const auto grad = gradient(s.psi[k]);

    RealField out(s.grid());
    for (std::size_t n = 0; n < out.size(); ++n) {
        if (mask[n]) {
            out[n] = kNaN;
            continue;
        }
        const Complex psi = s.psi[k][n];
        const double rate = p.hbar * std::arg(s.psi[k + 1][n] * std::conj(s.psi[k - 1][n])) / (2.0 * dt);
        double kinetic2 = 0.0;
        for (std::size_t a = 0; a < grad.size(); ++a) {
            const double q = p.hbar * (grad[a][n] / psi).imag() - p.charge * pot.A[a][n];
            kinetic2 += q * q;
        }
        double value = rate + p.charge * pot.W[n] + kinetic2 / (2.0 * p.mass);
        if (s.external) value += (*s.external)[n];
        if (options.include_quantum_potential) value += vqu[n];
        out[n] = value;
    }
    return summarize(EquationId::madelung_action, ResidualField{std::move(out), std::move(mask)}, s);
}

ResidualReport evaluate_residual(EquationId id, const SnapshotSeries& series, const ResidualOptions& options) {
    switch (id) {
        case EquationId::continuity_free: return residual_continuity_free(series);
        case EquationId::action_free: return residual_action_free(series, options);
        case EquationId::continuity_charged: return residual_continuity_charged(series);
        case EquationId::action_charged: return residual_action_charged(series, options);
        case EquationId::madelung_continuity: return residual_madelung_continuity(series);
        case EquationId::madelung_action: return residual_madelung_action(series, options);
    }
    throw std::invalid_argument("unknown equation id");
}

SnapshotSeries gauge_shift(const SnapshotSeries& series, double k) {
    SnapshotSeries out = series;
    const auto& p = series.params;
    for (std::size_t i = 0; i < out.times.size(); ++i) {
        const Complex factor = std::exp(Complex(0.0, -p.charge * k * out.times[i] / p.hbar));
        const Complex rate(0.0, -p.charge * k / p.hbar);
        if (out.kind == SnapshotSeries::Kind::klein_gordon) {
            for (std::size_t n = 0; n < out.psi[i].size(); ++n) {
                out.pi[i][n] = (out.pi[i][n] + rate * out.psi[i][n]) * factor;
            }
        }
        out.psi[i] *= factor;
    }
    EmPotential shifted = series.potential.value_or(EmPotential{});
    auto base = shifted.scalar;
    shifted.scalar = [base, k](std::span<const double> x, double t) { return (base ? base(x, t) : 0.0) + k; };
    out.potential = std::move(shifted);
    return out;
}

SnapshotSeries conjugate_branch(const SnapshotSeries& series) {
    SnapshotSeries out = series;
    for (auto& f : out.psi) f = conj(f);
    for (auto& f : out.pi) f = conj(f);
    return out;
}

std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("line fit needs >= 2 matched points");
    const double n = static_cast<double>(x.size());
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {slope, (sy - slope * sx) / n};
}

ClassicalLimitReport classical_limit_compare(const std::vector<double>& c_values,
                                             const std::vector<KgState>& kg_final,
                                             const std::vector<SchState>& sch_final, Branch branch,
                                             const PhysicalParams& base_params) {
    if (c_values.size() < 3) throw std::invalid_argument("classical limit sweep needs at least 3 values of c");
    if (kg_final.size() != c_values.size() || sch_final.size() != c_values.size()) {
        throw std::invalid_argument("classical limit sweep has mismatched run counts");
    }
    ClassicalLimitReport report;
    std::vector<double> logc;
    std::vector<double> loge;
    for (std::size_t i = 0; i < c_values.size(); ++i) {
        if (!(kg_final[i].psi.grid() == sch_final[i].phi.grid())) {
            throw std::invalid_argument("classical limit comparison needs identical grids");
        }
        if (std::abs(kg_final[i].time - sch_final[i].time) > 1e-9 * std::max(1.0, sch_final[i].time)) {
            throw std::invalid_argument("classical limit comparison needs matched physical times");
        }
        PhysicalParams p = base_params;
        p.c = c_values[i];
        const auto stripped = strip_mass_phase(kg_final[i], p, branch);
        const auto diff = stripped - sch_final[i].phi;
        double amp_err = 0.0;
        for (std::size_t n = 0; n < diff.size(); ++n) {
            amp_err = std::max(amp_err, std::abs(std::abs(stripped[n]) - std::abs(sch_final[i].phi[n])));
        }
        report.points.push_back({c_values[i], l2_norm(diff), amp_err});
        logc.push_back(std::log(c_values[i]));
        loge.push_back(std::log(report.points.back().l2_error));
    }
    std::tie(report.slope, report.intercept) = fit_line(logc, loge);
    report.monotone = true;
    for (std::size_t i = 1; i < report.points.size(); ++i) {
        const bool c_grows = report.points[i].c > report.points[i - 1].c;
        const bool err_drops = report.points[i].l2_error < report.points[i - 1].l2_error;
        if (c_grows != err_drops) report.monotone = false;
    }
    return report;
}

std::vector<ConvergenceRow> convergence_study(const LevelRunner& runner, int levels,
                                              const std::vector<EquationId>& equations, double floor) {
    if (levels < 3) throw std::invalid_argument("convergence study needs at least 3 refinement levels");
    std::map<EquationId, ConvergenceRow> rows;
    std::vector<EquationId> order;
    for (auto id : equations) {
        if (rows.try_emplace(id).second) {
            rows[id].equation_id = id;
            order.push_back(id);
        }
    }
    bool any_unstable = false;
    for (int level = 0; level < levels; ++level) {
        std::vector<ResidualReport> reports;
        try {
            reports = runner(level);
        } catch (const InstabilityError&) {
            any_unstable = true;
            for (auto& [id, row] : rows) row.levels.push_back(ConvergenceLevel{0.0, 0.0, std::nullopt, true});
            continue;
        }
        for (const auto& r : reports) {
            auto [it, inserted] = rows.try_emplace(r.equation_id);
            if (inserted) {
                order.push_back(r.equation_id);
                it->second.equation_id = r.equation_id;
                for (int l = 0; l < level; ++l) it->second.levels.push_back(ConvergenceLevel{0.0, 0.0, std::nullopt, true});
            }
            it->second.levels.push_back(ConvergenceLevel{r.dt_snap, r.dx, r, false});
        }
    }

    std::vector<ConvergenceRow> out;
    for (auto id : order) {
        auto row = rows.at(id);
        row.unstable = any_unstable || std::any_of(row.levels.begin(), row.levels.end(),
                                                   [](const ConvergenceLevel& l) { return l.unstable; });
        if (!row.unstable) {
            row.monotone = true;
            bool floor_hit = false;
            for (std::size_t i = 0; i + 1 < row.levels.size(); ++i) {
                const auto& a = *row.levels[i].report;
                const auto& b = *row.levels[i + 1].report;
                if (b.rms >= a.rms) row.monotone = false;
                if (a.rms < floor || b.rms < floor) {
                    floor_hit = true;
                    continue;
                }
                const double ratio = a.dt_snap != b.dt_snap ? a.dt_snap / b.dt_snap : a.dx / b.dx;
                row.orders.push_back(std::log(a.rms / b.rms) / std::log(ratio));
            }
            row.floor_limited = floor_hit;
            if (!row.orders.empty() && !floor_hit && row.monotone) row.observed_order = row.orders.back();
        }
        out.push_back(std::move(row));
    }
    return out;
}

nlohmann::json to_json(const ResidualReport& r) {
    nlohmann::json j{{"equation_id", to_string(r.equation_id)},
                     {"max_abs", r.max_abs},
                     {"rms", r.rms},
                     {"masked_fraction", r.masked_fraction},
                     {"dt_snap", r.dt_snap},
                     {"dx", r.dx},
                     {"time", r.time},
                     {"valid", r.valid()}};
    if (r.gauge_defect_max) j["gauge_defect_max"] = *r.gauge_defect_max;
    return j;
}

nlohmann::json to_json(const ClassicalLimitReport& r) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : r.points) {
        points.push_back({{"c", p.c}, {"l2_error", p.l2_error}, {"amplitude_max_error", p.amplitude_max_error}});
    }
    return {{"points", points}, {"slope", r.slope}, {"intercept", r.intercept}, {"monotone", r.monotone}};
}

nlohmann::json to_json(const std::vector<ConvergenceRow>& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : table) {
        nlohmann::json levels = nlohmann::json::array();
        for (const auto& l : row.levels) {
            if (l.unstable) {
                levels.push_back({{"unstable", true}});
            } else {
                levels.push_back({{"dt_snap", l.dt_snap}, {"dx", l.dx}, {"rms", l.report->rms},
                                  {"max_abs", l.report->max_abs}});
            }
        }
        nlohmann::json j{{"equation_id", to_string(row.equation_id)},
                         {"levels", levels},
                         {"orders", row.orders},
                         {"monotone", row.monotone},
                         {"floor_limited", row.floor_limited},
                         {"unstable", row.unstable}};
        j["observed_order"] = row.observed_order ? nlohmann::json(*row.observed_order) : nlohmann::json(nullptr);
        rows.push_back(std::move(j));
    }
    return rows;
}

}  // namespace kgh
