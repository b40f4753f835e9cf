#include "kgh/scenario.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <fmt/chrono.h>
#include <fmt/format.h>

#include "kgh/circulation.hpp"
#include "kgh/kg_solver.hpp"
#include "kgh/schrodinger.hpp"
#include "kgh/snapshot_io.hpp"

namespace kgh {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct KindInfo {
    ScenarioKind kind;
    const char* name;
    const char* description;
};

constexpr KindInfo kKinds[] = {
    {ScenarioKind::free_kg, "free_kg", "free Klein-Gordon evolution, hydrodynamic snapshots, continuity/action residuals"},
    {ScenarioKind::charged_kg, "charged_kg",
     "minimally coupled Klein-Gordon evolution under constant or named potentials, gauged residuals"},
    {ScenarioKind::schrodinger, "schrodinger", "split-step Schrodinger evolution with Madelung residuals"},
    {ScenarioKind::classical_limit_sweep, "classical_limit_sweep",
     "K-G vs Schrodinger distance over a sweep of c, with fitted log-log slope"},
    {ScenarioKind::vortex, "vortex", "2D phase winding map, contour circulation and irrotationality check"},
    {ScenarioKind::convergence, "convergence", "residual norms under dt halving with observed orders"},
};

std::string escape_pointer(const std::string& key) {
    std::string out;
    for (char ch : key) {
        if (ch == '~') out += "~0";
        else if (ch == '/') out += "~1";
        else out += ch;
    }
    return out;
}

// Strict object reader: every key must be consumed before finish().
class Obj {
public:
    Obj(const json& j, std::string ptr) : j_(j), ptr_(std::move(ptr)) {
        if (!j_.is_object()) throw ConfigError(ptr_, "expected an object");
    }

    std::string at(const std::string& key) const { return ptr_ + "/" + escape_pointer(key); }
    bool has(const std::string& key) const { return j_.contains(key); }

    const json* find(const std::string& key) {
        used_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    const json& require(const std::string& key) {
        const json* v = find(key);
        if (!v) throw ConfigError(at(key), "required key is missing");
        return *v;
    }

    double number(const std::string& key, double fallback) {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_number()) throw ConfigError(at(key), "expected a number");
        return v->get<double>();
    }

    int integer(const std::string& key, int fallback) {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_number_integer()) throw ConfigError(at(key), "expected an integer");
        return v->get<int>();
    }

    bool boolean(const std::string& key, bool fallback) {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_boolean()) throw ConfigError(at(key), "expected true or false");
        return v->get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback) {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_string()) throw ConfigError(at(key), "expected a string");
        return v->get<std::string>();
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
        const json* v = find(key);
        if (!v) return fallback;
        if (!v->is_array()) throw ConfigError(at(key), "expected an array of numbers");
        std::vector<double> out;
        for (std::size_t i = 0; i < v->size(); ++i) {
            if (!(*v)[i].is_number()) throw ConfigError(at(key) + "/" + std::to_string(i), "expected a number");
            out.push_back((*v)[i].get<double>());
        }
        return out;
    }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (!used_.count(item.key())) throw ConfigError(at(item.key()), "unknown key");
        }
    }

private:
    const json& j_;
    std::string ptr_;
    std::set<std::string> used_;
};

Branch branch_from(const std::string& name, const std::string& ptr) {
    if (name == "matter") return Branch::matter;
    if (name == "antimatter") return Branch::antimatter;
    throw ConfigError(ptr, "branch must be \"matter\" or \"antimatter\"");
}

std::string branch_name(Branch b) { return b == Branch::matter ? "matter" : "antimatter"; }

bool is_kg(ScenarioKind k) { return k == ScenarioKind::free_kg || k == ScenarioKind::charged_kg; }

// The model that actually evolves the field for a given scenario.
ScenarioKind evolution_model(const ScenarioConfig& c) {
    if (c.kind == ScenarioKind::convergence) return c.convergence.model;
    if (c.kind == ScenarioKind::vortex) return ScenarioKind::schrodinger;
    return c.kind;
}

std::vector<EquationId> default_residuals(ScenarioKind model) {
    switch (model) {
        case ScenarioKind::free_kg: return {EquationId::continuity_free, EquationId::action_free};
        case ScenarioKind::charged_kg: return {EquationId::continuity_charged, EquationId::action_charged};
        case ScenarioKind::schrodinger: return {EquationId::madelung_continuity, EquationId::madelung_action};
        default: return {};
    }
}

bool residual_fits(ScenarioKind model, EquationId id) {
    const bool madelung = id == EquationId::madelung_continuity || id == EquationId::madelung_action;
    if (model == ScenarioKind::schrodinger) return madelung;
    if (is_kg(model)) return !madelung;
    return false;
}

GridSpec parse_grid(Obj o) {
    GridSpec g;
    const json& pts = o.require("points");
    if (!pts.is_array() || pts.empty() || pts.size() > 2) {
        throw ConfigError(o.at("points"), "expected one or two point counts");
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!pts[i].is_number_integer()) throw ConfigError(o.at("points") + "/" + std::to_string(i), "expected an integer");
        g.points.push_back(pts[i].get<int>());
    }
    if (!o.has("lengths")) throw ConfigError(o.at("lengths"), "required key is missing");
    g.lengths = o.numbers("lengths", {});
    g.origin = o.numbers("origin", std::vector<double>(g.points.size(), 0.0));
    o.finish();
    if (g.lengths.size() != g.points.size()) throw ConfigError(o.at("lengths"), "needs one entry per axis");
    if (g.origin.size() != g.points.size()) throw ConfigError(o.at("origin"), "needs one entry per axis");
    for (std::size_t a = 0; a < g.points.size(); ++a) {
        if (g.points[a] < 8) throw ConfigError(o.at("points") + "/" + std::to_string(a), "needs at least 8 points");
        if (!(g.lengths[a] > 0.0)) throw ConfigError(o.at("lengths") + "/" + std::to_string(a), "must be positive");
    }
    return g;
}

PhysicalParams parse_physics(const json* j) {
    PhysicalParams p;
    if (!j) return p;
    Obj o(*j, "/physics");
    p.hbar = o.number("hbar", 1.0);
    p.mass = o.number("mass", 1.0);
    p.c = o.number("c", 1.0);
    p.charge = o.number("charge", 0.0);
    o.finish();
    for (auto [key, v] : {std::pair<const char*, double>{"hbar", p.hbar}, {"mass", p.mass}, {"c", p.c}}) {
        if (!(v > 0.0)) throw ConfigError(o.at(key), "must be positive");
    }
    return p;
}

InitialSpec parse_initial(Obj o, int dims) {
    InitialSpec s;
    const std::string kind = o.string("kind", "");
    const std::vector<double> zeros(static_cast<std::size_t>(dims), 0.0);
    if (kind == "plane_wave") {
        s.kind = InitialSpec::Kind::plane_wave;
        s.momentum = o.numbers("momentum", zeros);
        s.branch = branch_from(o.string("branch", "matter"), o.at("branch"));
    } else if (kind == "gaussian") {
        s.kind = InitialSpec::Kind::gaussian;
        s.center = o.numbers("center", zeros);
        s.sigma = o.number("sigma", 1.0);
        s.momentum = o.numbers("momentum", zeros);
        s.branch = branch_from(o.string("branch", "matter"), o.at("branch"));
        if (!(s.sigma > 0.0)) throw ConfigError(o.at("sigma"), "must be positive");
    } else if (kind == "vortex") {
        s.kind = InitialSpec::Kind::vortex;
        s.center = o.numbers("center", zeros);
        s.charge = o.integer("charge", 1);
        s.window = o.number("window", 1.0);
        if (s.charge != 1 && s.charge != -1) throw ConfigError(o.at("charge"), "must be +1 or -1");
        if (!(s.window > 0.0)) throw ConfigError(o.at("window"), "must be positive");
        if (dims != 2) throw ConfigError(o.at("kind"), "vortex initial state needs a 2D grid");
    } else {
        throw ConfigError(o.at("kind"), "expected \"plane_wave\", \"gaussian\" or \"vortex\"");
    }
    o.finish();
    if (!s.momentum.empty() && static_cast<int>(s.momentum.size()) != dims) {
        throw ConfigError(o.at("momentum"), "needs one entry per axis");
    }
    if (!s.center.empty() && static_cast<int>(s.center.size()) != dims) {
        throw ConfigError(o.at("center"), "needs one entry per axis");
    }
    return s;
}

PotentialSpec parse_potential(const json* j, int dims) {
    PotentialSpec s;
    if (!j) return s;
    Obj o(*j, "/potential");
    const std::string kind = o.string("kind", "none");
    if (kind == "none") {
        s.kind = PotentialSpec::Kind::none;
    } else if (kind == "constant") {
        s.kind = PotentialSpec::Kind::constant;
        s.scalar = o.number("scalar", 0.0);
        s.vector = o.numbers("vector", std::vector<double>(static_cast<std::size_t>(dims), 0.0));
        if (static_cast<int>(s.vector.size()) != dims) throw ConfigError(o.at("vector"), "needs one entry per axis");
    } else if (kind == "named") {
        s.kind = PotentialSpec::Kind::named;
        s.name = o.string("name", "");
        std::vector<std::string> keys;
        if (s.name == "lorenz_wave") keys = {"amplitude", "mode"};
        else if (s.name == "oscillating_scalar") keys = {"amplitude", "omega"};
        else throw ConfigError(o.at("name"), "expected \"lorenz_wave\" or \"oscillating_scalar\"");
        Obj coef(o.require("coefficients"), o.at("coefficients"));
        for (const auto& k : keys) {
            if (!coef.has(k)) throw ConfigError(coef.at(k), "required key is missing");
            s.coefficients[k] = k == "mode" ? coef.integer(k, 0) : coef.number(k, 0.0);
        }
        coef.finish();
    } else {
        throw ConfigError(o.at("kind"), "expected \"none\", \"constant\" or \"named\"");
    }
    o.finish();
    return s;
}

ExternalSpec parse_external(const json* j) {
    ExternalSpec s;
    if (!j) return s;
    Obj o(*j, "/external");
    const std::string kind = o.string("kind", "none");
    if (kind == "harmonic") {
        s.kind = ExternalSpec::Kind::harmonic;
        s.omega = o.number("omega", 1.0);
        if (!(s.omega > 0.0)) throw ConfigError(o.at("omega"), "must be positive");
    } else if (kind != "none") {
        throw ConfigError(o.at("kind"), "expected \"none\" or \"harmonic\"");
    }
    o.finish();
    return s;
}

StepSpec parse_steps(const json* j) {
    StepSpec s;
    if (!j) return s;
    Obj o(*j, "/steps");
    s.dt = o.number("dt", s.dt);
    s.steps_per_snapshot = o.integer("steps_per_snapshot", s.steps_per_snapshot);
    s.snapshots = o.integer("snapshots", s.snapshots);
    s.warmup_steps = o.integer("warmup_steps", 0);
    s.cfl_safety = o.number("cfl_safety", s.cfl_safety);
    s.enforce_cfl = o.boolean("enforce_cfl", s.enforce_cfl);
    o.finish();
    if (!(s.dt > 0.0)) throw ConfigError(o.at("dt"), "must be positive");
    if (s.steps_per_snapshot < 1) throw ConfigError(o.at("steps_per_snapshot"), "must be at least 1");
    if (s.snapshots < 0) throw ConfigError(o.at("snapshots"), "must be non-negative");
    if (s.warmup_steps < 0) throw ConfigError(o.at("warmup_steps"), "must be non-negative");
    if (!(s.cfl_safety > 0.0) || s.cfl_safety > 1.0) throw ConfigError(o.at("cfl_safety"), "must be in (0, 1]");
    return s;
}

NodePolicy parse_policy(const json* j) {
    NodePolicy p;
    if (!j) return p;
    Obj o(*j, "/node_policy");
    p.epsilon_rel = o.number("epsilon_rel", p.epsilon_rel);
    p.dilation_radius = o.integer("dilation_radius", p.dilation_radius);
    o.finish();
    if (!(p.epsilon_rel > 0.0)) throw ConfigError(o.at("epsilon_rel"), "must be positive");
    if (p.dilation_radius < 0) throw ConfigError(o.at("dilation_radius"), "must be non-negative");
    return p;
}

SweepSpec parse_sweep(const json* j) {
    SweepSpec s;
    if (!j) return s;
    Obj o(*j, "/sweep");
    s.c_values = o.numbers("c_values", s.c_values);
    s.time = o.number("time", s.time);
    s.phase_step = o.number("phase_step", s.phase_step);
    s.schrodinger_steps = o.integer("schrodinger_steps", s.schrodinger_steps);
    o.finish();
    if (s.c_values.size() < 3) throw ConfigError(o.at("c_values"), "needs at least 3 values");
    for (std::size_t i = 0; i < s.c_values.size(); ++i) {
        if (!(s.c_values[i] > 0.0)) throw ConfigError(o.at("c_values") + "/" + std::to_string(i), "must be positive");
    }
    if (!(s.time > 0.0)) throw ConfigError(o.at("time"), "must be positive");
    if (!(s.phase_step > 0.0)) throw ConfigError(o.at("phase_step"), "must be positive");
    if (s.schrodinger_steps < 1) throw ConfigError(o.at("schrodinger_steps"), "must be at least 1");
    return s;
}

ConvergenceSpec parse_convergence(const json* j) {
    ConvergenceSpec s;
    if (!j) return s;
    Obj o(*j, "/convergence");
    const std::string model = o.string("model", "free_kg");
    if (model == "free_kg") s.model = ScenarioKind::free_kg;
    else if (model == "charged_kg") s.model = ScenarioKind::charged_kg;
    else if (model == "schrodinger") s.model = ScenarioKind::schrodinger;
    else throw ConfigError(o.at("model"), "expected \"free_kg\", \"charged_kg\" or \"schrodinger\"");
    s.levels = o.integer("levels", s.levels);
    s.t_mid = o.number("t_mid", s.t_mid);
    o.finish();
    if (s.levels < 3) throw ConfigError(o.at("levels"), "needs at least 3 levels");
    if (!(s.t_mid > 0.0)) throw ConfigError(o.at("t_mid"), "must be positive");
    return s;
}

std::vector<std::array<int, 4>> parse_contours(const json* j) {
    std::vector<std::array<int, 4>> out;
    if (!j) return out;
    if (!j->is_array()) throw ConfigError("/contours", "expected an array of [lo0, lo1, hi0, hi1]");
    for (std::size_t i = 0; i < j->size(); ++i) {
        const std::string ptr = "/contours/" + std::to_string(i);
        const json& r = (*j)[i];
        if (!r.is_array() || r.size() != 4) throw ConfigError(ptr, "expected [lo0, lo1, hi0, hi1]");
        std::array<int, 4> rect{};
        for (std::size_t k = 0; k < 4; ++k) {
            if (!r[k].is_number_integer()) throw ConfigError(ptr + "/" + std::to_string(k), "expected an integer");
            rect[k] = r[k].get<int>();
        }
        if (rect[2] <= rect[0] || rect[3] <= rect[1]) throw ConfigError(ptr, "needs lo < hi on both axes");
        out.push_back(rect);
    }
    return out;
}

void check_consistency(const ScenarioConfig& c) {
    const ScenarioKind model = evolution_model(c);
    const int dims = c.grid.dims();
    const Grid grid = c.grid.build();
    using IK = InitialSpec::Kind;
    using PK = PotentialSpec::Kind;

    if (c.initial.kind == IK::vortex && model != ScenarioKind::schrodinger) {
        throw ConfigError("/initial/kind", "vortex initial state is only available for Schrodinger evolution");
    }
    if (c.kind == ScenarioKind::vortex && dims != 2) throw ConfigError("/grid/points", "vortex scenario needs a 2D grid");
    if (c.kind == ScenarioKind::classical_limit_sweep && c.initial.kind == IK::vortex) {
        throw ConfigError("/initial/kind", "classical limit sweep needs a plane wave or gaussian");
    }

    // Potentials.
    const bool needs_none = model == ScenarioKind::free_kg || c.kind == ScenarioKind::classical_limit_sweep ||
                            c.kind == ScenarioKind::vortex;
    if (needs_none && c.potential.kind != PK::none) {
        throw ConfigError("/potential/kind", "this scenario takes no electromagnetic potential");
    }
    if (model == ScenarioKind::charged_kg && c.potential.kind == PK::none) {
        throw ConfigError("/potential", "charged_kg needs a constant or named potential");
    }
    if (model == ScenarioKind::schrodinger && c.potential.kind == PK::named && c.potential.name == "lorenz_wave") {
        throw ConfigError("/potential/name", "the split-step Schrodinger solver needs a spatially uniform A");
    }
    if (c.external.kind != ExternalSpec::Kind::none && model != ScenarioKind::schrodinger) {
        throw ConfigError("/external/kind", "external potentials apply to Schrodinger evolution only");
    }

    // Initial state geometry.
    if (c.initial.kind == IK::plane_wave) {
        for (int a = 0; a < dims; ++a) {
            const double turns = c.initial.momentum[static_cast<std::size_t>(a)] * grid.length(a) /
                                 (2.0 * std::numbers::pi * c.physics.hbar);
            if (std::abs(turns - std::round(turns)) > 1e-9) {
                throw ConfigError("/initial/momentum/" + std::to_string(a),
                                  fmt::format("p L / (2 pi hbar) = {:g} is not an integer", turns));
            }
        }
    }
    if (c.initial.kind == IK::gaussian) {
        for (int a = 0; a < dims; ++a) {
            if (c.initial.sigma < 4.0 * grid.spacing(a)) {
                throw ConfigError("/initial/sigma", fmt::format("sigma = {:g} is below 4 grid spacings ({:g}) on axis {}",
                                                               c.initial.sigma, 4.0 * grid.spacing(a), a));
            }
        }
    }

    // Steps.
    if (is_kg(model) && c.steps.enforce_cfl) {
        const double bound = StepControl::cfl_limit(grid, c.physics, c.steps.cfl_safety);
        if (c.steps.dt > bound) {
            throw ConfigError("/steps/dt", fmt::format("dt = {:g} exceeds the CFL bound {:g} (cfl_safety * dx / c)",
                                                       c.steps.dt, bound));
        }
    }
    if (c.kind == ScenarioKind::convergence) {
        const double steps = c.convergence.t_mid / c.steps.dt;
        if (std::abs(steps - std::round(steps)) > 1e-9 * steps) {
            throw ConfigError("/convergence/t_mid", "must be a whole number of steps dt");
        }
        if (std::lround(steps) < c.steps.steps_per_snapshot) {
            throw ConfigError("/convergence/t_mid", "must be at least one snapshot interval");
        }
    }

    // Residual selection.
    for (std::size_t i = 0; i < c.residuals.size(); ++i) {
        if (!residual_fits(model, c.residuals[i])) {
            throw ConfigError("/residuals/" + std::to_string(i),
                              to_string(c.residuals[i]) + " does not apply to " + to_string(model) + " runs");
        }
    }
    const bool series_run = c.kind != ScenarioKind::convergence && c.kind != ScenarioKind::classical_limit_sweep;
    if (series_run && !c.residuals.empty() && c.steps.snapshots < 2) {
        throw ConfigError("/steps/snapshots", "residuals need at least 2 snapshot intervals");
    }
}

double now_seconds_utc(std::string& iso) {
    const auto now = std::chrono::system_clock::now();
    iso = fmt::format("{:%Y-%m-%dT%H:%M:%SZ}", fmt::gmtime(std::chrono::system_clock::to_time_t(now)));
    return std::chrono::duration<double>(now.time_since_epoch()).count();
}

// ---- run helpers ----

struct Run {
    fs::path dir;
    RunManifest manifest;

    void snapshot(int index, double time, const ComplexField& psi, const HydroState& hydro,
                  const PhysicalParams& params, const std::string& kind) {
        const std::string stem = fmt::format("snapshots/snapshot_{:04d}", index);
        export_snapshot(dir / stem, psi, hydro, time, params, kind);
        manifest.snapshots.push_back({index, time, file_entry(dir, stem + ".csv"), file_entry(dir, stem + ".json")});
    }

    void report(const std::string& name, const json& j) {
        write_text(dir / name, j.dump(2) + "\n");
        manifest.reports.push_back(file_entry(dir, name));
    }
};

json residual_entry(EquationId id, const SnapshotSeries& series) {
    try {
        return to_json(evaluate_residual(id, series));
    } catch (const std::invalid_argument& e) {
        return {{"equation_id", to_string(id)}, {"error", e.what()}};
    }
}

std::vector<double> orzero(const std::vector<double>& v, int dims) {
    return v.empty() ? std::vector<double>(static_cast<std::size_t>(dims), 0.0) : v;
}

KgState initial_kg(const ScenarioConfig& c, const Grid& grid, const PhysicalParams& params,
                   const EmPotential* potential) {
    const int dims = grid.dims();
    const auto p = orzero(c.initial.momentum, dims);
    if (c.initial.kind == InitialSpec::Kind::plane_wave) {
        if (c.potential.kind == PotentialSpec::Kind::constant) {
            return plane_wave_state(grid, params, p, c.initial.branch, 0.0, c.potential.scalar, c.potential.vector);
        }
        return init_plane_wave(grid, params, p, c.initial.branch);
    }
    const bool uniform = potential && potential->vector_is_uniform(grid, 0.0);
    return init_gaussian_packet(grid, params, orzero(c.initial.center, dims), c.initial.sigma, p, c.initial.branch,
                                uniform ? potential : nullptr);
}

ComplexField initial_schrodinger(const ScenarioConfig& c, const Grid& grid, const PhysicalParams& params) {
    const int dims = grid.dims();
    const auto p = orzero(c.initial.momentum, dims);
    const auto x0 = orzero(c.initial.center, dims);
    switch (c.initial.kind) {
        case InitialSpec::Kind::plane_wave:
            return ComplexField::sample(grid, [&](std::span<const double> x) {
                double px = 0.0;
                for (std::size_t a = 0; a < x.size(); ++a) px += p[a] * x[a];
                return std::exp(Complex(0.0, px / params.hbar));
            });
        case InitialSpec::Kind::gaussian: {
            auto phi = ComplexField::sample(grid, [&](std::span<const double> x) {
                double r2 = 0.0;
                double px = 0.0;
                for (std::size_t a = 0; a < x.size(); ++a) {
                    r2 += (x[a] - x0[a]) * (x[a] - x0[a]);
                    px += p[a] * x[a];
                }
                const double s = c.initial.sigma;
                return std::exp(Complex(-r2 / (4.0 * s * s), px / params.hbar));
            });
            double norm = 0.0;
            for (const auto& v : phi.values()) norm += std::norm(v);
            phi *= Complex(1.0 / std::sqrt(norm * grid.cell_volume()));
            return phi;
        }
        case InitialSpec::Kind::vortex:
            return vortex_field(grid, x0[0], x0[1], c.initial.window, c.initial.charge);
    }
    throw std::logic_error("unhandled initial state");
}

StepControl step_control(const ScenarioConfig& c, const Grid& grid, const PhysicalParams& params, double dt) {
    if (!c.steps.enforce_cfl) return StepControl::unchecked(dt, c.steps.steps_per_snapshot, c.steps.cfl_safety);
    return StepControl::make(dt, c.steps.steps_per_snapshot, c.steps.cfl_safety, grid, params);
}

std::vector<HydroState> kg_hydro(const std::vector<KgState>& states, const PhysicalParams& params,
                                 const NodePolicy& policy) {
    std::vector<HydroState> out;
    for (const auto& s : states) out.push_back(decompose(s.psi, s.pi, params, policy));
    for (std::size_t k = 1; k + 1 < states.size(); ++k) {
        attach_relativistic_potential(out[k], out[k - 1], out[k + 1], states[k + 1].time - states[k].time, params);
    }
    return out;
}

void run_kg(const ScenarioConfig& c, Run& run) {
    const Grid grid = c.grid.build();
    const auto potential = c.potential.build(c.grid, c.physics);
    const EmPotential* pot = potential ? &*potential : nullptr;
    const auto control = step_control(c, grid, c.physics, c.steps.dt);
    const auto initial = advance_kg(initial_kg(c, grid, c.physics, pot), c.physics, control, c.steps.warmup_steps, pot);
    const auto states = evolve_kg(initial, c.physics, control, c.steps.snapshots, pot);
    const auto hydro = kg_hydro(states, c.physics, c.node_policy);
    for (std::size_t k = 0; k < states.size(); ++k) {
        run.snapshot(static_cast<int>(k), states[k].time, states[k].psi, hydro[k], c.physics, "klein_gordon");
    }
    if (c.residuals.empty()) return;
    const auto series = SnapshotSeries::from_kg(states, c.physics, potential, c.node_policy);
    json reports = json::array();
    for (auto id : c.residuals) reports.push_back(residual_entry(id, series));
    run.report("residuals.json", {{"evaluation_time", series.times[series.middle()]},
                                  {"dt_snap", series.dt_snap()},
                                  {"reports", reports}});
}

void run_schrodinger(const ScenarioConfig& c, Run& run) {
    const Grid grid = c.grid.build();
    const auto potential = c.potential.build(c.grid, c.physics);
    const auto external = c.external.build(grid, c.physics);
    const StepControl control{c.steps.dt, c.steps.steps_per_snapshot, c.steps.cfl_safety};
    const auto initial = advance_schrodinger(SchState{initial_schrodinger(c, grid, c.physics), 0.0}, c.physics, control,
                                             c.steps.warmup_steps, external ? &*external : nullptr,
                                             potential ? &*potential : nullptr);
    const auto states = evolve_schrodinger(initial, c.physics, control, c.steps.snapshots,
                                           external ? &*external : nullptr, potential ? &*potential : nullptr);
    for (std::size_t k = 0; k < states.size(); ++k) {
        run.snapshot(static_cast<int>(k), states[k].time, states[k].phi,
                     decompose_schrodinger(states[k].phi, c.physics, c.node_policy), c.physics, "schrodinger");
    }
    if (c.residuals.empty()) return;
    const auto series = SnapshotSeries::from_schrodinger(states, c.physics, external, potential, c.node_policy);
    json reports = json::array();
    for (auto id : c.residuals) reports.push_back(residual_entry(id, series));
    run.report("residuals.json", {{"evaluation_time", series.times[series.middle()]},
                                  {"dt_snap", series.dt_snap()},
                                  {"reports", reports}});
}

void run_sweep(const ScenarioConfig& c, Run& run) {
    const Grid grid = c.grid.build();
    const auto& sw = c.sweep;
    std::vector<KgState> kg;
    std::vector<SchState> sch;
    json runs = json::array();
    for (double cv : sw.c_values) {
        PhysicalParams p = c.physics;
        p.c = cv;
        const auto s0 = initial_kg(c, grid, p, nullptr);
        const double bound = std::min(StepControl::cfl_limit(grid, p, c.steps.cfl_safety),
                                      sw.phase_step / p.rest_frequency());
        const long steps = std::lround(std::ceil(sw.time / bound));
        const double dt = sw.time / static_cast<double>(steps);
        kg.push_back(advance_kg(s0, p, StepControl::make(dt, 1, c.steps.cfl_safety, grid, p), steps));
        // Nonrelativistic reference from the same initial field.
        sch.push_back(advance_schrodinger(SchState{s0.psi, 0.0}, p,
                                          StepControl{sw.time / sw.schrodinger_steps, 1, c.steps.cfl_safety},
                                          sw.schrodinger_steps));
        runs.push_back({{"c", cv}, {"kg_dt", dt}, {"kg_steps", steps}});
    }
    const auto report = classical_limit_compare(sw.c_values, kg, sch, c.initial.branch, c.physics);
    auto j = to_json(report);
    j["time"] = sw.time;
    j["runs"] = runs;
    run.report("classical_limit.json", j);
}

void run_vortex(const ScenarioConfig& c, Run& run) {
    const Grid grid = c.grid.build();
    const StepControl control{c.steps.dt, c.steps.steps_per_snapshot, c.steps.cfl_safety};
    const auto initial = advance_schrodinger(SchState{initial_schrodinger(c, grid, c.physics), 0.0}, c.physics, control,
                                             c.steps.warmup_steps);
    const auto states = evolve_schrodinger(initial, c.physics, control, c.steps.snapshots);
    json per_snapshot = json::array();
    for (std::size_t k = 0; k < states.size(); ++k) {
        const auto& phi = states[k].phi;
        run.snapshot(static_cast<int>(k), states[k].time, phi, decompose_schrodinger(phi, c.physics, c.node_policy),
                     c.physics, "schrodinger");
        const auto map = plaquette_winding(phi, c.node_policy);
        const std::string name = fmt::format("winding/winding_{:04d}.csv", k);
        std::ostringstream csv;
        write_winding_csv(map, csv);
        write_text(run.dir / name, csv.str());
        run.manifest.data.push_back(file_entry(run.dir, name));

        json cells = json::array();
        for (int i = 0; i < map.rows; ++i) {
            for (int jj = 0; jj < map.cols; ++jj) {
                if (map.is_determinate(i, jj) && map.at(i, jj) != 0) cells.push_back({i, jj, map.at(i, jj)});
            }
        }
        const auto irr = irrotational_check(phi, c.physics, c.node_policy);
        json contours = json::array();
        for (const auto& r : c.contours) {
            json entry = {{"rectangle", r}};
            try {
                const auto circ =
                    contour_circulation(phi, Contour::rectangle(grid, r[0], r[1], r[2], r[3]), c.physics, c.node_policy);
                entry["winding"] = circ.winding;
                entry["gamma"] = circ.gamma;
                entry["raw"] = circ.raw;
            } catch (const std::invalid_argument& e) {
                entry["error"] = e.what();
            }
            contours.push_back(entry);
        }
        per_snapshot.push_back({{"index", k},
                                {"time", states[k].time},
                                {"winding_csv", name},
                                {"total_winding", map.total()},
                                {"nonzero_cells", cells},
                                {"resolved", map.resolved()},
                                {"irrotational",
                                 {{"smooth_curl_max", irr.smooth_curl_max},
                                  {"vortex_curl_max", irr.vortex_curl_max},
                                  {"curl_max", irr.curl_max},
                                  {"applicable", irr.applicable},
                                  {"passes", irr.passes},
                                  {"tolerance", irr.tolerance}}},
                                {"contours", contours}});
    }
    run.report("circulation.json", {{"snapshots", per_snapshot}});
}

void run_convergence(const ScenarioConfig& c, Run& run) {
    const Grid grid = c.grid.build();
    const auto& cv = c.convergence;
    const auto potential = c.potential.build(c.grid, c.physics);
    const EmPotential* pot = potential ? &*potential : nullptr;
    const auto external = c.external.build(grid, c.physics);
    const int sub = c.steps.steps_per_snapshot;

    json levels = json::array();
    auto runner = [&](int level) {
        const double dt = c.steps.dt / std::pow(2.0, level);
        const long start = std::lround(cv.t_mid / dt) - sub;
        SnapshotSeries series;
        if (cv.model == ScenarioKind::schrodinger) {
            const StepControl control{dt, sub, c.steps.cfl_safety};
            SchState s{initial_schrodinger(c, grid, c.physics), 0.0};
            s = advance_schrodinger(s, c.physics, control, start, external ? &*external : nullptr, pot);
            series = SnapshotSeries::from_schrodinger(
                evolve_schrodinger(s, c.physics, control, 2, external ? &*external : nullptr, pot), c.physics,
                external, potential, c.node_policy);
        } else {
            const auto control = step_control(c, grid, c.physics, dt);
            auto s = advance_kg(initial_kg(c, grid, c.physics, pot), c.physics, control, start, pot);
            series = SnapshotSeries::from_kg(evolve_kg(s, c.physics, control, 2, pot), c.physics, potential,
                                             c.node_policy);
        }
        std::vector<ResidualReport> out;
        for (auto id : c.residuals) out.push_back(evaluate_residual(id, series));
        return out;
    };
    const auto table = convergence_study(runner, cv.levels, c.residuals);
    run.report("convergence.json", {{"model", to_string(cv.model)}, {"t_mid", cv.t_mid}, {"table", to_json(table)}});
}

}  // namespace

std::string to_string(ScenarioKind kind) {
    for (const auto& k : kKinds) {
        if (k.kind == kind) return k.name;
    }
    throw std::invalid_argument("unknown scenario kind");
}

ScenarioKind scenario_kind_from_string(const std::string& name) {
    for (const auto& k : kKinds) {
        if (name == k.name) return k.kind;
    }
    throw std::invalid_argument("unknown scenario \"" + name + "\"");
}

const std::vector<ScenarioKind>& all_scenario_kinds() {
    static const std::vector<ScenarioKind> kinds = [] {
        std::vector<ScenarioKind> v;
        for (const auto& k : kKinds) v.push_back(k.kind);
        return v;
    }();
    return kinds;
}

std::string describe(ScenarioKind kind) {
    for (const auto& k : kKinds) {
        if (k.kind == kind) return k.description;
    }
    return {};
}

Grid GridSpec::build() const { return Grid::create(dims(), points, lengths, origin); }

std::optional<EmPotential> PotentialSpec::build(const GridSpec& grid, const PhysicalParams& params) const {
    switch (kind) {
        case Kind::none: return std::nullopt;
        case Kind::constant: return EmPotential::constant(scalar, vector);
        case Kind::named: break;
    }
    EmPotential pot;
    const double a = coefficients.at("amplitude");
    if (name == "lorenz_wave") {
        const double k = 2.0 * std::numbers::pi * coefficients.at("mode") / grid.lengths[0];
        const double c = params.c;
        pot.scalar = [=](std::span<const double> x, double t) { return c * a * std::cos(k * (x[0] - c * t)); };
        pot.vector.push_back([=](std::span<const double> x, double t) { return a * std::cos(k * (x[0] - c * t)); });
        if (grid.dims() == 2) pot.vector.emplace_back();
    } else {
        const double omega = coefficients.at("omega");
        pot.scalar = [=](std::span<const double>, double t) { return a * std::cos(omega * t); };
    }
    return pot;
}

std::optional<RealField> ExternalSpec::build(const Grid& grid, const PhysicalParams& params) const {
    if (kind == Kind::none) return std::nullopt;
    const double k = params.mass * omega * omega;
    return RealField::sample(grid, [k](std::span<const double> x) {
        double r2 = 0.0;
        for (double v : x) r2 += v * v;
        return 0.5 * k * r2;
    });
}

ScenarioConfig parse_config(const json& doc) {
    Obj top(doc, "");
    ScenarioConfig c;
    const std::string kind = top.string("scenario", "");
    try {
        c.kind = scenario_kind_from_string(kind);
    } catch (const std::invalid_argument&) {
        throw ConfigError("/scenario", kind.empty() ? "required key is missing" : "unknown scenario \"" + kind + "\"");
    }
    top.string("description", "");
    c.grid = parse_grid(Obj(top.require("grid"), "/grid"));
    c.physics = parse_physics(top.find("physics"));
    c.initial = parse_initial(Obj(top.require("initial"), "/initial"), c.grid.dims());
    c.potential = parse_potential(top.find("potential"), c.grid.dims());
    c.external = parse_external(top.find("external"));
    c.steps = parse_steps(top.find("steps"));
    c.node_policy = parse_policy(top.find("node_policy"));

    const json* sweep = top.find("sweep");
    if (sweep && c.kind != ScenarioKind::classical_limit_sweep) {
        throw ConfigError("/sweep", "only classical_limit_sweep takes a sweep");
    }
    c.sweep = parse_sweep(sweep);
    const json* conv = top.find("convergence");
    if (conv && c.kind != ScenarioKind::convergence) {
        throw ConfigError("/convergence", "only the convergence scenario takes this section");
    }
    c.convergence = parse_convergence(conv);
    const json* contours = top.find("contours");
    if (contours && c.kind != ScenarioKind::vortex) throw ConfigError("/contours", "only vortex runs take contours");
    c.contours = parse_contours(contours);
    c.output = top.string("output", "");

    if (const json* res = top.find("residuals")) {
        if (!res->is_array()) throw ConfigError("/residuals", "expected an array of equation ids");
        for (std::size_t i = 0; i < res->size(); ++i) {
            const std::string ptr = "/residuals/" + std::to_string(i);
            if (!(*res)[i].is_string()) throw ConfigError(ptr, "expected a string");
            try {
                c.residuals.push_back(equation_id_from_string((*res)[i].get<std::string>()));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(ptr, e.what());
            }
        }
    } else if (c.kind != ScenarioKind::vortex) {
        c.residuals = default_residuals(evolution_model(c));
    }
    top.finish();
    if (c.kind == ScenarioKind::convergence && c.residuals.empty()) {
        throw ConfigError("/residuals", "convergence needs at least one residual");
    }
    check_consistency(c);
    return c;
}

ScenarioConfig parse_config_file(const fs::path& path) {
    json doc;
    try {
        doc = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw ConfigError("", std::string("not valid JSON: ") + e.what());
    }
    return parse_config(doc);
}

json to_json(const ScenarioConfig& c) {
    json initial;
    switch (c.initial.kind) {
        case InitialSpec::Kind::plane_wave:
            initial = {{"kind", "plane_wave"}, {"momentum", c.initial.momentum}, {"branch", branch_name(c.initial.branch)}};
            break;
        case InitialSpec::Kind::gaussian:
            initial = {{"kind", "gaussian"},
                       {"center", c.initial.center},
                       {"sigma", c.initial.sigma},
                       {"momentum", c.initial.momentum},
                       {"branch", branch_name(c.initial.branch)}};
            break;
        case InitialSpec::Kind::vortex:
            initial = {{"kind", "vortex"}, {"center", c.initial.center}, {"charge", c.initial.charge},
                       {"window", c.initial.window}};
            break;
    }
    json potential;
    switch (c.potential.kind) {
        case PotentialSpec::Kind::none: potential = {{"kind", "none"}}; break;
        case PotentialSpec::Kind::constant:
            potential = {{"kind", "constant"}, {"scalar", c.potential.scalar}, {"vector", c.potential.vector}};
            break;
        case PotentialSpec::Kind::named: {
            json coef = json::object();
            for (const auto& [k, v] : c.potential.coefficients) {
                if (k == "mode") coef[k] = std::lround(v);
                else coef[k] = v;
            }
            potential = {{"kind", "named"}, {"name", c.potential.name}, {"coefficients", coef}};
            break;
        }
    }
    json external = c.external.kind == ExternalSpec::Kind::none
                        ? json{{"kind", "none"}}
                        : json{{"kind", "harmonic"}, {"omega", c.external.omega}};
    json residuals = json::array();
    for (auto id : c.residuals) residuals.push_back(to_string(id));

    json out = {
        {"scenario", to_string(c.kind)},
        {"grid", {{"points", c.grid.points}, {"lengths", c.grid.lengths}, {"origin", c.grid.origin}}},
        {"physics", to_json(c.physics)},
        {"initial", initial},
        {"potential", potential},
        {"external", external},
        {"steps",
         {{"dt", c.steps.dt},
          {"steps_per_snapshot", c.steps.steps_per_snapshot},
          {"snapshots", c.steps.snapshots},
          {"warmup_steps", c.steps.warmup_steps},
          {"cfl_safety", c.steps.cfl_safety},
          {"enforce_cfl", c.steps.enforce_cfl}}},
        {"node_policy", {{"epsilon_rel", c.node_policy.epsilon_rel}, {"dilation_radius", c.node_policy.dilation_radius}}},
        {"residuals", residuals},
    };
    if (c.kind == ScenarioKind::classical_limit_sweep) {
        out["sweep"] = {{"c_values", c.sweep.c_values},
                        {"time", c.sweep.time},
                        {"phase_step", c.sweep.phase_step},
                        {"schrodinger_steps", c.sweep.schrodinger_steps}};
    }
    if (c.kind == ScenarioKind::convergence) {
        out["convergence"] = {
            {"model", to_string(c.convergence.model)}, {"levels", c.convergence.levels}, {"t_mid", c.convergence.t_mid}};
    }
    if (c.kind == ScenarioKind::vortex) out["contours"] = c.contours;
    if (!c.output.empty()) out["output"] = c.output;
    return out;
}

int RunManifest::exit_code() const {
    if (status == "ok") return 0;
    if (status == "instability") return 3;
    return 4;
}

namespace {

json entries(const std::vector<FileEntry>& files) {
    json out = json::array();
    for (const auto& f : files) out.push_back({{"path", f.path}, {"bytes", f.bytes}});
    return out;
}

std::vector<FileEntry> entries_from(const json& j) {
    std::vector<FileEntry> out;
    for (const auto& e : j) out.push_back({e.at("path").get<std::string>(), e.at("bytes").get<std::uintmax_t>()});
    return out;
}

}  // namespace

json to_json(const RunManifest& m) {
    json snaps = json::array();
    for (const auto& s : m.snapshots) {
        snaps.push_back({{"index", s.index},
                         {"time", s.time},
                         {"csv", {{"path", s.csv.path}, {"bytes", s.csv.bytes}}},
                         {"json", {{"path", s.json.path}, {"bytes", s.json.bytes}}}});
    }
    return {{"config", m.config},      {"version", m.version},       {"start_time", m.start_time},
            {"end_time", m.end_time},  {"snapshots", snaps},         {"reports", entries(m.reports)},
            {"data", entries(m.data)}, {"plots", entries(m.plots)},  {"skipped_plots", m.skipped_plots},
            {"status", m.status},      {"message", m.message}};
}

RunManifest manifest_from_json(const json& j) {
    RunManifest m;
    m.config = j.at("config");
    m.version = j.at("version").get<std::string>();
    m.start_time = j.at("start_time").get<std::string>();
    m.end_time = j.at("end_time").get<std::string>();
    for (const auto& s : j.at("snapshots")) {
        m.snapshots.push_back({s.at("index").get<int>(),
                               s.at("time").get<double>(),
                               {s.at("csv").at("path").get<std::string>(), s.at("csv").at("bytes").get<std::uintmax_t>()},
                               {s.at("json").at("path").get<std::string>(),
                                s.at("json").at("bytes").get<std::uintmax_t>()}});
    }
    m.reports = entries_from(j.at("reports"));
    m.data = entries_from(j.at("data"));
    m.plots = entries_from(j.at("plots"));
    m.skipped_plots = j.at("skipped_plots").get<std::vector<std::string>>();
    m.status = j.at("status").get<std::string>();
    m.message = j.at("message").get<std::string>();
    return m;
}

void write_manifest(const RunManifest& manifest, const fs::path& dir) {
    write_text(dir / "manifest.json", to_json(manifest).dump(2) + "\n");
}

RunManifest read_manifest(const fs::path& dir) {
    return manifest_from_json(json::parse(read_text(dir / "manifest.json")));
}

FileEntry file_entry(const fs::path& dir, const fs::path& relative) {
    return {relative.generic_string(), fs::file_size(dir / relative)};
}

RunManifest run_scenario(const ScenarioConfig& config, const fs::path& out_dir) {
    fs::create_directories(out_dir / "snapshots");
    if (config.kind == ScenarioKind::vortex) fs::create_directories(out_dir / "winding");
    Run run{out_dir, {}};
    run.manifest.config = to_json(config);
    now_seconds_utc(run.manifest.start_time);
    try {
        switch (config.kind) {
            case ScenarioKind::free_kg:
            case ScenarioKind::charged_kg: run_kg(config, run); break;
            case ScenarioKind::schrodinger: run_schrodinger(config, run); break;
            case ScenarioKind::classical_limit_sweep: run_sweep(config, run); break;
            case ScenarioKind::vortex: run_vortex(config, run); break;
            case ScenarioKind::convergence: run_convergence(config, run); break;
        }
    } catch (const InstabilityError& e) {
        run.manifest.status = "instability";
        run.manifest.message = fmt::format("{} (last stable t = {:.17g})", e.what(), e.last_stable().time);
    } catch (const std::exception& e) {
        run.manifest.status = "error";
        run.manifest.message = e.what();
    }
    now_seconds_utc(run.manifest.end_time);
    write_manifest(run.manifest, out_dir);
    return run.manifest;
}

VerifyResult verify_manifest(const fs::path& dir) {
    VerifyResult result;
    RunManifest m;
    try {
        m = read_manifest(dir);
    } catch (const std::exception& e) {
        result.ok = false;
        result.problems.push_back(std::string("cannot read manifest: ") + e.what());
        return result;
    }
    auto check = [&](const FileEntry& f) {
        const fs::path p = dir / f.path;
        std::error_code ec;
        const auto size = fs::file_size(p, ec);
        if (ec) {
            result.problems.push_back("missing: " + f.path);
        } else if (size != f.bytes) {
            result.problems.push_back(fmt::format("size mismatch: {} has {} bytes, manifest says {}", f.path, size, f.bytes));
        }
    };
    for (const auto& s : m.snapshots) {
        check(s.csv);
        check(s.json);
    }
    for (const auto* list : {&m.reports, &m.data, &m.plots}) {
        for (const auto& f : *list) check(f);
    }
    result.ok = result.problems.empty();
    return result;
}

}  // namespace kgh
