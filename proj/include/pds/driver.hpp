#pragma once

#include "pds/config.hpp"
#include "pds/damage_step.hpp"
#include "pds/diagnostics.hpp"
#include "pds/errors.hpp"
#include "pds/fem.hpp"
#include "pds/io.hpp"
#include "pds/mech_step.hpp"
#include "pds/mesh.hpp"
#include "pds/state.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace pds {

inline Mesh build_mesh(const MeshSpec& spec)
{
    if (!spec.file.empty()) {
        std::ifstream in(spec.file);
        if (!in) {
            throw ConfigError("cannot read mesh file " + spec.file);
        }
        return read_mesh(in);
    }
    return build_rect_mesh(spec.nx, spec.ny, spec.lx, spec.ly, spec.dirichlet);
}

/// Mesh plus per-triangle materials; later regions win where boxes overlap.
inline Body build_body(const ScenarioConfig& c)
{
    validate(c);
    Body body;
    body.mesh = build_mesh(c.mesh);
    body.mat.assign(body.mesh.num_tris(), c.material);
    for (const auto& r : c.regions) {
        const MaterialParams m = apply_overrides(c.material, r);
        validate(m);
        for (std::size_t t = 0; t < body.mesh.num_tris(); ++t) {
            const Vec2 p = body.mesh.centroid(t);
            if (p.x >= r.x0 && p.x <= r.x1 && p.y >= r.y0 && p.y <= r.y1) {
                body.mat[t] = m;
            }
        }
    }
    return body;
}

namespace detail {

struct BoundingBox {
    double x0, x1, y0, y1;
};

inline BoundingBox bounding_box(const Mesh& mesh)
{
    BoundingBox b{std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest(),
                  std::numeric_limits<double>::max(), std::numeric_limits<double>::lowest()};
    for (const Vec2& p : mesh.nodes) {
        b.x0 = std::min(b.x0, p.x);
        b.x1 = std::max(b.x1, p.x);
        b.y0 = std::min(b.y0, p.y);
        b.y1 = std::max(b.y1, p.y);
    }
    return b;
}

inline double profile_factor(Profile prof, const BoundingBox& b, Vec2 p)
{
    switch (prof) {
    case Profile::uniform: return 1.0;
    case Profile::linear_x: return b.x1 > b.x0 ? (p.x - b.x0) / (b.x1 - b.x0) : 1.0;
    case Profile::linear_y: return b.y1 > b.y0 ? (p.y - b.y0) / (b.y1 - b.y0) : 1.0;
    }
    return 1.0;
}

inline std::vector<double> dirichlet_field(const DirichletProgram& bc, const Mesh& mesh, double scalar)
{
    const auto box = bounding_box(mesh);
    std::vector<double> u(mesh.num_dofs());
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
        const double s = scalar * profile_factor(bc.profile, box, mesh.nodes[i]);
        u[2 * i] = s * bc.direction.x;
        u[2 * i + 1] = s * bc.direction.y;
    }
    return u;
}

} // namespace detail

/// Dirichlet lift u_D(t) at every node.
inline std::vector<double> dirichlet_lift(const ScenarioConfig& c, const Mesh& mesh, double t)
{
    return detail::dirichlet_field(c.bc, mesh, c.bc.program.value(t));
}

inline std::vector<double> dirichlet_lift_rate(const ScenarioConfig& c, const Mesh& mesh, double t)
{
    return detail::dirichlet_field(c.bc, mesh, c.bc.program.rate(t));
}

/// Data of increment k: f averaged over ((k-1) tau, k tau] and u_D(k tau).
inline IncrementLoads increment_loads(const ScenarioConfig& c, const Mesh& mesh, int k)
{
    IncrementLoads L;
    const double f = c.load.program.mean((k - 1) * c.tau, k * c.tau);
    L.body_force.resize(mesh.num_dofs());
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
        L.body_force[2 * i] = f * c.load.direction.x;
        L.body_force[2 * i + 1] = f * c.load.direction.y;
    }
    L.u_dirichlet = dirichlet_lift(c, mesh, k * c.tau);
    return L;
}

/// Two-level start: u^{-1} = u0 - tau v0, pi^{-1} = pi0 - tau pidot0, alpha^{-1} = alpha0,
/// e^0 = e(u0) - pi0, e^{-1} = e^0 - tau (e(v0) - pidot0).
inline State initialize(const ScenarioConfig& c, const Body& body)
{
    validate(c);
    const Mesh& mesh = body.mesh;
    const double tau = c.tau;
    const std::size_t ndof = mesh.num_dofs(), ntri = mesh.num_tris();

    const auto lift0 = dirichlet_lift(c, mesh, 0.0);
    std::vector<double> u0(ndof, 0.0), v0(ndof, 0.0);
    if (c.init.u0 == InitialData::Field::dirichlet) {
        u0 = lift0;
    }
    if (c.init.v0 == InitialData::Field::dirichlet) {
        v0 = dirichlet_lift_rate(c, mesh, 0.0);
    }

    std::vector<std::string> bad;
    for (int n : mesh.dirichlet_nodes) {
        const auto i = 2 * static_cast<std::size_t>(n);
        if (u0[i] != lift0[i] || u0[i + 1] != lift0[i + 1]) {
            bad.emplace_back("init.u0 must equal u_D(0) on the Dirichlet boundary");
            break;
        }
    }
    State s;
    s.k = 0;
    s.t = 0.0;
    s.alpha.resize(mesh.num_nodes());
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
        const auto& a = c.init.alpha0;
        double v = a.value;
        if (a.kind == AlphaInit::Kind::disc) {
            const Vec2 d = mesh.nodes[i] - Vec2{a.cx, a.cy};
            v = dot(d, d) <= a.r * a.r ? a.value : 1.0;
        }
        s.alpha[i] = v;
    }
    if (!std::all_of(s.alpha.begin(), s.alpha.end(), [](double a) { return a >= 0.0 && a <= 1.0; })) {
        bad.emplace_back("init.alpha0 in [0,1]");
    }
    if (!bad.empty()) {
        std::string msg = "inadmissible initial data:";
        for (const auto& b : bad) {
            msg += " [" + b + "]";
        }
        throw ConfigError(msg);
    }

    s.u = u0;
    s.u_prev.resize(ndof);
    for (std::size_t i = 0; i < ndof; ++i) {
        s.u_prev[i] = u0[i] - tau * v0[i];
    }
    s.pi.assign(ntri, c.init.pi0);
    s.pi_prev.assign(ntri, c.init.pi0 - tau * c.init.pidot0);
    s.alpha_prev = s.alpha;
    s.e_el.resize(ntri);
    s.e_el_prev.resize(ntri);
    for (std::size_t t = 0; t < ntri; ++t) {
        s.e_el[t] = strain_of(mesh, u0, t) - c.init.pi0.sym();
        s.e_el_prev[t] = s.e_el[t] - tau * (strain_of(mesh, v0, t) - c.init.pidot0.sym());
    }
    return s;
}

struct StepOutput {
    State state;
    EnergyLedger ledger; ///< per-step terms; ineq_res is filled by accumulate()
    int mech_iters = 0;
    int damage_iters = 0;
    double equilibrium_residual = 0.0;
};

/// One staggered increment: mechanics with alpha^{k-1}, then damage with the new elastic strain.
inline StepOutput step(const Body& body, const ScenarioConfig& c, const State& prev)
{
    const int k = prev.k + 1;
    const double tau = c.tau;
    const Mesh& mesh = body.mesh;
    const IncrementLoads loads = increment_loads(c, mesh, k);
    try {
        const MechResult mech = mechanical_step(body, prev, loads, tau, c.mech);
        const DamageResult dmg = damage_step(body, prev.alpha, mech.e_el_new, tau, c.damage);

        StepOutput out;
        State& s = out.state;
        s.k = k;
        s.t = k * tau;
        s.u = mech.u_new;
        s.u_prev = prev.u;
        s.e_el = mech.e_el_new;
        s.e_el_prev = prev.e_el;
        s.pi = mech.pi_new;
        s.pi_prev = prev.pi;
        s.alpha = dmg.alpha_new;
        s.alpha_prev = prev.alpha;

        const auto lift_old = dirichlet_lift(c, mesh, prev.k * tau);
        out.ledger = energy_terms(body, s, prev, loads, lift_old, tau);
        out.ledger.vi_res =
            damage_vi_residual(body, s, prev, tau, c.check.probes, c.check.seed + static_cast<std::uint64_t>(k));
        out.mech_iters = mech.iters;
        out.damage_iters = dmg.iters;
        out.equilibrium_residual = mech.equilibrium_residual;
        return out;
    } catch (const NumericalError& e) {
        throw NumericalError("step " + std::to_string(k) + ": " + e.what(), e.trace());
    } catch (const ConfigError& e) {
        throw ConfigError("step " + std::to_string(k) + ": " + e.what());
    } catch (const PreconditionError& e) {
        throw PreconditionError("step " + std::to_string(k) + ": " + e.what());
    }
}

/// Owns one trajectory: body, current state, ledger and monitors.
class Simulation {
public:
    explicit Simulation(ScenarioConfig c)
        : config_(std::move(c)), body_(build_body(config_)), state_(initialize(config_, body_)),
          monitor_(body_, config_.tau, config_.material.chi)
    {
        totals_ = start_totals(initial_ledger(body_, state_, config_.tau));
        monitor_.observe_initial(state_);
    }

    const StepOutput& advance()
    {
        last_ = step(body_, config_, state_);
        accumulate(totals_, last_.ledger);
        monitor_.observe_step(state_, last_.state);
        state_ = last_.state;
        return last_;
    }

    const ScenarioConfig& config() const { return config_; }
    const Body& body() const { return body_; }
    const State& state() const { return state_; }
    const std::vector<EnergyLedger>& ledger() const { return totals_.rows; }
    const LedgerTotals& totals() const { return totals_; }
    const AprioriNorms& monitors() const { return monitor_.norms(); }

private:
    ScenarioConfig config_;
    Body body_;
    State state_;
    LedgerTotals totals_;
    AprioriMonitor monitor_;
    StepOutput last_;
};

struct RunSummary {
    bool completed = false; ///< every step executed
    bool pass = false;      ///< completed and every gate green
    std::string error;
    int steps = 0;
    EnergyLedger final_row;
    double cumulative_dissipation = 0.0;
    double cumulative_work = 0.0;
    GateReport gates;
    AprioriNorms monitors;
    int max_mech_iters = 0;
    int max_damage_iters = 0;
    double max_equilibrium_residual = 0.0;
    double wall_seconds = 0.0;
    int snapshots = 0;
};

struct RunOptions {
    bool write_files = true;
    std::function<void(const State&)> observer; ///< called for level 0 and after every step
};

inline void write_summary(std::ostream& out, const RunSummary& s)
{
    using detail::fmt_num;
    out << "completed = " << (s.completed ? "true" : "false") << '\n';
    out << "pass = " << (s.pass ? "true" : "false") << '\n';
    if (!s.error.empty()) {
        out << "error = " << s.error << '\n';
    }
    out << "steps = " << s.steps << '\n';
    out << "final.kinetic = " << fmt_num(s.final_row.kinetic) << '\n';
    out << "final.stored_elastic = " << fmt_num(s.final_row.stored_elastic) << '\n';
    out << "final.stored_damage = " << fmt_num(s.final_row.stored_damage) << '\n';
    out << "cumulative.dissipation = " << fmt_num(s.cumulative_dissipation) << '\n';
    out << "cumulative.work = " << fmt_num(s.cumulative_work) << '\n';
    out << "worst.ineq_normalized = " << fmt_num(s.gates.worst_ineq) << '\n';
    out << "worst.yield_res = " << fmt_num(s.gates.worst_yield) << '\n';
    out << "worst.compl_res = " << fmt_num(s.gates.worst_compl) << '\n';
    out << "worst.vi_normalized = " << fmt_num(s.gates.worst_vi) << '\n';
    for (const auto& f : s.gates.failures) {
        out << "gate_failure = " << f << '\n';
    }
    const auto vals = s.monitors.values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
        out << "monitor." << AprioriNorms::names[i] << " = " << fmt_num(vals[i]) << '\n';
    }
    out << "max_mech_iters = " << s.max_mech_iters << '\n';
    out << "max_damage_iters = " << s.max_damage_iters << '\n';
    out << "max_equilibrium_residual = " << fmt_num(s.max_equilibrium_residual) << '\n';
    out << "snapshots = " << s.snapshots << '\n';
    out << "wall_seconds = " << fmt_num(s.wall_seconds) << '\n';
}

/// Executes ceil(T / tau) steps. With write_files, the output directory receives config.cfg,
/// ledger.csv, summary.txt and snapshot_NNNNNN.vtk every `output.every` steps; on failure the last
/// valid state is written to state_last.txt.
inline RunSummary run(const ScenarioConfig& c, const RunOptions& opt = {})
{
    const auto t0 = std::chrono::steady_clock::now();
    Simulation sim(c);
    const std::filesystem::path dir = c.output.dir;
    RunSummary sum;
    if (opt.write_files) {
        std::filesystem::create_directories(dir);
        std::ofstream echo(dir / "config.cfg");
        emit_config(echo, c);
    }
    if (opt.observer) {
        opt.observer(sim.state());
    }
    const int n = num_steps(c);
    try {
        for (int k = 1; k <= n; ++k) {
            const StepOutput& out = sim.advance();
            sum.steps = k;
            sum.max_mech_iters = std::max(sum.max_mech_iters, out.mech_iters);
            sum.max_damage_iters = std::max(sum.max_damage_iters, out.damage_iters);
            sum.max_equilibrium_residual = std::max(sum.max_equilibrium_residual, out.equilibrium_residual);
            if (opt.observer) {
                opt.observer(sim.state());
            }
            if (opt.write_files && c.output.vtk && c.output.every > 0 && k % c.output.every == 0) {
                char name[64];
                std::snprintf(name, sizeof name, "snapshot_%06d.vtk", k);
                write_vtk(dir / name, sim.state(), sim.body(), c.tau);
                ++sum.snapshots;
            }
        }
        sum.completed = true;
    } catch (const std::exception& e) {
        sum.error = e.what();
        if (opt.write_files) {
            std::ofstream dump(dir / "state_last.txt");
            write_state(dump, sim.state());
        }
    }
    sum.final_row = sim.ledger().back();
    sum.cumulative_dissipation = sim.totals().dissipation;
    sum.cumulative_work = sim.totals().work;
    sum.gates = check_gates(sim.ledger(), c.check.gates);
    sum.monitors = sim.monitors();
    sum.pass = sum.completed && sum.gates.pass;
    sum.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (opt.write_files) {
        std::ofstream csv(dir / "ledger.csv");
        write_ledger_csv(csv, sim.ledger());
        std::ofstream txt(dir / "summary.txt");
        write_summary(txt, sum);
    }
    return sum;
}

} // namespace pds
