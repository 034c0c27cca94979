// Acceptance checks: one PASS/FAIL line per criterion, exit status 0 iff all pass.

#include "pds/driver.hpp"
#include "pds/sweep.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

using namespace pds;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

ScenarioConfig preset(const std::string& name)
{
    ScenarioConfig c = parse_config_file(std::string(PDS_SCENARIO_DIR) + "/" + name + ".cfg");
    c.check.probes = 32;
    return c;
}

/// One full preset run with the per-step quantities the criteria need.
struct PresetRun {
    std::string name;
    double seconds = 0.0;
    std::vector<EnergyLedger> rows;
    double cum_diss_final = 0.0;
    bool alpha_box_exact = true;
    double worst_vi = 0.0; ///< max over steps of vi_res / scale
};

PresetRun run_preset(const std::string& name)
{
    const auto t0 = Clock::now();
    PresetRun r;
    r.name = name;
    Simulation sim(preset(name));
    const int n = num_steps(sim.config());
    double diss = 0.0;
    for (int k = 1; k <= n; ++k) {
        const auto& out = sim.advance();
        const State& s = out.state;
        for (std::size_t i = 0; i < s.alpha.size(); ++i) {
            if (!(s.alpha[i] >= 0.0 && s.alpha[i] <= s.alpha_prev[i] && s.alpha_prev[i] <= 1.0)) {
                r.alpha_box_exact = false;
            }
        }
        diss += out.ledger.dissipation();
        r.worst_vi = std::max(r.worst_vi, out.ledger.vi_res / residual_scale(out.ledger, diss));
    }
    r.rows = sim.ledger();
    r.cum_diss_final = diss;
    r.seconds = seconds_since(t0);
    return r;
}

Outcome radial_return_equivalence()
{
    const auto t0 = Clock::now();
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const Dev2 E = oracle::random_dev(rng, 1.0);
        const Dev2 pi_prev = oracle::random_dev(rng, 1.0);
        const Dev2 d_prev = oracle::random_dev(rng, 1.0);
        const double muC = 10.0 * unit(rng);
        const double muD = 10.0 * (1.0 - unit(rng));
        const double sigY = 5.0 * (1.0 - unit(rng));
        const Dev2 got = radial_return(E, pi_prev, d_prev, muC, muD, sigY).pi_new;
        const Dev2 ref = oracle::brute_force_plastic(E, pi_prev, d_prev, muC, muD, sigY);
        worst = std::max({worst, std::abs(got.d11 - ref.d11), std::abs(got.d12 - ref.d12)});
    }
    const double t = seconds_since(t0);
    return {worst <= 1e-6 && t < 10.0, fmt("1000 cases, max |pi - pi_brute| = %.2e (<= 1e-6), %.2f s (< 10 s)", worst, t)};
}

Outcome energy_inequality(const std::vector<PresetRun>& runs)
{
    bool pass = true;
    std::string detail;
    for (const auto& r : runs) {
        const auto rep = check_energy_inequality(r.rows, 1e-8);
        pass = pass && rep.pass && r.seconds < 60.0;
        detail += fmt("%s: %zu steps, worst normalized residual %.2e, %.2f s; ", r.name.c_str(), r.rows.size() - 1,
                      rep.worst, r.seconds);
    }
    return {pass, detail + "rtol 1e-8, < 60 s each"};
}

Outcome yield_and_complementarity(const std::vector<PresetRun>& runs)
{
    double yield = 0.0, compl_res = 0.0;
    for (const auto& r : runs) {
        for (const auto& L : r.rows) {
            yield = std::max(yield, L.yield_res);
            compl_res = std::max(compl_res, L.compl_res);
        }
    }
    return {yield <= 1e-8 && compl_res <= 1e-7,
            fmt("max yield residual %.2e (<= 1e-8), max complementarity residual %.2e (<= 1e-7)", yield, compl_res)};
}

Outcome damage_box_and_vi(const std::vector<PresetRun>& runs)
{
    bool box = true;
    double vi = 0.0;
    for (const auto& r : runs) {
        box = box && r.alpha_box_exact;
        vi = std::max(vi, r.worst_vi);
    }
    return {box && vi <= 1e-7, fmt("%zu runs, box and monotonicity exact: %s, max VI violation / scale %.2e (<= 1e-7, "
                                   "32 probes per step)",
                                   runs.size(), box ? "yes" : "no", vi)};
}

Outcome elastic_limit()
{
    const auto t0 = Clock::now();
    ScenarioConfig c;
    c.mesh.nx = 8;
    c.mesh.ny = 8;
    c.mesh.dirichlet = Side::left;
    c.material.sigma0 = 1e12;
    c.material.sigma1 = 0.0;
    c.material.Gc = 1e12;
    c.load.program = {TimeProgram::Kind::sinus, 5.0, 3.0};
    c.load.direction = {0.6, -0.8};
    c.bc.program = {TimeProgram::Kind::sinus, 0.01, 5.0};
    c.bc.direction = {0.0, 1.0};
    c.tau = 1e-3;
    c.T = 0.1;
    Simulation sim(c);
    const MaterialParams& m = c.material;
    const double g = degradation(m, 1.0);
    const oracle::LinearKvIntegrator lin(sim.body().mesh, {g * m.lambda1, g * m.mu1, m.lambda0 + m.chi * g * m.lambda1,
                                                           m.mu0 + m.chi * g * m.mu1, m.rho, c.tau});
    std::vector<double> u1 = sim.state().u, u2 = sim.state().u_prev;
    double diff = 0.0, size = 0.0;
    const int n = num_steps(c);
    for (int k = 1; k <= n; ++k) {
        const State& s = sim.advance().state;
        const auto L = increment_loads(c, sim.body().mesh, k);
        const auto ref = lin.step(u1, u2, L.body_force, L.u_dirichlet);
        const std::vector<double> zero(ref.size(), 0.0);
        diff = std::max(diff, l2_distance(sim.body().mesh, s.u, ref));
        size = std::max(size, l2_distance(sim.body().mesh, ref, zero));
        u2 = u1;
        u1 = ref;
    }
    const double rel = diff / size, t = seconds_since(t0);
    return {n == 100 && rel <= 1e-6 && t < 20.0,
            fmt("8x8 mesh, %d steps, relative L-inf(L2) difference %.2e (<= 1e-6), %.2f s (< 20 s)", n, rel, t)};
}

struct SweepOutcomes {
    Outcome refinement, monitors;
};

SweepOutcomes tau_refinement()
{
    const auto t0 = Clock::now();
    const std::vector<double> taus{2e-3, 1e-3, 5e-4, 2.5e-4};
    const SweepResult r = tau_sweep(preset("bar_stretch"), taus, worker_count());
    const double t = seconds_since(t0);
    bool monotone = true, order_ok = true;
    for (std::size_t i = 1; i < r.diffs.size(); ++i) {
        monotone = monotone && r.diffs[i] < r.diffs[i - 1];
    }
    std::string orders;
    for (double o : r.orders) {
        order_ok = order_ok && o >= 0.8;
        orders += fmt("%.3f ", o);
    }
    SweepOutcomes out;
    out.refinement = {r.all_pass && monotone && order_ok && t < 120.0,
                      fmt("differences %.3e %.3e %.3e, orders %s(>= 0.8), monotone: %s, gates: %s, %.2f s (< 120 s)",
                          r.diffs[0], r.diffs[1], r.diffs[2], orders.c_str(), monotone ? "yes" : "no",
                          r.all_pass ? "green" : "red", t)};
    double worst = 0.0;
    std::size_t worst_j = 0;
    for (const auto& ch : r.monitor_change) {
        for (std::size_t j = 0; j < ch.size(); ++j) {
            if (ch[j] > worst) {
                worst = ch[j];
                worst_j = j;
            }
        }
    }
    out.monitors = {worst < 0.25, fmt("%zu monitors over %zu refinements, largest relative change %.1f%% (%s) (< 25%%)",
                                      std::size(AprioriNorms::names), r.monitor_change.size(), 100.0 * worst,
                                      AprioriNorms::names[worst_j])};
    return out;
}

Outcome damage_qp_oracle()
{
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    MaterialParams m;
    m.lambda1 = 1.0;
    m.mu1 = 1.0;
    m.Gc = 0.05;
    m.eps_at = 0.1;
    m.eta = 0.02;
    m.kappa = 0.01;
    m.p_exp = 2.0;
    const Body b = uniform_body(build_rect_mesh(6, 5, 1.2, 1.0, Side::left), m);
    const std::size_t n = b.mesh.num_nodes();
    const double tau = 0.05;
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> ap(n);
        for (auto& x : ap) {
            x = 0.2 + 0.8 * unit(rng);
        }
        std::vector<Sym2> e(b.mesh.num_tris());
        for (auto& x : e) {
            x = oracle::random_sym(rng, 0.5);
        }
        // The functional is quadratic at p = 2: Hessian columns and linear term by differences of
        // the oracle energy (exact up to rounding for a quadratic).
        const std::vector<double> zero(n, 0.0);
        auto F = [&](const std::vector<double>& x) { return oracle::damage_functional(b.mesh, b.mat, x, ap, e, tau); };
        const double F0 = F(zero);
        std::vector<double> c(n), H(n * n), Fi(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto x = zero;
            x[i] = 1.0;
            Fi[i] = F(x);
        }
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                double h;
                if (i == j) {
                    auto x = zero;
                    x[i] = -1.0;
                    h = Fi[i] + F(x) - 2.0 * F0;
                } else {
                    auto x = zero;
                    x[i] = x[j] = 1.0;
                    h = F(x) - Fi[i] - Fi[j] + F0;
                }
                H[i * n + j] = H[j * n + i] = h;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            c[i] = Fi[i] - F0 - 0.5 * H[i * n + i];
        }
        const auto x_qp = oracle::box_qp(H, c, zero, ap);
        DamageOptions opt;
        opt.tol = 1e-12;
        const auto r = damage_step(b, ap, e, tau, opt);
        worst = std::max(worst, std::abs(F(r.alpha_new) - F(x_qp)));
    }
    return {n <= 50 && worst <= 1e-8,
            fmt("%zu nodes, 50 random strain fields, max objective gap %.2e (<= 1e-8)", n, worst)};
}

Outcome p_laplacian_gradient()
{
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Mesh mesh = build_rect_mesh(5, 4, 1.3, 1.0, Side::left);
    const double kappa = 0.7;
    double worst = 0.0;
    for (double p : {2.0, 3.0}) {
        for (int trial = 0; trial < 3; ++trial) {
            std::vector<double> a(mesh.num_nodes());
            for (auto& x : a) {
                x = unit(rng);
            }
            const auto eg = p_laplacian_energy_grad(mesh, a, kappa, p);
            for (std::size_t i = 0; i < a.size(); ++i) {
                // Fourth-order central difference of the independently coded energy.
                const double h = 1e-3;
                auto shifted = [&](double s) {
                    auto x = a;
                    x[i] += s * h;
                    return oracle::p_dirichlet_energy(mesh, x, kappa, p);
                };
                const double fd = (8.0 * (shifted(1) - shifted(-1)) - (shifted(2) - shifted(-2))) / (12.0 * h);
                worst = std::max(worst, std::abs(eg.grad[i] - fd) / std::abs(fd));
            }
        }
    }
    return {worst < 1e-6, fmt("p = 2 and 3, 6 random fields, max componentwise relative error %.2e (< 1e-6)", worst)};
}

Outcome fixed_point()
{
    ScenarioConfig c;
    c.mesh.nx = 6;
    c.mesh.ny = 6;
    c.load.program = {};
    c.bc.program = {};
    c.tau = 1e-3;
    c.T = 0.05;
    Simulation sim(c);
    const State s0 = sim.state();
    double drift = 0.0;
    bool zero_diss = true;
    int steps = 0;
    for (int k = 1; k <= num_steps(c); ++k) {
        const auto& out = sim.advance();
        const State& s = out.state;
        for (std::size_t i = 0; i < s.u.size(); ++i) {
            drift = std::max({drift, std::abs(s.u[i] - s0.u[i]), std::abs(s.u_prev[i] - s0.u[i])});
        }
        for (std::size_t t = 0; t < s.pi.size(); ++t) {
            drift = std::max({drift, norm(s.pi[t] - s0.pi[t]), norm(s.e_el[t] - s0.e_el[t])});
        }
        for (std::size_t i = 0; i < s.alpha.size(); ++i) {
            drift = std::max(drift, std::abs(s.alpha[i] - s0.alpha[i]));
        }
        zero_diss = zero_diss && out.ledger.visc_d == 0.0 && out.ledger.plast_d == 0.0 && out.ledger.dmg_d == 0.0;
        ++steps;
    }
    return {steps == 50 && drift == 0.0 && zero_diss,
            fmt("%d steps, max field drift %.1e, dissipation increments all zero: %s", steps, drift,
                zero_diss ? "yes" : "no")};
}

} // namespace

int main()
{
    int failures = 0;
    auto report = [&failures](int id, const char* title, const std::function<Outcome()>& check) {
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::printf("%s [%2d] %s: %s\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str());
        std::fflush(stdout);
    };

    report(1, "radial return vs brute force", radial_return_equivalence);

    std::vector<PresetRun> runs;
    std::string run_error;
    try {
        for (const char* name : {"shear_band", "elastic_wave", "bar_stretch"}) {
            runs.push_back(run_preset(name));
        }
    } catch (const std::exception& e) {
        run_error = e.what();
    }
    auto needs_runs = [&](std::function<Outcome()> f) {
        return [&, f]() -> Outcome {
            if (!run_error.empty()) {
                return {false, "preset run failed: " + run_error};
            }
            return f();
        };
    };
    const std::vector<PresetRun> both(runs.begin(), runs.begin() + std::min<std::ptrdiff_t>(2, std::ssize(runs)));
    report(2, "discrete energy inequality", needs_runs([&] { return energy_inequality(both); }));
    report(3, "yield admissibility and complementarity", needs_runs([&] { return yield_and_complementarity(both); }));
    report(4, "damage box, monotonicity and variational inequality", needs_runs([&] { return damage_box_and_vi(runs); }));
    report(5, "elastic limit vs linear Kelvin-Voigt integrator", elastic_limit);

    SweepOutcomes sweep;
    try {
        sweep = tau_refinement();
    } catch (const std::exception& e) {
        sweep.refinement = sweep.monitors = {false, std::string("exception: ") + e.what()};
    }
    report(6, "time-step refinement", [&] { return sweep.refinement; });
    report(7, "damage step vs box QP oracle", damage_qp_oracle);
    report(8, "p-Laplacian gradient vs finite differences", p_laplacian_gradient);
    report(9, "a-priori monitors across refinement", [&] { return sweep.monitors; });
    report(10, "rest fixed point", fixed_point);

    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
