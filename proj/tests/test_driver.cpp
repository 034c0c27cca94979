#include "pds/driver.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <numbers>
#include <random>

using namespace pds;

namespace {

std::filesystem::path fresh_dir(const std::string& name)
{
    const auto dir = std::filesystem::temp_directory_path() / ("pds_driver_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

std::size_t count_snapshots(const std::filesystem::path& dir)
{
    std::size_t n = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.path().extension() == ".vtk") {
            ++n;
        }
    }
    return n;
}

ScenarioConfig quiet_config()
{
    ScenarioConfig c;
    c.mesh.nx = 3;
    c.mesh.ny = 3;
    c.load.program = {};
    c.tau = 0.01;
    c.T = 0.05;
    return c;
}

ScenarioConfig plastic_config()
{
    ScenarioConfig c;
    c.mesh.nx = 4;
    c.mesh.ny = 4;
    c.material.lambda1 = 1;
    c.material.mu1 = 1;
    c.material.sigma0 = 0.05;
    c.material.sigma1 = 0.05;
    c.material.Gc = 0.002;
    c.material.eps_at = 0.1;
    c.load.program = {TimeProgram::Kind::constant, 2.0, 0.0};
    c.load.direction = {1, 0};
    c.tau = 0.05;
    c.T = 0.2;
    c.damage.tol = 1e-10;
    return c;
}

double max_abs(std::span<const double> v)
{
    double m = 0.0;
    for (double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

} // namespace

TEST(Initialize, RestStartHasEqualLevels)
{
    const ScenarioConfig c = quiet_config();
    const Body body = build_body(c);
    const State s = initialize(c, body);
    EXPECT_EQ(s.k, 0);
    EXPECT_EQ(s.u, s.u_prev);
    EXPECT_EQ(s.e_el, s.e_el_prev);
    EXPECT_EQ(s.pi, s.pi_prev);
    EXPECT_EQ(s.alpha, s.alpha_prev);
    for (const Sym2& e : s.e_el) {
        EXPECT_EQ(e, Sym2{});
    }
}

TEST(Initialize, PreviousStrainIsConsistentWithPreviousDisplacement)
{
    ScenarioConfig c = quiet_config();
    c.mesh.dirichlet = SideSet{Side::left} | Side::bottom;
    c.bc.program = {TimeProgram::Kind::ramp, 0.3, 1.7};
    c.bc.profile = Profile::linear_x;
    c.bc.direction = {0.6, 0.8};
    c.init.u0 = InitialData::Field::dirichlet;
    c.init.v0 = InitialData::Field::dirichlet;
    c.init.pi0 = {0.01, -0.02};
    c.init.pidot0 = {0.5, 0.25};
    c.init.alpha0 = {AlphaInit::Kind::disc, 0.7, 0.5, 0.5, 0.3};
    const Body body = build_body(c);
    const State s = initialize(c, body);

    const auto v0 = dirichlet_lift_rate(c, body.mesh, 0.0);
    for (std::size_t i = 0; i < s.u.size(); ++i) {
        EXPECT_DOUBLE_EQ(s.u_prev[i], s.u[i] - c.tau * v0[i]);
    }
    for (std::size_t t = 0; t < body.mesh.num_tris(); ++t) {
        const Sym2 direct = strain_of(body.mesh, s.u_prev, t) - s.pi_prev[t].sym();
        EXPECT_NEAR(s.e_el_prev[t].xx, direct.xx, 1e-15);
        EXPECT_NEAR(s.e_el_prev[t].yy, direct.yy, 1e-15);
        EXPECT_NEAR(s.e_el_prev[t].xy, direct.xy, 1e-15);
        const Sym2 now = strain_of(body.mesh, s.u, t) - s.pi[t].sym();
        EXPECT_EQ(s.e_el[t], now);
    }
    for (std::size_t i = 0; i < body.mesh.num_nodes(); ++i) {
        const Vec2 d = body.mesh.nodes[i] - Vec2{0.5, 0.5};
        EXPECT_EQ(s.alpha[i], dot(d, d) <= 0.09 ? 0.7 : 1.0);
    }
}

TEST(Initialize, InadmissibleDataListsConstraint)
{
    ScenarioConfig c = quiet_config();
    c.bc.program = {TimeProgram::Kind::constant, 0.1, 0.0};
    const Body body = build_body(c);
    try {
        initialize(c, body);
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("u_D(0)"), std::string::npos) << e.what();
    }
    c.bc.program = {};
    c.init.alpha0.value = 1.5;
    EXPECT_THROW(initialize(c, body), ConfigError);
}

TEST(Loads, BodyForceIsGaussMeanAndDirichletIsSampledAtLevel)
{
    ScenarioConfig c = quiet_config();
    c.load.program = {TimeProgram::Kind::ramp, 2.0, 3.0};
    c.load.direction = {0.0, -1.0};
    c.bc.program = {TimeProgram::Kind::ramp, 0.0, 5.0};
    const Mesh mesh = build_mesh(c.mesh);
    for (int k = 1; k <= 4; ++k) {
        const auto L = increment_loads(c, mesh, k);
        const double mean = 2.0 + 3.0 * (k - 0.5) * c.tau;
        EXPECT_NEAR(L.body_force[1], -mean, 1e-14);
        EXPECT_EQ(L.body_force[0], 0.0);
        EXPECT_NEAR(L.u_dirichlet[0], 5.0 * k * c.tau, 1e-15);
    }
    c.load.program = {TimeProgram::Kind::sinus, 1.0, 2.0};
    const double t0 = 0.03, t1 = 0.04;
    const double exact = (std::cos(2 * std::numbers::pi * 2 * t0) - std::cos(2 * std::numbers::pi * 2 * t1)) /
                         (2 * std::numbers::pi * 2 * (t1 - t0));
    // Two-point Gauss error: h^4 max|f''''| / 4320 on an interval of length h.
    const double w = 2 * std::numbers::pi * 2;
    EXPECT_NEAR(c.load.program.mean(t0, t1), exact, std::pow(w * (t1 - t0), 4) / 4320);
}

TEST(Step, ZeroLoadsRestStartIsFixedPoint)
{
    const ScenarioConfig c = quiet_config();
    Simulation sim(c);
    const State s0 = sim.state();
    for (int k = 1; k <= 5; ++k) {
        const auto& out = sim.advance();
        EXPECT_EQ(out.state.u, s0.u);
        EXPECT_EQ(out.state.e_el, s0.e_el);
        EXPECT_EQ(out.state.pi, s0.pi);
        EXPECT_EQ(out.state.alpha, s0.alpha);
        EXPECT_EQ(out.ledger.visc_d, 0.0);
        EXPECT_EQ(out.ledger.plast_d, 0.0);
        EXPECT_EQ(out.ledger.dmg_d, 0.0);
        EXPECT_EQ(out.state.k, k);
    }
}

TEST(Step, ElasticLimitFollowsLinearKelvinVoigtScheme)
{
    ScenarioConfig c;
    c.mesh.nx = 4;
    c.mesh.ny = 3;
    c.mesh.dirichlet = Side::left;
    c.material.sigma0 = 1e12;
    c.material.sigma1 = 0;
    c.material.Gc = 1e12;
    c.material.lambda1 = 3;
    c.material.mu1 = 2;
    c.load.program = {TimeProgram::Kind::ramp, 1.0, -4.0};
    c.load.direction = {0.6, -0.8};
    c.bc.program = {TimeProgram::Kind::sinus, 0.02, 3.0};
    c.bc.direction = {0, 1};
    c.tau = 0.01;
    c.T = 0.2;
    Simulation sim(c);
    const MaterialParams& m = c.material;
    const double g = degradation(m, 1.0);
    const oracle::LinearKvIntegrator lin(sim.body().mesh, {g * m.lambda1, g * m.mu1, m.lambda0 + m.chi * g * m.lambda1,
                                                           m.mu0 + m.chi * g * m.mu1, m.rho, c.tau});
    std::vector<double> u1 = sim.state().u, u2 = sim.state().u_prev;
    for (int k = 1; k <= num_steps(c); ++k) {
        const auto& out = sim.advance();
        const auto L = increment_loads(c, sim.body().mesh, k);
        const auto ref = lin.step(u1, u2, L.body_force, L.u_dirichlet);
        const double scale = max_abs(ref);
        for (std::size_t i = 0; i < ref.size(); ++i) {
            ASSERT_NEAR(out.state.u[i], ref[i], 1e-10 * scale) << "step " << k << " dof " << i;
        }
        for (double a : out.state.alpha) {
            EXPECT_GE(a, 1.0 - 1e-12);
        }
        u2 = u1;
        u1 = ref;
    }
}

TEST(Run, FinalTimeEqualToStepGivesOneStep)
{
    ScenarioConfig c = quiet_config();
    c.T = c.tau;
    RunOptions opt;
    opt.write_files = false;
    const RunSummary s = run(c, opt);
    EXPECT_EQ(s.steps, 1);
    EXPECT_TRUE(s.pass);
    EXPECT_EQ(num_steps(c), 1);
    c.T = 2.5 * c.tau;
    EXPECT_EQ(num_steps(c), 3);
}

TEST(Run, DoublingCadenceHalvesSnapshotCount)
{
    ScenarioConfig c = plastic_config();
    c.T = 8 * c.tau;
    c.output.every = 2;
    c.output.dir = fresh_dir("cadence2").string();
    const RunSummary a = run(c);
    EXPECT_EQ(count_snapshots(c.output.dir), 4u);
    EXPECT_EQ(a.snapshots, 4);
    c.output.every = 4;
    c.output.dir = fresh_dir("cadence4").string();
    run(c);
    EXPECT_EQ(count_snapshots(c.output.dir), 2u);
    for (const char* f : {"config.cfg", "ledger.csv", "summary.txt"}) {
        EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(c.output.dir) / f)) << f;
    }
}

TEST(Run, IdenticalConfigsGiveBitwiseIdenticalTrajectories)
{
    const ScenarioConfig c = plastic_config();
    Simulation a(c), b(c);
    for (int k = 0; k < num_steps(c); ++k) {
        const State& sa = a.advance().state;
        const State& sb = b.advance().state;
        ASSERT_EQ(sa, sb);
    }
    std::ostringstream la, lb;
    write_ledger_csv(la, a.ledger());
    write_ledger_csv(lb, b.ledger());
    EXPECT_EQ(la.str(), lb.str());
}

TEST(Run, PlasticRunPassesGates)
{
    RunOptions opt;
    opt.write_files = false;
    const RunSummary s = run(plastic_config(), opt);
    EXPECT_TRUE(s.completed) << s.error;
    EXPECT_TRUE(s.pass);
    EXPECT_GT(s.cumulative_dissipation, 0.0);
}

TEST(Run, FailureIsAnnotatedAndLastStateDumped)
{
    ScenarioConfig c = plastic_config();
    c.mech.maxit = 1;
    c.output.dir = fresh_dir("failure").string();
    EXPECT_THROW(
        {
            try {
                Simulation sim(c);
                sim.advance();
            } catch (const NumericalError& e) {
                EXPECT_EQ(std::string(e.what()).rfind("step 1:", 0), 0u) << e.what();
                EXPECT_FALSE(e.trace().empty());
                throw;
            }
        },
        NumericalError);
    const RunSummary s = run(c);
    EXPECT_FALSE(s.completed);
    EXPECT_FALSE(s.pass);
    EXPECT_NE(s.error.find("step 1"), std::string::npos);
    EXPECT_TRUE(std::filesystem::exists(std::filesystem::path(c.output.dir) / "state_last.txt"));
}

TEST(Body, LaterRegionsOverrideMaterialByCentroid)
{
    ScenarioConfig c = quiet_config();
    c.mesh.nx = 4;
    c.mesh.ny = 4;
    c.regions.push_back({"a", 0.0, 1.0, 0.0, 0.5, {{"sigma0", 0.3}}});
    c.regions.push_back({"b", 0.0, 0.5, 0.0, 1.0, {{"sigma0", 0.2}, {"mu1", 7.0}}});
    const Body body = build_body(c);
    for (std::size_t t = 0; t < body.mesh.num_tris(); ++t) {
        const Vec2 p = body.mesh.centroid(t);
        const MaterialParams& m = body.mat[t];
        if (p.x <= 0.5) {
            EXPECT_EQ(m.sigma0, 0.2);
            EXPECT_EQ(m.mu1, 7.0);
        } else if (p.y <= 0.5) {
            EXPECT_EQ(m.sigma0, 0.3);
            EXPECT_EQ(m.mu1, c.material.mu1);
        } else {
            EXPECT_EQ(m, c.material);
        }
    }
    c.regions.push_back({"bad", 0.0, 1.0, 0.0, 1.0, {{"sigma0", -1.0}}});
    EXPECT_THROW(build_body(c), ConfigError);
}
