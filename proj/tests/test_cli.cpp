#include "pds/config.hpp"
#include "pds/io.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string cli = PDS_CLI;
const std::string scenarios = PDS_SCENARIO_DIR;

fs::path work_dir(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("pds_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

struct Result {
    int code = -1;
    std::string out, err;
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Result invoke(const std::string& args, const fs::path& dir, const std::string& env = "")
{
    const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = env + " '" + cli + "' " + args + " >'" + out.string() + "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

std::string preset(const std::string& name) { return "'" + scenarios + "/" + name + ".cfg'"; }

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

} // namespace

TEST(Cli, RunShearBandPresetWritesOutputs)
{
    const fs::path dir = work_dir("run");
    const Result r = invoke("run --config " + preset("shear_band") + " --out '" + (dir / "o").string() + "'", dir);
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(contains(r.out, "pass = true"));
    EXPECT_TRUE(contains(r.out, "steps = 200"));
    for (const char* f : {"config.cfg", "ledger.csv", "summary.txt", "snapshot_000020.vtk", "snapshot_000200.vtk"}) {
        EXPECT_TRUE(fs::exists(dir / "o" / f)) << f;
    }
    std::size_t snapshots = 0;
    for (const auto& e : fs::directory_iterator(dir / "o")) {
        snapshots += e.path().extension() == ".vtk" ? 1 : 0;
    }
    EXPECT_EQ(snapshots, 10u);
    const std::string ledger = slurp(dir / "o" / "ledger.csv");
    EXPECT_EQ(ledger.rfind(pds::ledger_csv_header, 0), 0u);
    EXPECT_EQ(std::count(ledger.begin(), ledger.end(), '\n'), 202);
}

TEST(Cli, OverridesAreEchoedInConfig)
{
    const fs::path dir = work_dir("override");
    const Result r = invoke("run --config " + preset("bar_stretch") + " --tau 0.002 --steps 3 --out '" +
                                (dir / "o").string() + "'",
                            dir);
    EXPECT_EQ(r.code, 0) << r.err;
    const auto echo = pds::parse_config_file(dir / "o" / "config.cfg");
    EXPECT_EQ(echo.tau, 0.002);
    EXPECT_EQ(echo.T, 3 * 0.002);
    EXPECT_EQ(echo.output.dir, (dir / "o").string());
    EXPECT_TRUE(contains(slurp(dir / "o" / "config.cfg"), "time.tau = 0.002\n"));
    EXPECT_TRUE(contains(r.out, "steps = 3"));
}

TEST(Cli, VerifyAcceptsRunLedgerAndRejectsTampering)
{
    const fs::path dir = work_dir("verify");
    ASSERT_EQ(invoke("run --config " + preset("shear_band") + " --steps 20 --out '" + (dir / "o").string() + "'", dir)
                  .code,
              0);
    const fs::path ledger = dir / "o" / "ledger.csv";
    const Result ok = invoke("verify --ledger '" + ledger.string() + "' --config " + preset("shear_band"), dir);
    EXPECT_EQ(ok.code, 0) << ok.err;
    EXPECT_TRUE(contains(ok.out, "rows = 21"));

    // Inflate one step's work: the recomputed cumulative residual no longer matches the stored one.
    std::istringstream in(slurp(ledger));
    std::ostringstream tampered;
    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        if (row == 10) {
            std::vector<std::string> cells;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) {
                cells.push_back(cell);
            }
            cells[8] = "1000";
            line.clear();
            for (std::size_t i = 0; i < cells.size(); ++i) {
                line += (i ? "," : "") + cells[i];
            }
        }
        tampered << line << '\n';
        ++row;
    }
    const fs::path bad = dir / "tampered.csv";
    std::ofstream(bad) << tampered.str();
    const Result r = invoke("verify --ledger '" + bad.string() + "'", dir);
    EXPECT_EQ(r.code, 1);
    EXPECT_TRUE(contains(r.err, "gate failed")) << r.err;

    const fs::path garbage = dir / "garbage.csv";
    std::ofstream(garbage) << "not,a,ledger\n";
    const Result g = invoke("verify --ledger '" + garbage.string() + "'", dir);
    EXPECT_EQ(g.code, 1);
    EXPECT_TRUE(contains(g.err, "ledger_format"));
}

TEST(Cli, UsageErrorsExitTwo)
{
    const fs::path dir = work_dir("usage");
    EXPECT_EQ(invoke("", dir).code, 2);
    EXPECT_EQ(invoke("frobnicate", dir).code, 2);
    EXPECT_EQ(invoke("run", dir).code, 2);
    EXPECT_EQ(invoke("run --config " + preset("shear_band") + " --bogus 1", dir).code, 2);
    EXPECT_EQ(invoke("run --config /nonexistent.cfg", dir).code, 2);
    EXPECT_EQ(invoke("run --config " + preset("shear_band") + " --tau -1", dir).code, 2);
    EXPECT_EQ(invoke("verify --ledger /nonexistent.csv", dir).code, 2);
    EXPECT_EQ(invoke("sweep --config " + preset("bar_stretch") + " --tau-list 0.003,0.002", dir).code, 2);

    const fs::path cfg = dir / "bad.cfg";
    std::ofstream(cfg) << "material.sigma0 = -1\n";
    const Result r = invoke("run --config '" + cfg.string() + "'", dir);
    EXPECT_EQ(r.code, 2);
    EXPECT_TRUE(contains(r.err, "sigma0 > 0")) << r.err;
}

TEST(Cli, SweepReportsTableAndIsThreadCountIndependent)
{
    const fs::path dir = work_dir("sweep");
    const std::string args =
        "sweep --config " + preset("bar_stretch") + " --tau-list 0.004,0.002,0.001 --min-order 0.5 --out '";
    const Result a = invoke(args + (dir / "a").string() + "'", dir, "PDS_THREADS=1");
    EXPECT_EQ(a.code, 0) << a.err;
    const Result b = invoke(args + (dir / "b").string() + "'", dir, "PDS_THREADS=3");
    EXPECT_EQ(b.code, 0) << b.err;
    EXPECT_EQ(a.out, b.out);
    const std::string table = slurp(dir / "a" / "sweep.csv");
    EXPECT_EQ(table.rfind("tau_coarse,tau_fine,diff_linf_l2,order\n", 0), 0u);
    EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 3);
    EXPECT_EQ(table, slurp(dir / "b" / "sweep.csv"));
}

TEST(Cli, IdenticalInvocationsGiveIdenticalLedgerBytes)
{
    const fs::path dir = work_dir("determinism");
    for (const char* sub : {"a", "b"}) {
        ASSERT_EQ(invoke("run --config " + preset("shear_band") + " --steps 30 --out '" + (dir / sub).string() + "'",
                         dir)
                      .code,
                  0);
    }
    const std::string a = slurp(dir / "a" / "ledger.csv");
    EXPECT_FALSE(a.empty());
    EXPECT_EQ(a, slurp(dir / "b" / "ledger.csv"));
}
