#include "pds/driver.hpp"
#include "pds/sweep.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int exit_ok = 0;
constexpr int exit_gate = 1;
constexpr int exit_usage = 2;

int report_gates(const pds::RunSummary& s)
{
    if (!s.completed) {
        std::cerr << "gate failed: run_completed (" << s.error << ")\n";
    }
    for (const auto& f : s.gates.failures) {
        std::cerr << "gate failed: " << f << '\n';
    }
    return s.pass ? exit_ok : exit_gate;
}

int cmd_run(const std::string& config_path, const std::optional<std::string>& out, std::optional<double> tau,
            std::optional<int> steps)
{
    pds::ScenarioConfig c;
    try {
        c = pds::parse_config_file(config_path);
        if (out) {
            c.output.dir = *out;
        }
        if (tau) {
            c.tau = *tau;
        }
        if (steps) {
            if (*steps < 1) {
                throw pds::ConfigError("--steps must be >= 1");
            }
            c.T = *steps * c.tau;
        }
        pds::validate(c);
    } catch (const pds::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    }
    const pds::RunSummary s = pds::run(c);
    pds::write_summary(std::cout, s);
    return report_gates(s);
}

int cmd_sweep(const std::string& config_path, const std::vector<double>& taus, const std::optional<std::string>& out,
              std::optional<double> min_order)
{
    pds::SweepResult r;
    pds::ScenarioConfig c;
    try {
        c = pds::parse_config_file(config_path);
        r = pds::tau_sweep(c, taus, pds::worker_count());
    } catch (const pds::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    }
    char line[256];
    std::string table = "tau_coarse,tau_fine,diff_linf_l2,order\n";
    for (std::size_t i = 0; i < r.diffs.size(); ++i) {
        const double order = i == 0 ? NAN : r.orders[i - 1];
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g\n", r.runs[i].tau, r.runs[i + 1].tau, r.diffs[i],
                      order);
        table += line;
    }
    std::cout << table;
    std::cout << "tau";
    for (const char* n : pds::AprioriNorms::names) {
        std::cout << ',' << n;
    }
    std::cout << '\n';
    for (const auto& run : r.runs) {
        std::snprintf(line, sizeof line, "%.17g", run.tau);
        std::cout << line;
        for (double v : run.summary.monitors.values()) {
            std::snprintf(line, sizeof line, ",%.17g", v);
            std::cout << line;
        }
        std::cout << '\n';
    }
    if (out) {
        std::filesystem::create_directories(*out);
        std::ofstream(std::filesystem::path(*out) / "sweep.csv") << table;
    }
    int code = exit_ok;
    for (const auto& run : r.runs) {
        if (!run.summary.pass) {
            std::cerr << "gate failed: run at tau = " << run.tau << '\n';
            code = report_gates(run.summary);
        }
    }
    if (min_order) {
        for (std::size_t i = 1; i < r.diffs.size(); ++i) {
            if (!(r.diffs[i] < r.diffs[i - 1])) {
                std::cerr << "gate failed: monotone_differences\n";
                code = exit_gate;
            }
        }
        for (double o : r.orders) {
            if (!(o >= *min_order)) {
                std::cerr << "gate failed: empirical_order " << o << " < " << *min_order << '\n';
                code = exit_gate;
            }
        }
    }
    return code;
}

int cmd_verify(const std::string& ledger_path, const std::optional<std::string>& config_path)
{
    pds::ResidualGates gates;
    std::ifstream in(ledger_path);
    if (!in) {
        std::cerr << "error: cannot read " << ledger_path << '\n';
        return exit_usage;
    }
    try {
        if (config_path) {
            gates = pds::parse_config_file(*config_path).check.gates;
        }
    } catch (const pds::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_usage;
    }
    std::vector<pds::EnergyLedger> rows;
    try {
        rows = pds::read_ledger_csv(in);
    } catch (const pds::ConfigError& e) {
        std::cerr << "gate failed: ledger_format (" << e.what() << ")\n";
        return exit_gate;
    }
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].k != static_cast<int>(i)) {
            std::cerr << "gate failed: ledger_format (step indices are not 0, 1, 2, ...)\n";
            return exit_gate;
        }
    }
    const auto rep = pds::check_gates(rows, gates);
    std::printf("rows = %zu\nworst.ineq_normalized = %.17g\nworst.yield_res = %.17g\nworst.compl_res = %.17g\n"
                "worst.vi_normalized = %.17g\n",
                rows.size(), rep.worst_ineq, rep.worst_yield, rep.worst_compl, rep.worst_vi);
    for (const auto& f : rep.failures) {
        std::cerr << "gate failed: " << f << '\n';
    }
    return rep.pass ? exit_ok : exit_gate;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Dynamic perfect plasticity with gradient damage: simulation and verification"};
    app.require_subcommand(1);

    std::string config, ledger;
    std::optional<std::string> out, verify_config;
    std::optional<double> tau, min_order;
    std::optional<int> steps;
    std::vector<double> taus;

    auto* run = app.add_subcommand("run", "Run one scenario and check all gates");
    run->add_option("--config", config, "Scenario file")->required();
    run->add_option("--out", out, "Output directory (overrides output.dir)");
    run->add_option("--tau", tau, "Time step (overrides time.tau)");
    run->add_option("--steps", steps, "Number of steps (sets time.T = steps * tau)");

    auto* sweep = app.add_subcommand("sweep", "Time-step refinement study");
    sweep->add_option("--config", config, "Scenario file")->required();
    sweep->add_option("--tau-list", taus, "Step sizes, coarse to fine")->required()->delimiter(',');
    sweep->add_option("--out", out, "Directory for sweep.csv");
    sweep->add_option("--min-order", min_order, "Also gate on monotone differences and this empirical order");

    auto* verify = app.add_subcommand("verify", "Re-check the gates of a saved ledger");
    verify->add_option("--ledger", ledger, "ledger.csv of a run")->required();
    verify->add_option("--config", verify_config, "Scenario file supplying the gate tolerances");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    try {
        if (run->parsed()) {
            return cmd_run(config, out, tau, steps);
        }
        if (sweep->parsed()) {
            return cmd_sweep(config, taus, out, min_order);
        }
        return cmd_verify(ledger, verify_config);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_gate;
    }
}
