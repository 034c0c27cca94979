#pragma once

#include "pds/driver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace pds {

/// Worker cap from PDS_THREADS; unset, 0 or malformed means the hardware concurrency.
inline unsigned worker_count()
{
    unsigned n = 0;
    if (const char* env = std::getenv("PDS_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) {
            n = static_cast<unsigned>(v);
        }
    }
    if (n == 0) {
        n = std::max(1u, std::thread::hardware_concurrency());
    }
    return n;
}

struct SweepRun {
    double tau = 0.0;
    RunSummary summary;
    std::vector<std::vector<double>> u; ///< displacement at every level 0..n
};

struct SweepResult {
    std::vector<SweepRun> runs;
    std::vector<double> diffs;  ///< max_k ||u_tau(t_k) - u_{tau'}(t_k)||_L2 for consecutive pairs
    std::vector<double> orders; ///< empirical orders from consecutive diffs
    std::vector<std::vector<double>> monitor_change; ///< [pair][monitor] relative change
    bool all_pass = true;
};

/// ||a - b||_L2 with the lumped P1 mass.
inline double l2_distance(const Mesh& mesh, std::span<const double> a, std::span<const double> b)
{
    const auto w = lumped_mass(mesh, 1.0);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += w[i] * (a[i] - b[i]) * (a[i] - b[i]);
    }
    return std::sqrt(s);
}

inline double relative_change(double a, double b)
{
    const double m = std::max(std::abs(a), std::abs(b));
    return m == 0.0 ? 0.0 : std::abs(a - b) / m;
}

/// Reruns `base` for each step size (strictly decreasing, each an integer fraction of the
/// previous one) with up to `threads` runs in flight, then compares consecutive runs at the
/// coarse time levels.
inline SweepResult tau_sweep(const ScenarioConfig& base, std::span<const double> taus, unsigned threads)
{
    if (taus.size() < 2) {
        throw ConfigError("sweep: at least two step sizes are required");
    }
    std::vector<int> ratio(taus.size(), 1);
    for (std::size_t i = 1; i < taus.size(); ++i) {
        const double r = taus[i - 1] / taus[i];
        const double rr = std::round(r);
        if (!(taus[i] > 0.0) || rr < 2.0 || std::abs(r - rr) > 1e-9 * r) {
            throw ConfigError("sweep: each step size must be the previous one divided by an integer >= 2");
        }
        ratio[i] = static_cast<int>(rr);
    }

    SweepResult res;
    res.runs.resize(taus.size());
    std::vector<std::exception_ptr> errors(taus.size());
    std::size_t next = 0;
    std::mutex m;
    auto worker = [&]() {
        for (;;) {
            std::size_t i;
            {
                std::lock_guard lock(m);
                if (next == taus.size()) {
                    return;
                }
                i = next++;
            }
            try {
                ScenarioConfig c = base;
                c.tau = taus[i];
                SweepRun& run_i = res.runs[i];
                run_i.tau = taus[i];
                RunOptions opt;
                opt.write_files = false;
                opt.observer = [&run_i](const State& s) { run_i.u.push_back(s.u); };
                run_i.summary = run(c, opt);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(taus.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n; ++t) {
        pool.emplace_back(worker);
    }
    for (auto& t : pool) {
        t.join();
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }

    const Mesh mesh = build_mesh(base.mesh);
    for (const auto& r : res.runs) {
        res.all_pass = res.all_pass && r.summary.pass;
    }
    for (std::size_t i = 1; i < res.runs.size(); ++i) {
        const auto& coarse = res.runs[i - 1].u;
        const auto& fine = res.runs[i].u;
        double d = 0.0;
        for (std::size_t k = 0; k < coarse.size(); ++k) {
            const std::size_t kf = k * static_cast<std::size_t>(ratio[i]);
            if (kf >= fine.size()) {
                break;
            }
            d = std::max(d, l2_distance(mesh, coarse[k], fine[kf]));
        }
        res.diffs.push_back(d);
        const auto a = res.runs[i - 1].summary.monitors.values();
        const auto b = res.runs[i].summary.monitors.values();
        std::vector<double> ch(a.size());
        for (std::size_t j = 0; j < a.size(); ++j) {
            ch[j] = relative_change(a[j], b[j]);
        }
        res.monitor_change.push_back(std::move(ch));
    }
    for (std::size_t i = 1; i < res.diffs.size(); ++i) {
        res.orders.push_back(std::log(res.diffs[i - 1] / res.diffs[i]) / std::log(static_cast<double>(ratio[i + 1])));
    }
    return res;
}

} // namespace pds
