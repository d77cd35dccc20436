#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "nutaxis/config.hpp"
#include "nutaxis/csv.hpp"
#include "nutaxis/report.hpp"
#include "nutaxis/simulation.hpp"
#include "nutaxis/snapshot.hpp"

namespace nutaxis {

// CLI exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitSolverAbort = 2;
inline constexpr int kExitAssertFailed = 3;
inline constexpr int kExitUsage = 64;

struct SimulateOptions {
    bool assert_convergence = false;
    std::optional<double> tol_override; // overrides the residual tolerances
    bool quiet = false;
};

struct SimulateOutcome {
    int exit_code = kExitOk;
    DiagnosticsRecord record;
    json verdicts;
    std::string message;
};

inline ConvergenceTolerances tolerances_for(const SimulateOptions& opt) {
    ConvergenceTolerances tol;
    if (opt.tol_override) {
        tol.res_v = *opt.tol_override;
        tol.res_u = *opt.tol_override;
        tol.u_inf = *opt.tol_override;
        tol.b_variation = *opt.tol_override;
    }
    return tol;
}

// Runs one configured simulation into its output directory: series.csv,
// run_meta.json, verdicts.json and (optionally) per-sample state snapshots.
// A solver abort still writes whatever was collected.
inline SimulateOutcome simulate_to_dir(const RunConfig& cfg, const SimulateOptions& opt = {}) {
    namespace fs = std::filesystem;
    SimulateOutcome out;
    const fs::path dir = cfg.output.dir;

    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        out.exit_code = kExitIo;
        out.message = "cannot create output directory " + dir.string() + ": " + ec.message();
        return out;
    }

    SimState s0 = build_state(cfg);

    RunMeta meta;
    meta.model = cfg.model;
    meta.grid = cfg.grid;
    meta.regime = classify_regime(cfg.model);
    meta.m_in_proven_range = m_admissible(cfg.model.m);
    meta.tail_fraction = cfg.output.tail_fraction;
    try {
        meta.prediction = predict_equilibrium(cfg.model, s0.u, s0.v);
    } catch (const NotPredictedError&) {
        meta.prediction.reset();
    }

    RunHooks hooks;
    hooks.prediction = meta.prediction;
    hooks.auto_predict = false;
    std::size_t snap_idx = 0;
    if (cfg.output.snapshots) {
        hooks.observer = [&](const SimState& st) {
            char name[32];
            std::snprintf(name, sizeof(name), "snapshot_%06zu.bin", snap_idx++);
            write_snapshot(st, dir / name);
        };
    }

    bool aborted = false;
    try {
        out.record = run(s0, cfg.model, cfg.control, hooks);
    } catch (const Error& e) {
        aborted = true;
        out.message = e.what();
    }

    try {
        meta.health = health_of(out.record);
        write_run_meta(dir / "run_meta.json", meta);
        write_series_csv(dir / "series.csv", out.record);
        out.verdicts = build_verdicts(out.record, meta, tolerances_for(opt));
        if (aborted) out.verdicts["aborted"] = out.message;
        atomic_write_bytes(dir / "verdicts.json", out.verdicts.dump(2) + "\n");
    } catch (const SnapshotError& e) {
        out.exit_code = kExitIo;
        out.message = e.what();
        return out;
    }

    if (aborted) {
        out.exit_code = kExitSolverAbort;
        return out;
    }
    if (opt.assert_convergence) {
        const bool pass = out.verdicts.contains("convergence") &&
                          out.verdicts["convergence"].value("status", "") == "PASS";
        if (!pass) {
            out.exit_code = kExitAssertFailed;
            out.message = "convergence assertion failed";
        }
    }
    return out;
}

struct AxisSpec {
    std::string key;
    std::vector<double> values;
};

// "model.rho=0.5,1,2" -> AxisSpec
inline AxisSpec parse_axis(const std::string& text) {
    const std::size_t eq = text.find('=');
    if (eq == std::string::npos || eq == 0)
        throw UsageError("axis must look like section.key=v1,v2,...  got '" + text + "'");
    AxisSpec ax;
    ax.key = text.substr(0, eq);
    std::size_t start = eq + 1;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::string item =
            text.substr(start, (comma == std::string::npos ? text.size() : comma) - start);
        if (item.empty()) throw UsageError("axis '" + ax.key + "' has an empty value");
        try {
            ax.values.push_back(parse_double(item));
        } catch (const Error&) {
            throw UsageError("axis '" + ax.key + "' has a non-numeric value '" + item + "'");
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (ax.values.empty()) throw UsageError("axis '" + ax.key + "' lists no values");
    return ax;
}

struct SweepResult {
    int exit_code = kExitOk;
    std::size_t completed = 0;
    std::size_t failed = 0;
};

// Runs the cartesian product of one or two axes over a template config.
// Children execute on a small worker pool, each into its own subdirectory;
// a summary row per child lands in summary.csv. Failures keep the partial
// outputs and make the sweep exit nonzero.
inline SweepResult run_sweep(const RunConfig& base, const std::vector<AxisSpec>& axes,
                             const std::filesystem::path& out_dir, int threads,
                             const SimulateOptions& opt = {}) {
    namespace fs = std::filesystem;
    if (axes.empty() || axes.size() > 2)
        throw UsageError("sweep needs one or two --axis specifications");
    for (const auto& ax : axes) {
        RunConfig probe = base;
        apply_override(probe, ax.key, ax.values.front()); // key validation up front
    }

    struct Job {
        std::vector<std::pair<std::string, double>> setting;
        std::string name;
    };
    std::vector<Job> jobs;
    if (axes.size() == 1) {
        for (std::size_t i = 0; i < axes[0].values.size(); ++i)
            jobs.push_back({{{axes[0].key, axes[0].values[i]}},
                            "run_" + std::to_string(jobs.size())});
    } else {
        for (double v0 : axes[0].values)
            for (double v1 : axes[1].values)
                jobs.push_back({{{axes[0].key, v0}, {axes[1].key, v1}},
                                "run_" + std::to_string(jobs.size())});
    }

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw SnapshotError(SnapshotError::Kind::Io, "cannot create " + out_dir.string());

    struct RowData {
        bool done = false;
        int exit_code = kExitIo;
        json verdicts;
        std::string message;
    };
    std::vector<RowData> rows(jobs.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            RunConfig cfg = base;
            try {
                for (const auto& [key, value] : jobs[i].setting) apply_override(cfg, key, value);
                cfg.output.dir = (out_dir / jobs[i].name).string();
                cfg.output.snapshots = false;
                const SimulateOutcome res = simulate_to_dir(cfg, opt);
                rows[i].exit_code = res.exit_code;
                rows[i].verdicts = res.verdicts;
                rows[i].message = res.message;
            } catch (const Error& e) {
                rows[i].exit_code = kExitSolverAbort;
                rows[i].message = e.what();
            }
            rows[i].done = true;
        }
    };

    const int nthreads = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    std::string csv = "run";
    for (const auto& ax : axes) csv += "," + ax.key;
    csv += ",exit,verdict,mass_max_rel_drift,max_v_linf,fitted_rate\n";
    SweepResult result;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        csv += jobs[i].name;
        for (const auto& [key, value] : jobs[i].setting) csv += "," + format_double(value);
        csv += "," + std::to_string(rows[i].exit_code);
        std::string verdict = "n/a";
        std::string drift = "nan", vmax = "nan", rate = "nan";
        if (rows[i].done && !rows[i].verdicts.is_null()) {
            const json& v = rows[i].verdicts;
            if (v.contains("convergence")) verdict = v["convergence"].value("status", "n/a");
            if (v.contains("mass")) drift = format_double(v["mass"].value("max_rel_drift", 0.0));
            if (v.contains("boundedness")) vmax = format_double(v["boundedness"].value("max_v_linf", 0.0));
            if (v.contains("decay")) rate = format_double(v["decay"].value("fitted_rate", 0.0));
        }
        csv += "," + verdict + "," + drift + "," + vmax + "," + rate + "\n";
        if (rows[i].exit_code == kExitOk)
            ++result.completed;
        else {
            ++result.failed;
            result.exit_code = std::max(result.exit_code, rows[i].exit_code);
        }
    }
    atomic_write_bytes(out_dir / "summary.csv", csv);
    return result;
}

} // namespace nutaxis
