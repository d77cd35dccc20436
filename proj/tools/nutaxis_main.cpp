// nutaxis - finite-volume simulator for a porous-medium nutrient-taxis system
// with built-in diagnostics and a critical-exponent analyzer.
//
// Subcommands: simulate | sweep | exponent | diagnose.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nutaxis/csv.hpp"
#include "nutaxis/driver.hpp"
#include "nutaxis/exponent.hpp"
#include "nutaxis/report.hpp"

namespace fs = std::filesystem;
using namespace nutaxis;

namespace {

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SnapshotError(SnapshotError::Kind::Io, "cannot open config " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int cmd_simulate(const std::string& config_path, const std::string& out_override,
                 bool assert_convergence, std::optional<double> tol) {
    RunConfig cfg = parse_config(read_text_file(config_path));
    if (!out_override.empty()) cfg.output.dir = out_override;

    SimulateOptions opt;
    opt.assert_convergence = assert_convergence;
    opt.tol_override = tol;

    const SimulateOutcome res = simulate_to_dir(cfg, opt);
    if (!res.message.empty()) std::cerr << "nutaxis simulate: " << res.message << "\n";
    if (!res.verdicts.is_null()) {
        std::cout << "wrote " << cfg.output.dir << "/series.csv (" << res.record.size()
                  << " samples, " << res.record.steps << " steps)\n";
        if (res.verdicts.contains("convergence"))
            std::cout << "convergence: " << res.verdicts["convergence"].value("status", "n/a")
                      << "\n";
        if (res.verdicts.contains("mass"))
            std::cout << "mass max rel drift: "
                      << format_double(res.verdicts["mass"].value("max_rel_drift", 0.0)) << "\n";
    }
    return res.exit_code;
}

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& axis_texts,
              const std::string& out_override, int threads, bool assert_convergence,
              std::optional<double> tol) {
    RunConfig base = parse_config(read_text_file(config_path));
    std::vector<AxisSpec> axes;
    for (const auto& t : axis_texts) axes.push_back(parse_axis(t));

    const fs::path out_dir = out_override.empty() ? fs::path(base.output.dir) : fs::path(out_override);
    SimulateOptions opt;
    opt.assert_convergence = assert_convergence;
    opt.tol_override = tol;

    const SweepResult res = run_sweep(base, axes, out_dir, threads, opt);
    std::cout << "sweep: " << res.completed << " ok, " << res.failed << " failed; summary in "
              << (out_dir / "summary.csv").string() << "\n";
    return res.exit_code;
}

int cmd_exponent(std::optional<double> single_m, double lo, double hi, int samples, bool bisect,
                 double tol, const std::string& out_path) {
    auto check_range = [](double m) {
        if (!(m > 1.0 && m < 2.0))
            throw UsageError("exponent analysis is defined for m in (1, 2), got m=" +
                             format_double(m));
    };

    std::string csv = "m,classification,a_star,iterations\n";
    auto add_row = [&](double m) {
        check_range(m);
        IterateOptions opt;
        opt.record_sequence = false;
        const ExponentReport rep = iterate_ak(m, opt);
        csv += format_double(m) + "," + to_string(rep.classification) + ",";
        csv += rep.a_star_closed_form ? format_double(*rep.a_star_closed_form) : std::string("");
        csv += "," + std::to_string(rep.k_truncated) + "\n";
    };

    if (single_m) {
        add_row(*single_m);
    } else {
        if (!(lo >= 1.0 && hi <= 2.0 && lo < hi))
            throw UsageError("--min/--max must satisfy 1 <= min < max <= 2");
        if (samples < 1) throw UsageError("--samples must be >= 1");
        for (int i = 0; i < samples; ++i) {
            const double m = lo + (hi - lo) * (static_cast<double>(i) + 0.5) /
                                      static_cast<double>(samples);
            add_row(m);
        }
    }

    if (bisect) {
        const double lo_b = single_m ? 1.0 : lo;
        const double hi_b = single_m ? 2.0 : hi;
        const double found = bisect_critical_m(lo_b, hi_b, tol);
        std::cout << "threshold " << format_double(found) << "\n";
        csv += "# threshold," + format_double(found) + ",,\n";
    }

    if (out_path.empty() || out_path == "-")
        std::cout << csv;
    else
        atomic_write_bytes(out_path, csv);
    return kExitOk;
}

int cmd_diagnose(const std::string& dir, bool assert_convergence, std::optional<double> tol) {
    const fs::path base(dir);
    const DiagnosticsRecord rec = read_series_csv(base / "series.csv");
    const RunMeta meta = read_run_meta(base / "run_meta.json");

    SimulateOptions opt;
    opt.tol_override = tol;
    const json verdicts = build_verdicts(rec, meta, tolerances_for(opt));
    atomic_write_bytes(base / "verdicts.json", verdicts.dump(2) + "\n");

    const std::string status = verdicts.contains("convergence")
                                   ? verdicts["convergence"].value("status", "n/a")
                                   : std::string("n/a");
    std::cout << "convergence: " << status << "\n";
    std::cout << "mass max rel drift: "
              << format_double(verdicts["mass"].value("max_rel_drift", 0.0)) << "\n";
    if (assert_convergence && status != "PASS") return kExitAssertFailed;
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"finite-volume nutrient-taxis simulator and diagnostics harness"};
    app.require_subcommand(1);

    std::string config_path, out_dir, exp_out;
    bool assert_convergence = false, bisect = false;
    int threads = 1, samples = 64;
    double tol_value = 0.0, exp_lo = 1.0, exp_hi = 2.0;
    std::optional<double> single_m;
    std::vector<std::string> axis_texts;

    auto* sim = app.add_subcommand("simulate", "run one configured simulation");
    sim->add_option("--config", config_path, "run configuration file")->required();
    sim->add_option("--out", out_dir, "output directory (overrides [output] dir)");
    sim->add_flag("--assert-convergence", assert_convergence,
                  "exit 3 unless the convergence verdict is PASS");
    auto* sim_tol = sim->add_option("--tol", tol_value, "override residual tolerances");
    sim->add_option("--threads", threads, "worker threads (reserved; sweeps use it)");

    auto* swp = app.add_subcommand("sweep", "run a one- or two-axis parameter sweep");
    swp->add_option("--config", config_path, "template configuration file")->required();
    swp->add_option("--axis", axis_texts, "axis spec, e.g. model.rho=0.5,1,2 (max twice)")
        ->required()
        ->expected(1, 2);
    swp->add_option("--out", out_dir, "sweep output directory");
    swp->add_option("--threads", threads, "worker threads");
    swp->add_flag("--assert-convergence", assert_convergence);
    auto* swp_tol = swp->add_option("--tol", tol_value, "override residual tolerances");

    auto* exp = app.add_subcommand("exponent", "analyze the critical-exponent iteration");
    auto* exp_m = exp->add_option("--m", single_m, "single exponent to classify");
    exp->add_option("--min", exp_lo, "range lower bound (default 1)");
    exp->add_option("--max", exp_hi, "range upper bound (default 2)");
    exp->add_option("--samples", samples, "number of samples across the range");
    exp->add_flag("--bisect", bisect, "locate the divergence threshold by bisection");
    exp->add_option("--tol", tol_value, "bisection tolerance")->default_val(1e-9);
    exp->add_option("--out", exp_out, "CSV output path ('-' for stdout)");

    auto* dia = app.add_subcommand("diagnose", "recompute verdicts from an existing series.csv");
    dia->add_option("--out", out_dir, "run directory holding series.csv and run_meta.json")
        ->required();
    dia->add_flag("--assert-convergence", assert_convergence);
    auto* dia_tol = dia->add_option("--tol", tol_value, "override residual tolerances");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (sim->parsed()) {
            std::optional<double> tol;
            if (sim_tol->count() > 0) tol = tol_value;
            return cmd_simulate(config_path, out_dir, assert_convergence, tol);
        }
        if (swp->parsed()) {
            std::optional<double> tol;
            if (swp_tol->count() > 0) tol = tol_value;
            return cmd_sweep(config_path, axis_texts, out_dir, threads, assert_convergence, tol);
        }
        if (exp->parsed()) {
            if (exp_m->count() == 0) single_m.reset();
            return cmd_exponent(single_m, exp_lo, exp_hi, samples, bisect, tol_value, exp_out);
        }
        if (dia->parsed()) {
            std::optional<double> tol;
            if (dia_tol->count() > 0) tol = tol_value;
            return cmd_diagnose(out_dir, assert_convergence, tol);
        }
    } catch (const UsageError& e) {
        std::cerr << "nutaxis: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ConfigError& e) {
        std::cerr << "nutaxis: config error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const SnapshotError& e) {
        std::cerr << "nutaxis: i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const CflError& e) {
        std::cerr << "nutaxis: solver abort: " << e.what() << "\n";
        return kExitSolverAbort;
    } catch (const SolveError& e) {
        std::cerr << "nutaxis: solver abort: " << e.what() << "\n";
        return kExitSolverAbort;
    } catch (const Error& e) {
        std::cerr << "nutaxis: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
