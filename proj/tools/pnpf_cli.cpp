#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pnpf/app/config.hpp"
#include "pnpf/app/experiments.hpp"
#include "pnpf/app/output.hpp"
#include "pnpf/app/scenario.hpp"

using namespace pnpf;
using namespace pnpf::app;

namespace {

struct Common {
    std::string config;
    std::string out;
    std::optional<int> seed;
    bool quiet = false;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("config", c.config, "configuration file (key = value or JSON)")->required();
    cmd->add_option("--out", c.out, "output directory (overrides output.dir)");
    cmd->add_option("--seed", c.seed, "seed for randomized initial data");
    cmd->add_flag("--quiet", c.quiet, "suppress progress output");
}

RunConfig load(const Common& c) {
    RunConfig cfg = load_config(c.config);
    if (!c.out.empty()) cfg.output_dir = c.out;
    if (c.seed) {
        if (*c.seed < 0) throw ConfigError("--seed", "must be nonnegative");
        cfg.seed = static_cast<std::uint64_t>(*c.seed);
    }
    return cfg;
}

void print_rows(const std::vector<ConvergenceRow>& rows) {
    std::printf("%-16s %6s %12s %14s %8s\n", "study", "cells", "tau", "error", "order");
    for (const auto& r : rows)
        std::printf("%-16s %6d %12.4g %14.6e %8s\n", r.study.c_str(), r.cells, r.tau, r.error,
                    r.order ? fmt(*r.order).substr(0, 6).c_str() : "");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Poisson-Nernst-Planck-Fermi entropy-stable simulator"};
    app.require_subcommand(1);

    Common run_opts, mms_opts, ws_opts, ell_opts, check_opts;
    std::string mms_case;
    std::vector<double> deltas = {0.0, 1e-2, 1e-3};
    std::vector<double> ells = {0.0, 1e-1, 1e-2, 1e-3};

    auto* run_cmd = app.add_subcommand("run", "run a scenario and write timeseries, snapshots and summary");
    add_common(run_cmd, run_opts);
    auto* mms_cmd = app.add_subcommand("mms", "manufactured-solution convergence study");
    add_common(mms_cmd, mms_opts);
    mms_cmd->add_option("--case", mms_case, "elliptic-only | parabolic-coupled | equilibrium")->required();
    auto* ws_cmd = app.add_subcommand("weak-strong", "relative-entropy experiment against a fine reference");
    add_common(ws_cmd, ws_opts);
    ws_cmd->add_option("--delta", deltas, "perturbation sizes")->delimiter(',');
    auto* ell_cmd = app.add_subcommand("ell-sweep", "steady potential against the correlation length");
    add_common(ell_cmd, ell_opts);
    ell_cmd->add_option("--ell", ells, "correlation lengths, must include 0")->delimiter(',');
    auto* check_cmd = app.add_subcommand("check", "validate a configuration");
    add_common(check_cmd, check_opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? Success : ValidationError;
    }

    try {
        if (*check_cmd) {
            const auto cfg = load(check_opts);
            const Mesh mesh = make_mesh(cfg);
            const auto bd = make_boundary(cfg, mesh);
            make_initial(cfg, mesh, bd);
            if (!check_opts.quiet)
                std::printf("ok: n=%d cells=%d equilibrium=%s\n", cfg.species.n(), cfg.cells,
                            bd.equilibrium ? "true" : "false");
            return Success;
        }
        if (*run_cmd) {
            const auto cfg = load(run_opts);
            const auto res = run_scenario(cfg, cfg.output_dir, run_opts.quiet);
            if (!run_opts.quiet || res.exit_code != Success)
                std::printf("steps=%d H: %.10g -> %.10g energy_violations=%d bound_violations=%d %s\n", res.steps,
                            res.initial_H, res.final_H, res.energy_violations, res.bound_violations,
                            res.message.c_str());
            return res.exit_code;
        }
        if (*mms_cmd) {
            const auto cfg = load(mms_opts);
            const auto rows = run_mms(cfg, mms_case);
            std::filesystem::create_directories(cfg.output_dir);
            write_convergence(rows, std::filesystem::path(cfg.output_dir) / ("mms_" + mms_case + ".csv"));
            if (!mms_opts.quiet) print_rows(rows);
            return Success;
        }
        if (*ws_cmd) {
            const auto cfg = load(ws_opts);
            const auto report = run_weak_strong(cfg, deltas);
            write_weak_strong(report, cfg.output_dir);
            if (!ws_opts.quiet)
                for (const auto& c : report.curves)
                    std::printf("delta=%-8g max RE=%.6e gronwall ratio=%.6g\n", c.delta, c.max_relative_entropy,
                                c.ratio);
            return Success;
        }
        if (*ell_cmd) {
            const auto cfg = load(ell_opts);
            const auto rows = run_ell_sweep(cfg, ells);
            std::filesystem::create_directories(cfg.output_dir);
            write_ell_sweep(rows, std::filesystem::path(cfg.output_dir) / "ell_sweep.csv");
            if (!ell_opts.quiet)
                for (const auto& r : rows)
                    std::printf("ell=%-8g |Phi_ell - Phi_0|=%.6e order=%s\n", r.ell, r.difference,
                                r.order ? fmt(*r.order).substr(0, 6).c_str() : "");
            return Success;
        }
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return ValidationError;
    } catch (const StepFailure& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return SolverFailure;
    } catch (const std::domain_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return ValidationError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return SolverFailure;
    }
    return Success;
}
