#include "pnpf/app/scenario.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>

#include "json.hpp"
#include "pnpf/app/output.hpp"
#include "pnpf/diagnostics.hpp"

namespace pnpf::app {

namespace {

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace

ScenarioResult run_scenario(const RunConfig& config, const std::filesystem::path& out_dir, bool quiet) {
    const auto start = std::chrono::steady_clock::now();
    const Mesh mesh = make_mesh(config);
    const BoundaryData bd = make_boundary(config, mesh);
    const auto& params = config.species;
    const auto U0 = make_initial(config, mesh, bd);

    std::filesystem::create_directories(out_dir / "snapshots");
    CsvWriter series(out_dir / "timeseries.csv", timeseries_header(params.n()));
    const double slack = 10.0 * config.stepping.newton.abs_tol;

    ScenarioResult res;
    std::optional<State> prev;
    int step = 0;
    auto observer = [&](const State& s, const StepReport* report) {
        const auto rec = make_record(step, s, bd, params, mesh, report);
        series.row(timeseries_row(rec));
        try {
            validate_state(s, 1e-12);
        } catch (const std::domain_error&) {
            ++res.bound_violations;
        }
        if (prev) {
            const Trajectory pair{{*prev, s}, {}};
            res.energy_violations += energy_inequality_check(pair, bd, params, mesh, slack).violations;
        } else {
            res.initial_H = rec.H;
        }
        res.final_H = rec.H;
        const bool last = s.time >= config.t_end - 1e-12 * std::max(1.0, config.t_end);
        if (step % config.stride == 0 || last)
            write_snapshot(out_dir / "snapshots" / ("snap_" + std::to_string(step) + ".csv"), s, mesh);
        if (!quiet && report)
            std::printf("step %d t=%.6g H=%.10g newton=%d tau=%.3g\n", step, s.time, rec.H, report->newton_iterations,
                        report->tau_used);
        prev = s;
        ++step;
    };

    try {
        run(U0, bd, params, mesh, config.stepping, config.t_end, observer, false);
    } catch (const StepFailure& e) {
        res.exit_code = SolverFailure;
        res.message = e.what();
    } catch (const std::domain_error& e) {
        res.exit_code = InvariantViolation;
        res.message = e.what();
    }
    res.steps = std::max(0, step - 1);
    res.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (res.exit_code == Success && (res.energy_violations > 0 || res.bound_violations > 0)) {
        res.exit_code = InvariantViolation;
        res.message = "invariant violations detected";
    }

    nlohmann::json summary = {
        {"steps", res.steps},
        {"initial_H", res.initial_H},
        {"final_H", res.final_H},
        {"energy_violations", res.energy_violations},
        {"bound_violations", res.bound_violations},
        {"energy_slack", slack},
        {"equilibrium_boundary", bd.equilibrium},
        {"exit_code", res.exit_code},
        {"message", res.message},
        {"runtime_seconds", res.runtime_seconds},
        {"timestamp", utc_timestamp()},
    };
    std::ofstream(out_dir / "summary.json") << summary.dump(2) << '\n';
    return res;
}

}  // namespace pnpf::app
