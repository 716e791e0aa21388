#include "pnpf/app/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "pnpf/app/output.hpp"
#include "pnpf/diagnostics.hpp"

namespace pnpf::app {

std::vector<ConvergenceRow> run_mms(const RunConfig& config, const std::string& id) {
    if (id == "elliptic-only") return elliptic_study(config.species, config.length, {50, 100, 200});
    if (id == "parabolic-coupled") return parabolic_study(config);
    if (id == "equilibrium") return equilibrium_study(config);
    throw ConfigError("--case", "unknown manufactured solution '" + id +
                                    "' (expected elliptic-only, parabolic-coupled or equilibrium)");
}

void write_convergence(const std::vector<ConvergenceRow>& rows, const std::filesystem::path& path) {
    CsvWriter csv(path, {"study", "cells", "tau", "error", "order"});
    for (const auto& r : rows)
        csv.row({r.study, std::to_string(r.cells), fmt(r.tau), fmt(r.error), r.order ? fmt(*r.order) : ""});
}

CellField restrict_average(const CellField& fine, int factor) {
    if (factor < 1 || fine.size() % factor != 0) throw std::invalid_argument("restrict_average: size not divisible");
    CellField coarse(fine.size() / factor);
    for (std::size_t j = 0; j < coarse.size(); ++j) {
        double s = 0.0;
        for (int k = 0; k < factor; ++k) s += fine[j * factor + k];
        coarse[j] = s / factor;
    }
    return coarse;
}

State restrict_state(const State& fine, int factor, const SpeciesParams& params) {
    std::vector<CellField> U;
    for (const auto& u : fine.U) U.push_back(restrict_average(u, factor));
    return make_state(std::move(U), restrict_average(fine.Phi, factor), restrict_average(fine.phi, factor), fine.time,
                      params);
}

namespace {

std::vector<CellField> restrict_fields(const std::vector<CellField>& fine, int factor) {
    std::vector<CellField> out;
    for (const auto& f : fine) out.push_back(restrict_average(f, factor));
    return out;
}

}  // namespace

WeakStrongReport run_weak_strong(const RunConfig& config, const std::vector<double>& deltas) {
    const auto& params = config.species;
    const int factor = config.refine;
    RunConfig fine_cfg = config;
    fine_cfg.cells = config.cells * factor;
    fine_cfg.stepping.tau = config.stepping.tau / factor;
    const Mesh fine_mesh = make_mesh(fine_cfg);
    const Mesh mesh = make_mesh(config);
    const BoundaryData fine_bd = make_boundary(fine_cfg, fine_mesh);
    const BoundaryData bd = make_boundary(config, mesh);

    const auto fine_U0 = make_initial(fine_cfg, fine_mesh, fine_bd);
    std::vector<State> reference;
    WeakStrongReport report;
    report.reference_min_u = 1.0;
    auto collect = [&](const State& s, const StepReport*) {
        for (const auto& u : s.U) report.reference_min_u = std::min(report.reference_min_u, *std::min_element(u.begin(), u.end()));
        reference.push_back(restrict_state(s, factor, params));
    };
    run(fine_U0, fine_bd, params, fine_mesh, fine_cfg.stepping, config.t_end, collect, false);
    if (report.reference_min_u < 1e-6)
        throw std::domain_error("weak-strong: reference solution touches the simplex boundary (min u = " +
                                fmt(report.reference_min_u) + ")");

    auto reference_at = [&](double t) -> const State* {
        const double tol = 1e-9 * std::max(1.0, std::abs(t));
        const auto it = std::lower_bound(reference.begin(), reference.end(), t - tol,
                                         [](const State& s, double v) { return s.time < v; });
        return it != reference.end() && std::abs(it->time - t) <= tol ? &*it : nullptr;
    };

    const auto base_U0 = restrict_fields(fine_U0, factor);
    const double c = 0.5 * config.length, w = 0.1 * config.length;
    for (double delta : deltas) {
        auto U0 = base_U0;
        for (int j = 0; j < mesh.n_cells(); ++j) {
            const double x = mesh.center(j);
            const double bump = delta * std::exp(-0.5 * (x - c) * (x - c) / (w * w));
            U0[1][j] += bump;
            for (auto& u : U0) u[j] /= 1.0 + bump;
        }
        WeakStrongCurve curve;
        curve.delta = delta;
        auto record = [&](const State& s, const StepReport*) {
            const State* ref = reference_at(s.time);
            if (!ref) return;
            curve.time.push_back(s.time);
            curve.relative_entropy.push_back(relative_entropy(s, *ref, params, mesh).total);
        };
        run(U0, bd, params, mesh, config.stepping, config.t_end, record, false);
        curve.max_relative_entropy = *std::max_element(curve.relative_entropy.begin(), curve.relative_entropy.end());
        if (delta != 0.0) curve.ratio = curve.max_relative_entropy / curve.relative_entropy.front();
        report.curves.push_back(std::move(curve));
    }
    return report;
}

void write_weak_strong(const WeakStrongReport& report, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    CsvWriter csv(out_dir / "weak_strong.csv", {"delta", "time", "relative_entropy"});
    nlohmann::json summary = {{"reference_min_u", report.reference_min_u}, {"runs", nlohmann::json::array()}};
    for (const auto& c : report.curves) {
        for (std::size_t k = 0; k < c.time.size(); ++k) csv.row({fmt(c.delta), fmt(c.time[k]), fmt(c.relative_entropy[k])});
        summary["runs"].push_back(
            {{"delta", c.delta}, {"gronwall_ratio", c.ratio}, {"max_relative_entropy", c.max_relative_entropy}});
    }
    std::ofstream(out_dir / "weak_strong.json") << summary.dump(2) << '\n';
}

std::vector<EllSweepRow> run_ell_sweep(const RunConfig& config, const std::vector<double>& ells) {
    if (std::find(ells.begin(), ells.end(), 0.0) == ells.end())
        throw ConfigError("--ell", "the list must contain 0");
    for (double ell : ells)
        if (!(ell >= 0.0)) throw ConfigError("--ell", "values must be nonnegative");

    auto steady_Phi = [&](double ell) {
        RunConfig c = config;
        c.species.ell = ell;
        const Mesh mesh = make_mesh(c);
        const BoundaryData bd = make_boundary(c, mesh);
        if (bd.equilibrium) return solve_equilibrium(bd, c.species, mesh, c.stepping.newton).Phi;
        const auto U0 = make_initial(c, mesh, bd);
        return run(U0, bd, c.species, mesh, c.stepping, c.t_end, {}, false).states.back().Phi;
    };

    const Mesh mesh = make_mesh(config);
    const CellField base = steady_Phi(0.0);
    std::vector<EllSweepRow> rows;
    for (double ell : ells) {
        EllSweepRow row;
        row.ell = ell;
        if (ell > 0.0) {
            const CellField Phi = steady_Phi(ell);
            CellField d(Phi.size());
            for (std::size_t j = 0; j < d.size(); ++j) d[j] = Phi[j] - base[j];
            row.difference = l2_norm(mesh, d);
        }
        rows.push_back(row);
    }
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.ell > b.ell; });
    for (std::size_t k = 1; k < rows.size(); ++k)
        if (rows[k].ell > 0.0 && rows[k - 1].ell > 0.0)
            rows[k].order = observed_order(rows[k - 1].difference, rows[k].difference, rows[k - 1].ell / rows[k].ell);
    return rows;
}

void write_ell_sweep(const std::vector<EllSweepRow>& rows, const std::filesystem::path& path) {
    CsvWriter csv(path, {"ell", "l2_difference", "order"});
    for (const auto& r : rows) csv.row({fmt(r.ell), fmt(r.difference), r.order ? fmt(*r.order) : ""});
}

}  // namespace pnpf::app
