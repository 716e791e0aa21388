#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pnpf/app/config.hpp"
#include "pnpf/app/manufactured.hpp"

namespace pnpf::app {

/// Catalogue ids: elliptic-only, parabolic-coupled, equilibrium.
std::vector<ConvergenceRow> run_mms(const RunConfig& config, const std::string& id);
void write_convergence(const std::vector<ConvergenceRow>& rows, const std::filesystem::path& path);

/// Averages consecutive groups of `factor` fine cells.
CellField restrict_average(const CellField& fine, int factor);
State restrict_state(const State& fine, int factor, const SpeciesParams& params);

struct WeakStrongCurve {
    double delta = 0.0;
    std::vector<double> time;
    std::vector<double> relative_entropy;
    double ratio = 0.0;  ///< max_t RE(t) / RE(0); 0 for delta == 0
    double max_relative_entropy = 0.0;
};

struct WeakStrongReport {
    std::vector<WeakStrongCurve> curves;
    double reference_min_u = 0.0;
};

/// Fine reference on refine x cells with tau / refine, restricted by cell
/// averaging and compared against coarse runs started from the restricted
/// initial data plus delta * bump on u_1. Throws std::domain_error when the
/// reference leaves the interior (min u < 1e-6).
WeakStrongReport run_weak_strong(const RunConfig& config, const std::vector<double>& deltas);
void write_weak_strong(const WeakStrongReport& report, const std::filesystem::path& out_dir);

struct EllSweepRow {
    double ell = 0.0;
    double difference = 0.0;  ///< ||Phi_ell - Phi_0||_L2
    std::optional<double> order;
};

/// Steady Phi per ell: the equilibrium solve for equilibrium boundary data,
/// otherwise the state reached at stepping.t_end. The list must contain 0.
std::vector<EllSweepRow> run_ell_sweep(const RunConfig& config, const std::vector<double>& ells);
void write_ell_sweep(const std::vector<EllSweepRow>& rows, const std::filesystem::path& path);

}  // namespace pnpf::app
