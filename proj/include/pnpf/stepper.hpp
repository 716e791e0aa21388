#pragma once

#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "pnpf/linalg.hpp"
#include "pnpf/mesh.hpp"
#include "pnpf/model.hpp"
#include "pnpf/poisson_fermi.hpp"

namespace pnpf {

enum class Coupling { FullyCoupled, FixedPointDecoupled };

/// Extra volume sources, used by manufactured-solution studies:
/// d_t u_i + div J_i = r_i + mass(i, x, t) and rho gains charge(x, t).
struct SourceTerms {
    std::function<double(int species, double x, double t)> mass;  ///< species is 1-based
    std::function<double(double x, double t)> charge;
};

struct StepperOptions {
    double tau = 1e-3;
    double eps = 1e-8;
    NewtonOptions newton;
    Coupling coupling = Coupling::FullyCoupled;
    int max_step_halvings = 8;
    int restore_after = 5;  ///< consecutive successes before a halved tau is doubled again
    int max_fixed_point_iter = 200;
    double initial_clip = 1e-12;
    std::optional<SourceTerms> sources;

    void validate() const;
};

struct StepReport {
    int newton_iterations = 0;
    double residual_norm = 0.0;
    double tau_used = 0.0;
    int halvings = 0;
    double energy_before = 0.0;
    double energy_after = 0.0;
    double dissipation = 0.0;      ///< sum_i D_i int u_i |grad w_i|^2 at the new level
    double regularization = 0.0;   ///< eps (|v|^2 + |grad v|^2)
    double reaction_production = 0.0;  ///< int sum_i r_i (w_i - w_i^D)
    bool accepted = false;
};

class StepFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct StepResult {
    State state;
    StepReport report;
};

struct Trajectory {
    std::vector<State> states;
    std::vector<StepReport> reports;
};

/// Unknowns per cell: v_1..v_n (v = w - w^D, zero at Dirichlet ends), then phi
/// and Phi when ell > 0, or just Phi when ell == 0.
class ImplicitSystem {
public:
    ImplicitSystem(const State& prev, const BoundaryData& bd, const SpeciesParams& params, const Mesh& mesh,
                   const StepperOptions& opts, double tau);

    int size() const { return mesh_.n_cells() * per_cell_; }
    int per_cell() const { return per_cell_; }
    int v_index(int cell, int species) const { return cell * per_cell_ + species; }
    int phi_index(int cell) const { return cell * per_cell_ + n_; }
    int Phi_index(int cell) const { return cell * per_cell_ + n_ + (split_ ? 1 : 0); }
    std::vector<int> potential_indices() const;
    std::vector<int> concentration_indices() const;

    std::vector<double> pack(const State& state) const;
    State unpack(std::span<const double> x) const;

    std::vector<double> residual(std::span<const double> x) const;
    BandedMatrix jacobian(std::span<const double> x) const;

private:
    void evaluate(std::span<const double> x, std::vector<double>* r, BandedMatrix* jac) const;

    const State& prev_;
    const BoundaryData& bd_;
    const SpeciesParams& params_;
    const Mesh& mesh_;
    const StepperOptions& opts_;
    double tau_;
    double time_;
    int n_;
    bool split_;
    int per_cell_;
};

/// Discrete weak form of one implicit Euler step tested with cell indicators,
/// followed by the Poisson-Fermi rows; see ImplicitSystem for the layout.
std::vector<double> assemble_residual(std::span<const double> unknowns, const State& prev, const BoundaryData& bd,
                                      const SpeciesParams& params, const Mesh& mesh, const StepperOptions& opts);

/// One accepted step. tau is halved on Newton failure up to
/// opts.max_step_halvings times; throws StepFailure afterwards.
StepResult step(const State& prev, const BoundaryData& bd, const SpeciesParams& params, const Mesh& mesh,
                const StepperOptions& opts);

/// Clips U0 to [delta, 1 - delta], renormalises, solves Poisson-Fermi for Phi0
/// and derives w0.
State initial_state(const std::vector<CellField>& U0, const BoundaryData& bd, const SpeciesParams& params,
                    const Mesh& mesh, const StepperOptions& opts);

using StepObserver = std::function<void(const State&, const StepReport*)>;

/// Steps from the initial data to t_end. The observer sees the initial state
/// (with a null report) and every accepted step. With keep_states == false
/// only the initial and final states are retained.
Trajectory run(const std::vector<CellField>& U0, const BoundaryData& bd, const SpeciesParams& params,
               const Mesh& mesh, const StepperOptions& opts, double t_end, const StepObserver& observer = {},
               bool keep_states = true);

/// Thermal equilibrium for equilibrium boundary data: w == w^D everywhere and
/// the self-consistent potential.
State solve_equilibrium(const BoundaryData& bd, const SpeciesParams& params, const Mesh& mesh,
                        const NewtonOptions& newton = {});

}  // namespace pnpf
