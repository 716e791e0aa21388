#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pnpf/app/config.hpp"

namespace pnpf::app {

struct ConvergenceRow {
    std::string study;
    int cells = 0;
    double tau = 0.0;  ///< 0 for stationary studies
    double error = 0.0;
    std::optional<double> order;  ///< against the previous row of the same study
};

/// log(e_coarse / e_fine) / log(ratio).
double observed_order(double e_coarse, double e_fine, double ratio);
/// Fills ConvergenceRow::order for consecutive rows sharing a study name.
void attach_orders(std::vector<ConvergenceRow>& rows, bool refine_in_time);

/// Stationary split-stage solutions on (0, length) with Dirichlet data at 0
/// and zero flux at length:
///   poisson:   phi = cos(k x), k = pi/length
///   helmholtz: Phi = cos(k x), phi = (1 + ell^2 k^2) cos(k x)
///   composed:  Phi = sin(k x), k = pi/(2 length), rho from the fourth-order operator
std::vector<ConvergenceRow> elliptic_study(const SpeciesParams& params, double length, const std::vector<int>& grids);

/// u_i = a_i + b_i e^{-t} sin(k x), Phi = c e^{-t} sin(k x), k = pi/length,
/// with Dirichlet data u = a, Phi^D = 0 at both ends and the sources that make
/// it an exact solution.
class ParabolicSolution {
public:
    ParabolicSolution(SpeciesParams params, double length, std::vector<double> a, std::vector<double> b, double c);

    double u(int i, double x, double t) const;  ///< i = 0..n
    double Phi(double x, double t) const;
    double phi(double x, double t) const;
    double mass_source(int species, double x, double t) const;  ///< species is 1-based
    double charge_source(double x, double t) const;

    const SpeciesParams& params() const { return params_; }
    double length() const { return length_; }
    BoundarySpec boundary() const;
    SourceTerms sources() const;

private:
    SpeciesParams params_;
    double length_;
    double k_;
    std::vector<double> a_, b_;
    double c_;
};

struct ParabolicError {
    double u = 0.0;    ///< sqrt(sum_i ||u_i - u_i*||^2), i = 1..n
    double Phi = 0.0;  ///< ||Phi - Phi*||
};

ParabolicError parabolic_error(const ParabolicSolution& sol, int cells, double tau, double t_end,
                               const StepperOptions& base);

/// Rows "space-u", "space-Phi" (cells 50/100/200 with tau scaled by h^2) and
/// "time-u", "time-Phi" (1000 cells, tau halved twice).
std::vector<ConvergenceRow> parabolic_study(const RunConfig& config);

/// b = c = 0: a constant state with a neutralising charge source.
std::vector<ConvergenceRow> equilibrium_study(const RunConfig& config);

}  // namespace pnpf::app
