#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "pnpf/mesh.hpp"
#include "pnpf/model.hpp"
#include "pnpf/stepper.hpp"

namespace pnpf {

/// Mobility and drift matrices of the system extended by the solvent
/// (index 0, valence 0).
struct ExtendedMatrices {
    Eigen::MatrixXd A;
    Eigen::MatrixXd Q;
};

ExtendedMatrices extended_matrices(std::span<const double> U, const SpeciesParams& params);

/// G_ij = A_ij / sqrt(u_i u_j), and 0 where u_i u_j == 0.
Eigen::MatrixXd scaled_matrix_G(std::span<const double> U, const SpeciesParams& params);

/// G with every D_i replaced by D_* = min_i D_i.
Eigen::MatrixXd comparison_matrix_G_star(std::span<const double> U, const SpeciesParams& params);

/// Orthogonal projections onto L = {Y : sum sqrt(u_i) Y_i = 0} and its complement.
Eigen::VectorXd project_L(const Eigen::VectorXd& Y, std::span<const double> U);
Eigen::VectorXd project_Lperp(const Eigen::VectorXd& Y, std::span<const double> U);

struct SubspaceCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds = false;
};

/// (P_L Y)^T G (P_L Y) against D_* (|(P_L Y)_0|^2 / u_0 + sum_{i>=1} |(P_L Y)_i|^2).
/// Throws std::domain_error if u_0 == 0.
SubspaceCheck check_subspace_pd(std::span<const double> U, const SpeciesParams& params, const Eigen::VectorXd& Y);

struct RelativeEntropyBreakdown {
    double h1 = 0.0;  ///< sum_{i=0}^n int u_i log(u_i/ubar_i) - (u_i - ubar_i)
    double h2 = 0.0;  ///< lambda^2/2 int |grad(Phi - Phibar)|^2 + ell^2 |Delta(Phi - Phibar)|^2
    double total = 0.0;
};

/// Both states must share the boundary data, so Phi - Phibar vanishes on the
/// Dirichlet ends. Throws std::domain_error when ref has a nonpositive
/// concentration.
RelativeEntropyBreakdown relative_entropy(const State& state, const State& ref, const SpeciesParams& params,
                                          const Mesh& mesh);

struct EnergyStepCheck {
    int step = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    bool violated = false;
};

struct EnergyInequalityReport {
    std::vector<EnergyStepCheck> steps;
    int violations = 0;
    double max_excess = 0.0;  ///< max over steps of lhs - rhs
};

/// Per step k >= 1 with tau = t^k - t^{k-1}:
///   equilibrium data: H^k - H^{k-1} + tau diss^k <= tau R^k + slack,
///   otherwise:        H^k - H^{k-1} + tau/2 diss^k
///                         <= tau/2 sum_i D_i int u_i |grad w_i^D|^2 + tau R^k + slack,
/// where R = int sum_i r_i (w_i - w_i^D) vanishes without reactions.
EnergyInequalityReport energy_inequality_check(const Trajectory& trajectory, const BoundaryData& bd,
                                               const SpeciesParams& params, const Mesh& mesh, double slack);

struct DissipationBound {
    double lhs = 0.0;  ///< sum_i D_i int u_i |grad w_i|^2
    double rhs = 0.0;  ///< D_*/2 int (sum_i |grad sqrt u_i|^2 + |grad log u_0|^2 + |grad u_0|^2) - sum_i D_i z_i^2 int |grad Phi|^2
};

DissipationBound dissipation_lower_bound(const State& state, const BoundaryData& bd, const SpeciesParams& params,
                                         const Mesh& mesh);

}  // namespace pnpf
