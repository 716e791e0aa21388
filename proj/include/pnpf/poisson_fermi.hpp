#pragma once

#include <optional>
#include <span>
#include <vector>

#include "pnpf/linalg.hpp"
#include "pnpf/mesh.hpp"
#include "pnpf/model.hpp"

namespace pnpf {

/// Free-ion potential phi and correlated potential Phi, related by
/// -ell^2 Phi'' + Phi = phi (Phi == phi when ell == 0).
struct PotentialPair {
    CellField phi;
    CellField Phi;
};

/// Values at the Dirichlet endpoints; empty at Neumann endpoints.
struct EndpointValues {
    std::optional<double> left;
    std::optional<double> right;
};

/// (-Delta_h f)_j with the mesh boundary conditions: half-cell one-sided
/// differences against the Dirichlet values, zero flux at Neumann ends.
CellField neg_laplacian(const Mesh& mesh, const CellField& f, EndpointValues bc);

/// Tridiagonal matrix of mass * I + stiffness * (-Delta_h).
BandedMatrix elliptic_matrix(const Mesh& mesh, double mass, double stiffness);

/// -lambda^2 phi'' = rho with Dirichlet values at Dirichlet endpoints and zero
/// flux at Neumann endpoints.
CellField solve_poisson(const CellField& rho, EndpointValues bc, const Mesh& mesh, double lambda);

/// -ell^2 Phi'' + Phi = phi. Requires ell > 0.
CellField solve_helmholtz(const CellField& phi, EndpointValues bc, const Mesh& mesh, double ell);

/// Fourth-order Poisson-Fermi solve lambda^2 (ell^2 Delta - 1) Delta Phi = rho
/// through the two second-order stages. The split boundary conditions
/// (phi = Phi^D on Dirichlet ends, zero flux on Neumann ends) reproduce
/// Delta Phi = 0 and grad Delta Phi . nu = 0 of the fourth-order problem.
PotentialPair solve_split(const CellField& rho, EndpointValues bc, const SpeciesParams& params,
                          const Mesh& mesh);

/// rho = sum_j z_j u_j + f, then solve_split with Phi^D at the Dirichlet ends.
PotentialPair solve_poisson_fermi(std::span<const CellField> U, const CellField& f, const BoundaryData& bd,
                                  const SpeciesParams& params, const Mesh& mesh);

/// The Phi^D extension: the same solve with right-hand side f only.
PotentialPair solve_boundary_extension(const CellField& f, EndpointValues PhiD, const SpeciesParams& params,
                                       const Mesh& mesh);

struct DirichletSpec {
    std::vector<double> u;  ///< (u_0, ..., u_n), strictly inside the simplex, summing to 1
    double Phi = 0.0;
};

struct BoundarySpec {
    std::optional<DirichletSpec> left;
    std::optional<DirichletSpec> right;
};

/// Validates the endpoint data against the mesh, derives w^D, solves for the
/// Phi^D extension and builds the w^D / u^D cell fields. w^D is constant when
/// the endpoint values agree (thermal equilibrium) and linear in x otherwise.
BoundaryData make_boundary_data(const BoundarySpec& spec, CellField background, const SpeciesParams& params,
                                const Mesh& mesh);

/// Right-endpoint concentrations in thermal equilibrium with the left
/// endpoint, given the right potential value.
std::vector<double> equilibrium_partner(const DirichletSpec& left, double Phi_right, const SpeciesParams& params);

}  // namespace pnpf
