#pragma once

#include <optional>
#include <span>
#include <vector>

#include "pnpf/mesh.hpp"

namespace pnpf {

enum class ReactionKind { None, BinaryAnnihilation };

/// r_a = r_b = -k u_a u_b for the two ion species a != b (1-based), all other
/// species unreactive.
struct ReactionModel {
    ReactionKind kind = ReactionKind::None;
    double rate = 0.0;
    int first = 1;
    int second = 2;
};

struct SpeciesParams {
    std::vector<double> D;  ///< diffusivities D_1..D_n
    std::vector<double> z;  ///< valences z_1..z_n (real-valued)
    double lambda = 1.0;    ///< scaled Debye length
    double ell = 0.0;       ///< correlation length; 0 gives classical Poisson
    ReactionModel reaction;

    int n() const { return static_cast<int>(D.size()); }
    double min_diffusivity() const;
    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

/// Saturated mixture at one time level. U[0] is the solvent, U[1..n] the
/// ions; w holds the entropy variables, Phi the correlated potential and phi
/// its free-ion split companion (phi == Phi when ell == 0).
struct State {
    std::vector<CellField> U;
    std::vector<CellField> w;
    CellField Phi;
    CellField phi;
    double time = 0.0;

    int n() const { return static_cast<int>(w.size()); }
    std::vector<double> cell_U(int j) const;
};

/// Dirichlet data prescribed at one endpoint: U = (u_0, ..., u_n) and Phi.
struct EndpointData {
    std::vector<double> u;
    double Phi = 0.0;
    std::vector<double> w;  ///< log(u_i/u_0) + z_i Phi
};

struct BoundaryData {
    std::optional<EndpointData> left;   ///< present iff the left end is Dirichlet
    std::optional<EndpointData> right;  ///< present iff the right end is Dirichlet
    CellField background;               ///< fixed background charge f
    CellField PhiD;                     ///< extension solving the fourth-order boundary problem
    CellField phiD;                     ///< its split companion
    std::vector<CellField> wD;          ///< n cell fields of boundary entropy variables
    std::vector<CellField> uD;          ///< n+1 fields, fermi_dirac(wD, PhiD)
    bool equilibrium = false;           ///< all wD_i spatially constant

    std::optional<double> Phi_left() const { return left ? std::optional<double>(left->Phi) : std::nullopt; }
    std::optional<double> Phi_right() const { return right ? std::optional<double>(right->Phi) : std::nullopt; }
    std::optional<double> u_left(int i) const { return left ? std::optional<double>(left->u[i]) : std::nullopt; }
    std::optional<double> u_right(int i) const { return right ? std::optional<double>(right->u[i]) : std::nullopt; }
    std::optional<double> w_left(int i) const { return left ? std::optional<double>(left->w[i]) : std::nullopt; }
    std::optional<double> w_right(int i) const { return right ? std::optional<double>(right->w[i]) : std::nullopt; }
};

/// Fermi-Dirac map (w, Phi) -> (u_0, ..., u_n), evaluated in log-sum-exp
/// form. Exponents w_i - z_i Phi are capped at +-700 and each component is
/// floored at the smallest normal double, so the result is strictly positive.
void fermi_dirac(std::span<const double> w, double Phi, const SpeciesParams& params,
                 std::span<double> U);
std::vector<double> fermi_dirac(std::span<const double> w, double Phi, const SpeciesParams& params);

/// w_i = log(u_i / u_0) + z_i Phi. Throws on nonpositive concentrations.
std::vector<double> entropy_variables(std::span<const double> U, double Phi, const SpeciesParams& params);

/// Derivatives of the Fermi-Dirac map at a point, given its value U:
/// du_m/dw_k = u_m (delta_mk - u_k) for m >= 1, du_0/dw_k = -u_0 u_k, and
/// dU/dPhi = -sum_k z_k dU/dw_k.
struct FermiDiracSensitivity {
    int n = 0;
    std::vector<double> dU_dw;    ///< (n+1) x n, row-major
    std::vector<double> dU_dPhi;  ///< n+1
    double dw(int m, int k) const { return dU_dw[static_cast<std::size_t>(m) * n + k]; }
};
FermiDiracSensitivity fermi_dirac_sensitivity(std::span<const double> U, const SpeciesParams& params);

/// Diagonal of B, B_ii = D_i u_i.
std::vector<double> mobility_B(std::span<const double> U, const SpeciesParams& params);

/// Rates r_1..r_n.
std::vector<double> reaction_rates(std::span<const double> U, const SpeciesParams& params);
/// dr_i/du_m, n x (n+1) row-major.
std::vector<double> reaction_jacobian(std::span<const double> U, const SpeciesParams& params);

/// Pointwise mixing entropy sum_{i=0}^n [u_i log(u_i/uD_i) - u_i + uD_i].
double entropy_density(std::span<const double> U, std::span<const double> uD);

/// Builds a State from concentrations and an already solved potential pair.
State make_state(std::vector<CellField> U, CellField Phi, CellField phi, double time,
                 const SpeciesParams& params);

/// Throws std::domain_error if a concentration leaves (0, 1) or the cell sums
/// deviate from 1 by more than sum_tol.
void validate_state(const State& state, double sum_tol = 1e-12);

double free_energy(const State& state, const BoundaryData& bd, const SpeciesParams& params,
                   const Mesh& mesh);

/// J_i = -D_i u_face (grad w_i) on every face; Neumann faces carry 0.
std::vector<FaceField> face_flux(const State& state, const BoundaryData& bd, const SpeciesParams& params,
                                 const Mesh& mesh);

/// Discrete sum_i D_i int u_i |grad w_i|^2 over the non-Neumann faces.
double dissipation(const State& state, const BoundaryData& bd, const SpeciesParams& params,
                   const Mesh& mesh);

/// int sum_i r_i(u) (w_i - w_i^D) dx, the reaction contribution to the
/// free energy balance.
double reaction_entropy_production(const State& state, const BoundaryData& bd,
                                   const SpeciesParams& params, const Mesh& mesh);

/// Face means: arithmetic average of neighbours, of endpoint and first cell on
/// Dirichlet faces, and the adjacent cell value on Neumann faces.
FaceField face_mean(const Mesh& mesh, const CellField& f, std::optional<double> left_value,
                    std::optional<double> right_value);

}  // namespace pnpf
