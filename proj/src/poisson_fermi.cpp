#include "pnpf/poisson_fermi.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pnpf {

namespace {

void check_bc(const Mesh& mesh, const EndpointValues& bc) {
    if (mesh.left_dirichlet() != bc.left.has_value() || mesh.right_dirichlet() != bc.right.has_value())
        throw std::invalid_argument("potential boundary values must be given exactly at Dirichlet endpoints");
}

CellField solve_elliptic(const Mesh& mesh, double mass, double stiffness, const CellField& rhs,
                         const EndpointValues& bc) {
    check_bc(mesh, bc);
    const int n = mesh.n_cells();
    if (static_cast<int>(rhs.size()) != n) throw std::invalid_argument("elliptic solve: size mismatch");
    const double h2 = mesh.h() * mesh.h();
    std::vector<double> b(rhs.begin(), rhs.end());
    if (bc.left) b[0] += stiffness * 2.0 * *bc.left / h2;
    if (bc.right) b[n - 1] += stiffness * 2.0 * *bc.right / h2;
    return CellField(solve_banded(elliptic_matrix(mesh, mass, stiffness), b));
}

}  // namespace

CellField neg_laplacian(const Mesh& mesh, const CellField& f, EndpointValues bc) {
    const auto d = cell_divergence(mesh, face_gradient(mesh, f, bc.left, bc.right));
    CellField out(d.size());
    for (std::size_t j = 0; j < d.size(); ++j) out[j] = -d[j];
    return out;
}

BandedMatrix elliptic_matrix(const Mesh& mesh, double mass, double stiffness) {
    const int n = mesh.n_cells();
    const double c = stiffness / (mesh.h() * mesh.h());
    BandedMatrix a(n, 1, 1);
    for (int j = 0; j < n; ++j) {
        a.at(j, j) = mass;
        if (j > 0) {
            a.at(j, j) += c;
            a.at(j, j - 1) = -c;
        }
        if (j < n - 1) {
            a.at(j, j) += c;
            a.at(j, j + 1) = -c;
        }
    }
    if (mesh.left_dirichlet()) a.at(0, 0) += 2.0 * c;
    if (mesh.right_dirichlet()) a.at(n - 1, n - 1) += 2.0 * c;
    return a;
}

CellField solve_poisson(const CellField& rho, EndpointValues bc, const Mesh& mesh, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("solve_poisson: lambda must be positive");
    return solve_elliptic(mesh, 0.0, lambda * lambda, rho, bc);
}

CellField solve_helmholtz(const CellField& phi, EndpointValues bc, const Mesh& mesh, double ell) {
    if (!(ell > 0.0)) throw std::invalid_argument("solve_helmholtz: ell must be positive (bypass the stage for ell = 0)");
    return solve_elliptic(mesh, 1.0, ell * ell, phi, bc);
}

PotentialPair solve_split(const CellField& rho, EndpointValues bc, const SpeciesParams& params, const Mesh& mesh) {
    PotentialPair p;
    p.phi = solve_poisson(rho, bc, mesh, params.lambda);
    p.Phi = params.ell > 0.0 ? solve_helmholtz(p.phi, bc, mesh, params.ell) : p.phi;
    return p;
}

PotentialPair solve_poisson_fermi(std::span<const CellField> U, const CellField& f, const BoundaryData& bd,
                                  const SpeciesParams& params, const Mesh& mesh) {
    const int n = params.n();
    if (static_cast<int>(U.size()) != n + 1) throw std::invalid_argument("solve_poisson_fermi: expected n+1 fields");
    CellField rho = f;
    for (int j = 0; j < mesh.n_cells(); ++j)
        for (int i = 0; i < n; ++i) rho[j] += params.z[i] * U[i + 1][j];
    return solve_split(rho, {bd.Phi_left(), bd.Phi_right()}, params, mesh);
}

PotentialPair solve_boundary_extension(const CellField& f, EndpointValues PhiD, const SpeciesParams& params,
                                       const Mesh& mesh) {
    return solve_split(f, PhiD, params, mesh);
}

std::vector<double> equilibrium_partner(const DirichletSpec& left, double Phi_right, const SpeciesParams& params) {
    const auto w = entropy_variables(left.u, left.Phi, params);
    return fermi_dirac(w, Phi_right, params);
}

namespace {

EndpointData make_endpoint(const DirichletSpec& spec, const SpeciesParams& params, const char* side) {
    const std::string field = std::string("boundary.") + side + ".u";
    const int n = params.n();
    if (static_cast<int>(spec.u.size()) != n + 1)
        throw std::invalid_argument(field + ": expected " + std::to_string(n + 1) + " values (u_0..u_n)");
    double sum = 0.0;
    for (double u : spec.u) {
        if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument(field + ": values must lie strictly in (0,1)");
        sum += u;
    }
    if (std::abs(sum - 1.0) > 1e-10) throw std::invalid_argument(field + ": values must sum to 1");
    if (!std::isfinite(spec.Phi)) throw std::invalid_argument(std::string("boundary.") + side + ".phi: not finite");
    EndpointData e;
    e.u = spec.u;
    for (double& u : e.u) u /= sum;
    e.Phi = spec.Phi;
    e.w = entropy_variables(e.u, e.Phi, params);
    return e;
}

}  // namespace

BoundaryData make_boundary_data(const BoundarySpec& spec, CellField background, const SpeciesParams& params,
                                const Mesh& mesh) {
    params.validate();
    if (mesh.left_dirichlet() != spec.left.has_value())
        throw std::invalid_argument("boundary.left: Dirichlet data must be given exactly at a Dirichlet endpoint");
    if (mesh.right_dirichlet() != spec.right.has_value())
        throw std::invalid_argument("boundary.right: Dirichlet data must be given exactly at a Dirichlet endpoint");
    if (static_cast<int>(background.size()) != mesh.n_cells())
        throw std::invalid_argument("boundary.f: background charge size mismatch");

    const int n = params.n();
    const int cells = mesh.n_cells();
    BoundaryData bd;
    if (spec.left) bd.left = make_endpoint(*spec.left, params, "left");
    if (spec.right) bd.right = make_endpoint(*spec.right, params, "right");
    bd.background = std::move(background);

    bd.equilibrium = true;
    if (bd.left && bd.right) {
        for (int i = 0; i < n; ++i) {
            const double a = bd.left->w[i], b = bd.right->w[i];
            if (std::abs(a - b) > 1e-12 * std::max(1.0, std::abs(a))) bd.equilibrium = false;
        }
        if (bd.equilibrium) bd.right->w = bd.left->w;
    }

    const auto ext = solve_boundary_extension(bd.background, {bd.Phi_left(), bd.Phi_right()}, params, mesh);
    bd.PhiD = ext.Phi;
    bd.phiD = ext.phi;

    bd.wD.assign(n, CellField(cells));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < cells; ++j) {
            if (bd.left && bd.right && !bd.equilibrium) {
                const double s = mesh.center(j) / mesh.length();
                bd.wD[i][j] = (1.0 - s) * bd.left->w[i] + s * bd.right->w[i];
            } else {
                bd.wD[i][j] = bd.left ? bd.left->w[i] : bd.right->w[i];
            }
        }

    bd.uD.assign(n + 1, CellField(cells));
    std::vector<double> w(n), u(n + 1);
    for (int j = 0; j < cells; ++j) {
        for (int i = 0; i < n; ++i) w[i] = bd.wD[i][j];
        fermi_dirac(w, bd.PhiD[j], params, u);
        for (int i = 0; i <= n; ++i) bd.uD[i][j] = u[i];
    }
    return bd;
}

}  // namespace pnpf
