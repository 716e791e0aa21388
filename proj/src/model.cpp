#include "pnpf/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace pnpf {

namespace {
constexpr double kExponentCap = 700.0;
}

double SpeciesParams::min_diffusivity() const { return *std::min_element(D.begin(), D.end()); }

void SpeciesParams::validate() const {
    if (D.empty()) throw std::invalid_argument("species.D: at least one species required");
    if (z.size() != D.size()) throw std::invalid_argument("species.z: expected " + std::to_string(D.size()) + " valences");
    for (double d : D)
        if (!(d > 0.0) || !std::isfinite(d)) throw std::invalid_argument("species.D: diffusivities must be positive");
    for (double v : z)
        if (!std::isfinite(v)) throw std::invalid_argument("species.z: valences must be finite");
    if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("species.lambda: must be positive");
    if (!(ell >= 0.0) || !std::isfinite(ell)) throw std::invalid_argument("species.ell: must be nonnegative");
    if (reaction.kind == ReactionKind::BinaryAnnihilation) {
        if (!(reaction.rate >= 0.0)) throw std::invalid_argument("species.reaction.k: must be nonnegative");
        const int n = this->n();
        if (reaction.first < 1 || reaction.first > n || reaction.second < 1 || reaction.second > n ||
            reaction.first == reaction.second)
            throw std::invalid_argument("species.reaction: i and j must be distinct species in 1..n");
    }
}

std::vector<double> State::cell_U(int j) const {
    std::vector<double> u(U.size());
    for (std::size_t i = 0; i < U.size(); ++i) u[i] = U[i][j];
    return u;
}

void fermi_dirac(std::span<const double> w, double Phi, const SpeciesParams& params, std::span<double> U) {
    const int n = params.n();
    double shift = 0.0;
    for (int i = 0; i < n; ++i) {
        const double a = std::clamp(w[i] - params.z[i] * Phi, -kExponentCap, kExponentCap);
        U[i + 1] = a;
        shift = std::max(shift, a);
    }
    double sum = std::exp(-shift);
    U[0] = sum;
    for (int i = 1; i <= n; ++i) {
        U[i] = std::exp(U[i] - shift);
        sum += U[i];
    }
    constexpr double floor = std::numeric_limits<double>::min();
    for (int i = 0; i <= n; ++i) U[i] = std::max(U[i] / sum, floor);
}

std::vector<double> fermi_dirac(std::span<const double> w, double Phi, const SpeciesParams& params) {
    std::vector<double> U(params.n() + 1);
    fermi_dirac(w, Phi, params, U);
    return U;
}

std::vector<double> entropy_variables(std::span<const double> U, double Phi, const SpeciesParams& params) {
    const int n = params.n();
    for (int i = 0; i <= n; ++i)
        if (!(U[i] > 0.0)) throw std::domain_error("entropy_variables: nonpositive concentration u_" + std::to_string(i));
    std::vector<double> w(n);
    const double log_u0 = std::log(U[0]);
    for (int i = 0; i < n; ++i) w[i] = std::log(U[i + 1]) - log_u0 + params.z[i] * Phi;
    return w;
}

FermiDiracSensitivity fermi_dirac_sensitivity(std::span<const double> U, const SpeciesParams& params) {
    const int n = params.n();
    FermiDiracSensitivity s;
    s.n = n;
    s.dU_dw.assign(static_cast<std::size_t>(n + 1) * n, 0.0);
    s.dU_dPhi.assign(n + 1, 0.0);
    for (int k = 0; k < n; ++k) {
        s.dU_dw[static_cast<std::size_t>(0) * n + k] = -U[0] * U[k + 1];
        for (int m = 1; m <= n; ++m)
            s.dU_dw[static_cast<std::size_t>(m) * n + k] = U[m] * ((m == k + 1 ? 1.0 : 0.0) - U[k + 1]);
    }
    for (int m = 0; m <= n; ++m) {
        double d = 0.0;
        for (int k = 0; k < n; ++k) d -= params.z[k] * s.dw(m, k);
        s.dU_dPhi[m] = d;
    }
    return s;
}

std::vector<double> mobility_B(std::span<const double> U, const SpeciesParams& params) {
    std::vector<double> b(params.n());
    for (int i = 0; i < params.n(); ++i) b[i] = params.D[i] * U[i + 1];
    return b;
}

std::vector<double> reaction_rates(std::span<const double> U, const SpeciesParams& params) {
    std::vector<double> r(params.n(), 0.0);
    const auto& rm = params.reaction;
    if (rm.kind == ReactionKind::BinaryAnnihilation) {
        const double rate = -rm.rate * U[rm.first] * U[rm.second];
        r[rm.first - 1] = rate;
        r[rm.second - 1] = rate;
    }
    return r;
}

std::vector<double> reaction_jacobian(std::span<const double> U, const SpeciesParams& params) {
    const int n = params.n();
    std::vector<double> jac(static_cast<std::size_t>(n) * (n + 1), 0.0);
    const auto& rm = params.reaction;
    if (rm.kind == ReactionKind::BinaryAnnihilation) {
        for (int row : {rm.first, rm.second}) {
            jac[static_cast<std::size_t>(row - 1) * (n + 1) + rm.first] += -rm.rate * U[rm.second];
            jac[static_cast<std::size_t>(row - 1) * (n + 1) + rm.second] += -rm.rate * U[rm.first];
        }
    }
    return jac;
}

double entropy_density(std::span<const double> U, std::span<const double> uD) {
    double s = 0.0;
    for (std::size_t i = 0; i < U.size(); ++i) s += U[i] * std::log(U[i] / uD[i]) - U[i] + uD[i];
    return s;
}

State make_state(std::vector<CellField> U, CellField Phi, CellField phi, double time,
                 const SpeciesParams& params) {
    const int n = params.n();
    const int cells = static_cast<int>(Phi.size());
    State s;
    s.U = std::move(U);
    s.Phi = std::move(Phi);
    s.phi = std::move(phi);
    s.time = time;
    s.w.assign(n, CellField(cells));
    std::vector<double> u(n + 1);
    for (int j = 0; j < cells; ++j) {
        for (int i = 0; i <= n; ++i) u[i] = s.U[i][j];
        const auto w = entropy_variables(u, s.Phi[j], params);
        for (int i = 0; i < n; ++i) s.w[i][j] = w[i];
    }
    return s;
}

void validate_state(const State& state, double sum_tol) {
    const std::size_t cells = state.Phi.size();
    for (std::size_t j = 0; j < cells; ++j) {
        double sum = 0.0;
        for (std::size_t i = 0; i < state.U.size(); ++i) {
            const double u = state.U[i][j];
            if (!(u > 0.0 && u < 1.0))
                throw std::domain_error("state: u_" + std::to_string(i) + " outside (0,1) in cell " + std::to_string(j));
            sum += u;
        }
        if (!(std::abs(sum - 1.0) <= sum_tol))
            throw std::domain_error("state: saturation violated in cell " + std::to_string(j));
    }
}

FaceField face_mean(const Mesh& mesh, const CellField& f, std::optional<double> left_value,
                    std::optional<double> right_value) {
    const int n = mesh.n_cells();
    FaceField m(n + 1);
    for (int k = 1; k < n; ++k) m[k] = 0.5 * (f[k - 1] + f[k]);
    m[0] = left_value ? 0.5 * (*left_value + f[0]) : f[0];
    m[n] = right_value ? 0.5 * (f[n - 1] + *right_value) : f[n - 1];
    return m;
}

double free_energy(const State& state, const BoundaryData& bd, const SpeciesParams& params, const Mesh& mesh) {
    const int n = params.n();
    const int cells = mesh.n_cells();
    std::vector<double> u(n + 1), ud(n + 1);
    double mixing = 0.0;
    for (int j = 0; j < cells; ++j) {
        for (int i = 0; i <= n; ++i) {
            u[i] = state.U[i][j];
            ud[i] = bd.uD[i][j];
            if (!(u[i] > 0.0)) throw std::domain_error("free_energy: nonpositive concentration");
        }
        mixing += entropy_density(u, ud);
    }
    mixing *= mesh.h();

    CellField dPhi(cells);
    for (int j = 0; j < cells; ++j) dPhi[j] = state.Phi[j] - bd.PhiD[j];
    const auto zero_l = mesh.left_dirichlet() ? std::optional<double>(0.0) : std::nullopt;
    const auto zero_r = mesh.right_dirichlet() ? std::optional<double>(0.0) : std::nullopt;
    const double lam2 = params.lambda * params.lambda;
    const double field = 0.5 * lam2 * weighted_face_square(mesh, face_gradient(mesh, dPhi, zero_l, zero_r));

    double correlation = 0.0;
    if (params.ell > 0.0) {
        // Laplacian of (Phi - Phi^D) recovered from the split: (Phi - phi) / ell^2.
        const double ell2 = params.ell * params.ell;
        double s = 0.0;
        for (int j = 0; j < cells; ++j) {
            const double lap = ((state.Phi[j] - state.phi[j]) - (bd.PhiD[j] - bd.phiD[j])) / ell2;
            s += lap * lap;
        }
        correlation = 0.5 * lam2 * ell2 * mesh.h() * s;
    }
    return mixing + field + correlation;
}

std::vector<FaceField> face_flux(const State& state, const BoundaryData& bd, const SpeciesParams& params,
                                 const Mesh& mesh) {
    const int n = params.n();
    std::vector<FaceField> J;
    J.reserve(n);
    for (int i = 0; i < n; ++i) {
        const auto grad = face_gradient(mesh, state.w[i], bd.w_left(i), bd.w_right(i));
        const auto mean = face_mean(mesh, state.U[i + 1], bd.u_left(i + 1), bd.u_right(i + 1));
        FaceField flux(mesh.n_faces());
        for (int k = 0; k < mesh.n_faces(); ++k) flux[k] = -params.D[i] * mean[k] * grad[k];
        if (!mesh.left_dirichlet()) flux[0] = 0.0;
        if (!mesh.right_dirichlet()) flux[mesh.n_cells()] = 0.0;
        J.push_back(std::move(flux));
    }
    return J;
}

double dissipation(const State& state, const BoundaryData& bd, const SpeciesParams& params, const Mesh& mesh) {
    double total = 0.0;
    for (int i = 0; i < params.n(); ++i) {
        const auto grad = face_gradient(mesh, state.w[i], bd.w_left(i), bd.w_right(i));
        const auto mean = face_mean(mesh, state.U[i + 1], bd.u_left(i + 1), bd.u_right(i + 1));
        double s = 0.0;
        for (int k = 0; k < mesh.n_faces(); ++k) s += mesh.face_weight(k) * mean[k] * grad[k] * grad[k];
        total += params.D[i] * s;
    }
    return total;
}

double reaction_entropy_production(const State& state, const BoundaryData& bd, const SpeciesParams& params,
                                   const Mesh& mesh) {
    if (params.reaction.kind == ReactionKind::None) return 0.0;
    double s = 0.0;
    for (int j = 0; j < mesh.n_cells(); ++j) {
        const auto r = reaction_rates(state.cell_U(j), params);
        for (int i = 0; i < params.n(); ++i) s += r[i] * (state.w[i][j] - bd.wD[i][j]);
    }
    return mesh.h() * s;
}

}  // namespace pnpf
