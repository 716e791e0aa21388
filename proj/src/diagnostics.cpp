#include "pnpf/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace pnpf {

namespace {

ExtendedMatrices build(std::span<const double> U, const std::vector<double>& D, const std::vector<double>& z) {
    const int n = static_cast<int>(D.size());
    ExtendedMatrices m{Eigen::MatrixXd::Zero(n + 1, n + 1), Eigen::MatrixXd::Zero(n + 1, n + 1)};
    for (int i = 1; i <= n; ++i) {
        const double a = D[i - 1] * U[i];
        m.A(0, 0) += a;
        m.A(0, i) = -a;
        m.A(i, 0) = -a;
        m.A(i, i) = a;
        m.Q(i, i) = z[i - 1] * a;
        m.Q(0, 0) -= z[i - 1] * a;
    }
    return m;
}

Eigen::MatrixXd scale(const Eigen::MatrixXd& A, std::span<const double> U) {
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(A.rows(), A.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j) {
            const double p = U[i] * U[j];
            if (p > 0.0) G(i, j) = A(i, j) / std::sqrt(p);
        }
    return G;
}

double sqrt_u_dot(const Eigen::VectorXd& Y, std::span<const double> U) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < Y.size(); ++i) s += std::sqrt(U[i]) * Y(i);
    return s;
}

std::optional<double> zero_if_dirichlet(bool dirichlet) {
    return dirichlet ? std::optional<double>(0.0) : std::nullopt;
}

}  // namespace

ExtendedMatrices extended_matrices(std::span<const double> U, const SpeciesParams& params) {
    return build(U, params.D, params.z);
}

Eigen::MatrixXd scaled_matrix_G(std::span<const double> U, const SpeciesParams& params) {
    return scale(extended_matrices(U, params).A, U);
}

Eigen::MatrixXd comparison_matrix_G_star(std::span<const double> U, const SpeciesParams& params) {
    const std::vector<double> D(params.D.size(), params.min_diffusivity());
    return scale(build(U, D, params.z).A, U);
}

Eigen::VectorXd project_L(const Eigen::VectorXd& Y, std::span<const double> U) {
    return Y - project_Lperp(Y, U);
}

Eigen::VectorXd project_Lperp(const Eigen::VectorXd& Y, std::span<const double> U) {
    const double s = sqrt_u_dot(Y, U);
    Eigen::VectorXd out(Y.size());
    for (Eigen::Index i = 0; i < Y.size(); ++i) out(i) = std::sqrt(U[i]) * s;
    return out;
}

SubspaceCheck check_subspace_pd(std::span<const double> U, const SpeciesParams& params, const Eigen::VectorXd& Y) {
    if (!(U[0] > 0.0)) throw std::domain_error("check_subspace_pd: u_0 must be positive");
    const Eigen::VectorXd P = project_L(Y, U);
    const Eigen::MatrixXd G = scaled_matrix_G(U, params);
    SubspaceCheck c;
    c.lhs = P.dot(G * P);
    double weighted = P(0) * P(0) / U[0];
    for (Eigen::Index i = 1; i < P.size(); ++i) weighted += P(i) * P(i);
    c.rhs = params.min_diffusivity() * weighted;
    c.holds = c.lhs >= c.rhs - 1e-12 * std::max(1.0, c.lhs);
    return c;
}

RelativeEntropyBreakdown relative_entropy(const State& state, const State& ref, const SpeciesParams& params,
                                          const Mesh& mesh) {
    const int cells = mesh.n_cells();
    RelativeEntropyBreakdown out;
    double h1 = 0.0;
    for (std::size_t i = 0; i < ref.U.size(); ++i)
        for (int j = 0; j < cells; ++j) {
            const double ub = ref.U[i][j];
            const double u = state.U[i][j];
            if (!(ub > 0.0)) throw std::domain_error("relative_entropy: reference touches the simplex boundary");
            h1 += (u > 0.0 ? u * std::log(u / ub) : 0.0) - (u - ub);
        }
    out.h1 = h1 * mesh.h();

    CellField d(cells);
    for (int j = 0; j < cells; ++j) d[j] = state.Phi[j] - ref.Phi[j];
    const double lam2 = params.lambda * params.lambda;
    double h2 = 0.5 * lam2 *
                weighted_face_square(mesh, face_gradient(mesh, d, zero_if_dirichlet(mesh.left_dirichlet()),
                                                         zero_if_dirichlet(mesh.right_dirichlet())));
    if (params.ell > 0.0) {
        const double ell2 = params.ell * params.ell;
        double s = 0.0;
        for (int j = 0; j < cells; ++j) {
            const double lap = ((state.Phi[j] - state.phi[j]) - (ref.Phi[j] - ref.phi[j])) / ell2;
            s += lap * lap;
        }
        h2 += 0.5 * lam2 * ell2 * mesh.h() * s;
    }
    out.h2 = h2;
    out.total = out.h1 + out.h2;
    return out;
}

namespace {

double boundary_forcing(const State& s, const BoundaryData& bd, const SpeciesParams& params, const Mesh& mesh) {
    double total = 0.0;
    for (int i = 0; i < params.n(); ++i) {
        const auto g = face_gradient(mesh, bd.wD[i], bd.w_left(i), bd.w_right(i));
        const auto m = face_mean(mesh, s.U[i + 1], bd.u_left(i + 1), bd.u_right(i + 1));
        double acc = 0.0;
        for (int f = 0; f < mesh.n_faces(); ++f) acc += mesh.face_weight(f) * m[f] * g[f] * g[f];
        total += params.D[i] * acc;
    }
    return total;
}

}  // namespace

EnergyInequalityReport energy_inequality_check(const Trajectory& trajectory, const BoundaryData& bd,
                                               const SpeciesParams& params, const Mesh& mesh, double slack) {
    EnergyInequalityReport rep;
    const auto& states = trajectory.states;
    if (states.empty()) return rep;
    double H_prev = free_energy(states[0], bd, params, mesh);
    rep.max_excess = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < states.size(); ++k) {
        const State& s = states[k];
        const double tau = s.time - states[k - 1].time;
        const double H = free_energy(s, bd, params, mesh);
        const double diss = dissipation(s, bd, params, mesh);
        const double R = reaction_entropy_production(s, bd, params, mesh);
        EnergyStepCheck c;
        c.step = static_cast<int>(k);
        if (bd.equilibrium) {
            c.lhs = H - H_prev + tau * diss;
            c.rhs = tau * R;
        } else {
            c.lhs = H - H_prev + 0.5 * tau * diss;
            c.rhs = 0.5 * tau * boundary_forcing(s, bd, params, mesh) + tau * R;
        }
        c.violated = !(c.lhs <= c.rhs + slack);
        if (c.violated) ++rep.violations;
        rep.max_excess = std::max(rep.max_excess, c.lhs - c.rhs);
        rep.steps.push_back(c);
        H_prev = H;
    }
    if (rep.steps.empty()) rep.max_excess = 0.0;
    return rep;
}

DissipationBound dissipation_lower_bound(const State& state, const BoundaryData& bd, const SpeciesParams& params,
                                         const Mesh& mesh) {
    const int n = params.n();
    const int cells = mesh.n_cells();
    DissipationBound b;
    b.lhs = dissipation(state, bd, params, mesh);

    auto gradient_square = [&](auto transform, int i) {
        CellField f(cells);
        for (int j = 0; j < cells; ++j) f[j] = transform(state.U[i][j]);
        const auto l = bd.u_left(i), r = bd.u_right(i);
        const auto g = face_gradient(mesh, f, l ? std::optional<double>(transform(*l)) : std::nullopt,
                                     r ? std::optional<double>(transform(*r)) : std::nullopt);
        return weighted_face_square(mesh, g);
    };
    const auto sq = [](double u) { return std::sqrt(u); };
    const auto lg = [](double u) { return std::log(u); };
    const auto id = [](double u) { return u; };
    double entropy_part = 0.0;
    for (int i = 1; i <= n; ++i) entropy_part += gradient_square(sq, i);
    entropy_part += gradient_square(lg, 0) + gradient_square(id, 0);

    double coupling = 0.0;
    for (int i = 0; i < n; ++i) coupling += params.D[i] * params.z[i] * params.z[i];
    const double field = weighted_face_square(mesh, face_gradient(mesh, state.Phi, bd.Phi_left(), bd.Phi_right()));
    b.rhs = 0.5 * params.min_diffusivity() * entropy_part - coupling * field;
    return b;
}

}  // namespace pnpf
