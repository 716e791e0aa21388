#include "pnpf/app/manufactured.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pnpf::app {

double observed_order(double e_coarse, double e_fine, double ratio) {
    return std::log(e_coarse / e_fine) / std::log(ratio);
}

void attach_orders(std::vector<ConvergenceRow>& rows, bool refine_in_time) {
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const auto& prev = rows[k - 1];
        auto& cur = rows[k];
        if (prev.study != cur.study) continue;
        const double ratio =
            refine_in_time && cur.study.rfind("time", 0) == 0 ? prev.tau / cur.tau
                                                              : static_cast<double>(cur.cells) / prev.cells;
        cur.order = observed_order(prev.error, cur.error, ratio);
    }
}

namespace {

double l2_error(const Mesh& mesh, const CellField& f, auto exact) {
    CellField e(f.size());
    for (int j = 0; j < mesh.n_cells(); ++j) e[j] = f[j] - exact(mesh.center(j));
    return l2_norm(mesh, e);
}

}  // namespace

std::vector<ConvergenceRow> elliptic_study(const SpeciesParams& params, double length, const std::vector<int>& grids) {
    const double pi = std::numbers::pi;
    const double lam2 = params.lambda * params.lambda;
    const double ell = params.ell > 0.0 ? params.ell : 0.1;
    SpeciesParams split = params;
    split.ell = ell;
    std::vector<ConvergenceRow> rows;

    for (int cells : grids) {
        const Mesh mesh(length, cells, BoundaryKind::Dirichlet, BoundaryKind::Neumann);
        const double k = pi / length;
        const auto rho = mesh.sample([&](double x) { return lam2 * k * k * std::cos(k * x); });
        const auto phi = solve_poisson(rho, {1.0, std::nullopt}, mesh, params.lambda);
        rows.push_back({"poisson", cells, 0.0, l2_error(mesh, phi, [&](double x) { return std::cos(k * x); }), {}});
    }
    for (int cells : grids) {
        const Mesh mesh(length, cells, BoundaryKind::Dirichlet, BoundaryKind::Neumann);
        const double k = pi / length;
        const double g = 1.0 + ell * ell * k * k;
        const auto phi = mesh.sample([&](double x) { return g * std::cos(k * x); });
        const auto Phi = solve_helmholtz(phi, {1.0, std::nullopt}, mesh, ell);
        rows.push_back({"helmholtz", cells, 0.0, l2_error(mesh, Phi, [&](double x) { return std::cos(k * x); }), {}});
    }
    for (int cells : grids) {
        const Mesh mesh(length, cells, BoundaryKind::Dirichlet, BoundaryKind::Neumann);
        const double k = pi / (2.0 * length);
        const double g = 1.0 + ell * ell * k * k;
        const auto rho = mesh.sample([&](double x) { return lam2 * k * k * g * std::sin(k * x); });
        const auto pair = solve_split(rho, {0.0, std::nullopt}, split, mesh);
        rows.push_back({"composed", cells, 0.0, l2_error(mesh, pair.Phi, [&](double x) { return std::sin(k * x); }), {}});
    }
    attach_orders(rows, false);
    return rows;
}

ParabolicSolution::ParabolicSolution(SpeciesParams params, double length, std::vector<double> a, std::vector<double> b,
                                     double c)
    : params_(std::move(params)),
      length_(length),
      k_(std::numbers::pi / length),
      a_(std::move(a)),
      b_(std::move(b)),
      c_(c) {
    params_.validate();
    if (static_cast<int>(a_.size()) != params_.n() || static_cast<int>(b_.size()) != params_.n())
        throw std::invalid_argument("manufactured solution: a and b need n entries");
}

double ParabolicSolution::u(int i, double x, double t) const {
    const double s = std::exp(-t) * std::sin(k_ * x);
    if (i > 0) return a_[i - 1] + b_[i - 1] * s;
    double u0 = 1.0;
    for (int m = 0; m < params_.n(); ++m) u0 -= a_[m] + b_[m] * s;
    return u0;
}

double ParabolicSolution::Phi(double x, double t) const { return c_ * std::exp(-t) * std::sin(k_ * x); }

double ParabolicSolution::phi(double x, double t) const {
    return (1.0 + params_.ell * params_.ell * k_ * k_) * Phi(x, t);
}

double ParabolicSolution::mass_source(int species, double x, double t) const {
    const int i = species - 1;
    const double e = std::exp(-t);
    const double s = std::sin(k_ * x), co = std::cos(k_ * x);
    const double ui = a_[i] + b_[i] * e * s;
    const double ui1 = b_[i] * e * k_ * co;
    const double ui2 = -b_[i] * e * k_ * k_ * s;
    double bsum = 0.0;
    for (double b : b_) bsum += b;
    const double u0 = u(0, x, t);
    const double u01 = -bsum * e * k_ * co;
    const double u02 = bsum * e * k_ * k_ * s;
    const double P1 = c_ * e * k_ * co;
    const double P2 = -c_ * e * k_ * k_ * s;
    const double z = params_.z[i];
    const double dJ = -params_.D[i] * (ui2 - (ui1 * u01 + ui * u02) / u0 + ui * u01 * u01 / (u0 * u0) +
                                       z * (ui1 * P1 + ui * P2));
    const double dt = -b_[i] * e * s;
    std::vector<double> U(params_.n() + 1);
    for (int m = 0; m <= params_.n(); ++m) U[m] = u(m, x, t);
    return dt + dJ - reaction_rates(U, params_)[i];
}

double ParabolicSolution::charge_source(double x, double t) const {
    const double lam2 = params_.lambda * params_.lambda;
    const double ell2 = params_.ell * params_.ell;
    const double k2 = k_ * k_;
    // rho = lambda^2 (ell^2 Phi'''' - Phi'')
    double rho = lam2 * (ell2 * k2 * k2 + k2) * Phi(x, t);
    for (int i = 1; i <= params_.n(); ++i) rho -= params_.z[i - 1] * u(i, x, t);
    return rho;
}

BoundarySpec ParabolicSolution::boundary() const {
    std::vector<double> ub(params_.n() + 1);
    for (int i = 0; i <= params_.n(); ++i) ub[i] = u(i, 0.0, 0.0);
    return {DirichletSpec{ub, 0.0}, DirichletSpec{ub, 0.0}};
}

SourceTerms ParabolicSolution::sources() const {
    return {[this](int i, double x, double t) { return mass_source(i, x, t); },
            [this](double x, double t) { return charge_source(x, t); }};
}

ParabolicError parabolic_error(const ParabolicSolution& sol, int cells, double tau, double t_end,
                               const StepperOptions& base) {
    const auto& params = sol.params();
    const int n = params.n();
    const Mesh mesh(sol.length(), cells, BoundaryKind::Dirichlet, BoundaryKind::Dirichlet);
    const auto bd = make_boundary_data(sol.boundary(), mesh.cell_field(), params, mesh);
    std::vector<CellField> U0(n + 1);
    for (int i = 0; i <= n; ++i) U0[i] = mesh.sample([&](double x) { return sol.u(i, x, 0.0); });
    StepperOptions opts = base;
    opts.tau = tau;
    opts.sources = sol.sources();
    const auto traj = run(U0, bd, params, mesh, opts, t_end, {}, false);
    const State& last = traj.states.back();
    ParabolicError err;
    for (int i = 1; i <= n; ++i) {
        const double e = l2_error(mesh, last.U[i], [&](double x) { return sol.u(i, x, last.time); });
        err.u += e * e;
    }
    err.u = std::sqrt(err.u);
    err.Phi = l2_error(mesh, last.Phi, [&](double x) { return sol.Phi(x, last.time); });
    return err;
}

constexpr int kTemporalCells = 1000;

std::vector<ConvergenceRow> parabolic_study(const RunConfig& config) {
    const ParabolicSolution sol(config.species, config.length, config.mms.a, config.mms.b, config.mms.c);
    const double T = config.mms.t_end;
    std::vector<ConvergenceRow> u_rows, phi_rows;
    for (int cells : {50, 100, 200}) {
        const double r = 50.0 / cells;
        const double tau = T / std::ceil(T / (config.stepping.tau * r * r) - 1e-9);
        const auto e = parabolic_error(sol, cells, tau, T, config.stepping);
        u_rows.push_back({"space-u", cells, tau, e.u, {}});
        phi_rows.push_back({"space-Phi", cells, tau, e.Phi, {}});
    }
    for (int steps : {5, 10, 20}) {
        const double tau = T / steps;
        const auto e = parabolic_error(sol, kTemporalCells, tau, T, config.stepping);
        u_rows.push_back({"time-u", kTemporalCells, tau, e.u, {}});
        phi_rows.push_back({"time-Phi", kTemporalCells, tau, e.Phi, {}});
    }
    std::vector<ConvergenceRow> rows;
    for (int k = 0; k < 3; ++k) rows.push_back(u_rows[k]);
    for (int k = 0; k < 3; ++k) rows.push_back(phi_rows[k]);
    for (int k = 3; k < 6; ++k) rows.push_back(u_rows[k]);
    for (int k = 3; k < 6; ++k) rows.push_back(phi_rows[k]);
    attach_orders(rows, true);
    return rows;
}

std::vector<ConvergenceRow> equilibrium_study(const RunConfig& config) {
    const ParabolicSolution sol(config.species, config.length, config.mms.a,
                                std::vector<double>(config.species.n(), 0.0), 0.0);
    const auto e = parabolic_error(sol, config.cells, config.stepping.tau, config.mms.t_end, config.stepping);
    return {{"equilibrium-u", config.cells, config.stepping.tau, e.u, {}},
            {"equilibrium-Phi", config.cells, config.stepping.tau, e.Phi, {}}};
}

}  // namespace pnpf::app
