#include <cmath>
#include <random>

#include "doctest.h"
#include "pnpf/stepper.hpp"
#include "support.hpp"

using namespace pnpf;
using K = BoundaryKind;

namespace {

struct Problem {
    SpeciesParams p;
    Mesh mesh;
    BoundaryData bd;
};

Problem make_problem(int cells, double ell, K right = K::Dirichlet, std::vector<double> D = {1.0, 1.0},
                     double Phi_right = 0.0) {
    SpeciesParams p;
    p.D = std::move(D);
    p.z = {1.0, -1.0};
    p.lambda = 0.1;
    p.ell = ell;
    Mesh mesh(1.0, cells, K::Dirichlet, right);
    const DirichletSpec left{{0.4, 0.3, 0.3}, 0.0};
    BoundarySpec spec{left, std::nullopt};
    if (right == K::Dirichlet) spec.right = DirichletSpec{equilibrium_partner(left, Phi_right, p), Phi_right};
    auto bd = make_boundary_data(spec, mesh.cell_field(), p, mesh);
    return {std::move(p), std::move(mesh), std::move(bd)};
}

std::vector<CellField> step_profile(const Mesh& mesh) {
    std::vector<CellField> U(3, mesh.cell_field());
    for (int j = 0; j < mesh.n_cells(); ++j) {
        const bool lo = mesh.center(j) < 0.5;
        U[1][j] = lo ? 0.5 : 0.3;
        U[2][j] = lo ? 0.3 : 0.5;
        U[0][j] = 0.2;
    }
    return U;
}

double max_diff(const State& a, const State& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.U.size(); ++i)
        for (std::size_t j = 0; j < a.U[i].size(); ++j) m = std::max(m, std::abs(a.U[i][j] - b.U[i][j]));
    for (std::size_t j = 0; j < a.Phi.size(); ++j) m = std::max(m, std::abs(a.Phi[j] - b.Phi[j]));
    return m;
}

}  // namespace

TEST_CASE("StepperOptions validation names the field") {
    StepperOptions o;
    CHECK_NOTHROW(o.validate());
    o.eps = 0.0;
    CHECK_NOTHROW(o.validate());
    o.eps = -1.0;
    CHECK_THROWS_WITH_AS(o.validate(), doctest::Contains("stepping.eps"), std::invalid_argument);
    o = {};
    o.tau = 0.0;
    CHECK_THROWS_WITH_AS(o.validate(), doctest::Contains("stepping.tau"), std::invalid_argument);
}

TEST_CASE("residual vanishes at thermal equilibrium") {
    for (double ell : {0.0, 0.1}) {
        const auto pr = make_problem(40, ell, K::Dirichlet, {1.0, 2.0}, 0.7);
        const auto eq = solve_equilibrium(pr.bd, pr.p, pr.mesh);
        StepperOptions opts;
        ImplicitSystem sys(eq, pr.bd, pr.p, pr.mesh, opts, opts.tau);
        CHECK(norm_inf(sys.residual(sys.pack(eq))) <= 1e-12);
        CHECK(norm_inf(assemble_residual(sys.pack(eq), eq, pr.bd, pr.p, pr.mesh, opts)) <= 1e-12);
    }
}

TEST_CASE("regularization term on a two-cell mesh") {
    // The residual is affine in eps, so the eps-part is isolated exactly by
    // differencing. With v = c: h c in every cell plus the half-cell
    // gradient 2c/h against the Dirichlet end in cell 0.
    const auto pr = make_problem(2, 0.0, K::Neumann);
    const auto prev = initial_state(step_profile(pr.mesh), pr.bd, pr.p, pr.mesh, {});
    StepperOptions with, without;
    with.eps = 0.25;
    without.eps = 0.0;
    ImplicitSystem a(prev, pr.bd, pr.p, pr.mesh, with, 0.1), b(prev, pr.bd, pr.p, pr.mesh, without, 0.1);
    const double c = 0.3, h = pr.mesh.h();
    std::vector<double> x(a.size(), 0.0);
    for (int j = 0; j < 2; ++j) {
        for (int i = 0; i < 2; ++i) x[a.v_index(j, i)] = c;
        x[a.Phi_index(j)] = 0.1;
    }
    const auto ra = a.residual(x), rb = b.residual(x);
    for (int i = 0; i < 2; ++i) {
        CHECK(ra[a.v_index(0, i)] - rb[a.v_index(0, i)] == doctest::Approx(0.25 * (h * c + 2.0 * c / h)).epsilon(1e-13));
        CHECK(ra[a.v_index(1, i)] - rb[a.v_index(1, i)] == doctest::Approx(0.25 * h * c).epsilon(1e-13));
    }

    // Mass-difference term alone: no fluxes when w is constant and matches
    // the boundary, no charge, no eps.
    const auto pr2 = make_problem(2, 0.0, K::Neumann);
    std::vector<CellField> U0(3, pr2.mesh.cell_field());
    for (int i = 0; i < 3; ++i) U0[i] = pr2.bd.uD[i];
    U0[1][0] += 0.05;
    U0[0][0] -= 0.05;
    const auto prev2 = initial_state(U0, pr2.bd, pr2.p, pr2.mesh, {});
    ImplicitSystem s2(prev2, pr2.bd, pr2.p, pr2.mesh, without, 0.1);
    std::vector<double> x2(s2.size(), 0.0);
    for (int j = 0; j < 2; ++j) x2[s2.Phi_index(j)] = pr2.bd.PhiD[j];
    const auto r2 = s2.residual(x2);
    CHECK(r2[s2.v_index(0, 0)] == doctest::Approx(h * (-0.05) / 0.1).epsilon(1e-10));
    CHECK(std::abs(r2[s2.v_index(1, 0)]) <= 1e-14);
}

TEST_CASE("Jacobian matches finite differences") {
    std::mt19937_64 gen(13);
    struct Case {
        double ell;
        K right;
        bool react;
    };
    for (const Case c : {Case{0.0, K::Dirichlet, false}, Case{0.1, K::Dirichlet, false}, Case{0.1, K::Neumann, true},
                         Case{0.0, K::Neumann, true}}) {
        auto pr = make_problem(12, c.ell, c.right, {1.0, 2.5}, 0.3);
        if (c.react) pr.p.reaction = {ReactionKind::BinaryAnnihilation, 3.0, 1, 2};
        const auto prev = initial_state(step_profile(pr.mesh), pr.bd, pr.p, pr.mesh, {});
        StepperOptions opts;
        opts.eps = 1e-3;
        ImplicitSystem sys(prev, pr.bd, pr.p, pr.mesh, opts, 0.01);
        ResidualFn res = [&](std::span<const double> x) { return sys.residual(x); };
        JacobianFn jac = [&](std::span<const double> x) { return sys.jacobian(x); };
        for (int trial = 0; trial < 5; ++trial) {
            std::vector<double> x(sys.size());
            for (auto& v : x) v = testing::uniform(gen, -1.0, 1.0);
            CHECK(jacobian_fd_error(res, jac, x) <= 1e-6);
        }
    }
}

TEST_CASE("equilibrium is a fixed point of the stepper") {
    const auto pr = make_problem(50, 0.1, K::Dirichlet, {1.0, 2.0}, 0.5);
    const auto eq = solve_equilibrium(pr.bd, pr.p, pr.mesh);
    const auto traj = run(eq.U, pr.bd, pr.p, pr.mesh, {}, 0.02);
    CHECK(traj.states.size() == 21);
    for (const auto& s : traj.states) CHECK(max_diff(s, eq) <= 1e-10);
}

TEST_CASE("free energy decays with equal diffusivities") {
    const auto pr = make_problem(100, 0.1);
    StepperOptions opts;
    const auto traj = run(step_profile(pr.mesh), pr.bd, pr.p, pr.mesh, opts, 0.05);
    const double slack = 10.0 * opts.newton.abs_tol;
    for (std::size_t k = 0; k < traj.reports.size(); ++k) {
        const auto& r = traj.reports[k];
        CHECK(r.accepted);
        CHECK(r.residual_norm <= opts.newton.abs_tol);
        CHECK(r.energy_after <= r.energy_before + slack);
        CHECK(r.energy_after + r.tau_used * r.dissipation + r.tau_used * r.regularization <= r.energy_before + slack);
    }
    CHECK(traj.reports.back().energy_after < 0.5 * traj.reports.front().energy_before);
}

TEST_CASE("annihilation removes ions") {
    auto pr = make_problem(60, 0.0);
    auto U0 = step_profile(pr.mesh);
    for (int j = 0; j < 60; ++j) {
        const double x = pr.mesh.center(j);
        const double bump = 0.15 * std::exp(-std::pow((x - 0.5) / 0.1, 2));
        U0[1][j] = pr.bd.uD[1][j] + bump;
        U0[2][j] = pr.bd.uD[2][j] + bump;
        U0[0][j] = 1.0 - U0[1][j] - U0[2][j];
    }
    auto ion_mass = [&](const State& s) { return integrate(pr.mesh, s.U[1]) + integrate(pr.mesh, s.U[2]); };
    const auto inert = run(U0, pr.bd, pr.p, pr.mesh, {}, 0.02);
    pr.p.reaction = {ReactionKind::BinaryAnnihilation, 5.0, 1, 2};
    const auto react = run(U0, pr.bd, pr.p, pr.mesh, {}, 0.02);
    for (std::size_t k = 1; k < react.states.size(); ++k) {
        CHECK(ion_mass(react.states[k]) <= ion_mass(react.states[k - 1]));
        CHECK(ion_mass(react.states[k]) < ion_mass(inert.states[k]));
        CHECK(react.reports[k - 1].reaction_production <= 0.0);
    }
}

TEST_CASE("run edge cases") {
    const auto pr = make_problem(20, 0.1);
    const auto only = run(step_profile(pr.mesh), pr.bd, pr.p, pr.mesh, {}, 0.0);
    CHECK(only.states.size() == 1);
    CHECK(only.reports.empty());

    StepperOptions opts;
    opts.tau = 0.003;
    const auto traj = run(step_profile(pr.mesh), pr.bd, pr.p, pr.mesh, opts, 0.01);
    CHECK(traj.states.back().time == 0.01);
    CHECK(traj.reports.back().tau_used == doctest::Approx(0.001));

    auto U = step_profile(pr.mesh);
    U[1][3] = 0.0;
    U[0][3] = 0.7;
    const auto s = initial_state(U, pr.bd, pr.p, pr.mesh, {});
    CHECK(s.U[1][3] > 0.0);
    CHECK(s.U[1][3] <= 1e-11);
    U[1][3] = 0.1;
    CHECK_THROWS_AS(initial_state(U, pr.bd, pr.p, pr.mesh, {}), std::invalid_argument);
}

TEST_CASE("bounds hold on random admissible data") {
    std::mt19937_64 gen(31);
    for (int trial = 0; trial < 5; ++trial) {
        const auto pr = make_problem(30, trial % 2 ? 0.1 : 0.0, trial % 3 ? K::Dirichlet : K::Neumann, {0.5, 3.0});
        std::vector<CellField> U(3, pr.mesh.cell_field());
        for (int j = 0; j < 30; ++j) {
            const auto u = testing::random_simplex(gen, 2);
            for (int i = 0; i < 3; ++i) U[i][j] = u[i];
        }
        const auto traj = run(U, pr.bd, pr.p, pr.mesh, {}, 0.01);
        for (const auto& s : traj.states) CHECK_NOTHROW(validate_state(s, 1e-12));
    }
}

TEST_CASE("fixed-point coupling agrees with the coupled solve") {
    const auto pr = make_problem(40, 0.1, K::Dirichlet, {1.0, 2.0});
    StepperOptions coupled, split;
    coupled.newton.abs_tol = split.newton.abs_tol = 1e-13;
    split.coupling = Coupling::FixedPointDecoupled;
    const auto a = run(step_profile(pr.mesh), pr.bd, pr.p, pr.mesh, coupled, 0.005);
    const auto b = run(step_profile(pr.mesh), pr.bd, pr.p, pr.mesh, split, 0.005);
    REQUIRE(a.states.size() == b.states.size());
    CHECK(max_diff(a.states.back(), b.states.back()) <= 1e-8);
}

TEST_CASE("runs are bitwise deterministic") {
    const auto pr = make_problem(30, 0.1, K::Dirichlet, {1.0, 2.0});
    const auto a = run(step_profile(pr.mesh), pr.bd, pr.p, pr.mesh, {}, 0.01);
    const auto b = run(step_profile(pr.mesh), pr.bd, pr.p, pr.mesh, {}, 0.01);
    REQUIRE(a.states.size() == b.states.size());
    for (std::size_t k = 0; k < a.states.size(); ++k) {
        CHECK(a.states[k].U == b.states[k].U);
        CHECK(a.states[k].Phi == b.states[k].Phi);
    }
}

TEST_CASE("step halving and failure") {
    const auto pr = make_problem(30, 0.1, K::Dirichlet, {1.0, 2.0});
    const auto s0 = initial_state(step_profile(pr.mesh), pr.bd, pr.p, pr.mesh, {});

    StepperOptions hopeless;
    hopeless.newton.max_iter = 1;
    hopeless.max_step_halvings = 2;
    CHECK_THROWS_AS(step(s0, pr.bd, pr.p, pr.mesh, hopeless), StepFailure);

    StepperOptions big;
    big.tau = 0.016;
    big.newton.max_iter = 4;
    const auto r = step(s0, pr.bd, pr.p, pr.mesh, big);
    CHECK(r.report.accepted);
    CHECK(r.report.halvings > 0);
    CHECK(r.report.tau_used == doctest::Approx(0.016 / (1 << r.report.halvings)));
    CHECK(r.state.time == doctest::Approx(r.report.tau_used));
}

TEST_CASE("eps = 0 is admissible") {
    const auto pr = make_problem(30, 0.1);
    StepperOptions opts;
    opts.eps = 0.0;
    const auto traj = run(step_profile(pr.mesh), pr.bd, pr.p, pr.mesh, opts, 0.01);
    for (const auto& r : traj.reports) CHECK(r.regularization == 0.0);
    CHECK(traj.reports.back().energy_after < traj.reports.front().energy_before);
}

TEST_CASE("self-convergence under joint refinement") {
    auto solve = [](int cells, double tau) {
        const auto pr = make_problem(cells, 0.1);
        StepperOptions opts;
        opts.tau = tau;
        return run(step_profile(pr.mesh), pr.bd, pr.p, pr.mesh, opts, 0.1, {}, false).states.back();
    };
    auto coarsen = [](const CellField& f) {
        CellField c(f.size() / 2);
        for (std::size_t j = 0; j < c.size(); ++j) c[j] = 0.5 * (f[2 * j] + f[2 * j + 1]);
        return c;
    };
    auto l2 = [](const CellField& a, const CellField& b) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
        return std::sqrt(s / a.size());
    };
    const auto s50 = solve(50, 2e-3), s100 = solve(100, 1e-3), s200 = solve(200, 5e-4);
    const double e1 = l2(s50.U[1], coarsen(s100.U[1]));
    const double e2 = l2(coarsen(s100.U[1]), coarsen(coarsen(s200.U[1])));
    CHECK(std::log(e1 / e2) / std::log(2.0) >= 0.9);
}
