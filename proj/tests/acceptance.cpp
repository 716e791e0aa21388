#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "pnpf/app/config.hpp"
#include "pnpf/app/experiments.hpp"
#include "pnpf/app/manufactured.hpp"
#include "pnpf/diagnostics.hpp"
#include "support.hpp"

using namespace pnpf;
using namespace pnpf::app;
using pnpf::testing::random_simplex;
using pnpf::testing::uniform;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

RunConfig config(const char* name) { return load_config(std::string(PNPF_CONFIG_DIR) + "/" + name); }

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct DecayRun {
    RunConfig cfg;
    Mesh mesh;
    BoundaryData bd;
    Trajectory traj;
    double seconds;
};

const DecayRun& decay_run() {
    static const DecayRun run = [] {
        const auto t0 = std::chrono::steady_clock::now();
        RunConfig cfg = config("decay.cfg");
        Mesh mesh = make_mesh(cfg);
        BoundaryData bd = make_boundary(cfg, mesh);
        Trajectory traj = pnpf::run(make_initial(cfg, mesh, bd), bd, cfg.species, mesh, cfg.stepping, cfg.t_end);
        return DecayRun{cfg, mesh, bd, std::move(traj), seconds_since(t0)};
    }();
    return run;
}

Outcome bounds_by_construction() {
    const auto& d = decay_run();
    double worst_sum = 0.0;
    bool inside = true;
    for (const auto& s : d.traj.states)
        for (int j = 0; j < d.mesh.n_cells(); ++j) {
            double sum = 0.0;
            for (const auto& u : s.U) {
                inside = inside && u[j] > 0.0 && u[j] < 1.0;
                sum += u[j];
            }
            worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
        }
    const bool steps_ok = d.traj.reports.size() == 200;
    return {inside && worst_sum <= 1e-12 && steps_ok && d.seconds < 10.0,
            "steps=" + std::to_string(d.traj.reports.size()) + " max|sum-1|=" + num(worst_sum) +
                " runtime=" + num(d.seconds) + "s"};
}

Outcome energy_inequality() {
    const auto& d = decay_run();
    const double slack = 10.0 * d.cfg.stepping.newton.abs_tol;
    const auto rep = energy_inequality_check(d.traj, d.bd, d.cfg.species, d.mesh, slack);
    const double H0 = free_energy(d.traj.states.front(), d.bd, d.cfg.species, d.mesh);
    const double H1 = free_energy(d.traj.states.back(), d.bd, d.cfg.species, d.mesh);
    return {d.bd.equilibrium && rep.violations == 0 && H1 <= 0.5 * H0,
            "violations=" + std::to_string(rep.violations) + " max excess=" + num(rep.max_excess) + " H: " + num(H0) +
                " -> " + num(H1)};
}

Outcome equilibrium_stationarity() {
    RunConfig cfg = config("equilibrium.cfg");
    const Mesh mesh = make_mesh(cfg);
    const BoundaryData bd = make_boundary(cfg, mesh);
    const State eq = solve_equilibrium(bd, cfg.species, mesh, cfg.stepping.newton);
    const auto traj = pnpf::run(eq.U, bd, cfg.species, mesh, cfg.stepping, 100 * cfg.stepping.tau);
    double drift = 0.0;
    for (std::size_t i = 0; i < eq.U.size(); ++i)
        for (int j = 0; j < mesh.n_cells(); ++j)
            drift = std::max(drift, std::abs(traj.states.back().U[i][j] - eq.U[i][j]));
    return {traj.reports.size() == 100 && drift <= 1e-8,
            "steps=" + std::to_string(traj.reports.size()) + " max|u(t)-u(0)|=" + num(drift)};
}

Outcome roundtrip() {
    std::mt19937_64 gen(11);
    double err_u = 0.0, err_w = 0.0;
    for (int s = 0; s < 10000; ++s) {
        const int n = 1 + s % 4;
        SpeciesParams p;
        for (int i = 0; i < n; ++i) {
            p.D.push_back(1.0);
            p.z.push_back(uniform(gen, -3.0, 3.0));
        }
        const double Phi = uniform(gen, -3.0, 3.0);
        const auto u = random_simplex(gen, n);
        const auto back = fermi_dirac(entropy_variables(u, Phi, p), Phi, p);
        for (int i = 0; i <= n; ++i) err_u = std::max(err_u, std::abs(back[i] - u[i]));
        std::vector<double> w(n);
        for (auto& v : w) v = uniform(gen, -8.0, 8.0);
        const auto w2 = entropy_variables(fermi_dirac(w, Phi, p), Phi, p);
        for (int i = 0; i < n; ++i) err_w = std::max(err_w, std::abs(w2[i] - w[i]));
    }
    return {err_u <= 1e-12 && err_w <= 1e-12, "max u error=" + num(err_u) + " max w error=" + num(err_w)};
}

Outcome poisson_fermi_mms() {
    const auto t0 = std::chrono::steady_clock::now();
    RunConfig cfg = config("mms.cfg");
    const auto rows = elliptic_study(cfg.species, cfg.length, {50, 100, 200});
    double worst = 1e9;
    for (const auto& r : rows)
        if (r.order) worst = std::min(worst, *r.order);

    SpeciesParams p = cfg.species;
    p.ell = 0.0;
    const Mesh mesh(1.0, 64, BoundaryKind::Dirichlet, BoundaryKind::Dirichlet);
    const auto rho = mesh.sample([](double x) { return std::exp(x) - 1.5; });
    const auto pair = solve_split(rho, {0.3, -0.2}, p, mesh);
    const auto plain = solve_poisson(rho, {0.3, -0.2}, mesh, p.lambda);
    const bool bitwise = pair.Phi == plain && pair.phi == plain;
    const double secs = seconds_since(t0);
    return {worst >= 1.9 && bitwise && secs < 5.0, "min order=" + num(worst) +
                                                       " ell=0 bitwise=" + (bitwise ? "yes" : "no") +
                                                       " runtime=" + num(secs) + "s"};
}

Outcome parabolic_mms() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto rows = parabolic_study(config("mms.cfg"));
    double space = 1e9, time = 1e9;
    for (const auto& r : rows) {
        if (!r.order) continue;
        if (r.study.rfind("space", 0) == 0) space = std::min(space, *r.order);
        else time = std::min(time, *r.order);
    }
    const double secs = seconds_since(t0);
    return {space >= 1.8 && time >= 0.9 && secs < 60.0,
            "min space order=" + num(space) + " min time order=" + num(time) + " runtime=" + num(secs) + "s"};
}

SpeciesParams random_params(std::mt19937_64& gen, int n) {
    SpeciesParams p;
    for (int i = 0; i < n; ++i) {
        p.D.push_back(std::exp(uniform(gen, std::log(0.1), std::log(10.0))));
        p.z.push_back(uniform(gen, -2.0, 2.0));
    }
    return p;
}

Outcome subspace_pd() {
    std::mt19937_64 gen(7);
    int failures = 0;
    for (int s = 0; s < 10000; ++s) {
        const int n = 1 + s % 4;
        const auto p = random_params(gen, n);
        const auto u = random_simplex(gen, n);
        Eigen::VectorXd Y(n + 1);
        for (int i = 0; i <= n; ++i) Y(i) = uniform(gen, -1.0, 1.0);
        if (!check_subspace_pd(u, p, Y).holds) ++failures;
    }
    // Dense oracle: B^T (G - W) B >= 0 with B an orthonormal basis of L and
    // W = D_* diag(1/u_0, 1, ..., 1).
    double min_eig = 1e9;
    for (int s = 0; s < 3000; ++s) {
        const int n = 1 + s % 3;
        const auto p = random_params(gen, n);
        const auto u = random_simplex(gen, n);
        Eigen::VectorXd r(n + 1);
        for (int i = 0; i <= n; ++i) r(i) = std::sqrt(u[i]);
        const Eigen::MatrixXd full = Eigen::HouseholderQR<Eigen::MatrixXd>(r).householderQ();
        const Eigen::MatrixXd B = full.rightCols(n);
        Eigen::MatrixXd W = Eigen::MatrixXd::Identity(n + 1, n + 1) * p.min_diffusivity();
        W(0, 0) /= u[0];
        const Eigen::MatrixXd G = scaled_matrix_G(u, p);
        const Eigen::MatrixXd M = B.transpose() * (G - W) * B;
        const double lo = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (M + M.transpose())).eigenvalues().minCoeff();
        min_eig = std::min(min_eig, lo / std::max(1.0, G.lpNorm<Eigen::Infinity>()));
    }
    return {failures == 0 && min_eig >= -1e-12,
            "failures=" + std::to_string(failures) + "/10000 min scaled eigenvalue on L=" + num(min_eig)};
}

Outcome matrix_structure() {
    std::mt19937_64 gen(5);
    double sym = 0.0, sums = 0.0, factor = 0.0, kernel = 0.0;
    for (int s = 0; s < 10000; ++s) {
        const int n = 1 + s % 4;
        const auto p = random_params(gen, n);
        const auto u = random_simplex(gen, n);
        const auto m = extended_matrices(u, p);
        const Eigen::MatrixXd G = scaled_matrix_G(u, p);
        Eigen::VectorXd r(n + 1);
        for (int i = 0; i <= n; ++i) r(i) = std::sqrt(u[i]);
        sym = std::max(sym, (m.A - m.A.transpose()).lpNorm<Eigen::Infinity>());
        sums = std::max(sums, std::max((m.A.rowwise().sum()).lpNorm<Eigen::Infinity>(),
                                       (m.A.colwise().sum()).lpNorm<Eigen::Infinity>()));
        factor = std::max(factor, (r.asDiagonal() * G * r.asDiagonal() - m.A).lpNorm<Eigen::Infinity>());
        kernel = std::max(kernel, (G * r).lpNorm<Eigen::Infinity>() / G.lpNorm<Eigen::Infinity>());
    }
    const bool ok = sym <= 1e-14 && sums <= 1e-14 && factor <= 1e-14 && kernel <= 1e-14;
    return {ok, "asym=" + num(sym) + " row/col sums=" + num(sums) + " |sqrt(u) G sqrt(u) - A|=" + num(factor) +
                    " |G sqrt(u)|/|G|=" + num(kernel)};
}

Outcome dissipation_bound() {
    const auto& d = decay_run();
    int bad = 0;
    double margin = 1e9;
    for (const auto& s : d.traj.states) {
        const auto b = dissipation_lower_bound(s, d.bd, d.cfg.species, d.mesh);
        if (b.lhs < b.rhs - 1e-10) ++bad;
        margin = std::min(margin, b.lhs - b.rhs);
    }
    return {bad == 0, "violating states=" + std::to_string(bad) + " min(lhs-rhs)=" + num(margin)};
}

Outcome weak_strong() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto rep = run_weak_strong(config("weak_strong.cfg"), {0.0, 1e-2, 1e-3});
    const auto& c0 = rep.curves[0];
    double floor = 0.0;
    for (std::size_t k = 0; k < c0.time.size(); ++k)
        if (c0.time[k] <= 0.1 + 1e-12) floor = std::max(floor, c0.relative_entropy[k]);
    const double r1 = rep.curves[1].ratio, r2 = rep.curves[2].ratio;
    const double spread = std::max(r1, r2) / std::min(r1, r2);
    const double secs = seconds_since(t0);
    return {floor <= 1e-6 && spread <= 3.0 && secs < 120.0,
            "delta=0 max RE=" + num(floor) + " ratios=" + num(r1) + "," + num(r2) + " runtime=" + num(secs) + "s"};
}

Outcome reaction_class() {
    RunConfig cfg = config("reaction.cfg");
    const Mesh mesh = make_mesh(cfg);
    const BoundaryData bd = make_boundary(cfg, mesh);
    const auto traj = pnpf::run(make_initial(cfg, mesh, bd), bd, cfg.species, mesh, cfg.stepping, cfg.t_end);
    const auto rep = energy_inequality_check(traj, bd, cfg.species, mesh, 10.0 * cfg.stepping.newton.abs_tol);

    // Simplex sweep including the faces u_i = 0.
    int quasi = 0, sign = 0;
    const int N = 40;
    for (int a = 0; a <= N; ++a)
        for (int b = 0; a + b <= N; ++b) {
            const std::vector<double> U = {double(N - a - b) / N, double(a) / N, double(b) / N};
            const auto r = reaction_rates(U, cfg.species);
            for (int i = 0; i < 2; ++i)
                if (U[i + 1] == 0.0 && r[i] < 0.0) ++quasi;
            if (r[0] + r[1] > 0.0) ++sign;
        }
    return {rep.violations == 0 && quasi == 0 && sign == 0,
            "energy violations=" + std::to_string(rep.violations) + " max excess=" + num(rep.max_excess) +
                " quasi-positivity failures=" + std::to_string(quasi) + " sum r > 0 points=" + std::to_string(sign)};
}

Outcome ell_sweep() {
    const auto rows = run_ell_sweep(config("ell_sweep.cfg"), {0.0, 1e-1, 1e-2, 1e-3});
    bool decreasing = true, zero = false;
    double worst = 1e9;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k].ell == 0.0) zero = rows[k].difference == 0.0;
        if (k > 0 && !(rows[k].difference < rows[k - 1].difference)) decreasing = false;
        if (rows[k].order) worst = std::min(worst, *rows[k].order);
    }
    return {decreasing && zero && worst >= 1.8,
            std::string("decreasing=") + (decreasing ? "yes" : "no") + " min order=" + num(worst)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"bounds by construction", bounds_by_construction},
        {"discrete free energy inequality", energy_inequality},
        {"equilibrium stationarity", equilibrium_stationarity},
        {"entropy-variable roundtrip", roundtrip},
        {"Poisson-Fermi manufactured solution", poisson_fermi_mms},
        {"parabolic manufactured solution", parabolic_mms},
        {"subspace positive definiteness", subspace_pd},
        {"extended matrix structure", matrix_structure},
        {"dissipation lower bound", dissipation_bound},
        {"weak-strong relative entropy", weak_strong},
        {"reaction class", reaction_class},
        {"ell sweep", ell_sweep},
    };
    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        Outcome o;
        try {
            o = criteria[k].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failed;
        std::printf("criterion %2zu %s  %s: %s\n", k + 1, o.pass ? "PASS" : "FAIL", criteria[k].first, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
