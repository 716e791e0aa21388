#include "pnpf/stepper.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace pnpf {

void StepperOptions::validate() const {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("stepping.tau: must be positive");
    if (!(eps >= 0.0) || !std::isfinite(eps)) throw std::invalid_argument("stepping.eps: must be nonnegative");
    if (!(newton.abs_tol > 0.0)) throw std::invalid_argument("stepping.newton_tol: must be positive");
    if (newton.max_iter < 1) throw std::invalid_argument("stepping.max_iter: must be >= 1");
    if (max_step_halvings < 0) throw std::invalid_argument("stepping.max_halvings: must be >= 0");
    if (!(initial_clip > 0.0 && initial_clip < 0.5)) throw std::invalid_argument("stepping.initial_clip: out of range");
}

ImplicitSystem::ImplicitSystem(const State& prev, const BoundaryData& bd, const SpeciesParams& params,
                               const Mesh& mesh, const StepperOptions& opts, double tau)
    : prev_(prev),
      bd_(bd),
      params_(params),
      mesh_(mesh),
      opts_(opts),
      tau_(tau),
      time_(prev.time + tau),
      n_(params.n()),
      split_(params.ell > 0.0),
      per_cell_(params.n() + (params.ell > 0.0 ? 2 : 1)) {}

std::vector<int> ImplicitSystem::potential_indices() const {
    std::vector<int> idx;
    for (int j = 0; j < mesh_.n_cells(); ++j) {
        if (split_) idx.push_back(phi_index(j));
        idx.push_back(Phi_index(j));
    }
    return idx;
}

std::vector<int> ImplicitSystem::concentration_indices() const {
    std::vector<int> idx;
    for (int j = 0; j < mesh_.n_cells(); ++j)
        for (int i = 0; i < n_; ++i) idx.push_back(v_index(j, i));
    return idx;
}

std::vector<double> ImplicitSystem::pack(const State& state) const {
    std::vector<double> x(size());
    for (int j = 0; j < mesh_.n_cells(); ++j) {
        for (int i = 0; i < n_; ++i) x[v_index(j, i)] = state.w[i][j] - bd_.wD[i][j];
        if (split_) x[phi_index(j)] = state.phi[j];
        x[Phi_index(j)] = state.Phi[j];
    }
    return x;
}

State ImplicitSystem::unpack(std::span<const double> x) const {
    const int cells = mesh_.n_cells();
    State s;
    s.time = time_;
    s.U.assign(n_ + 1, CellField(cells));
    s.w.assign(n_, CellField(cells));
    s.Phi = CellField(cells);
    s.phi = CellField(cells);
    std::vector<double> w(n_), u(n_ + 1);
    for (int j = 0; j < cells; ++j) {
        for (int i = 0; i < n_; ++i) {
            w[i] = x[v_index(j, i)] + bd_.wD[i][j];
            s.w[i][j] = w[i];
        }
        s.Phi[j] = x[Phi_index(j)];
        s.phi[j] = split_ ? x[phi_index(j)] : s.Phi[j];
        fermi_dirac(w, s.Phi[j], params_, u);
        for (int i = 0; i <= n_; ++i) s.U[i][j] = u[i];
    }
    return s;
}

std::vector<double> ImplicitSystem::residual(std::span<const double> x) const {
    std::vector<double> r;
    evaluate(x, &r, nullptr);
    return r;
}

BandedMatrix ImplicitSystem::jacobian(std::span<const double> x) const {
    BandedMatrix jac(size(), 2 * per_cell_ - 1, 2 * per_cell_ - 1);
    evaluate(x, nullptr, &jac);
    return jac;
}

void ImplicitSystem::evaluate(std::span<const double> x, std::vector<double>* r, BandedMatrix* jac) const {
    const int cells = mesh_.n_cells();
    const int n = n_;
    const double h = mesh_.h();
    const double h2 = h * h;
    const double lam2 = params_.lambda * params_.lambda;
    const double ell2 = params_.ell * params_.ell;
    const double eps = opts_.eps;
    const bool reacting = params_.reaction.kind != ReactionKind::None;

    if (r) r->assign(size(), 0.0);
    if (jac) jac->set_zero();
    auto R = [&](int row) -> double& { return (*r)[row]; };
    auto addJ = [&](int row, int col, double v) {
        if (jac) jac->add(row, col, v);
    };

    // Pointwise state of every cell.
    std::vector<std::vector<double>> U(cells, std::vector<double>(n + 1));
    std::vector<std::vector<double>> W(cells, std::vector<double>(n));
    std::vector<FermiDiracSensitivity> sens(jac ? cells : 0);
    std::vector<double> Phi(cells);
    for (int j = 0; j < cells; ++j) {
        for (int i = 0; i < n; ++i) W[j][i] = x[v_index(j, i)] + bd_.wD[i][j];
        Phi[j] = x[Phi_index(j)];
        fermi_dirac(W[j], Phi[j], params_, U[j]);
        if (jac) sens[j] = fermi_dirac_sensitivity(U[j], params_);
    }

    // Time derivative, reactions, sources and the eps-regularisation.
    for (int j = 0; j < cells; ++j) {
        const double xc = mesh_.center(j);
        const auto rates = reacting ? reaction_rates(U[j], params_) : std::vector<double>(n, 0.0);
        const auto drate = (reacting && jac) ? reaction_jacobian(U[j], params_) : std::vector<double>();
        for (int i = 0; i < n; ++i) {
            const int row = v_index(j, i);
            const double v = x[row];
            // v vanishes on Dirichlet ends, so the boundary face gradient is v / (h/2).
            const double vl = j > 0 ? x[v_index(j - 1, i)] : 0.0;
            const double vr = j < cells - 1 ? x[v_index(j + 1, i)] : 0.0;
            double stiff = 0.0, d_self = 0.0;
            if (j > 0) {
                stiff += (v - vl) / h;
                d_self += 1.0 / h;
            } else if (mesh_.left_dirichlet()) {
                stiff += 2.0 * v / h;
                d_self += 2.0 / h;
            }
            if (j < cells - 1) {
                stiff += (v - vr) / h;
                d_self += 1.0 / h;
            } else if (mesh_.right_dirichlet()) {
                stiff += 2.0 * v / h;
                d_self += 2.0 / h;
            }
            if (r) {
                double res = h * (U[j][i + 1] - prev_.U[i + 1][j]) / tau_;
                res += eps * (h * v + stiff);
                res -= h * rates[i];
                if (opts_.sources && opts_.sources->mass) res -= h * opts_.sources->mass(i + 1, xc, time_);
                R(row) += res;
            }
            if (jac) {
                for (int k = 0; k < n; ++k) {
                    double d = h * sens[j].dw(i + 1, k) / tau_;
                    if (reacting)
                        for (int m = 0; m <= n; ++m)
                            d -= h * drate[static_cast<std::size_t>(i) * (n + 1) + m] * sens[j].dw(m, k);
                    addJ(row, v_index(j, k), d);
                }
                double dphi = h * sens[j].dU_dPhi[i + 1] / tau_;
                if (reacting)
                    for (int m = 0; m <= n; ++m)
                        dphi -= h * drate[static_cast<std::size_t>(i) * (n + 1) + m] * sens[j].dU_dPhi[m];
                addJ(row, Phi_index(j), dphi);
                addJ(row, row, eps * (h + d_self));
                if (j > 0) addJ(row, v_index(j - 1, i), -eps / h);
                if (j < cells - 1) addJ(row, v_index(j + 1, i), -eps / h);
            }
        }
    }

    // Fluxes J = -D_i * mean(u_i) * grad(w_i) through every face. The face
    // flux enters the residual of the cell on its left with + and of the cell
    // on its right with -.
    for (int i = 0; i < n; ++i) {
        const double D = params_.D[i];
        for (int f = 0; f <= cells; ++f) {
            const int L = f - 1;  // cell on the left, -1 at the left end
            const int Rc = f;     // cell on the right, cells at the right end
            const bool has_L = L >= 0, has_R = Rc < cells;
            if (!has_L && !mesh_.left_dirichlet()) continue;
            if (!has_R && !mesh_.right_dirichlet()) continue;
            const double uL = has_L ? U[L][i + 1] : bd_.left->u[i + 1];
            const double uR = has_R ? U[Rc][i + 1] : bd_.right->u[i + 1];
            const double wL = has_L ? W[L][i] : bd_.left->w[i];
            const double wR = has_R ? W[Rc][i] : bd_.right->w[i];
            const double dist = (has_L && has_R) ? h : 0.5 * h;
            const double mean = 0.5 * (uL + uR);
            const double dw = (wR - wL) / dist;
            const double flux = -D * mean * dw;
            if (r) {
                if (has_L) R(v_index(L, i)) += flux;
                if (has_R) R(v_index(Rc, i)) -= flux;
            }
            if (!jac) continue;
            // d flux / d (cell unknowns) for the cells adjacent to this face.
            for (int side = 0; side < 2; ++side) {
                const bool present = side == 0 ? has_L : has_R;
                if (!present) continue;
                const int c = side == 0 ? L : Rc;
                const double sign_w = side == 0 ? -1.0 : 1.0;
                for (int k = 0; k < n; ++k) {
                    double d = -D * (0.5 * sens[c].dw(i + 1, k) * dw + (k == i ? mean * sign_w / dist : 0.0));
                    if (has_L) addJ(v_index(L, i), v_index(c, k), d);
                    if (has_R) addJ(v_index(Rc, i), v_index(c, k), -d);
                }
                const double dP = -D * 0.5 * sens[c].dU_dPhi[i + 1] * dw;
                if (has_L) addJ(v_index(L, i), Phi_index(c), dP);
                if (has_R) addJ(v_index(Rc, i), Phi_index(c), -dP);
            }
        }
    }

    // Poisson-Fermi rows: h * lambda^2 (-Delta phi) = h * rho and, when split,
    // h * (ell^2 (-Delta Phi) + Phi - phi) = 0. Potentials take Phi^D on
    // Dirichlet ends.
    auto add_stencil = [&](int j, int row, auto index_of, std::span<const double> bc_values, double coef,
                           double boundary_left, double boundary_right) {
        // coef * h * (-Delta_h q)_j with q = x[index_of(j)].
        const double c = coef / h;
        const double q = x[index_of(j)];
        double val = 0.0;
        if (j > 0) {
            val += c * (q - x[index_of(j - 1)]);
            addJ(row, index_of(j), c);
            addJ(row, index_of(j - 1), -c);
        } else if (mesh_.left_dirichlet()) {
            val += 2.0 * c * (q - boundary_left);
            addJ(row, index_of(j), 2.0 * c);
        }
        if (j < cells - 1) {
            val += c * (q - x[index_of(j + 1)]);
            addJ(row, index_of(j), c);
            addJ(row, index_of(j + 1), -c);
        } else if (mesh_.right_dirichlet()) {
            val += 2.0 * c * (q - boundary_right);
            addJ(row, index_of(j), 2.0 * c);
        }
        (void)bc_values;
        if (r) R(row) += val;
    };
    const double PhiL = bd_.left ? bd_.left->Phi : 0.0;
    const double PhiR = bd_.right ? bd_.right->Phi : 0.0;
    auto phi_of = [&](int j) { return split_ ? phi_index(j) : Phi_index(j); };
    auto Phi_of = [&](int j) { return Phi_index(j); };
    (void)h2;
    for (int j = 0; j < cells; ++j) {
        const int row = phi_of(j);
        add_stencil(j, row, phi_of, {}, lam2, PhiL, PhiR);
        double rho = bd_.background[j];
        if (opts_.sources && opts_.sources->charge) rho += opts_.sources->charge(mesh_.center(j), time_);
        for (int i = 0; i < n; ++i) rho += params_.z[i] * U[j][i + 1];
        if (r) R(row) -= h * rho;
        if (jac) {
            for (int k = 0; k < n; ++k) {
                double d = 0.0;
                for (int i = 0; i < n; ++i) d += params_.z[i] * sens[j].dw(i + 1, k);
                addJ(row, v_index(j, k), -h * d);
            }
            double dP = 0.0;
            for (int i = 0; i < n; ++i) dP += params_.z[i] * sens[j].dU_dPhi[i + 1];
            addJ(row, Phi_index(j), -h * dP);
        }
        if (split_) {
            const int prow = Phi_index(j);
            add_stencil(j, prow, Phi_of, {}, ell2, PhiL, PhiR);
            if (r) R(prow) += h * (x[Phi_index(j)] - x[phi_index(j)]);
            addJ(prow, Phi_index(j), h);
            addJ(prow, phi_index(j), -h);
        }
    }
}

std::vector<double> assemble_residual(std::span<const double> unknowns, const State& prev, const BoundaryData& bd,
                                      const SpeciesParams& params, const Mesh& mesh, const StepperOptions& opts) {
    return ImplicitSystem(prev, bd, params, mesh, opts, opts.tau).residual(unknowns);
}

namespace {

/// Newton on the unknowns listed in idx with all others frozen at base.
NewtonResult solve_block(const ImplicitSystem& sys, std::vector<double>& base, const std::vector<int>& idx,
                         int entries_per_cell, const NewtonOptions& newton) {
    const int m = static_cast<int>(idx.size());
    std::vector<int> pos(sys.size(), -1);
    for (int k = 0; k < m; ++k) pos[idx[k]] = k;
    auto scatter = [&](std::span<const double> y) {
        std::vector<double> full = base;
        for (int k = 0; k < m; ++k) full[idx[k]] = y[k];
        return full;
    };
    ResidualFn res = [&](std::span<const double> y) {
        const auto r = sys.residual(scatter(y));
        std::vector<double> out(m);
        for (int k = 0; k < m; ++k) out[k] = r[idx[k]];
        return out;
    };
    JacobianFn jac = [&](std::span<const double> y) {
        const auto full = sys.jacobian(scatter(y));
        const int bw = 2 * entries_per_cell - 1;
        BandedMatrix sub(m, bw, bw);
        for (int a = 0; a < m; ++a) {
            const int row = idx[a];
            for (int col = std::max(0, row - full.lower()); col <= std::min(sys.size() - 1, row + full.upper()); ++col) {
                const int b = pos[col];
                if (b < 0) continue;
                const double v = full(row, col);
                if (v != 0.0) sub.at(a, b) = v;
            }
        }
        return sub;
    };
    std::vector<double> y0(m);
    for (int k = 0; k < m; ++k) y0[k] = base[idx[k]];
    auto result = newton_solve(res, jac, y0, newton);
    for (int k = 0; k < m; ++k) base[idx[k]] = result.solution[k];
    return result;
}

NewtonResult solve_system(const ImplicitSystem& sys, std::vector<double> x0, const StepperOptions& opts) {
    if (opts.coupling == Coupling::FullyCoupled) {
        ResidualFn res = [&](std::span<const double> x) { return sys.residual(x); };
        JacobianFn jac = [&](std::span<const double> x) { return sys.jacobian(x); };
        return newton_solve(res, jac, std::move(x0), opts.newton);
    }

    // Block Gauss-Seidel: potential for frozen v, then v for frozen potential.
    const auto pot = sys.potential_indices();
    const auto conc = sys.concentration_indices();
    const int pot_per_cell = sys.per_cell() - static_cast<int>(conc.size()) / (sys.size() / sys.per_cell());
    const int conc_per_cell = sys.per_cell() - pot_per_cell;
    NewtonResult out;
    out.solution = std::move(x0);
    NewtonOptions inner = opts.newton;
    inner.verify_jacobian = false;
    for (int it = 0; it < opts.max_fixed_point_iter; ++it) {
        out.residual_norm = norm_inf(sys.residual(out.solution));
        if (out.residual_norm <= opts.newton.abs_tol) {
            out.converged = true;
            return out;
        }
        const auto a = solve_block(sys, out.solution, pot, pot_per_cell, inner);
        const auto b = solve_block(sys, out.solution, conc, conc_per_cell, inner);
        out.iterations += a.iterations + b.iterations;
        if (!a.converged || !b.converged) break;
    }
    out.residual_norm = norm_inf(sys.residual(out.solution));
    out.converged = out.residual_norm <= opts.newton.abs_tol;
    return out;
}

double regularization_norm(const State& s, const BoundaryData& bd, const Mesh& mesh) {
    double total = 0.0;
    const auto zl = mesh.left_dirichlet() ? std::optional<double>(0.0) : std::nullopt;
    const auto zr = mesh.right_dirichlet() ? std::optional<double>(0.0) : std::nullopt;
    for (std::size_t i = 0; i < s.w.size(); ++i) {
        CellField v(mesh.n_cells());
        for (int j = 0; j < mesh.n_cells(); ++j) v[j] = s.w[i][j] - bd.wD[i][j];
        const double l2 = l2_norm(mesh, v);
        total += l2 * l2 + weighted_face_square(mesh, face_gradient(mesh, v, zl, zr));
    }
    return total;
}

bool within_bounds(const State& s) {
    try {
        validate_state(s, 1e-12);
        return true;
    } catch (const std::domain_error&) {
        return false;
    }
}

}  // namespace

StepResult step(const State& prev, const BoundaryData& bd, const SpeciesParams& params, const Mesh& mesh,
                const StepperOptions& opts) {
    opts.validate();
    double tau = opts.tau;
    int total_iterations = 0;
    for (int attempt = 0; attempt <= opts.max_step_halvings; ++attempt, tau *= 0.5) {
        ImplicitSystem sys(prev, bd, params, mesh, opts, tau);
        const auto result = solve_system(sys, sys.pack(prev), opts);
        total_iterations += result.iterations;
        if (!result.converged) continue;
        State next = sys.unpack(result.solution);
        if (!within_bounds(next)) continue;

        StepReport rep;
        rep.newton_iterations = total_iterations;
        rep.residual_norm = result.residual_norm;
        rep.tau_used = tau;
        rep.halvings = attempt;
        rep.energy_before = free_energy(prev, bd, params, mesh);
        rep.energy_after = free_energy(next, bd, params, mesh);
        rep.dissipation = dissipation(next, bd, params, mesh);
        rep.regularization = opts.eps * regularization_norm(next, bd, mesh);
        rep.reaction_production = reaction_entropy_production(next, bd, params, mesh);
        rep.accepted = true;
        return {std::move(next), rep};
    }
    throw StepFailure("step: Newton failed at t = " + std::to_string(prev.time) + " after " +
                      std::to_string(opts.max_step_halvings) + " step halvings");
}

State initial_state(const std::vector<CellField>& U0, const BoundaryData& bd, const SpeciesParams& params,
                    const Mesh& mesh, const StepperOptions& opts) {
    const int n = params.n();
    const int cells = mesh.n_cells();
    if (static_cast<int>(U0.size()) != n + 1) throw std::invalid_argument("initial data: expected n+1 fields");
    const double delta = opts.initial_clip;
    std::vector<CellField> U(n + 1, CellField(cells));
    for (int j = 0; j < cells; ++j) {
        double raw = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double u = U0[i][j];
            if (!(u >= -1e-12 && u <= 1.0 + 1e-12))
                throw std::invalid_argument("initial data: u_" + std::to_string(i) + " outside [0,1] in cell " +
                                            std::to_string(j));
            raw += u;
        }
        if (std::abs(raw - 1.0) > 1e-8)
            throw std::invalid_argument("initial data: concentrations do not sum to 1 in cell " + std::to_string(j));
        double sum = 0.0;
        for (int i = 0; i <= n; ++i) {
            U[i][j] = std::clamp(U0[i][j], delta, 1.0 - delta);
            sum += U[i][j];
        }
        for (int i = 0; i <= n; ++i) U[i][j] /= sum;
    }
    CellField f = bd.background;
    if (opts.sources && opts.sources->charge)
        for (int j = 0; j < cells; ++j) f[j] += opts.sources->charge(mesh.center(j), 0.0);
    auto pot = solve_poisson_fermi(U, f, bd, params, mesh);
    return make_state(std::move(U), std::move(pot.Phi), std::move(pot.phi), 0.0, params);
}

Trajectory run(const std::vector<CellField>& U0, const BoundaryData& bd, const SpeciesParams& params,
               const Mesh& mesh, const StepperOptions& opts, double t_end, const StepObserver& observer,
               bool keep_states) {
    opts.validate();
    if (!(t_end >= 0.0)) throw std::invalid_argument("stepping.t_end: must be nonnegative");
    Trajectory traj;
    State current = initial_state(U0, bd, params, mesh, opts);
    validate_state(current, 1e-12);
    if (observer) observer(current, nullptr);
    traj.states.push_back(current);

    StepperOptions local = opts;
    double tau = opts.tau;
    int successes = 0;
    const double t_tol = 1e-12 * std::max(1.0, t_end);
    while (current.time < t_end - t_tol) {
        const double remaining = t_end - current.time;
        local.tau = tau >= remaining * (1.0 - 1e-9) ? remaining : tau;
        auto result = step(current, bd, params, mesh, local);
        if (result.report.tau_used >= remaining * (1.0 - 1e-9)) result.state.time = t_end;
        if (result.report.halvings > 0) {
            tau = result.report.tau_used;
            successes = 0;
        } else if (tau < opts.tau && ++successes >= opts.restore_after) {
            tau = std::min(opts.tau, 2.0 * tau);
            successes = 0;
        }
        current = std::move(result.state);
        validate_state(current, 1e-12);
        if (observer) observer(current, &result.report);
        traj.reports.push_back(result.report);
        if (keep_states) traj.states.push_back(current);
    }
    if (!keep_states && traj.reports.size() > 0) traj.states.push_back(current);
    return traj;
}

State solve_equilibrium(const BoundaryData& bd, const SpeciesParams& params, const Mesh& mesh,
                        const NewtonOptions& newton) {
    if (!bd.equilibrium) throw std::invalid_argument("solve_equilibrium: boundary data not in thermal equilibrium");
    const int cells = mesh.n_cells();
    std::vector<CellField> U(params.n() + 1, CellField(cells));
    for (int i = 0; i <= params.n(); ++i) U[i] = bd.uD[i];
    State guess;
    guess.U = U;
    guess.w = bd.wD;
    guess.Phi = bd.PhiD;
    guess.phi = bd.phiD;

    StepperOptions opts;
    opts.eps = 0.0;
    opts.newton = newton;
    ImplicitSystem sys(guess, bd, params, mesh, opts, 1.0);
    auto x = sys.pack(guess);
    const int pot_per_cell = params.ell > 0.0 ? 2 : 1;
    const auto result = solve_block(sys, x, sys.potential_indices(), pot_per_cell, newton);
    if (!result.converged) throw StepFailure("solve_equilibrium: Newton did not converge");
    State eq = sys.unpack(x);
    eq.time = 0.0;
    return eq;
}

}  // namespace pnpf
