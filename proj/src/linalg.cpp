#include "pnpf/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace pnpf {

BandedMatrix::BandedMatrix(int n, int lower, int upper)
    : n_(n), lower_(lower), upper_(upper), width_(lower + upper + 1) {
    if (n < 1 || lower < 0 || upper < 0) throw std::invalid_argument("BandedMatrix: bad shape");
    band_.assign(static_cast<std::size_t>(n) * width_, 0.0);
}

double BandedMatrix::operator()(int i, int j) const {
    if (!in_band(i, j)) return 0.0;
    return band_[static_cast<std::size_t>(i) * width_ + (j - i + lower_)];
}

double& BandedMatrix::at(int i, int j) {
    if (i < 0 || j < 0 || i >= n_ || j >= n_ || !in_band(i, j))
        throw std::out_of_range("BandedMatrix: entry (" + std::to_string(i) + "," +
                                std::to_string(j) + ") outside band");
    return band_[static_cast<std::size_t>(i) * width_ + (j - i + lower_)];
}

void BandedMatrix::set_zero() { std::fill(band_.begin(), band_.end(), 0.0); }

std::vector<double> BandedMatrix::multiply(std::span<const double> x) const {
    std::vector<double> y(n_, 0.0);
    for (int i = 0; i < n_; ++i) {
        const int j0 = std::max(0, i - lower_);
        const int j1 = std::min(n_ - 1, i + upper_);
        double s = 0.0;
        for (int j = j0; j <= j1; ++j) s += (*this)(i, j) * x[j];
        y[i] = s;
    }
    return y;
}

double BandedMatrix::norm_inf() const {
    double m = 0.0;
    for (int i = 0; i < n_; ++i) {
        double s = 0.0;
        for (int j = std::max(0, i - lower_); j <= std::min(n_ - 1, i + upper_); ++j)
            s += std::abs((*this)(i, j));
        m = std::max(m, s);
    }
    return m;
}

std::vector<double> BandedMatrix::to_dense() const {
    std::vector<double> d(static_cast<std::size_t>(n_) * n_, 0.0);
    for (int i = 0; i < n_; ++i)
        for (int j = std::max(0, i - lower_); j <= std::min(n_ - 1, i + upper_); ++j)
            d[static_cast<std::size_t>(i) * n_ + j] = (*this)(i, j);
    return d;
}

double norm_inf(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) {
        if (!std::isfinite(x)) return std::numeric_limits<double>::infinity();
        m = std::max(m, std::abs(x));
    }
    return m;
}

namespace {

double pivot_threshold(int n, double scale) {
    return n * std::numeric_limits<double>::epsilon() * std::max(scale, std::numeric_limits<double>::min());
}

std::vector<double> solve_dense(std::vector<double> a, std::vector<double> b, int n, double scale) {
    std::vector<int> col(n);
    std::iota(col.begin(), col.end(), 0);
    auto A = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };
    const double tiny = pivot_threshold(n, scale);
    for (int k = 0; k < n; ++k) {
        int pr = k, pc = k;
        double best = 0.0;
        for (int i = k; i < n; ++i)
            for (int j = k; j < n; ++j)
                if (std::abs(A(i, j)) > best) {
                    best = std::abs(A(i, j));
                    pr = i;
                    pc = j;
                }
        if (best <= tiny) throw SingularMatrixError("solve_banded: matrix is singular");
        if (pr != k) {
            for (int j = 0; j < n; ++j) std::swap(A(k, j), A(pr, j));
            std::swap(b[k], b[pr]);
        }
        if (pc != k) {
            for (int i = 0; i < n; ++i) std::swap(A(i, k), A(i, pc));
            std::swap(col[k], col[pc]);
        }
        for (int i = k + 1; i < n; ++i) {
            const double l = A(i, k) / A(k, k);
            if (l == 0.0) continue;
            for (int j = k + 1; j < n; ++j) A(i, j) -= l * A(k, j);
            b[i] -= l * b[k];
        }
    }
    std::vector<double> y(n);
    for (int i = n - 1; i >= 0; --i) {
        double s = b[i];
        for (int j = i + 1; j < n; ++j) s -= A(i, j) * y[j];
        y[i] = s / A(i, i);
    }
    std::vector<double> x(n);
    for (int k = 0; k < n; ++k) x[col[k]] = y[k];
    return x;
}

}  // namespace

std::vector<double> solve_banded(const BandedMatrix& a, std::span<const double> b) {
    const int n = a.size();
    if (static_cast<int>(b.size()) != n) throw std::invalid_argument("solve_banded: size mismatch");
    const int kl = a.lower();
    const int ku = a.upper();
    // Row i stores columns [i - kl, i + kl + ku]; the extra kl super-diagonals
    // absorb fill-in from row interchanges.
    const int width = 2 * kl + ku + 1;
    std::vector<double> w(static_cast<std::size_t>(n) * width, 0.0);
    auto W = [&](int i, int j) -> double& { return w[static_cast<std::size_t>(i) * width + (j - i + kl)]; };
    for (int i = 0; i < n; ++i)
        for (int j = std::max(0, i - kl); j <= std::min(n - 1, i + ku); ++j) W(i, j) = a(i, j);
    std::vector<double> x(b.begin(), b.end());

    const double scale = a.norm_inf();
    const double tiny = pivot_threshold(n, scale);
    bool singular = false;
    for (int k = 0; k < n && !singular; ++k) {
        const int last_row = std::min(n - 1, k + kl);
        const int last_col = std::min(n - 1, k + kl + ku);
        int p = k;
        for (int r = k + 1; r <= last_row; ++r)
            if (std::abs(W(r, k)) > std::abs(W(p, k))) p = r;
        if (!(std::abs(W(p, k)) > tiny)) {
            singular = true;
            break;
        }
        if (p != k) {
            for (int j = k; j <= last_col; ++j) std::swap(W(k, j), W(p, j));
            std::swap(x[k], x[p]);
        }
        const double pivot = W(k, k);
        for (int r = k + 1; r <= last_row; ++r) {
            const double l = W(r, k) / pivot;
            if (l == 0.0) continue;
            W(r, k) = 0.0;
            for (int j = k + 1; j <= last_col; ++j) W(r, j) -= l * W(k, j);
            x[r] -= l * x[k];
        }
    }
    if (singular) {
        if (n <= 64)
            return solve_dense(a.to_dense(), std::vector<double>(b.begin(), b.end()), n, scale);
        throw SingularMatrixError("solve_banded: zero pivot within band");
    }
    for (int i = n - 1; i >= 0; --i) {
        double s = x[i];
        for (int j = i + 1; j <= std::min(n - 1, i + kl + ku); ++j) s -= W(i, j) * x[j];
        x[i] = s / W(i, i);
    }
    return x;
}

double jacobian_fd_error(const ResidualFn& residual, const JacobianFn& jacobian,
                         std::span<const double> x, double step) {
    const BandedMatrix jac = jacobian(x);
    const int n = jac.size();
    std::vector<double> xp(x.begin(), x.end());
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
        const double dx = step * std::max(1.0, std::abs(x[k]));
        xp[k] = x[k] + dx;
        const auto rp = residual(xp);
        xp[k] = x[k] - dx;
        const auto rm = residual(xp);
        xp[k] = x[k];
        double col_norm = 0.0;
        for (int i = 0; i < n; ++i) col_norm = std::max(col_norm, std::abs(jac(i, k)));
        for (int i = 0; i < n; ++i) {
            const double fd = (rp[i] - rm[i]) / (2.0 * dx);
            worst = std::max(worst, std::abs(fd - jac(i, k)) / std::max(1.0, col_norm));
        }
    }
    return worst;
}

NewtonResult newton_solve(const ResidualFn& residual, const JacobianFn& jacobian,
                          std::vector<double> x0, const NewtonOptions& opts) {
    if (!(opts.abs_tol > 0.0) || opts.max_iter < 1)
        throw std::invalid_argument("newton_solve: abs_tol > 0 and max_iter >= 1 required");
    if (opts.verify_jacobian) {
        const double err = jacobian_fd_error(residual, jacobian, x0);
        if (err > opts.jacobian_rel_tol)
            throw std::logic_error("newton_solve: Jacobian disagrees with finite differences (" +
                                   std::to_string(err) + ")");
    }

    NewtonResult res;
    res.solution = std::move(x0);
    std::vector<double> r = residual(res.solution);
    res.residual_norm = norm_inf(r);
    if (res.residual_norm <= opts.abs_tol) {
        res.converged = true;
        return res;
    }

    std::vector<double> trial(res.solution.size());
    for (int it = 1; it <= opts.max_iter; ++it) {
        res.iterations = it;
        std::vector<double> dx;
        try {
            std::vector<double> rhs(r.size());
            for (std::size_t i = 0; i < r.size(); ++i) rhs[i] = -r[i];
            dx = solve_banded(jacobian(res.solution), rhs);
        } catch (const SingularMatrixError&) {
            return res;
        }

        double alpha = 1.0;
        bool accepted = false;
        std::vector<double> r_trial;
        double trial_norm = 0.0;
        while (alpha >= opts.min_step) {
            for (std::size_t i = 0; i < trial.size(); ++i) trial[i] = res.solution[i] + alpha * dx[i];
            r_trial = residual(trial);
            trial_norm = norm_inf(r_trial);
            if (trial_norm <= opts.abs_tol || trial_norm <= (1.0 - 1e-4 * alpha) * res.residual_norm) {
                accepted = true;
                break;
            }
            alpha *= opts.damping;
        }
        if (!accepted) return res;

        res.solution.swap(trial);
        r.swap(r_trial);
        res.residual_norm = trial_norm;
        if (res.residual_norm <= opts.abs_tol) {
            res.converged = true;
            return res;
        }
    }
    return res;
}

}  // namespace pnpf
