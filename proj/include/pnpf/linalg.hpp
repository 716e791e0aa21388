#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace pnpf {

class SingularMatrixError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Square matrix with `lower` sub-diagonals and `upper` super-diagonals.
/// Entries outside the band are structurally zero; writing to them throws.
class BandedMatrix {
public:
    BandedMatrix(int n, int lower, int upper);

    int size() const { return n_; }
    int lower() const { return lower_; }
    int upper() const { return upper_; }

    bool in_band(int i, int j) const { return j - i >= -lower_ && j - i <= upper_; }
    double operator()(int i, int j) const;
    double& at(int i, int j);
    void add(int i, int j, double value) { at(i, j) += value; }
    void set_zero();

    std::vector<double> multiply(std::span<const double> x) const;
    double norm_inf() const;
    /// Row-major dense copy, for tests and the small-system fallback.
    std::vector<double> to_dense() const;

private:
    int n_;
    int lower_;
    int upper_;
    int width_;
    std::vector<double> band_;
};

/// LU with partial pivoting restricted to the band (LAPACK gbsv layout). For
/// n <= 64 a dense fully pivoted LU is tried before reporting singularity.
std::vector<double> solve_banded(const BandedMatrix& a, std::span<const double> b);

struct NewtonOptions {
    double abs_tol = 1e-10;
    int max_iter = 50;
    double damping = 0.5;
    double min_step = 1.0 / (1 << 20);
    /// Compare the analytic Jacobian with central differences at the initial
    /// iterate and throw if they disagree.
    bool verify_jacobian = false;
    double jacobian_rel_tol = 1e-6;
};

struct NewtonResult {
    std::vector<double> solution;
    int iterations = 0;
    double residual_norm = 0.0;
    bool converged = false;
};

using ResidualFn = std::function<std::vector<double>(std::span<const double>)>;
using JacobianFn = std::function<BandedMatrix(std::span<const double>)>;

/// Damped Newton with residual-norm backtracking. Non-convergence is reported
/// in the result; the best iterate seen is returned.
NewtonResult newton_solve(const ResidualFn& residual, const JacobianFn& jacobian,
                          std::vector<double> x0, const NewtonOptions& opts = {});

/// Largest column-wise discrepancy between the Jacobian and central finite
/// differences of the residual at x, relative to max(1, |column|_inf).
double jacobian_fd_error(const ResidualFn& residual, const JacobianFn& jacobian,
                         std::span<const double> x, double step = 1e-6);

double norm_inf(std::span<const double> v);

}  // namespace pnpf
