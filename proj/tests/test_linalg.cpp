#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "doctest.h"
#include "pnpf/linalg.hpp"
#include "support.hpp"

using namespace pnpf;

namespace {

BandedMatrix random_banded(std::mt19937_64& gen, int n, int kl, int ku) {
    BandedMatrix a(n, kl, ku);
    for (int i = 0; i < n; ++i)
        for (int j = std::max(0, i - kl); j <= std::min(n - 1, i + ku); ++j) a.at(i, j) = testing::uniform(gen, -1.0, 1.0);
    return a;
}

}  // namespace

TEST_CASE("band storage") {
    BandedMatrix a(4, 1, 2);
    a.at(0, 2) = 3.0;
    a.add(0, 2, 1.0);
    CHECK(a(0, 2) == 4.0);
    CHECK(a(3, 0) == 0.0);
    CHECK_THROWS_AS(a.at(3, 0), std::out_of_range);
    const auto dense = a.to_dense();
    CHECK(dense[0 * 4 + 2] == 4.0);
}

TEST_CASE("solve_banded small systems") {
    BandedMatrix id(3, 0, 0);
    for (int i = 0; i < 3; ++i) id.at(i, i) = 1.0;
    const std::vector<double> b = {0.3, -2.0, 7.5};
    CHECK(solve_banded(id, b) == b);

    BandedMatrix lap(3, 1, 1);
    for (int i = 0; i < 3; ++i) {
        lap.at(i, i) = 2.0;
        if (i > 0) lap.at(i, i - 1) = -1.0;
        if (i < 2) lap.at(i, i + 1) = -1.0;
    }
    const auto x = solve_banded(lap, std::vector<double>{1.0, 1.0, 1.0});
    CHECK(x[0] == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(x[1] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(x[2] == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("solve_banded rejects singular matrices") {
    BandedMatrix a(3, 1, 1);
    a.at(0, 0) = 1.0;
    a.at(2, 2) = 1.0;
    a.at(2, 1) = 0.5;
    CHECK_THROWS_AS(solve_banded(a, std::vector<double>{1.0, 1.0, 1.0}), SingularMatrixError);

    BandedMatrix big(100, 1, 1);
    for (int i = 0; i < 100; ++i)
        if (i != 40) big.at(i, i) = 1.0;
    CHECK_THROWS_AS(solve_banded(big, std::vector<double>(100, 1.0)), SingularMatrixError);
}

TEST_CASE("solve_banded pivots within the band") {
    // Zero leading diagonal needs a row swap.
    BandedMatrix a(3, 1, 1);
    a.at(0, 1) = 1.0;
    a.at(1, 0) = 1.0;
    a.at(1, 2) = 2.0;
    a.at(2, 1) = 3.0;
    a.at(2, 2) = 1.0;
    const auto x = solve_banded(a, std::vector<double>{1.0, 5.0, 4.0});
    const auto r = a.multiply(x);
    CHECK(r[0] == doctest::Approx(1.0));
    CHECK(r[1] == doctest::Approx(5.0));
    CHECK(r[2] == doctest::Approx(4.0));
}

TEST_CASE("solve_banded matches a dense LU oracle") {
    std::mt19937_64 gen(21);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + trial % 12;
        const int kl = trial % 4, ku = (trial / 4) % 4;
        const auto a = random_banded(gen, n, kl, ku);
        std::vector<double> b(n);
        for (auto& v : b) v = testing::uniform(gen, -1.0, 1.0);
        const Eigen::MatrixXd A = Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(a.to_dense().data(), n, n);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
        if (!lu.isInvertible() || lu.rcond() < 1e-8) continue;
        const Eigen::VectorXd ref = lu.solve(Eigen::Map<const Eigen::VectorXd>(b.data(), n));
        const auto x = solve_banded(a, b);
        const double scale = ref.lpNorm<Eigen::Infinity>();
        for (int i = 0; i < n; ++i) CHECK(std::abs(x[i] - ref(i)) <= 1e-12 * scale / lu.rcond());
        const auto r = a.multiply(x);
        double res = 0.0, xn = 0.0, bn = 0.0;
        for (int i = 0; i < n; ++i) {
            res = std::max(res, std::abs(r[i] - b[i]));
            xn = std::max(xn, std::abs(x[i]));
            bn = std::max(bn, std::abs(b[i]));
        }
        CHECK(res <= 1e-12 * (a.norm_inf() * xn + bn));
    }
}

TEST_CASE("newton_solve") {
    SUBCASE("linear residual converges in one step") {
        const std::vector<double> c = {1.0, -2.0, 3.5};
        ResidualFn r = [&](std::span<const double> x) {
            std::vector<double> out(3);
            for (int i = 0; i < 3; ++i) out[i] = x[i] - c[i];
            return out;
        };
        JacobianFn j = [](std::span<const double>) {
            BandedMatrix m(3, 0, 0);
            for (int i = 0; i < 3; ++i) m.at(i, i) = 1.0;
            return m;
        };
        const auto res = newton_solve(r, j, {10.0, 10.0, 10.0});
        CHECK(res.converged);
        CHECK(res.iterations == 1);
        CHECK(res.solution == c);
    }
    SUBCASE("scalar quadratic") {
        ResidualFn r = [](std::span<const double> x) { return std::vector<double>{x[0] * x[0] - 4.0}; };
        JacobianFn j = [](std::span<const double> x) {
            BandedMatrix m(1, 0, 0);
            m.at(0, 0) = 2.0 * x[0];
            return m;
        };
        NewtonOptions opts;
        opts.verify_jacobian = true;
        const auto res = newton_solve(r, j, {3.0}, opts);
        CHECK(res.converged);
        CHECK(std::abs(res.solution[0] - 2.0) <= 1e-10);
        CHECK(res.residual_norm <= opts.abs_tol);
        const auto again = newton_solve(r, j, {3.0}, opts);
        CHECK(again.solution == res.solution);
        CHECK(again.iterations == res.iterations);
    }
    SUBCASE("singular Jacobian is reported, not thrown") {
        ResidualFn r = [](std::span<const double> x) { return std::vector<double>{x[0] * x[0] + 1.0}; };
        JacobianFn j = [](std::span<const double> x) {
            BandedMatrix m(1, 0, 0);
            m.at(0, 0) = 2.0 * x[0];
            return m;
        };
        const auto res = newton_solve(r, j, {0.0});
        CHECK_FALSE(res.converged);
    }
    SUBCASE("wrong Jacobian is caught by the finite-difference check") {
        ResidualFn r = [](std::span<const double> x) { return std::vector<double>{std::sin(x[0])}; };
        JacobianFn j = [](std::span<const double>) {
            BandedMatrix m(1, 0, 0);
            m.at(0, 0) = 3.0;
            return m;
        };
        NewtonOptions opts;
        opts.verify_jacobian = true;
        CHECK_THROWS_AS(newton_solve(r, j, {0.3}, opts), std::logic_error);
        CHECK(jacobian_fd_error(r, j, std::vector<double>{0.3}) > 0.5);
    }
}

TEST_CASE("norm_inf flags non-finite entries") {
    CHECK(norm_inf(std::vector<double>{1.0, -3.0}) == 3.0);
    CHECK(std::isinf(norm_inf(std::vector<double>{1.0, std::nan("")})));
}
