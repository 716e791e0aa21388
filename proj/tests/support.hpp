#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace pnpf::testing {

/// Uniform draw from the open simplex {u_0..u_n > 0, sum = 1}.
inline std::vector<double> random_simplex(std::mt19937_64& gen, int n) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> u(n + 1);
    double s = 0.0;
    for (auto& v : u) {
        v = e(gen) + 1e-300;
        s += v;
    }
    for (auto& v : u) v /= s;
    return u;
}

inline double uniform(std::mt19937_64& gen, double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(gen);
}

}  // namespace pnpf::testing
