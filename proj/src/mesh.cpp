#include "pnpf/mesh.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace pnpf {

Mesh::Mesh(double length, int n_cells, BoundaryKind left, BoundaryKind right)
    : length_(length), n_cells_(n_cells), h_(0.0), left_(left), right_(right) {
    if (!(length > 0.0) || !std::isfinite(length))
        throw std::invalid_argument("mesh: length must be positive");
    if (n_cells < 2) throw std::invalid_argument("mesh: n_cells must be >= 2");
    if (left == BoundaryKind::Neumann && right == BoundaryKind::Neumann)
        throw std::invalid_argument("mesh: at least one endpoint must be Dirichlet");
    h_ = length / n_cells;
}

std::vector<double> Mesh::centers() const {
    std::vector<double> x(n_cells_);
    for (int j = 0; j < n_cells_; ++j) x[j] = center(j);
    return x;
}

Mesh build_mesh(double length, int n_cells, BoundaryKind left, BoundaryKind right) {
    return Mesh(length, n_cells, left, right);
}

namespace {

void check_boundary_value(BoundaryKind kind, const std::optional<double>& value, const char* side) {
    if (kind == BoundaryKind::Dirichlet && !value)
        throw std::invalid_argument(std::string("face_gradient: missing Dirichlet value at ") + side);
    if (kind == BoundaryKind::Neumann && value)
        throw std::invalid_argument(std::string("face_gradient: value supplied at Neumann endpoint ") +
                                    side);
}

}  // namespace

FaceField face_gradient(const Mesh& mesh, const CellField& f, std::optional<double> left_value,
                        std::optional<double> right_value) {
    const int n = mesh.n_cells();
    if (static_cast<int>(f.size()) != n) throw std::invalid_argument("face_gradient: size mismatch");
    check_boundary_value(mesh.left_bc(), left_value, "left");
    check_boundary_value(mesh.right_bc(), right_value, "right");

    const double h = mesh.h();
    FaceField g(n + 1);
    for (int j = 1; j < n; ++j) g[j] = (f[j] - f[j - 1]) / h;
    g[0] = left_value ? (f[0] - *left_value) / (0.5 * h) : 0.0;
    g[n] = right_value ? (*right_value - f[n - 1]) / (0.5 * h) : 0.0;
    return g;
}

CellField cell_divergence(const Mesh& mesh, const FaceField& g) {
    const int n = mesh.n_cells();
    if (static_cast<int>(g.size()) != n + 1)
        throw std::invalid_argument("cell_divergence: size mismatch");
    CellField d(n);
    for (int j = 0; j < n; ++j) d[j] = (g[j + 1] - g[j]) / mesh.h();
    return d;
}

double integrate(const Mesh& mesh, const CellField& f) {
    double s = 0.0;
    for (double v : f) s += v;
    return mesh.h() * s;
}

double l2_norm(const Mesh& mesh, const CellField& f) {
    double s = 0.0;
    for (double v : f) s += v * v;
    return std::sqrt(mesh.h() * s);
}

double weighted_face_square(const Mesh& mesh, const FaceField& g) {
    double s = 0.0;
    for (int k = 0; k < mesh.n_faces(); ++k) s += mesh.face_weight(k) * g[k] * g[k];
    return s;
}

double h1_seminorm(const Mesh& mesh, const CellField& f, std::optional<double> left_value,
                   std::optional<double> right_value) {
    return std::sqrt(weighted_face_square(mesh, face_gradient(mesh, f, left_value, right_value)));
}

}  // namespace pnpf
