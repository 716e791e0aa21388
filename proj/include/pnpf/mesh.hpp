#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace pnpf {

enum class BoundaryKind { Dirichlet, Neumann };

/// Cell- or face-centred samples on a Mesh. The tag keeps cell and face
/// vectors from being mixed up at call sites.
template <class Tag>
class Field {
public:
    Field() = default;
    explicit Field(std::size_t size, double value = 0.0) : values_(size, value) {}
    explicit Field(std::vector<double> values) : values_(std::move(values)) {}

    std::size_t size() const { return values_.size(); }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    auto begin() { return values_.begin(); }
    auto end() { return values_.end(); }
    auto begin() const { return values_.begin(); }
    auto end() const { return values_.end(); }

    std::span<double> span() { return values_; }
    std::span<const double> span() const { return values_; }
    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    bool operator==(const Field&) const = default;

private:
    std::vector<double> values_;
};

struct CellTag {};
struct FaceTag {};
using CellField = Field<CellTag>;
using FaceField = Field<FaceTag>;

/// Uniform 1-D grid on (0, length). Cell j spans [j h, (j+1) h]; face j sits
/// at x = j h, so faces 0 and n_cells are the physical endpoints.
class Mesh {
public:
    Mesh(double length, int n_cells, BoundaryKind left, BoundaryKind right);

    double length() const { return length_; }
    int n_cells() const { return n_cells_; }
    int n_faces() const { return n_cells_ + 1; }
    double h() const { return h_; }
    BoundaryKind left_bc() const { return left_; }
    BoundaryKind right_bc() const { return right_; }
    bool left_dirichlet() const { return left_ == BoundaryKind::Dirichlet; }
    bool right_dirichlet() const { return right_ == BoundaryKind::Dirichlet; }

    double center(int j) const { return (j + 0.5) * h_; }
    double face(int f) const { return f * h_; }
    std::vector<double> centers() const;

    /// Quadrature weight attached to a face gradient: h/2 at the two boundary
    /// faces, h in the interior.
    double face_weight(int f) const { return (f == 0 || f == n_cells_) ? 0.5 * h_ : h_; }

    CellField cell_field(double value = 0.0) const { return CellField(n_cells_, value); }
    FaceField face_field(double value = 0.0) const { return FaceField(n_cells_ + 1, value); }

    template <class Fn>
    CellField sample(Fn&& fn) const {
        CellField f(n_cells_);
        for (int j = 0; j < n_cells_; ++j) f[j] = fn(center(j));
        return f;
    }

private:
    double length_;
    int n_cells_;
    double h_;
    BoundaryKind left_;
    BoundaryKind right_;
};

Mesh build_mesh(double length, int n_cells, BoundaryKind left, BoundaryKind right);

/// Interior faces: (f_j - f_{j-1}) / h. Dirichlet faces: one-sided difference
/// against the endpoint value over h/2. Neumann faces: 0. A value must be
/// given exactly at the Dirichlet endpoints.
FaceField face_gradient(const Mesh& mesh, const CellField& f, std::optional<double> left_value,
                        std::optional<double> right_value);

/// (g_{j+1} - g_j) / h.
CellField cell_divergence(const Mesh& mesh, const FaceField& g);

double integrate(const Mesh& mesh, const CellField& f);
double l2_norm(const Mesh& mesh, const CellField& f);
/// Face-weighted l2 norm of face_gradient(f).
double h1_seminorm(const Mesh& mesh, const CellField& f, std::optional<double> left_value,
                   std::optional<double> right_value);
/// sum_f w_f g_f^2 for an already computed gradient.
double weighted_face_square(const Mesh& mesh, const FaceField& g);

}  // namespace pnpf
