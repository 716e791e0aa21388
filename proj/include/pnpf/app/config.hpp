#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pnpf/mesh.hpp"
#include "pnpf/model.hpp"
#include "pnpf/poisson_fermi.hpp"
#include "pnpf/stepper.hpp"

namespace pnpf::app {

class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string field, const std::string& message)
        : std::invalid_argument(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

using FlatConfig = std::map<std::string, std::string>;

/// `key = value` lines with dotted keys; '#' starts a comment; list values
/// are comma separated.
FlatConfig parse_flat(std::string_view text);
/// Nested objects become dotted keys, arrays become comma lists.
FlatConfig parse_json(std::string_view text);

enum class InitialProfile { Constant, Step, Gaussian, Equilibrium };

struct InitialSpec {
    InitialProfile profile = InitialProfile::Constant;
    std::vector<double> u;      ///< u_0..u_n; defaults to the Dirichlet data
    std::vector<double> u_alt;  ///< second state for step and gaussian profiles
    double center = 0.5;        ///< as a fraction of the domain length
    double width = 0.1;         ///< as a fraction of the domain length
    double noise = 0.0;
};

struct ManufacturedSpec {
    std::vector<double> a;  ///< base concentrations u_1..u_n
    std::vector<double> b;  ///< amplitudes of the e^{-t} sin mode
    double c = 0.2;         ///< potential amplitude
    double t_end = 0.05;
};

struct RunConfig {
    double length = 1.0;
    int cells = 100;
    BoundaryKind left = BoundaryKind::Dirichlet;
    BoundaryKind right = BoundaryKind::Dirichlet;

    SpeciesParams species;
    BoundarySpec boundary;
    double background = 0.0;
    bool derive_equilibrium = false;  ///< right u^D follows from the left data and right Phi

    InitialSpec initial;
    StepperOptions stepping;
    double t_end = 0.2;

    std::string output_dir = "out";
    int stride = 10;
    std::uint64_t seed = 0;

    ManufacturedSpec mms;
    int refine = 4;  ///< fine/coarse ratio of the weak-strong reference
};

RunConfig config_from_flat(const FlatConfig& flat);
/// Reads a file; JSON when the first non-blank character is '{'.
RunConfig load_config(const std::string& path);
RunConfig parse_config(std::string_view text);

Mesh make_mesh(const RunConfig& config);
BoundaryData make_boundary(const RunConfig& config, const Mesh& mesh);
/// Initial concentrations u_0..u_n on the mesh.
std::vector<CellField> make_initial(const RunConfig& config, const Mesh& mesh, const BoundaryData& bd);

}  // namespace pnpf::app
