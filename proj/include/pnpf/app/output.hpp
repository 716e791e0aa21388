#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "pnpf/mesh.hpp"
#include "pnpf/model.hpp"
#include "pnpf/stepper.hpp"

namespace pnpf::app {

/// Shortest-exact "%.17g" rendering.
std::string fmt(double v);

struct DiagnosticsRecord {
    int step = 0;
    double time = 0.0;
    double H = 0.0;
    double dissipation = 0.0;
    std::vector<double> min_u;  ///< per species u_0..u_n
    std::vector<double> max_u;
    double max_sum_defect = 0.0;
    int newton_iterations = 0;
    double tau_used = 0.0;
    std::optional<double> relative_entropy;
};

DiagnosticsRecord make_record(int step, const State& state, const BoundaryData& bd, const SpeciesParams& params,
                              const Mesh& mesh, const StepReport* report);

/// Comma-separated rows with a header line.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);
    void row(const std::vector<std::string>& fields);

private:
    std::ofstream out_;
    std::size_t columns_;
};

std::vector<std::string> timeseries_header(int n);
std::vector<std::string> timeseries_row(const DiagnosticsRecord& rec);

/// x, u_0..u_n, Phi, w_1..w_n, phi_split.
void write_snapshot(const std::filesystem::path& path, const State& state, const Mesh& mesh);

}  // namespace pnpf::app
