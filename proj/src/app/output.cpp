#include "pnpf/app/output.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace pnpf::app {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

DiagnosticsRecord make_record(int step, const State& state, const BoundaryData& bd, const SpeciesParams& params,
                              const Mesh& mesh, const StepReport* report) {
    DiagnosticsRecord r;
    r.step = step;
    r.time = state.time;
    r.H = free_energy(state, bd, params, mesh);
    r.dissipation = dissipation(state, bd, params, mesh);
    const int n = params.n();
    r.min_u.assign(n + 1, 1.0);
    r.max_u.assign(n + 1, 0.0);
    for (int j = 0; j < mesh.n_cells(); ++j) {
        double sum = 0.0;
        for (int i = 0; i <= n; ++i) {
            const double u = state.U[i][j];
            r.min_u[i] = std::min(r.min_u[i], u);
            r.max_u[i] = std::max(r.max_u[i], u);
            sum += u;
        }
        r.max_sum_defect = std::max(r.max_sum_defect, std::abs(sum - 1.0));
    }
    if (report) {
        r.newton_iterations = report->newton_iterations;
        r.tau_used = report->tau_used;
    }
    return r;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(path), columns_(header.size()) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    row(header);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
    if (fields.size() != columns_) throw std::logic_error("csv row width mismatch");
    for (std::size_t k = 0; k < fields.size(); ++k) out_ << (k ? "," : "") << fields[k];
    out_ << '\n';
}

std::vector<std::string> timeseries_header(int n) {
    std::vector<std::string> h = {"step", "time", "H", "dissipation"};
    for (int i = 0; i <= n; ++i) {
        h.push_back("min_u" + std::to_string(i));
        h.push_back("max_u" + std::to_string(i));
    }
    for (const char* c : {"max_sum_defect", "newton_iterations", "tau_used", "relative_entropy"}) h.push_back(c);
    return h;
}

std::vector<std::string> timeseries_row(const DiagnosticsRecord& rec) {
    std::vector<std::string> r = {std::to_string(rec.step), fmt(rec.time), fmt(rec.H), fmt(rec.dissipation)};
    for (std::size_t i = 0; i < rec.min_u.size(); ++i) {
        r.push_back(fmt(rec.min_u[i]));
        r.push_back(fmt(rec.max_u[i]));
    }
    r.push_back(fmt(rec.max_sum_defect));
    r.push_back(std::to_string(rec.newton_iterations));
    r.push_back(fmt(rec.tau_used));
    r.push_back(rec.relative_entropy ? fmt(*rec.relative_entropy) : "");
    return r;
}

void write_snapshot(const std::filesystem::path& path, const State& state, const Mesh& mesh) {
    const int n = state.n();
    std::vector<std::string> header = {"x"};
    for (int i = 0; i <= n; ++i) header.push_back("u_" + std::to_string(i));
    header.push_back("Phi");
    for (int i = 1; i <= n; ++i) header.push_back("w_" + std::to_string(i));
    header.push_back("phi_split");
    CsvWriter csv(path, header);
    for (int j = 0; j < mesh.n_cells(); ++j) {
        std::vector<std::string> row = {fmt(mesh.center(j))};
        for (int i = 0; i <= n; ++i) row.push_back(fmt(state.U[i][j]));
        row.push_back(fmt(state.Phi[j]));
        for (int i = 0; i < n; ++i) row.push_back(fmt(state.w[i][j]));
        row.push_back(fmt(state.phi[j]));
        csv.row(row);
    }
}

}  // namespace pnpf::app
