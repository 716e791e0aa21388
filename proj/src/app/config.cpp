#include "pnpf/app/config.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

namespace pnpf::app {

namespace {

/// Library validators report "field: message"; keep the field separately.
template <class Fn>
void rethrow_as_config_error(Fn&& fn) {
    try {
        fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        const std::string what = e.what();
        const auto colon = what.find(": ");
        if (colon == std::string::npos) throw ConfigError("config", what);
        throw ConfigError(what.substr(0, colon), what.substr(colon + 2));
    }
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

void flatten(const nlohmann::json& j, const std::string& prefix, FlatConfig& out) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
        return;
    }
    std::string value;
    if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i) value += ",";
            value += j[i].is_string() ? j[i].get<std::string>() : j[i].dump();
        }
    } else if (j.is_string()) {
        value = j.get<std::string>();
    } else {
        value = j.dump();
    }
    out[prefix] = value;
}

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "mesh.length", "mesh.cells", "mesh.left", "mesh.right",
        "species.D", "species.z", "species.lambda", "species.ell",
        "species.reaction", "species.reaction.k", "species.reaction.i", "species.reaction.j",
        "boundary.left.u", "boundary.left.phi", "boundary.right.u", "boundary.right.phi",
        "boundary.f", "boundary.equilibrium",
        "initial.profile", "initial.u", "initial.u_alt", "initial.center", "initial.width", "initial.noise",
        "stepping.tau", "stepping.t_end", "stepping.eps", "stepping.coupling", "stepping.newton_tol",
        "stepping.max_iter", "stepping.max_halvings",
        "output.dir", "output.stride", "seed",
        "mms.a", "mms.b", "mms.c", "mms.t_end", "weak_strong.refine"};
    return keys;
}

class Reader {
public:
    explicit Reader(const FlatConfig& flat) : flat_(flat) {
        for (const auto& [k, v] : flat)
            if (!known_keys().count(k)) throw ConfigError(k, "unknown key");
    }

    bool has(const std::string& key) const { return flat_.count(key) > 0; }
    const std::string& raw(const std::string& key) const { return flat_.at(key); }

    double number(const std::string& key, double fallback) const {
        return has(key) ? to_number(key, raw(key)) : fallback;
    }
    int integer(const std::string& key, int fallback) const {
        if (!has(key)) return fallback;
        const double v = number(key, 0.0);
        if (v != std::floor(v) || std::abs(v) > 2e9) throw ConfigError(key, "expected an integer");
        return static_cast<int>(v);
    }
    std::string text(const std::string& key, const std::string& fallback) const {
        return has(key) ? raw(key) : fallback;
    }
    bool flag(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const auto& v = raw(key);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw ConfigError(key, "expected true or false");
    }
    std::vector<double> list(const std::string& key) const {
        std::vector<double> out;
        if (!has(key)) return out;
        std::stringstream ss(raw(key));
        std::string item;
        while (std::getline(ss, item, ',')) out.push_back(to_number(key, trim(item)));
        return out;
    }

private:
    static double to_number(const std::string& key, const std::string& s) {
        std::size_t pos = 0;
        double v = 0.0;
        try {
            v = std::stod(s, &pos);
        } catch (const std::exception&) {
            throw ConfigError(key, "expected a number, got '" + s + "'");
        }
        if (pos != s.size() || !std::isfinite(v)) throw ConfigError(key, "expected a number, got '" + s + "'");
        return v;
    }

    const FlatConfig& flat_;
};

BoundaryKind boundary_kind(const Reader& r, const std::string& key) {
    const auto v = r.text(key, "dirichlet");
    if (v == "dirichlet") return BoundaryKind::Dirichlet;
    if (v == "neumann") return BoundaryKind::Neumann;
    throw ConfigError(key, "expected dirichlet or neumann");
}

}  // namespace

FlatConfig parse_flat(std::string_view text) {
    FlatConfig out;
    std::stringstream ss{std::string(text)};
    std::string line;
    int number = 0;
    while (std::getline(ss, line)) {
        ++number;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const auto content = trim(line);
        if (content.empty()) continue;
        const auto eq = content.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(number), "expected 'key = value'");
        const auto key = trim(std::string_view(content).substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(number), "empty key");
        out[key] = trim(std::string_view(content).substr(eq + 1));
    }
    return out;
}

FlatConfig parse_json(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("json", e.what());
    }
    if (!j.is_object()) throw ConfigError("json", "top level must be an object");
    FlatConfig out;
    flatten(j, "", out);
    return out;
}

RunConfig config_from_flat(const FlatConfig& flat) {
    const Reader r(flat);
    RunConfig c;

    c.length = r.number("mesh.length", 1.0);
    c.cells = r.integer("mesh.cells", 100);
    c.left = boundary_kind(r, "mesh.left");
    c.right = boundary_kind(r, "mesh.right");
    if (!(c.length > 0.0)) throw ConfigError("mesh.length", "must be positive");
    if (c.cells < 2) throw ConfigError("mesh.cells", "must be at least 2");
    if (c.left == BoundaryKind::Neumann && c.right == BoundaryKind::Neumann)
        throw ConfigError("mesh.left", "at least one endpoint must be Dirichlet");

    auto& sp = c.species;
    sp.D = r.list("species.D");
    sp.z = r.list("species.z");
    sp.lambda = r.number("species.lambda", 1.0);
    sp.ell = r.number("species.ell", 0.0);
    const auto reaction = r.text("species.reaction", "none");
    if (reaction == "annihilation") {
        sp.reaction.kind = ReactionKind::BinaryAnnihilation;
        sp.reaction.rate = r.number("species.reaction.k", 1.0);
        sp.reaction.first = r.integer("species.reaction.i", 1);
        sp.reaction.second = r.integer("species.reaction.j", 2);
    } else if (reaction != "none") {
        throw ConfigError("species.reaction", "expected none or annihilation");
    }
    rethrow_as_config_error([&] { sp.validate(); });
    const int n = sp.n();

    c.background = r.number("boundary.f", 0.0);
    c.derive_equilibrium = r.flag("boundary.equilibrium", false);
    const bool ld = c.left == BoundaryKind::Dirichlet;
    const bool rd = c.right == BoundaryKind::Dirichlet;
    if (ld) {
        if (!r.has("boundary.left.u")) throw ConfigError("boundary.left.u", "required at a Dirichlet endpoint");
        c.boundary.left = DirichletSpec{r.list("boundary.left.u"), r.number("boundary.left.phi", 0.0)};
    } else if (r.has("boundary.left.u")) {
        throw ConfigError("boundary.left.u", "not allowed at a Neumann endpoint");
    }
    if (rd) {
        DirichletSpec right{r.list("boundary.right.u"), r.number("boundary.right.phi", 0.0)};
        if (c.derive_equilibrium) {
            if (!ld) throw ConfigError("boundary.equilibrium", "needs Dirichlet data at both endpoints");
            if (r.has("boundary.right.u"))
                throw ConfigError("boundary.right.u", "derived from the left data when boundary.equilibrium is set");
            right.u = {};
        } else if (!r.has("boundary.right.u")) {
            throw ConfigError("boundary.right.u", "required at a Dirichlet endpoint");
        }
        c.boundary.right = right;
    } else if (r.has("boundary.right.u")) {
        throw ConfigError("boundary.right.u", "not allowed at a Neumann endpoint");
    }
    for (const char* side : {"left", "right"}) {
        const auto& d = std::string(side) == "left" ? c.boundary.left : c.boundary.right;
        if (!d || d->u.empty()) continue;
        const std::string key = std::string("boundary.") + side + ".u";
        if (static_cast<int>(d->u.size()) != n + 1)
            throw ConfigError(key, "expected " + std::to_string(n + 1) + " values (u_0..u_n)");
        double sum = 0.0;
        for (double u : d->u) {
            if (!(u > 0.0 && u < 1.0)) throw ConfigError(key, "values must lie strictly in (0,1)");
            sum += u;
        }
        if (std::abs(sum - 1.0) > 1e-10) throw ConfigError(key, "values must sum to 1");
    }
    if (c.derive_equilibrium) c.boundary.right->u = equilibrium_partner(*c.boundary.left, c.boundary.right->Phi, sp);

    auto& ini = c.initial;
    const auto profile = r.text("initial.profile", "constant");
    if (profile == "constant") ini.profile = InitialProfile::Constant;
    else if (profile == "step") ini.profile = InitialProfile::Step;
    else if (profile == "gaussian") ini.profile = InitialProfile::Gaussian;
    else if (profile == "equilibrium") ini.profile = InitialProfile::Equilibrium;
    else throw ConfigError("initial.profile", "expected constant, step, gaussian or equilibrium");
    ini.u = r.list("initial.u");
    ini.u_alt = r.list("initial.u_alt");
    ini.center = r.number("initial.center", 0.5);
    ini.width = r.number("initial.width", 0.1);
    ini.noise = r.number("initial.noise", 0.0);
    for (const char* key : {"initial.u", "initial.u_alt"}) {
        const auto& v = std::string(key) == "initial.u" ? ini.u : ini.u_alt;
        if (v.empty()) continue;
        if (static_cast<int>(v.size()) != n + 1)
            throw ConfigError(key, "expected " + std::to_string(n + 1) + " values (u_0..u_n)");
        double sum = 0.0;
        for (double u : v) {
            if (!(u >= 0.0 && u <= 1.0)) throw ConfigError(key, "values must lie in [0,1]");
            sum += u;
        }
        if (std::abs(sum - 1.0) > 1e-10) throw ConfigError(key, "values must sum to 1");
    }
    if ((ini.profile == InitialProfile::Step || ini.profile == InitialProfile::Gaussian) && ini.u_alt.empty())
        throw ConfigError("initial.u_alt", "required by the " + profile + " profile");
    if (ini.profile == InitialProfile::Equilibrium && !c.boundary.left && !c.boundary.right)
        throw ConfigError("initial.profile", "equilibrium needs Dirichlet data");
    if (!(ini.width > 0.0)) throw ConfigError("initial.width", "must be positive");
    if (!(ini.noise >= 0.0 && ini.noise < 1.0)) throw ConfigError("initial.noise", "must lie in [0,1)");

    auto& st = c.stepping;
    st.tau = r.number("stepping.tau", 1e-3);
    c.t_end = r.number("stepping.t_end", 0.2);
    st.eps = r.number("stepping.eps", 1e-8);
    const auto coupling = r.text("stepping.coupling", "coupled");
    if (coupling == "coupled") st.coupling = Coupling::FullyCoupled;
    else if (coupling == "fixed-point") st.coupling = Coupling::FixedPointDecoupled;
    else throw ConfigError("stepping.coupling", "expected coupled or fixed-point");
    st.newton.abs_tol = r.number("stepping.newton_tol", 1e-10);
    st.newton.max_iter = r.integer("stepping.max_iter", 50);
    st.max_step_halvings = r.integer("stepping.max_halvings", 8);
    rethrow_as_config_error([&] { st.validate(); });
    if (!(c.t_end >= 0.0)) throw ConfigError("stepping.t_end", "must be nonnegative");

    c.output_dir = r.text("output.dir", "out");
    c.stride = r.integer("output.stride", 10);
    if (c.stride < 1) throw ConfigError("output.stride", "must be >= 1");
    const int seed = r.integer("seed", 0);
    if (seed < 0) throw ConfigError("seed", "must be nonnegative");
    c.seed = static_cast<std::uint64_t>(seed);

    c.mms.a = r.list("mms.a");
    c.mms.b = r.list("mms.b");
    if (c.mms.a.empty()) c.mms.a.assign(n, 0.6 / n);
    if (c.mms.b.empty())
        for (int i = 0; i < n; ++i) c.mms.b.push_back((i % 2 ? -0.05 : 0.1) / n);
    if (static_cast<int>(c.mms.a.size()) != n) throw ConfigError("mms.a", "expected n values");
    if (static_cast<int>(c.mms.b.size()) != n) throw ConfigError("mms.b", "expected n values");
    double lo = 0.0, hi = 0.0;
    for (int i = 0; i < n; ++i) {
        if (!(c.mms.a[i] - std::abs(c.mms.b[i]) > 0.0)) throw ConfigError("mms.b", "profile leaves (0,1)");
        lo += c.mms.a[i] - std::abs(c.mms.b[i]);
        hi += c.mms.a[i] + std::abs(c.mms.b[i]);
    }
    if (!(hi < 1.0) || !(lo > 0.0)) throw ConfigError("mms.a", "profile leaves the simplex");
    c.mms.c = r.number("mms.c", 0.2);
    c.mms.t_end = r.number("mms.t_end", 0.05);
    if (!(c.mms.t_end > 0.0)) throw ConfigError("mms.t_end", "must be positive");
    c.refine = r.integer("weak_strong.refine", 4);
    if (c.refine < 2) throw ConfigError("weak_strong.refine", "must be >= 2");
    return c;
}

RunConfig parse_config(std::string_view text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    const bool json = first != std::string_view::npos && text[first] == '{';
    return config_from_flat(json ? parse_json(text) : parse_flat(text));
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

Mesh make_mesh(const RunConfig& config) { return Mesh(config.length, config.cells, config.left, config.right); }

BoundaryData make_boundary(const RunConfig& config, const Mesh& mesh) {
    return make_boundary_data(config.boundary, mesh.cell_field(config.background), config.species, mesh);
}

std::vector<CellField> make_initial(const RunConfig& config, const Mesh& mesh, const BoundaryData& bd) {
    const int n = config.species.n();
    const int cells = mesh.n_cells();
    const auto& ini = config.initial;
    std::vector<CellField> U(n + 1, CellField(cells));

    if (ini.profile == InitialProfile::Equilibrium) {
        const State eq = solve_equilibrium(bd, config.species, mesh, config.stepping.newton);
        U = eq.U;
    } else {
        std::vector<double> base = ini.u;
        if (base.empty()) base = bd.left ? bd.left->u : bd.right->u;
        const double c = ini.center * config.length;
        const double w = ini.width * config.length;
        for (int j = 0; j < cells; ++j) {
            const double x = mesh.center(j);
            double s = 0.0;
            if (ini.profile == InitialProfile::Step) s = x < c ? 0.0 : 1.0;
            if (ini.profile == InitialProfile::Gaussian) s = std::exp(-0.5 * (x - c) * (x - c) / (w * w));
            for (int i = 0; i <= n; ++i) U[i][j] = s == 0.0 ? base[i] : (1.0 - s) * base[i] + s * ini.u_alt[i];
        }
    }

    if (ini.noise > 0.0) {
        std::mt19937_64 gen(config.seed);
        for (int j = 0; j < cells; ++j) {
            double sum = 0.0;
            for (int i = 0; i <= n; ++i) {
                const double r = static_cast<double>(gen() >> 11) * 0x1.0p-53;
                U[i][j] *= 1.0 + ini.noise * (2.0 * r - 1.0);
                sum += U[i][j];
            }
            for (int i = 0; i <= n; ++i) U[i][j] /= sum;
        }
    }
    return U;
}

}  // namespace pnpf::app
