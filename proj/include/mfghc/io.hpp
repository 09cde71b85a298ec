#pragma once

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mfghc/coupling.hpp"
#include "mfghc/errors.hpp"
#include "mfghc/expression.hpp"
#include "mfghc/grid.hpp"
#include "mfghc/params.hpp"
#include "mfghc/solver_common.hpp"
#include "mfghc/transform.hpp"

namespace mfghc {

/// Coupling as written in a config file; `build()` turns it into a Coupling.
struct CouplingSpec {
    std::string kind = "zero";
    double coefficient = 1.0;
    double exponent = 1.0;
    std::string potential;

    Coupling build() const
    {
        if (kind == "zero") return Coupling::zero();
        if (kind == "linear") return Coupling::linear(coefficient);
        if (kind == "power") return Coupling::power(coefficient, exponent);
        if (kind == "linear-plus-potential") {
            const Expression v = Expression::parse(potential.empty() ? "0" : potential);
            return Coupling::linear_plus_potential(coefficient, [v](double x) { return v(x); });
        }
        throw ConfigError("unknown coupling kind '" + kind + "'");
    }
};

struct InstanceConfig {
    DomainSpec domain = DomainSpec::interval(0.0, 1.0);
    HamiltonianParams params = HamiltonianParams::quadratic(1.0, 1.0);
    CouplingSpec coupling;
    SolverConfig solver;
    double alignment_tol = default_alignment_tol;
    std::string output_dir;
};

namespace detail {

inline const std::map<std::string, std::set<std::string>>& config_schema()
{
    static const std::map<std::string, std::set<std::string>> schema{
        {"domain", {"kind", "a", "b", "R", "d"}},
        {"params", {"nu", "r", "r_conj", "h0", "l0"}},
        {"coupling", {"kind", "coefficient", "exponent", "potential"}},
        {"solver",
         {"n", "eps_schedule", "step0", "max_iters", "grad_tol", "positivity_floor", "newton_tol",
          "newton_max_iters", "alignment_tol"}},
        {"output", {"dir"}},
    };
    return schema;
}

inline double parse_double(const std::string& key, const std::string& text)
{
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': '" + text + "' is not a number");
    }
    while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
    if (used != text.size()) throw ConfigError("key '" + key + "': '" + text + "' is not a number");
    return v;
}

inline std::size_t parse_count(const std::string& key, const std::string& text)
{
    const double v = parse_double(key, text);
    if (!(v >= 0.0) || v != std::floor(v) || v > 1e12)
        throw ConfigError("key '" + key + "': '" + text + "' is not a nonnegative integer");
    return static_cast<std::size_t>(v);
}

inline std::vector<double> parse_list(const std::string& key, const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
    if (out.empty()) throw ConfigError("key '" + key + "' is empty");
    return out;
}

}  // namespace detail

/// Parses the sectioned key/value config.  Unknown sections or keys are errors.
inline InstanceConfig parse_config(std::istream& in)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(std::string("config syntax: ") + e.what());
    }
    const auto& schema = detail::config_schema();
    for (const auto& [section, body] : tree) {
        auto it = schema.find(section);
        if (it == schema.end()) throw ConfigError("unknown config section [" + section + "]");
        if (!body.data().empty()) throw ConfigError("key '" + section + "' outside a section");
        for (const auto& [key, _] : body)
            if (!it->second.count(key)) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
    }
    auto get = [&](const std::string& path) -> std::optional<std::string> {
        if (auto v = tree.get_optional<std::string>(pt::ptree::path_type(path, '.'))) return *v;
        return std::nullopt;
    };
    auto number = [&](const std::string& path, double fallback) {
        auto v = get(path);
        return v ? detail::parse_double(path, *v) : fallback;
    };

    InstanceConfig cfg;
    try {
        const std::string kind = get("domain.kind").value_or("interval");
        if (kind == "interval") {
            if (get("domain.R") || get("domain.d")) throw ConfigError("interval domain takes a and b, not R or d");
            cfg.domain = DomainSpec::interval(number("domain.a", 0.0), number("domain.b", 1.0));
        } else if (kind == "radial") {
            if (get("domain.a") || get("domain.b")) throw ConfigError("radial domain takes R and d, not a or b");
            const double d = number("domain.d", 2.0);
            if (d != std::floor(d)) throw ConfigError("domain.d must be an integer");
            cfg.domain = DomainSpec::radial_ball(number("domain.R", 1.0), static_cast<int>(d));
        } else {
            throw ConfigError("domain.kind must be interval or radial, got '" + kind + "'");
        }

        const bool has_r = get("params.r").has_value();
        const bool has_rc = get("params.r_conj").has_value();
        if (has_r == has_rc) throw ConfigError("give exactly one of params.r and params.r_conj");
        const bool has_h0 = get("params.h0").has_value();
        const bool has_l0 = get("params.l0").has_value();
        if (has_h0 == has_l0) throw ConfigError("give exactly one of params.h0 and params.l0");
        const double nu = number("params.nu", 1.0);
        HamiltonianParams::Exponent exponent = has_r ? HamiltonianParams::Exponent(LagrangianExponent{number("params.r", 0)})
                                                     : HamiltonianExponent{number("params.r_conj", 0)};
        HamiltonianParams::Coefficient coefficient =
            has_h0 ? HamiltonianParams::Coefficient(HamiltonianCoefficient{number("params.h0", 0)})
                   : LagrangianCoefficient{number("params.l0", 0)};
        cfg.params = HamiltonianParams(nu, exponent, coefficient);

        cfg.coupling.kind = get("coupling.kind").value_or("zero");
        cfg.coupling.coefficient = number("coupling.coefficient", 1.0);
        cfg.coupling.exponent = number("coupling.exponent", 1.0);
        cfg.coupling.potential = get("coupling.potential").value_or("");
        if (!cfg.coupling.potential.empty() && cfg.coupling.kind != "linear-plus-potential")
            throw ConfigError("coupling.potential only applies to linear-plus-potential");
        cfg.coupling.build();

        SolverConfig& s = cfg.solver;
        if (auto v = get("solver.n")) s.n = detail::parse_count("solver.n", *v);
        if (auto v = get("solver.eps_schedule")) s.eps_schedule = detail::parse_list("solver.eps_schedule", *v);
        s.step0 = number("solver.step0", s.step0);
        if (auto v = get("solver.max_iters")) s.max_iters = detail::parse_count("solver.max_iters", *v);
        s.grad_tol = number("solver.grad_tol", s.grad_tol);
        s.positivity_floor = number("solver.positivity_floor", s.positivity_floor);
        s.newton_tol = number("solver.newton_tol", s.newton_tol);
        if (auto v = get("solver.newton_max_iters"))
            s.newton_max_iters = detail::parse_count("solver.newton_max_iters", *v);
        cfg.alignment_tol = number("solver.alignment_tol", cfg.alignment_tol);
        if (!(cfg.alignment_tol > 0.0)) throw ConfigError("solver.alignment_tol must be positive");
        s.validate();

        cfg.output_dir = get("output.dir").value_or("");
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

inline InstanceConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    return parse_config(in);
}

/// Column table with a header row; values printed with 17 significant digits.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> data;

    const std::vector<double>& column(const std::string& name) const
    {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return data[i];
        throw ConfigError("table has no column '" + name + "'");
    }
    bool has(const std::string& name) const
    {
        for (const auto& c : columns)
            if (c == name) return true;
        return false;
    }
    std::size_t rows() const { return data.empty() ? 0 : data.front().size(); }
};

inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_csv(std::ostream& out, const Table& t)
{
    for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
    out << '\n';
    for (std::size_t i = 0; i < t.rows(); ++i) {
        for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << format_double(t.data[c][i]);
        out << '\n';
    }
}

inline void write_csv(const std::filesystem::path& path, const Table& t)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    write_csv(out, t);
}

inline Table read_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    Table t;
    std::string line;
    if (!std::getline(in, line)) throw ConfigError(path.string() + ": empty file");
    {
        std::stringstream ss(line);
        std::string name;
        while (std::getline(ss, name, ',')) t.columns.push_back(name);
    }
    t.data.resize(t.columns.size());
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t c = 0;
        while (std::getline(ss, cell, ',')) {
            if (c >= t.columns.size()) throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": too many fields");
            t.data[c].push_back(detail::parse_double(t.columns[c], cell));
            ++c;
        }
        if (c != t.columns.size()) throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": too few fields");
    }
    return t;
}

inline Table to_table(const MFGSolution& sol)
{
    const auto u = sol.u.values();
    const auto m = sol.m.values();
    return {{"x", "u", "m"}, {sol.u.grid().nodes(), {u.begin(), u.end()}, {m.begin(), m.end()}}};
}

inline Table to_table(const PhiSolution& sol)
{
    const auto phi = sol.phi.values();
    return {{"x", "phi"}, {sol.phi.grid().nodes(), {phi.begin(), phi.end()}}};
}

/// Builds the grid a table lives on and checks its x column against it.
inline Grid grid_for_table(const DomainSpec& domain, const Table& t)
{
    if (t.rows() < 3) throw ConfigError("solution table needs at least 3 rows");
    Grid grid(domain, t.rows());
    const auto& x = t.column("x");
    const double scale = std::max(std::abs(domain.left()), std::abs(domain.right()));
    for (std::size_t i = 0; i < x.size(); ++i)
        if (std::abs(x[i] - grid.node(i)) > 1e-12 * std::max(1.0, scale))
            throw ShapeError("solution nodes do not match " + domain.describe() + " at row " + std::to_string(i + 1));
    return grid;
}

inline MFGSolution mfg_from_table(const DomainSpec& domain, const Table& t, double lambda)
{
    Grid grid = grid_for_table(domain, t);
    return {GridFunction(grid, t.column("u")), GridFunction(grid, t.column("m")), lambda};
}

inline PhiSolution phi_from_table(const DomainSpec& domain, const Table& t, double lambda)
{
    Grid grid = grid_for_table(domain, t);
    return {GridFunction(grid, t.column("phi")), lambda};
}

using Json = nlohmann::ordered_json;

inline Json to_json(const DomainSpec& d)
{
    if (d.is_radial()) return {{"kind", "radial"}, {"R", d.radius}, {"d", d.dim}};
    return {{"kind", "interval"}, {"a", d.a}, {"b", d.b}};
}

inline DomainSpec domain_from_json(const Json& j)
{
    try {
        const std::string kind = j.at("kind");
        if (kind == "interval") return DomainSpec::interval(j.at("a"), j.at("b"));
        if (kind == "radial") return DomainSpec::radial_ball(j.at("R"), j.at("d").get<int>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("summary domain: ") + e.what());
    }
    throw ConfigError("summary domain: unknown kind");
}

inline Json to_json(const HamiltonianParams& p)
{
    return {{"nu", p.nu()}, {"r", p.r()}, {"r_conj", p.r_conj()}, {"h0", p.h0()}, {"mu", p.mu()}};
}

inline HamiltonianParams params_from_json(const Json& j)
{
    try {
        return HamiltonianParams(j.at("nu").get<double>(), LagrangianExponent{j.at("r").get<double>()},
                                 HamiltonianCoefficient{j.at("h0").get<double>()});
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("summary params: ") + e.what());
    }
}

inline Json to_json(const SolveTrace& trace)
{
    Json stages = Json::array();
    for (const auto& st : trace.stages) {
        stages.push_back({{"eps", st.eps},
                          {"theta", st.theta},
                          {"iterations", st.iterations},
                          {"gradient_fallbacks", st.gradient_fallbacks},
                          {"residual", st.residual.empty() ? 0.0 : st.residual.back()}});
    }
    return {{"converged", trace.converged},
            {"iterations", trace.total_iterations()},
            {"final_residual", trace.final_residual},
            {"rounding_limited", trace.rounding_limited},
            {"rounding_floor", trace.rounding_floor},
            {"uniqueness_guaranteed", trace.uniqueness_guaranteed},
            {"first_order_only", trace.first_order_only},
            {"message", trace.message},
            {"stages", stages}};
}

inline Json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

inline void write_json(const std::filesystem::path& path, const Json& j)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

}  // namespace mfghc
