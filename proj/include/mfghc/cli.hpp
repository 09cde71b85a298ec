#pragma once

#include <cstdio>
#include <filesystem>
#include <future>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mfghc/io.hpp"
#include "mfghc/oracle.hpp"
#include "mfghc/rlaplace.hpp"
#include "mfghc/transform.hpp"
#include "mfghc/verify.hpp"

namespace mfghc::cli {

enum ExitCode : int {
    ok = 0,
    config_error = 1,
    solver_failure = 2,
    alignment_violation = 3,
    verification_failure = 4,
};

namespace fs = std::filesystem;

inline const char* solution_csv = "solution.csv";
inline const char* summary_json = "summary.json";

namespace detail {

inline fs::path output_dir(const std::optional<fs::path>& flag, const std::string& from_config)
{
    if (flag) return *flag;
    if (!from_config.empty()) return from_config;
    throw ConfigError("no output directory: pass --out or set [output] dir");
}

inline Json coupling_json(const CouplingSpec& c)
{
    Json j{{"kind", c.kind}, {"coefficient", c.coefficient}};
    if (c.kind == "power") j["exponent"] = c.exponent;
    if (c.kind == "linear-plus-potential") j["potential"] = c.potential;
    return j;
}

inline Json header(const std::string& kind, const DomainSpec& domain, const HamiltonianParams& params, std::size_t n,
                   double h)
{
    return {{"solution", kind}, {"n", n}, {"h", h}, {"domain", to_json(domain)}, {"params", to_json(params)}};
}

inline Json stats(const MFGSolution& sol)
{
    return {{"mass_error", std::abs(integrate(sol.m) - 1.0)},
            {"u_min", sol.u.min()},
            {"u_max", sol.u.max()},
            {"m_min", sol.m.min()},
            {"m_max", sol.m.max()}};
}

inline Json stats(const PhiSolution& sol, double r)
{
    std::vector<double> p(sol.phi.size());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::pow(sol.phi[i], r);
    return {{"mass_error", std::abs(integrate(GridFunction(sol.phi.grid(), std::move(p))) - 1.0)},
            {"phi_min", sol.phi.min()},
            {"phi_max", sol.phi.max()}};
}

struct LoadedSolution {
    Json summary;
    Table table;
    std::string kind;
    double lambda = 0.0;
};

inline LoadedSolution load_solution(const fs::path& dir)
{
    LoadedSolution s;
    s.summary = read_json(dir / summary_json);
    s.table = read_csv(dir / solution_csv);
    try {
        s.kind = s.summary.at("solution").get<std::string>();
        s.lambda = s.summary.at("lambda").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError((dir / summary_json).string() + ": " + e.what());
    }
    if (s.kind != "coupled" && s.kind != "rlaplace") throw ConfigError("unknown solution kind '" + s.kind + "'");
    return s;
}

inline Json report_json(const ResidualReport& r, double tol)
{
    Json j{{"kind", to_string(r.kind)}, {"n", r.n}, {"sup_norm", r.sup_norm}, {"l2_norm", r.l2_norm}};
    if (r.relative_sup) j["relative_sup"] = *r.relative_sup;
    j["tolerance"] = tol;
    j["pass"] = r.judged_norm() <= tol;
    return j;
}

inline Table alignment_table(const AlignmentReport& rep)
{
    std::vector<double> x(rep.flux.size());
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = rep.flux.position(k);
    const auto f = rep.flux.values();
    return {{"x", "flux"}, {std::move(x), {f.begin(), f.end()}}};
}

}  // namespace detail

struct SolveOptions {
    fs::path config;
    std::string which = "coupled";
    std::optional<fs::path> out;
};

/// Solves one instance and writes solution.csv and summary.json.
inline int cmd_solve(const SolveOptions& opt, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    InstanceConfig cfg;
    fs::path dir;
    try {
        if (opt.which != "coupled" && opt.which != "rlaplace")
            throw ConfigError("--which must be coupled or rlaplace");
        cfg = load_config(opt.config);
        dir = detail::output_dir(opt.out, cfg.output_dir);
    } catch (const Error& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    }
    const Coupling f = cfg.coupling.build();
    const Grid grid(cfg.domain, cfg.solver.n);
    Json summary = detail::header(opt.which, cfg.domain, cfg.params, grid.size(), grid.spacing());
    summary["coupling"] = detail::coupling_json(cfg.coupling);
    int code = ok;
    try {
        fs::create_directories(dir);
        if (opt.which == "coupled") {
            auto [sol, trace] = solve_coupled(cfg.domain, cfg.params, f, cfg.solver);
            summary["lambda"] = sol.lambda;
            summary["norms"] = detail::stats(sol);
            summary["solver"] = to_json(trace);
            write_csv(dir / solution_csv, to_table(sol));
        } else {
            auto [sol, trace] = solve_rlaplace(cfg.domain, cfg.params, f, cfg.solver);
            summary["lambda"] = sol.lambda;
            summary["norms"] = detail::stats(sol, cfg.params.r());
            summary["solver"] = to_json(trace);
            write_csv(dir / solution_csv, to_table(sol));
        }
    } catch (const SolverError& e) {
        err << "solver failure: " << e.what() << '\n';
        summary["solver"] = to_json(e.trace());
        code = solver_failure;
    } catch (const Error& e) {
        err << "solver failure: " << e.what() << '\n';
        code = solver_failure;
    }
    try {
        write_json(dir / summary_json, summary);
    } catch (const Error& e) {
        err << e.what() << '\n';
        return code == ok ? config_error : code;
    }
    if (code == ok)
        out << opt.which << " n=" << grid.size() << " lambda=" << format_double(summary["lambda"].get<double>())
            << " -> " << dir.string() << '\n';
    return code;
}

struct TransformOptions {
    fs::path solution;
    std::string direction = "forward";
    std::optional<fs::path> out;
    double alignment_tol = default_alignment_tol;
};

/// Maps a stored solution to the other formulation.  Forward needs a coupled
/// solution whose alignment flux is below tolerance; inverse needs an
/// r-Laplace solution.
inline int cmd_transform(const TransformOptions& opt, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    detail::LoadedSolution src;
    DomainSpec domain;
    std::optional<HamiltonianParams> params;
    fs::path dir;
    try {
        if (opt.direction != "forward" && opt.direction != "inverse")
            throw ConfigError("--direction must be forward or inverse");
        if (!opt.out) throw ConfigError("transform needs --out");
        dir = *opt.out;
        src = detail::load_solution(opt.solution);
        const std::string want = opt.direction == "forward" ? "coupled" : "rlaplace";
        if (src.kind != want)
            throw ConfigError(opt.direction + " transform needs a " + want + " solution, got " + src.kind);
        domain = domain_from_json(src.summary.at("domain"));
        params = params_from_json(src.summary.at("params"));
    } catch (const Error& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const nlohmann::json::exception& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    }

    try {
        fs::create_directories(dir);
        Json summary;
        if (opt.direction == "forward") {
            const MFGSolution sol = mfg_from_table(domain, src.table, src.lambda);
            const Grid& grid = sol.u.grid();
            summary = detail::header("rlaplace", domain, *params, grid.size(), grid.spacing());
            try {
                const PhiSolution phi = forward_transform(sol, *params, opt.alignment_tol);
                const AlignmentReport rep = check_gradient_alignment(sol, *params);
                summary["lambda"] = phi.lambda;
                summary["transform"] = {{"direction", "forward"},
                                        {"alignment_sup_norm", rep.sup_norm},
                                        {"alignment_rel_sup_norm", rep.rel_sup_norm},
                                        {"alignment_tol", opt.alignment_tol}};
                write_csv(dir / solution_csv, to_table(phi));
            } catch (const AlignmentError& e) {
                err << "alignment violation: " << e.what() << '\n';
                summary["solution"] = "rejected";
                summary["lambda"] = sol.lambda;
                summary["transform"] = {{"direction", "forward"},
                                        {"alignment_sup_norm", e.report().sup_norm},
                                        {"alignment_rel_sup_norm", e.report().rel_sup_norm},
                                        {"alignment_tol", opt.alignment_tol}};
                write_csv(dir / "alignment.csv", detail::alignment_table(e.report()));
                write_json(dir / summary_json, summary);
                return alignment_violation;
            }
        } else {
            const PhiSolution phi = phi_from_table(domain, src.table, src.lambda);
            const MFGSolution sol = inverse_transform(phi, *params);
            const GridFunction b = reconstruction_field(phi.phi, *params);
            const Grid& grid = phi.phi.grid();
            summary = detail::header("coupled", domain, *params, grid.size(), grid.spacing());
            summary["lambda"] = sol.lambda;
            summary["norms"] = detail::stats(sol);
            summary["transform"] = {{"direction", "inverse"},
                                    {"reconstruction_field_sup_norm", b.sup_norm()},
                                    {"alignment_rel_sup_norm", check_gradient_alignment(sol, *params).rel_sup_norm}};
            write_csv(dir / solution_csv, to_table(sol));
        }
        if (src.summary.contains("coupling")) summary["coupling"] = src.summary["coupling"];
        write_json(dir / summary_json, summary);
        out << opt.direction << " -> " << dir.string() << '\n';
    } catch (const Error& e) {
        err << "transform failed: " << e.what() << '\n';
        return config_error;
    }
    return ok;
}

struct VerifyOptions {
    fs::path config;
    fs::path solution;
    std::optional<fs::path> out;
};

/// Residual reports for a stored solution evaluated against a config.
/// Exit 0 iff every report is within its class tolerance; 4 otherwise,
/// including when the solution does not live on the config's domain.
inline int cmd_verify(const VerifyOptions& opt, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    InstanceConfig cfg;
    detail::LoadedSolution src;
    try {
        cfg = load_config(opt.config);
        src = detail::load_solution(opt.solution);
    } catch (const Error& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    }
    const Coupling f = cfg.coupling.build();
    std::vector<ResidualReport> reports;
    double h = 0.0;
    try {
        if (src.kind == "coupled") {
            const MFGSolution sol = mfg_from_table(cfg.domain, src.table, src.lambda);
            h = sol.u.grid().spacing();
            reports.push_back(hjb_report(sol, cfg.params, f));
            reports.push_back(kolmogorov_report(sol, cfg.params));
            reports.push_back(alignment_report(sol, cfg.params));
            if (sol.m.min() > 0.0) {
                std::vector<double> p(sol.m.size());
                for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::pow(sol.m[i], 1.0 / cfg.params.r());
                reports.push_back(rlaplace_weak_residual({GridFunction(sol.m.grid(), std::move(p)), sol.lambda},
                                                         cfg.params, f));
            }
        } else {
            const PhiSolution phi = phi_from_table(cfg.domain, src.table, src.lambda);
            h = phi.phi.grid().spacing();
            reports.push_back(rlaplace_weak_residual(phi, cfg.params, f));
            const MFGSolution sol = inverse_transform(phi, cfg.params);
            reports.push_back(hjb_report(sol, cfg.params, f));
            reports.push_back(kolmogorov_report(sol, cfg.params));
            reports.push_back(alignment_report(sol, cfg.params));
        }
    } catch (const Error& e) {
        err << "verification failed: " << e.what() << '\n';
        return verification_failure;
    }

    const double tol = class_tolerance(cfg.params, h);
    bool pass = true;
    Json j{{"solution", src.kind}, {"n", src.table.rows()}, {"h", h}, {"params", to_json(cfg.params)}};
    j["reports"] = Json::array();
    for (const auto& r : reports) {
        const bool ok_r = r.judged_norm() <= tol;
        pass = pass && ok_r;
        j["reports"].push_back(detail::report_json(r, tol));
        out << std::left << std::setw(16) << to_string(r.kind) << " sup=" << format_double(r.sup_norm)
            << " l2=" << format_double(r.l2_norm);
        if (r.relative_sup) out << " rel=" << format_double(*r.relative_sup);
        out << " tol=" << format_double(tol) << (ok_r ? " ok" : " FAIL") << '\n';
    }
    j["pass"] = pass;
    if (opt.out) {
        try {
            fs::create_directories(*opt.out);
            write_json(*opt.out / "verify.json", j);
        } catch (const Error& e) {
            err << e.what() << '\n';
        }
    }
    return pass ? ok : verification_failure;
}

struct SweepOptions {
    fs::path config;
    std::vector<std::size_t> grids{65, 129, 257};
    std::optional<fs::path> out;
};

/// Cross-validates the two solvers on each grid and fits convergence orders.
inline int cmd_sweep(const SweepOptions& opt, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    InstanceConfig cfg;
    try {
        cfg = load_config(opt.config);
        if (opt.grids.size() < 2) throw ConfigError("sweep needs at least two grids");
        for (std::size_t n : opt.grids) {
            SolverConfig s = cfg.solver;
            s.n = n;
            s.validate();
        }
    } catch (const Error& e) {
        err << "config error: " << e.what() << '\n';
        return config_error;
    }
    const Coupling f = cfg.coupling.build();
    std::vector<std::future<CrossValidationReport>> jobs;
    for (std::size_t n : opt.grids) {
        SolverConfig s = cfg.solver;
        s.n = n;
        jobs.push_back(std::async(std::launch::async, [&cfg, &f, s] { return cross_validate(cfg.domain, cfg.params, f, s); }));
    }
    std::vector<CrossValidationReport> reps;
    try {
        for (auto& job : jobs) reps.push_back(job.get());
    } catch (const Error& e) {
        err << "solver failure: " << e.what() << '\n';
        return solver_failure;
    }

    Table t{{"n", "h", "density_diff", "lambda_diff", "gradient_diff", "value_diff"}, std::vector<std::vector<double>>(6)};
    for (const auto& r : reps) {
        t.data[0].push_back(static_cast<double>(r.n));
        t.data[1].push_back(r.h);
        t.data[2].push_back(r.density_diff);
        t.data[3].push_back(r.lambda_diff);
        t.data[4].push_back(r.gradient_diff);
        t.data[5].push_back(r.value_diff);
    }
    Json orders;
    out << "n,h,density_diff,lambda_diff,gradient_diff,value_diff\n";
    for (std::size_t i = 0; i < t.rows(); ++i) {
        for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << format_double(t.data[c][i]);
        out << '\n';
    }
    out << "order";
    for (std::size_t c = 2; c < t.columns.size(); ++c) {
        const auto p = fit_order(t.data[1], t.data[c]);
        if (p) orders[t.columns[c]] = *p;
        else orders[t.columns[c]] = "exact";
        out << "," << (p ? format_double(*p) : std::string("exact"));
    }
    out << '\n';
    if (opt.out) {
        try {
            fs::create_directories(*opt.out);
            write_csv(*opt.out / "sweep.csv", t);
            Json j{{"domain", to_json(cfg.domain)}, {"params", to_json(cfg.params)},
                   {"coupling", detail::coupling_json(cfg.coupling)}, {"orders", orders}};
            write_json(*opt.out / "sweep.json", j);
        } catch (const Error& e) {
            err << e.what() << '\n';
            return config_error;
        }
    }
    return ok;
}

}  // namespace mfghc::cli
