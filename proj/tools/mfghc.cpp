#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "mfghc/cli.hpp"

namespace fs = std::filesystem;
using namespace mfghc::cli;

int main(int argc, char** argv)
{
    CLI::App app{"Stationary mean field games with power Hamiltonians"};
    app.require_subcommand(1);

    std::string config, which = "coupled", direction = "forward", solution, out;
    std::vector<std::size_t> grids{65, 129, 257};
    double alignment_tol = mfghc::default_alignment_tol;

    auto* solve = app.add_subcommand("solve", "solve one instance with the coupled or the r-Laplace solver");
    solve->add_option("--config", config, "instance config")->required();
    solve->add_option("--which", which, "solver")->check(CLI::IsMember({"coupled", "rlaplace"}));
    solve->add_option("--out", out, "output directory (default: [output] dir)");

    auto* transform = app.add_subcommand("transform", "map a stored solution to the other formulation");
    transform->add_option("--solution", solution, "directory holding solution.csv and summary.json")->required();
    transform->add_option("--direction", direction, "forward (u,m) -> phi or inverse phi -> (u,m)")
        ->check(CLI::IsMember({"forward", "inverse"}));
    transform->add_option("--alignment-tol", alignment_tol, "relative alignment tolerance for forward");
    transform->add_option("--out", out, "output directory")->required();

    auto* verify = app.add_subcommand("verify", "residual reports of a stored solution against a config");
    verify->add_option("--config", config, "instance config")->required();
    verify->add_option("--solution", solution, "directory holding solution.csv and summary.json")->required();
    verify->add_option("--out", out, "directory for verify.json");

    auto* sweep = app.add_subcommand("sweep", "cross-validate both solvers over a list of grids");
    sweep->add_option("--config", config, "instance config")->required();
    sweep->add_option("--grids", grids, "grid sizes")->delimiter(',');
    sweep->add_option("--out", out, "directory for sweep.csv and sweep.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : config_error;
    }

    auto out_dir = [&]() -> std::optional<fs::path> {
        if (out.empty()) return std::nullopt;
        return fs::path(out);
    };
    if (*solve) return cmd_solve({config, which, out_dir()});
    if (*transform) return cmd_transform({solution, direction, out_dir(), alignment_tol});
    if (*verify) return cmd_verify({config, solution, out_dir()});
    return cmd_sweep({config, grids, out_dir()});
}
