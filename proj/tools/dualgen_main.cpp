#include "dualgen/scenario.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    using namespace dualgen;
    CLI::App app{"dualgen: dual processes, matrix checks and Monte Carlo duality estimates"};
    app.require_subcommand(1);

    std::string file;
    RunOverrides o;
    std::uint64_t seed = 0;
    std::string out;
    double tol = 0.0;
    std::size_t paths = 0;
    auto* seed_opt = app.add_option("--seed", seed, "override path_config.seed");
    auto* out_opt = app.add_option("--out", out, "output directory");
    auto* tol_opt = app.add_option("--tol", tol, "override the primary tolerance of the mode");
    auto* paths_opt = app.add_option("--paths", paths, "override path_config.n_paths");
    for (auto* opt : {seed_opt, out_opt, tol_opt, paths_opt}) opt->configurable(false);

    const std::pair<const char*, Mode> modes[] = {{"dual", Mode::dual},
                                                  {"verify-matrix", Mode::verify_matrix},
                                                  {"mc", Mode::mc},
                                                  {"self-dual-check", Mode::self_dual_check}};
    for (const auto& [name, mode] : modes) {
        auto* sub = app.add_subcommand(name, std::string("run a scenario in ") + name + " mode");
        sub->add_option("scenario", file, "scenario JSON file")->required()->check(CLI::ExistingFile);
        sub->fallthrough();
        sub->callback([&o, m = mode] { o.mode = m; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }
    if (*seed_opt) o.seed = seed;
    if (*out_opt) o.out = out;
    if (*tol_opt) o.tol = tol;
    if (*paths_opt) o.paths = paths;

    try {
        const Scenario s = load_scenario(file);
        const RunResult r = run_scenario(s, o);
        std::cout << (r.pass ? "PASS " : "FAIL ") << s.name << " -> " << r.output_dir << "\n";
        return r.pass ? 0 : 1;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
