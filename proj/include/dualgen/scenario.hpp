#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dualgen/dual_builder.hpp"
#include "dualgen/monte_carlo.hpp"

namespace dualgen {

enum class Mode { dual, verify_matrix, mc, self_dual_check };

const char* mode_name(Mode m);

// Everything below keeps the source strings so that a scenario serializes
// back to the file it came from.
struct AtomDescription {
    std::optional<std::vector<double>> displacement;
    std::optional<std::vector<double>> target;
    std::string rate = "0";
    std::optional<std::vector<double>> rate_table;  // values at the grid points of axis 0
    int axis = -1;
    bool operator==(const AtomDescription&) const = default;
};

struct JumpDescription {
    std::string family = "atoms";  // atoms | two_sided_exponential | uniform_ball
    std::vector<AtomDescription> atoms;
    bool separable = false;
    bool compensated = false;
    double rate = 1.0;    // named families: total intensity
    double scale = 1.0;   // two_sided_exponential: mean jump size; uniform_ball: radius
    bool operator==(const JumpDescription&) const = default;
};

struct StableDescription {
    double alpha = 1.0;
    std::string amplitude = "1";
    bool operator==(const StableDescription&) const = default;
};

struct LightConeDescription {
    std::string alpha, beta, omega;
    bool operator==(const LightConeDescription&) const = default;
};

struct ProcessDescription {
    std::size_t dim = 1;
    std::optional<std::vector<std::string>> drift;
    std::optional<std::vector<std::vector<std::string>>> diffusion;
    std::optional<LightConeDescription> lightcone;
    std::optional<JumpDescription> jump;
    std::optional<StableDescription> stable;
    std::string domain = "full_space";
    std::string boundary = "none";
    double compensator_cutoff = 1.0;
    bool operator==(const ProcessDescription&) const = default;
};

struct GridDescription {
    std::vector<double> lower, upper, spacing;
    std::vector<std::vector<std::string>> boundary;  // per axis {lower, upper}
    bool operator==(const GridDescription&) const = default;
};

struct PairingDescription {
    std::string kind = "pareto";  // pareto | light_cone | basis | riesz | newtonian | log2d
    std::vector<std::vector<double>> basis;
    double alpha = 1.0;
    bool operator==(const PairingDescription&) const = default;
};

struct Probe {
    std::vector<double> x, y;
    double t = 1.0;
    bool operator==(const Probe&) const = default;
};

struct PathDescription {
    std::size_t n_paths = 1000;
    double dt = 1e-3;
    std::uint64_t seed = 1;
    std::string scheme = "euler_maruyama";
    double tail_truncation_quantile = 0.999;
    bool bridge_correction = false;
    double rate_bound = 0.0;
    bool operator==(const PathDescription&) const = default;
};

struct Tolerances {
    double z_score = 3.5;
    double closed_form = 0.01;
    double residual = 1e-9;
    double oracle = 1e-6;  // relative to ||Q||_inf
    double regularized = 0.02;
    std::size_t margin = 2;
    bool operator==(const Tolerances&) const = default;
};

struct RegularizationDescription {
    double boundary = 0.0;
    std::vector<double> eps;
    std::vector<double> x;
    double t = 1.0;
    std::string closed_form;  // "absorbed_bm" or empty
    bool operator==(const RegularizationDescription&) const = default;
};

struct Scenario {
    std::string name;
    Mode mode = Mode::mc;
    ProcessDescription process;
    std::optional<ProcessDescription> dual_process;  // explicit Y for mc; derived when absent
    std::optional<GridDescription> grid;
    PairingDescription pairing;
    std::vector<Probe> probes;
    std::optional<PathDescription> path_config;
    std::vector<double> times = {0.1, 1.0, 5.0};
    std::string closed_form;  // "bm" | "reflected_absorbed" | empty
    std::optional<RegularizationDescription> regularization;
    Tolerances tolerances;
    std::string output_dir;
    bool operator==(const Scenario&) const = default;
};

// Throws SchemaError carrying the JSON pointer of the offending field and
// ExpressionParseError for malformed coefficient strings.
Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& json_text);
std::string serialize(const Scenario& s);

ProcessSpec build_process(const ProcessDescription& p, const std::optional<GridDescription>& grid);
Grid build_grid(const GridDescription& g);
PathConfig build_path_config(const PathDescription& p);

struct RunOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<double> tol;
    std::optional<std::size_t> paths;
    std::optional<Mode> mode;
};

struct RunResult {
    bool pass = false;
    std::string report_json;  // contents written to report.json
    std::string report_csv;   // contents written to report.csv
    std::string output_dir;
};

// Runs the scenario and writes report.json, report.csv and plot.csv under
// the output directory. pass is the exit-code contract.
RunResult run_scenario(Scenario s, const RunOverrides& o = {});

// Long-format series (scenario, probe_id, side, value, se) from a report.
std::string emit_plot_data(const std::string& report_json);

}  // namespace dualgen
