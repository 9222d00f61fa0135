#include "dualgen/scenario.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <sys/wait.h>

using namespace dualgen;
namespace fs = std::filesystem;

namespace {

std::string scenario_path(const std::string& name) { return std::string(DUALGEN_SCENARIO_DIR) + "/" + name + ".json"; }

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string error_of(const std::string& text, ErrorCode expect) {
    try {
        parse_scenario(text);
    } catch (const Error& e) {
        CHECK(e.code() == expect);
        return e.what();
    }
    FAIL("expected an error");
    return {};
}

std::string tmp_dir(const std::string& leaf) {
    const auto p = fs::temp_directory_path() / "dualgen_test_scenario" / leaf;
    fs::remove_all(p);
    return p.string();
}

Scenario small_bm() {
    Scenario s = load_scenario(scenario_path("bm_self_duality"));
    s.path_config->n_paths = 4000;
    s.path_config->dt = 0.01;
    s.tolerances.closed_form = 0.05;
    return s;
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("minimal BM scenario") {
    const Scenario s = load_scenario(scenario_path("minimal_bm"));
    CHECK(s.mode == Mode::mc);
    const ProcessSpec p = build_process(s.process, s.grid);
    const Vec x = Vec::Constant(1, 0.3);
    CHECK(p.diffusion_at(0, 0, x) == 1.0);
    CHECK(p.drift_at(0, x) == 0.0);
    REQUIRE(s.path_config);
    CHECK(s.path_config->seed == 7);
}

TEST_CASE("schema errors carry JSON pointers") {
    const std::string head = R"({"name":"t","mode":"mc","path_config":{},)";
    SUBCASE("dangling operator") {
        const auto m = error_of(head + R"("process":{"drift":["x1^2 +"],"diffusion":[["1"]]},"probes":[{"x":[0],"y":[0]}]})",
                                ErrorCode::ExpressionParseError);
        CHECK(m.find("/process/drift/0") != std::string::npos);
        CHECK(m.find("offset 5") != std::string::npos);
    }
    SUBCASE("probe outside the grid box") {
        const auto m = error_of(head + R"("process":{"diffusion":[["1"]]},"grid":{"lower":[-1],"upper":[1],"spacing":[0.5]},
                                 "probes":[{"x":[0],"y":[0]},{"x":[0],"y":[3]}]})",
                                ErrorCode::SchemaError);
        CHECK(m.find("/probes/1") != std::string::npos);
    }
    SUBCASE("unknown field") {
        const auto m = error_of(head + R"("process":{"drfit":["0"]},"probes":[]})", ErrorCode::SchemaError);
        CHECK(m.find("/process/drfit") != std::string::npos);
    }
    SUBCASE("missing mode-required field") {
        const auto m = error_of(R"({"name":"t","mode":"verify-matrix","process":{"drift":["1"]}})", ErrorCode::SchemaError);
        CHECK(m.find("/grid") != std::string::npos);
    }
    SUBCASE("wrong type") {
        const auto m = error_of(head + R"("process":{"diffusion":[["1"]]},"probes":[{"x":[0],"y":["a"]}]})",
                                ErrorCode::SchemaError);
        CHECK(m.find("/probes/0/y/0") != std::string::npos);
    }
    SUBCASE("bad JSON") { error_of("{", ErrorCode::SchemaError); }
}

TEST_CASE("shipped scenarios round-trip") {
    for (const auto& entry : fs::directory_iterator(DUALGEN_SCENARIO_DIR)) {
        if (entry.path().extension() != ".json") continue;
        CAPTURE(entry.path().string());
        const Scenario s = load_scenario(entry.path().string());
        const Scenario back = parse_scenario(serialize(s));
        CHECK(back == s);
        CHECK(serialize(back) == serialize(s));
    }
}

TEST_CASE("round-trip property over generated scenarios") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
    const char* exprs[] = {"0", "x1", "0.5*x1^2 + 1", "exp(-abs(x1))", "max(x1, 0.25)", "1 + 0.5*sin(x1)"};
    for (int rep = 0; rep < 60; ++rep) {
        Scenario s;
        s.name = "gen" + std::to_string(rep);
        const std::size_t d = 1 + pick(2);
        s.process.dim = d;
        auto e = [&] {
            std::string t = exprs[pick(6)];
            if (d == 2 && pick(2)) t += " + x2";
            return t;
        };
        if (pick(2)) {
            s.process.drift.emplace();
            for (std::size_t i = 0; i < d; ++i) s.process.drift->push_back(e());
        }
        s.process.diffusion = std::vector<std::vector<std::string>>(d, std::vector<std::string>(d, "0"));
        for (std::size_t i = 0; i < d; ++i) (*s.process.diffusion)[i][i] = e();
        if (pick(2)) {
            JumpDescription j;
            AtomDescription a;
            a.displacement = std::vector<double>(d, U(rng));
            a.rate = e();
            j.atoms.push_back(a);
            AtomDescription b;
            b.target = std::vector<double>(d, 0.0);
            b.rate_table = std::vector<double>{U(rng) + 1.0, 2.0};
            j.atoms.push_back(b);
            j.compensated = pick(2);
            s.process.jump = j;
        }
        if (d == 1 && pick(3) == 0) {
            s.process.domain = "half_line";
            s.process.boundary = pick(2) ? "reflect" : "absorb";
        }
        GridDescription g{std::vector<double>(d, -1.0), std::vector<double>(d, 1.0), std::vector<double>(d, 0.25), {}};
        if (pick(2)) g.boundary = std::vector<std::vector<std::string>>(d, {"reflect", "truncate_mass"});
        s.grid = g;
        const std::size_t np = pick(4);
        for (std::size_t i = 0; i < np; ++i)
            s.probes.push_back({std::vector<double>(d, U(rng)), std::vector<double>(d, U(rng)), 0.5 + std::abs(U(rng))});
        s.mode = np ? Mode::mc : Mode::dual;
        if (np) {
            PathDescription pc;
            pc.n_paths = 100 + pick(1000);
            pc.dt = 1e-3 * (1 + static_cast<double>(pick(9)));
            pc.seed = rng();
            pc.bridge_correction = pick(2);
            s.path_config = pc;
        }
        s.pairing.alpha = 0.5 + 0.1 * static_cast<double>(pick(5));
        s.tolerances.z_score = 3.0 + std::abs(U(rng));
        s.tolerances.margin = pick(5);
        s.times = {std::abs(U(rng)), 1.0};
        if (pick(2)) s.output_dir = "out/" + s.name;
        const Scenario back = parse_scenario(serialize(s));
        CHECK(back == s);
    }
}

TEST_CASE("exit-code contract on a known-failing probe") {
    Scenario s = small_bm();
    s.probes.resize(2);
    const auto ok = run_scenario(s, {std::nullopt, tmp_dir("ok"), std::nullopt, std::nullopt, std::nullopt});
    CHECK(ok.pass);

    // a declared dual with the wrong drift breaks the identity on the probe
    Scenario bad = s;
    bad.dual_process = bad.process;
    bad.dual_process->drift = std::vector<std::string>{"1"};
    const auto fail = run_scenario(bad, {std::nullopt, tmp_dir("bad"), std::nullopt, std::nullopt, std::nullopt});
    CHECK_FALSE(fail.pass);
    CHECK(fail.report_json.find("\"z_pass\": false") != std::string::npos);

    // same run, closed form tolerance below the Monte Carlo error
    Scenario tight = s;
    tight.tolerances.closed_form = 1e-9;
    CHECK_FALSE(run_scenario(tight, {std::nullopt, tmp_dir("tight"), std::nullopt, std::nullopt, std::nullopt}).pass);
}

TEST_CASE("non-monotone chain names the negative dual entry") {
    const Scenario s = load_scenario(scenario_path("nonmonotone_chain"));
    const auto r = run_scenario(s, {std::nullopt, tmp_dir("chain"), std::nullopt, std::nullopt, std::nullopt});
    CHECK_FALSE(r.pass);
    CHECK(r.report_json.find("negative_entry") != std::string::npos);
    CHECK(r.report_json.find("\"residual_pass\": true") != std::string::npos);
    CHECK(lines(r.report_csv) == 1 + s.times.size());
}

TEST_CASE("symmetric self-dual scenario") {
    const Scenario s = load_scenario(scenario_path("self_dual_symmetric"));
    const auto r = run_scenario(s, {std::nullopt, tmp_dir("selfdual"), std::nullopt, std::nullopt, std::nullopt});
    CHECK(r.pass);
    CHECK(r.report_json.find("\"self_dual\": true") != std::string::npos);

    Scenario off = s;
    off.process.drift = std::vector<std::string>{"2*x1"};
    const auto r2 = run_scenario(off, {std::nullopt, tmp_dir("selfdual2"), std::nullopt, std::nullopt, std::nullopt});
    CHECK_FALSE(r2.pass);
}

TEST_CASE("dual mode reports admissibility and the oracle gap") {
    const auto down = run_scenario(load_scenario(scenario_path("jump_dual_down")),
                                   {std::nullopt, tmp_dir("down"), std::nullopt, std::nullopt, std::nullopt});
    CHECK(down.pass);
    CHECK(down.report_json.find("\"oracle\"") != std::string::npos);
    const auto up = run_scenario(load_scenario(scenario_path("jump_dual_inadmissible")),
                                 {std::nullopt, tmp_dir("up"), std::nullopt, std::nullopt, std::nullopt});
    CHECK_FALSE(up.pass);
    CHECK(up.report_json.find("monotonicity_below") != std::string::npos);
}

TEST_CASE("plot data") {
    Scenario s = small_bm();
    const auto dir = tmp_dir("plot");
    const auto r = run_scenario(s, {std::nullopt, dir, std::nullopt, std::nullopt, std::nullopt});
    const std::string plot = slurp(fs::path(dir) / "plot.csv");
    CHECK(lines(plot) == 1 + 2 * s.probes.size());
    CHECK(plot.rfind("scenario,probe_id,side,value,se\n", 0) == 0);
    CHECK(lines(r.report_csv) == 1 + s.probes.size());

    CHECK(emit_plot_data(R"({"scenario":"e","probes":[]})") == "scenario,probe_id,side,value,se\n");
    CHECK(emit_plot_data(R"({"scenario":"e"})") == "scenario,probe_id,side,value,se\n");
}

TEST_CASE("outputs are byte-identical across runs and worker counts") {
    Scenario s = small_bm();
    s.probes.resize(2);
    std::string prev;
    for (const char* threads : {"1", "3", "1"}) {
        ::setenv("DUALGEN_THREADS", threads, 1);
        const auto dir = tmp_dir(std::string("det") + threads);
        run_scenario(s, {std::nullopt, dir, std::nullopt, std::nullopt, std::nullopt});
        const std::string all = slurp(fs::path(dir) / "report.json") + slurp(fs::path(dir) / "report.csv") +
                                slurp(fs::path(dir) / "plot.csv");
        if (!prev.empty()) CHECK(all == prev);
        prev = all;
    }
    ::unsetenv("DUALGEN_THREADS");
}

TEST_CASE("overrides") {
    Scenario s = small_bm();
    s.probes.resize(1);
    const auto r = run_scenario(s, {std::uint64_t{77}, tmp_dir("ovr"), 10.0, std::size_t{500}, std::nullopt});
    CHECK(r.report_json.find("\"n_paths\": 500") != std::string::npos);
    CHECK(r.pass);
}

TEST_CASE("module errors keep their code and gain scenario context") {
    Scenario s = small_bm();
    s.name = "ctx";
    s.path_config->n_paths = 50;  // below the simulator minimum
    try {
        run_scenario(s, {std::nullopt, tmp_dir("err"), std::nullopt, std::nullopt, std::nullopt});
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::InvalidArgument);
        CHECK(std::string(e.what()).find("scenario 'ctx'") != std::string::npos);
    }
}

TEST_CASE("command line exit codes") {
    auto run = [](const std::string& args) {
        const std::string cmd = std::string(DUALGEN_CLI) + " " + args + " > /dev/null 2>&1";
        const int st = std::system(cmd.c_str());
        return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    };
    const auto out = tmp_dir("cli");
    CHECK(run("self-dual-check " + scenario_path("self_dual_symmetric") + " --out " + out) == 0);
    CHECK(run("verify-matrix " + scenario_path("nonmonotone_chain") + " --out " + out) == 1);
    CHECK(run("mc " + scenario_path("minimal_bm") + " --out " + out + " --paths 500 --seed 3") == 0);

    const auto bad = fs::temp_directory_path() / "dualgen_test_scenario" / "bad.json";
    std::ofstream(bad) << R"({"name":"b","mode":"mc","process":{"drift":["x1^2 +"]}})";
    CHECK(run("mc " + bad.string() + " --out " + out) == 2);
    CHECK(run("mc /nonexistent.json") == 2);
}
