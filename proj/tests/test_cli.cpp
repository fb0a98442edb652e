#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pswarm/cli.hpp"
#include "pswarm/io.hpp"
#include "pswarm/synthetic.hpp"

using namespace pswarm;
namespace fs = std::filesystem;

namespace {

struct CliSandbox {
    fs::path dir;
    CliSandbox() {
        dir = fs::temp_directory_path()
              / ("pswarm_cli_" + std::to_string(::getpid()) + "_" + std::to_string(next()++));
        fs::create_directories(dir);
    }
    ~CliSandbox() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }
    static int& next() {
        static int n = 0;
        return n;
    }

    fs::path write_inputs(Index n_states, const std::string& config_body) {
        const auto states = make_clone_batch(make_reference_state(), n_states, 1e-5);
        write_batch_csv(dir / "ics.csv", states);
        SystemModel model;
        model.central_mu = mu_sun_km3s2;
        model.bodies = make_reference_bodies();
        write_system_json(dir / "system.json", model);
        std::ofstream cfg(dir / "config.json");
        cfg << config_body;
        return dir;
    }
};

struct CommandResult {
    int exit_code;
    std::string out;
    std::string err;
};

CommandResult run_cli(const CliSandbox& box, const std::string& args) {
    const fs::path out_file = box.dir / "stdout.txt";
    const fs::path err_file = box.dir / "stderr.txt";
    const std::string cmd = std::string(PSWARM_CLI_PATH) + " " + args + " > "
                            + out_file.string() + " 2> " + err_file.string();
    const int status = std::system(cmd.c_str());
    auto slurp = [](const fs::path& p) {
        std::ifstream in(p);
        return std::string(std::istreambuf_iterator<char>(in),
                           std::istreambuf_iterator<char>());
    };
    return {WEXITSTATUS(status), slurp(out_file), slurp(err_file)};
}

const std::string small_config = R"({"nodes": 48, "tolerance": 1e-11, "span_periods": 0.3,
    "mode": "grouped", "groups": 2, "threads": 1,
    "output": {"samples": "samples.csv", "report": "report.json",
               "error_history": "errors.csv"}})";

} // namespace

TEST_CASE("cli propagate: happy path writes samples, report, and history") {
    CliSandbox box;
    box.write_inputs(4, small_config);
    const auto res = run_cli(box, "propagate --config " + (box.dir / "config.json").string()
                                      + " --input " + (box.dir / "ics.csv").string()
                                      + " --ephemeris " + (box.dir / "system.json").string()
                                      + " --out " + (box.dir / "results").string());
    CAPTURE(res.err);
    CHECK(res.exit_code == 0);
    CHECK(fs::exists(box.dir / "results" / "samples.csv"));
    CHECK(fs::exists(box.dir / "results" / "report.json"));
    CHECK(fs::exists(box.dir / "results" / "errors.csv"));
    CHECK(res.out.find("propagated 4 trajectories") != std::string::npos);

    const json report = json::parse(std::ifstream(box.dir / "results" / "report.json"));
    CHECK(report.at("metadata").at("threads") == 1);
    CHECK(report.at("group_sizes").size() == 2);
    for (const auto& rep : report.at("iteration_reports")) {
        CHECK(rep.at("converged") == true);
    }
}

TEST_CASE("cli propagate: mixed epochs exit with code 2 naming the row") {
    CliSandbox box;
    box.write_inputs(3, small_config);
    // Corrupt the epoch of the third row.
    auto states = read_batch_csv(box.dir / "ics.csv");
    states[2].epoch += 10.0;
    write_batch_csv(box.dir / "ics.csv", states);

    const auto res = run_cli(box, "propagate --config " + (box.dir / "config.json").string()
                                      + " --input " + (box.dir / "ics.csv").string()
                                      + " --ephemeris " + (box.dir / "system.json").string()
                                      + " --out " + (box.dir / "results").string());
    CHECK(res.exit_code == 2);
    CHECK(res.err.find("row 3") != std::string::npos);
}

TEST_CASE("cli propagate: oracle check appends the discrepancy column") {
    CliSandbox box;
    box.write_inputs(2, small_config);
    const auto res = run_cli(box, "propagate --config " + (box.dir / "config.json").string()
                                      + " --input " + (box.dir / "ics.csv").string()
                                      + " --ephemeris " + (box.dir / "system.json").string()
                                      + " --out " + (box.dir / "results").string()
                                      + " --oracle-check");
    CAPTURE(res.err);
    CHECK(res.exit_code == 0);
    std::ifstream samples(box.dir / "results" / "samples.csv");
    std::string header;
    std::getline(samples, header);
    CHECK(header.find(",oracle_rel_err") != std::string::npos);
    const json report = json::parse(std::ifstream(box.dir / "results" / "report.json"));
    CHECK(report.at("oracle_check").at("max").get<double>() < 1e-9);
}

TEST_CASE("cli propagate: ephemeris coverage gap exits with code 3") {
    CliSandbox box;
    box.write_inputs(2, small_config);
    // Replace the system with one whose tabulated body covers almost nothing.
    SystemModel model;
    model.central_mu = mu_sun_km3s2;
    BodySpec body;
    body.name = "short";
    body.mu = 1e5;
    ChebyshevEphemeris eph;
    eph.segments.push_back(
        fit_chebyshev_segment([](double) { return Vec3(1.0e8, 0.0, 0.0); }, 0.0, 10.0, 8));
    body.ephemeris = eph;
    model.bodies = {body};
    write_system_json(box.dir / "system.json", model);

    const auto res = run_cli(box, "propagate --config " + (box.dir / "config.json").string()
                                      + " --input " + (box.dir / "ics.csv").string()
                                      + " --ephemeris " + (box.dir / "system.json").string()
                                      + " --out " + (box.dir / "results").string());
    CHECK(res.exit_code == 3);
    CHECK(res.err.find("does not cover") != std::string::npos);
}

TEST_CASE("cli propagate: non-convergence exits with code 4 and a partial report") {
    CliSandbox box;
    box.write_inputs(3, small_config);
    const auto res = run_cli(box, "propagate --config " + (box.dir / "config.json").string()
                                      + " --input " + (box.dir / "ics.csv").string()
                                      + " --ephemeris " + (box.dir / "system.json").string()
                                      + " --out " + (box.dir / "results").string()
                                      + " --start cold --max-iter 2");
    CHECK(res.exit_code == 4);
    CHECK(res.err.find("did not converge") != std::string::npos);
    CHECK(fs::exists(box.dir / "results" / "report.json"));
    const json report = json::parse(std::ifstream(box.dir / "results" / "report.json"));
    CHECK(report.at("metadata").at("status") == "incomplete");
}

TEST_CASE("cli propagate: PICARD_SWARM_THREADS provides the default worker count") {
    CliSandbox box;
    box.write_inputs(2, small_config);
    // The config pins threads = 1; strip it so the env variable applies.
    std::ofstream cfg(box.dir / "config.json");
    cfg << R"({"nodes": 32, "tolerance": 1e-10, "span_periods": 0.2, "mode": "grouped",
               "groups": 2})";
    cfg.close();
    const auto res = run_cli(box, "propagate --config " + (box.dir / "config.json").string()
                                      + " --input " + (box.dir / "ics.csv").string()
                                      + " --ephemeris " + (box.dir / "system.json").string()
                                      + " --out " + (box.dir / "results").string());
    // run_cli goes through system(), so set the variable inside the command.
    const std::string cmd = "PICARD_SWARM_THREADS=2 " + std::string(PSWARM_CLI_PATH)
                            + " propagate --config " + (box.dir / "config.json").string()
                            + " --input " + (box.dir / "ics.csv").string() + " --ephemeris "
                            + (box.dir / "system.json").string() + " --out "
                            + (box.dir / "env_results").string() + " > /dev/null 2>&1";
    REQUIRE(res.exit_code == 0);
    REQUIRE(std::system(cmd.c_str()) == 0);
    const json report = json::parse(std::ifstream(box.dir / "env_results" / "report.json"));
    CHECK(report.at("metadata").at("threads") == 2);
}

TEST_CASE("cli benchmark: cartesian product of modes and threads") {
    CliSandbox box;
    box.write_inputs(6, small_config);
    const auto res = run_cli(box, "benchmark --config " + (box.dir / "config.json").string()
                                      + " --input " + (box.dir / "ics.csv").string()
                                      + " --ephemeris " + (box.dir / "system.json").string()
                                      + " --out " + (box.dir / "results").string()
                                      + " --threads 1,2,4 --modes independent,augmented"
                                      + " --repeat 2 --nodes 32");
    CAPTURE(res.err);
    CHECK(res.exit_code == 0);
    std::ifstream csv(box.dir / "results" / "benchmark.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "mode,threads,groups,wall_time_s,speedup,max_iterations,max_discrepancy");
    int rows = 0;
    while (std::getline(csv, line)) {
        if (!line.empty()) {
            ++rows;
        }
    }
    CHECK(rows == 6); // modes x thread counts
    CHECK(res.out.find("independent") != std::string::npos);
    CHECK(res.out.find("augmented_parallel") != std::string::npos);
}

TEST_CASE("cli selftest: passes normally, fails under the perturbation hook") {
    CliSandbox box;
    const auto ok = run_cli(box, "selftest --nodes 48 --batch 8");
    CAPTURE(ok.err);
    CHECK(ok.exit_code == 0);
    CHECK(ok.out.find("PASS matrix-inversion-contract") != std::string::npos);
    CHECK(ok.out.find("PASS polynomial-exactness") != std::string::npos);
    CHECK(ok.out.find("warm-start iterations") != std::string::npos);

    const auto bad = run_cli(box, "selftest --nodes 48 --batch 8 --perturb-matrices");
    CHECK(bad.exit_code != 0);
    CHECK(bad.out.find("FAIL matrix-inversion-contract") != std::string::npos);
    CHECK(bad.out.find("FAIL polynomial-exactness") != std::string::npos);
}

TEST_CASE("cmd_selftest: in-process wiring") {
    std::ostringstream out, err;
    SelftestCliOptions opts;
    opts.nodes = 32;
    opts.batch = 6;
    CHECK(cmd_selftest(opts, out, err) == 0);
    CHECK(out.str().find("all properties passed") != std::string::npos);
}
